//! Nelder-Mead downhill simplex minimization.

/// Simplex settings. Iteration stops when both the spread of function values
/// and the simplex diameter fall below their tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub initial_step: f64,
    pub xtol: f64,
    pub ftol: f64,
    pub max_iterations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            xtol: 1e-10,
            ftol: 1e-10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    pub fn minimize(&self, f: impl FnMut(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        self.minimize_observed(f, x0, |_, _, _| {})
    }

    /// As [`NelderMead::minimize`], calling `observer(iteration, best_x,
    /// best_value)` after every iteration.
    pub fn minimize_observed(
        &self,
        mut f: impl FnMut(&[f64]) -> f64,
        x0: &[f64],
        mut observer: impl FnMut(usize, &[f64], f64),
    ) -> Minimum {
        let n = x0.len();
        assert!(n >= 1, "need at least one coordinate");
        let mut evaluations = 0usize;
        let mut eval = |x: &[f64]| {
            evaluations += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = eval(&x);
            simplex.push((x, v));
        }

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if (worst - best).abs() <= self.ftol && diameter <= self.xtol {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(REFLECT);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(EXPAND);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(CONTRACT);
                    let fc = eval(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-CONTRACT);
                    let fc = eval(&xc);
                    (xc, fc)
                };
                if fc < fr.min(simplex[n].1) {
                    simplex[n] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for (x, v) in simplex[1..].iter_mut() {
                        for (xi, bi) in x.iter_mut().zip(&x_best) {
                            *xi = bi + SHRINK * (*xi - bi);
                        }
                        *v = eval(x);
                    }
                }
            }
            let best = simplex
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty simplex");
            observer(iterations, &best.0, best.1);
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            iterations,
            evaluations,
            converged,
        }
    }
}
