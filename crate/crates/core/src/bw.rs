//! Displaced-parity Bell test on the two-mode squeezed vacuum.
//!
//! The local observable is the displaced photon-number parity
//! `Pi(alpha) = D(alpha) (-1)^n D(alpha)^dagger`, which equals
//! `D(2 alpha) (-1)^n`. Its Fock matrix elements are therefore those of a
//! single displacement operator with alternating column signs, computed
//! exactly (no truncated matrix exponential). The squeezed vacuum is cut
//! off where its tail probability drops below [`TAIL_MASS_TOLERANCE`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::NelderMead;

pub const TAIL_MASS_TOLERANCE: f64 = 1e-10;

/// Probability weight of the squeezed vacuum above photon number `cutoff`:
/// `tanh^{2(cutoff+1)} r`.
pub fn tmss_tail_mass(r: f64, cutoff: usize) -> f64 {
    r.tanh().powi(2 * (cutoff as i32 + 1))
}

/// Smallest cutoff whose tail mass is below [`TAIL_MASS_TOLERANCE`].
pub fn required_fock_cutoff(r: f64) -> usize {
    let t2 = r.tanh().powi(2);
    if t2 == 0.0 {
        return 0;
    }
    let n = (TAIL_MASS_TOLERANCE.ln() / t2.ln()).ceil() as usize;
    let mut cutoff = n.saturating_sub(1);
    while tmss_tail_mass(r, cutoff) >= TAIL_MASS_TOLERANCE {
        cutoff += 1;
    }
    cutoff
}

/// Fock matrix elements `<m|D(z)|n>` for `m, n <= cutoff`.
///
/// Along each diagonal `m - n = k` the elements are
/// `z^k e^{-|z|^2/2} sqrt(n!/(n+k)!) L_n^{(k)}(|z|^2)`; the normalized
/// Laguerre factor is advanced with its three-term recurrence, which stays
/// accurate where the row-by-row ladder recurrence drifts.
pub fn displacement_matrix(z: Complex64, cutoff: usize) -> DMatrix<Complex64> {
    let dim = cutoff + 1;
    let x = z.norm_sqr();
    let mut d = DMatrix::<Complex64>::zeros(dim, dim);
    // prefactor z^k e^{-x/2} / sqrt(k!) for the lower diagonal k
    let mut lower = Complex64::new((-0.5 * x).exp(), 0.0);
    for k in 0..dim {
        let upper = if k == 0 {
            lower
        } else {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            lower.conj() * sign
        };
        let kf = k as f64;
        let (mut prev, mut cur) = (0.0, 1.0);
        for n in 0..dim - k {
            d[(n + k, n)] = lower * cur;
            if k > 0 {
                d[(n, n + k)] = upper * cur;
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev)
                / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
        }
        lower = lower * z / (kf + 1.0).sqrt();
    }
    d
}

/// Fock matrix of `Pi(alpha) = D(2 alpha) (-1)^n`.
pub fn displaced_parity(alpha: Complex64, cutoff: usize) -> DMatrix<Complex64> {
    let mut m = displacement_matrix(2.0 * alpha, cutoff);
    for n in (1..=cutoff).step_by(2) {
        m.column_mut(n).neg_mut();
    }
    m
}

/// Squeezed vacuum `sech r sum_n tanh^n r |n,n>` restricted to `n <= cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct TmssFock {
    r: f64,
    amplitudes: Vec<f64>,
}

impl TmssFock {
    /// Refuses a cutoff whose discarded tail mass is not below
    /// [`TAIL_MASS_TOLERANCE`].
    pub fn new(r: f64, cutoff: usize) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidSqueezing(r));
        }
        let tail = tmss_tail_mass(r, cutoff);
        if tail >= TAIL_MASS_TOLERANCE {
            return Err(Error::FockCutoffTooSmall {
                given: cutoff,
                required: required_fock_cutoff(r),
                tail,
            });
        }
        let t = r.tanh();
        let mut amplitudes = Vec::with_capacity(cutoff + 1);
        let mut c = 1.0 / r.cosh();
        for _ in 0..=cutoff {
            amplitudes.push(c);
            c *= t;
        }
        Ok(Self { r, amplitudes })
    }

    pub fn with_required_cutoff(r: f64) -> Result<Self> {
        Self::new(r, required_fock_cutoff(r))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// `<Pi(alpha) (x) Pi(beta)>` given the two parity matrices.
    pub fn correlation(&self, pa: &DMatrix<Complex64>, pb: &DMatrix<Complex64>) -> f64 {
        let c = &self.amplitudes;
        let mut total = 0.0;
        for i in 0..c.len() {
            for j in 0..c.len() {
                total += c[i] * c[j] * (pa[(i, j)] * pb[(i, j)]).re;
            }
        }
        total
    }

    pub fn value(&self, disp: &Displacements) -> f64 {
        let n = self.cutoff();
        let a1 = displaced_parity(disp.alpha1, n);
        let a2 = displaced_parity(disp.alpha2, n);
        let b1 = displaced_parity(disp.beta1, n);
        let b2 = displaced_parity(disp.beta2, n);
        self.correlation(&a1, &b1) + self.correlation(&a1, &b2) + self.correlation(&a2, &b1)
            - self.correlation(&a2, &b2)
    }
}

/// Two displacements per party, combined as `E11 + E12 + E21 - E22`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacements {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub beta1: Complex64,
    pub beta2: Complex64,
}

/// Which displacements are free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BwArrangement {
    /// All four displacements independent.
    #[default]
    General,
    /// First setting of each party fixed at zero displacement.
    AnchoredAtOrigin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BwSearch {
    pub arrangement: BwArrangement,
    pub complex_displacements: bool,
    /// Grid points per real displacement axis, spanning
    /// `[-e^{-r}, e^{-r}] * grid_scale`.
    pub grid_points: usize,
    pub grid_scale: f64,
    pub restarts: usize,
    pub seed: u64,
    pub simplex: NelderMead,
}

impl Default for BwSearch {
    fn default() -> Self {
        Self {
            arrangement: BwArrangement::General,
            complex_displacements: false,
            grid_points: 13,
            grid_scale: 1.0,
            restarts: 2,
            seed: 0,
            simplex: NelderMead {
                initial_step: 0.05,
                xtol: 1e-9,
                ftol: 1e-12,
                max_iterations: 4_000,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BwOptimum {
    pub r: f64,
    pub cutoff: usize,
    pub displacements: Displacements,
    pub value: f64,
    /// Largest value seen at any evaluated point, grid and simplex alike.
    pub max_sampled: f64,
    pub evaluations: usize,
}

impl BwSearch {
    fn n_params(&self) -> usize {
        let free = match self.arrangement {
            BwArrangement::General => 4,
            BwArrangement::AnchoredAtOrigin => 2,
        };
        if self.complex_displacements {
            2 * free
        } else {
            free
        }
    }

    fn decode(&self, x: &[f64]) -> Displacements {
        let c = |i: usize| {
            if self.complex_displacements {
                Complex64::new(x[2 * i], x[2 * i + 1])
            } else {
                Complex64::new(x[i], 0.0)
            }
        };
        match self.arrangement {
            BwArrangement::General => Displacements {
                alpha1: c(0),
                alpha2: c(1),
                beta1: c(2),
                beta2: c(3),
            },
            BwArrangement::AnchoredAtOrigin => Displacements {
                alpha1: Complex64::new(0.0, 0.0),
                alpha2: c(0),
                beta1: Complex64::new(0.0, 0.0),
                beta2: c(1),
            },
        }
    }

    /// Best-found value over displacements at fixed squeezing.
    pub fn run(&self, state: &TmssFock) -> BwOptimum {
        let n_params = self.n_params();
        let free = match self.arrangement {
            BwArrangement::General => 4,
            BwArrangement::AnchoredAtOrigin => 2,
        };
        let scale = self.grid_scale * (-state.r()).exp();
        let g = self.grid_points.max(2);
        let axis: Vec<f64> = (0..g)
            .map(|i| scale * (2.0 * i as f64 / (g - 1) as f64 - 1.0))
            .collect();
        let cutoff = state.cutoff();
        let parities: Vec<DMatrix<Complex64>> = axis
            .iter()
            .map(|&a| displaced_parity(Complex64::new(a, 0.0), cutoff))
            .collect();
        let origin = displaced_parity(Complex64::new(0.0, 0.0), cutoff);

        // Every grid value is a signed sum of pairwise correlations, so the
        // g x g table (plus the origin row and column) is all that is needed.
        let pair: Vec<Vec<f64>> = parities
            .iter()
            .map(|pa| {
                parities
                    .iter()
                    .map(|pb| state.correlation(pa, pb))
                    .collect()
            })
            .collect();
        let from_origin: Vec<f64> = parities
            .iter()
            .map(|p| state.correlation(&origin, p))
            .collect();
        let origin_origin = state.correlation(&origin, &origin);

        // Grid over real parts only; imaginary parts start at zero.
        let mut max_sampled = f64::NEG_INFINITY;
        let mut evaluations = 0usize;
        let mut best_idx = [0usize; 4];
        let mut best_val = f64::NEG_INFINITY;
        let total = g.pow(free as u32);
        for idx in 0..total {
            let digits: [usize; 4] = std::array::from_fn(|p| {
                if p < free {
                    (idx / g.pow((free - 1 - p) as u32)) % g
                } else {
                    0
                }
            });
            let v = match self.arrangement {
                BwArrangement::General => {
                    let [a1, a2, b1, b2] = digits;
                    pair[a1][b1] + pair[a1][b2] + pair[a2][b1] - pair[a2][b2]
                }
                BwArrangement::AnchoredAtOrigin => {
                    let [a2, b2, ..] = digits;
                    origin_origin + from_origin[b2] + from_origin[a2] - pair[a2][b2]
                }
            };
            evaluations += 1;
            max_sampled = max_sampled.max(v);
            if v > best_val {
                best_val = v;
                best_idx = digits;
            }
        }

        let grid_x: Vec<f64> = {
            let reals: Vec<f64> = best_idx[..free].iter().map(|&i| axis[i]).collect();
            if self.complex_displacements {
                reals.iter().flat_map(|&re| [re, 0.0]).collect()
            } else {
                reals
            }
        };

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut starts = vec![grid_x];
        for _ in 0..self.restarts {
            starts.push(
                (0..n_params)
                    .map(|_| rng.gen_range(-scale..scale))
                    .collect(),
            );
        }

        let mut best = (starts[0].clone(), best_val);
        for x0 in &starts {
            let mut objective = |x: &[f64]| {
                let v = state.value(&self.decode(x));
                evaluations += 1;
                max_sampled = max_sampled.max(v);
                -v
            };
            let nm = NelderMead {
                initial_step: self.simplex.initial_step * scale.max(1e-3),
                ..self.simplex
            };
            let m = nm.minimize(&mut objective, x0);
            if -m.value > best.1 {
                best = (m.x, -m.value);
            }
        }

        BwOptimum {
            r: state.r(),
            cutoff,
            displacements: self.decode(&best.0),
            value: best.1,
            max_sampled,
            evaluations,
        }
    }
}

/// Best-found displaced-parity value at squeezing `r`, using `cutoff_fock`
/// photons per mode.
pub fn bw_displaced_parity_max(cutoff_fock: usize, r: f64) -> Result<BwOptimum> {
    let state = TmssFock::new(r, cutoff_fock)?;
    Ok(BwSearch::default().run(&state))
}

/// Runs the search at every squeezing value and returns the per-`r` optima.
pub fn bw_scan(search: &BwSearch, r_values: &[f64]) -> Result<Vec<BwOptimum>> {
    r_values
        .iter()
        .map(|&r| TmssFock::with_required_cutoff(r).map(|s| search.run(&s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Closed-form `<psi|D(z)|n>` matrix elements through generalized
    /// Laguerre polynomials, evaluated in log space.
    fn laguerre_element(z: Complex64, m: usize, n: usize) -> Complex64 {
        let x = z.norm_sqr();
        let (lo, hi) = (m.min(n), m.max(n));
        let alpha = (hi - lo) as f64;
        let mut l_prev = 1.0;
        let mut l = 1.0 + alpha - x;
        let lag = if lo == 0 {
            1.0
        } else {
            for k in 1..lo {
                let next = ((2 * k + 1) as f64 + alpha - x) * l - (k as f64 + alpha) * l_prev;
                l_prev = l;
                l = next / (k + 1) as f64;
            }
            l
        };
        let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
        let mag = (0.5 * (ln_fact(lo) - ln_fact(hi)) - 0.5 * x).exp();
        let phase = if m >= n {
            z.powu((m - n) as u32)
        } else {
            (-z.conj()).powu((n - m) as u32)
        };
        phase * mag * lag
    }

    #[test]
    fn displacement_matches_laguerre_form() {
        for z in [
            Complex64::new(0.3, -0.2),
            Complex64::new(-1.1, 0.4),
            Complex64::new(0.05, 0.0),
        ] {
            let d = displacement_matrix(z, 40);
            for m in 0..=40 {
                for n in 0..=40 {
                    let want = laguerre_element(z, m, n);
                    assert!(
                        (d[(m, n)] - want).norm() < 1e-12,
                        "z={z} m={m} n={n} got={} want={want}",
                        d[(m, n)]
                    );
                }
            }
        }
    }

    #[test]
    fn displacement_is_unitary_away_from_the_cutoff() {
        let z = Complex64::new(0.7, 0.3);
        let d = displacement_matrix(z, 120);
        let prod = &d * d.adjoint();
        for i in 0..60 {
            for j in 0..60 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).norm() < 1e-10);
            }
        }
    }

    /// `<Pi(a) (x) Pi(b)>` on the squeezed vacuum from its Wigner function.
    fn wigner_correlation(r: f64, a: Complex64, b: Complex64) -> f64 {
        let c = (2.0 * r).cosh();
        let s = (2.0 * r).sinh();
        (-2.0 * c * (a.norm_sqr() + b.norm_sqr()) + 2.0 * s * (a * b + a.conj() * b.conj()).re)
            .exp()
    }

    #[test]
    fn correlations_match_wigner_closed_form() {
        for r in [0.0, 0.4, 1.2] {
            let state = TmssFock::with_required_cutoff(r).unwrap();
            let n = state.cutoff();
            for (a, b) in [
                (Complex64::new(0.1, 0.0), Complex64::new(-0.2, 0.0)),
                (Complex64::new(0.05, 0.3), Complex64::new(0.2, -0.1)),
                (Complex64::new(0.0, 0.0), Complex64::new(0.4, 0.4)),
            ] {
                let got = state.correlation(&displaced_parity(a, n), &displaced_parity(b, n));
                assert_abs_diff_eq!(got, wigner_correlation(r, a, b), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn vacuum_is_local() {
        let opt = bw_displaced_parity_max(0, 0.0).unwrap();
        assert_abs_diff_eq!(opt.value, 2.0, epsilon = 1e-9);
        assert!(opt.max_sampled <= 2.0 + 1e-12);
    }

    #[test]
    fn insufficient_cutoff_is_refused() {
        let err = bw_displaced_parity_max(5, 1.0).unwrap_err();
        match err {
            Error::FockCutoffTooSmall {
                given, required, ..
            } => {
                assert_eq!(given, 5);
                assert_eq!(required, required_fock_cutoff(1.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn required_cutoff_is_minimal() {
        for r in [0.1, 0.8, 1.5] {
            let n = required_fock_cutoff(r);
            assert!(tmss_tail_mass(r, n) < TAIL_MASS_TOLERANCE);
            assert!(tmss_tail_mass(r, n - 1) >= TAIL_MASS_TOLERANCE);
        }
        assert_eq!(required_fock_cutoff(0.0), 0);
    }

    #[test]
    fn values_never_exceed_four() {
        let state = TmssFock::with_required_cutoff(0.7).unwrap();
        let disp = Displacements {
            alpha1: Complex64::new(0.3, 0.1),
            alpha2: Complex64::new(-0.5, 0.0),
            beta1: Complex64::new(0.0, 0.2),
            beta2: Complex64::new(0.9, -0.4),
        };
        assert!(state.value(&disp).abs() <= 4.0);
    }

    #[test]
    fn general_arrangement_beats_the_anchored_one() {
        let state = TmssFock::with_required_cutoff(1.0).unwrap();
        let general = BwSearch::default().run(&state);
        let anchored = BwSearch {
            arrangement: BwArrangement::AnchoredAtOrigin,
            ..BwSearch::default()
        }
        .run(&state);
        assert!(
            general.value > anchored.value + 0.05,
            "{} vs {}",
            general.value,
            anchored.value
        );
        assert!(anchored.value > 2.0);
    }
}
