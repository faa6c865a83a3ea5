//! Maximizing the qudit Bell value over measurement phases.
//!
//! A uniform grid over a window of phase space seeds a Nelder-Mead
//! refinement; a few seeded random starts in the same window are refined
//! as well, and the best point overall is returned. The reported value is
//! the Bell value at the reported phases, so it is always a lower bound on
//! the true maximum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{build_coefficients, BinningPreset, CoefficientTensor};
use crate::error::{Error, Result};
use crate::qudit::{BellEvaluator, PhaseSettings};
use crate::simplex::NelderMead;

/// Phase range searched by the grid and the random starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhaseWindow {
    /// `[0, width)` on every axis.
    Fixed(f64),
    /// `[0, d)`, one full period.
    FullPeriod,
}

impl PhaseWindow {
    pub fn width(self, d: usize) -> f64 {
        match self {
            PhaseWindow::Fixed(w) => w,
            PhaseWindow::FullPeriod => d as f64,
        }
    }
}

impl Default for PhaseWindow {
    fn default() -> Self {
        PhaseWindow::Fixed(2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSearch {
    pub grid_points: usize,
    pub window: PhaseWindow,
    pub restarts: usize,
    pub seed: u64,
    pub simplex: NelderMead,
    /// Simplex runs per start; each rerun restarts from the previous best
    /// with a fresh simplex and stops early once it no longer improves.
    pub polish_rounds: usize,
    pub dimension_limit: usize,
}

impl Default for PhaseSearch {
    fn default() -> Self {
        Self {
            grid_points: 17,
            window: PhaseWindow::default(),
            restarts: 5,
            seed: 0,
            simplex: NelderMead {
                initial_step: 0.1,
                xtol: 1e-10,
                ftol: 1e-10,
                max_iterations: 20_000,
            },
            polish_rounds: 4,
            dimension_limit: 64,
        }
    }
}

/// One simplex iteration, for optional tracing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 0 for the grid-seeded start, `1..=restarts` for the random ones.
    pub start: usize,
    pub iteration: usize,
    pub phases: PhaseSettings,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseOptimum {
    pub phases: PhaseSettings,
    pub value: f64,
    pub grid_phases: PhaseSettings,
    pub grid_value: f64,
    /// Best value reached from each start, grid-seeded start first.
    pub start_values: Vec<f64>,
}

impl PhaseSearch {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_window(mut self, window: PhaseWindow) -> Self {
        self.window = window;
        self
    }

    pub fn run(&self, coeffs: &CoefficientTensor) -> Result<PhaseOptimum> {
        self.run_traced(coeffs, |_| {})
    }

    pub fn run_traced(
        &self,
        coeffs: &CoefficientTensor,
        mut trace: impl FnMut(&TraceRecord),
    ) -> Result<PhaseOptimum> {
        let d = coeffs.d();
        if d > self.dimension_limit {
            return Err(Error::DimensionLimit {
                what: "phase search",
                d,
                limit: self.dimension_limit,
            });
        }
        let eval = BellEvaluator::new(coeffs);
        let width = self.window.width(d);

        let (grid_phases, grid_value) = self.grid_argmax(&eval, width);

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut starts = vec![grid_phases.to_array()];
        for _ in 0..self.restarts {
            starts.push(std::array::from_fn(|_| rng.gen_range(0.0..width)));
        }

        let mut best = (grid_phases, grid_value);
        let mut start_values = Vec::with_capacity(starts.len());
        for (start, x0) in starts.iter().enumerate() {
            let (x, v) = self.polish(&eval, *x0, |iteration, x, value| {
                trace(&TraceRecord {
                    start,
                    iteration,
                    phases: PhaseSettings::from_array(x),
                    value,
                })
            });
            start_values.push(v);
            if v > best.1 {
                best = (PhaseSettings::from_array(x), v);
            }
        }

        let phases = best.0.reduced(d);
        let value = eval.value(&phases);
        Ok(PhaseOptimum {
            phases,
            value,
            grid_phases,
            grid_value,
            start_values,
        })
    }

    /// Best grid point; ties go to the lexicographically smallest tuple.
    fn grid_argmax(&self, eval: &BellEvaluator, width: f64) -> (PhaseSettings, f64) {
        let n = self.grid_points.max(1);
        let step = width / n as f64;
        let point = |idx: usize| -> PhaseSettings {
            let digit = |p: u32| ((idx / n.pow(p)) % n) as f64 * step;
            PhaseSettings::new(digit(3), digit(2), digit(1), digit(0))
        };
        let (idx, value) = (0..n.pow(4))
            .into_par_iter()
            .map(|idx| (idx, eval.value(&point(idx))))
            .reduce(
                || (usize::MAX, f64::NEG_INFINITY),
                |a, b| match a.1.total_cmp(&b.1) {
                    std::cmp::Ordering::Greater => a,
                    std::cmp::Ordering::Less => b,
                    std::cmp::Ordering::Equal => {
                        if a.0 <= b.0 {
                            a
                        } else {
                            b
                        }
                    }
                },
            );
        (point(idx), value)
    }

    fn polish(
        &self,
        eval: &BellEvaluator,
        x0: [f64; 4],
        mut observe: impl FnMut(usize, [f64; 4], f64),
    ) -> ([f64; 4], f64) {
        let mut x = x0;
        let mut value = eval.value(&PhaseSettings::from_array(x));
        let mut iteration_base = 0;
        for _ in 0..self.polish_rounds.max(1) {
            let m = self.simplex.minimize_observed(
                |p| -eval.value(&PhaseSettings::from_array([p[0], p[1], p[2], p[3]])),
                &x,
                |it, p, v| observe(iteration_base + it, [p[0], p[1], p[2], p[3]], -v),
            );
            iteration_base += m.iterations;
            let improved = -m.value - value;
            if improved > 0.0 {
                x = [m.x[0], m.x[1], m.x[2], m.x[3]];
                value = -m.value;
            }
            if improved <= 1e-13 {
                break;
            }
        }
        (x, value)
    }
}

/// Phase-optimized Bell value of a preset binning with the default search.
pub fn optimize_phases(preset: BinningPreset) -> Result<(PhaseSettings, f64)> {
    let coeffs = build_coefficients(&preset.spec()?);
    let opt = PhaseSearch::default().run(&coeffs)?;
    Ok((opt.phases, opt.value))
}
