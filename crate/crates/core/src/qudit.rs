//! Quantum values for the maximally entangled qudit pair.
//!
//! Alice measures in `|a,k> = d^{-1/2} sum_j w^{(k + alpha_a) j} |j>` and Bob
//! in the same family with `beta_b`, where `w = exp(2 pi i / d)`. For the
//! state `sum_j |jj> / sqrt(d)` the joint probability depends only on
//! `x = k + l + alpha_a + beta_b`:
//!
//! ```text
//! P(x) = sin^2(pi x) / (d^3 sin^2(pi x / d)),   P(x) -> 1/d as x -> 0 (mod d)
//! ```
//!
//! [`joint_probability`] evaluates the inner product directly;
//! [`fourier_kernel`] is the closed form above and is what the fast
//! evaluators use.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::binning::{CoefficientTensor, Setting};

/// Measurement phase offsets `(alpha1, alpha2, beta1, beta2)`, in units
/// where a full period is `d`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseSettings {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl PhaseSettings {
    pub const fn new(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            alpha1,
            alpha2,
            beta1,
            beta2,
        }
    }

    /// `(0, 1/2, -1/4, 1/4)`: the settings at which the sharp binning reaches
    /// `2 sqrt(2)` for even `d`.
    pub const fn sharp_optimum() -> Self {
        Self::new(0.0, 0.5, -0.25, 0.25)
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        Self::new(p[0], p[1], p[2], p[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.beta1, self.beta2]
    }

    #[inline]
    pub fn alice(&self, a: Setting) -> f64 {
        match a {
            Setting::First => self.alpha1,
            Setting::Second => self.alpha2,
        }
    }

    #[inline]
    pub fn bob(&self, b: Setting) -> f64 {
        match b {
            Setting::First => self.beta1,
            Setting::Second => self.beta2,
        }
    }

    /// Each phase reduced into `[0, d)`.
    pub fn reduced(self, d: usize) -> Self {
        let r = |x: f64| x.rem_euclid(d as f64);
        Self::new(r(self.alpha1), r(self.alpha2), r(self.beta1), r(self.beta2))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// One party's measurement basis for a given phase offset.
#[derive(Debug, Clone)]
pub struct MeasurementBasis {
    d: usize,
    offset: f64,
    vectors: Vec<Vec<Complex64>>,
}

impl MeasurementBasis {
    pub fn new(d: usize, offset: f64) -> Self {
        let norm = 1.0 / (d as f64).sqrt();
        let vectors = (0..d)
            .map(|k| {
                (0..d)
                    .map(|j| {
                        // w^{(k + offset) j}; reduce the exponent to keep the argument small
                        let turns = ((k as f64 + offset) * j as f64).rem_euclid(d as f64);
                        Complex64::from_polar(norm, 2.0 * PI * turns / d as f64)
                    })
                    .collect()
            })
            .collect();
        Self { d, offset, vectors }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn vector(&self, k: usize) -> &[Complex64] {
        &self.vectors[k]
    }

    /// Largest entry of `|G - I|` for the Gram matrix `G`.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, u) in self.vectors.iter().enumerate() {
            for (k, v) in self.vectors.iter().enumerate() {
                let g: Complex64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
                let target = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// Amplitude `<psi_max| (|u> (x) |v>)` for the maximally entangled state.
fn entangled_amplitude(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let d = u.len() as f64;
    u.iter().zip(v).map(|(x, y)| x * y).sum::<Complex64>() / d.sqrt()
}

/// Joint outcome probability from the explicit state and basis vectors.
pub fn joint_probability(
    d: usize,
    phases: &PhaseSettings,
    a: Setting,
    b: Setting,
    k: usize,
    l: usize,
) -> f64 {
    assert!(k < d && l < d, "outcome out of range");
    let u = MeasurementBasis::new(d, phases.alice(a));
    let v = MeasurementBasis::new(d, phases.bob(b));
    entangled_amplitude(u.vector(k), v.vector(l)).norm_sqr()
}

/// Closed-form joint probability `sin^2(pi x) / (d^3 sin^2(pi x / d))` as a
/// function of `x = k + l + alpha + beta`, continuous at `x = 0 (mod d)`
/// where it equals `1/d`.
pub fn fourier_kernel(d: usize, x: f64) -> f64 {
    let df = d as f64;
    let mut r = x.rem_euclid(df);
    if r > 0.5 * df {
        r -= df;
    }
    if r.abs() < 1e-5 {
        let u2 = (PI * r).powi(2);
        return (1.0 - u2 * (1.0 - 1.0 / (df * df)) / 3.0) / df;
    }
    let num = (PI * r).sin();
    let den = (PI * r / df).sin();
    num * num / (df * df * df * den * den)
}

/// `sum eps_ab(k, l) P_ab(k, l)` using the closed-form kernel.
pub fn bell_expectation(coeffs: &CoefficientTensor, phases: &PhaseSettings) -> f64 {
    BellEvaluator::new(coeffs).value(phases)
}

/// `sum eps_ab(k, l) P_ab(k, l)` with every probability taken from explicit
/// inner products. `O(d^3)`; meant for cross-checks.
pub fn bell_expectation_direct(coeffs: &CoefficientTensor, phases: &PhaseSettings) -> f64 {
    let d = coeffs.d();
    let mut total = 0.0;
    for a in Setting::BOTH {
        let u = MeasurementBasis::new(d, phases.alice(a));
        for b in Setting::BOTH {
            let v = MeasurementBasis::new(d, phases.bob(b));
            for k in 0..d {
                for l in 0..d {
                    let p = entangled_amplitude(u.vector(k), v.vector(l)).norm_sqr();
                    total += coeffs.get(a, b, k, l) * p;
                }
            }
        }
    }
    total
}

/// Fast repeated evaluation of the Bell value over phases.
///
/// Since the probability depends on `k + l` only modulo `d`, each
/// `d x d` coefficient block folds into `d` weights, and one evaluation
/// costs `4 d` kernel calls.
#[derive(Debug, Clone)]
pub struct BellEvaluator {
    d: usize,
    weights: [Vec<f64>; 4],
}

impl BellEvaluator {
    pub fn new(coeffs: &CoefficientTensor) -> Self {
        let d = coeffs.d();
        let fold = |a: Setting, b: Setting| {
            let mut w = vec![0.0; d];
            for k in 0..d {
                for l in 0..d {
                    w[(k + l) % d] += coeffs.get(a, b, k, l);
                }
            }
            w
        };
        use Setting::{First, Second};
        Self {
            d,
            weights: [
                fold(First, First),
                fold(First, Second),
                fold(Second, First),
                fold(Second, Second),
            ],
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `sum_{k,l} eps_ab(k,l) P_ab(k,l)` for one setting pair.
    pub fn term(&self, a: Setting, b: Setting, phases: &PhaseSettings) -> f64 {
        let shift = phases.alice(a) + phases.bob(b);
        self.weights[a.index() * 2 + b.index()]
            .iter()
            .enumerate()
            .map(|(m, w)| w * fourier_kernel(self.d, m as f64 + shift))
            .sum()
    }

    pub fn value(&self, phases: &PhaseSettings) -> f64 {
        use Setting::{First, Second};
        self.term(First, First, phases)
            + self.term(First, Second, phases)
            + self.term(Second, First, phases)
            + self.term(Second, Second, phases)
    }
}

/// `cos pi(a1+b1) + cos pi(a1+b2) + cos pi(a2+b1) - cos pi(a2+b2)`; the
/// sharp-binning Bell value for even `d`.
pub fn t1_cosine_form(phases: &PhaseSettings) -> f64 {
    let c = |x: f64| (PI * x).cos();
    c(phases.alpha1 + phases.beta1)
        + c(phases.alpha1 + phases.beta2)
        + c(phases.alpha2 + phases.beta1)
        - c(phases.alpha2 + phases.beta2)
}

/// Parity correlations `E_ab = sum (-1)^{k+l} P_ab(k, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFunctions {
    pub e11: f64,
    pub e12: f64,
    pub e21: f64,
    pub e22: f64,
}

impl CorrelationFunctions {
    /// `E11 + E12 + E21 - E22`.
    pub fn combination(&self) -> f64 {
        self.e11 + self.e12 + self.e21 - self.e22
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.e11, self.e12, self.e21, self.e22]
    }
}

/// Parity correlation functions for the maximally entangled state.
///
/// The parity weights coincide with the sharp binning when `d` is even.
pub fn correlation_functions(d: usize, phases: &PhaseSettings) -> CorrelationFunctions {
    let parity =
        CoefficientTensor::from_fn(d, |_, _, k, l| if (k + l) % 2 == 0 { 1.0 } else { -1.0 });
    let eval = BellEvaluator::new(&parity);
    use Setting::{First, Second};
    CorrelationFunctions {
        e11: eval.term(First, First, phases),
        e12: eval.term(First, Second, phases),
        e21: eval.term(Second, First, phases),
        e22: eval.term(Second, Second, phases),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::{build_coefficients, BinningSpec, PresetKind};
    use crate::TSIRELSON;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use Setting::First;

    fn t1(d: usize) -> CoefficientTensor {
        build_coefficients(&BinningSpec::preset(PresetKind::T1, d).unwrap())
    }

    #[test]
    fn qubit_probabilities_at_zero_phase() {
        let p = PhaseSettings::default();
        assert_abs_diff_eq!(
            joint_probability(2, &p, First, First, 0, 0),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            joint_probability(2, &p, First, First, 0, 1),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn coincident_outcomes_have_probability_one_over_d() {
        for d in [3, 5, 8] {
            // k + l + alpha + beta = d exactly
            let p = PhaseSettings::new(0.25, 0.0, -0.25, 0.0);
            let direct = joint_probability(d, &p, First, First, 1, d - 1);
            assert_abs_diff_eq!(direct, 1.0 / d as f64, epsilon = 1e-12);
            assert_eq!(fourier_kernel(d, d as f64), 1.0 / d as f64);
        }
    }

    #[test]
    fn kernel_is_continuous_at_its_removable_point() {
        let d = 7;
        for eps in [1e-3, 1e-5, 1e-7, 1e-9] {
            let direct = {
                let p = PhaseSettings::new(eps, 0.0, 0.0, 0.0);
                joint_probability(d, &p, First, First, 0, 0)
            };
            assert_abs_diff_eq!(fourier_kernel(d, eps), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn bases_are_orthonormal() {
        for d in [2, 3, 7, 16] {
            for offset in [0.0, 0.3, -1.25] {
                assert!(MeasurementBasis::new(d, offset).gram_deviation() < 1e-10);
            }
        }
    }

    #[test]
    fn chsh_optimum() {
        let phases = PhaseSettings::sharp_optimum();
        for d in [2, 8] {
            assert_abs_diff_eq!(
                bell_expectation(&t1(d), &phases),
                TSIRELSON,
                epsilon = 1e-12
            );
        }
        assert_abs_diff_eq!(t1_cosine_form(&phases), TSIRELSON, epsilon = 1e-15);
    }

    #[test]
    fn zero_phase_values() {
        let zero = PhaseSettings::default();
        assert_abs_diff_eq!(bell_expectation(&t1(2), &zero), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bell_expectation_direct(&t1(2), &zero), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t1_cosine_form(&zero), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            t1_cosine_form(&PhaseSettings::new(1.0, 0.0, 0.0, 0.0)),
            -2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn qubit_correlations() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = correlation_functions(2, &PhaseSettings::sharp_optimum());
        for (got, want) in c.as_array().iter().zip([s, s, s, -s]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(c.combination(), TSIRELSON, epsilon = 1e-12);

        let c0 = correlation_functions(2, &PhaseSettings::default());
        assert_abs_diff_eq!(c0.combination(), 2.0, epsilon = 1e-12);
    }

    fn phases() -> impl Strategy<Value = PhaseSettings> {
        prop::array::uniform4(-8.0f64..8.0).prop_map(PhaseSettings::from_array)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn probabilities_are_normalized(d in 2usize..=16, p in phases(), a in 0usize..2, b in 0usize..2) {
            let (a, b) = (Setting::BOTH[a], Setting::BOTH[b]);
            let u = MeasurementBasis::new(d, p.alice(a));
            let v = MeasurementBasis::new(d, p.bob(b));
            let mut total = 0.0;
            for k in 0..d {
                for l in 0..d {
                    let direct = entangled_amplitude(u.vector(k), v.vector(l)).norm_sqr();
                    let x = k as f64 + l as f64 + p.alice(a) + p.bob(b);
                    prop_assert!((direct - fourier_kernel(d, x)).abs() <= 1e-10);
                    total += direct;
                }
            }
            prop_assert!((total - 1.0).abs() <= 1e-10);
        }

        #[test]
        fn even_sharp_binning_matches_cosine_form(half in 1usize..=8, p in phases()) {
            let d = 2 * half;
            prop_assert!((bell_expectation(&t1(d), &p) - t1_cosine_form(&p)).abs() <= 1e-10);
            prop_assert!((correlation_functions(d, &p).combination() - t1_cosine_form(&p)).abs() <= 1e-10);
        }

        #[test]
        fn fast_and_direct_expectations_agree(d in 2usize..=9, p in phases(), kind in 0usize..3) {
            let Ok(spec) = BinningSpec::preset(PresetKind::ALL[kind], d) else { return Ok(()) };
            let eps = build_coefficients(&spec);
            prop_assert!((bell_expectation(&eps, &p) - bell_expectation_direct(&eps, &p)).abs() <= 1e-10);
        }

        #[test]
        fn correlations_are_bounded(d in 2usize..=12, p in phases()) {
            for e in correlation_functions(d, &p).as_array() {
                prop_assert!(e.abs() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn reduction_preserves_value(d in 2usize..=10, p in phases()) {
            let eps = t1(d);
            prop_assert!((bell_expectation(&eps, &p) - bell_expectation(&eps, &p.reduced(d))).abs() <= 1e-10);
        }
    }
}
