//! Truncated two-mode squeezed states measured with phase parity.
//!
//! Each mode is cut off at `s` photons (`s` odd). The local observable is
//! the parity of the Pegg-Barnett phase index,
//! `Pi(theta) = sum_k (-1)^k |theta,k><theta,k|` with
//! `|theta,k> = (s+1)^{-1/2} sum_n exp(i n theta_k) |n>` and
//! `theta_k = theta + 2 pi k / (s+1)`.
//!
//! The state `sum_n c_n |n,n>` is already in Schmidt form, so a correlation
//! `<Pi(theta) (x) Pi(phi)>` reduces to `sum_{n,m} c_n c_m Pi(theta)_{nm}
//! Pi(phi)_{nm}`; no `(s+1)^2`-dimensional operator is ever formed.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::NelderMead;
use crate::TSIRELSON;

/// Angle separation below which the two local settings become hard to tell
/// apart experimentally.
pub const RESOLVABLE_ANGLE: f64 = 0.05;

fn check_cutoff(s: usize) -> Result<()> {
    if s.is_multiple_of(2) {
        Err(Error::EvenCutoff(s))
    } else {
        Ok(())
    }
}

fn check_squeezing(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSqueezing(r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScenario {
    pub s: usize,
    pub r: f64,
    pub theta: f64,
    pub theta_p: f64,
    pub phi: f64,
    pub phi_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Diagnostic {
    /// The two settings of a party differ by less than [`RESOLVABLE_ANGLE`].
    CloseSettings { party: char, separation: f64 },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::CloseSettings { party, separation } => write!(
                f,
                "party {party}: settings differ by {separation:.4} rad; they will be hard to distinguish in practice"
            ),
        }
    }
}

impl CvScenario {
    pub fn new(s: usize, r: f64, theta: f64, theta_p: f64, phi: f64, phi_p: f64) -> Result<Self> {
        check_cutoff(s)?;
        check_squeezing(r)?;
        Ok(Self {
            s,
            r,
            theta,
            theta_p,
            phi,
            phi_p,
        })
    }

    /// `theta = 0, theta' = pi/(s+1), phi = -pi/(2s+2), phi' = pi/(2s+2)`.
    pub fn standard(s: usize, r: f64) -> Result<Self> {
        let unit = PI / (s + 1) as f64;
        Self::new(s, r, 0.0, unit, -0.5 * unit, 0.5 * unit)
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let circular = |a: f64, b: f64| {
            let x = (a - b).rem_euclid(2.0 * PI);
            x.min(2.0 * PI - x)
        };
        for (party, sep) in [
            ('A', circular(self.theta, self.theta_p)),
            ('B', circular(self.phi, self.phi_p)),
        ] {
            if sep < RESOLVABLE_ANGLE {
                out.push(Diagnostic::CloseSettings {
                    party,
                    separation: sep,
                });
            }
        }
        out
    }
}

/// `|psi_s> = N sum_{n<=s} tanh^n(r) |n,n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTmss {
    s: usize,
    r: f64,
    amplitudes: Vec<f64>,
}

impl TruncatedTmss {
    /// Accepts `r = 0` (the vacuum) in addition to positive squeezing.
    pub fn new(s: usize, r: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidSqueezing(r));
        }
        Ok(Self {
            s,
            r,
            amplitudes: schmidt_amplitudes(s, r),
        })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c * c).sum()
    }

    /// `<psi| X (x) Y |psi>` through the Schmidt form.
    pub fn correlation(&self, x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> f64 {
        let c = &self.amplitudes;
        let n = c.len();
        assert!(
            x.nrows() >= n && y.nrows() >= n,
            "operator smaller than the state support"
        );
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                total += c[i] * c[j] * x[(i, j)] * y[(i, j)];
            }
        }
        total.re
    }
}

/// `c_n = t^n / sqrt(sum_{m<=s} t^{2m})` with `t = tanh r`; algebraically
/// equal to `sech r tanh^n r / sqrt(1 - tanh^{2s+2} r)` but free of the
/// cancellation in `1 - t^2` at large `r`.
fn schmidt_amplitudes(s: usize, r: f64) -> Vec<f64> {
    let t = r.tanh();
    let mut powers = Vec::with_capacity(s + 1);
    let mut p = 1.0;
    for _ in 0..=s {
        powers.push(p);
        p *= t;
    }
    let norm = powers.iter().map(|x| x * x).sum::<f64>().sqrt();
    powers.iter().map(|x| x / norm).collect()
}

/// Pegg-Barnett phase state `|theta, k>` in the `(s+1)`-dimensional space.
pub fn phase_state(s: usize, theta: f64, k: usize) -> Result<Vec<Complex64>> {
    if k > s {
        return Err(Error::PhaseIndexOutOfRange { k, s });
    }
    let dim = (s + 1) as f64;
    let theta_k = theta + 2.0 * PI * k as f64 / dim;
    let norm = 1.0 / dim.sqrt();
    Ok((0..=s)
        .map(|n| Complex64::from_polar(norm, (n as f64 * theta_k).rem_euclid(2.0 * PI)))
        .collect())
}

#[derive(Debug, Clone)]
pub struct PhaseParityOperator {
    s: usize,
    theta: f64,
    matrix: DMatrix<Complex64>,
}

impl PhaseParityOperator {
    pub fn new(s: usize, theta: f64) -> Result<Self> {
        check_cutoff(s)?;
        let dim = s + 1;
        let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..=s {
            let v = phase_state(s, theta, k)?;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..dim {
                for j in 0..dim {
                    matrix[(i, j)] += sign * v[i] * v[j].conj();
                }
            }
        }
        Ok(Self { s, theta, matrix })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Largest entry of `|Pi^2 - I|`.
    pub fn square_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        (&self.matrix * &self.matrix - DMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }
}

/// `E(theta,phi) + E(theta,phi') + E(theta',phi) - E(theta',phi')` on the
/// truncated squeezed state.
pub fn cv_bell_expectation(scn: &CvScenario) -> Result<f64> {
    check_cutoff(scn.s)?;
    check_squeezing(scn.r)?;
    let state = TruncatedTmss::new(scn.s, scn.r)?;
    let a = PhaseParityOperator::new(scn.s, scn.theta)?;
    let ap = PhaseParityOperator::new(scn.s, scn.theta_p)?;
    let b = PhaseParityOperator::new(scn.s, scn.phi)?;
    let bp = PhaseParityOperator::new(scn.s, scn.phi_p)?;
    let e =
        |x: &PhaseParityOperator, y: &PhaseParityOperator| state.correlation(&x.matrix, &y.matrix);
    Ok(e(&a, &b) + e(&a, &bp) + e(&ap, &b) - e(&ap, &bp))
}

/// `4 sqrt(2) tanh^{(s+1)/2}(r) / (1 + tanh^{s+1}(r))`, the value at the
/// standard angles.
pub fn closed_form_expectation(s: usize, r: f64) -> f64 {
    let u = r.tanh().powf((s + 1) as f64 / 2.0);
    4.0 * SQRT_2 * u / (1.0 + u * u)
}

/// Squeezing at which the standard-angle value first reaches `target`.
pub fn invert_closed_form(s: usize, target: f64) -> Result<f64> {
    check_cutoff(s)?;
    if !(target > 0.0 && target < TSIRELSON) {
        return Err(Error::TargetOutOfRange(target));
    }
    let u = (2.0 * SQRT_2 - (8.0 - target * target).sqrt()) / target;
    Ok(u.powf(2.0 / (s + 1) as f64).atanh())
}

/// Squeezing above which the standard-angle value exceeds the
/// local-realistic bound 2.
pub fn violation_boundary(s: usize) -> Result<f64> {
    invert_closed_form(s, 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationThreshold {
    pub s: usize,
    pub delta: f64,
    pub f_value: f64,
    pub r_min: f64,
}

impl ViolationThreshold {
    pub fn achieved_value(&self) -> f64 {
        closed_form_expectation(self.s, self.r_min)
    }
}

/// `f(s, delta) = [(2 sqrt2 - sqrt(4 sqrt2 delta - delta^2)) / (2 sqrt2 - delta)]^{2/(s+1)}`.
pub fn threshold_f(s: usize, delta: f64) -> f64 {
    let base =
        (2.0 * SQRT_2 - (4.0 * SQRT_2 * delta - delta * delta).sqrt()) / (2.0 * SQRT_2 - delta);
    base.powf(2.0 / (s + 1) as f64)
}

/// Minimum squeezing `r = (1/2) ln((1+f)/(1-f))` for a value of at least
/// `2 sqrt(2) - delta`.
pub fn squeezing_threshold(s: usize, delta: f64) -> Result<ViolationThreshold> {
    check_cutoff(s)?;
    if !(delta > 0.0 && delta < TSIRELSON - 2.0) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let f_value = threshold_f(s, delta);
    let r_min = 0.5 * ((1.0 + f_value) / (1.0 - f_value)).ln();
    Ok(ViolationThreshold {
        s,
        delta,
        f_value,
        r_min,
    })
}

/// Local search over `(theta, theta', phi, phi')` from the standard angles.
/// Returns the best angles and value; never below the standard-angle value.
pub fn optimize_cv_angles(s: usize, r: f64) -> Result<(CvScenario, f64)> {
    let start = CvScenario::standard(s, r)?;
    let start_value = cv_bell_expectation(&start)?;
    let eval = |x: &[f64]| {
        CvScenario::new(s, r, x[0], x[1], x[2], x[3])
            .and_then(|c| cv_bell_expectation(&c))
            .map_or(f64::INFINITY, |v| -v)
    };
    let unit = PI / (s + 1) as f64;
    let nm = NelderMead {
        initial_step: 0.25 * unit,
        xtol: 1e-10,
        ftol: 1e-12,
        max_iterations: 2_000,
    };
    let m = nm.minimize(eval, &[start.theta, start.theta_p, start.phi, start.phi_p]);
    if -m.value > start_value {
        let best = CvScenario::new(s, r, m.x[0], m.x[1], m.x[2], m.x[3])?;
        Ok((best, -m.value))
    } else {
        Ok((start, start_value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn phase_states_for_a_qubit() {
        let s = 1.0 / 2f64.sqrt();
        let v0 = phase_state(1, 0.0, 0).unwrap();
        let v1 = phase_state(1, 0.0, 1).unwrap();
        assert_abs_diff_eq!(v0[0].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(v0[1].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(v1[0].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(v1[1].re, -s, epsilon = 1e-15);
        let overlap: Complex64 = v0.iter().zip(&v1).map(|(a, b)| a.conj() * b).sum();
        assert!(overlap.norm() < 1e-15);
        assert_eq!(
            phase_state(1, 0.0, 2),
            Err(Error::PhaseIndexOutOfRange { k: 2, s: 1 })
        );
    }

    #[test]
    fn phase_states_are_orthonormal() {
        for theta in [0.0, 0.7, -2.1] {
            let states: Vec<_> = (0..=3).map(|k| phase_state(3, theta, k).unwrap()).collect();
            for (i, u) in states.iter().enumerate() {
                for (j, v) in states.iter().enumerate() {
                    let g: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn qubit_cutoff_matches_closed_form() {
        for r in [0.3, 1.0, 2.5] {
            let v = cv_bell_expectation(&CvScenario::standard(1, r).unwrap()).unwrap();
            let t = r.tanh();
            assert_abs_diff_eq!(v, 4.0 * SQRT_2 * t / (1.0 + t * t), epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_reference_points() {
        // tanh r = 1/sqrt(2)
        let r = (1.0 / SQRT_2).atanh();
        assert_abs_diff_eq!(closed_form_expectation(1, r), 8.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(closed_form_expectation(5, 40.0), TSIRELSON, epsilon = 1e-14);
        let small = 1e-3f64;
        assert_abs_diff_eq!(
            closed_form_expectation(99, small),
            4.0 * SQRT_2 * small.tanh().powi(50),
            epsilon = 1e-200
        );
    }

    #[test]
    fn dense_contraction_oracle_at_s9() {
        // Full (s+1)^2-dimensional contraction, independent of the Schmidt shortcut.
        let (s, r) = (9, 2.0);
        let scn = CvScenario::standard(s, r).unwrap();
        let dim = s + 1;
        let state = TruncatedTmss::new(s, r).unwrap();
        let mut psi = nalgebra::DVector::<Complex64>::zeros(dim * dim);
        for (n, c) in state.amplitudes().iter().enumerate() {
            psi[n * dim + n] = Complex64::new(*c, 0.0);
        }
        let op = |t: f64| PhaseParityOperator::new(s, t).unwrap().matrix.clone();
        let e = |x: f64, y: f64| (psi.adjoint() * op(x).kronecker(&op(y)) * &psi)[(0, 0)].re;
        let dense = e(scn.theta, scn.phi) + e(scn.theta, scn.phi_p) + e(scn.theta_p, scn.phi)
            - e(scn.theta_p, scn.phi_p);
        let t = r.tanh();
        let closed = 4.0 * SQRT_2 * t.powi(5) / (1.0 + t.powi(10));
        assert_abs_diff_eq!(dense, closed, epsilon = 1e-10);
        assert_abs_diff_eq!(cv_bell_expectation(&scn).unwrap(), closed, epsilon = 1e-10);
    }

    #[test]
    fn validation() {
        assert_eq!(CvScenario::standard(2, 1.0), Err(Error::EvenCutoff(2)));
        assert_eq!(
            CvScenario::standard(3, 0.0),
            Err(Error::InvalidSqueezing(0.0))
        );
        assert!(matches!(
            squeezing_threshold(1, 1.0),
            Err(Error::DeltaOutOfRange(_))
        ));
        assert!(matches!(
            squeezing_threshold(1, 0.0),
            Err(Error::DeltaOutOfRange(_))
        ));
        assert!(matches!(
            squeezing_threshold(4, 0.1),
            Err(Error::EvenCutoff(4))
        ));
    }

    #[test]
    fn threshold_round_trip() {
        for delta in [1e-2, 1e-3, 1e-4] {
            for s in (1..=99).step_by(2) {
                let th = squeezing_threshold(s, delta).unwrap();
                assert!(th.f_value > 0.0 && th.f_value < 1.0);
                assert!((th.achieved_value() - (TSIRELSON - delta)).abs() <= 1e-9);
                assert_abs_diff_eq!(
                    th.r_min,
                    invert_closed_form(s, TSIRELSON - delta).unwrap(),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn threshold_grows_with_cutoff() {
        let r: Vec<f64> = [1, 9, 99]
            .iter()
            .map(|&s| squeezing_threshold(s, 0.01).unwrap().r_min)
            .collect();
        assert!(r[0] < r[1] && r[1] < r[2]);
    }

    #[test]
    fn boundary_is_where_the_value_reaches_two() {
        for s in [1, 9, 99] {
            let r = violation_boundary(s).unwrap();
            assert_abs_diff_eq!(closed_form_expectation(s, r), 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn large_squeezing_approaches_the_qudit_bound() {
        for s in [1, 3, 7, 15] {
            let v = cv_bell_expectation(&CvScenario::standard(s, 10.0).unwrap()).unwrap();
            assert!((v - TSIRELSON).abs() < 1e-6);
        }
    }

    #[test]
    fn close_settings_are_flagged() {
        assert!(CvScenario::standard(1, 1.0)
            .unwrap()
            .diagnostics()
            .is_empty());
        let diag = CvScenario::standard(99, 1.0).unwrap().diagnostics();
        assert_eq!(diag.len(), 2);
    }

    #[test]
    fn angle_search_never_loses() {
        let (_, v) = optimize_cv_angles(3, 0.8).unwrap();
        assert!(v >= closed_form_expectation(3, 0.8) - 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn state_is_normalized_and_decreasing(half in 0usize..50, r in 0.01f64..10.0) {
            let s = 2 * half + 1;
            let st = TruncatedTmss::new(s, r).unwrap();
            prop_assert!((st.norm_sqr() - 1.0).abs() <= 1e-12);
            for w in st.amplitudes().windows(2) {
                prop_assert!(w[1] < w[0]);
            }
        }

        #[test]
        fn phase_parity_is_an_involution(half in 0usize..50, theta in -7.0f64..7.0) {
            let op = PhaseParityOperator::new(2 * half + 1, theta).unwrap();
            prop_assert!(op.square_defect() <= 1e-10);
            prop_assert!(op.hermiticity_defect() <= 1e-12);
        }

        #[test]
        fn closed_form_increases_with_squeezing(half in 0usize..50, r in 0.05f64..6.0) {
            let s = 2 * half + 1;
            prop_assert!(closed_form_expectation(s, r + 0.01) > closed_form_expectation(s, r));
        }
    }

    #[test]
    fn phase_parity_spectrum_is_plus_minus_one() {
        let op = PhaseParityOperator::new(5, 0.4).unwrap();
        let mut ev = op.eigenvalues();
        ev.sort_by(|a, b| a.total_cmp(b));
        for (got, want) in ev.iter().zip([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
    }
}
