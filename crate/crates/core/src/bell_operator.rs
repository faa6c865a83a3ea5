//! Dense Bell operators on `C^d (x) C^d`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::binning::{build_coefficients, BinningSpec, CoefficientTensor, Setting, Subset};
use crate::error::{Error, Result};
use crate::qudit::{MeasurementBasis, PhaseSettings};

/// Largest `d` for which dense `d^2 x d^2` operators are built.
pub const DENSE_DIMENSION_LIMIT: usize = 64;

type CMatrix = DMatrix<Complex64>;

fn check_dimension(d: usize) -> Result<()> {
    if d > DENSE_DIMENSION_LIMIT {
        Err(Error::DimensionLimit {
            what: "dense operator",
            d,
            limit: DENSE_DIMENSION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Unitary whose columns are the basis vectors `|a,k>`.
fn basis_matrix(d: usize, offset: f64) -> CMatrix {
    let basis = MeasurementBasis::new(d, offset);
    CMatrix::from_fn(d, d, |j, k| basis.vector(k)[j])
}

/// `sum_k weight(k) |k><k|` in the basis given by the columns of `u`.
fn diagonal_in(u: &CMatrix, weight: impl Fn(usize) -> f64) -> CMatrix {
    let d = u.ncols();
    let mut scaled = u.clone();
    for k in 0..d {
        let w = weight(k);
        scaled.column_mut(k).scale_mut(w);
    }
    &scaled * u.adjoint()
}

/// The binned observable `sum_k zeta(k) |k><k|` for one measurement.
pub fn binned_observable(d: usize, offset: f64, subset: &Subset) -> CMatrix {
    diagonal_in(&basis_matrix(d, offset), |k| f64::from(subset.zeta(k)))
}

#[derive(Debug, Clone)]
pub struct BellOperatorMatrix {
    d: usize,
    matrix: CMatrix,
}

impl BellOperatorMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Largest entry of `|B - B^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("nonempty operator")
    }

    /// Spectral norm, i.e. the largest eigenvalue magnitude.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `<psi|B|psi>` for `psi = sum_j |jj> / sqrt(d)`.
    pub fn max_entangled_expectation(&self) -> f64 {
        let psi = max_entangled_state(self.d);
        (psi.adjoint() * &self.matrix * &psi)[(0, 0)].re
    }
}

pub fn max_entangled_state(d: usize) -> DVector<Complex64> {
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    DVector::from_fn(d * d, |i, _| {
        if i / d == i % d {
            amp
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `B = sum_{a,b,k,l} eps_ab(k,l) |a,k><a,k| (x) |b,l><b,l|`, assembled per
/// setting pair as `(U_a (x) U_b) diag(eps_ab) (U_a (x) U_b)^dagger`.
pub fn build_bell_operator(
    coeffs: &CoefficientTensor,
    phases: &PhaseSettings,
) -> Result<BellOperatorMatrix> {
    let d = coeffs.d();
    check_dimension(d)?;
    let n = d * d;
    let mut matrix = CMatrix::zeros(n, n);
    for a in Setting::BOTH {
        let ua = basis_matrix(d, phases.alice(a));
        for b in Setting::BOTH {
            let ub = basis_matrix(d, phases.bob(b));
            let joint = ua.kronecker(&ub);
            matrix += diagonal_in(&joint, |i| coeffs.get(a, b, i / d, i % d));
        }
    }
    Ok(BellOperatorMatrix { d, matrix })
}

fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

/// Largest entry of `|B^2 - 4 I - [P1, P2] (x) [Q2, Q1]|` for the operator
/// built from `coeffs` and the binned observables of `spec`.
///
/// Only product-binned tensors with the `(2, 2)` sign flip satisfy the
/// identity; passing any other tensor measures how far it is from it.
pub fn operator_identity_residual(
    coeffs: &CoefficientTensor,
    spec: &BinningSpec,
    phases: &PhaseSettings,
) -> Result<f64> {
    let d = spec.d();
    if coeffs.d() != d {
        return Err(Error::DimensionMismatch {
            tensor: coeffs.d(),
            expected: d,
        });
    }
    let bell = build_bell_operator(coeffs, phases)?;
    let obs = |offset: f64, subset: &Subset| binned_observable(d, offset, subset);
    use Setting::{First, Second};
    let p1 = obs(phases.alpha1, spec.alice(First));
    let p2 = obs(phases.alpha2, spec.alice(Second));
    let q1 = obs(phases.beta1, spec.bob(First));
    let q2 = obs(phases.beta2, spec.bob(Second));

    let square = &bell.matrix * &bell.matrix;
    let cross = commutator(&p1, &p2).kronecker(&commutator(&q2, &q1));
    let four = CMatrix::identity(d * d, d * d).scale(4.0);
    let residual = square - four - cross;
    Ok(residual.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Residual of the squared-operator identity for the binning's own tensor.
pub fn verify_operator_identity(spec: &BinningSpec, phases: &PhaseSettings) -> Result<f64> {
    operator_identity_residual(&build_coefficients(spec), spec, phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::{PresetKind, SignConvention};
    use crate::qudit::bell_expectation;
    use crate::TSIRELSON;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn preset(kind: PresetKind, d: usize) -> BinningSpec {
        BinningSpec::preset(kind, d).unwrap()
    }

    #[test]
    fn qubit_operator_at_the_optimum() {
        let spec = preset(PresetKind::T1, 2);
        let b = build_bell_operator(&build_coefficients(&spec), &PhaseSettings::sharp_optimum())
            .unwrap();
        assert!(b.hermiticity_defect() < 1e-12);
        assert_abs_diff_eq!(b.largest_eigenvalue(), TSIRELSON, epsilon = 1e-9);
        assert_abs_diff_eq!(b.max_entangled_expectation(), TSIRELSON, epsilon = 1e-9);
    }

    #[test]
    fn qubit_operator_at_zero_phase_is_chsh_in_fourier_bases() {
        // With zero offsets both Fourier bases coincide with the X basis, so
        // B = X(x)X + X(x)X + X(x)X - X(x)X = 2 X(x)X, whose spectrum is {+-2}.
        let spec = preset(PresetKind::T1, 2);
        let b = build_bell_operator(&build_coefficients(&spec), &PhaseSettings::default()).unwrap();
        let ev = b.eigenvalues();
        for (got, want) in ev.iter().zip([-2.0, -2.0, 2.0, 2.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(b.spectral_norm() <= TSIRELSON + 1e-9);
    }

    #[test]
    fn identity_holds_for_presets() {
        let cases = [
            (PresetKind::T1, 2, PhaseSettings::sharp_optimum()),
            (PresetKind::T2, 4, PhaseSettings::new(0.37, -1.2, 2.9, 0.05)),
            (PresetKind::T3, 6, PhaseSettings::new(-0.8, 3.3, 1.7, -2.4)),
        ];
        for (kind, d, phases) in cases {
            let r = verify_operator_identity(&preset(kind, d), &phases).unwrap();
            assert!(r <= 1e-9, "{kind} d={d}: residual {r}");
        }
    }

    #[test]
    fn unflipped_tensor_breaks_the_identity() {
        let spec = preset(PresetKind::T1, 3);
        let wrong = CoefficientTensor::from_binning(&spec, SignConvention::Unflipped);
        let phases = PhaseSettings::new(0.1, 0.6, -0.3, 0.2);
        assert!(operator_identity_residual(&wrong, &spec, &phases).unwrap() > 1e-3);
    }

    #[test]
    fn dimension_guard() {
        let spec = preset(PresetKind::T1, DENSE_DIMENSION_LIMIT + 1);
        assert!(matches!(
            build_bell_operator(&build_coefficients(&spec), &PhaseSettings::default()),
            Err(Error::DimensionLimit { .. })
        ));
    }

    fn random_case() -> impl Strategy<Value = (BinningSpec, PhaseSettings)> {
        (2usize..=6).prop_flat_map(|d| {
            let subset = move || prop::sample::subsequence((0..d).collect::<Vec<_>>(), 0..d);
            (
                (subset(), subset(), subset(), subset()).prop_map(move |(r1, r2, s1, s2)| {
                    BinningSpec::new(d, &r1, &r2, &s1, &s2).unwrap()
                }),
                prop::array::uniform4(-6.0f64..6.0).prop_map(PhaseSettings::from_array),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn random_operators_obey_identity_and_bound((spec, phases) in random_case()) {
            let eps = build_coefficients(&spec);
            let b = build_bell_operator(&eps, &phases).unwrap();
            prop_assert!(b.hermiticity_defect() <= 1e-12);
            prop_assert!(b.spectral_norm() <= TSIRELSON + 1e-9);
            prop_assert!(verify_operator_identity(&spec, &phases).unwrap() <= 1e-9);
            prop_assert!((b.max_entangled_expectation() - bell_expectation(&eps, &phases)).abs() <= 1e-9);
        }
    }
}
