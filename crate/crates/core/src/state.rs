//! Quantum states and the distances between them.

use crate::error::{Error, Result};
use crate::linalg::{self, c, tol, ComplexMatrix, SubsystemShape};

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        validate_psd(&matrix)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::Trace(format!("trace {tr} differs from 1")));
        }
        Ok(Self { matrix })
    }

    /// Rescales a nonzero PSD matrix to unit trace.
    pub fn normalized(matrix: ComplexMatrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr <= tol::PROB {
            return Err(Error::ImpossibleBranch(tr));
        }
        Self::new(matrix / c(tr, 0.0))
    }

    pub fn pure(psi: &[linalg::C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::param("zero vector"));
        }
        let v: Vec<_> = psi.iter().map(|a| a / norm).collect();
        Self::new(linalg::projector(&v))
    }

    pub fn basis_state(d: usize, i: usize) -> Self {
        Self { matrix: linalg::projector(&linalg::ket(d, i)) }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: linalg::identity(d) / c(d as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self { matrix: linalg::kron(&self.matrix, &other.matrix) }
    }

    pub fn partial_trace(&self, shape: &SubsystemShape, keep: &[usize]) -> Result<DensityMatrix> {
        Ok(Self { matrix: linalg::partial_trace(&self.matrix, shape, keep)? })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigenvalues_hermitian(&self.matrix).expect("density matrices are Hermitian")
    }
}

fn validate_psd(matrix: &ComplexMatrix) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::dim("state must be square"));
    }
    if !linalg::is_finite(matrix) {
        return Err(Error::param("state has non-finite entries"));
    }
    let resid = linalg::hermitian_residual(matrix);
    if resid > tol::HERM {
        return Err(Error::NotHermitian(resid));
    }
    let min = linalg::min_eigenvalue(matrix)?;
    if min < -tol::PSD {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

/// A state scaled by the probability of the branch that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SubnormalizedState {
    weight: f64,
    matrix: ComplexMatrix,
}

impl SubnormalizedState {
    /// Validates a PSD matrix with trace in `[0, 1]`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        validate_psd(&matrix)?;
        let tr = matrix.trace();
        if tr.im.abs() > tol::TRACE || tr.re > 1.0 + tol::TRACE {
            return Err(Error::Trace(format!("subnormalized trace {tr} exceeds 1")));
        }
        Ok(Self { weight: tr.re.max(0.0), matrix })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// The conditional state; fails on branches with negligible probability.
    pub fn normalized(&self) -> Result<DensityMatrix> {
        if self.weight < tol::PROB {
            return Err(Error::ImpossibleBranch(self.weight));
        }
        DensityMatrix::new(&self.matrix / c(self.weight, 0.0))
    }
}

impl From<DensityMatrix> for SubnormalizedState {
    fn from(value: DensityMatrix) -> Self {
        Self { weight: 1.0, matrix: value.matrix }
    }
}

fn same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!(
            "states of dimension {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(())
}

/// `1/2 * sum |lambda_i(a - b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    trace_distance_matrices(a.matrix(), b.matrix())
}

/// Trace distance between arbitrary Hermitian matrices of equal size.
pub fn trace_distance_matrices(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    same_dim(a, b)?;
    if a.shape() == (2, 2) {
        return Ok(qubit_trace_distance(a, b));
    }
    Ok(0.5 * linalg::trace_norm_hermitian(&(a - b))?)
}

/// Closed form for 2x2: eigenvalues of the difference are `t/2 +- sqrt(z^2 + |w|^2)`.
fn qubit_trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let d00 = a[(0, 0)].re - b[(0, 0)].re;
    let d11 = a[(1, 1)].re - b[(1, 1)].re;
    let w = ((a[(0, 1)] - b[(0, 1)]) + (a[(1, 0)] - b[(1, 0)]).conj()) * 0.5;
    let half_tr = 0.5 * (d00 + d11);
    let r = (0.25 * (d00 - d11).powi(2) + w.norm_sqr()).sqrt();
    0.5 * ((half_tr + r).abs() + (half_tr - r).abs())
}

/// Relative entropy `tr[a (ln a - ln b)]` in nats.
///
/// Returns `+inf` when `a` has weight above `tol::PSD` on an eigenvector of
/// `b` whose eigenvalue is below `tol::SUPPORT`.
pub fn relative_entropy(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    relative_entropy_matrices(a.matrix(), b.matrix())
}

pub(crate) fn relative_entropy_matrices(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let (va, _) = linalg::eig_hermitian(a)?;
    let (vb, ub) = linalg::eig_hermitian(b)?;
    let neg_entropy: f64 = va.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    // tr[a ln b] = sum_i <b_i|a|b_i> ln(lambda_i)
    let rotated = ub.adjoint() * a * &ub;
    let mut cross = 0.0;
    for (i, &lam) in vb.iter().enumerate() {
        let w = rotated[(i, i)].re;
        if lam < tol::SUPPORT {
            if w > tol::PSD {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += w * lam.ln();
    }
    Ok((neg_entropy - cross).max(0.0))
}

/// Von Neumann entropy in nats.
pub fn entropy(a: &DensityMatrix) -> f64 {
    a.eigenvalues()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum()
}

/// `S(A) + S(B) - S(AB)` for a bipartition given as factor index lists.
pub fn mutual_information(
    rho: &DensityMatrix,
    shape: &SubsystemShape,
    part_a: &[usize],
    part_b: &[usize],
) -> Result<f64> {
    let mut joint: Vec<usize> = part_a.iter().chain(part_b).copied().collect();
    joint.sort_unstable();
    let sa = entropy(&rho.partial_trace(shape, part_a)?);
    let sb = entropy(&rho.partial_trace(shape, part_b)?);
    let sab = entropy(&rho.partial_trace(shape, &joint)?);
    Ok(sa + sb - sab)
}

/// Uhlmann fidelity `(tr sqrt(sqrt(a) b sqrt(a)))^2`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a.matrix(), b.matrix())?;
    let sa = linalg::sqrt_psd(a.matrix())?;
    let inner = linalg::hermitian_part(&(&sa * b.matrix() * &sa));
    let root: f64 = linalg::eigenvalues_hermitian(&inner)?
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    Ok(root * root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_entangled, ONE, ZERO};
    use proptest::prelude::*;

    fn random_state(n: usize, seed: u64) -> DensityMatrix {
        crate::scenarios::random_density_matrix(n, n, &mut crate::scenarios::seeded_rng(seed))
    }

    #[test]
    fn qubit_trace_distance_matches_spectrum() {
        let mut rng = crate::scenarios::seeded_rng(4);
        for _ in 0..50 {
            let a = crate::scenarios::random_density_matrix(2, 2, &mut rng).into_matrix();
            let b = crate::scenarios::random_density_matrix(2, 1, &mut rng).into_matrix() * linalg::c(0.7, 0.0);
            let general = 0.5 * linalg::trace_norm_hermitian(&(&a - &b)).unwrap();
            assert!((trace_distance_matrices(&a, &b).unwrap() - general).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_distance_examples() {
        let r = random_state(3, 1);
        assert!(trace_distance(&r, &r).unwrap() < 1e-15);
        let zero = DensityMatrix::basis_state(2, 0);
        let one = DensityMatrix::basis_state(2, 1);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
        assert!(trace_distance(&zero, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let r = random_state(4, 2);
        assert!(relative_entropy(&r, &r).unwrap().abs() < 1e-12);
        let zero = DensityMatrix::basis_state(2, 0);
        let mixed = DensityMatrix::maximally_mixed(2);
        let s = relative_entropy(&zero, &mixed).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-14);
        let one = DensityMatrix::basis_state(2, 1);
        assert_eq!(relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
    }

    #[test]
    fn density_matrix_rejects_invalid() {
        assert!(matches!(DensityMatrix::new(identity(2)), Err(Error::Trace(_))));
        let z = linalg::paulis()[3].clone();
        let bad = (identity(2) + z * c(3.0, 0.0)) * c(0.5, 0.0);
        assert!(matches!(DensityMatrix::new(bad), Err(Error::NotPositive(_))));
        let nh = linalg::from_rows(2, 2, &[c(0.5, 0.0), ONE, ZERO, c(0.5, 0.0)]).unwrap();
        assert!(matches!(DensityMatrix::new(nh), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn subnormalized_impossible_branch() {
        let s = SubnormalizedState::new(linalg::zeros(2, 2)).unwrap();
        assert!(matches!(s.normalized(), Err(Error::ImpossibleBranch(_))));
        let half = SubnormalizedState::new(identity(2) * c(0.25, 0.0)).unwrap();
        assert!((half.weight() - 0.5).abs() < 1e-15);
        assert_eq!(half.normalized().unwrap(), DensityMatrix::maximally_mixed(2));
    }

    #[test]
    fn bell_state_mutual_information() {
        let bell = DensityMatrix::pure(&max_entangled(2)).unwrap();
        let shape = SubsystemShape::uniform(2, 2);
        let mi = mutual_information(&bell, &shape, &[0], &[1]).unwrap();
        assert!((mi - 2.0 * 2f64.ln()).abs() < 1e-12);
        let prod = random_state(2, 3).tensor(&random_state(2, 4));
        assert!(mutual_information(&prod, &shape, &[0], &[1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fidelity_of_identical_states() {
        let r = random_state(3, 5);
        assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn trace_distance_triangle(s1 in 0u64..10_000, s2 in 0u64..10_000, s3 in 0u64..10_000) {
            let (a, b, cc) = (random_state(3, s1), random_state(3, s2), random_state(3, s3));
            let ab = trace_distance(&a, &b).unwrap();
            let bc = trace_distance(&b, &cc).unwrap();
            let ac = trace_distance(&a, &cc).unwrap();
            prop_assert!(ac <= ab + bc + 1e-10);
            prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn relative_entropy_nonnegative(s1 in 0u64..10_000, s2 in 0u64..10_000) {
            let (a, b) = (random_state(3, s1), random_state(3, s2));
            let s = relative_entropy(&a, &b).unwrap();
            prop_assert!(s >= 0.0);
            let l1 = 2.0 * trace_distance(&a, &b).unwrap();
            if l1 > 1e-8 {
                prop_assert!(s > 0.0);
            }
        }

        #[test]
        fn state_spectrum_is_a_distribution(seed in 0u64..10_000) {
            let r = random_state(5, seed);
            let ev = r.eigenvalues();
            prop_assert!(ev.iter().all(|&x| (-tol::PSD..=1.0 + tol::PSD).contains(&x)));
            prop_assert!((ev.iter().sum::<f64>() - 1.0).abs() < tol::TRACE);
        }
    }
}
