//! Informationally complete preparation/measurement sets and their duals.

use nalgebra::DMatrix;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::linalg::{self, c, tol, ComplexMatrix, C64};
use crate::state::DensityMatrix;

/// Tetrahedral Bloch vectors of the qubit SIC-POVM.
fn tetrahedron() -> [[f64; 3]; 4] {
    let s2 = 2f64.sqrt();
    [
        [0.0, 0.0, 1.0],
        [2.0 * s2 / 3.0, 0.0, -1.0 / 3.0],
        [-s2 / 3.0, (2f64 / 3.0).sqrt(), -1.0 / 3.0],
        [-s2 / 3.0, -(2f64 / 3.0).sqrt(), -1.0 / 3.0],
    ]
}

fn bloch_operator(n: &[f64; 3], scale: f64) -> ComplexMatrix {
    let p = linalg::paulis();
    (&p[0] + &p[1] * c(n[0], 0.0) + &p[2] * c(n[1], 0.0) + &p[3] * c(n[2], 0.0)) * c(scale, 0.0)
}

/// Preparations `P`, effects `Pi` and their duals for one time step.
///
/// Basis element `(mu, nu)` is the measure-and-prepare map
/// `rho -> P[nu] tr(Pi[mu] rho)`; it has flat index `mu * n_preps + nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperationBasis {
    dim: usize,
    preparations: Vec<DensityMatrix>,
    povm: Vec<ComplexMatrix>,
    duals_prep: Vec<ComplexMatrix>,
    duals_povm: Vec<ComplexMatrix>,
}

/// Duals `D` of a family of `d^2` Hermitian operators with `tr(D[a] F[b]) = delta_ab`.
pub fn dual_set(family: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let first = family.first().ok_or_else(|| Error::param("empty family"))?;
    let d = first.nrows();
    let n = d * d;
    if family.len() != n {
        return Err(Error::dim(format!(
            "a spanning family in dimension {d} needs {n} members, got {}",
            family.len()
        )));
    }
    for f in family {
        if f.shape() != (d, d) {
            return Err(Error::dim("family members differ in shape"));
        }
        let resid = linalg::hermitian_residual(f);
        if resid > tol::HERM {
            return Err(Error::NotHermitian(resid));
        }
    }
    let gamma = linalg::hermitian_operator_basis(d);
    let h = DMatrix::<f64>::from_fn(n, n, |nu, g| 0.5 * linalg::hs_inner(&family[nu], &gamma[g]).re);
    let sv = h.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 1e-10 * smax.max(f64::MIN_POSITIVE) {
        return Err(Error::LinearDependence(smin));
    }
    let j = h
        .transpose()
        .try_inverse()
        .ok_or(Error::LinearDependence(smin))?;
    Ok((0..n)
        .map(|a| {
            let mut dual = linalg::zeros(d, d);
            for (cidx, g) in gamma.iter().enumerate() {
                dual += g * c(0.5 * j[(a, cidx)], 0.0);
            }
            dual
        })
        .collect())
}

impl OperationBasis {
    /// Builds a basis from explicit preparations and a POVM, computing both dual sets.
    pub fn from_parts(preparations: Vec<DensityMatrix>, povm: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = preparations
            .first()
            .map(DensityMatrix::dim)
            .ok_or_else(|| Error::param("no preparations"))?;
        if preparations.iter().any(|p| p.dim() != dim) || povm.iter().any(|e| e.shape() != (dim, dim)) {
            return Err(Error::dim("basis members differ in dimension"));
        }
        for e in &povm {
            let min = linalg::min_eigenvalue(e)?;
            if min < -tol::PSD {
                return Err(Error::NotPositive(min));
            }
        }
        let total = povm.iter().fold(linalg::zeros(dim, dim), |acc, e| acc + e);
        let resid = linalg::max_abs_diff(&total, &linalg::identity(dim));
        if resid > 1e-10 {
            return Err(Error::param(format!("POVM effects sum to identity only within {resid:e}")));
        }
        let prep_mats: Vec<ComplexMatrix> = preparations.iter().map(|p| p.matrix().clone()).collect();
        let duals_prep = dual_set(&prep_mats)?;
        let duals_povm = dual_set(&povm)?;
        Ok(Self { dim, preparations, povm, duals_prep, duals_povm })
    }

    /// Default basis: for qubits the tetrahedral SIC-POVM with preparations
    /// `|0>, |1>, |+>, |+i>`; for `d > 2` the states `|i>`, `(|i>+|j>)/sqrt2`,
    /// `(|i>+i|j>)/sqrt2` and the POVM `S^-1/2 E_m S^-1/2` built from them.
    pub fn standard(d: usize) -> Result<Self> {
        match d {
            0 | 1 => Err(Error::Unsupported(format!("operation basis in dimension {d}"))),
            2 => {
                let h = 0.5f64.sqrt();
                let preps = vec![
                    DensityMatrix::basis_state(2, 0),
                    DensityMatrix::basis_state(2, 1),
                    DensityMatrix::pure(&[c(h, 0.0), c(h, 0.0)])?,
                    DensityMatrix::pure(&[c(h, 0.0), c(0.0, h)])?,
                ];
                let povm = tetrahedron().iter().map(|n| bloch_operator(n, 0.25)).collect();
                Self::from_parts(preps, povm)
            }
            _ => {
                let preps = qudit_preparations(d)?;
                let projectors: Vec<ComplexMatrix> = preps.iter().map(|p| p.matrix().clone()).collect();
                let frame = projectors.iter().fold(linalg::zeros(d, d), |acc, e| acc + e);
                let inv_sqrt = linalg::hermitian_function(&frame, |x| 1.0 / x.sqrt())?;
                let povm = projectors
                    .iter()
                    .map(|e| linalg::hermitian_part(&(&inv_sqrt * e * &inv_sqrt)))
                    .collect();
                Self::from_parts(preps, povm)
            }
        }
    }

    /// A second qubit basis unrelated to [`OperationBasis::standard`]:
    /// tetrahedral pure states as preparations and a rotated tetrahedral POVM.
    pub fn rotated_qubit(angles: [f64; 3]) -> Result<Self> {
        let p = linalg::paulis();
        let rot = |m: &ComplexMatrix, a: f64| {
            &p[0] * c(a.cos(), 0.0) - m * c(0.0, a.sin())
        };
        let v = rot(&p[3], angles[2]) * rot(&p[2], angles[1]) * rot(&p[1], angles[0]);
        let tet = tetrahedron();
        let preps = tet
            .iter()
            .map(|n| DensityMatrix::new(linalg::hermitian_part(&bloch_operator(n, 0.5))))
            .collect::<Result<Vec<_>>>()?;
        let povm = tet
            .iter()
            .map(|n| linalg::hermitian_part(&(&v * bloch_operator(n, 0.25) * v.adjoint())))
            .collect();
        Self::from_parts(preps, povm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn preparations(&self) -> &[DensityMatrix] {
        &self.preparations
    }

    pub fn povm(&self) -> &[ComplexMatrix] {
        &self.povm
    }

    pub fn duals_prep(&self) -> &[ComplexMatrix] {
        &self.duals_prep
    }

    pub fn duals_povm(&self) -> &[ComplexMatrix] {
        &self.duals_povm
    }

    pub fn n_preps(&self) -> usize {
        self.preparations.len()
    }

    pub fn n_effects(&self) -> usize {
        self.povm.len()
    }

    /// Number of measure-and-prepare basis elements.
    pub fn len(&self) -> usize {
        self.n_preps() * self.n_effects()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Splits a flat element index into `(mu, nu)`.
    pub fn split_index(&self, e: usize) -> (usize, usize) {
        (e / self.n_preps(), e % self.n_preps())
    }

    pub fn element(&self, mu: usize, nu: usize) -> Channel {
        Channel::measure_prepare(&self.povm[mu], &self.preparations[nu])
            .expect("basis effects are valid")
    }

    /// Dual operator of element `(mu, nu)` on the control legs `(x, r)`:
    /// `D[nu]^T (x) Delta[mu]`, so that contracting the element's Choi against it gives 1.
    pub fn tomography_dual(&self, mu: usize, nu: usize) -> ComplexMatrix {
        linalg::kron(&self.duals_prep[nu].transpose(), &self.duals_povm[mu])
    }

    /// Real coefficients `alpha[mu][nu]` expanding `ch` over the basis elements.
    pub fn expand_channel(&self, ch: &Channel) -> Result<Vec<Vec<f64>>> {
        if ch.dim_in() != self.dim || ch.dim_out() != self.dim {
            return Err(Error::dim("channel does not match the basis dimension"));
        }
        let mut out = vec![vec![0.0; self.n_preps()]; self.n_effects()];
        for (mu, row) in out.iter_mut().enumerate() {
            for (nu, slot) in row.iter_mut().enumerate() {
                let w = linalg::kron(&self.duals_prep[nu], &self.duals_povm[mu].transpose());
                let alpha: C64 = (w * ch.choi()).trace();
                if alpha.im.abs() > 1e-10 * alpha.norm().max(1.0) {
                    return Err(Error::NotHermitian(alpha.im.abs()));
                }
                *slot = alpha.re;
            }
        }
        Ok(out)
    }
}

fn qudit_preparations(d: usize) -> Result<Vec<DensityMatrix>> {
    let h = 0.5f64.sqrt();
    let mut out: Vec<DensityMatrix> = (0..d).map(|i| DensityMatrix::basis_state(d, i)).collect();
    for i in 0..d {
        for j in (i + 1)..d {
            let mut plus = vec![linalg::ZERO; d];
            plus[i] = c(h, 0.0);
            plus[j] = c(h, 0.0);
            out.push(DensityMatrix::pure(&plus)?);
            let mut phase = vec![linalg::ZERO; d];
            phase[i] = c(h, 0.0);
            phase[j] = c(0.0, h);
            out.push(DensityMatrix::pure(&phase)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, paulis};
    use crate::scenarios::{random_channel, random_density_matrix, seeded_rng};

    fn check_duality(basis: &OperationBasis) {
        for (a, da) in basis.duals_prep().iter().enumerate() {
            for (b, p) in basis.preparations().iter().enumerate() {
                let v = linalg::hs_inner(da, p.matrix());
                assert!((v - c(if a == b { 1.0 } else { 0.0 }, 0.0)).norm() < 1e-9);
            }
        }
        for (a, da) in basis.duals_povm().iter().enumerate() {
            for (b, e) in basis.povm().iter().enumerate() {
                let v = linalg::hs_inner(da, e);
                assert!((v - c(if a == b { 1.0 } else { 0.0 }, 0.0)).norm() < 1e-9);
            }
        }
    }

    fn gram_rank(family: &[ComplexMatrix]) -> usize {
        let n = family.len();
        let g = DMatrix::<C64>::from_fn(n, n, |a, b| linalg::hs_inner(&family[a], &family[b]));
        g.svd(false, false).singular_values.iter().filter(|&&s| s > 1e-10).count()
    }

    #[test]
    fn qubit_standard_basis() {
        let b = OperationBasis::standard(2).unwrap();
        assert_eq!(b.n_preps(), 4);
        assert_eq!(b.n_effects(), 4);
        let preps: Vec<_> = b.preparations().iter().map(|p| p.matrix().clone()).collect();
        assert_eq!(gram_rank(&preps), 4);
        assert_eq!(gram_rank(b.povm()), 4);
        let total = b.povm().iter().fold(linalg::zeros(2, 2), |a, e| a + e);
        assert!(max_abs_diff(&total, &linalg::identity(2)) < 1e-12);
        check_duality(&b);
        // SIC property: tr(Pi_i Pi_j) = 1/12 for i != j
        for i in 0..4 {
            for j in 0..4 {
                let v = linalg::hs_inner(&b.povm()[i], &b.povm()[j]).re;
                let expect = if i == j { 0.25 } else { 1.0 / 12.0 };
                assert!((v - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pauli_family_is_self_dual_up_to_half() {
        let p = paulis();
        let duals = dual_set(&p).unwrap();
        for (d, q) in duals.iter().zip(p.iter()) {
            assert!(max_abs_diff(d, &(q * c(0.5, 0.0))) < 1e-14);
        }
    }

    #[test]
    fn preparation_duals_match_direct_inversion() {
        // Oracle: write each dual as a Pauli combination and invert the
        // 4x4 matrix of Pauli expectation values by hand.
        let b = OperationBasis::standard(2).unwrap();
        // rows: preparations |0>,|1>,|+>,|+i>; columns: <I>,<X>,<Y>,<Z>
        let m = nalgebra::Matrix4::new(
            1.0, 0.0, 0.0, 1.0, //
            1.0, 0.0, 0.0, -1.0, //
            1.0, 1.0, 0.0, 0.0, //
            1.0, 0.0, 1.0, 0.0,
        );
        // P_b = 1/2 sum_c m_bc sigma_c and D_a = 1/2 sum_c y_ac sigma_c give
        // tr(D_a P_b) = 1/2 (Y M^T)_ab, so Y = 2 (M^T)^-1
        let y = m.transpose().try_inverse().unwrap() * 2.0;
        let p = paulis();
        for a in 0..4 {
            let mut expect = linalg::zeros(2, 2);
            for (cidx, s) in p.iter().enumerate() {
                expect += s * c(0.5 * y[(a, cidx)], 0.0);
            }
            assert!(max_abs_diff(&b.duals_prep()[a], &expect) < 1e-12);
        }
        // e.g. dual of |+> is sigma_x
        assert!(max_abs_diff(&b.duals_prep()[2], &p[1]) < 1e-12);
    }

    #[test]
    fn duplicated_member_is_rejected() {
        let b = OperationBasis::standard(2).unwrap();
        let mut fam: Vec<_> = b.preparations().iter().map(|p| p.matrix().clone()).collect();
        fam[3] = fam[2].clone();
        assert!(matches!(dual_set(&fam), Err(Error::LinearDependence(_))));
        assert!(dual_set(&fam[..3]).is_err());
    }

    #[test]
    fn qudit_bases() {
        for d in [3usize, 4] {
            let b = OperationBasis::standard(d).unwrap();
            assert_eq!(b.n_preps(), d * d);
            assert_eq!(b.n_effects(), d * d);
            check_duality(&b);
        }
        assert!(OperationBasis::standard(1).is_err());
    }

    #[test]
    fn rotated_basis_is_valid_and_different() {
        let a = OperationBasis::standard(2).unwrap();
        let b = OperationBasis::rotated_qubit([0.3, 0.7, 1.1]).unwrap();
        check_duality(&b);
        assert!(max_abs_diff(&a.povm()[1], &b.povm()[1]) > 1e-2);
    }

    #[test]
    fn state_reconstruction_from_duals() {
        let b = OperationBasis::standard(2).unwrap();
        let mut rng = seeded_rng(11);
        for _ in 0..20 {
            let x = random_density_matrix(2, 2, &mut rng).into_matrix() * c(3.0, 0.0)
                + paulis()[1].clone() * c(-0.4, 0.0);
            let mut back = linalg::zeros(2, 2);
            for (d, p) in b.duals_prep().iter().zip(b.preparations()) {
                back += p.matrix() * linalg::hs_inner(d, &x);
            }
            assert!(max_abs_diff(&back, &x) < 1e-9);
        }
    }

    #[test]
    fn channel_expansion_reconstructs_action() {
        let b = OperationBasis::standard(2).unwrap();
        let mut rng = seeded_rng(12);
        for _ in 0..10 {
            let ch = random_channel(2, 2, 3, &mut rng);
            let alpha = b.expand_channel(&ch).unwrap();
            let rho = random_density_matrix(2, 2, &mut rng);
            let mut recon = linalg::zeros(2, 2);
            for (mu, row) in alpha.iter().enumerate() {
                for (nu, a) in row.iter().enumerate() {
                    recon += b.element(mu, nu).apply_matrix(rho.matrix()).unwrap() * c(*a, 0.0);
                }
            }
            assert!(max_abs_diff(&recon, &ch.apply_matrix(rho.matrix()).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn tomography_dual_contracts_to_delta() {
        let b = OperationBasis::standard(2).unwrap();
        for e in 0..b.len() {
            let (mu, nu) = b.split_index(e);
            let w = b.tomography_dual(mu, nu);
            for e2 in 0..b.len() {
                let (m2, n2) = b.split_index(e2);
                let choi = b.element(m2, n2).choi().clone();
                // sum_XY W[X,Y] C[X,Y]
                let v: C64 = w.iter().zip(choi.iter()).map(|(a, b)| a * b).sum();
                let expect = if e == e2 { 1.0 } else { 0.0 };
                assert!((v - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }
}
