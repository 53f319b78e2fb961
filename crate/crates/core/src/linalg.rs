//! Dense complex linear algebra on multipartite spaces.
//!
//! Matrices are indexed `(row, col)`. A composite space is described by a
//! [`SubsystemShape`] listing the factor dimensions; factor 0 is the leftmost
//! Kronecker factor, so the basis index of `|i_0 i_1 ... i_{n-1}>` is the
//! mixed-radix number with `i_0` most significant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Global numerical tolerances.
pub mod tol {
    pub const HERM: f64 = 1e-9;
    pub const TRACE: f64 = 1e-9;
    pub const PSD: f64 = 1e-9;
    pub const EIG: f64 = 1e-10;
    pub const SUPPORT: f64 = 1e-12;
    /// Branch probabilities below this are treated as impossible.
    pub const PROB: f64 = 1e-12;
}

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Ordered list of subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::dim("subsystem dimension must be positive"));
        }
        Ok(Self { dims })
    }

    pub fn uniform(d: usize, n: usize) -> Self {
        Self { dims: vec![d; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    fn check(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::dim(format!(
                "matrix is {}x{} but shape {:?} has total dimension {}",
                m.nrows(),
                m.ncols(),
                self.dims,
                n
            )));
        }
        Ok(())
    }

    /// Strides of each factor in the flattened index.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(n: usize, m: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(n, m)
}

/// Builds a matrix from row-major entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<ComplexMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::dim(format!(
            "{} entries cannot fill a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    Ok(ComplexMatrix::from_row_slice(rows, cols, entries))
}

pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_iterator(
        rows,
        cols,
        (0..rows * cols).map(|idx| {
            let (col, row) = (idx / rows, idx % rows);
            c(entries[row * cols + col], 0.0)
        }),
    )
}

pub fn diag(values: &[C64]) -> ComplexMatrix {
    let n = values.len();
    let mut m = zeros(n, n);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = *v;
    }
    m
}

/// `|psi><psi|` for a column vector.
pub fn projector(psi: &[C64]) -> ComplexMatrix {
    let n = psi.len();
    ComplexMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
}

pub fn ket(d: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[i] = ONE;
    v
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Left-to-right Kronecker product of a list; the empty product is `[1]`.
pub fn kron_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Reduced matrix on the `keep` factors (kept in ascending order).
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    shape.check(m)?;
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= shape.len()) {
        return Err(Error::dim(format!(
            "keep set {keep:?} out of range for {} subsystems",
            shape.len()
        )));
    }
    if keep_sorted.len() == shape.len() {
        return Ok(m.clone());
    }
    let traced: Vec<usize> = (0..shape.len())
        .filter(|i| keep_sorted.binary_search(i).is_err())
        .collect();
    let strides = shape.strides();
    let dims = shape.dims();
    let kept_dim: usize = keep_sorted.iter().map(|&i| dims[i]).product();
    let traced_dim: usize = traced.iter().map(|&i| dims[i]).product();

    // offsets into the full index for every kept multi-index and traced multi-index
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(out.len() * dims[f]);
            for base in &out {
                for v in 0..dims[f] {
                    next.push(base + v * strides[f]);
                }
            }
            out = next;
        }
        out
    };
    let kept_off = offsets(&keep_sorted);
    let traced_off = offsets(&traced);
    debug_assert_eq!(kept_off.len(), kept_dim);
    debug_assert_eq!(traced_off.len(), traced_dim);

    let mut out = zeros(kept_dim, kept_dim);
    for (a, &ra) in kept_off.iter().enumerate() {
        for (b, &rb) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += m[(ra + t, rb + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Reorders factors: factor `i` of the result is factor `order[i]` of `m`.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    order: &[usize],
) -> Result<ComplexMatrix> {
    shape.check(m)?;
    let map = permutation_map(shape, order)?;
    let n = map.len();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| m[(map[i], map[j])]))
}

/// For each index of the permuted space, the corresponding index of the original.
pub fn permutation_map(shape: &SubsystemShape, order: &[usize]) -> Result<Vec<usize>> {
    let n = shape.len();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::dim("permutation length does not match subsystem count"));
    }
    for &o in order {
        if o >= n || seen[o] {
            return Err(Error::dim(format!("{order:?} is not a permutation")));
        }
        seen[o] = true;
    }
    let dims = shape.dims();
    let strides = shape.strides();
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let total = shape.total();
    let mut map = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        let src: usize = digits
            .iter()
            .zip(order)
            .map(|(&v, &o)| v * strides[o])
            .sum();
        map.push(src);
        for pos in (0..n).rev() {
            digits[pos] += 1;
            if digits[pos] < new_dims[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
    Ok(map)
}

/// Lifts `op` acting on the listed factors (in the listed order) to the full space.
pub fn embed_operator(
    op: &ComplexMatrix,
    shape: &SubsystemShape,
    targets: &[usize],
) -> Result<ComplexMatrix> {
    let dims = shape.dims();
    let target_dim: usize = targets.iter().map(|&t| dims.get(t).copied().unwrap_or(0)).product();
    if op.nrows() != target_dim || op.ncols() != target_dim || targets.iter().any(|&t| t >= dims.len()) {
        return Err(Error::dim("operator does not match target subsystems"));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !targets.contains(i)).collect();
    let rest_dim: usize = rest.iter().map(|&i| dims[i]).product();
    let full = kron(op, &identity(rest_dim));
    // `full` lives on factors ordered (targets..., rest...); move them home
    let ordered: Vec<usize> = targets.iter().chain(rest.iter()).copied().collect();
    let ordered_shape = SubsystemShape::new(ordered.iter().map(|&i| dims[i]).collect())?;
    let mut inverse = vec![0usize; ordered.len()];
    for (pos, &orig) in ordered.iter().enumerate() {
        inverse[orig] = pos;
    }
    permute_subsystems(&full, &ordered_shape, &inverse)
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary whose columns are the matching eigenvectors.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::dim("eigendecomposition needs a square matrix"));
    }
    let scale = max_abs(m).max(1.0);
    let resid = hermitian_residual(m);
    if resid > tol::HERM * scale {
        return Err(Error::NotHermitian(resid));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

pub fn eigenvalues_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    eig_hermitian(m).map(|(v, _)| v)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues_hermitian(m)?.first().copied().unwrap_or(0.0))
}

/// `V f(diag) V^dagger` for a Hermitian matrix.
pub fn hermitian_function<F: Fn(f64) -> f64>(m: &ComplexMatrix, f: F) -> Result<ComplexMatrix> {
    let (vals, vecs) = eig_hermitian(m)?;
    let fd: Vec<C64> = vals.iter().map(|&v| c(f(v), 0.0)).collect();
    Ok(&vecs * diag(&fd) * vecs.adjoint())
}

/// Square root of a positive semidefinite matrix; small negative eigenvalues are clipped.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_function(m, |v| v.max(0.0).sqrt())
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues_hermitian(m)?.iter().map(|v| v.abs()).sum())
}

pub fn is_unitary(u: &ComplexMatrix, tolerance: f64) -> bool {
    u.is_square() && max_abs_diff(&(u.adjoint() * u), &identity(u.nrows())) <= tolerance
}

pub fn is_diagonal(m: &ComplexMatrix) -> bool {
    let n = m.nrows();
    for j in 0..m.ncols() {
        for i in 0..n {
            if i != j && m[(i, j)] != ZERO {
                return false;
            }
        }
    }
    true
}

/// Elementwise transpose (no conjugation).
pub fn transpose(m: &ComplexMatrix) -> ComplexMatrix {
    m.transpose()
}

/// Hilbert-Schmidt inner product `tr[a^dagger b]`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Pauli matrices `[I, X, Y, Z]`.
pub fn paulis() -> [ComplexMatrix; 4] {
    let i = identity(2);
    let x = from_rows(2, 2, &[ZERO, ONE, ONE, ZERO]).unwrap();
    let y = from_rows(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]).unwrap();
    let z = from_rows(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)]).unwrap();
    [i, x, y, z]
}

/// SWAP on `C^d (x) C^d`: `|r x> -> |x r>`.
pub fn swap_gate(d: usize) -> ComplexMatrix {
    let n = d * d;
    let mut s = zeros(n, n);
    for r in 0..d {
        for x in 0..d {
            s[(x * d + r, r * d + x)] = ONE;
        }
    }
    s
}

/// `|psi+> = sum_j |jj> / sqrt(d)`.
pub fn max_entangled(d: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d * d];
    let amp = c(1.0 / (d as f64).sqrt(), 0.0);
    for j in 0..d {
        v[j * d + j] = amp;
    }
    v
}

/// An orthogonal Hermitian operator basis with `tr[G_a G_b] = 2 delta_ab`:
/// scaled identity, then symmetric, antisymmetric and diagonal generalized
/// Gell-Mann matrices. For `d = 2` this is `[I, X, Y, Z]`.
pub fn hermitian_operator_basis(d: usize) -> Vec<ComplexMatrix> {
    if d == 2 {
        return paulis().to_vec();
    }
    let mut out = Vec::with_capacity(d * d);
    out.push(identity(d) * c((2.0 / d as f64).sqrt(), 0.0));
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = zeros(d, d);
            s[(j, k)] = ONE;
            s[(k, j)] = ONE;
            out.push(s);
            let mut a = zeros(d, d);
            a[(j, k)] = c(0.0, -1.0);
            a[(k, j)] = c(0.0, 1.0);
            out.push(a);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = zeros(d, d);
        for j in 0..l {
            m[(j, j)] = c(norm, 0.0);
        }
        m[(l, l)] = c(-(l as f64) * norm, 0.0);
        out.push(m);
    }
    out
}

/// Contracts each factor pair `(p, q)` with the unnormalized `sum_a |aa>` on
/// both sides: `out = <Phi| m |Phi>` over the paired factors. Pairs must be
/// disjoint and of equal dimension; the remaining factors keep their order.
pub fn contract_pairs(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    pairs: &[(usize, usize)],
) -> Result<ComplexMatrix> {
    shape.check(m)?;
    let dims = shape.dims();
    let mut used = vec![false; dims.len()];
    for &(p, q) in pairs {
        if p >= dims.len() || q >= dims.len() || p == q || used[p] || used[q] || dims[p] != dims[q] {
            return Err(Error::dim(format!("invalid factor pair ({p}, {q})")));
        }
        used[p] = true;
        used[q] = true;
    }
    let strides = shape.strides();
    let kept: Vec<usize> = (0..dims.len()).filter(|&i| !used[i]).collect();
    let mut kept_off = vec![0usize];
    for &f in &kept {
        let step = strides[f];
        kept_off = kept_off
            .iter()
            .flat_map(|base| (0..dims[f]).map(move |v| base + v * step))
            .collect();
    }
    let mut pair_off = vec![0usize];
    for &(p, q) in pairs {
        let step = strides[p] + strides[q];
        pair_off = pair_off
            .iter()
            .flat_map(|base| (0..dims[p]).map(move |v| base + v * step))
            .collect();
    }
    let n = kept_off.len();
    let mut out = zeros(n, n);
    for (a, &ra) in kept_off.iter().enumerate() {
        for (b, &rb) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &u in &pair_off {
                for &v in &pair_off {
                    acc += m[(ra + u, rb + v)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_matrix(n: usize, seed: u64) -> ComplexMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn rand_state(n: usize, seed: u64) -> ComplexMatrix {
        let g = rand_matrix(n, seed);
        let r = &g * g.adjoint();
        let t = r.trace();
        r / t
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let m = rand_matrix(3, 1);
        assert_eq!(kron(&identity(1), &m), m);
        let z = &paulis()[3];
        let zz = kron(z, z);
        let expect = diag(&[ONE, -ONE, -ONE, ONE]);
        assert_eq!(zz, expect);
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = rand_state(2, 3);
        let sigma = rand_matrix(3, 4);
        let shape = SubsystemShape::new(vec![2, 3]).unwrap();
        let red = partial_trace(&kron(&rho, &sigma), &shape, &[0]).unwrap();
        assert!(max_abs_diff(&red, &(rho.clone() * sigma.trace())) < 1e-14);
        let all = partial_trace(&kron(&rho, &sigma), &shape, &[0, 1]).unwrap();
        assert_eq!(all, kron(&rho, &sigma));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let bell = projector(&max_entangled(2));
        let shape = SubsystemShape::uniform(2, 2);
        let red = partial_trace(&bell, &shape, &[1]).unwrap();
        assert!(max_abs_diff(&red, &(identity(2) * c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn partial_trace_shape_mismatch() {
        let shape = SubsystemShape::new(vec![2, 2]).unwrap();
        assert!(partial_trace(&identity(3), &shape, &[0]).is_err());
        assert!(partial_trace(&identity(4), &shape, &[2]).is_err());
    }

    #[test]
    fn partial_trace_composes() {
        let shape = SubsystemShape::new(vec![2, 3, 2]).unwrap();
        for seed in 0..5 {
            let rho = rand_state(12, 100 + seed);
            let joint = partial_trace(&rho, &shape, &[1]).unwrap();
            let step = partial_trace(&rho, &shape, &[0, 1]).unwrap();
            let step = partial_trace(&step, &SubsystemShape::new(vec![2, 3]).unwrap(), &[1]).unwrap();
            assert!(max_abs_diff(&joint, &step) < 1e-12);
        }
    }

    #[test]
    fn permutation_moves_factors() {
        let a = rand_matrix(2, 5);
        let b = rand_matrix(3, 6);
        let cm = rand_matrix(2, 7);
        let shape = SubsystemShape::new(vec![2, 3, 2]).unwrap();
        let abc = kron_all([&a, &b, &cm]);
        let cab = permute_subsystems(&abc, &shape, &[2, 0, 1]).unwrap();
        assert!(max_abs_diff(&cab, &kron_all([&cm, &a, &b])) < 1e-14);
    }

    #[test]
    fn embed_matches_kron() {
        let u = rand_matrix(4, 8);
        let shape = SubsystemShape::new(vec![2, 3, 2]).unwrap();
        let full = embed_operator(&u, &shape, &[0, 2]).unwrap();
        // compare on a product input
        let (a, b, cc) = (rand_state(2, 9), rand_state(3, 10), rand_state(2, 11));
        let x = kron_all([&a, &b, &cc]);
        let y = &full * &x * full.adjoint();
        let direct = {
            let ac = kron(&a, &cc);
            let moved = &u * ac * u.adjoint();
            let s = SubsystemShape::new(vec![2, 2, 3]).unwrap();
            permute_subsystems(&kron(&moved, &b), &s, &[0, 2, 1]).unwrap()
        };
        assert!(max_abs_diff(&y, &direct) < 1e-13);
    }

    #[test]
    fn eig_examples() {
        let (v, _) = eig_hermitian(&identity(2)).unwrap();
        assert_eq!(v, vec![1.0, 1.0]);
        let (v, _) = eig_hermitian(&paulis()[3]).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        assert!(matches!(eig_hermitian(&rand_matrix(3, 2)), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        for seed in 0..10 {
            let g = rand_matrix(7, 40 + seed);
            let h = &g + g.adjoint();
            let (vals, vecs) = eig_hermitian(&h).unwrap();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let d = diag(&vals.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
            let back = &vecs * d * vecs.adjoint();
            assert!(max_abs_diff(&back, &h) <= 1e-12);
            assert!(is_unitary(&vecs, 1e-12));
        }
    }

    #[test]
    fn operator_basis_is_orthogonal() {
        for d in [2, 3, 4] {
            let basis = hermitian_operator_basis(d);
            assert_eq!(basis.len(), d * d);
            for (a, ga) in basis.iter().enumerate() {
                for (b, gb) in basis.iter().enumerate() {
                    let ip = (ga * gb).trace();
                    let expect = if a == b { 2.0 } else { 0.0 };
                    assert!((ip - c(expect, 0.0)).norm() < 1e-13, "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn swap_exchanges_factors() {
        let (a, b) = (rand_state(3, 12), rand_state(3, 13));
        let s = swap_gate(3);
        let out = &s * kron(&a, &b) * &s;
        assert!(max_abs_diff(&out, &kron(&b, &a)) < 1e-15);
    }
    #[test]
    fn pair_contraction_matches_projector_sandwich() {
        let mut rng = crate::scenarios::seeded_rng(8);
        let rho = crate::scenarios::random_density_matrix(8, 8, &mut rng).into_matrix();
        let shape = SubsystemShape::uniform(2, 3);
        let out = contract_pairs(&rho, &shape, &[(1, 2)]).unwrap();
        let phi = ComplexMatrix::from_column_slice(4, 1, &[ONE, ZERO, ZERO, ONE]);
        let lift = kron(&identity(2), &phi);
        let expect = lift.adjoint() * &rho * &lift;
        assert!(max_abs_diff(&out, &expect) < 1e-14);
        assert!(contract_pairs(&rho, &shape, &[(1, 1)]).is_err());
    }
}
