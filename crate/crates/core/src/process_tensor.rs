//! The process tensor: the multi-time map from control sequences to output states.
//!
//! # Layout
//!
//! A `k`-step tensor is a square matrix on `2k + 1` system-sized legs
//!
//! ```text
//! (r_k, x_{k-1}, r_{k-1}, ..., x_0, r_0)
//! ```
//!
//! where `r_j` is the system state reaching slot `j` (or the final output for
//! `j = k`) and `x_j` the state the control at slot `j` hands back. Control `j`
//! occupies the leg pair `(x_j, r_j)` with Choi entries
//! `C[(x, r), (y, s)] = <x| A(|r><s|) |y>`, and the output is
//!
//! ```text
//! rho_k[r, s] = sum_{X, Y} T[(r, X), (s, Y)] A[X, Y]
//! ```
//!
//! with `A` the control operator on `(x_{k-1}, r_{k-1}, ..., x_0, r_0)`.
//! The tensor has trace `d^k`; dividing by `d^k` gives the Choi state.

use rayon::prelude::*;

use crate::basis::OperationBasis;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::evolution::{conditional_environment, ControlSequence, Scenario};
use crate::linalg::{self, c, tol, ComplexMatrix, SubsystemShape, C64};
use crate::state::{DensityMatrix, SubnormalizedState};

/// Largest dense tensor dimension `d^{2k+1}`.
pub const MAX_TENSOR_DIM: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessTensor {
    d_sys: usize,
    k: usize,
    start_step: usize,
    tensor: ComplexMatrix,
    bases: Option<Vec<OperationBasis>>,
}

fn tensor_dim(d: usize, k: usize) -> Result<usize> {
    let legs = 2 * k + 1;
    let mut n: usize = 1;
    for _ in 0..legs {
        n = n
            .checked_mul(d)
            .filter(|&v| v <= MAX_TENSOR_DIM)
            .ok_or_else(|| Error::SizeGuard(format!("d^(2k+1) with d = {d}, k = {k} exceeds {MAX_TENSOR_DIM}")))?;
    }
    Ok(n)
}

/// `out[o, a, i] = sum_b m[a, b] data[o, b, i]` on a row-major tensor.
fn mode_product(data: &[C64], dims: &[usize], mode: usize, m: &ComplexMatrix) -> (Vec<C64>, Vec<usize>) {
    let old = dims[mode];
    let new = m.nrows();
    debug_assert_eq!(m.ncols(), old);
    let inner: usize = dims[mode + 1..].iter().product();
    let mut out = vec![linalg::ZERO; data.len() / old * new];
    out.par_chunks_mut(new * inner)
        .zip(data.par_chunks(old * inner))
        .for_each(|(dst, src)| {
            for a in 0..new {
                let row = &mut dst[a * inner..(a + 1) * inner];
                for b in 0..old {
                    let coeff = m[(a, b)];
                    if coeff == linalg::ZERO {
                        continue;
                    }
                    for (t, s) in row.iter_mut().zip(&src[b * inner..(b + 1) * inner]) {
                        *t += coeff * s;
                    }
                }
            }
        });
    let mut new_dims = dims.to_vec();
    new_dims[mode] = new;
    (out, new_dims)
}

struct Tomography<'a> {
    sc: &'a Scenario,
    bases: &'a [OperationBasis],
    k: usize,
    /// stride of `e_j` in the flattened outcome index
    strides: Vec<usize>,
}

impl Tomography<'_> {
    fn branch(&self, j: usize, rho: ComplexMatrix, offset: usize, out: &mut Vec<(usize, ComplexMatrix)>) {
        let (d, de) = (self.sc.d_sys(), self.sc.d_env());
        if j == self.k {
            let sys = linalg::partial_trace(&rho, &self.sc.joint_shape(), &[0]).expect("joint shape");
            out.push((offset, sys));
            return;
        }
        let basis = &self.bases[j];
        for (mu, effect) in basis.povm().iter().enumerate() {
            let env = conditional_environment(effect, &rho, d, de);
            for (nu, prep) in basis.preparations().iter().enumerate() {
                let next = linalg::kron(prep.matrix(), &env);
                let next = self.sc.apply_unitary(j, &next, 1);
                let e = mu * basis.n_preps() + nu;
                self.branch(j + 1, next, offset + e * self.strides[j], out);
            }
        }
    }
}

impl ProcessTensor {
    /// Reconstructs the tensor by simulated tomography: runs every
    /// measure-and-prepare basis sequence and inverts with the duals.
    pub fn from_scenario(sc: &Scenario, k: usize, bases: &[OperationBasis]) -> Result<Self> {
        let d = sc.d_sys();
        if k > sc.steps() {
            return Err(Error::Range(format!("{k} steps requested from a {}-step scenario", sc.steps())));
        }
        let n = tensor_dim(d, k)?;
        if bases.len() != k {
            return Err(Error::param(format!("{} bases for {k} steps", bases.len())));
        }
        if bases.iter().any(|b| b.dim() != d || b.len() != d.pow(4)) {
            return Err(Error::dim("every basis must span the system's operator space exactly"));
        }
        let mut strides = vec![1usize; k];
        for j in 1..k {
            strides[j] = strides[j - 1] * bases[j - 1].len();
        }
        let n_seq: usize = bases.iter().map(OperationBasis::len).product();
        let tomo = Tomography { sc, bases, k, strides };

        // R[(r, s), e_{k-1}, ..., e_0]
        let mut r_data = vec![linalg::ZERO; d * d * n_seq];
        let results: Vec<Vec<(usize, ComplexMatrix)>> = if k == 0 {
            let mut out = Vec::new();
            tomo.branch(0, sc.initial().matrix().clone(), 0, &mut out);
            vec![out]
        } else {
            let basis = &bases[0];
            let n0 = basis.len();
            (0..n0)
                .into_par_iter()
                .map(|e0| {
                    let (mu, nu) = basis.split_index(e0);
                    let env = conditional_environment(&basis.povm()[mu], sc.initial().matrix(), d, sc.d_env());
                    let next = sc.apply_unitary(0, &linalg::kron(basis.preparations()[nu].matrix(), &env), 1);
                    let mut out = Vec::with_capacity(n_seq / n0);
                    tomo.branch(1, next, e0, &mut out);
                    out
                })
                .collect()
        };
        for (offset, rho) in results.into_iter().flatten() {
            for r in 0..d {
                for s in 0..d {
                    r_data[(r * d + s) * n_seq + offset] = rho[(r, s)];
                }
            }
        }

        // expand each outcome index over the tomography duals
        let mut dims: Vec<usize> = std::iter::once(d * d).chain((0..k).rev().map(|j| bases[j].len())).collect();
        let mut data = r_data;
        let d2 = d * d;
        for (j, b) in bases.iter().enumerate().take(k) {
            let mut w = linalg::zeros(d2 * d2, b.len());
            for e in 0..b.len() {
                let (mu, nu) = b.split_index(e);
                let dual = b.tomography_dual(mu, nu);
                for x in 0..d2 {
                    for y in 0..d2 {
                        w[(x * d2 + y, e)] = dual[(x, y)];
                    }
                }
            }
            let (next, next_dims) = mode_product(&data, &dims, k - j, &w);
            data = next;
            dims = next_dims;
        }

        // F[(r, s), (X_{k-1}, Y_{k-1}), ..., (X_0, Y_0)] -> T[(r, X..), (s, Y..)]
        let big_d = n / d;
        let tensor = ComplexMatrix::from_fn(n, n, |row, col| {
            let (r, mut xs) = (row / big_d, row % big_d);
            let (s, mut ys) = (col / big_d, col % big_d);
            let mut idx = 0usize;
            let mut stride = 1usize;
            for _ in 0..k {
                let (x, y) = (xs % d2, ys % d2);
                xs /= d2;
                ys /= d2;
                idx += (x * d2 + y) * stride;
                stride *= d2 * d2;
            }
            data[(r * d + s) * stride + idx]
        });
        Ok(Self { d_sys: d, k, start_step: 0, tensor, bases: Some(bases.to_vec()) })
    }

    /// [`ProcessTensor::from_scenario`] with the standard basis at every step.
    pub fn from_scenario_standard(sc: &Scenario, k: usize) -> Result<Self> {
        let basis = OperationBasis::standard(sc.d_sys())?;
        Self::from_scenario(sc, k, &vec![basis; k])
    }

    /// Wraps a raw tensor matrix (no positivity check).
    pub fn from_matrix(d_sys: usize, k: usize, start_step: usize, tensor: ComplexMatrix) -> Result<Self> {
        let n = tensor_dim(d_sys, k)?;
        if tensor.shape() != (n, n) {
            return Err(Error::dim(format!("a {k}-step tensor on d = {d_sys} is {n}x{n}")));
        }
        Ok(Self { d_sys, k, start_step, tensor, bases: None })
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn steps(&self) -> usize {
        self.k
    }

    /// Absolute index of the earliest slot `r_start`.
    pub fn start_step(&self) -> usize {
        self.start_step
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.tensor
    }

    pub fn bases(&self) -> Option<&[OperationBasis]> {
        self.bases.as_deref()
    }

    pub fn shape(&self) -> SubsystemShape {
        SubsystemShape::uniform(self.d_sys, 2 * self.k + 1)
    }

    /// Normalized Choi state `T / d^k`.
    pub fn choi_state_matrix(&self) -> ComplexMatrix {
        &self.tensor / c(self.d_sys.pow(self.k as u32) as f64, 0.0)
    }

    /// Contracts a raw control operator on `(x_{k-1}, r_{k-1}, ..., x_0, r_0)`.
    pub fn apply_operator(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.d_sys;
        let big = self.tensor.nrows() / d;
        if a.shape() != (big, big) {
            return Err(Error::dim(format!("control operator must be {big}x{big}")));
        }
        let mut out = linalg::zeros(d, d);
        for r in 0..d {
            for s in 0..d {
                let block = self.tensor.view((r * big, s * big), (big, big));
                out[(r, s)] = block.iter().zip(a.iter()).map(|(t, x)| t * x).sum();
            }
        }
        Ok(out)
    }

    /// Output state for a control sequence; subnormalized for trace-decreasing controls.
    pub fn apply(&self, controls: &ControlSequence) -> Result<SubnormalizedState> {
        if controls.len() != self.k || controls.d_sys() != self.d_sys {
            return Err(Error::param(format!(
                "{} slots on d = {} for a {}-step tensor on d = {}",
                controls.len(),
                controls.d_sys(),
                self.k,
                self.d_sys
            )));
        }
        let out = self.apply_operator(&controls.full_choi())?;
        SubnormalizedState::new(linalg::hermitian_part(&out))
    }

    /// Sub-tensor on absolute steps `[j, k']`: identity controls before `j`,
    /// legs after `r_{k'}` discarded.
    pub fn contained(&self, j: usize, k_prime: usize) -> Result<Self> {
        let start = self.start_step;
        let end = start + self.k;
        if !(start <= j && j <= k_prime && k_prime <= end) {
            return Err(Error::Range(format!(
                "containment [{j}, {k_prime}] outside the tensor's steps [{start}, {end}]"
            )));
        }
        let d = self.d_sys;
        let legs = 2 * self.k + 1;
        let drop_future = 2 * (end - k_prime);
        let keep: Vec<usize> = (drop_future..legs).collect();
        let traced = linalg::partial_trace(&self.tensor, &self.shape(), &keep)?
            / c(d.pow((end - k_prime) as u32) as f64, 0.0);
        let remaining = legs - drop_future;
        let n_pairs = j - start;
        // trailing legs are (x_{j-1}, r_{j-1}, ..., x_start, r_start)
        let pairs: Vec<(usize, usize)> = (0..n_pairs)
            .map(|p| {
                let x = remaining - 2 * (p + 1);
                (x, x + 1)
            })
            .collect();
        let contracted = linalg::contract_pairs(&traced, &SubsystemShape::uniform(d, remaining), &pairs)?;
        Ok(Self { d_sys: d, k: k_prime - j, start_step: j, tensor: contracted, bases: None })
    }

    /// For a 0-step tensor, the state it holds.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        if self.k != 0 {
            return Err(Error::param("only a 0-step tensor is a state"));
        }
        DensityMatrix::new(linalg::hermitian_part(&self.tensor))
    }

    /// For a 1-step tensor, the channel `x_start -> r_{start+1}` with the `r_start` leg discarded.
    pub fn marginal_map(&self) -> Result<Channel> {
        if self.k != 1 {
            return Err(Error::param("marginal map needs a 1-step tensor"));
        }
        let m = linalg::partial_trace(&self.tensor, &self.shape(), &[0, 1])?;
        Channel::from_choi(self.d_sys, self.d_sys, linalg::hermitian_part(&m))
    }

    /// Complete-positivity verdict and minimum eigenvalue of the tensor.
    pub fn check_cp(&self) -> Result<(bool, f64)> {
        let min = linalg::min_eigenvalue(&linalg::hermitian_part(&self.tensor))?;
        Ok((min >= -tol::PSD, min))
    }

    /// Max-entry defect of `T[pA + (1-p)B] - (p T[A] + (1-p) T[B])`.
    pub fn check_linearity(&self, a: &ControlSequence, b: &ControlSequence, p: f64) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::param("control sequences differ in length"));
        }
        let (ca, cb) = (a.full_choi(), b.full_choi());
        let mixed = &ca * c(p, 0.0) + &cb * c(1.0 - p, 0.0);
        let lhs = self.apply_operator(&mixed)?;
        let rhs = self.apply_operator(&ca)? * c(p, 0.0) + self.apply_operator(&cb)? * c(1.0 - p, 0.0);
        Ok(linalg::max_abs_diff(&lhs, &rhs))
    }
}
