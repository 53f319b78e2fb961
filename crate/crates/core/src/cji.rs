//! Choi-Jamiolkowski states of processes and their matrix-product form.
//!
//! The state `Upsilon` lives on the same legs as [`ProcessTensor`], ordered
//! `(r_k, x_{k-1}, r_{k-1}, ..., x_0, r_0)`, and is the tensor divided by `d^k`.
//! It is produced by a circuit: before each step the system is swapped into
//! one half `A_j` of a fresh maximally entangled pair `(A_j, B_j)`, then the
//! step unitary acts on system and environment. `A_j` carries `r_j`, `B_j`
//! carries `x_j`.

use nalgebra::DMatrix;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::evolution::Scenario;
use crate::linalg::{self, c, ComplexMatrix, SubsystemShape, C64};
use crate::process_tensor::{ProcessTensor, MAX_TENSOR_DIM};
use crate::state::DensityMatrix;

/// Largest simulated circuit dimension `d^{2k+1} d_env`.
pub const MAX_CIRCUIT_DIM: usize = 1 << 16;

/// Largest number of stored site entries `d^4 d_env^4`.
pub const MAX_SITE_ENTRIES: usize = 1 << 22;

/// Relative singular-value cutoff for effective bond dimensions.
pub const BOND_CUTOFF: f64 = 1e-12;

/// Role of one tensor factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leg {
    /// The system after the last step, `r_k`.
    Final,
    /// `r_j`: the state handed to the control at slot `j`.
    ControlInput(usize),
    /// `x_j`: the state the control at slot `j` feeds back.
    ControlOutput(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CJIState {
    d_sys: usize,
    k: usize,
    state: DensityMatrix,
}

fn pow_checked(d: usize, e: usize, limit: usize, what: &str) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..e {
        n = n
            .checked_mul(d)
            .filter(|&v| v <= limit)
            .ok_or_else(|| Error::SizeGuard(format!("{what} exceeds {limit}")))?;
    }
    Ok(n)
}

impl CJIState {
    pub fn new(d_sys: usize, k: usize, state: DensityMatrix) -> Result<Self> {
        let n = pow_checked(d_sys, 2 * k + 1, MAX_TENSOR_DIM, "CJI dimension")?;
        if state.dim() != n {
            return Err(Error::dim(format!("a {k}-step CJI state on d = {d_sys} has dimension {n}")));
        }
        Ok(Self { d_sys, k, state })
    }

    pub fn from_process_tensor(t: &ProcessTensor) -> Result<Self> {
        let state = DensityMatrix::new(linalg::hermitian_part(&t.choi_state_matrix()))?;
        Self::new(t.d_sys(), t.steps(), state)
    }

    /// The unnormalized tensor `d^k Upsilon`.
    pub fn to_process_tensor(&self) -> Result<ProcessTensor> {
        let scale = self.d_sys.pow(self.k as u32) as f64;
        ProcessTensor::from_matrix(self.d_sys, self.k, 0, self.state.matrix() * c(scale, 0.0))
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn steps(&self) -> usize {
        self.k
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.state.matrix()
    }

    pub fn shape(&self) -> SubsystemShape {
        SubsystemShape::uniform(self.d_sys, 2 * self.k + 1)
    }

    /// Factor roles in storage order.
    pub fn legs(&self) -> Vec<Leg> {
        let mut legs = vec![Leg::Final];
        for j in (0..self.k).rev() {
            legs.push(Leg::ControlOutput(j));
            legs.push(Leg::ControlInput(j));
        }
        legs
    }

    pub fn leg_position(&self, leg: Leg) -> Result<usize> {
        let k = self.k;
        match leg {
            Leg::Final => Ok(0),
            Leg::ControlOutput(j) if j < k => Ok(2 * (k - j) - 1),
            Leg::ControlInput(j) if j < k => Ok(2 * (k - j)),
            _ => Err(Error::Range(format!("{leg:?} is not a leg of a {k}-step state"))),
        }
    }

    /// Reduced state on the given legs, in the order given.
    pub fn marginal(&self, legs: &[Leg]) -> Result<DensityMatrix> {
        let positions = legs.iter().map(|&l| self.leg_position(l)).collect::<Result<Vec<_>>>()?;
        let mut sorted = positions.clone();
        sorted.sort_unstable();
        let reduced = linalg::partial_trace(self.matrix(), &self.shape(), &sorted)?;
        let order: Vec<usize> = positions.iter().map(|p| sorted.binary_search(p).unwrap()).collect();
        let shape = SubsystemShape::uniform(self.d_sys, sorted.len());
        DensityMatrix::new(linalg::permute_subsystems(&reduced, &shape, &order)?)
    }

    pub fn purity(&self) -> f64 {
        self.state.purity()
    }
}

/// Row-major `(d d_env) x cols` block times `u` from the left.
fn apply_leading(u: &ComplexMatrix, v: &[C64], cols: usize) -> Vec<C64> {
    let rows = u.nrows();
    let m = DMatrix::from_row_slice(rows, cols, v);
    let out = u * m;
    let mut flat = Vec::with_capacity(v.len());
    for r in 0..rows {
        flat.extend(out.row(r).iter().copied());
    }
    flat
}

/// Runs the swap-entangle circuit and traces the environment.
pub fn cji_from_scenario(sc: &Scenario, k: usize) -> Result<CJIState> {
    let (d, de) = (sc.d_sys(), sc.d_env());
    if k > sc.steps() {
        return Err(Error::Range(format!("{k} steps requested from a {}-step scenario", sc.steps())));
    }
    let n_legs = pow_checked(d, 2 * k + 1, MAX_TENSOR_DIM, "CJI dimension")?;
    n_legs
        .checked_mul(de)
        .filter(|&v| v <= MAX_CIRCUIT_DIM)
        .ok_or_else(|| Error::SizeGuard(format!("circuit dimension d^(2k+1) d_env exceeds {MAX_CIRCUIT_DIM}")))?;

    let (probs, vecs) = linalg::eig_hermitian(sc.initial().matrix())?;
    let amp = c(1.0 / (d as f64).sqrt(), 0.0);
    let pairs = d * d;
    let mut columns: Vec<Vec<C64>> = Vec::new();
    for (lambda, &p) in probs.iter().enumerate() {
        if p <= linalg::tol::PROB {
            continue;
        }
        // ordering [S, E, A_0, B_0, ..., A_{j-1}, B_{j-1}]
        let mut v: Vec<C64> = vecs.column(lambda).iter().map(|z| z * p.sqrt()).collect();
        let mut rest = 1usize;
        for j in 0..k {
            // new pair in |psi+>, then swap S with A_j
            let mut w = vec![linalg::ZERO; v.len() * pairs];
            for s in 0..d {
                for e in 0..de {
                    for m in 0..rest {
                        let val = v[(s * de + e) * rest + m] * amp;
                        for a in 0..d {
                            w[((a * de + e) * rest + m) * pairs + s * d + a] = val;
                        }
                    }
                }
            }
            rest *= pairs;
            v = apply_leading(&sc.unitaries()[j], &w, rest);
        }
        // rest index: pair j = (A_j, B_j) with weight d^{2(k-1-j)}; storage wants (B_j, A_j) at d^{2j}
        let mut target = vec![0usize; rest];
        for (m, t) in target.iter_mut().enumerate() {
            let mut acc = 0usize;
            for j in 0..k {
                let pair = (m / pairs.pow((k - 1 - j) as u32)) % pairs;
                let (a, b) = (pair / d, pair % d);
                acc += (b * d + a) * pairs.pow(j as u32);
            }
            *t = acc;
        }
        for e in 0..de {
            let mut col = vec![linalg::ZERO; n_legs];
            for s in 0..d {
                for (m, &t) in target.iter().enumerate() {
                    col[s * rest + t] = v[(s * de + e) * rest + m];
                }
            }
            columns.push(col);
        }
    }
    let big = DMatrix::from_fn(n_legs, columns.len(), |r, col| columns[col][r]);
    let upsilon = &big * big.adjoint();
    CJIState::new(d, k, DensityMatrix::new(linalg::hermitian_part(&upsilon))?)
}

/// Average map from slot `l` to slot `j`: the system is fed maximally mixed states
/// before `l`, the controls between are identities, and later legs are discarded.
pub fn extract_average_map(u: &CJIState, j: usize, l: usize) -> Result<Channel> {
    let k = u.steps();
    if !(l < j && j <= k) {
        return Err(Error::Range(format!("average map needs l < j <= k, got l = {l}, j = {j}, k = {k}")));
    }
    let d = u.d_sys();
    let first = 2 * (k - j);
    let last = 2 * (k - l) - 1;
    let keep: Vec<usize> = (first..=last).collect();
    let reduced = linalg::partial_trace(u.matrix(), &u.shape(), &keep)?;
    let pairs: Vec<(usize, usize)> = (l + 1..j).map(|m| (2 * (j - m) - 1, 2 * (j - m))).collect();
    let projected = linalg::contract_pairs(&reduced, &SubsystemShape::uniform(d, keep.len()), &pairs)?;
    let choi = projected * c(d.pow((j - l) as u32) as f64, 0.0);
    Channel::from_choi(d, d, linalg::hermitian_part(&choi))
}

/// One site of a matrix-product representation: a matrix per physical index.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsSite {
    physical: Vec<usize>,
    matrices: Vec<ComplexMatrix>,
}

impl MpsSite {
    /// Dimensions of the physical indices, flattened row-major into the matrix list.
    pub fn physical_dims(&self) -> &[usize] {
        &self.physical
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn bond_shape(&self) -> (usize, usize) {
        self.matrices.first().map_or((0, 0), |m| m.shape())
    }
}

/// Matrix-product density operator of a process.
///
/// `sites[0]` holds `M_0` (column vectors over `(eps_0, gamma_0)`, physical
/// `(r_0, s_0)`); `sites[j]` for `j >= 1` uses the `j`-th unitary with physical
/// `(r_j, x_{j-1}, s_j, y_{j-1})`. The last site carries the environment trace
/// and is a row vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MPSProcess {
    d_sys: usize,
    d_env: usize,
    k: usize,
    sites: Vec<MpsSite>,
}

fn unitary_site(u: &ComplexMatrix, d: usize, de: usize, trace_out: bool) -> MpsSite {
    let bond = de * de;
    let mut matrices = Vec::with_capacity(d.pow(4));
    for r in 0..d {
        for x in 0..d {
            for s in 0..d {
                for y in 0..d {
                    let entry = |eps: usize, gam: usize, ep: usize, gp: usize| {
                        u[(r * de + eps, x * de + ep)] * u[(s * de + gam, y * de + gp)].conj()
                    };
                    let m = if trace_out {
                        ComplexMatrix::from_fn(1, bond, |_, col| {
                            (0..de).map(|eps| entry(eps, eps, col / de, col % de)).sum()
                        })
                    } else {
                        ComplexMatrix::from_fn(bond, bond, |row, col| entry(row / de, row % de, col / de, col % de))
                    };
                    matrices.push(m);
                }
            }
        }
    }
    MpsSite { physical: vec![d; 4], matrices }
}

/// Builds the site tensors; `M_0` comes from the eigendecomposition of the initial joint state.
pub fn mps_from_scenario(sc: &Scenario, k: usize) -> Result<MPSProcess> {
    let (d, de) = (sc.d_sys(), sc.d_env());
    if k > sc.steps() {
        return Err(Error::Range(format!("{k} steps requested from a {}-step scenario", sc.steps())));
    }
    let bond = de * de;
    d.pow(4)
        .checked_mul(bond * bond)
        .filter(|&v| v <= MAX_SITE_ENTRIES)
        .ok_or_else(|| Error::SizeGuard(format!("site tensors with d_env = {de} exceed {MAX_SITE_ENTRIES} entries")))?;
    let (probs, vecs) = linalg::eig_hermitian(sc.initial().matrix())?;
    let mut m0 = Vec::with_capacity(d * d);
    for r in 0..d {
        for s in 0..d {
            let mut col = linalg::zeros(bond, 1);
            for (lambda, &p) in probs.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                for eps in 0..de {
                    for gam in 0..de {
                        col[(eps * de + gam, 0)] +=
                            vecs[(r * de + eps, lambda)] * vecs[(s * de + gam, lambda)].conj() * p;
                    }
                }
            }
            m0.push(col);
        }
    }
    let mut sites = vec![MpsSite { physical: vec![d; 2], matrices: m0 }];
    for j in 1..=k {
        sites.push(unitary_site(&sc.unitaries()[j - 1], d, de, j == k));
    }
    Ok(MPSProcess { d_sys: d, d_env: de, k, sites })
}

/// `Q R = m` keeping only the `R` factor.
fn r_factor(m: ComplexMatrix) -> ComplexMatrix {
    m.qr().r()
}

impl MPSProcess {
    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn d_env(&self) -> usize {
        self.d_env
    }

    pub fn steps(&self) -> usize {
        self.k
    }

    pub fn sites(&self) -> &[MpsSite] {
        &self.sites
    }

    /// Nominal bond dimension `d_env^2`.
    pub fn bond_dimension(&self) -> usize {
        self.d_env * self.d_env
    }

    /// Rank across each cut between sites `j` and `j - 1`, for `j = 1..=k`.
    pub fn effective_bond_dimensions(&self) -> Vec<usize> {
        let k = self.k;
        if k == 0 {
            return Vec::new();
        }
        // lefts[j]: R factor of everything from site k down to site j
        let mut lefts = vec![linalg::zeros(0, 0); k + 1];
        let stack_rows = |prev: Option<&ComplexMatrix>, site: &MpsSite| {
            let blocks: Vec<ComplexMatrix> =
                site.matrices.iter().map(|m| prev.map_or_else(|| m.clone(), |r| r * m)).collect();
            let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
            let cols = blocks[0].ncols();
            let mut out = linalg::zeros(rows, cols);
            let mut at = 0;
            for b in &blocks {
                out.view_mut((at, 0), b.shape()).copy_from(b);
                at += b.nrows();
            }
            r_factor(out)
        };
        lefts[k] = stack_rows(None, &self.sites[k]);
        for j in (1..k).rev() {
            lefts[j] = stack_rows(Some(&lefts[j + 1]), &self.sites[j]);
        }
        // rights[j]: L factor of everything from site j down to site 0
        let mut rights = vec![linalg::zeros(0, 0); k];
        let stack_cols = |prev: Option<&ComplexMatrix>, site: &MpsSite| {
            let blocks: Vec<ComplexMatrix> =
                site.matrices.iter().map(|m| prev.map_or_else(|| m.clone(), |l| m * l)).collect();
            let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
            let rows = blocks[0].nrows();
            let mut out = linalg::zeros(rows, cols);
            let mut at = 0;
            for b in &blocks {
                out.view_mut((0, at), b.shape()).copy_from(b);
                at += b.ncols();
            }
            r_factor(out.adjoint()).adjoint()
        };
        rights[0] = stack_cols(None, &self.sites[0]);
        for j in 1..k {
            rights[j] = stack_cols(Some(&rights[j - 1]), &self.sites[j]);
        }
        (1..=k)
            .map(|j| {
                let sv = (&lefts[j] * &rights[j - 1]).singular_values();
                let max = sv.iter().copied().fold(0.0, f64::max);
                if max == 0.0 {
                    0
                } else {
                    sv.iter().filter(|&&s| s > BOND_CUTOFF * max).count()
                }
            })
            .collect()
    }

    /// Contracts the network into the dense CJI state.
    pub fn to_dense(&self) -> Result<CJIState> {
        let d = self.d_sys;
        let k = self.k;
        let n = pow_checked(d, 2 * k + 1, MAX_TENSOR_DIM, "CJI dimension")?;
        // cur[(R * nr + S) * bond + b]
        let mut nr = d;
        let mut bond = self.sites[0].bond_shape().0;
        let mut cur = vec![linalg::ZERO; nr * nr * bond];
        for r in 0..d {
            for s in 0..d {
                let m = &self.sites[0].matrices[r * d + s];
                for b in 0..bond {
                    cur[(r * nr + s) * bond + b] = m[(b, 0)];
                }
            }
        }
        if k == 0 {
            // apply the environment trace directly
            let de = self.d_env;
            let mut out = linalg::zeros(d, d);
            for r in 0..d {
                for s in 0..d {
                    out[(r, s)] = (0..de).map(|e| cur[(r * nr + s) * bond + e * de + e]).sum();
                }
            }
            return CJIState::new(d, 0, DensityMatrix::new(linalg::hermitian_part(&out))?);
        }
        for site in &self.sites[1..] {
            let new_bond = site.bond_shape().0;
            let nr2 = nr * d * d;
            let mut next = vec![linalg::ZERO; nr2 * nr2 * new_bond];
            for (p, m) in site.matrices.iter().enumerate() {
                let (r, x, s, y) = (p / (d * d * d), (p / (d * d)) % d, (p / d) % d, p % d);
                let row_base = (r * d + x) * nr;
                let col_base = (s * d + y) * nr;
                for big_r in 0..nr {
                    for big_s in 0..nr {
                        let src = &cur[(big_r * nr + big_s) * bond..(big_r * nr + big_s + 1) * bond];
                        let dst_at = ((row_base + big_r) * nr2 + col_base + big_s) * new_bond;
                        for b2 in 0..new_bond {
                            let mut acc = linalg::ZERO;
                            for (b, v) in src.iter().enumerate() {
                                acc += m[(b2, b)] * v;
                            }
                            next[dst_at + b2] = acc;
                        }
                    }
                }
            }
            cur = next;
            nr = nr2;
            bond = new_bond;
        }
        debug_assert_eq!(nr, n);
        let scale = 1.0 / d.pow(k as u32) as f64;
        let dense = ComplexMatrix::from_fn(n, n, |r, s| cur[r * n + s] * scale);
        CJIState::new(d, k, DensityMatrix::new(linalg::hermitian_part(&dense))?)
    }
}

/// Pure matrix-product state whose reduction is the CJI state.
///
/// Physical legs are `(r_k, x_{k-1}, ..., x_0, r_0)` followed by the final
/// environment leg `eps_k` and the purification leg `lambda`. Initial
/// eigenvectors enter with weight `sqrt(p_lambda)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureProcessMps {
    d_sys: usize,
    d_env: usize,
    k: usize,
    rank: usize,
    /// `sites[0]`: physical `r_0`, matrix `eps_0 x lambda`; `sites[j]`: physical `(r_j, x_{j-1})`, matrix `eps_j x eps_{j-1}`
    sites: Vec<MpsSite>,
}

pub fn purification(sc: &Scenario, k: usize) -> Result<PureProcessMps> {
    let (d, de) = (sc.d_sys(), sc.d_env());
    if k > sc.steps() {
        return Err(Error::Range(format!("{k} steps requested from a {}-step scenario", sc.steps())));
    }
    let (probs, vecs) = linalg::eig_hermitian(sc.initial().matrix())?;
    let kept: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > linalg::tol::PROB).collect();
    let rank = kept.len();
    let a0 = (0..d)
        .map(|r| ComplexMatrix::from_fn(de, rank, |eps, col| vecs[(r * de + eps, kept[col])] * probs[kept[col]].sqrt()))
        .collect();
    let mut sites = vec![MpsSite { physical: vec![d], matrices: a0 }];
    for u in &sc.unitaries()[..k] {
        let mut mats = Vec::with_capacity(d * d);
        for r in 0..d {
            for x in 0..d {
                mats.push(ComplexMatrix::from_fn(de, de, |eps, ep| u[(r * de + eps, x * de + ep)]));
            }
        }
        sites.push(MpsSite { physical: vec![d; 2], matrices: mats });
    }
    Ok(PureProcessMps { d_sys: d, d_env: de, k, rank, sites })
}

impl PureProcessMps {
    pub fn sites(&self) -> &[MpsSite] {
        &self.sites
    }

    /// Number of retained eigenvectors of the initial state.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dense amplitudes over `(r_k, x_{k-1}, ..., r_0, eps_k, lambda)`, normalized.
    pub fn state_vector(&self) -> Result<Vec<C64>> {
        let d = self.d_sys;
        let k = self.k;
        let n = pow_checked(d, 2 * k + 1, MAX_TENSOR_DIM, "CJI dimension")?;
        let (de, rank) = (self.d_env, self.rank);
        // cur[R]: eps x lambda matrix
        let mut cur: Vec<ComplexMatrix> = self.sites[0].matrices.clone();
        for site in &self.sites[1..] {
            let mut next = Vec::with_capacity(cur.len() * d * d);
            for m in &site.matrices {
                for prev in &cur {
                    next.push(m * prev);
                }
            }
            cur = next;
        }
        let scale = c(1.0 / (d.pow(k as u32) as f64).sqrt(), 0.0);
        let mut out = vec![linalg::ZERO; n * de * rank];
        for (r, m) in cur.iter().enumerate() {
            for eps in 0..de {
                for lambda in 0..rank {
                    out[(r * de + eps) * rank + lambda] = m[(eps, lambda)] * scale;
                }
            }
        }
        Ok(out)
    }

    /// Traces the environment and purification legs.
    pub fn to_cji(&self) -> Result<CJIState> {
        let psi = self.state_vector()?;
        let inner = self.d_env * self.rank;
        let n = psi.len() / inner;
        let m = DMatrix::from_row_slice(n, inner, &psi);
        let dense = &m * m.adjoint();
        CJIState::new(self.d_sys, self.k, DensityMatrix::new(linalg::hermitian_part(&dense))?)
    }
}
