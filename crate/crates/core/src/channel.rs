//! Completely positive maps in Choi form.
//!
//! Convention: `C = sum_ij A(|i><j|) (x) |i><j|`, output factor on the left.
//! Entry `C[(x, r), (y, s)] = <x| A(|r><s|) |y>`, so that
//! `A(rho)[x, y] = sum_rs C[(x, r), (y, s)] rho[r, s]`.

use crate::error::{Error, Result};
use crate::linalg::{self, c, tol, ComplexMatrix, SubsystemShape, ZERO};
use crate::state::{DensityMatrix, SubnormalizedState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceClass {
    TracePreserving,
    TraceNonincreasing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    choi: ComplexMatrix,
    trace_class: TraceClass,
}

/// Outcome of a complete-positivity / trace-preservation check.
#[derive(Clone, Debug, PartialEq)]
pub struct CptpReport {
    pub cptp: bool,
    pub min_eigenvalue: f64,
    pub hermitian_residual: f64,
    /// Max entry of `tr_out(C) - I`.
    pub tp_residual: f64,
}

/// Builds the Choi matrix of an arbitrary linear map by evaluating it on matrix units.
pub fn choi_of_map<F>(dim_in: usize, dim_out: usize, map: F) -> ComplexMatrix
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    let n = dim_out * dim_in;
    let mut choi = linalg::zeros(n, n);
    for i in 0..dim_in {
        for j in 0..dim_in {
            let mut unit = linalg::zeros(dim_in, dim_in);
            unit[(i, j)] = linalg::ONE;
            let out = map(&unit);
            for x in 0..dim_out {
                for y in 0..dim_out {
                    choi[(x * dim_in + i, y * dim_in + j)] = out[(x, y)];
                }
            }
        }
    }
    choi
}

/// Applies a Choi matrix to an input operator (any linear extension, no checks).
pub fn apply_choi(choi: &ComplexMatrix, dim_in: usize, dim_out: usize, rho: &ComplexMatrix) -> ComplexMatrix {
    apply_choi_to_first_factor(choi, dim_in, dim_out, rho, 1)
}

/// Applies a Choi map to factor 0 of a bipartite operator on `C^dim_in (x) C^rest`.
pub fn apply_choi_to_first_factor(
    choi: &ComplexMatrix,
    dim_in: usize,
    dim_out: usize,
    rho: &ComplexMatrix,
    rest: usize,
) -> ComplexMatrix {
    debug_assert_eq!(rho.nrows(), dim_in * rest);
    let mut out = linalg::zeros(dim_out * rest, dim_out * rest);
    for r in 0..dim_in {
        for s in 0..dim_in {
            // block rho[(r, .), (s, .)]
            let block = rho.view((r * rest, s * rest), (rest, rest));
            for x in 0..dim_out {
                for y in 0..dim_out {
                    let coeff = choi[(x * dim_in + r, y * dim_in + s)];
                    if coeff == ZERO {
                        continue;
                    }
                    let mut target = out.view_mut((x * rest, y * rest), (rest, rest));
                    target.zip_apply(&block, |t, b| *t += coeff * b);
                }
            }
        }
    }
    out
}

/// Choi of `later . earlier` for maps given by Choi matrices.
pub fn compose_choi(
    later: &ComplexMatrix,
    earlier: &ComplexMatrix,
    dim_in: usize,
    dim_mid: usize,
    dim_out: usize,
) -> ComplexMatrix {
    let n = dim_out * dim_in;
    let mut out = linalg::zeros(n, n);
    for o in 0..dim_out {
        for i in 0..dim_in {
            for o2 in 0..dim_out {
                for i2 in 0..dim_in {
                    let mut acc = ZERO;
                    for m in 0..dim_mid {
                        for m2 in 0..dim_mid {
                            acc += later[(o * dim_mid + m, o2 * dim_mid + m2)]
                                * earlier[(m * dim_in + i, m2 * dim_in + i2)];
                        }
                    }
                    out[(o * dim_in + i, o2 * dim_in + i2)] = acc;
                }
            }
        }
    }
    out
}

/// CP and TP diagnostics for an arbitrary candidate Choi matrix.
pub fn check_cptp(dim_in: usize, dim_out: usize, choi: &ComplexMatrix, tolerance: f64) -> Result<CptpReport> {
    let n = dim_in * dim_out;
    if choi.nrows() != n || choi.ncols() != n {
        return Err(Error::dim("Choi matrix does not match channel dimensions"));
    }
    let hermitian_residual = linalg::hermitian_residual(choi);
    let min_eigenvalue = linalg::min_eigenvalue(&linalg::hermitian_part(choi))?;
    let marginal = input_marginal(choi, dim_in, dim_out);
    let tp_residual = linalg::max_abs_diff(&marginal, &linalg::identity(dim_in));
    Ok(CptpReport {
        cptp: hermitian_residual <= tolerance && min_eigenvalue >= -tolerance && tp_residual <= tolerance,
        min_eigenvalue,
        hermitian_residual,
        tp_residual,
    })
}

/// `tr_out(C)` as a matrix on the input space.
pub fn input_marginal(choi: &ComplexMatrix, dim_in: usize, dim_out: usize) -> ComplexMatrix {
    let shape = SubsystemShape::new(vec![dim_out, dim_in]).expect("positive dims");
    linalg::partial_trace(choi, &shape, &[1]).expect("shape matches")
}

impl Channel {
    /// Validates complete positivity and classifies the trace behaviour.
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: ComplexMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if choi.nrows() != n || choi.ncols() != n || n == 0 {
            return Err(Error::dim(format!(
                "Choi matrix {}x{} for a {dim_in} -> {dim_out} channel",
                choi.nrows(),
                choi.ncols()
            )));
        }
        let scale = linalg::max_abs(&choi).max(1.0);
        let resid = linalg::hermitian_residual(&choi);
        if resid > tol::HERM * scale {
            return Err(Error::NotHermitian(resid));
        }
        let min = linalg::min_eigenvalue(&choi)?;
        if min < -tol::PSD * scale {
            return Err(Error::NotPositive(min));
        }
        let marginal = input_marginal(&choi, dim_in, dim_out);
        let trace_class = if linalg::max_abs_diff(&marginal, &linalg::identity(dim_in)) <= tol::TRACE {
            TraceClass::TracePreserving
        } else {
            let slack = linalg::identity(dim_in) - &marginal;
            let min_slack = linalg::min_eigenvalue(&linalg::hermitian_part(&slack))?;
            if min_slack < -tol::PSD {
                return Err(Error::Trace(format!(
                    "map increases trace (sum K^dag K exceeds identity by {:e})",
                    -min_slack
                )));
            }
            TraceClass::TraceNonincreasing
        };
        Ok(Self { dim_in, dim_out, choi, trace_class })
    }

    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::param("empty Kraus list"))?;
        let (dim_out, dim_in) = first.shape();
        if kraus.iter().any(|k| k.shape() != (dim_out, dim_in)) {
            return Err(Error::dim("Kraus operators differ in shape"));
        }
        let choi = choi_of_map(dim_in, dim_out, |rho| {
            kraus.iter().fold(linalg::zeros(dim_out, dim_out), |acc, k| acc + k * rho * k.adjoint())
        });
        Self::from_choi(dim_in, dim_out, choi)
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(&linalg::identity(d)).expect("identity is unitary")
    }

    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        let resid = linalg::max_abs_diff(&(u.adjoint() * u), &linalg::identity(u.ncols()));
        if !u.is_square() || resid > 1e-10 {
            return Err(Error::NotUnitary(resid));
        }
        Self::from_kraus(std::slice::from_ref(u))
    }

    /// `rho -> prep * tr[effect rho]`, Choi `prep (x) effect^T`.
    pub fn measure_prepare(effect: &ComplexMatrix, prep: &DensityMatrix) -> Result<Self> {
        if !effect.is_square() {
            return Err(Error::dim("effect must be square"));
        }
        let min = linalg::min_eigenvalue(effect)?;
        if min < -tol::PSD {
            return Err(Error::NotPositive(min));
        }
        let d = effect.nrows();
        let slack = linalg::min_eigenvalue(&(linalg::identity(d) - effect))?;
        if slack < -tol::PSD {
            return Err(Error::param("effect exceeds identity"));
        }
        let choi = linalg::kron(prep.matrix(), &effect.transpose());
        Self::from_choi(d, prep.dim(), choi)
    }

    /// Replaces any input with `state`.
    pub fn replace(d_in: usize, state: &DensityMatrix) -> Self {
        Self::measure_prepare(&linalg::identity(d_in), state).expect("identity effect is valid")
    }

    /// Completely dephasing map in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let kraus: Vec<_> = (0..d).map(|i| linalg::projector(&linalg::ket(d, i))).collect();
        Self::from_kraus(&kraus).expect("projectors form a valid channel")
    }

    /// `rho -> (1 - p) rho + p tr(rho) I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0 + 1.0 / ((d * d) as f64 - 1.0)).contains(&p) {
            return Err(Error::param(format!("depolarizing strength {p} out of range")));
        }
        let id = Self::identity(d);
        let mixed = Self::replace(d, &DensityMatrix::maximally_mixed(d));
        Self::from_choi(d, d, id.choi * c(1.0 - p, 0.0) + mixed.choi * c(p, 0.0))
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn trace_class(&self) -> TraceClass {
        self.trace_class
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_class == TraceClass::TracePreserving
    }

    /// Raw action on any operator of the input dimension.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.dim_in || rho.ncols() != self.dim_in {
            return Err(Error::dim(format!(
                "channel input dimension {} but operator is {}x{}",
                self.dim_in,
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(apply_choi(&self.choi, self.dim_in, self.dim_out, rho))
    }

    pub fn is_cptp(&self, tolerance: f64) -> CptpReport {
        check_cptp(self.dim_in, self.dim_out, &self.choi, tolerance).expect("valid channel dims")
    }

    /// Kraus operators from the Choi eigendecomposition.
    pub fn kraus(&self) -> Vec<ComplexMatrix> {
        let (vals, vecs) = linalg::eig_hermitian(&self.choi).expect("Choi is Hermitian");
        vals.iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-14)
            .map(|(col, &v)| {
                let scale = v.sqrt();
                ComplexMatrix::from_fn(self.dim_out, self.dim_in, |x, r| {
                    vecs[(x * self.dim_in + r, col)] * scale
                })
            })
            .collect()
    }

    /// Normalized Choi state `C / dim_in`.
    pub fn choi_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::normalized(self.choi.clone())
    }
}

/// Applies a channel to a state; the output weight is the success probability.
pub fn apply_channel(ch: &Channel, rho: &DensityMatrix) -> Result<SubnormalizedState> {
    SubnormalizedState::new(linalg::hermitian_part(&ch.apply_matrix(rho.matrix())?))
}

/// `later . earlier`.
pub fn compose(later: &Channel, earlier: &Channel) -> Result<Channel> {
    if earlier.dim_out != later.dim_in {
        return Err(Error::dim(format!(
            "cannot feed a {}-dim output into a {}-dim input",
            earlier.dim_out, later.dim_in
        )));
    }
    let choi = compose_choi(&later.choi, &earlier.choi, earlier.dim_in, earlier.dim_out, later.dim_out);
    Channel::from_choi(earlier.dim_in, later.dim_out, linalg::hermitian_part(&choi))
}

/// Affine combination `sum_i w_i C_i` of channels; errors if the result is not CP.
pub fn mix(weights: &[f64], channels: &[&Channel]) -> Result<Channel> {
    let first = channels.first().ok_or_else(|| Error::param("empty mixture"))?;
    if weights.len() != channels.len() {
        return Err(Error::param("weights and channels differ in length"));
    }
    let mut choi = linalg::zeros(first.choi.nrows(), first.choi.ncols());
    for (w, ch) in weights.iter().zip(channels) {
        if ch.dim_in != first.dim_in || ch.dim_out != first.dim_out {
            return Err(Error::dim("mixture of channels with different dimensions"));
        }
        choi += &ch.choi * c(*w, 0.0);
    }
    Channel::from_choi(first.dim_in, first.dim_out, choi)
}
