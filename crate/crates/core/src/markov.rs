//! Markovianity tests on scenarios and CJI states.
//!
//! A process is Markovian when the state after a causal break depends only on
//! what is prepared at the break, not on the history before it. The witness
//! enumerates basis histories, which is enough because the basis spans every
//! control. Divisibility is the weaker statement that the averaged maps
//! between slots compose.

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::OperationBasis;
use crate::channel::{compose, Channel};
use crate::cji::CJIState;
use crate::error::{Error, Result};
use crate::evolution::{conditional_environment, Scenario};
use crate::linalg::{self, c, tol, ComplexMatrix};
use crate::state::{relative_entropy_matrices, trace_distance_matrices, DensityMatrix};

pub const DEFAULT_TOL_MARKOV: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    #[serde(rename = "markovian-within-tolerance")]
    Markovian,
    NonMarkovian,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Markovian => "markovian-within-tolerance",
            Verdict::NonMarkovian => "non-markovian",
        })
    }
}

/// A basis history before a break: `(mu, nu)` per prefix slot, then the
/// POVM outcome at the break.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct History {
    pub prefix: Vec<(usize, usize)>,
    pub outcome: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub first: History,
    pub second: History,
    pub break_step: usize,
    pub final_step: usize,
    /// index of the preparation at the break
    pub prep: usize,
    pub first_state: DensityMatrix,
    pub second_state: DensityMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub verdict: Verdict,
    pub max_discrepancy: f64,
    pub witness: Option<Witness>,
    pub branches_skipped: usize,
    pub branches_evaluated: usize,
    pub tol_markov: f64,
}

/// Per history: conditional outputs indexed `[l - break - 1][prep]`.
type Conditionals = Vec<Vec<ComplexMatrix>>;

struct Enumerator<'a> {
    sc: &'a Scenario,
    bases: &'a [OperationBasis],
    break_step: usize,
}

impl Enumerator<'_> {
    fn leaf(&self, rho: &ComplexMatrix, prefix: &[(usize, usize)], out: &mut Vec<(History, Option<Conditionals>)>) {
        let (d, de) = (self.sc.d_sys(), self.sc.d_env());
        let k = self.break_step;
        let basis = &self.bases[k];
        for (mu, effect) in basis.povm().iter().enumerate() {
            let env = conditional_environment(effect, rho, d, de);
            let p = env.trace().re;
            let history = History { prefix: prefix.to_vec(), outcome: mu };
            if p < tol::PROB {
                out.push((history, None));
                continue;
            }
            let env = env / c(p, 0.0);
            out.push((history, Some(self.propagate(&env, basis.preparations()))));
        }
    }

    fn propagate(&self, env: &ComplexMatrix, preps: &[DensityMatrix]) -> Conditionals {
        let k = self.break_step;
        let steps = self.sc.steps();
        let shape = self.sc.joint_shape();
        let mut by_l = vec![Vec::with_capacity(preps.len()); steps - k];
        for prep in preps {
            let mut joint = linalg::kron(prep.matrix(), env);
            for l in k + 1..=steps {
                joint = self.sc.apply_unitary(l - 1, &joint, 1);
                let sys = linalg::partial_trace(&joint, &shape, &[0]).expect("joint shape");
                by_l[l - k - 1].push(linalg::hermitian_part(&sys));
            }
        }
        by_l
    }

    fn walk(&self, j: usize, rho: ComplexMatrix, prefix: &mut Vec<(usize, usize)>, out: &mut Vec<(History, Option<Conditionals>)>) {
        if j == self.break_step {
            self.leaf(&rho, prefix, out);
            return;
        }
        let (d, de) = (self.sc.d_sys(), self.sc.d_env());
        let basis = &self.bases[j];
        for (mu, effect) in basis.povm().iter().enumerate() {
            let env = conditional_environment(effect, &rho, d, de);
            for (nu, prep) in basis.preparations().iter().enumerate() {
                let next = self.sc.apply_unitary(j, &linalg::kron(prep.matrix(), &env), 1);
                prefix.push((mu, nu));
                self.walk(j + 1, next, prefix, out);
                prefix.pop();
            }
        }
    }

    fn enumerate(&self) -> Vec<(History, Option<Conditionals>)> {
        if self.break_step == 0 {
            let mut out = Vec::new();
            self.leaf(self.sc.initial().matrix(), &[], &mut out);
            return out;
        }
        let (d, de) = (self.sc.d_sys(), self.sc.d_env());
        let basis = &self.bases[0];
        (0..basis.len())
            .into_par_iter()
            .map(|e| {
                let (mu, nu) = basis.split_index(e);
                let env = conditional_environment(&basis.povm()[mu], self.sc.initial().matrix(), d, de);
                let next = self.sc.apply_unitary(0, &linalg::kron(basis.preparations()[nu].matrix(), &env), 1);
                let mut out = Vec::new();
                self.walk(1, next, &mut vec![(mu, nu)], &mut out);
                out
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }
}

fn check_bases(sc: &Scenario, bases: &[OperationBasis]) -> Result<()> {
    if bases.len() != sc.steps() {
        return Err(Error::param(format!("{} bases for a {}-step scenario", bases.len(), sc.steps())));
    }
    if bases.iter().any(|b| b.dim() != sc.d_sys()) {
        return Err(Error::dim("basis dimension differs from the system"));
    }
    Ok(())
}

/// Searches all basis histories for a pair whose conditional states differ.
pub fn markov_witness(sc: &Scenario, bases: &[OperationBasis], tol_markov: f64) -> Result<WitnessReport> {
    if sc.steps() < 2 {
        return Err(Error::param("the witness needs at least two steps"));
    }
    check_bases(sc, bases)?;
    let mut best = 0.0f64;
    let mut witness = None;
    let mut skipped = 0;
    let mut evaluated = 0;
    for k in 0..sc.steps() {
        let histories = Enumerator { sc, bases, break_step: k }.enumerate();
        let live: Vec<(&History, &Conditionals)> = histories
            .iter()
            .filter_map(|(h, cond)| cond.as_ref().map(|c| (h, c)))
            .collect();
        skipped += histories.len() - live.len();
        evaluated += live.len();
        for l in k + 1..=sc.steps() {
            for s in 0..bases[k].n_preps() {
                let idx = l - k - 1;
                // rows of this scan are independent; keep the first maximum in lexicographic order
                let local = (0..live.len())
                    .into_par_iter()
                    .map(|a| {
                        let mut top = (0.0f64, a, a);
                        for b in a + 1..live.len() {
                            let dist = trace_distance_matrices(&live[a].1[idx][s], &live[b].1[idx][s])
                                .expect("equal dimensions");
                            if dist > top.0 {
                                top = (dist, a, b);
                            }
                        }
                        top
                    })
                    .collect::<Vec<_>>();
                for (dist, a, b) in local {
                    if dist > best {
                        best = dist;
                        witness = Some(Witness {
                            first: live[a].0.clone(),
                            second: live[b].0.clone(),
                            break_step: k,
                            final_step: l,
                            prep: s,
                            first_state: DensityMatrix::new(live[a].1[idx][s].clone())?,
                            second_state: DensityMatrix::new(live[b].1[idx][s].clone())?,
                        });
                    }
                }
            }
        }
    }
    let verdict = if best > tol_markov { Verdict::NonMarkovian } else { Verdict::Markovian };
    if verdict == Verdict::Markovian {
        witness = None;
    }
    Ok(WitnessReport {
        verdict,
        max_discrepancy: best,
        witness,
        branches_skipped: skipped,
        branches_evaluated: evaluated,
        tol_markov,
    })
}

/// [`markov_witness`] with the standard basis at each slot.
pub fn markov_witness_standard(sc: &Scenario, tol_markov: f64) -> Result<WitnessReport> {
    let basis = OperationBasis::standard(sc.d_sys())?;
    markov_witness(sc, &vec![basis; sc.steps()], tol_markov)
}

/// `sum_s rho_s (x) D_s^T` for outputs `rho_s` of the basis preparations.
fn map_from_outputs(basis: &OperationBasis, outputs: &[ComplexMatrix]) -> Result<Channel> {
    let d = basis.dim();
    let mut choi = linalg::zeros(d * d, d * d);
    for (rho, dual) in outputs.iter().zip(basis.duals_prep()) {
        choi += linalg::kron(rho, &dual.transpose());
    }
    Channel::from_choi(d, d, linalg::hermitian_part(&choi))
}

/// Map from the preparation at the break to the state at `final_step`, given a history.
pub fn conditional_map(
    sc: &Scenario,
    bases: &[OperationBasis],
    history: &History,
    break_step: usize,
    final_step: usize,
) -> Result<Channel> {
    check_bases(sc, bases)?;
    if history.prefix.len() != break_step || break_step >= final_step || final_step > sc.steps() {
        return Err(Error::Range(format!(
            "history of length {} with break {break_step} and final step {final_step}",
            history.prefix.len()
        )));
    }
    let (d, de) = (sc.d_sys(), sc.d_env());
    let mut rho = sc.initial().matrix().clone();
    for (j, &(mu, nu)) in history.prefix.iter().enumerate() {
        let env = conditional_environment(&bases[j].povm()[mu], &rho, d, de);
        rho = sc.apply_unitary(j, &linalg::kron(bases[j].preparations()[nu].matrix(), &env), 1);
    }
    let env = conditional_environment(&bases[break_step].povm()[history.outcome], &rho, d, de);
    let p = env.trace().re;
    if p < tol::PROB {
        return Err(Error::ImpossibleBranch(p));
    }
    let en = Enumerator { sc, bases, break_step };
    let outputs = en.propagate(&(env / c(p, 0.0)), bases[break_step].preparations());
    map_from_outputs(&bases[break_step], &outputs[final_step - break_step - 1])
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisibilityReport {
    pub divisible: bool,
    /// divisible, and every reconstructed map passes the CPTP check
    pub cp_divisible: bool,
    /// largest Choi-state trace distance between `L_{l:j}` and `L_{l:k} o L_{k:j}`
    pub max_residual: f64,
    /// `(l, k, j)` realizing the maximum
    pub worst: Option<(usize, usize, usize)>,
    /// `((l, j), L_{l:j})` for all `j < l`
    pub maps: Vec<((usize, usize), Channel)>,
}

impl DivisibilityReport {
    pub fn map(&self, l: usize, j: usize) -> Option<&Channel> {
        self.maps.iter().find(|(key, _)| *key == (l, j)).map(|(_, ch)| ch)
    }
}

/// Environment at slot `j` when every earlier slot is fed the maximally mixed state.
fn averaged_environment(sc: &Scenario, j: usize) -> Result<ComplexMatrix> {
    let shape = sc.joint_shape();
    let mixed = DensityMatrix::maximally_mixed(sc.d_sys());
    let mut env = linalg::partial_trace(sc.initial().matrix(), &shape, &[1])?;
    for m in 0..j {
        let joint = sc.apply_unitary(m, &linalg::kron(mixed.matrix(), &env), 1);
        env = linalg::partial_trace(&joint, &shape, &[1])?;
    }
    Ok(env)
}

/// Reconstructs every averaged map `L_{l:j}` by fresh-preparation tomography
/// and tests whether they compose.
pub fn is_divisible(sc: &Scenario, tolerance: f64) -> Result<DivisibilityReport> {
    let basis = OperationBasis::standard(sc.d_sys())?;
    let steps = sc.steps();
    let bases = vec![basis.clone(); steps];
    let mut maps = Vec::new();
    for j in 0..steps {
        let env = averaged_environment(sc, j)?;
        let outputs = Enumerator { sc, bases: &bases, break_step: j }.propagate(&env, basis.preparations());
        for l in j + 1..=steps {
            maps.push(((l, j), map_from_outputs(&basis, &outputs[l - j - 1])?));
        }
    }
    let lookup = |l: usize, j: usize| &maps.iter().find(|(key, _)| *key == (l, j)).expect("computed").1;
    let mut max_residual = 0.0f64;
    let mut worst = None;
    for j in 0..steps {
        for k in j + 1..steps {
            for l in k + 1..=steps {
                let direct = lookup(l, j).choi_state()?;
                let chained = compose(lookup(l, k), lookup(k, j))?.choi_state()?;
                let r = trace_distance_matrices(direct.matrix(), chained.matrix())?;
                if r > max_residual {
                    max_residual = r;
                    worst = Some((l, k, j));
                }
            }
        }
    }
    let divisible = max_residual <= tolerance;
    let all_cptp = maps.iter().all(|(_, ch)| ch.is_cptp(tol::PSD).cptp);
    Ok(DivisibilityReport { divisible, cp_divisible: divisible && all_cptp, max_residual, worst, maps })
}

/// Product of the marginals on `[r_k x_{k-1}], ..., [r_1 x_0], [r_0]`.
pub fn markov_product(u: &CJIState) -> Result<ComplexMatrix> {
    let k = u.steps();
    let shape = u.shape();
    let mut factors = Vec::with_capacity(k + 1);
    for p in 0..k {
        factors.push(linalg::partial_trace(u.matrix(), &shape, &[2 * p, 2 * p + 1])?);
    }
    factors.push(linalg::partial_trace(u.matrix(), &shape, &[2 * k])?);
    Ok(linalg::kron_all(factors.iter()))
}

/// Relative entropy (nats) from the CJI state to the product of its step marginals; `+inf` off support.
pub fn non_markovianity(u: &CJIState) -> Result<f64> {
    relative_entropy_matrices(u.matrix(), &markov_product(u)?)
}

/// `exp(-n N)`: chance of mistaking the process for its Markov approximation after `n` samples.
pub fn confusion_probability(n_measurements: u64, nm: f64) -> Result<f64> {
    if nm.is_nan() || nm < 0.0 {
        return Err(Error::param(format!("non-Markovianity must be non-negative, got {nm}")));
    }
    if n_measurements == 0 {
        return Ok(1.0);
    }
    Ok((-(n_measurements as f64) * nm).exp())
}
