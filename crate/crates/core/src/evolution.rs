//! Open-system circuits: joint unitaries on `S (x) E` interleaved with
//! controls on `S`.
//!
//! Slot `j` holds the control applied at step `j`, immediately followed by
//! `unitaries[j]`, so evolving to step `k` applies slots `0..k`.

use crate::channel::{apply_choi_to_first_factor, Channel};
use crate::error::{Error, Result};
use crate::linalg::{self, tol, ComplexMatrix, SubsystemShape, C64};
use crate::state::{DensityMatrix, SubnormalizedState};

/// Largest joint dimension the simulator will allocate.
pub const MAX_JOINT_DIM: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    d_sys: usize,
    d_env: usize,
    initial: DensityMatrix,
    unitaries: Vec<ComplexMatrix>,
    labels: Option<Vec<f64>>,
    diagonals: Vec<Option<Vec<C64>>>,
}

impl Scenario {
    pub fn new(
        d_sys: usize,
        d_env: usize,
        initial: DensityMatrix,
        unitaries: Vec<ComplexMatrix>,
        labels: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = d_sys * d_env;
        if n == 0 {
            return Err(Error::dim("system and environment dimensions must be positive"));
        }
        if n > MAX_JOINT_DIM {
            return Err(Error::SizeGuard(format!("joint dimension {n} exceeds {MAX_JOINT_DIM}")));
        }
        if initial.dim() != n {
            return Err(Error::dim(format!(
                "initial state has dimension {}, expected {n}",
                initial.dim()
            )));
        }
        let mut diagonals = Vec::with_capacity(unitaries.len());
        for (i, u) in unitaries.iter().enumerate() {
            if u.shape() != (n, n) {
                return Err(Error::dim(format!("unitary {i} is not {n}x{n}")));
            }
            if linalg::is_diagonal(u) {
                let d: Vec<C64> = (0..n).map(|a| u[(a, a)]).collect();
                let worst = d.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
                if worst > 1e-10 || !worst.is_finite() {
                    return Err(Error::NotUnitary(worst));
                }
                diagonals.push(Some(d));
            } else {
                let resid = linalg::max_abs_diff(&(u.adjoint() * u), &linalg::identity(n));
                if resid > 1e-10 || !resid.is_finite() {
                    return Err(Error::NotUnitary(resid));
                }
                diagonals.push(None);
            }
        }
        if let Some(l) = &labels {
            if l.len() != unitaries.len() + 1 {
                return Err(Error::param(format!(
                    "{} time labels for {} steps (need one per step plus the start)",
                    l.len(),
                    unitaries.len()
                )));
            }
        }
        Ok(Self { d_sys, d_env, initial, unitaries, labels, diagonals })
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn d_env(&self) -> usize {
        self.d_env
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.initial
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    /// Number of joint unitaries `K`.
    pub fn steps(&self) -> usize {
        self.unitaries.len()
    }

    pub fn joint_shape(&self) -> SubsystemShape {
        SubsystemShape::new(vec![self.d_sys, self.d_env]).expect("positive dims")
    }

    /// Reduced initial system state `tr_E rho_0`.
    pub fn initial_system(&self) -> DensityMatrix {
        self.initial
            .partial_trace(&self.joint_shape(), &[0])
            .expect("shape matches")
    }

    /// Same dynamics from a different joint initial state.
    pub fn with_initial(&self, initial: DensityMatrix) -> Result<Self> {
        Self::new(self.d_sys, self.d_env, initial, self.unitaries.clone(), self.labels.clone())
    }

    /// The first `k` steps only.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k > self.steps() {
            return Err(Error::Range(format!("{k} steps requested from a {}-step scenario", self.steps())));
        }
        let labels = self.labels.as_ref().map(|l| l[..=k].to_vec());
        Self::new(self.d_sys, self.d_env, self.initial.clone(), self.unitaries[..k].to_vec(), labels)
    }

    /// Conjugates `rho` on `S (x) E (x) rest` by `unitaries[step]` acting on the leading factors.
    pub(crate) fn apply_unitary(&self, step: usize, rho: &ComplexMatrix, rest: usize) -> ComplexMatrix {
        match &self.diagonals[step] {
            Some(diag) => conjugate_diagonal_leading(diag, rho, rest),
            None => conjugate_leading(&self.unitaries[step], rho, rest),
        }
    }
}

/// `(V (x) I_rest) rho (V (x) I_rest)^dag`.
pub(crate) fn conjugate_leading(v: &ComplexMatrix, rho: &ComplexMatrix, rest: usize) -> ComplexMatrix {
    if rest == 1 {
        return v * rho * v.adjoint();
    }
    let left = left_multiply_leading(v, rho, rest);
    left_multiply_leading(v, &left.adjoint(), rest).adjoint()
}

fn left_multiply_leading(v: &ComplexMatrix, x: &ComplexMatrix, rest: usize) -> ComplexMatrix {
    let t = v.nrows();
    let n = x.ncols();
    let mut out = linalg::zeros(t * rest, n);
    for col in 0..n {
        for a in 0..t {
            for a2 in 0..t {
                let coeff = v[(a, a2)];
                if coeff == linalg::ZERO {
                    continue;
                }
                for b in 0..rest {
                    out[(a * rest + b, col)] += coeff * x[(a2 * rest + b, col)];
                }
            }
        }
    }
    out
}

fn conjugate_diagonal_leading(diag: &[C64], rho: &ComplexMatrix, rest: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| {
        diag[i / rest] * rho[(i, j)] * diag[j / rest].conj()
    })
}

/// A control acting jointly on several time slots through a carried ancilla.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedControl {
    d_sys: usize,
    ancilla: DensityMatrix,
    interactions: Vec<ComplexMatrix>,
    slots: Vec<usize>,
}

/// Builds a correlated control: `interactions[i]` acts on `S (x) ancilla` at `slots[i]`.
pub fn correlated_control(
    ancilla_state: DensityMatrix,
    interactions: Vec<ComplexMatrix>,
    slots: Vec<usize>,
) -> Result<CorrelatedControl> {
    let da = ancilla_state.dim();
    if interactions.is_empty() || interactions.len() != slots.len() {
        return Err(Error::param("need one interaction per slot"));
    }
    let n = interactions[0].nrows();
    if !n.is_multiple_of(da) {
        return Err(Error::dim("interaction dimension is not a multiple of the ancilla dimension"));
    }
    let d_sys = n / da;
    for v in &interactions {
        if v.shape() != (n, n) {
            return Err(Error::dim("interactions differ in shape"));
        }
        let resid = linalg::max_abs_diff(&(v.adjoint() * v), &linalg::identity(n));
        if resid > 1e-10 {
            return Err(Error::NotUnitary(resid));
        }
    }
    if slots.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("correlated control slots must be strictly increasing"));
    }
    Ok(CorrelatedControl { d_sys, ancilla: ancilla_state, interactions, slots })
}

impl CorrelatedControl {
    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn ancilla(&self) -> &DensityMatrix {
        &self.ancilla
    }

    pub fn interactions(&self) -> &[ComplexMatrix] {
        &self.interactions
    }

    /// Joint Choi on legs `(x_{s_n}, r_{s_n}, ..., x_{s_1}, r_{s_1})`, latest slot first.
    pub fn choi(&self) -> ComplexMatrix {
        let d = self.d_sys;
        let n = self.slots.len();
        let da = self.ancilla.dim();
        let dn = d.pow(n as u32);
        // factors: S_1..S_n, A
        let mut dims = vec![d; n];
        dims.push(da);
        let shape = SubsystemShape::new(dims).expect("positive dims");
        let mut w = linalg::identity(dn * da);
        for (i, v) in self.interactions.iter().enumerate() {
            let lifted = linalg::embed_operator(v, &shape, &[i, n]).expect("dims checked");
            w = lifted * w;
        }
        let keep: Vec<usize> = (0..n).collect();
        let big = crate::channel::choi_of_map(dn, dn, |x| {
            let joint = linalg::kron(x, self.ancilla.matrix());
            linalg::partial_trace(&(&w * joint * w.adjoint()), &shape, &keep).expect("dims checked")
        });
        // big factors: out_1..out_n, in_1..in_n
        let order: Vec<usize> = (0..n).rev().flat_map(|m| [m, n + m]).collect();
        linalg::permute_subsystems(&big, &SubsystemShape::uniform(d, 2 * n), &order).expect("valid order")
    }

    /// Channel seen at the `i`-th slot with the other slots fed `I/d` and discarded.
    pub fn slot_marginal(&self, i: usize) -> Result<Channel> {
        let n = self.slots.len();
        if i >= n {
            return Err(Error::Range(format!("slot {i} of a {n}-slot block")));
        }
        let d = self.d_sys;
        // leg pair of slot i sits at legs (2(n-1-i), 2(n-1-i)+1)
        let pos = 2 * (n - 1 - i);
        let marginal = linalg::partial_trace(&self.choi(), &SubsystemShape::uniform(d, 2 * n), &[pos, pos + 1])?;
        Channel::from_choi(d, d, linalg::hermitian_part(&marginal) / linalg::c(d.pow(n as u32 - 1) as f64, 0.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Slot {
    Single(Channel),
    /// `part`-th slot of `blocks[block]`.
    Correlated { block: usize, part: usize },
}

/// Controls for consecutive slots `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSequence {
    d_sys: usize,
    slots: Vec<Slot>,
    blocks: Vec<CorrelatedControl>,
}

impl ControlSequence {
    pub fn new(d_sys: usize, channels: Vec<Channel>) -> Result<Self> {
        if channels.iter().any(|c| c.dim_in() != d_sys || c.dim_out() != d_sys) {
            return Err(Error::dim(format!("controls must act on the {d_sys}-dim system")));
        }
        Ok(Self { d_sys, slots: channels.into_iter().map(Slot::Single).collect(), blocks: vec![] })
    }

    pub fn identity(d_sys: usize, k: usize) -> Self {
        Self::new(d_sys, vec![Channel::identity(d_sys); k]).expect("identity channels fit")
    }

    pub fn empty(d_sys: usize) -> Self {
        Self::identity(d_sys, 0)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn blocks(&self) -> &[CorrelatedControl] {
        &self.blocks
    }

    pub fn push(&mut self, ch: Channel) -> Result<()> {
        if ch.dim_in() != self.d_sys || ch.dim_out() != self.d_sys {
            return Err(Error::dim("control does not act on the system"));
        }
        self.slots.push(Slot::Single(ch));
        Ok(())
    }

    /// Replaces the control at `slot` with a single-step channel.
    pub fn set(&mut self, slot: usize, ch: Channel) -> Result<()> {
        if ch.dim_in() != self.d_sys || ch.dim_out() != self.d_sys {
            return Err(Error::dim("control does not act on the system"));
        }
        match self.slots.get(slot) {
            Some(Slot::Single(_)) => {
                self.slots[slot] = Slot::Single(ch);
                Ok(())
            }
            Some(Slot::Correlated { .. }) => Err(Error::param(format!("slot {slot} belongs to a correlated block"))),
            None => Err(Error::Range(format!("slot {slot} of {}", self.slots.len()))),
        }
    }

    /// Installs a correlated block over its slots, which must currently hold single controls.
    pub fn add_correlated(&mut self, block: CorrelatedControl) -> Result<()> {
        if block.d_sys != self.d_sys {
            return Err(Error::dim("correlated control acts on a different system dimension"));
        }
        for &s in &block.slots {
            match self.slots.get(s) {
                Some(Slot::Single(_)) => {}
                Some(_) => return Err(Error::param(format!("slot {s} already holds a correlated block"))),
                None => return Err(Error::Range(format!("slot {s} beyond {} slots", self.slots.len()))),
            }
        }
        let id = self.blocks.len();
        for (part, &s) in block.slots.iter().enumerate() {
            self.slots[s] = Slot::Correlated { block: id, part };
        }
        self.blocks.push(block);
        Ok(())
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.slots.iter().all(|s| match s {
            Slot::Single(c) => c.is_trace_preserving(),
            Slot::Correlated { .. } => true,
        })
    }

    /// Full control operator on legs `(x_{k-1}, r_{k-1}, ..., x_0, r_0)`.
    pub fn full_choi(&self) -> ComplexMatrix {
        let d = self.d_sys;
        let k = self.slots.len();
        // factors in kron order, each listing the slots it covers (latest first)
        let mut pieces: Vec<(Vec<usize>, ComplexMatrix)> = Vec::new();
        for (j, s) in self.slots.iter().enumerate() {
            if let Slot::Single(c) = s {
                pieces.push((vec![j], c.choi().clone()));
            }
        }
        for b in &self.blocks {
            pieces.push((b.slots.iter().rev().copied().collect(), b.choi()));
        }
        let full = linalg::kron_all(pieces.iter().map(|(_, m)| m));
        // leg position of (x_j, r_j) in the kron product
        let mut pos_of_slot = vec![0usize; k];
        let mut next = 0;
        for (cover, _) in &pieces {
            for &j in cover {
                pos_of_slot[j] = next;
                next += 2;
            }
        }
        let order: Vec<usize> = (0..k).rev().flat_map(|j| [pos_of_slot[j], pos_of_slot[j] + 1]).collect();
        linalg::permute_subsystems(&full, &SubsystemShape::uniform(d, 2 * k), &order).expect("valid order")
    }
}

/// Joint `S (x) E` states recorded along a run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `joint[0]` is the initial state; `joint[j]` follows `unitaries[j-1]`.
    /// Ancillas of correlated blocks are traced out.
    pub joint: Vec<ComplexMatrix>,
    pub system: SubnormalizedState,
}

struct Run {
    rho: ComplexMatrix,
    /// (block id, ancilla dim) of ancillas currently carried after `S, E`.
    active: Vec<(usize, usize)>,
}

impl Run {
    fn ancilla_dim(&self) -> usize {
        self.active.iter().map(|(_, d)| d).product()
    }

    fn dims(&self, sc: &Scenario) -> Vec<usize> {
        let mut dims = vec![sc.d_sys, sc.d_env];
        dims.extend(self.active.iter().map(|(_, d)| *d));
        dims
    }
}

fn simulate(sc: &Scenario, controls: &ControlSequence, upto: usize, record: bool) -> Result<Trajectory> {
    if upto > sc.steps() {
        return Err(Error::Range(format!("step {upto} beyond the scenario's {} steps", sc.steps())));
    }
    if controls.len() != upto {
        return Err(Error::param(format!("{} control slots for {upto} steps", controls.len())));
    }
    if controls.d_sys() != sc.d_sys {
        return Err(Error::dim("controls act on a different system dimension"));
    }
    let d = sc.d_sys;
    let mut run = Run { rho: sc.initial.matrix().clone(), active: Vec::new() };
    let mut joint = Vec::new();
    if record {
        joint.push(run.rho.clone());
    }
    for j in 0..upto {
        match &controls.slots[j] {
            Slot::Single(ch) => {
                let rest = sc.d_env * run.ancilla_dim();
                run.rho = apply_choi_to_first_factor(ch.choi(), d, d, &run.rho, rest);
            }
            Slot::Correlated { block, part } => {
                let b = &controls.blocks[*block];
                if *part == 0 {
                    let da = b.ancilla.dim();
                    let total = run.rho.nrows() * da;
                    if total > MAX_JOINT_DIM {
                        return Err(Error::SizeGuard(format!(
                            "joint dimension {total} with ancillas exceeds {MAX_JOINT_DIM}"
                        )));
                    }
                    run.rho = linalg::kron(&run.rho, b.ancilla.matrix());
                    run.active.push((*block, da));
                }
                let idx = run.active.iter().position(|(id, _)| id == block).expect("ancilla is active");
                let dims = run.dims(sc);
                let shape = SubsystemShape::new(dims.clone())?;
                // bring the ancilla next to S, act, move it back
                let mut order: Vec<usize> = vec![0, 2 + idx];
                order.extend((1..dims.len()).filter(|&f| f != 2 + idx));
                let moved = linalg::permute_subsystems(&run.rho, &shape, &order)?;
                let rest = run.rho.nrows() / (d * b.ancilla.dim());
                let acted = conjugate_leading(&b.interactions[*part], &moved, rest);
                let moved_shape = SubsystemShape::new(order.iter().map(|&f| dims[f]).collect())?;
                let mut inverse = vec![0usize; order.len()];
                for (p, &f) in order.iter().enumerate() {
                    inverse[f] = p;
                }
                run.rho = linalg::permute_subsystems(&acted, &moved_shape, &inverse)?;
                if *part + 1 == b.slots.len() {
                    let keep: Vec<usize> = (0..dims.len()).filter(|&f| f != 2 + idx).collect();
                    run.rho = linalg::partial_trace(&run.rho, &shape, &keep)?;
                    run.active.remove(idx);
                }
            }
        }
        let rest = run.ancilla_dim();
        run.rho = sc.apply_unitary(j, &run.rho, rest);
        if record {
            let dims = run.dims(sc);
            let se = if dims.len() > 2 {
                linalg::partial_trace(&run.rho, &SubsystemShape::new(dims)?, &[0, 1])?
            } else {
                run.rho.clone()
            };
            joint.push(se);
        }
    }
    if !run.active.is_empty() {
        return Err(Error::param("a correlated block extends past the final step"));
    }
    let system = linalg::partial_trace(&run.rho, &sc.joint_shape(), &[0])?;
    Ok(Trajectory { joint, system: SubnormalizedState::new(linalg::hermitian_part(&system))? })
}

/// Reduced system state after `upto` steps; its trace is the success probability.
pub fn evolve(sc: &Scenario, controls: &ControlSequence, upto: usize) -> Result<SubnormalizedState> {
    Ok(simulate(sc, controls, upto, false)?.system)
}

/// Like [`evolve`], also returning the joint state after every step.
pub fn evolve_trajectory(sc: &Scenario, controls: &ControlSequence, upto: usize) -> Result<Trajectory> {
    simulate(sc, controls, upto, true)
}

/// Runs `prefix` to step `break_step`, measures `effect`, prepares `prep`,
/// then applies identity controls up to `final_step`.
///
/// Returns the normalized conditional state and the branch probability.
pub fn evolve_with_causal_break(
    sc: &Scenario,
    prefix: &ControlSequence,
    effect: &ComplexMatrix,
    prep: &DensityMatrix,
    break_step: usize,
    final_step: usize,
) -> Result<(DensityMatrix, f64)> {
    if break_step >= final_step || final_step > sc.steps() {
        return Err(Error::Range(format!(
            "break at {break_step}, final step {final_step}, scenario has {} steps",
            sc.steps()
        )));
    }
    if prefix.len() != break_step {
        return Err(Error::param(format!("prefix has {} slots, break at {break_step}", prefix.len())));
    }
    let mut controls = prefix.clone();
    controls.push(Channel::measure_prepare(effect, prep)?)?;
    for _ in break_step + 1..final_step {
        controls.push(Channel::identity(sc.d_sys))?;
    }
    let out = evolve(sc, &controls, final_step)?;
    let p = out.weight();
    if p < tol::PROB {
        return Err(Error::ImpossibleBranch(p));
    }
    Ok((out.normalized()?, p))
}

/// `tr_S[(effect (x) I) rho]`.
pub(crate) fn conditional_environment(
    effect: &ComplexMatrix,
    rho: &ComplexMatrix,
    d_sys: usize,
    d_env: usize,
) -> ComplexMatrix {
    let mut env = linalg::zeros(d_env, d_env);
    for r in 0..d_sys {
        for s in 0..d_sys {
            let coeff = effect[(s, r)];
            if coeff == linalg::ZERO {
                continue;
            }
            let block = rho.view((r * d_env, s * d_env), (d_env, d_env));
            env.zip_apply(&block, |t, b| *t += coeff * b);
        }
    }
    env
}
