//! Time series over a scenario's steps.

use crate::error::{Error, Result};
use crate::evolution::{evolve_trajectory, ControlSequence, Scenario};
use crate::linalg;
use crate::state::{trace_distance_matrices, DensityMatrix};

/// Time labels of steps `0..=K`, falling back to the step index.
pub fn step_times(sc: &Scenario) -> Vec<f64> {
    match sc.labels() {
        Some(l) => l.to_vec(),
        None => (0..=sc.steps()).map(|j| j as f64).collect(),
    }
}

fn system_states(sc: &Scenario, controls: &ControlSequence) -> Result<Vec<linalg::ComplexMatrix>> {
    let traj = evolve_trajectory(sc, controls, sc.steps())?;
    let shape = sc.joint_shape();
    traj.joint
        .iter()
        .map(|j| linalg::partial_trace(j, &shape, &[0]))
        .collect()
}

/// Trace distance between the evolutions of two system inputs under identity
/// controls; the environment marginal of the scenario is kept.
pub fn trace_distance_curve(sc: &Scenario, a: &DensityMatrix, b: &DensityMatrix) -> Result<Vec<(f64, f64)>> {
    if a.dim() != sc.d_sys() || b.dim() != sc.d_sys() {
        return Err(Error::dim("curve states must live on the system"));
    }
    let env = DensityMatrix::new(linalg::partial_trace(sc.initial().matrix(), &sc.joint_shape(), &[1])?)?;
    let ids = ControlSequence::identity(sc.d_sys(), sc.steps());
    let sa = system_states(&sc.with_initial(a.tensor(&env))?, &ids)?;
    let sb = system_states(&sc.with_initial(b.tensor(&env))?, &ids)?;
    step_times(sc)
        .into_iter()
        .zip(sa.iter().zip(&sb))
        .map(|(t, (x, y))| Ok((t, trace_distance_matrices(x, y)?)))
        .collect()
}

/// `|<0|rho(t)|1>|` of the system at every step under the given controls.
pub fn coherence_curve(sc: &Scenario, controls: &ControlSequence) -> Result<Vec<(f64, f64)>> {
    let states = system_states(sc, controls)?;
    Ok(step_times(sc).into_iter().zip(states).map(|(t, rho)| (t, rho[(0, 1)].norm())).collect())
}
