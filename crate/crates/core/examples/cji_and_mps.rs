//! The Choi state of a multi-step process, its leg marginals, and its
//! matrix-product form with bond dimension set by the environment.
//!
//! ```bash
//! cargo run --release --example cji_and_mps
//! ```

use proctens::cji::{cji_from_scenario, mps_from_scenario, purification, Leg};
use proctens::linalg;
use proctens::scenarios;
use proctens::state::entropy;

fn main() -> proctens::Result<()> {
    let sc = scenarios::random_seeded(2, 2, 4, 3)?;
    let u = cji_from_scenario(&sc, 4)?;
    println!("CJI state on {} legs, purity {:.6}", u.legs().len(), u.purity());

    let first = u.marginal(&[Leg::ControlInput(0)])?;
    println!("marginal on r_0 is the initial system state: {:.2e}", linalg::max_abs_diff(first.matrix(), sc.initial_system().matrix()));
    let pair = u.marginal(&[Leg::ControlInput(1), Leg::ControlOutput(0)])?;
    println!("entropy of the first step's Choi legs: {:.6} nats", entropy(&pair));

    let mps = mps_from_scenario(&sc, 4)?;
    println!("MPS bond dimension {}, effective {:?}", mps.bond_dimension(), mps.effective_bond_dimensions());
    let dense = mps.to_dense()?;
    println!("MPS contracted vs circuit: {:.2e}", linalg::max_abs_diff(dense.matrix(), u.matrix()));

    let pure = purification(&sc, 4)?;
    let back = pure.to_cji()?;
    println!("purification rank {}, reduced back to the CJI state: {:.2e}", pure.rank(), linalg::max_abs_diff(back.matrix(), u.matrix()));
    Ok(())
}
