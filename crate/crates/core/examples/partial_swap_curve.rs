//! Partial swap with a mixed qubit: the trace distance between two inputs
//! only shrinks, yet a causal break exposes memory in the environment.
//!
//! ```bash
//! cargo run --release --example partial_swap_curve
//! ```

use proctens::analysis::trace_distance_curve;
use proctens::markov::{markov_witness_standard, DEFAULT_TOL_MARKOV};
use proctens::scenarios;
use proctens::state::DensityMatrix;

fn main() -> proctens::Result<()> {
    let omega = 1.0;
    let times = [0.0, 0.3, 0.8, 1.4];
    let sc = scenarios::partial_swap(omega, &times)?;
    let curve = trace_distance_curve(&sc, &DensityMatrix::basis_state(2, 0), &DensityMatrix::basis_state(2, 1))?;
    println!("{:>6} {:>10} {:>14}", "t", "D(t)", "cos^2(omega t)");
    for (t, d) in &curve {
        println!("{t:>6.2} {d:>10.6} {:>14.6}", (omega * t).cos().powi(2));
    }
    let rep = markov_witness_standard(&sc, DEFAULT_TOL_MARKOV)?;
    println!("witness: {} (discrepancy {:.3e})", rep.verdict, rep.max_discrepancy);
    Ok(())
}
