//! Operational Markov test: compare conditional states after causal breaks.
//!
//! ```bash
//! cargo run --release --example markov_witness
//! ```

use proctens::markov::{markov_witness_standard, DEFAULT_TOL_MARKOV};
use proctens::scenarios::{self, factorized_random, seeded_rng};
use proctens::state::DensityMatrix;

fn main() -> proctens::Result<()> {
    let named = [
        ("factorized", factorized_random(2, 2, 2, &mut seeded_rng(5))?),
        ("cnot memory", scenarios::cnot_memory()),
        ("double swap", scenarios::double_swap(&DensityMatrix::basis_state(2, 0), &DensityMatrix::basis_state(2, 1))?),
        ("partial swap", scenarios::partial_swap(1.0, &[0.0, 0.4, 0.9])?),
    ];
    for (name, sc) in &named {
        let rep = markov_witness_standard(sc, DEFAULT_TOL_MARKOV)?;
        println!(
            "{name:<13} {:<27} max discrepancy {:.3e} ({} histories, {} skipped)",
            rep.verdict.to_string(),
            rep.max_discrepancy,
            rep.branches_evaluated,
            rep.branches_skipped
        );
        if let Some(w) = &rep.witness {
            println!(
                "              break at slot {}, read at step {}: {:?} vs {:?}",
                w.break_step, w.final_step, w.first, w.second
            );
        }
    }
    Ok(())
}
