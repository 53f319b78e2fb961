//! Relative entropy between a process and its closest Markov product, and the
//! resulting chance of mistaking one for the other.
//!
//! ```bash
//! cargo run --release --example non_markovianity_measure
//! ```

use proctens::cji::cji_from_scenario;
use proctens::markov::{confusion_probability, non_markovianity};
use proctens::scenarios::{self, factorized_random, seeded_rng};
use proctens::state::DensityMatrix;

fn main() -> proctens::Result<()> {
    let named = [
        ("factorized", factorized_random(2, 3, 3, &mut seeded_rng(2))?),
        ("random", scenarios::random_seeded(2, 2, 3, 2)?),
        ("cnot memory", scenarios::cnot_memory()),
        ("double swap", scenarios::double_swap(&DensityMatrix::maximally_mixed(2), &DensityMatrix::maximally_mixed(2))?),
    ];
    println!("{:<12} {:>12} {:>12} {:>12}", "scenario", "nats", "P(n = 1)", "P(n = 10)");
    for (name, sc) in &named {
        let nm = non_markovianity(&cji_from_scenario(sc, sc.steps())?)?;
        println!(
            "{name:<12} {nm:>12.6} {:>12.3e} {:>12.3e}",
            confusion_probability(1, nm)?,
            confusion_probability(10, nm)?
        );
    }
    Ok(())
}
