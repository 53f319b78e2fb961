//! Divisibility is weaker than Markovianity: the CNOT memory scenario has
//! CP-divisible averaged dynamics, yet its conditional maps depend on history.
//!
//! ```bash
//! cargo run --release --example divisible_but_non_markovian
//! ```

use proctens::basis::OperationBasis;
use proctens::markov::{conditional_map, is_divisible, markov_witness_standard, History, DEFAULT_TOL_MARKOV};
use proctens::linalg;
use proctens::scenarios;

fn main() -> proctens::Result<()> {
    let sc = scenarios::cnot_memory();
    let div = is_divisible(&sc, 1e-9)?;
    println!("divisible {}, CP-divisible {}, max residual {:.2e}", div.divisible, div.cp_divisible, div.max_residual);
    for ((l, j), map) in &div.maps {
        println!("averaged map {j} -> {l}: CPTP {}", map.is_cptp(1e-9).cptp);
    }

    let rep = markov_witness_standard(&sc, DEFAULT_TOL_MARKOV)?;
    println!("witness: {} (discrepancy {:.3})", rep.verdict, rep.max_discrepancy);

    // the map from slot 1 to step 2, conditioned on what was prepared at slot 0
    let basis = OperationBasis::standard(2)?;
    let bases = vec![basis.clone(); sc.steps()];
    let zero = linalg::projector(&linalg::ket(2, 0));
    for nu in 0..basis.n_preps() {
        let h = History { prefix: vec![(0, nu)], outcome: 0 };
        let map = conditional_map(&sc, &bases, &h, 1, 2)?;
        let out = map.apply_matrix(&zero)?;
        println!("slot-0 preparation {nu}: |0><0| -> populations [{:.3}, {:.3}]", out[(0, 0)].re, out[(1, 1)].re);
    }
    Ok(())
}
