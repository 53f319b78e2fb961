//! Qubit dephasing by a continuous Lorentzian mode: free decay follows
//! exp(-g gamma t) and a bit-flip pulse refocuses the coherence.
//!
//! ```bash
//! cargo run --release --example dephasing_echo
//! ```

use proctens::analysis::coherence_curve;
use proctens::channel::Channel;
use proctens::evolution::ControlSequence;
use proctens::linalg::{self, c};
use proctens::scenarios::{self, DephasingParams};
use proctens::state::DensityMatrix;

fn main() -> proctens::Result<()> {
    let params = DephasingParams::new(1.0, 1.0);
    let h = 0.5f64.sqrt();
    let plus = DensityMatrix::pure(&[c(h, 0.0), c(h, 0.0)])?;
    let times: Vec<f64> = (0..=8).map(|j| 0.25 * j as f64).collect();
    let sc = scenarios::dephasing_echo(&params, &times, &plus)?;

    let free = coherence_curve(&sc, &ControlSequence::identity(2, 8))?;
    let mut pulsed = ControlSequence::identity(2, 8);
    pulsed.set(4, Channel::unitary(&linalg::paulis()[1])?)?;
    let echo = coherence_curve(&sc, &pulsed)?;

    println!("{:>6} {:>10} {:>10} {:>10}", "t", "free", "0.5 e^-t", "echo");
    for ((t, f), (_, e)) in free.iter().zip(&echo) {
        println!("{t:>6.2} {f:>10.6} {:>10.6} {e:>10.6}", 0.5 * (-t).exp());
    }
    Ok(())
}
