//! Reconstruct a process tensor by simulated tomography and use it to predict
//! the output of control sequences it was never shown.
//!
//! ```bash
//! cargo run --release --example process_tensor_tomography
//! ```

use proctens::channel::Channel;
use proctens::evolution::{evolve, ControlSequence};
use proctens::linalg;
use proctens::process_tensor::ProcessTensor;
use proctens::scenarios::{self, random_channel, seeded_rng};

fn main() -> proctens::Result<()> {
    let sc = scenarios::random_seeded(2, 3, 3, 7)?;
    let t = ProcessTensor::from_scenario_standard(&sc, 3)?;
    let (cp, min_eig) = t.check_cp()?;
    println!("tensor: {} x {}, legs {:?}", t.matrix().nrows(), t.matrix().ncols(), t.shape().dims());
    println!("completely positive: {cp} (min eigenvalue {min_eig:.2e})");

    let mut rng = seeded_rng(1);
    for trial in 0..3 {
        let controls = ControlSequence::new(2, (0..3).map(|_| random_channel(2, 2, 2, &mut rng)).collect())?;
        let predicted = t.apply(&controls)?;
        let simulated = evolve(&sc, &controls, 3)?;
        let gap = linalg::max_abs_diff(predicted.matrix(), simulated.matrix());
        println!("random controls {trial}: max entry gap {gap:.2e}");
    }

    // a sub-process on steps [1, 2] is obtained without re-running tomography
    let inner = t.contained(1, 2)?;
    let mut controls = ControlSequence::identity(2, 1);
    controls.set(0, Channel::dephasing(2))?;
    let out = inner.apply(&controls)?;
    println!("contained [1, 2] under dephasing, output weight {:.6}", out.weight());
    Ok(())
}
