//! Drive analyses from a config, as the `proctens run` command does, and print
//! the canonical report. Pass a path to use your own config file.
//!
//! ```bash
//! cargo run --release --example run_config
//! cargo run --release --example run_config -- crates/core/examples/configs/partial_swap.json
//! ```

use proctens::config::RunConfig;
use proctens::report::run_config;

const DEFAULT: &str = r#"{
  "scenario": { "name": "cnot_memory" },
  "analysis": ["divisibility", "witness", "measure"]
}"#;

fn main() -> proctens::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => RunConfig::load(path.as_ref())?,
        None => RunConfig::from_json(DEFAULT)?,
    };
    let report = run_config(&cfg)?;
    print!("{}", report.to_json()?);
    eprintln!("digest {}", report.digest()?);
    Ok(())
}
