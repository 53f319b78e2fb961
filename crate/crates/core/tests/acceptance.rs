//! Acceptance corpus: one line per criterion, nonzero exit if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use proctens::acceptance::{self, Outcome};

const CHECK_BUDGET: Duration = Duration::from_secs(600);

fn cli_check() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_proctens")).arg("check").output();
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match out {
        Ok(o) => {
            let code = o.status.code();
            let summary = String::from_utf8_lossy(&o.stdout).lines().last().unwrap_or("").to_string();
            let in_time = start.elapsed() <= CHECK_BUDGET;
            (code == Some(0) && in_time, format!("exit {code:?}, \"{summary}\", within budget {in_time}"))
        }
        Err(e) => (false, format!("cannot run binary: {e}")),
    };
    Outcome { id: 11, name: "proctens check", passed, detail, seconds }
}

fn main() {
    let mut outcomes: Vec<Outcome> = (1..=10)
        .map(|id| {
            let o = acceptance::criterion(id);
            println!("{}", o.line());
            o
        })
        .collect();
    let o = cli_check();
    println!("{}", o.line());
    outcomes.push(o);

    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("{} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
