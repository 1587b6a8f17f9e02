//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 10 cannot pass as stated (see `KNOWN_FAILING`); it is run and
//! reported like the others, and the target fails if anything else fails
//! or if it unexpectedly passes.

use std::process::Command;
use std::time::Instant;

use ecdde::checks::{run_check, CHECKS, SUITE_BUDGET};

/// The canonical-seed half of the oscillation criterion: each forward
/// step maps a fit error e to -u e'(u), amplifying a degree-8 residual by
/// roughly 1e3 per step, so "within 10x over 3 steps" is out of reach.
const KNOWN_FAILING: [u32; 1] = [10];

fn line(id: u32, name: &str, passed: bool, seconds: f64, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2} {name} ({seconds:.2}s): {detail}");
}

fn main() {
    let mut unexpected = Vec::new();
    for (id, _) in CHECKS {
        let o = run_check(id);
        line(o.id, o.name, o.passed, o.seconds, &o.detail);
        if o.passed == KNOWN_FAILING.contains(&id) {
            unexpected.push(id);
        }
    }

    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_ecdde"))
        .arg("check-all")
        .output()
        .expect("run check-all");
    let seconds = start.elapsed().as_secs_f64();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let records: Vec<serde_json::Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).expect("check-all emits JSON lines"))
        .collect();
    let any_failed = records.iter().any(|r| r["passed"] == false);
    let complete = records.len() == CHECKS.len() + 1;
    let exit_consistent = out.status.success() != any_failed;
    let passed = complete && exit_consistent && seconds < SUITE_BUDGET;
    line(
        12,
        "check_all_runtime",
        passed,
        seconds,
        &format!(
            "{} JSON lines, exit code {:?}, {seconds:.1}s (budget {SUITE_BUDGET}s)",
            records.len(),
            out.status.code()
        ),
    );
    if !passed {
        unexpected.push(12);
    }

    if unexpected.is_empty() {
        println!("acceptance: all criteria behave as recorded (known failing: {KNOWN_FAILING:?})");
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
