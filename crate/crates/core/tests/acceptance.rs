//! Acceptance run: every criterion at its reference configuration and
//! tolerance, one line per criterion.
//!
//! `cargo test --test acceptance` runs all of them;
//! `cargo test --test acceptance -- 3 5` runs criteria 3 and 5.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use enlargement::experiments::{
    bessel::{run_honest, run_pitman},
    brownian::{run_emery, run_hypothesis_h, run_jacod},
    calibration::run_calibration,
    exact::run_exact_suite,
    fa1::run_fa1,
    supremum::run_sup,
    CriterionOutcome,
};
use enlargement::mctest::Verdict;

struct Criterion {
    id: u8,
    budget: Duration,
    /// Whether an inconclusive verdict is an accepted outcome.
    best_effort: bool,
    run: fn() -> CriterionOutcome,
}

const fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn criteria() -> [Criterion; 9] {
    [
        Criterion { id: 1, budget: minutes(1), best_effort: false, run: || run_exact_suite(&Default::default()) },
        Criterion { id: 2, budget: minutes(1), best_effort: false, run: || run_hypothesis_h(&Default::default()) },
        Criterion { id: 3, budget: minutes(2), best_effort: false, run: || run_jacod(&Default::default()) },
        Criterion { id: 4, budget: minutes(5), best_effort: false, run: || run_emery(&Default::default()) },
        Criterion { id: 5, budget: minutes(10), best_effort: false, run: || run_pitman(&Default::default()) },
        Criterion { id: 6, budget: minutes(5), best_effort: false, run: || run_honest(&Default::default()) },
        Criterion { id: 7, budget: minutes(3), best_effort: false, run: || run_fa1(&Default::default()) },
        // no runtime budget is stated for the supremum spot check
        Criterion { id: 8, budget: Duration::MAX, best_effort: true, run: || run_sup(&Default::default()) },
        Criterion { id: 9, budget: minutes(2), best_effort: false, run: || run_calibration(&Default::default()) },
    ]
}

fn main() -> ExitCode {
    let wanted: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for c in criteria() {
        if !wanted.is_empty() && !wanted.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let out = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let accepted = match out.verdict {
            Verdict::Pass => in_time,
            Verdict::Inconclusive => c.best_effort && in_time,
            _ => false,
        };
        let budget = if c.budget == Duration::MAX { "none".to_string() } else { format!("{} s", c.budget.as_secs()) };
        println!(
            "criterion {} {}: {} [{}] ({:.1} s, budget {budget})",
            c.id,
            if accepted { "pass" } else { "FAIL" },
            out.title,
            out.verdict,
            elapsed.as_secs_f64()
        );
        if !accepted {
            print!("{}", out.render());
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
