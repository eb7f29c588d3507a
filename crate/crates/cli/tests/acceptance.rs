//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use irl_lab::config::ExperimentConfig;
use irl_lab::commands::sweep_jobs;
use irl_lab::metrics::write_csv;
use irl_lab::presets::preset;
use irl_lab::summary::{median, median_with_infinity, GAP_FRACTION};
use irl_lab::verify::{
    best_response_enumeration, model_error_bound, ogd_regret, pdam_identity, policy_evaluation_identity,
};
use irl_lab_core::driver::{run_irl, theorem_ledger, EvalMode, RunRecord};
use irl_lab_core::oracles::OracleVariant;
use irl_lab_core::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn load(name: &str) -> ExperimentConfig {
    preset(name).expect("preset exists").expect("preset parses")
}

fn sweep(cfg: &ExperimentConfig) -> Vec<RunRecord> {
    sweep_jobs(cfg)
        .into_par_iter()
        .map(|(v, s)| run_irl(&cfg.job(v, s)).unwrap_or_else(|e| panic!("{} seed {s}: {e}", v.name())))
        .collect()
}

fn of(records: &[RunRecord], v: OracleVariant) -> Vec<&RunRecord> {
    records.iter().filter(|r| r.variant == v).collect()
}

fn median_ttg(records: &[&RunRecord]) -> Option<f64> {
    let v: Vec<Option<f64>> = records.iter().map(|r| r.transitions_to_gap(GAP_FRACTION).map(|x| x as f64)).collect();
    median_with_infinity(&v)
}

fn show(x: Option<f64>) -> String {
    x.map_or("never".into(), |v| format!("{v}"))
}

fn suite_outcome(reports: &[&irl_lab::verify::SuiteReport], elapsed: Duration, limit: Duration) -> Outcome {
    let pass = reports.iter().all(|r| r.passed()) && elapsed < limit;
    let lines: Vec<String> = reports.iter().map(|r| r.line()).collect();
    outcome(pass, format!("{} [{:.2?}, limit {limit:?}]", lines.join(" | "), elapsed))
}

fn csv_bytes(record: &RunRecord, cadence: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, record, cadence).expect("in-memory csv");
    buf
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();

    // 1
    let (rep, t) = timed(|| policy_evaluation_identity(200, 101).expect("suite runs"));
    results.push((1, "policy evaluation identity on 200 random instances", suite_outcome(&[&rep], t, Duration::from_secs(10))));

    // 2
    let ((a, b), t) = timed(|| (pdam_identity(100, 102).expect("suite runs"), model_error_bound(100, 103).expect("suite runs")));
    results.push((2, "performance difference via model identity and bound", suite_outcome(&[&a, &b], t, Duration::from_secs(10))));

    // 3
    let (rep, t) = timed(|| best_response_enumeration(4, 2, 4, 10, 104).expect("suite runs"));
    results.push((3, "best response equals enumeration for S<=4, A<=2, H<=4", suite_outcome(&[&rep], t, Duration::from_secs(600))));

    // 4
    let ((bound, cmp), t) = timed(|| ogd_regret(50, 100, 105).expect("suite runs"));
    results.push((4, "reward player regret and hindsight comparator", suite_outcome(&[&bound, &cmp], t, Duration::from_secs(600))));

    // 6
    let tree6 = load("tree6");
    let (tree_runs, t6) = timed(|| sweep(&tree6));
    let hyq = median_ttg(&of(&tree_runs, OracleVariant::HyQ));
    let onp = median_ttg(&of(&tree_runs, OracleVariant::OnPolicyFqi));
    let (hq, op) = (hyq.unwrap_or(f64::INFINITY), onp.unwrap_or(f64::INFINITY));
    let ratio = hq / op;
    results.push((
        6,
        "tree depth 6: hybrid reaches the gap threshold with fewer transitions",
        outcome(
            hq < op && t6 < Duration::from_secs(300),
            format!(
                "median transitions: hyq {} vs on_policy_fqi {} (ratio {ratio:.3}, target <= 0.5: {}) [{t6:.2?}]",
                show(hyq),
                show(onp),
                if ratio <= 0.5 { "met" } else { "missed" }
            ),
        ),
    ));

    // 7 and 8
    let maze7 = load("maze7");
    let (maze_runs, t7) = timed(|| sweep(&maze7));
    let hyper = of(&maze_runs, OracleVariant::HyPer);
    let hyq_m = of(&maze_runs, OracleVariant::HyQ);
    let bc = of(&maze_runs, OracleVariant::Bc);
    let (hp_t, hq_t) = (median_ttg(&hyper), median_ttg(&hyq_m));
    // every real transition of a HyPER round is one of its B exploration episodes
    let per_round = (maze7.run.oracle.batch_size * hyper[0].horizon) as u64;
    let mut inner_clean = true;
    for r in &hyper {
        let mut prev = (0u64, 0u64);
        for row in &r.rows {
            let (real, model) = (row.ledger.real_env_transitions, row.ledger.model_transitions);
            inner_clean &= real - prev.0 == per_round && model > prev.1;
            prev = (real, model);
        }
    }
    results.push((
        7,
        "maze7: model-based resets need fewer real transitions than hybrid Q",
        outcome(
            hp_t.unwrap_or(f64::INFINITY) < hq_t.unwrap_or(f64::INFINITY) && inner_clean,
            format!(
                "median transitions: hyper {} vs hyq {}; real transitions per round exactly {per_round} with none in inner solves: {inner_clean} [{t7:.2?}]",
                show(hp_t),
                show(hq_t)
            ),
        ),
    ));
    let gq = median(&hyq_m.iter().map(|r| r.final_gap_best()).collect::<Vec<_>>());
    let gb = median(&bc.iter().map(|r| r.final_gap_best()).collect::<Vec<_>>());
    results.push((
        8,
        "maze7 with tremble and 5 demos: hybrid Q beats behavior cloning",
        outcome(gq < gb, format!("median final gap: hyq {gq:.4} vs bc {gb:.4}")),
    ));

    // 9
    let mut zero_resets = true;
    let mut checked = 0;
    for r in tree_runs.iter().chain(&maze_runs) {
        if matches!(r.variant, OracleVariant::HyQ | OracleVariant::Bc) {
            zero_resets &= r.final_ledger.reset_queries == 0;
            checked += 1;
        }
    }
    let mut filter = tree6.job(OracleVariant::FilterFqi, 0);
    filter.reset_access = false;
    let refused = matches!(run_irl(&filter), Err(Error::Capability(_)));
    results.push((
        9,
        "capability contract for resets",
        outcome(
            zero_resets && refused && checked > 0,
            format!("{checked} hyq/bc runs with zero reset queries: {zero_resets}; filter_fqi without resets refused: {refused}"),
        ),
    ));

    // 10
    let mut identical = Vec::new();
    let mut fig3_runs = Vec::new();
    for name in ["tree6", "maze7", "fig3"] {
        let cfg = load(name);
        let job = cfg.job(cfg.run.oracle.variant, cfg.run.seed);
        let first = run_irl(&job).expect("preset runs");
        let second = run_irl(&job).expect("preset runs");
        let same = csv_bytes(&first, cfg.eval_cadence) == csv_bytes(&second, cfg.eval_cadence);
        identical.push((name, same));
        if name == "fig3" {
            fig3_runs = sweep(&cfg);
        }
    }
    results.push((
        10,
        "presets rerun bit-identically",
        outcome(
            identical.iter().all(|(_, s)| *s),
            identical.iter().map(|(n, s)| format!("{n}: {s}")).collect::<Vec<_>>().join(", "),
        ),
    ));

    // 5, over every exact-mode run above
    let mut total = 0;
    let mut violations = Vec::new();
    let mut worst_slack = f64::INFINITY;
    for r in tree_runs.iter().chain(&maze_runs).chain(&fig3_runs) {
        if r.eval_mode != EvalMode::Exact {
            continue;
        }
        total += 1;
        match theorem_ledger(r) {
            Ok(l) => {
                worst_slack = worst_slack.min(l.rhs - l.lhs);
                if !l.holds {
                    violations.push(format!("{} ({:.3e} > {:.3e})", r.run_id, l.lhs, l.rhs));
                }
            }
            Err(e) => violations.push(format!("{}: {e}", r.run_id)),
        }
    }
    results.push((
        5,
        "regret ledger holds on every exact-mode run",
        outcome(
            violations.is_empty() && total > 0,
            format!("{total} runs, smallest slack {worst_slack:.3e}; violations: {}", if violations.is_empty() { "none".into() } else { violations.join(", ") }),
        ),
    ));

    results.sort_by_key(|(i, _, _)| *i);
    let mut all = true;
    for (i, name, o) in &results {
        all &= o.pass;
        println!("{} criterion {i}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
