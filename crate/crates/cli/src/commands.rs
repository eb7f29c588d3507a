//! The subcommands, as library functions returning exit codes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use irl_lab_core::driver::{build_env, run_irl, EvalMode, RunRecord};
use irl_lab_core::mdp::policy_value;
use irl_lab_core::oracles::OracleVariant;

use crate::brute::{best_vertex, policy_count, POLICY_BUDGET};
use crate::config::{parse_config_file, ConfigError, ExperimentConfig};
use crate::metrics::write_csv;
use crate::presets::preset;
use crate::summary::{RunSummary, SweepSummary};
use crate::verify::{best_response_enumeration, best_response_residual, identity_suites, SuiteReport, ENUMERATION_TOL};

pub const SEED_OVERRIDE_VAR: &str = "IRL_LAB_SEED_OVERRIDE";

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Capability, precondition and numeric errors from a run.
    Run(irl_lab_core::Error),
    Io(String),
    /// A verification or ledger check failed.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Run(e) => write!(f, "run error: {e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Failed(e) => write!(f, "check failed: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<irl_lab_core::Error> for CliError {
    fn from(e: irl_lab_core::Error) -> Self {
        CliError::Run(e)
    }
}

fn io(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Loads a config file or preset name, then applies the seed override.
pub fn load_config(source: &str, seed_override: Option<&str>) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(source);
    let mut cfg = match (path.exists(), preset(source)) {
        (false, Some(p)) => p?,
        _ => parse_config_file(path)?,
    };
    if let Some(raw) = seed_override {
        let seed = raw.trim().parse().map_err(|_| ConfigError {
            line: None,
            field: Some(SEED_OVERRIDE_VAR.into()),
            message: format!("expected an unsigned integer, found {raw:?}"),
        })?;
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

/// The override from the environment, if set.
pub fn seed_override_from_env() -> Option<String> {
    std::env::var(SEED_OVERRIDE_VAR).ok()
}

pub fn csv_path(out: &Path, run_id: &str) -> PathBuf {
    out.join(format!("{run_id}.csv"))
}

pub fn summary_path(out: &Path, run_id: &str) -> PathBuf {
    out.join(format!("{run_id}.summary.json"))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io(path, e))
}

fn write_outputs(cfg: &ExperimentConfig, out: &Path, record: &RunRecord) -> Result<RunSummary, CliError> {
    if cfg.emit_csv {
        let path = csv_path(out, &record.run_id);
        let file = fs::File::create(&path).map_err(|e| io(&path, e))?;
        write_csv(std::io::BufWriter::new(file), record, cfg.eval_cadence).map_err(|e| io(&path, e))?;
    }
    let summary = RunSummary::from_record(record);
    if cfg.emit_summary {
        write_json(&summary_path(out, &record.run_id), &summary)?;
    }
    Ok(summary)
}

fn describe(s: &RunSummary) -> String {
    let ledger = match (s.ledger_lhs, s.ledger_rhs, s.ledger_holds) {
        (Some(l), Some(r), Some(h)) => format!("ledger {l:.6} <= {r:.6} {}", if h { "holds" } else { "VIOLATED" }),
        _ => "ledger n/a (sampled)".into(),
    };
    let ttg = s.transitions_to_gap_0p1.map_or("never".into(), |x| x.to_string());
    format!(
        "{}: gap mixture {:.6}, gap best {:.6}, {ledger}, transitions to gap 0.1 {ttg}, real transitions {}",
        s.run_id, s.final_gap_mixture, s.final_gap_best, s.real_env_transitions
    )
}

fn check_ledgers(runs: &[RunSummary]) -> Result<(), CliError> {
    let broken: Vec<&str> = runs
        .iter()
        .filter(|r| r.ledger_holds == Some(false))
        .map(|r| r.run_id.as_str())
        .collect();
    if broken.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("regret ledger violated in {}", broken.join(", "))))
    }
}

/// `irl-lab run`: the config's single variant and seed.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let record = run_irl(&cfg.job(cfg.run.oracle.variant, cfg.run.seed))?;
    let summary = write_outputs(cfg, out, &record)?;
    println!("{}", describe(&summary));
    check_ledgers(std::slice::from_ref(&summary))?;
    Ok(summary)
}

/// Every `(variant, seed)` pair of the sweep, in output order.
pub fn sweep_jobs(cfg: &ExperimentConfig) -> Vec<(OracleVariant, u64)> {
    cfg.variants
        .iter()
        .flat_map(|&v| cfg.seeds.iter().map(move |&s| (v, s)))
        .collect()
}

/// `irl-lab sweep`: runs in parallel, one CSV and summary per run, then
/// `<name>.sweep.json` once all runs are done.
pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepSummary, CliError> {
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let results: Vec<Result<RunSummary, CliError>> = sweep_jobs(cfg)
        .into_par_iter()
        .map(|(v, s)| {
            let record = run_irl(&cfg.job(v, s))?;
            write_outputs(cfg, out, &record)
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for r in &runs {
        println!("{}", describe(r));
    }
    let summary = SweepSummary::new(&cfg.name, runs);
    write_json(&out.join(format!("{}.sweep.json", cfg.name)), &summary)?;
    for v in &summary.variants {
        let ttg = v.median_transitions_to_gap_0p1.map_or("never".into(), |x| x.to_string());
        println!(
            "{} over {} seeds: median gap best {:.6}, median gap mixture {:.6}, median transitions to gap 0.1 {ttg}",
            v.variant,
            v.seeds.len(),
            v.median_final_gap_best,
            v.median_final_gap_mixture
        );
    }
    check_ledgers(&summary.runs)?;
    Ok(summary)
}

fn report(suites: &[SuiteReport]) -> Result<(), CliError> {
    for s in suites {
        println!("{}", s.line());
    }
    let failed: Vec<&str> = suites.iter().filter(|s| !s.passed()).map(|s| s.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(failed.join(", ")))
    }
}

/// `irl-lab verify`.
pub fn verify() -> Result<Vec<SuiteReport>, CliError> {
    let suites = identity_suites()?;
    report(&suites)?;
    Ok(suites)
}

/// `irl-lab oracle`: exhaustive best-response search on every small shape,
/// plus, for a config, on its environment and its run's hindsight comparator.
pub fn oracle(cfg: Option<&ExperimentConfig>) -> Result<Vec<SuiteReport>, CliError> {
    let mut suites = vec![best_response_enumeration(4, 2, 4, 2, 7)?];
    if let Some(cfg) = cfg {
        let built = build_env(&cfg.run.env, cfg.run.reset_access)?;
        let mdp = built.mdp();
        let mut br = SuiteReport::named("best response on the configured environment", ENUMERATION_TOL);
        match best_response_residual(mdp, &built.ground_truth)? {
            Some(res) => br.push(format!("{} ground truth", cfg.name), res),
            None => println!(
                "SKIP best response on the configured environment ({} deterministic policies exceed the budget of {POLICY_BUDGET})",
                policy_count(mdp)
            ),
        }
        let expert_v = policy_value(mdp, &built.expert, &built.ground_truth)?;
        if let Some(brute) = crate::brute::best_deterministic_value(mdp, &built.ground_truth) {
            br.push(format!("{} expert optimality", cfg.name), (brute - expert_v).abs());
        }
        if br.cases > 0 {
            suites.push(br);
        }

        let mut job = cfg.job(cfg.run.oracle.variant, cfg.run.seed);
        job.eval_mode = EvalMode::Exact;
        let record = run_irl(&job)?;
        let mut cmp = SuiteReport::named("hindsight comparator on the configured run", 1e-9);
        let gradients: Vec<Vec<f64>> = gradients_of(&record, &built)?;
        match best_vertex(&built.class, &gradients) {
            Some((brute, _)) => cmp.push(record.run_id.clone(), (record.reg_f.comparator_loss - brute).abs()),
            None => println!("SKIP hindsight comparator on the configured run (box too large to enumerate)"),
        }
        if cmp.cases > 0 {
            suites.push(cmp);
        }
    }
    report(&suites)?;
    Ok(suites)
}

/// Exact loss gradients of a run's policies against the true expert.
fn gradients_of(record: &RunRecord, built: &irl_lab_core::driver::BuiltEnv) -> Result<Vec<Vec<f64>>, CliError> {
    let mdp = built.mdp();
    let d_e = irl_lab_core::mdp::occupancy(mdp, &built.expert)?;
    let h = mdp.horizon() as f64;
    record
        .policies
        .iter()
        .map(|pi| {
            let d = irl_lab_core::mdp::occupancy(mdp, pi)?;
            Ok(d.summed_over_time()
                .iter()
                .zip(d_e.summed_over_time())
                .map(|(a, b)| (a - b) / h)
                .collect())
        })
        .collect()
}
