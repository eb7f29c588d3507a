//! The experiment file format: `key = value` lines grouped under `[section]`
//! headers. Blank lines and lines starting with `#` or `;` are ignored, as is
//! anything after ` #` on a value line. Keys before the first header belong to
//! `[run]`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use irl_lab_core::driver::{ClassKind, EnvSpec, EvalMode, ExpertOccupancy, RunConfig};
use irl_lab_core::env::maze::MAZE7;
use irl_lab_core::env::DEFAULT_STATE_CAP;
use irl_lab_core::oracles::{BufferMode, OracleConfig, OracleVariant, ResetSchedule};
use irl_lab_core::reward::LearningRate;

/// Every accepted key with its default, as shown by `--help`.
pub const REFERENCE: &str = "\
CONFIG FILE KEYS (defaults in parentheses)
  [run]     name (run)  env = tree|maze (tree)  variant (hyq)
            outer_iters | T (30)  demo_count (64)  seed (0)
            eval_mode = exact|sampled (exact)  eval_rollouts (64)  eval_cadence (1)
            reward_lr = auto|<float> (auto)  reward_lr_schedule = anytime|constant (anytime)
            player_expert = demos|exact (demos)  reset_access (false)
  [tree]    depth (6)  horizon (depth)  reward_class = family|box (family)
            negations (false)  state_cap (65536)
  [maze]    layout = maze7 (maze7)  layout_file = <path, relative to the config>
            horizon (30)  p_tremble in [0, 1) (0.05)
  [oracle]  batch_size (8)  inner_steps (10)  model_smoothing = auto|<float> (auto = 1/|S|)
            reset_schedule = uniform|window (uniform)  reset_window = kappa in (0, 1] (0.5)
            exploration_eps in [0, 1) (0.05)  bc_smoothing (0.01)
            buffer = cumulative|fresh (cumulative)  persist_buffer (true)  filter_hybrid (false)
  [sweep]   seeds = 0..10 | 0,1,2 (the run seed)  variants = hyq,on_policy_fqi (the run variant)
  [output]  csv (true)  summary_json (true)
Variants: best_response, on_policy_fqi, hyq, filter_fqi, hyper, bc, expert.";

const KEYS: &[(&str, &[&str])] = &[
    (
        "run",
        &[
            "name", "env", "variant", "outer_iters", "T", "demo_count", "seed", "eval_mode",
            "eval_rollouts", "eval_cadence", "reward_lr", "reward_lr_schedule", "player_expert",
            "reset_access",
        ],
    ),
    ("tree", &["depth", "horizon", "reward_class", "negations", "state_cap"]),
    ("maze", &["layout", "layout_file", "horizon", "p_tremble"]),
    (
        "oracle",
        &[
            "batch_size", "inner_steps", "model_smoothing", "reset_schedule", "reset_window",
            "exploration_eps", "bc_smoothing", "buffer", "persist_buffer", "filter_hybrid",
        ],
    ),
    ("sweep", &["seeds", "variants"]),
    ("output", &["csv", "summary_json"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A parsed experiment: one run definition plus the sweep and output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    /// `run.oracle.variant` and `run.seed` are the single-run values.
    pub run: RunConfig,
    pub seeds: Vec<u64>,
    pub variants: Vec<OracleVariant>,
    pub eval_cadence: usize,
    pub emit_csv: bool,
    pub emit_summary: bool,
}

impl ExperimentConfig {
    /// `<name>-<variant>-s<seed>`, the stem of every output file.
    pub fn run_id(&self, variant: OracleVariant, seed: u64) -> String {
        format!("{}-{}-s{}", self.name, variant.name(), seed)
    }

    /// The concrete run for `(variant, seed)`.
    pub fn job(&self, variant: OracleVariant, seed: u64) -> RunConfig {
        let mut run = self.run.clone();
        run.oracle.variant = variant;
        run.seed = seed;
        run.run_id = self.run_id(variant, seed);
        run
    }

    /// Replaces the run seed and the sweep seeds.
    pub fn override_seed(&mut self, seed: u64) {
        self.run.seed = seed;
        self.seeds = vec![seed];
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Table {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Table {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|_| err_at(e, key, format!("cannot parse {:?}", e.value))),
        }
    }

    fn opt<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| err_at(e, key, format!("cannot parse {:?}", e.value))),
        }
    }

    fn flag(&self, section: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(e) => match e.value.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                v => Err(err_at(e, key, format!("expected true or false, found {v:?}"))),
            },
        }
    }

    fn choice<T: Copy>(&self, section: &str, key: &str, default: T, options: &[(&str, T)]) -> Result<T, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(e) => options
                .iter()
                .find(|(n, _)| *n == e.value)
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                    err_at(e, key, format!("expected one of {}, found {:?}", names.join(", "), e.value))
                }),
        }
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.get(section, key).map(|e| e.line)
    }
}

fn err_at(e: &Entry, key: &str, message: String) -> ConfigError {
    ConfigError {
        line: Some(e.line),
        field: Some(key.into()),
        message,
    }
}

fn range(table: &Table, section: &str, field: &str, message: &str) -> ConfigError {
    ConfigError {
        line: table.line_of(section, field),
        field: Some(field.into()),
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Table, ConfigError> {
    let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
    let mut current = "run".to_string();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError {
                line: Some(line),
                field: None,
                message: format!("malformed section header {trimmed:?}"),
            })?;
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError {
                    line: Some(line),
                    field: None,
                    message: format!("unknown section [{name}]"),
                });
            }
            current = name.to_string();
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError {
            line: Some(line),
            field: None,
            message: format!("expected `key = value`, found {trimmed:?}"),
        })?;
        let key = key.trim();
        let value = match value.find(" #") {
            Some(p) => &value[..p],
            None => value,
        }
        .trim();
        let known = KEYS
            .iter()
            .find(|(s, _)| *s == current)
            .is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            return Err(ConfigError {
                line: Some(line),
                field: Some(key.into()),
                message: format!("unknown key in [{current}]"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError {
                line: Some(line),
                field: Some(key.into()),
                message: "missing value".into(),
            });
        }
        let section = sections.entry(current.clone()).or_default();
        let canonical = if key == "T" { "outer_iters" } else { key };
        if let Some(prev) = section.get(canonical) {
            return Err(ConfigError {
                line: Some(line),
                field: Some(key.into()),
                message: format!("duplicate key (first set on line {})", prev.line),
            });
        }
        section.insert(
            canonical.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(Table { sections })
}

fn parse_seeds(e: &Entry) -> Result<Vec<u64>, ConfigError> {
    let bad = || err_at(e, "seeds", format!("expected `a..b` or a comma list, found {:?}", e.value));
    let seeds: Vec<u64> = if let Some((a, b)) = e.value.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..b).collect()
    } else {
        e.value
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(err_at(e, "seeds", "the seed list is empty".into()));
    }
    Ok(seeds)
}

fn parse_variant(e: &Entry, key: &str, name: &str) -> Result<OracleVariant, ConfigError> {
    OracleVariant::from_name(name).ok_or_else(|| err_at(e, key, format!("unknown variant {name:?}")))
}

/// Parses a config file. Relative `layout_file` paths resolve against the
/// file's directory.
pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        field: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text, path.parent())
}

pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let t = tokenize(text)?;

    let env_kind = t.choice("run", "env", "tree", &[("tree", "tree"), ("maze", "maze")])?;
    let env = if env_kind == "tree" {
        if t.sections.contains_key("maze") {
            return Err(ConfigError {
                line: None,
                field: Some("env".into()),
                message: "a [maze] section needs env = maze".into(),
            });
        }
        let depth: usize = t.parse("tree", "depth", 6)?;
        if depth == 0 {
            return Err(range(&t, "tree", "depth", "must be at least 1"));
        }
        let horizon: Option<usize> = t.opt("tree", "horizon")?;
        if horizon == Some(0) {
            return Err(range(&t, "tree", "horizon", "must be at least 1"));
        }
        EnvSpec::Tree {
            depth,
            horizon,
            class: t.choice("tree", "reward_class", ClassKind::Family, &[("family", ClassKind::Family), ("box", ClassKind::Box)])?,
            negations: t.flag("tree", "negations", false)?,
            state_cap: t.parse("tree", "state_cap", DEFAULT_STATE_CAP)?,
        }
    } else {
        if t.sections.contains_key("tree") {
            return Err(ConfigError {
                line: None,
                field: Some("env".into()),
                message: "a [tree] section needs env = tree".into(),
            });
        }
        let layout = match (t.get("maze", "layout"), t.get("maze", "layout_file")) {
            (Some(e), Some(_)) => return Err(err_at(e, "layout", "set either layout or layout_file".into())),
            (Some(e), None) => match e.value.as_str() {
                "maze7" => MAZE7.to_string(),
                other => return Err(err_at(e, "layout", format!("unknown built-in layout {other:?}"))),
            },
            (None, Some(e)) => {
                let mut p = PathBuf::from(&e.value);
                if p.is_relative() {
                    if let Some(base) = base_dir {
                        p = base.join(p);
                    }
                }
                std::fs::read_to_string(&p)
                    .map_err(|io| err_at(e, "layout_file", format!("cannot read {}: {io}", p.display())))?
            }
            (None, None) => MAZE7.to_string(),
        };
        let horizon: usize = t.parse("maze", "horizon", 30)?;
        if horizon == 0 {
            return Err(range(&t, "maze", "horizon", "must be at least 1"));
        }
        let p_tremble: f64 = t.parse("maze", "p_tremble", 0.05)?;
        if !(0.0..1.0).contains(&p_tremble) {
            return Err(range(&t, "maze", "p_tremble", "must lie in [0, 1)"));
        }
        EnvSpec::Maze {
            layout,
            horizon,
            p_tremble,
        }
    };

    let variant_entry = t.get("run", "variant");
    let variant = match variant_entry {
        Some(e) => parse_variant(e, "variant", &e.value)?,
        None => OracleVariant::HyQ,
    };
    let mut oracle = OracleConfig::new(variant);
    oracle.batch_size = t.parse("oracle", "batch_size", oracle.batch_size)?;
    oracle.inner_steps = t.parse("oracle", "inner_steps", oracle.inner_steps)?;
    for key in ["batch_size", "inner_steps"] {
        if t.get("oracle", key).is_some_and(|e| e.value == "0") {
            return Err(range(&t, "oracle", key, "must be at least 1"));
        }
    }
    oracle.model_smoothing = match t.get("oracle", "model_smoothing") {
        Some(e) if e.value == "auto" => None,
        Some(_) => t.opt("oracle", "model_smoothing")?,
        None => None,
    };
    let kappa: f64 = t.parse("oracle", "reset_window", 0.5)?;
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(range(&t, "oracle", "reset_window", "must lie in (0, 1]; the window would be empty"));
    }
    oracle.reset_schedule = t.choice(
        "oracle",
        "reset_schedule",
        ResetSchedule::Uniform,
        &[("uniform", ResetSchedule::Uniform), ("window", ResetSchedule::Window { kappa })],
    )?;
    oracle.exploration_eps = t.parse("oracle", "exploration_eps", oracle.exploration_eps)?;
    oracle.bc_smoothing = t.parse("oracle", "bc_smoothing", oracle.bc_smoothing)?;
    oracle.buffer = t.choice("oracle", "buffer", BufferMode::Cumulative, &[("cumulative", BufferMode::Cumulative), ("fresh", BufferMode::Fresh)])?;
    oracle.persist_buffer = t.flag("oracle", "persist_buffer", true)?;
    oracle.filter_hybrid = t.flag("oracle", "filter_hybrid", false)?;

    let name: String = t.parse("run", "name", "run".to_string())?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') {
        return Err(range(&t, "run", "name", "use letters, digits, '_', '-' or '.'"));
    }
    let mut run = RunConfig::new(env, oracle);
    run.reset_access = t.flag("run", "reset_access", false)?;
    run.outer_iters = t.parse("run", "outer_iters", 30)?;
    run.demo_count = t.parse("run", "demo_count", 64)?;
    run.seed = t.parse("run", "seed", 0)?;
    run.eval_mode = t.choice("run", "eval_mode", EvalMode::Exact, &[("exact", EvalMode::Exact), ("sampled", EvalMode::Sampled)])?;
    run.eval_rollouts = t.parse("run", "eval_rollouts", 64)?;
    run.player_expert = t.choice(
        "run",
        "player_expert",
        ExpertOccupancy::Demos,
        &[("demos", ExpertOccupancy::Demos), ("exact", ExpertOccupancy::Exact)],
    )?;
    let anytime = t.choice("run", "reward_lr_schedule", true, &[("anytime", true), ("constant", false)])?;
    run.reward_lr = match t.get("run", "reward_lr") {
        None => None,
        Some(e) if e.value == "auto" => None,
        Some(_) => {
            let eta: f64 = t.opt("run", "reward_lr")?.expect("present");
            Some(if anytime { LearningRate::Anytime(eta) } else { LearningRate::Constant(eta) })
        }
    };
    let eval_cadence: usize = t.parse("run", "eval_cadence", 1)?;
    if eval_cadence == 0 {
        return Err(range(&t, "run", "eval_cadence", "must be at least 1"));
    }

    if let Err(e) = run.validate() {
        return Err(match e {
            irl_lab_core::Error::Range { field, reason, .. } => {
                let section = KEYS
                    .iter()
                    .find(|(_, keys)| keys.contains(&field))
                    .map_or("run", |(s, _)| *s);
                range(&t, section, field, reason)
            }
            other => ConfigError {
                line: None,
                field: None,
                message: other.to_string(),
            },
        });
    }

    let seeds = match t.get("sweep", "seeds") {
        Some(e) => parse_seeds(e)?,
        None => vec![run.seed],
    };
    let variants = match t.get("sweep", "variants") {
        Some(e) => e
            .value
            .split(',')
            .map(|v| parse_variant(e, "variants", v.trim()))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![variant],
    };
    Ok(ExperimentConfig {
        name,
        run,
        seeds,
        variants,
        eval_cadence,
        emit_csv: t.flag("output", "csv", true)?,
        emit_summary: t.flag("output", "summary_json", true)?,
    })
}
