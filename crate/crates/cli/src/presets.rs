//! Built-in experiment definitions, usable anywhere a config path is.

use crate::config::{parse_config, ConfigError, ExperimentConfig};

pub const PRESETS: &[(&str, &str)] = &[
    ("tree6", include_str!("../presets/tree6.cfg")),
    ("maze7", include_str!("../presets/maze7.cfg")),
    ("fig3", include_str!("../presets/fig3.cfg")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Option<Result<ExperimentConfig, ConfigError>> {
    preset_text(name).map(|t| parse_config(t, None))
}
