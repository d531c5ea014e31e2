//! Scenario runner for the `afc-core` simulator: config documents, end-to-end
//! pipelines, sweeps, dark-rate calibration and on-disk results.

// `!(x > 0)` is how the range checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod config;
pub mod error;
pub mod output;
pub mod plots;
pub mod scenarios;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use calibrate::{calibrate_dark_rate, Calibration};
pub use config::{ScenarioConfig, ScenarioKind};
pub use error::{HarnessError, Result};
pub use output::{derive_seed, RunManifest};
pub use plots::emit_plotdata;
pub use scenarios::{evaluate, Summary};
pub use sweep::{run_sweep, sweep, SweepTable};

/// Env var consulted for the output root when none is given.
pub const OUTPUT_ROOT_ENV: &str = "AFC_OUTPUT_ROOT";

/// Runs `config` and writes its artifacts and manifest under
/// `output_root/<output_dir>`.
pub fn run_scenario(config: &ScenarioConfig, output_root: &Path) -> Result<(RunManifest, PathBuf)> {
    let (_, ctx) = evaluate(config)?;
    output::persist(&output_root.join(config.output_dir_name()), ctx)
}

/// Configs shipped with the tool, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("fig2b", include_str!("../configs/fig2b.toml")),
    ("fig2c", include_str!("../configs/fig2c.toml")),
    ("fig2d", include_str!("../configs/fig2d.toml")),
    ("fig3a", include_str!("../configs/fig3a.toml")),
    ("fig3b", include_str!("../configs/fig3b.toml")),
    ("fig3c", include_str!("../configs/fig3c.toml")),
    ("fig4a", include_str!("../configs/fig4a.toml")),
    ("fig4d", include_str!("../configs/fig4d.toml")),
    ("delayline", include_str!("../configs/delayline.toml")),
];

pub fn bundled_config(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = BUNDLED.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        HarnessError::InvalidArgument(format!("no bundled config named `{name}`"))
    })?;
    ScenarioConfig::from_toml_str(text)
}
