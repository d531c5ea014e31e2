//! End-to-end pipelines, one per scenario kind.

mod qubit;
mod spectroscopy;
pub(crate) mod storage;

use std::collections::BTreeMap;

use afc_core::propagation::{delay_line_comparison, DelayLine};
use serde::Serialize;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::Result;
use crate::output::RunContext;

/// Headline numbers of a run, keyed by name. Sweeps tabulate these.
pub type Summary = BTreeMap<String, f64>;

#[derive(Serialize)]
struct DelayReport {
    storage_time_ns: f64,
    group_index: f64,
    loss_db_per_m: f64,
    delay_line: DelayLine<f64>,
    transmission: f64,
}

fn delay_line(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let d = ctx.config.delay_line.clone().expect("validated");
    let line = delay_line_comparison(d.storage_time_ns, d.group_index, d.loss_db_per_m);
    let transmission = 10f64.powf(-line.loss_db / 10.0);
    ctx.add_report(
        "delay_line.json",
        &DelayReport {
            storage_time_ns: d.storage_time_ns,
            group_index: d.group_index,
            loss_db_per_m: d.loss_db_per_m,
            delay_line: line,
            transmission,
        },
    );
    let mut s = Summary::new();
    s.insert("length_m".into(), line.length_m);
    s.insert("loss_db".into(), line.loss_db);
    s.insert("transmission".into(), transmission);
    Ok(s)
}

/// Runs the pipeline of `ctx.config` without touching the file system.
pub fn execute(ctx: &mut RunContext<'_>) -> Result<Summary> {
    match ctx.config.scenario {
        ScenarioKind::Fluorescence => spectroscopy::fluorescence(ctx),
        ScenarioKind::PhotonEcho => spectroscopy::photon_echo(ctx),
        ScenarioKind::HoleDecay => spectroscopy::hole_decay(ctx),
        ScenarioKind::CombPreparation => storage::comb_preparation(ctx),
        ScenarioKind::Storage => storage::storage(ctx),
        ScenarioKind::Multimode => storage::multimode(ctx),
        ScenarioKind::QubitInterference => qubit::qubit_interference(ctx),
        ScenarioKind::Fringe => qubit::fringe(ctx),
        ScenarioKind::DelayLine => delay_line(ctx),
    }
}

/// Summary keys each scenario produces, in table order.
pub fn summary_keys(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::Fluorescence => &[
            "amplitude",
            "amplitude_relative_error",
            "reduced_chi2",
            "t1",
            "t1_relative_error",
        ],
        ScenarioKind::PhotonEcho => &[
            "amplitude",
            "amplitude_relative_error",
            "reduced_chi2",
            "t2",
            "t2_relative_error",
        ],
        ScenarioKind::HoleDecay => &[
            "reduced_chi2",
            "tau1",
            "tau1_relative_error",
            "tau2",
            "tau2_relative_error",
            "tau3",
            "tau3_relative_error",
        ],
        ScenarioKind::CombPreparation => &[
            "analytic_efficiency",
            "background_depth",
            "comb_depth",
            "finesse",
            "tooth_fwhm_mhz",
            "tooth_spacing_mhz",
        ],
        ScenarioKind::Storage => &[
            "analytic_efficiency",
            "echo_time_ns",
            "efficiency",
            "snr",
            "snr_sigma",
        ],
        ScenarioKind::Multimode => &[
            "max_relative_deviation",
            "mean_efficiency",
            "modes",
            "order_preserved",
        ],
        ScenarioKind::QubitInterference => &[
            "classical_bound",
            "f_el",
            "f_pm",
            "f_total",
            "f_total_sigma",
            "mean_photon_number",
            "memory_efficiency",
        ],
        ScenarioKind::Fringe => &[
            "fidelity",
            "phase_offset_rad",
            "visibility",
            "visibility_sigma",
        ],
        ScenarioKind::DelayLine => &["length_m", "loss_db", "transmission"],
    }
}

/// In-memory run: summary plus the context holding artifacts and timings.
pub fn evaluate(config: &ScenarioConfig) -> Result<(Summary, RunContext<'_>)> {
    let mut ctx = RunContext::new(config);
    let summary = execute(&mut ctx)?;
    Ok((summary, ctx))
}
