use afc_core::ensemble::{
    burn_comb, extract_comb_params, BurnSchedule, CombSpec, EnsembleError, FrequencyGrid,
    SpectralProfile,
};
use afc_core::io;
use afc_core::photonics::{detect, snr, CountHistogram, DetectorModel, SnrEstimate, Window};
use afc_core::propagation::{
    afc_efficiency_analytic, default_echo_window_ns, echo_efficiency, mode_efficiencies,
    CombMemory, MemoryResult, PropagationError, PulseTrain,
};
use serde::Serialize;

use super::Summary;
use crate::config::{DetectorConfig, PulseConfig, ScenarioConfig};
use crate::error::Result;
use crate::output::{ArtifactKind, RunContext};

/// Prepared memory plus the input train and its transmitted/echoed output.
pub struct Propagated {
    pub memory: CombMemory<f64>,
    pub input: PulseTrain<f64>,
    pub output: PulseTrain<f64>,
    pub centers_ns: Vec<f64>,
}

pub fn pulse_centers(p: &PulseConfig) -> Vec<f64> {
    let s = p.spacing_ns.unwrap_or(0.0);
    (0..p.count)
        .map(|k| p.first_center_ns + k as f64 * s)
        .collect()
}

pub fn prepare_memory(
    comb: &CombSpec<f64>,
    dt_ns: f64,
    min_len: usize,
) -> std::result::Result<CombMemory<f64>, PropagationError> {
    CombMemory::new(*comb, dt_ns, min_len)
}

/// Equal-energy Gaussian train; each pulse carries `mean_photon_number`.
pub fn input_train(
    p: &PulseConfig,
    len: usize,
) -> std::result::Result<PulseTrain<f64>, PropagationError> {
    let mut train = PulseTrain::zeros(0.0, p.dt_ns, len)?;
    for c in pulse_centers(p) {
        let g = PulseTrain::gaussian(c, p.fwhm_ns, p.mean_photon_number, 0.0, p.dt_ns, len)?;
        train = train.try_add(&g)?;
    }
    Ok(train)
}

fn record_floor(p: &PulseConfig, comb: &CombSpec<f64>) -> usize {
    let last = pulse_centers(p).last().copied().unwrap_or(0.0);
    let span = last + 3.0 * comb.storage_time_ns() + 6.0 * p.fwhm_ns;
    let need = (span / p.dt_ns).ceil() as usize;
    need.max(p.min_record_len.unwrap_or(0))
}

pub fn propagate_stage(ctx: &mut RunContext<'_>) -> Result<Propagated> {
    let cfg = ctx.config;
    let comb = cfg.comb.expect("validated");
    let p = cfg.pulse.clone().expect("validated");
    let memory = ctx.stage("prepare", || {
        prepare_memory(&comb, p.dt_ns, record_floor(&p, &comb))
    })?;
    let (input, output) = ctx.stage("propagate", || {
        let input = input_train(&p, memory.record_len())?;
        let output = memory.store(&input)?;
        Ok::<_, PropagationError>((input, output))
    })?;
    Ok(Propagated {
        memory,
        input,
        output,
        centers_ns: pulse_centers(&p),
    })
}

pub fn detector_model(d: &DetectorConfig, seed: u64) -> DetectorModel<f64> {
    DetectorModel {
        quantum_efficiency: d.quantum_efficiency,
        dark_rate_per_s: d.dark_rate_per_s,
        gate: d.gate_start_ns.zip(d.gate_end_ns),
        rng_seed: seed,
    }
}

pub fn echo_window_ns(cfg: &ScenarioConfig, fwhm_ns: f64) -> f64 {
    cfg.analysis()
        .echo_window_ns
        .unwrap_or_else(|| default_echo_window_ns(fwhm_ns))
}

/// Signal window on the first echo of the first pulse and an equal-length
/// noise window in the echo-free tail of the record.
pub fn snr_windows(cfg: &ScenarioConfig, run: &Propagated, window_ns: f64) -> (Window, Window) {
    let echo = run.input.centroid().unwrap_or(run.centers_ns[0]) + run.memory.storage_time_ns();
    let end = run.output.end_time();
    let noise_center = cfg
        .analysis()
        .noise_window_center_ns
        .unwrap_or((echo + end) / 2.0);
    (
        Window::centered(echo, window_ns),
        Window::centered(noise_center, window_ns),
    )
}

/// Detection and SNR for a prepared single-pulse run; used by calibration.
pub fn detect_snr(
    cfg: &ScenarioConfig,
    run: &Propagated,
    det: &DetectorConfig,
    seed: u64,
) -> std::result::Result<(CountHistogram, SnrEstimate), afc_core::photonics::PhotonicsError> {
    let p = cfg.pulse.as_ref().expect("validated");
    let (signal, noise) = snr_windows(cfg, run, echo_window_ns(cfg, p.fwhm_ns));
    let hist = detect(&run.output, &detector_model(det, seed), det.n_trials)?;
    let s = snr(&hist, &signal, &noise)?;
    Ok((hist, s))
}

#[derive(Serialize)]
struct StorageReport<'a> {
    memory: &'a MemoryResult<f64>,
    storage_time_ns: f64,
    finesse: f64,
    analytic_efficiency: f64,
    snr: &'a SnrEstimate,
    signal_window: Window,
    noise_window: Window,
}

fn comb_excerpt(mem: &CombMemory<f64>) -> std::result::Result<SpectralProfile<f64>, EnsembleError> {
    let (lo, hi) = mem.spec().required_span();
    let p = mem.profile();
    let (f, d): (Vec<f64>, Vec<f64>) = p.iter().filter(|(f, _)| *f >= lo && *f <= hi).unzip();
    SpectralProfile::from_samples(&f, d)
}

fn write_traces(ctx: &mut RunContext<'_>, run: &Propagated) -> Result<()> {
    let comb = ctx.stage("analyze", || comb_excerpt(&run.memory))?;
    ctx.add_csv(
        "comb.csv",
        ArtifactKind::Profile,
        "comb optical depth",
        |w, m| io::write_profile(w, &comb, m),
    );
    ctx.add_csv("input.csv", ArtifactKind::Pulse, "input field", |w, m| {
        io::write_pulse(w, &run.input, m)
    });
    ctx.add_csv("output.csv", ArtifactKind::Pulse, "output field", |w, m| {
        io::write_pulse(w, &run.output, m)
    });
    Ok(())
}

pub fn storage(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let cfg = ctx.config;
    let run = propagate_stage(ctx)?;
    let p = cfg.pulse.clone().expect("validated");
    let det = cfg.detector.clone().expect("validated");
    let window = echo_window_ns(cfg, p.fwhm_ns);
    let tau = run.memory.storage_time_ns();
    let result = ctx.stage("analyze", || {
        echo_efficiency(&run.output, &run.input, tau, window)
    })?;
    let seed = ctx.seed("detect");
    let (hist, s) = ctx.stage("detect", || detect_snr(cfg, &run, &det, seed))?;
    let (signal_window, noise_window) = snr_windows(cfg, &run, window);
    let spec = run.memory.spec();
    let analytic = afc_efficiency_analytic(spec.comb_depth, spec.finesse(), spec.background_depth);

    write_traces(ctx, &run)?;
    ctx.add_csv(
        "histogram.csv",
        ArtifactKind::Histogram,
        "detection histogram",
        |w, m| io::write_histogram(w, &hist, m),
    );
    ctx.add_report(
        "memory_result.json",
        &StorageReport {
            memory: &result,
            storage_time_ns: tau,
            finesse: spec.finesse(),
            analytic_efficiency: analytic,
            snr: &s,
            signal_window,
            noise_window,
        },
    );
    let mut summary = Summary::new();
    summary.insert("efficiency".into(), result.efficiency);
    summary.insert("echo_time_ns".into(), result.echo_time_ns);
    summary.insert("analytic_efficiency".into(), analytic);
    summary.insert("snr".into(), s.value);
    summary.insert("snr_sigma".into(), s.sigma);
    Ok(summary)
}

#[derive(Serialize)]
struct MultimodeReport<'a> {
    modes: &'a [MemoryResult<f64>],
    mean_efficiency: f64,
    max_relative_deviation: f64,
    order_preserved: bool,
    slot_width_ns: f64,
}

pub fn multimode(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let cfg = ctx.config;
    let run = propagate_stage(ctx)?;
    let p = cfg.pulse.clone().expect("validated");
    let det = cfg.detector.clone().expect("validated");
    let tau = run.memory.storage_time_ns();
    let width = echo_window_ns(cfg, p.fwhm_ns).min(p.spacing_ns.unwrap_or(f64::INFINITY));
    let modes = ctx.stage("analyze", || {
        mode_efficiencies(&run.output, &run.input, tau, &run.centers_ns, width)
    })?;
    let seed = ctx.seed("detect");
    let hist = ctx.stage("detect", || {
        detect(&run.output, &detector_model(&det, seed), det.n_trials)
    })?;

    let mean = modes.iter().map(|m| m.efficiency).sum::<f64>() / modes.len() as f64;
    let dev = modes
        .iter()
        .map(|m| (m.efficiency - mean).abs() / mean)
        .fold(0.0, f64::max);
    let ordered = modes
        .windows(2)
        .all(|w| w[1].echo_time_ns > w[0].echo_time_ns);

    write_traces(ctx, &run)?;
    ctx.add_csv(
        "histogram.csv",
        ArtifactKind::Histogram,
        "detection histogram",
        |w, m| io::write_histogram(w, &hist, m),
    );
    ctx.add_report(
        "modes.json",
        &MultimodeReport {
            modes: &modes,
            mean_efficiency: mean,
            max_relative_deviation: dev,
            order_preserved: ordered,
            slot_width_ns: width,
        },
    );
    let mut summary = Summary::new();
    summary.insert("mean_efficiency".into(), mean);
    summary.insert("max_relative_deviation".into(), dev);
    summary.insert("order_preserved".into(), if ordered { 1.0 } else { 0.0 });
    summary.insert("modes".into(), modes.len() as f64);
    Ok(summary)
}

#[derive(Serialize)]
struct PreparationReport {
    target: CombSpec<f64>,
    fitted: CombSpec<f64>,
    teeth_used: usize,
    teeth_skipped: usize,
    residual_rms: f64,
    analytic_efficiency_target: f64,
    analytic_efficiency_fitted: f64,
    max_population_error: f64,
}

pub fn comb_preparation(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let cfg = ctx.config;
    let target = cfg.comb.expect("validated");
    let ensemble = cfg.ensemble.clone().expect("validated");
    let b = cfg.burn.clone().expect("validated");
    let outcome = ctx.stage("burn", || {
        let (lo, hi) = target.required_span();
        let grid = FrequencyGrid::spanning(lo, hi, b.grid_step_mhz)?;
        let schedule = BurnSchedule::comb_complement(
            &target,
            grid,
            b.rate_per_s,
            b.pulse_duration_ms,
            b.repetitions,
            b.wait_after_ms,
        )?;
        burn_comb(&ensemble, &target, &schedule)
    })?;
    let fitted = ctx.stage("analyze", || extract_comb_params(&outcome.profile))?;
    let population_error = outcome
        .classes
        .iter()
        .map(|c| c.max_conservation_error)
        .fold(0.0, f64::max);
    let eff =
        |s: &CombSpec<f64>| afc_efficiency_analytic(s.comb_depth, s.finesse(), s.background_depth);

    ctx.add_csv(
        "initial.csv",
        ArtifactKind::Profile,
        "unburned absorption",
        |w, m| io::write_profile(w, &outcome.initial, m),
    );
    ctx.add_csv("comb.csv", ArtifactKind::Profile, "burned comb", |w, m| {
        io::write_profile(w, &outcome.profile, m)
    });
    let report = PreparationReport {
        target,
        fitted: fitted.spec,
        teeth_used: fitted.teeth.iter().filter(|t| t.accepted).count(),
        teeth_skipped: fitted.skipped,
        residual_rms: fitted.residual_rms,
        analytic_efficiency_target: eff(&target),
        analytic_efficiency_fitted: eff(&fitted.spec),
        max_population_error: population_error,
    };
    ctx.add_report("comb_fit.json", &report);
    let mut summary = Summary::new();
    summary.insert("tooth_spacing_mhz".into(), fitted.spec.tooth_spacing_mhz);
    summary.insert("tooth_fwhm_mhz".into(), fitted.spec.tooth_fwhm_mhz);
    summary.insert("comb_depth".into(), fitted.spec.comb_depth);
    summary.insert("background_depth".into(), fitted.spec.background_depth);
    summary.insert("finesse".into(), fitted.spec.finesse());
    summary.insert(
        "analytic_efficiency".into(),
        report.analytic_efficiency_fitted,
    );
    Ok(summary)
}
