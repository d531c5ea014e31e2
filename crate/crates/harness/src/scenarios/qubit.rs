use std::f64::consts::{FRAC_PI_2, PI, TAU};

use afc_core::io;
use afc_core::photonics::{
    classical_bound, detect, encode_qubit, fidelity_el, fidelity_el_background_subtracted,
    superposition_fidelity, total_fidelity_with_uncertainty, umzi_for_qubit,
    visibility_and_fidelity, ElFidelity, Estimate, InterferometerSpec, PhotonicsError, QubitState,
    TimeBinGeometry, VisibilityFit, Window,
};
use afc_core::propagation::{echo_efficiency, CombMemory, PulseTrain};
use rayon::prelude::*;
use serde::Serialize;

use super::storage::{detector_model, prepare_memory};
use super::Summary;
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::output::{derive_seed, ArtifactKind, RunContext};

struct Setup {
    memory: CombMemory<f64>,
    geometry: TimeBinGeometry<f64>,
    tau_ns: f64,
    /// Early and late detection gates on the echo, one pulse width each.
    gates: [Window; 2],
    /// Central interference peak of the analyzed echo.
    central: Window,
    noise: Window,
}

fn setup(ctx: &mut RunContext<'_>) -> Result<Setup> {
    let cfg = ctx.config;
    let comb = cfg.comb.expect("validated");
    let q = cfg.qubit.clone().expect("validated");
    let tau = comb.storage_time_ns();
    let span = q.early_center_ns + 2.0 * q.bin_separation_ns + 3.0 * tau + 6.0 * q.pulse_fwhm_ns;
    let floor = ((span / q.dt_ns).ceil() as usize).max(q.min_record_len.unwrap_or(0));
    let memory = ctx.stage("prepare", || prepare_memory(&comb, q.dt_ns, floor))?;
    let geometry = TimeBinGeometry {
        pulse_fwhm_ns: q.pulse_fwhm_ns,
        bin_separation_ns: q.bin_separation_ns,
        mean_photon_number: q.mean_photon_number,
        early_center_ns: q.early_center_ns,
        t0_ns: 0.0,
        dt_ns: q.dt_ns,
        len: memory.record_len(),
    };
    let [e, l] = geometry.bin_windows(tau, q.pulse_fwhm_ns);
    let central = Window::centered(geometry.late_center_ns() + tau, q.pulse_fwhm_ns);
    let end = memory.record_len() as f64 * q.dt_ns;
    let noise_center = cfg
        .analysis()
        .noise_window_center_ns
        .unwrap_or((central.end_ns + end) / 2.0);
    Ok(Setup {
        memory,
        geometry,
        tau_ns: tau,
        gates: [Window::new(e.0, e.1), Window::new(l.0, l.1)],
        central,
        noise: Window::centered(noise_center, q.pulse_fwhm_ns),
    })
}

fn interferometer(
    cfg: &ScenarioConfig,
    geometry: &TimeBinGeometry<f64>,
    phase: f64,
) -> InterferometerSpec<f64> {
    let i = cfg.interferometer.clone().expect("validated");
    InterferometerSpec {
        arm_delay_ns: i.arm_delay_ns.unwrap_or(geometry.bin_separation_ns),
        analysis_phase: phase,
        splitter_ratios: i.splitter_ratios,
        arm_transmissions: i.arm_transmissions,
        port: i.port,
    }
}

fn stored(
    s: &Setup,
    state: QubitState<f64>,
) -> std::result::Result<PulseTrain<f64>, PhotonicsError> {
    let input = encode_qubit(state, &s.geometry)?;
    Ok(s.memory.store(&input)?)
}

/// Counts in the central gate after the analyzer at `phase`.
fn central_counts(
    cfg: &ScenarioConfig,
    s: &Setup,
    echo: &PulseTrain<f64>,
    phase: f64,
    seed: u64,
) -> std::result::Result<u64, PhotonicsError> {
    let det = cfg.detector.as_ref().expect("validated");
    let out = umzi_for_qubit(echo, &interferometer(cfg, &s.geometry, phase), &s.geometry)?;
    let hist = detect(&out, &detector_model(det, seed), det.n_trials)?;
    Ok(hist.counts_in(&s.central))
}

/// Single-bin echo efficiency of the prepared comb.
fn memory_efficiency(
    s: &Setup,
) -> std::result::Result<f64, afc_core::propagation::PropagationError> {
    let g = &s.geometry;
    let input = PulseTrain::gaussian(g.early_center_ns, g.pulse_fwhm_ns, 1.0, 0.0, g.dt_ns, g.len)?;
    let out = s.memory.store(&input)?;
    let window = 6.0 * g.pulse_fwhm_ns;
    Ok(echo_efficiency(&out, &input, s.tau_ns, window.min(s.tau_ns * 0.99))?.efficiency)
}

#[derive(Serialize)]
struct PairCounts {
    state: &'static str,
    phase_rad: f64,
    constructive: u64,
    destructive: u64,
    fidelity: Estimate,
}

#[derive(Serialize)]
struct QubitReport {
    mean_photon_number: f64,
    memory_efficiency: f64,
    el_raw: ElFidelity,
    el_background_subtracted: ElFidelity,
    superposition: Vec<PairCounts>,
    f_pm: Estimate,
    f_plus_i: Estimate,
    f_total: Estimate,
    classical_bound: f64,
    exceeds_classical: bool,
}

pub fn qubit_interference(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let cfg = ctx.config;
    let s = setup(ctx)?;
    let det = cfg.detector.clone().expect("validated");
    let eff = ctx.stage("propagate", || memory_efficiency(&s))?;
    let states = [
        ("e", QubitState::E),
        ("l", QubitState::L),
        ("plus", QubitState::Plus),
        ("minus", QubitState::Minus),
        ("plus_i", QubitState::PlusI),
    ];
    let echoes: Vec<PulseTrain<f64>> = ctx.stage("propagate", || {
        states
            .iter()
            .map(|&(_, st)| stored(&s, st))
            .collect::<std::result::Result<_, _>>()
    })?;
    let base = ctx.seed("detect");
    let seed = |label: &str| derive_seed(base, label);

    let (raw, sub) = ctx.stage("detect", || {
        let dm = |label| detector_model(&det, seed(label));
        let he = detect(&echoes[0], &dm("e"), det.n_trials)?;
        let hl = detect(&echoes[1], &dm("l"), det.n_trials)?;
        let raw = fidelity_el(&he, &hl, &s.gates[0], &s.gates[1])?;
        let sub = fidelity_el_background_subtracted(&he, &hl, &s.gates[0], &s.gates[1], &s.noise)?;
        Ok::<_, PhotonicsError>((raw, sub))
    })?;

    // (prepared, opposite, analyzer phase): the prepared state interferes
    // constructively at that phase and the opposite state destructively
    let pairs = [("plus", 2usize, 3usize, 0.0), ("minus", 3, 2, PI)];
    let superposition = ctx.stage("detect", || {
        pairs
            .iter()
            .map(|&(name, a, b, phase)| {
                let c = central_counts(cfg, &s, &echoes[a], phase, seed(&format!("{name}/c")))?;
                let d = central_counts(cfg, &s, &echoes[b], phase, seed(&format!("{name}/d")))?;
                Ok(PairCounts {
                    state: name,
                    phase_rad: phase,
                    constructive: c,
                    destructive: d,
                    fidelity: superposition_fidelity(c, d)?,
                })
            })
            .collect::<std::result::Result<Vec<_>, PhotonicsError>>()
    })?;
    let f_plus_i = ctx.stage("detect", || {
        let c = central_counts(cfg, &s, &echoes[4], FRAC_PI_2, seed("plus_i/c"))?;
        let d = central_counts(cfg, &s, &echoes[4], -FRAC_PI_2, seed("plus_i/d"))?;
        superposition_fidelity(c, d)
    })?;

    let f_pm = Estimate {
        value: superposition.iter().map(|p| p.fidelity.value).sum::<f64>() / 2.0,
        sigma: superposition
            .iter()
            .map(|p| p.fidelity.sigma.powi(2))
            .sum::<f64>()
            .sqrt()
            / 2.0,
    };
    let (ft, ft_sigma) = total_fidelity_with_uncertainty(
        raw.average.value,
        raw.average.sigma,
        f_pm.value,
        f_pm.sigma,
    );
    let mu = s.geometry.mean_photon_number;
    let bound = ctx.stage("analyze", || classical_bound(mu, eff))?;
    let report = QubitReport {
        mean_photon_number: mu,
        memory_efficiency: eff,
        el_raw: raw,
        el_background_subtracted: sub,
        superposition,
        f_pm,
        f_plus_i,
        f_total: Estimate {
            value: ft,
            sigma: ft_sigma,
        },
        classical_bound: bound,
        exceeds_classical: ft > bound,
    };
    ctx.add_report("qubit_fidelity.json", &report);
    let mut summary = Summary::new();
    summary.insert("mean_photon_number".into(), mu);
    summary.insert("memory_efficiency".into(), eff);
    summary.insert("f_el".into(), raw.average.value);
    summary.insert("f_pm".into(), f_pm.value);
    summary.insert("f_total".into(), ft);
    summary.insert("f_total_sigma".into(), ft_sigma);
    summary.insert("classical_bound".into(), bound);
    Ok(summary)
}

#[derive(Serialize)]
struct FringeReport {
    analysis_phase_rad: f64,
    points: usize,
    fit: VisibilityFit,
}

pub fn fringe(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let cfg = ctx.config;
    let s = setup(ctx)?;
    let f = cfg.fringe.clone().expect("validated");
    let base = ctx.seed("detect");
    let alphas: Vec<f64> = (0..f.points)
        .map(|k| k as f64 * TAU / f.points as f64)
        .collect();
    let echoes: Vec<PulseTrain<f64>> = ctx.stage("propagate", || {
        alphas
            .par_iter()
            .map(|&a| stored(&s, QubitState::Custom { delta_alpha: a }))
            .collect::<std::result::Result<_, _>>()
    })?;
    let data: Vec<(f64, f64)> = ctx.stage("detect", || {
        alphas
            .par_iter()
            .zip(&echoes)
            .enumerate()
            .map(|(k, (&a, echo))| {
                let c = central_counts(
                    cfg,
                    &s,
                    echo,
                    f.analysis_phase_rad,
                    derive_seed(base, &k.to_string()),
                )?;
                Ok((a, c as f64))
            })
            .collect::<std::result::Result<_, PhotonicsError>>()
    })?;
    let fit = ctx.stage("analyze", || visibility_and_fidelity(&data))?;
    ctx.add_csv(
        "fringe.csv",
        ArtifactKind::Fringe,
        "central-peak counts",
        |w, m| io::write_fringe(w, &data, m),
    );
    ctx.add_report(
        "visibility.json",
        &FringeReport {
            analysis_phase_rad: f.analysis_phase_rad,
            points: f.points,
            fit,
        },
    );
    let mut summary = Summary::new();
    summary.insert("visibility".into(), fit.visibility);
    summary.insert("visibility_sigma".into(), fit.visibility_sigma);
    summary.insert("fidelity".into(), fit.fidelity);
    summary.insert("phase_offset_rad".into(), fit.phase_offset);
    Ok(summary)
}
