use afc_core::coherence::{
    fit_decay, model_fluorescence, model_hole_decay, model_two_pulse_echo_with, CoherenceError,
    DecayModel, DecayTrace, FitReport, TimeUnit,
};
use afc_core::io;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::Summary;
use crate::error::Result;
use crate::output::{ArtifactKind, RunContext};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Adds Gaussian noise of σ = `scale/snr` when `snr` is given.
fn synthesize(
    unit: TimeUnit,
    t: Vec<f64>,
    clean: Vec<f64>,
    scale: f64,
    snr: Option<f64>,
    seed: u64,
) -> std::result::Result<DecayTrace<f64>, CoherenceError> {
    match snr {
        None => DecayTrace::new(unit, t, clean, None),
        Some(snr) => {
            let sigma = scale / snr;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nd = Normal::new(0.0, sigma).expect("σ is positive");
            let y = clean.iter().map(|v| v + nd.sample(&mut rng)).collect();
            DecayTrace::new(unit, t, y, Some(vec![sigma; clean.len()]))
        }
    }
}

#[derive(Serialize)]
struct Recovered {
    name: String,
    truth: f64,
    fitted: f64,
    sigma: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct FitDocument<'a> {
    unit: &'static str,
    snr: Option<f64>,
    recovered: Vec<Recovered>,
    fit: &'a FitReport<f64>,
}

fn finish(
    ctx: &mut RunContext<'_>,
    trace: &DecayTrace<f64>,
    model: DecayModel,
    truths: &[(&str, f64)],
    snr: Option<f64>,
) -> Result<Summary> {
    let report = ctx.stage("fit", || fit_decay(trace, model, None))?;
    let recovered: Vec<Recovered> = truths
        .iter()
        .map(|&(name, truth)| {
            let p = report.get(name).expect("model parameter names are fixed");
            Recovered {
                name: name.into(),
                truth,
                fitted: p.value,
                sigma: p.sigma,
                relative_error: (p.value - truth).abs() / truth.abs(),
            }
        })
        .collect();
    let mut summary = Summary::new();
    for r in &recovered {
        summary.insert(r.name.clone(), r.fitted);
        summary.insert(format!("{}_relative_error", r.name), r.relative_error);
    }
    summary.insert("reduced_chi2".into(), report.reduced_chi2);
    ctx.add_csv("trace.csv", ArtifactKind::Trace, model.label(), |w, m| {
        io::write_trace(w, trace, m)
    });
    ctx.add_report(
        "fit.json",
        &FitDocument {
            unit: trace.unit().symbol(),
            snr,
            recovered,
            fit: &report,
        },
    );
    Ok(summary)
}

pub fn fluorescence(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let c = ctx.config.fluorescence.clone().expect("validated");
    let seed = ctx.seed("synthesize");
    let trace = ctx.stage("synthesize", || {
        let t = linspace(0.0, c.span_ms, c.points);
        let y = t
            .iter()
            .map(|&t| model_fluorescence(t, c.amplitude, c.t1_ms, c.offset))
            .collect();
        synthesize(TimeUnit::Ms, t, y, c.amplitude, c.snr, seed)
    })?;
    finish(
        ctx,
        &trace,
        DecayModel::SingleExp,
        &[("t1", c.t1_ms), ("amplitude", c.amplitude)],
        c.snr,
    )
}

pub fn photon_echo(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let c = ctx.config.photon_echo.clone().expect("validated");
    let seed = ctx.seed("synthesize");
    let trace = ctx.stage("synthesize", || {
        let t = linspace(c.t12_start_us, c.t12_end_us, c.points);
        let y = t
            .iter()
            .map(|&t| model_two_pulse_echo_with(c.convention, t, c.amplitude, c.t2_us))
            .collect();
        synthesize(TimeUnit::Us, t, y, c.amplitude, c.snr, seed)
    })?;
    let model = DecayModel::TwoPulseEcho {
        convention: c.convention,
    };
    finish(
        ctx,
        &trace,
        model,
        &[("t2", c.t2_us), ("amplitude", c.amplitude)],
        c.snr,
    )
}

pub fn hole_decay(ctx: &mut RunContext<'_>) -> Result<Summary> {
    let c = ctx.config.hole_decay.clone().expect("validated");
    let seed = ctx.seed("synthesize");
    let trace = ctx.stage("synthesize", || {
        let t = logspace(c.start_s, c.end_s, c.points);
        let y = t
            .iter()
            .map(|&t| model_hole_decay(t, c.amplitudes, c.lifetimes_s, c.offset))
            .collect();
        let scale = c.amplitudes.iter().sum::<f64>();
        synthesize(TimeUnit::S, t, y, scale, c.snr, seed)
    })?;
    // fitted components come back sorted by lifetime
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| c.lifetimes_s[a].total_cmp(&c.lifetimes_s[b]));
    let truths = [
        ("tau1", c.lifetimes_s[order[0]]),
        ("tau2", c.lifetimes_s[order[1]]),
        ("tau3", c.lifetimes_s[order[2]]),
    ];
    finish(ctx, &trace, DecayModel::TripleExp, &truths, c.snr)
}
