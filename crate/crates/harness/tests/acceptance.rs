//! One line per acceptance criterion, `PASS`/`FAIL` with the measured numbers.
//! Runs without the libtest harness so the lines always show; exits non-zero
//! if any criterion fails.

use std::time::Instant;

use afc_core::coherence::{fit_decay, DecayModel, DecayTrace, TimeUnit};
use afc_core::ensemble::{
    burn_comb, BurnSchedule, CombSpec, FrequencyGrid, IonEnsembleParams, ToothShape,
};
use afc_core::photonics::{
    classical_bound, classical_bound_search, detect, total_fidelity, visibility_and_fidelity,
    DetectorModel,
};
use afc_core::propagation::{
    afc_efficiency_analytic, default_echo_window_ns, delay_line_comparison, echo_efficiency,
    mode_efficiencies, propagate, CombMemory, PulseTrain,
};
use afc_harness::{bundled_config, evaluate, ScenarioConfig};
use num_complex::Complex;

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn line(&mut self, id: &'static str, pass: bool, started: Instant, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "{id} {verdict} [{:.2} s] {detail}",
            started.elapsed().as_secs_f64()
        );
        if !pass {
            self.failed.push(id);
        }
    }
}

// mpmath evaluation of (d1/F)^2 exp(-d1/F) exp(-7/F^2) exp(-d0) at 50 digits
const EQ1_ORACLE: f64 = 0.011683295311605782;
const EQ1_QUOTED: f64 = 0.0141;

fn ac1(r: &mut Report) {
    let t = Instant::now();
    let v = afc_efficiency_analytic(1.61f64, 1.92, 1.36);
    let rel = (v / EQ1_ORACLE - 1.0).abs();
    r.line(
        "AC1",
        rel < 1e-12,
        t,
        format!("analytic efficiency {v:.15} vs oracle {EQ1_ORACLE} (rel {rel:.1e}); quoted figure {EQ1_QUOTED}"),
    );
}

fn ac2(r: &mut Report) {
    let t = Instant::now();
    let mem: CombMemory<f64> = CombMemory::new(CombSpec::er_tfln(), 1.0, 4096).unwrap();
    let input = PulseTrain::gaussian(300.0, 50.0, 1.0, 0.0, 1.0, mem.record_len()).unwrap();
    let out = mem.store(&input).unwrap();
    let res = echo_efficiency(&out, &input, 400.0, default_echo_window_ns(50.0)).unwrap();
    let delay = res.echo_time_ns - input.centroid().unwrap();
    r.line(
        "AC2",
        (delay - 400.0).abs() <= 2.0,
        t,
        format!("echo centroid {delay:.3} ns after the input (want 400 ± 2)"),
    );
}

fn ac3(r: &mut Report) {
    let t = Instant::now();
    let mut worst = (0.0f64, 0.0, 0.0, 0.0);
    for d1 in [0.5, 1.0, 2.0, 3.0] {
        for f in [2.0, 3.0, 4.0, 6.0] {
            for d0 in [0.0, 0.5, 1.5] {
                let spec = CombSpec {
                    tooth_spacing_mhz: 2.5,
                    tooth_fwhm_mhz: 2.5 / f,
                    comb_depth: d1,
                    background_depth: d0,
                    bandwidth_mhz: 40.0,
                    tooth_shape: ToothShape::Gaussian,
                };
                let mem = CombMemory::new(spec, 1.0, 4096).unwrap();
                let input =
                    PulseTrain::gaussian(300.0, 50.0, 1.0, 0.0, 1.0, mem.record_len()).unwrap();
                let out = mem.store(&input).unwrap();
                let num = echo_efficiency(&out, &input, 400.0, default_echo_window_ns(50.0))
                    .unwrap()
                    .efficiency;
                let ana: f64 = afc_efficiency_analytic(d1, f, d0);
                let rel = (num / ana - 1.0).abs();
                if rel > worst.0 {
                    worst = (rel, d1, f, d0);
                }
            }
        }
    }
    let (rel, d1, f, d0) = worst;
    r.line(
        "AC3",
        rel <= 0.15,
        t,
        format!(
            "48 grid points, worst numeric/analytic deviation {:.2}% at d1={d1} F={f} d0={d0}",
            rel * 100.0
        ),
    );
}

fn ac4(r: &mut Report) {
    let t = Instant::now();
    let run = |spacing: f64| {
        let mem: CombMemory<f64> = CombMemory::new(CombSpec::er_tfln(), 1.0, 4096).unwrap();
        let mut input = PulseTrain::zeros(0.0, 1.0, mem.record_len()).unwrap();
        let centers: Vec<f64> = (0..4).map(|k| 300.0 + spacing * k as f64).collect();
        for &c in &centers {
            input.add_gaussian(c, 50.0, Complex::new(1.0, 0.0));
        }
        let out = mem.store(&input).unwrap();
        let modes = mode_efficiencies(&out, &input, 400.0, &centers, spacing).unwrap();
        let ordered = modes
            .windows(2)
            .all(|w| w[1].echo_time_ns > w[0].echo_time_ns);
        let eff: Vec<f64> = modes.iter().map(|m| m.efficiency).collect();
        let mean = eff.iter().sum::<f64>() / eff.len() as f64;
        let dev = eff
            .iter()
            .map(|e| (e / mean - 1.0).abs())
            .fold(0.0, f64::max);
        (modes.len(), ordered, eff, mean, dev)
    };
    let (n, ordered, eff, mean, dev) = run(90.0);
    let (_, _, eff100, _, dev100) = run(100.0);
    let pct = |v: &[f64]| {
        v.iter()
            .map(|e| format!("{:.3}", e * 100.0))
            .collect::<Vec<_>>()
            .join("/")
    };
    r.line(
        "AC4",
        n == 4 && ordered && dev < 0.05,
        t,
        format!(
            "90 ns spacing: {n} echoes, order kept {ordered}, efficiencies {}% mean {:.3}%, max dev {:.2}% \
             (at 100 ns spacing: {}%, max dev {:.2}%)",
            pct(&eff),
            mean * 100.0,
            dev * 100.0,
            pct(&eff100),
            dev100 * 100.0
        ),
    );
}

fn ac5(r: &mut Report) {
    let t = Instant::now();
    let ft = total_fidelity(0.988f64, 0.966);
    let v = 0.94;
    let fringe: Vec<(f64, f64)> = (0..48)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / 48.0;
            (a, 1.0e4 * (1.0 + v * a.sin()))
        })
        .collect();
    let fit = visibility_and_fidelity(&fringe).unwrap();
    r.line(
        "AC5",
        (ft - 0.9733).abs() <= 0.0005 && (fit.fidelity - 0.970).abs() <= 5e-4,
        t,
        format!(
            "F_T(0.988, 0.966) = {ft:.5}; V = {:.4} gives F = {:.4}",
            fit.visibility, fit.fidelity
        ),
    );
}

fn ac6(r: &mut Report) {
    let t = Instant::now();
    let cfg = bundled_config("fig4a").unwrap();
    let (s, _) = evaluate(&cfg).unwrap();
    let bound = classical_bound(1.61f64, 0.0195).unwrap();
    let ft = s["f_total"];
    let mut gap = 0.0f64;
    for mu in [0.2, 0.6, 1.0, 1.61, 3.0] {
        for eta in [0.005, 0.0195, 0.1, 0.4, 0.9] {
            let g: f64 = classical_bound(mu, eta).unwrap();
            let b = classical_bound_search(mu, eta, 20, 1e-3).unwrap();
            gap = gap.max((g - b).abs());
        }
    }
    r.line(
        "AC6",
        ft > bound && gap <= 1e-3,
        t,
        format!(
            "simulated F_T = {ft:.4} ± {:.4} vs bound {bound:.4}; greedy vs search max gap {gap:.1e} on 5×5 grid",
            s["f_total_sigma"]
        ),
    );
}

fn ac7(r: &mut Report) {
    let t = Instant::now();
    let mut cfg = bundled_config("fig3b").unwrap();
    // calibrated on the bundled seed; checked on another
    cfg.seed = 90_210;
    let (s, _) = evaluate(&cfg).unwrap();
    let det = cfg.detector.as_ref().unwrap();
    let snr = s["snr"];
    r.line(
        "AC7",
        (49.3..=63.3).contains(&snr) && det.n_trials >= 100_000,
        t,
        format!(
            "SNR {snr:.2} ± {:.2} at dark rate {} s⁻¹, {} trials, efficiency {:.3}%",
            s["snr_sigma"],
            det.dark_rate_per_s,
            det.n_trials,
            s["efficiency"] * 100.0
        ),
    );
}

fn with_snr(name: &str, snr: Option<f64>) -> ScenarioConfig {
    let mut cfg = bundled_config(name).unwrap();
    if let Some(f) = cfg.fluorescence.as_mut() {
        f.snr = snr;
    }
    if let Some(p) = cfg.photon_echo.as_mut() {
        p.snr = snr;
    }
    if let Some(h) = cfg.hole_decay.as_mut() {
        h.snr = snr;
    }
    cfg
}

fn ac8(r: &mut Report) {
    let t = Instant::now();
    let cases = [
        ("fig2b", "t1_relative_error", 0.05),
        ("fig2c", "t2_relative_error", 0.05),
        ("fig2d", "tau1_relative_error", 0.10),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, key, tol) in cases {
        let clean = evaluate(&with_snr(name, None)).unwrap().0[key];
        let noisy = evaluate(&with_snr(name, Some(50.0))).unwrap().0[key];
        pass &= clean <= 1e-6 && noisy <= tol;
        parts.push(format!(
            "{name} noiseless {clean:.1e}, SNR 50 {:.2}%",
            noisy * 100.0
        ));
    }
    r.line("AC8", pass, t, parts.join("; "));
}

fn ac9(r: &mut Report) {
    let t = Instant::now();
    let line = delay_line_comparison(400.0f64, 2.0, 1.3);
    r.line(
        "AC9",
        (line.loss_db - 78.0).abs() <= 0.1,
        t,
        format!(
            "{:.2} m of waveguide, {:.3} dB loss",
            line.length_m, line.loss_db
        ),
    );
}

fn ac10(r: &mut Report) {
    let t = Instant::now();
    let mut failures = Vec::new();

    let mem = CombMemory::new(
        CombSpec {
            bandwidth_mhz: 20.0,
            ..CombSpec::er_tfln()
        },
        1.0,
        1,
    )
    .unwrap();
    let h = mem.transfer();
    let n = h.len();
    if h.response().iter().any(|z| z.norm() > 1.0 + 1e-12) {
        failures.push("passivity");
    }
    let x = PulseTrain::gaussian(300.0, 60.0, 1.0, 0.0, 1.0, n).unwrap();
    let y = PulseTrain::gaussian(520.0, 40.0, 0.5, 0.0, 1.0, n).unwrap();
    let (ox, oy) = (propagate(&x, h).unwrap(), propagate(&y, h).unwrap());
    let (a, b) = (Complex::new(1.3, 0.0), Complex::new(-0.7, 0.0));
    let lhs = propagate(&x.scaled(a).try_add(&y.scaled(b)).unwrap(), h).unwrap();
    let rhs = ox.scaled(a).try_add(&oy.scaled(b)).unwrap();
    if lhs
        .samples()
        .iter()
        .zip(rhs.samples())
        .any(|(l, r)| (l - r).norm() > 1e-10)
    {
        failures.push("linearity");
    }
    let shifted = propagate(&x.delayed_by_samples(37), h).unwrap();
    let expect = ox.delayed_by_samples(37);
    if (37..n - n / 4).any(|i| (shifted.samples()[i] - expect.samples()[i]).norm() > 1e-9) {
        failures.push("time invariance");
    }

    let target = CombSpec::er_tfln();
    let (lo, hi) = target.required_span();
    let grid = FrequencyGrid::spanning(lo, hi, 0.1).unwrap();
    let schedule = BurnSchedule::comb_complement(&target, grid, 4.3, 5.0, 20, 5.0).unwrap();
    let burned = burn_comb(&IonEnsembleParams::er_tfln(), &target, &schedule).unwrap();
    let worst = burned
        .classes
        .iter()
        .map(|c| c.max_conservation_error)
        .fold(0.0, f64::max);
    if worst > 1e-9 {
        failures.push("population conservation");
    }

    let times: Vec<f64> = (0..120).map(|i| 0.1 * i as f64).collect();
    let values: Vec<f64> = times
        .iter()
        .map(|&t| 0.9 * (-t / 2.78).exp() + 0.05 + 1e-3 * (7.0 * t).sin())
        .collect();
    let trace = DecayTrace::new(TimeUnit::Ms, times, values, None).unwrap();
    let base = fit_decay(&trace, DecayModel::SingleExp, None).unwrap();
    let scaled = fit_decay(&trace.scaled_values(25.0), DecayModel::SingleExp, None).unwrap();
    let stretched = fit_decay(&trace.scaled_times(1e3), DecayModel::SingleExp, None).unwrap();
    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    let (b, s, st) = (base.values(), scaled.values(), stretched.values());
    if rel(s[0], 25.0 * b[0]) > 1e-9
        || rel(s[1], b[1]) > 1e-9
        || rel(st[1], 1e3 * b[1]) > 1e-9
        || rel(st[0], b[0]) > 1e-9
    {
        failures.push("fit equivariance");
    }

    let det = |seed| DetectorModel {
        quantum_efficiency: 0.1,
        dark_rate_per_s: 100.0,
        gate: None,
        rng_seed: seed,
    };
    let pulse = PulseTrain::gaussian(300.0, 50.0, 1.0, 0.0, 1.0, 1024).unwrap();
    let h1 = detect(&pulse, &det(5), 1_000_000).unwrap();
    let h2 = detect(&pulse, &det(5), 1_000_000).unwrap();
    let h3 = detect(&pulse, &det(6), 1_000_000).unwrap();
    if h1 != h2 || h1 == h3 {
        failures.push("determinism per seed");
    }

    let detail = if failures.is_empty() {
        "passivity, linearity, time invariance, population conservation, fit equivariance, determinism per seed".to_string()
    } else {
        format!("violated: {}", failures.join(", "))
    };
    r.line("AC10", failures.is_empty(), t, detail);
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    ac1(&mut r);
    ac2(&mut r);
    ac3(&mut r);
    ac4(&mut r);
    ac5(&mut r);
    ac6(&mut r);
    ac7(&mut r);
    ac8(&mut r);
    ac9(&mut r);
    ac10(&mut r);
    if r.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {:?}", r.failed);
        std::process::exit(1);
    }
}
