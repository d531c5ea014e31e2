use afc_core::coherence::{
    fit_decay, model_fluorescence, model_hole_decay, model_two_pulse_echo, CoherenceError,
    DecayModel, DecayTrace, EchoConvention, TimeUnit,
};
use afc_core::scalar::rel_diff;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const ECHO: DecayModel = DecayModel::TwoPulseEcho {
    convention: EchoConvention::Intensity,
};

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

fn noisy(values: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = Normal::new(0.0, sigma).unwrap();
    values.iter().map(|v| v + nd.sample(&mut rng)).collect()
}

fn fluorescence_trace(noise: Option<(f64, u64)>) -> DecayTrace<f64> {
    let t = linspace(0.0, 15.0, 150);
    let y: Vec<f64> = t
        .iter()
        .map(|&t| model_fluorescence(t, 1.0, 2.78, 0.02))
        .collect();
    let (y, s) = match noise {
        Some((snr, seed)) => (noisy(&y, 1.0 / snr, seed), Some(vec![1.0 / snr; t.len()])),
        None => (y, None),
    };
    DecayTrace::new(TimeUnit::Ms, t, y, s).unwrap()
}

fn echo_trace(noise: Option<(f64, u64)>, with_sigma: bool) -> DecayTrace<f64> {
    let t = linspace(0.5, 12.0, 20);
    let y: Vec<f64> = t
        .iter()
        .map(|&t| model_two_pulse_echo(t, 1.0, 17.48))
        .collect();
    let (y, s) = match noise {
        Some((snr, seed)) => (
            noisy(&y, 1.0 / snr, seed),
            with_sigma.then(|| vec![1.0 / snr; t.len()]),
        ),
        None => (y, None),
    };
    DecayTrace::new(TimeUnit::Us, t, y, s).unwrap()
}

fn hole_trace(taus: [f64; 3], noise: Option<(f64, u64)>) -> DecayTrace<f64> {
    let t = logspace(0.05, 5.0 * taus[2], 80);
    let y: Vec<f64> = t
        .iter()
        .map(|&t| model_hole_decay(t, [0.5, 0.3, 0.2], taus, 0.05))
        .collect();
    let (y, s) = match noise {
        Some((snr, seed)) => (noisy(&y, 1.0 / snr, seed), Some(vec![1.0 / snr; t.len()])),
        None => (y, None),
    };
    DecayTrace::new(TimeUnit::S, t, y, s).unwrap()
}

#[test]
fn noiseless_recovery() {
    let r = fit_decay(&fluorescence_trace(None), DecayModel::SingleExp, None).unwrap();
    assert!(r.converged);
    assert!(rel_diff(r.value("t1").unwrap(), 2.78) < 1e-6);
    assert!(rel_diff(r.value("offset").unwrap(), 0.02) < 1e-6);

    let r = fit_decay(&echo_trace(None, false), ECHO, None).unwrap();
    assert!(rel_diff(r.value("t2").unwrap(), 17.48) < 1e-6);

    for taus in [[1.95, 20.0, 200.0], [0.5, 5.0, 50.0]] {
        let r = fit_decay(&hole_trace(taus, None), DecayModel::TripleExp, None).unwrap();
        for (k, name) in ["tau1", "tau2", "tau3"].iter().enumerate() {
            let got = r.value(name).unwrap();
            assert!(
                rel_diff(got, taus[k]) < 1e-6,
                "{name}: {got} vs {}",
                taus[k]
            );
        }
    }
}

#[test]
fn noisy_recovery() {
    let r = fit_decay(
        &fluorescence_trace(Some((100.0, 1))),
        DecayModel::SingleExp,
        None,
    )
    .unwrap();
    assert!(rel_diff(r.value("t1").unwrap(), 2.78) < 0.02);
    let r = fit_decay(&echo_trace(Some((50.0, 2)), true), ECHO, None).unwrap();
    assert!(rel_diff(r.value("t2").unwrap(), 17.48) < 0.05);
    for taus in [[1.95, 20.0, 200.0], [0.5, 5.0, 50.0]] {
        let r = fit_decay(
            &hole_trace(taus, Some((50.0, 3))),
            DecayModel::TripleExp,
            None,
        )
        .unwrap();
        assert!(rel_diff(r.value("tau1").unwrap(), taus[0]) < 0.10);
    }
    let r = fit_decay(
        &hole_trace([0.5, 5.0, 50.0], Some((1000.0, 3))),
        DecayModel::TripleExp,
        None,
    )
    .unwrap();
    for (k, name) in ["tau1", "tau2", "tau3"].iter().enumerate() {
        let want = [0.5, 5.0, 50.0][k];
        assert!(rel_diff(r.value(name).unwrap(), want) < 0.10, "{name}");
    }
}

#[test]
fn amplitude_convention_halves_the_rate() {
    let t = linspace(0.5, 12.0, 20);
    let y: Vec<f64> = t
        .iter()
        .map(|&t| model_two_pulse_echo(t, 1.0, 17.48))
        .collect();
    let trace = DecayTrace::new(TimeUnit::Us, t, y, None).unwrap();
    let r = fit_decay(
        &trace,
        DecayModel::TwoPulseEcho {
            convention: EchoConvention::Amplitude,
        },
        None,
    )
    .unwrap();
    assert!(rel_diff(r.value("t2").unwrap(), 17.48 / 2.0) < 1e-6);
}

#[test]
fn close_time_constants_are_flagged() {
    let r = fit_decay(
        &hole_trace([3.0, 4.5, 50.0], Some((200.0, 4))),
        DecayModel::TripleExp,
        None,
    )
    .unwrap();
    let worst = ["tau1", "tau2", "tau3"]
        .iter()
        .map(|n| r.sigma(n).unwrap() / r.value(n).unwrap())
        .fold(0.0, f64::max);
    assert!(worst > 0.5, "worst relative uncertainty {worst}");
}

#[test]
fn input_validation() {
    let t = vec![0.0, 1.0, 2.0];
    let trace = DecayTrace::new(TimeUnit::S, t.clone(), vec![1.0, 0.5, 0.2], None).unwrap();
    assert!(matches!(
        fit_decay(&trace, DecayModel::TripleExp, None),
        Err(CoherenceError::InsufficientData {
            points: 3,
            params: 7,
            ..
        })
    ));
    let flat = DecayTrace::new(TimeUnit::S, linspace(0.0, 1.0, 20), vec![0.3; 20], None).unwrap();
    assert_eq!(
        fit_decay(&flat, DecayModel::SingleExp, None),
        Err(CoherenceError::DegenerateModel)
    );
    assert!(matches!(
        fit_decay(
            &fluorescence_trace(None),
            DecayModel::SingleExp,
            Some(&[1.0, 2.0])
        ),
        Err(CoherenceError::InvalidGuess { got: 2, want: 3 })
    ));
}

#[test]
fn refit_from_optimum_is_stationary() {
    for (trace, model) in [
        (fluorescence_trace(Some((100.0, 5))), DecayModel::SingleExp),
        (echo_trace(Some((50.0, 6)), false), ECHO),
        (
            hole_trace([1.95, 20.0, 200.0], Some((50.0, 7))),
            DecayModel::TripleExp,
        ),
    ] {
        let first = fit_decay(&trace, model, None).unwrap();
        let again = fit_decay(&trace, model, Some(&first.values())).unwrap();
        for (a, b) in first.values().iter().zip(again.values()) {
            assert!(rel_diff(*a, b) < 1e-9, "{model:?}: {a} vs {b}");
        }
    }
}

#[test]
fn fits_are_equivariant_under_scaling() {
    for (trace, model) in [
        (fluorescence_trace(Some((100.0, 8))), DecayModel::SingleExp),
        (echo_trace(Some((50.0, 9)), true), ECHO),
        (
            hole_trace([0.5, 5.0, 50.0], Some((50.0, 10))),
            DecayModel::TripleExp,
        ),
    ] {
        let base = fit_decay(&trace, model, None).unwrap();
        let c = 37.5;
        let scaled = fit_decay(&trace.scaled_values(c), model, None).unwrap();
        let k = 1e3;
        let stretched = fit_decay(&trace.scaled_times(k), model, None).unwrap();
        let taus = model.time_constants();
        for (j, b) in base.values().iter().enumerate() {
            let s = scaled.values()[j];
            let st = stretched.values()[j];
            if taus.contains(&j) {
                assert!(rel_diff(s, *b) < 1e-9, "{model:?} p{j}");
                assert!(rel_diff(st, b * k) < 1e-9, "{model:?} p{j}");
            } else {
                assert!(rel_diff(s, b * c) < 1e-9, "{model:?} p{j} {s} {}", b * c);
                assert!(rel_diff(st, *b) < 1e-9, "{model:?} p{j} {st} {b}");
            }
        }
    }
}

#[test]
fn echo_uncertainty_coverage() {
    let runs = 200;
    let hits = (0..runs)
        .filter(|&s| {
            let r = fit_decay(&echo_trace(Some((50.0, 1000 + s)), true), ECHO, None).unwrap();
            (r.value("t2").unwrap() - 17.48).abs() <= r.sigma("t2").unwrap()
        })
        .count();
    let frac = hits as f64 / runs as f64;
    assert!((0.60..=0.75).contains(&frac), "coverage {frac}");
}
