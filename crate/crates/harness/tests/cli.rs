use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn afc(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afc"))
        .env_remove("AFC_OUTPUT_ROOT")
        .arg("--output-root")
        .arg(root)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn run_writes_a_manifest() {
    let root = tempfile::tempdir().unwrap();
    let cfg = configs().join("delayline.toml");
    let v = json(&afc(root.path(), &["run", cfg.to_str().unwrap()]));
    assert_eq!(v["run"]["scenario"], "delay_line");
    assert!(root.path().join("delay_line/manifest.json").is_file());
    assert!(root.path().join("delay_line/delay_line.json").is_file());
}

#[test]
fn output_root_falls_back_to_the_environment() {
    let root = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig2b.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_afc"))
        .env("AFC_OUTPUT_ROOT", root.path())
        .args(["run", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    json(&out);
    assert!(root.path().join("fluorescence/manifest.json").is_file());
}

#[test]
fn exit_codes_follow_the_error_category() {
    let root = tempfile::tempdir().unwrap();
    let empty = root.path().join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(
        afc(root.path(), &["run", empty.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let missing = root.path().join("nope.toml");
    assert_eq!(
        afc(root.path(), &["run", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );

    assert_eq!(
        afc(root.path(), &["bound", "--mu", "1.61", "--eta", "1.5"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        afc(root.path(), &["bound", "--mu", "1.61", "--eta", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(afc(root.path(), &["frobnicate"]).status.code(), Some(2));

    let manifest = root.path().join("nothing/manifest.json");
    assert_eq!(
        afc(root.path(), &["emit-plots", manifest.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn bound_reports_greedy_and_search() {
    let root = tempfile::tempdir().unwrap();
    let v = json(&afc(
        root.path(),
        &["bound", "--mu", "1.61", "--eta", "0.0195", "--search"],
    ));
    let (g, s) = (v["bound"].as_f64().unwrap(), v["search"].as_f64().unwrap());
    assert!(g < 0.973 && g > 2.0 / 3.0);
    assert!((g - s).abs() < 1e-3);
}

#[test]
fn sweep_writes_a_table() {
    let root = tempfile::tempdir().unwrap();
    let cfg = configs().join("delayline.toml");
    let v = json(&afc(
        root.path(),
        &[
            "sweep",
            cfg.to_str().unwrap(),
            "--param",
            "delay_line.loss_db_per_m",
            "--values",
            "1.0,2.0",
        ],
    ));
    assert_eq!(v["sweep"]["rows"].as_array().unwrap().len(), 2);
    let text = std::fs::read_to_string(
        root.path()
            .join("delay_line/sweep_delay_line.loss_db_per_m.csv"),
    )
    .unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 3);
    assert_eq!(
        body[0],
        "delay_line.loss_db_per_m,length_m,loss_db,transmission"
    );

    let bad = afc(
        root.path(),
        &[
            "sweep",
            cfg.to_str().unwrap(),
            "--param",
            "delay_line.nope",
            "--values",
            "1",
        ],
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn fit_reads_a_written_trace() {
    let root = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig2c.toml");
    json(&afc(root.path(), &["run", cfg.to_str().unwrap()]));
    let trace = root.path().join("photon_echo/trace.csv");
    let v = json(&afc(
        root.path(),
        &["fit", trace.to_str().unwrap(), "--model", "two_pulse_echo"],
    ));
    let t2 = v["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "t2")
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!((t2 / 17.48 - 1.0).abs() < 0.05, "{t2}");

    // the amplitude convention halves the exponent, so the same data give half the T2
    let v = json(&afc(
        root.path(),
        &[
            "fit",
            trace.to_str().unwrap(),
            "--model",
            "two_pulse_echo",
            "--convention",
            "amplitude",
        ],
    ));
    let t2a = v["parameters"][1]["value"].as_f64().unwrap();
    assert!((t2a / t2 - 0.5).abs() < 1e-6, "{t2a} vs {t2}");
}

#[test]
fn emit_plots_after_run() {
    let root = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig2d.toml");
    json(&afc(root.path(), &["run", cfg.to_str().unwrap()]));
    let manifest = root.path().join("hole_decay/manifest.json");
    let v = json(&afc(
        root.path(),
        &["emit-plots", manifest.to_str().unwrap()],
    ));
    assert_eq!(v["files"].as_array().unwrap().len(), 2);
    let dat = std::fs::read_to_string(root.path().join("hole_decay/plots/trace.dat")).unwrap();
    assert!(
        dat.lines()
            .any(|l| l.starts_with("# columns: 1:time 2:value 3:sigma")),
        "{dat}"
    );
}
