use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afc_core::coherence::{fit_decay, DecayModel, EchoConvention};
use afc_core::photonics::{classical_bound, classical_bound_search, PhotonicsError};
use afc_harness::{
    calibrate_dark_rate, emit_plotdata, run_scenario, run_sweep, HarnessError, Result,
    ScenarioConfig, OUTPUT_ROOT_ENV,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "afc",
    version,
    about = "Atomic-frequency-comb memory simulator"
)]
struct Cli {
    /// Directory receiving run outputs; falls back to $AFC_OUTPUT_ROOT, then the working directory.
    #[arg(long, global = true)]
    output_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModelArg {
    SingleExp,
    TwoPulseEcho,
    TripleExp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Intensity,
    Amplitude,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run { config: PathBuf },
    /// Re-run a scenario over values of one config parameter.
    Sweep {
        config: PathBuf,
        /// Dotted path (`comb.tooth_fwhm_mhz`) or JSON pointer.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Fit a decay model to a trace CSV.
    Fit {
        trace: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "intensity")]
        convention: ConventionArg,
    },
    /// Classical measure-and-prepare fidelity bound.
    Bound {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        eta: f64,
        /// Also run the brute-force search.
        #[arg(long)]
        search: bool,
    },
    /// Find the dark rate giving a target SNR for a storage config.
    CalibrateSnr {
        config: PathBuf,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 0.5)]
        tolerance: f64,
        /// Dark-rate scan range in counts per second, `lo,hi`.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10000.0])]
        range: Vec<f64>,
    },
    /// Write gnuplot data files for a finished run.
    EmitPlots { manifest: PathBuf },
}

fn output_root(cli: Option<PathBuf>) -> PathBuf {
    cli.or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn fit(trace: &Path, model: ModelArg, convention: ConventionArg) -> Result<serde_json::Value> {
    let file = std::fs::File::open(trace).map_err(|e| HarnessError::io(trace, e))?;
    let (t, _) = afc_core::io::read_trace::<_, f64>(file)
        .map_err(|e| HarnessError::schema("", format!("{}: {e}", trace.display())))?;
    let model = match model {
        ModelArg::SingleExp => DecayModel::SingleExp,
        ModelArg::TwoPulseEcho => DecayModel::TwoPulseEcho {
            convention: match convention {
                ConventionArg::Intensity => EchoConvention::Intensity,
                ConventionArg::Amplitude => EchoConvention::Amplitude,
            },
        },
        ModelArg::TripleExp => DecayModel::TripleExp,
    };
    let report = fit_decay(&t, model, None).map_err(|e| HarnessError::stage("fit", e))?;
    Ok(serde_json::to_value(report).expect("fit reports serialize"))
}

fn bound_error(e: PhotonicsError) -> HarnessError {
    match e {
        PhotonicsError::InvalidParameter(m) => HarnessError::InvalidArgument(m),
        other => HarnessError::stage("bound", other),
    }
}

fn bound(mu: f64, eta: f64, search: bool) -> Result<serde_json::Value> {
    let greedy = classical_bound(mu, eta).map_err(bound_error)?;
    let mut out = json!({ "mu": mu, "eta": eta, "bound": greedy });
    if search {
        let s = classical_bound_search(mu, eta, 40, 1e-3).map_err(bound_error)?;
        out["search"] = json!(s);
    }
    Ok(out)
}

fn dispatch(cli: Cli) -> Result<serde_json::Value> {
    let root = output_root(cli.output_root);
    match cli.command {
        Command::Run { config } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let (manifest, path) = run_scenario(&cfg, &root)?;
            Ok(json!({ "manifest": path, "run": manifest }))
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let (table, path) = run_sweep(&cfg, &root, &param, &values)?;
            Ok(json!({ "table": path, "sweep": table }))
        }
        Command::Fit {
            trace,
            model,
            convention,
        } => fit(&trace, model, convention),
        Command::Bound { mu, eta, search } => bound(mu, eta, search),
        Command::CalibrateSnr {
            config,
            target,
            tolerance,
            range,
        } => {
            let &[lo, hi] = range.as_slice() else {
                return Err(HarnessError::InvalidArgument(
                    "--range takes two values, `lo,hi`".into(),
                ));
            };
            let cfg = ScenarioConfig::from_path(&config)?;
            let c = calibrate_dark_rate(&cfg, target, tolerance, (lo, hi))?;
            Ok(serde_json::to_value(c).expect("calibrations serialize"))
        }
        Command::EmitPlots { manifest } => {
            let files = emit_plotdata(&manifest)?;
            Ok(json!({ "files": files }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(v) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&v).expect("output serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
