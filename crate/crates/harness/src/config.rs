//! Scenario configuration documents (TOML, unit suffix on every dimensioned key).

use std::fmt;
use std::path::Path;

use afc_core::coherence::EchoConvention;
use afc_core::ensemble::{CombSpec, IonEnsembleParams};
use afc_core::photonics::Port;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Fluorescence,
    PhotonEcho,
    HoleDecay,
    CombPreparation,
    Storage,
    Multimode,
    QubitInterference,
    Fringe,
    DelayLine,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fluorescence => "fluorescence",
            Self::PhotonEcho => "photon_echo",
            Self::HoleDecay => "hole_decay",
            Self::CombPreparation => "comb_preparation",
            Self::Storage => "storage",
            Self::Multimode => "multimode",
            Self::QubitInterference => "qubit_interference",
            Self::Fringe => "fringe",
            Self::DelayLine => "delay_line",
        }
    }

    /// Sections that must be present, as top-level keys.
    fn required_sections(self) -> &'static [&'static str] {
        match self {
            Self::Fluorescence => &["fluorescence"],
            Self::PhotonEcho => &["photon_echo"],
            Self::HoleDecay => &["hole_decay"],
            Self::CombPreparation => &["comb", "ensemble", "burn"],
            Self::Storage | Self::Multimode => &["comb", "pulse", "detector"],
            Self::QubitInterference => &["comb", "qubit", "interferometer", "detector"],
            Self::Fringe => &["comb", "qubit", "interferometer", "detector", "fringe"],
            Self::DelayLine => &["delay_line"],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurnConfig {
    pub rate_per_s: f64,
    pub pulse_duration_ms: f64,
    pub repetitions: usize,
    pub wait_after_ms: f64,
    pub grid_step_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub fwhm_ns: f64,
    pub dt_ns: f64,
    pub first_center_ns: f64,
    /// Photons per pulse.
    pub mean_photon_number: f64,
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_record_len: Option<usize>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub quantum_efficiency: f64,
    pub dark_rate_per_s: f64,
    pub n_trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_start_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_end_ns: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Defaults to six pulse widths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo_window_ns: Option<f64>,
    /// Defaults to halfway between the echo and the end of the record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_window_center_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub pulse_fwhm_ns: f64,
    pub bin_separation_ns: f64,
    pub mean_photon_number: f64,
    pub early_center_ns: f64,
    pub dt_ns: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_record_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerConfig {
    /// Defaults to the qubit bin separation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_delay_ns: Option<f64>,
    pub splitter_ratios: [f64; 2],
    /// Short arm, long arm.
    pub arm_transmissions: [f64; 2],
    #[serde(default)]
    pub port: Port,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeConfig {
    pub points: usize,
    pub analysis_phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluorescenceConfig {
    pub t1_ms: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub span_ms: f64,
    pub points: usize,
    /// Amplitude over Gaussian noise σ; absent means noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonEchoConfig {
    pub t2_us: f64,
    pub amplitude: f64,
    pub t12_start_us: f64,
    pub t12_end_us: f64,
    pub points: usize,
    #[serde(default)]
    pub convention: EchoConvention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleDecayConfig {
    pub lifetimes_s: [f64; 3],
    pub amplitudes: [f64; 3],
    pub offset: f64,
    /// Samples are log-spaced between these times.
    pub start_s: f64,
    pub end_s: f64,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayLineConfig {
    pub storage_time_ns: f64,
    pub group_index: f64,
    pub loss_db_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    /// Relative to the output root; defaults to the scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Concurrent sweep points; 0 or absent uses every core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb: Option<CombSpec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<IonEnsembleParams<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn: Option<BurnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit: Option<QubitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interferometer: Option<InterferometerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fringe: Option<FringeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluorescence: Option<FluorescenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_echo: Option<PhotonEchoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole_decay: Option<HoleDecayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_line: Option<DelayLineConfig>,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn section_present(cfg: &ScenarioConfig, name: &str) -> bool {
    match name {
        "comb" => cfg.comb.is_some(),
        "ensemble" => cfg.ensemble.is_some(),
        "burn" => cfg.burn.is_some(),
        "pulse" => cfg.pulse.is_some(),
        "detector" => cfg.detector.is_some(),
        "qubit" => cfg.qubit.is_some(),
        "interferometer" => cfg.interferometer.is_some(),
        "fringe" => cfg.fringe.is_some(),
        "fluorescence" => cfg.fluorescence.is_some(),
        "photon_echo" => cfg.photon_echo.is_some(),
        "hole_decay" => cfg.hole_decay.is_some(),
        "delay_line" => cfg.delay_line.is_some(),
        _ => false,
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::schema(
            path,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn fraction(path: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(HarnessError::schema(
            path,
            format!("must lie in [0, 1], got {v}"),
        ))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(HarnessError::schema(
            path,
            format!("must be at least {min}, got {v}"),
        ))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de =
            toml::Deserializer::parse(text).map_err(|e| HarnessError::schema("", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = pointer(e.path());
            HarnessError::schema(path, e.into_inner().message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Rebuilds a config from its JSON form, reporting JSON-pointer paths.
    pub fn from_json_value(v: serde_json::Value) -> Result<Self> {
        let cfg: Self = serde_path_to_error::deserialize(v)
            .map_err(|e| HarnessError::schema(pointer(e.path()), e.inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn output_dir_name(&self) -> String {
        self.output_dir
            .clone()
            .unwrap_or_else(|| self.scenario.name().to_string())
    }

    pub fn analysis(&self) -> AnalysisConfig {
        self.analysis.clone().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        for s in self.scenario.required_sections() {
            if !section_present(self, s) {
                return Err(HarnessError::schema(
                    format!("/{s}"),
                    format!("section required by scenario `{}`", self.scenario),
                ));
            }
        }
        if let Some(c) = &self.comb {
            c.validate()
                .map_err(|e| HarnessError::schema("/comb", e.to_string()))?;
        }
        if let Some(e) = &self.ensemble {
            e.validate()
                .map_err(|e| HarnessError::schema("/ensemble", e.to_string()))?;
        }
        if let Some(b) = &self.burn {
            positive("/burn/pulse_duration_ms", b.pulse_duration_ms)?;
            positive("/burn/grid_step_mhz", b.grid_step_mhz)?;
            at_least("/burn/repetitions", b.repetitions, 1)?;
            if !(b.rate_per_s >= 0.0) || !(b.wait_after_ms >= 0.0) {
                return Err(HarnessError::schema(
                    "/burn",
                    "rate and wait must be non-negative",
                ));
            }
        }
        if let Some(p) = &self.pulse {
            positive("/pulse/fwhm_ns", p.fwhm_ns)?;
            positive("/pulse/dt_ns", p.dt_ns)?;
            positive("/pulse/mean_photon_number", p.mean_photon_number)?;
            at_least("/pulse/count", p.count, 1)?;
            if p.count > 1 {
                match p.spacing_ns {
                    Some(s) => positive("/pulse/spacing_ns", s)?,
                    None => {
                        return Err(HarnessError::schema(
                            "/pulse/spacing_ns",
                            "required when count > 1",
                        ))
                    }
                }
            }
        }
        if let Some(d) = &self.detector {
            fraction("/detector/quantum_efficiency", d.quantum_efficiency)?;
            if !(d.dark_rate_per_s >= 0.0) || !d.dark_rate_per_s.is_finite() {
                return Err(HarnessError::schema(
                    "/detector/dark_rate_per_s",
                    "must be non-negative",
                ));
            }
            if d.n_trials == 0 {
                return Err(HarnessError::schema(
                    "/detector/n_trials",
                    "must be at least 1",
                ));
            }
            if d.gate_start_ns.is_some() != d.gate_end_ns.is_some() {
                return Err(HarnessError::schema(
                    "/detector",
                    "gate_start_ns and gate_end_ns go together",
                ));
            }
        }
        if let Some(q) = &self.qubit {
            positive("/qubit/pulse_fwhm_ns", q.pulse_fwhm_ns)?;
            positive("/qubit/bin_separation_ns", q.bin_separation_ns)?;
            positive("/qubit/mean_photon_number", q.mean_photon_number)?;
            positive("/qubit/dt_ns", q.dt_ns)?;
        }
        if let Some(i) = &self.interferometer {
            for (k, v) in i.splitter_ratios.iter().enumerate() {
                fraction(&format!("/interferometer/splitter_ratios/{k}"), *v)?;
            }
            for (k, v) in i.arm_transmissions.iter().enumerate() {
                fraction(&format!("/interferometer/arm_transmissions/{k}"), *v)?;
            }
            if let Some(d) = i.arm_delay_ns {
                positive("/interferometer/arm_delay_ns", d)?;
            }
        }
        if let Some(f) = &self.fringe {
            at_least("/fringe/points", f.points, 6)?;
        }
        if let Some(f) = &self.fluorescence {
            positive("/fluorescence/t1_ms", f.t1_ms)?;
            positive("/fluorescence/span_ms", f.span_ms)?;
            at_least("/fluorescence/points", f.points, 6)?;
            if let Some(s) = f.snr {
                positive("/fluorescence/snr", s)?;
            }
        }
        if let Some(e) = &self.photon_echo {
            positive("/photon_echo/t2_us", e.t2_us)?;
            at_least("/photon_echo/points", e.points, 4)?;
            if !(e.t12_end_us > e.t12_start_us) {
                return Err(HarnessError::schema(
                    "/photon_echo/t12_end_us",
                    "must exceed t12_start_us",
                ));
            }
            if let Some(s) = e.snr {
                positive("/photon_echo/snr", s)?;
            }
        }
        if let Some(h) = &self.hole_decay {
            for (k, v) in h.lifetimes_s.iter().enumerate() {
                positive(&format!("/hole_decay/lifetimes_s/{k}"), *v)?;
            }
            positive("/hole_decay/start_s", h.start_s)?;
            if !(h.end_s > h.start_s) {
                return Err(HarnessError::schema(
                    "/hole_decay/end_s",
                    "must exceed start_s",
                ));
            }
            at_least("/hole_decay/points", h.points, 14)?;
            if let Some(s) = h.snr {
                positive("/hole_decay/snr", s)?;
            }
        }
        if let Some(d) = &self.delay_line {
            positive("/delay_line/storage_time_ns", d.storage_time_ns)?;
            positive("/delay_line/group_index", d.group_index)?;
            if !(d.loss_db_per_m >= 0.0) {
                return Err(HarnessError::schema(
                    "/delay_line/loss_db_per_m",
                    "must be non-negative",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_a_schema_error() {
        match ScenarioConfig::from_toml_str("") {
            Err(HarnessError::Schema { message, .. }) => {
                assert!(message.contains("scenario"), "{message}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_json_pointers() {
        let text = "scenario = \"delay_line\"\nseed = 1\n[delay_line]\nstorage_time_ns = 400.0\ngroup_index = \"two\"\nloss_db_per_m = 1.3\n";
        match ScenarioConfig::from_toml_str(text) {
            Err(HarnessError::Schema { path, .. }) => assert_eq!(path, "/delay_line/group_index"),
            other => panic!("{other:?}"),
        }
        let text = "scenario = \"delay_line\"\nseed = 1\n";
        match ScenarioConfig::from_toml_str(text) {
            Err(HarnessError::Schema { path, .. }) => assert_eq!(path, "/delay_line"),
            other => panic!("{other:?}"),
        }
        let text = "scenario = \"delay_line\"\nseed = 1\n[delay_line]\nstorage_time_ns = 400.0\ngroup_index = 2.0\nloss_db_per_m = 1.3\nlength_m = 3\n";
        assert!(matches!(
            ScenarioConfig::from_toml_str(text),
            Err(HarnessError::Schema { .. })
        ));
    }
}
