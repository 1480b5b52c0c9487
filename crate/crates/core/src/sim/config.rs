//! TOML run configuration. Every field has a default, so an empty file gives
//! the four-UAV reference scenario.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::beam::{AngleForm, ArrayConfig, BlockageWindows};
use crate::design::LmiProblem;
use crate::dynamics::{default_phases, MeasurementModel, UavScenario};
use crate::error::{Error, Result};
use crate::numkernel::RealMatrix;
use crate::runtime::{ObserverInit, DEFAULT_TRANSIENT_CUTOFF};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    /// Number of simulated steps.
    pub horizon: usize,
    pub out_dir: String,
    pub scenario: ScenarioSection,
    pub observer: ObserverSection,
    pub array: ArraySection,
    pub channel: ChannelSection,
    pub blockage: BlockageSection,
    pub pattern: PatternSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            horizon: 400,
            out_dir: "out".into(),
            scenario: ScenarioSection::default(),
            observer: ObserverSection::default(),
            array: ArraySection::default(),
            channel: ChannelSection::default(),
            blockage: BlockageSection::default(),
            pattern: PatternSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSection {
    pub radii: Vec<f64>,
    pub omega: f64,
    /// Defaults to `2 pi (i - 1) / N`.
    pub phases: Option<Vec<f64>>,
    pub center: [f64; 2],
    /// Common update interval, seconds.
    pub dt: f64,
    /// Per-UAV intervals; overrides `dt` when present.
    pub dt_per_uav: Option<Vec<f64>>,
    pub perturbation_ratio: f64,
    pub perturbation_rate_multiple: f64,
    /// `D = d_scale I` unless `d_diag` is given.
    pub d_scale: f64,
    pub d_diag: Option<Vec<f64>>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            radii: vec![100.0, 150.0, 200.0, 250.0],
            omega: 0.5,
            phases: None,
            center: [0.0, 0.0],
            dt: 0.15,
            dt_per_uav: None,
            perturbation_ratio: 0.2,
            perturbation_rate_multiple: 10.0,
            d_scale: 0.5,
            d_diag: None,
        }
    }
}

/// Fixed gain `L = l I` with its claimed performance level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub l: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    FirstMeasurement,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleFormName {
    Signed,
    Arccos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObserverSection {
    pub alpha: f64,
    pub mu_max: Vec<f64>,
    /// `H = diag(h_diag)`, identity by default.
    pub h_diag: Option<Vec<f64>>,
    pub init: InitMode,
    pub transient_cutoff: usize,
    /// When set, these gains are certified and used instead of the solver's designs.
    pub gain_points: Option<Vec<GainPoint>>,
    pub angle_form: AngleFormName,
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            mu_max: vec![0.05, 0.25, 1.0],
            h_diag: None,
            init: InitMode::FirstMeasurement,
            transient_cutoff: DEFAULT_TRANSIENT_CUTOFF,
            gain_points: None,
            angle_form: AngleFormName::Signed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArraySection {
    pub m_ce: usize,
    pub n_u: usize,
    pub carrier_hz: f64,
    pub spacing_wavelengths: f64,
    pub bandwidth_hz: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            m_ce: 64,
            n_u: 4,
            carrier_hz: 30e9,
            spacing_wavelengths: 0.5,
            bandwidth_hz: 50e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// `phi_i = 2 pi i / N`.
    Deterministic,
    /// Uniform phases drawn once per run from the seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSection {
    pub tx_power: f64,
    /// Receiver noise power per antenna. Derived from `target_snr_db` when absent.
    pub noise_power: Option<f64>,
    /// Single-stream SNR at `reference_range` with an equal-norm beamformer.
    pub target_snr_db: f64,
    pub reference_range: f64,
    pub phase_mode: PhaseMode,
    /// Pilot symbols per step for measured SINR.
    pub pilot_symbols: usize,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            tx_power: 1.0,
            noise_power: None,
            target_snr_db: 10.0,
            reference_range: 250.0,
            phase_mode: PhaseMode::Deterministic,
            pilot_symbols: 64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockageSection {
    /// `[t_start, t_end]` pairs in seconds.
    pub windows: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatternSection {
    pub grid_points: usize,
    /// Steps at which beam patterns are written. Defaults to `0, horizon/2, horizon-1`.
    pub snapshots: Option<Vec<usize>>,
}

impl Default for PatternSection {
    fn default() -> Self {
        Self {
            grid_points: 720,
            snapshots: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub dt_low: f64,
    pub dt_high: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            dt_low: 0.15,
            dt_high: 3.0,
        }
    }
}

/// Parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Parses TOML text. All unknown keys are reported together.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut unknown = Vec::new();
    let de = toml::Deserializer::parse(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    let cfg: RunConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| Error::ConfigParse(e.to_string()))?;
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::validation("horizon", "must be >= 1"));
        }
        let scenario = self.scenario();
        scenario.validate()?;
        let n = scenario.n_uav();
        let dim = 2 * n;
        if let Some(d) = &self.scenario.d_diag {
            check_len("scenario.d_diag", d.len(), dim)?;
        }
        if !self.scenario.d_scale.is_finite() {
            return Err(Error::validation("scenario.d_scale", "must be finite"));
        }
        let obs = &self.observer;
        if !(obs.alpha > 0.0 && obs.alpha < 1.0) {
            return Err(Error::validation("observer.alpha", format!("{} not in (0, 1)", obs.alpha)));
        }
        match &obs.gain_points {
            Some(points) => {
                if points.is_empty() {
                    return Err(Error::validation("observer.gain_points", "empty list"));
                }
                for p in points {
                    if !(p.l.is_finite() && p.gamma.is_finite() && p.gamma > 0.0) {
                        return Err(Error::validation(
                            "observer.gain_points",
                            format!("invalid point l = {}, gamma = {}", p.l, p.gamma),
                        ));
                    }
                }
            }
            None => {
                if obs.mu_max.is_empty() {
                    return Err(Error::validation("observer.mu_max", "empty list"));
                }
                if let Some(m) = obs.mu_max.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
                    return Err(Error::validation("observer.mu_max", format!("{m} must be > 0")));
                }
            }
        }
        if let Some(h) = &obs.h_diag {
            check_len("observer.h_diag", h.len(), dim)?;
        }
        self.array_config().validate()?;
        if self.array.m_ce < n {
            return Err(Error::validation(
                "array.m_ce",
                format!("{} antennas cannot serve {n} UAVs", self.array.m_ce),
            ));
        }
        let ch = &self.channel;
        if !(ch.tx_power.is_finite() && ch.tx_power > 0.0) {
            return Err(Error::validation("channel.tx_power", "must be > 0"));
        }
        if let Some(s) = ch.noise_power {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::validation("channel.noise_power", "must be > 0"));
            }
        }
        if !ch.target_snr_db.is_finite() {
            return Err(Error::validation("channel.target_snr_db", "must be finite"));
        }
        if !(ch.reference_range.is_finite() && ch.reference_range > 0.0) {
            return Err(Error::validation("channel.reference_range", "must be > 0"));
        }
        if ch.pilot_symbols == 0 {
            return Err(Error::validation("channel.pilot_symbols", "must be >= 1"));
        }
        let end = self.horizon as f64 * self.time_step();
        for w in &self.blockage.windows {
            if !(w[0] >= 0.0 && w[1] > w[0] && w[1] <= end + 1e-9) {
                return Err(Error::validation(
                    "blockage.windows",
                    format!("[{}, {}] must satisfy 0 <= start < end <= {end} s", w[0], w[1]),
                ));
            }
        }
        if self.pattern.grid_points < 2 {
            return Err(Error::validation("pattern.grid_points", "must be >= 2"));
        }
        if let Some(snaps) = &self.pattern.snapshots {
            if let Some(k) = snaps.iter().find(|k| **k >= self.horizon) {
                return Err(Error::validation(
                    "pattern.snapshots",
                    format!("step {k} is beyond the horizon {}", self.horizon),
                ));
            }
        }
        let sw = &self.sweep;
        if !(sw.dt_low > 0.0 && sw.dt_high > sw.dt_low) {
            return Err(Error::validation(
                "sweep",
                format!("need 0 < dt_low < dt_high, got [{}, {}]", sw.dt_low, sw.dt_high),
            ));
        }
        Ok(())
    }

    pub fn scenario(&self) -> UavScenario {
        let s = &self.scenario;
        let n = s.radii.len();
        let phases = s.phases.clone().unwrap_or_else(|| default_phases(n));
        let dt = s.dt_per_uav.clone().unwrap_or_else(|| vec![s.dt; n]);
        UavScenario {
            radii: s.radii.clone(),
            omega: s.omega,
            phases,
            center: s.center,
            dt,
            perturbation_ratio: s.perturbation_ratio,
            perturbation_rate_multiple: s.perturbation_rate_multiple,
        }
    }

    /// Interval of the first UAV, used as the time axis.
    pub fn time_step(&self) -> f64 {
        self.scenario
            .dt_per_uav
            .as_ref()
            .and_then(|v| v.first().copied())
            .unwrap_or(self.scenario.dt)
    }

    fn dim(&self) -> usize {
        2 * self.scenario.radii.len()
    }

    pub fn measurement_model(&self) -> MeasurementModel {
        let dim = self.dim();
        match &self.scenario.d_diag {
            Some(d) => MeasurementModel {
                d: RealMatrix::from_diagonal(&DVector::from_column_slice(d)),
            },
            None => MeasurementModel::scaled_identity(dim, self.scenario.d_scale),
        }
    }

    pub fn h_matrix(&self) -> RealMatrix {
        let dim = self.dim();
        match &self.observer.h_diag {
            Some(h) => RealMatrix::from_diagonal(&DVector::from_column_slice(h)),
            None => RealMatrix::identity(dim, dim),
        }
    }

    pub fn lmi_problem(&self, mu_max: f64) -> LmiProblem {
        LmiProblem {
            alpha: self.observer.alpha,
            sampling: self.scenario().sampling_matrix(),
            d: self.measurement_model().d,
            h: self.h_matrix(),
            mu_max,
        }
    }

    pub fn array_config(&self) -> ArrayConfig {
        let a = &self.array;
        let mut cfg = ArrayConfig::from_carrier(a.m_ce, a.n_u, a.carrier_hz, a.spacing_wavelengths);
        cfg.bandwidth_hz = a.bandwidth_hz;
        cfg
    }

    pub fn observer_init(&self) -> ObserverInit {
        match self.observer.init {
            InitMode::FirstMeasurement => ObserverInit::FirstMeasurement,
            InitMode::Zero => ObserverInit::Zero,
        }
    }

    pub fn angle_form(&self) -> AngleForm {
        match self.observer.angle_form {
            AngleFormName::Signed => AngleForm::Signed,
            AngleFormName::Arccos => AngleForm::Arccos,
        }
    }

    pub fn windows(&self) -> BlockageWindows {
        BlockageWindows(self.blockage.windows.iter().map(|w| (w[0], w[1])).collect())
    }

    pub fn snapshots(&self) -> Vec<usize> {
        let mut snaps = self
            .pattern
            .snapshots
            .clone()
            .unwrap_or_else(|| vec![0, self.horizon / 2, self.horizon - 1]);
        snaps.sort_unstable();
        snaps.dedup();
        snaps
    }

    /// Noise power per antenna: explicit, or chosen so that one stream with a
    /// unit-norm matched beamformer reaches `target_snr_db` at `reference_range`.
    pub fn noise_power(&self) -> f64 {
        let ch = &self.channel;
        if let Some(s) = ch.noise_power {
            return s;
        }
        let cfg = self.array_config();
        let h = crate::beam::free_space_amplitude(&cfg, ch.reference_range);
        let n = self.scenario.radii.len() as f64;
        h * h * ch.tx_power / (n * 10f64.powf(ch.target_snr_db / 10.0))
    }

    /// SHA-256 of the canonical JSON form, independent of key order in the file.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn check_len(field: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::validation(field, format!("expected {want} entries, got {got}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_reference_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg.scenario.radii, vec![100.0, 150.0, 200.0, 250.0]);
        assert_eq!(cfg.scenario.omega, 0.5);
        assert_eq!(cfg.scenario.dt, 0.15);
        assert_eq!(cfg.observer.alpha, 0.5);
        assert_eq!(cfg.array.m_ce, 64);
        assert_eq!(cfg.array.n_u, 4);
        assert_eq!(cfg.array.carrier_hz, 30e9);
        assert_eq!(cfg.horizon, 400);
        let d = cfg.measurement_model().d;
        assert_eq!(d, RealMatrix::identity(8, 8) * 0.5);
    }

    #[test]
    fn m_ce_override() {
        let cfg = parse_config_str("[array]\nm_ce = 128\n").unwrap();
        assert_eq!(cfg.array_config().m_ce, 128);
    }

    #[test]
    fn negative_dt_names_field() {
        let err = parse_config_str("[scenario]\ndt = -0.1\n").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "scenario.dt"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_keys_all_listed() {
        let err = parse_config_str("bogus = 1\n[array]\nm_ce = 64\nfoo = 2\nbar = 3\n").unwrap_err();
        match err {
            Error::UnknownKeys(keys) => {
                assert!(keys.contains(&"bogus".to_string()));
                assert!(keys.contains(&"array.foo".to_string()));
                assert!(keys.contains(&"array.bar".to_string()));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn windows_must_fit_horizon() {
        let err = parse_config_str("horizon = 100\n[blockage]\nwindows = [[10.0, 20.0]]\n").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "blockage.windows"));
        assert!(parse_config_str("horizon = 100\n[blockage]\nwindows = [[10.0, 13.0]]\n").is_ok());
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = parse_config_str("seed = 3\nhorizon = 10\n[array]\nm_ce = 32\nn_u = 2\n").unwrap();
        let b = parse_config_str("[array]\nn_u = 2\nm_ce = 32\n[scenario]\n").unwrap();
        let b = RunConfig {
            seed: 3,
            horizon: 10,
            ..b
        };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { seed: 4, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn default_noise_hits_target_snr() {
        let cfg = RunConfig::default();
        let arr = cfg.array_config();
        let h = crate::beam::free_space_amplitude(&arr, 250.0);
        // Unit-norm beam, power split over N streams.
        let snr = h * h * (cfg.channel.tx_power / 4.0) / cfg.noise_power();
        assert!((10.0 * snr.log10() - 10.0).abs() < 1e-9);
    }
}
