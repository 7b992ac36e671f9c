//! Experiment configuration files.
//!
//! Indices in a config (ions, drives, modes) are one-based. Frequencies are
//! either in units of the axial trap frequency (`"units": "nu1"`) or in rad/s
//! with SI masses and wavevectors (`"units": "physical"`); physical inputs are
//! converted when the model is built. Times are always in units of `1/nu1`.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainModel, LaserDrive};
use crate::error::{Error, Result};
use crate::fock::HilbertConfig;
use crate::hamiltonians::ModelSpec;
use crate::propagators::Method;

/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Nu1,
    Physical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub ions: usize,
    /// Axial trap frequency; ignored (taken as 1) in `nu1` units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu1: Option<f64>,
    /// Ion mass in kg; physical units only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    /// One-based ion index.
    pub ion: usize,
    pub rabi: f64,
    /// `omega_ge - omega_L`; give this or `omega_l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_l: Option<f64>,
    #[serde(default)]
    pub beam_angle: f64,
    /// In `nu1` units this is the Lamb-Dicke prefactor `k / sqrt(2 mu nu1)`;
    /// in physical units the wavevector in 1/m.
    pub wavevector: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertSettings {
    pub n_max: usize,
    pub guard: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Rabi-frequency sweep; either an explicit `grid` or `min`/`max`/`points`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_sweep_min")]
    pub min: f64,
    #[serde(default = "default_sweep_max")]
    pub max: f64,
    #[serde(default = "default_sweep_points")]
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// One-based drive whose Rabi frequency is swept.
    #[serde(default = "one")]
    pub drive: usize,
    /// One-based target mode.
    #[serde(default = "one")]
    pub mode: usize,
}

fn default_sweep_min() -> f64 {
    1e-2
}
fn default_sweep_max() -> f64 {
    10.0
}
fn default_sweep_points() -> usize {
    25
}
fn one() -> usize {
    1
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: None,
            min: default_sweep_min(),
            max: default_sweep_max(),
            points: default_sweep_points(),
            spacing: Spacing::Log,
            drive: 1,
            mode: 1,
        }
    }
}

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        let grid = match &self.grid {
            Some(g) => g.clone(),
            None => {
                if self.points < 2 {
                    return Err(Error::Config("sweep: at least 2 grid points are required".into()));
                }
                let n = self.points - 1;
                match self.spacing {
                    Spacing::Log => {
                        if !(self.min > 0.0) {
                            return Err(Error::Config("sweep: logarithmic grid needs min > 0".into()));
                        }
                        let (a, b) = (self.min.log10(), self.max.log10());
                        (0..=n).map(|i| 10f64.powf(a + (b - a) * i as f64 / n as f64)).collect()
                    }
                    Spacing::Linear => (0..=n)
                        .map(|i| self.min + (self.max - self.min) * i as f64 / n as f64)
                        .collect(),
                }
            }
        };
        if grid.len() < 2 {
            return Err(Error::Config("sweep: at least 2 grid points are required".into()));
        }
        if grid.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::Config("sweep: Rabi frequencies must be positive and finite".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep: grid must be strictly increasing".into()));
        }
        Ok(grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

impl TimeGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Range { start, stop, steps } => {
                if *steps < 1 {
                    return Err(Error::Config("evolution.times: steps must be >= 1".into()));
                }
                (0..=*steps).map(|i| start + (stop - start) * i as f64 / *steps as f64).collect()
            }
        };
        if v.is_empty() {
            return Err(Error::Config("evolution.times: no time points".into()));
        }
        if v.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("evolution.times: non-finite time".into()));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("evolution.times: times must be strictly increasing".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub times: TimeGrid,
    #[serde(default)]
    pub t0: f64,
    pub method: Method,
    /// One-based `(drive, mode)` pairs for the RWA methods.
    #[serde(default = "default_resonances")]
    pub resonances: Vec<(usize, usize)>,
}

fn default_resonances() -> Vec<(usize, usize)> {
    vec![(1, 1)]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeState {
    Fock(usize),
    /// `[re, im]` of the coherent amplitude.
    Coherent([f64; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinState {
    #[serde(rename = "e")]
    Excited,
    #[serde(rename = "g")]
    Ground,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub modes: Vec<ModeState>,
    pub spins: Vec<SpinState>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default)]
    pub units: Units,
    pub chain: ChainConfig,
    #[serde(default)]
    pub drives: Vec<DriveConfig>,
    #[serde(default)]
    pub omega_ge: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hilbert: Option<HilbertSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

/// Line of the first occurrence of `"key"` in the source, for error messages.
fn locate(source: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    source.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

fn anchored(source: &str, key: &str, msg: String) -> Error {
    match locate(source, key) {
        Some(line) => Error::Config(format!("line {line}: {msg}")),
        None => Error::Config(msg),
    }
}

impl ExperimentConfig {
    /// Parses and validates; messages carry the line of the offending key.
    pub fn parse(source: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(source).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => {
                let key = msg.split([':', '.', '[']).next().unwrap_or_default().to_string();
                anchored(source, &key, msg)
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.chain.ions;
        if n == 0 || n > crate::chain::MAX_IONS {
            return Err(Error::Config(format!(
                "chain.ions: N exceeds supported range ({n} requested, 1..={} supported)",
                crate::chain::MAX_IONS
            )));
        }
        if self.units == Units::Physical {
            match (self.chain.nu1, self.chain.mass) {
                (Some(nu), Some(m)) if nu > 0.0 && m > 0.0 => {}
                _ => return Err(Error::Config("chain: physical units need positive nu1 and mass".into())),
            }
        }
        for (i, d) in self.drives.iter().enumerate() {
            if d.ion == 0 || d.ion > n {
                return Err(Error::Config(format!("drives[{i}].ion: {} is outside 1..={n}", d.ion)));
            }
            if !(d.rabi >= 0.0 && d.rabi.is_finite()) {
                return Err(Error::Config(format!("drives[{i}].rabi: must be >= 0, got {}", d.rabi)));
            }
            if d.detuning.is_some() == d.omega_l.is_some() {
                return Err(Error::Config(format!("drives[{i}]: give exactly one of detuning and omega_l")));
            }
            if !(d.wavevector > 0.0 && d.wavevector.is_finite()) {
                return Err(Error::Config(format!("drives[{i}].wavevector: must be > 0")));
            }
        }
        if let Some(h) = &self.hilbert {
            HilbertConfig::new(n, h.n_max, self.drives.len().max(1), h.guard)
                .map_err(|e| Error::Config(format!("hilbert: {e}")))?;
        }
        if let Some(s) = &self.sweep {
            s.values()?;
            if s.drive == 0 || s.drive > self.drives.len() {
                return Err(Error::Config(format!("sweep.drive: {} does not name a drive", s.drive)));
            }
            if s.mode == 0 || s.mode > n {
                return Err(Error::Config(format!("sweep.mode: {} is outside 1..={n}", s.mode)));
            }
        }
        if let Some(e) = &self.evolution {
            e.times.values()?;
            if e.times.values()?[0] < e.t0 {
                return Err(Error::Config("evolution.times: first time precedes t0".into()));
            }
            for &(j, k) in &e.resonances {
                if j == 0 || j > self.drives.len() || k == 0 || k > n {
                    return Err(Error::Config(format!("evolution.resonances: ({j}, {k}) is out of range")));
                }
            }
        }
        if let Some(s) = &self.initial_state {
            if s.modes.len() != n {
                return Err(Error::Config(format!("initial_state.modes: expected {n} entries")));
            }
            if s.spins.len() != self.drives.len() {
                return Err(Error::Config(format!(
                    "initial_state.spins: expected {} entries, one per drive",
                    self.drives.len()
                )));
            }
        }
        Ok(())
    }

    /// Explicit setting, else the defaults `(40, 10)` for one ion, `(12, 4)`
    /// for two and `(6, 2)` for three.
    pub fn hilbert_settings(&self) -> Result<HilbertSettings> {
        if let Some(h) = self.hilbert {
            return Ok(h);
        }
        match self.chain.ions {
            1 => Ok(HilbertSettings { n_max: 40, guard: 10 }),
            2 => Ok(HilbertSettings { n_max: 12, guard: 4 }),
            3 => Ok(HilbertSettings { n_max: 6, guard: 2 }),
            n => Err(Error::Config(format!("hilbert: no default truncation for {n} ions; set n_max and guard"))),
        }
    }

    /// Frequency scale used to express inputs in units of `nu1`.
    fn frequency_scale(&self) -> f64 {
        match self.units {
            Units::Nu1 => 1.0,
            Units::Physical => self.chain.nu1.unwrap_or(1.0),
        }
    }

    pub fn chain_model(&self) -> Result<ChainModel> {
        match self.units {
            Units::Nu1 => ChainModel::dimensionless(self.chain.ions),
            Units::Physical => {
                let mass = self.chain.mass.unwrap_or_default() / HBAR;
                ChainModel::new(self.chain.ions, mass, self.chain.nu1.unwrap_or_default())
            }
        }
    }

    /// Drives in units of `nu1`, zero-based ions.
    pub fn laser_drives(&self) -> Vec<LaserDrive> {
        let scale = self.frequency_scale();
        let omega_ge = self.omega_ge / scale;
        self.drives
            .iter()
            .map(|d| LaserDrive {
                ion: d.ion - 1,
                rabi: d.rabi / scale,
                omega_l: match (d.detuning, d.omega_l) {
                    (Some(delta), _) => omega_ge - delta / scale,
                    (None, Some(w)) => w / scale,
                    (None, None) => omega_ge,
                },
                beam_angle: d.beam_angle,
                wavevector: d.wavevector,
                phase: d.phase,
            })
            .collect()
    }

    pub fn omega_ge_nu1(&self) -> f64 {
        self.omega_ge / self.frequency_scale()
    }

    pub fn model(&self) -> Result<ModelSpec> {
        if self.drives.is_empty() {
            return Err(Error::Config("drives: at least one drive is required".into()));
        }
        let chain = self.chain_model()?;
        let h = self.hilbert_settings()?;
        let config = HilbertConfig::new(self.chain.ions, h.n_max, self.drives.len(), h.guard)
            .map_err(|e| Error::Config(format!("hilbert: {e}")))?;
        ModelSpec::new(&chain, self.laser_drives(), config, self.omega_ge_nu1())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
  "experiment": "evolve",
  "units": "nu1",
  "chain": { "ions": 1 },
  "drives": [ { "ion": 1, "rabi": 0.2, "detuning": 0.9, "wavevector": 0.1 } ],
  "hilbert": { "n_max": 20, "guard": 5 },
  "evolution": { "times": { "start": 0.0, "stop": 10.0, "steps": 4 }, "method": "pipeline_rwa" },
  "initial_state": { "modes": [ { "coherent": [1.0, 0.5] } ], "spins": ["g"] }
}"#;

    #[test]
    fn round_trip() {
        let a = ExperimentConfig::parse(SAMPLE).unwrap();
        let b = ExperimentConfig::parse(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.evolution.as_ref().unwrap().resonances, vec![(1, 1)]);
        assert_eq!(a.evolution.unwrap().times.values().unwrap(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
    }

    #[test]
    fn errors_carry_lines() {
        let bad = SAMPLE.replace("\"rabi\": 0.2", "\"rabi\": -0.2");
        let msg = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("line 5"), "{msg}");
        let too_many = SAMPLE.replace("\"ions\": 1", "\"ions\": 11");
        let msg = ExperimentConfig::parse(&too_many).unwrap_err().to_string();
        assert!(msg.contains("N exceeds supported range") && msg.contains("line 4"), "{msg}");
        let syntax = SAMPLE.replace("\"units\": \"nu1\",", "\"units\": \"nu1\"");
        assert!(ExperimentConfig::parse(&syntax).unwrap_err().to_string().contains("line"));
    }

    #[test]
    fn sweep_grids() {
        let s = SweepConfig::default();
        let v = s.values().unwrap();
        assert_eq!(v.len(), 25);
        assert!((v[0] - 0.01).abs() < 1e-15 && (v[24] - 10.0).abs() < 1e-12);
        let empty = SweepConfig { grid: Some(vec![]), ..SweepConfig::default() };
        assert!(matches!(empty.values(), Err(Error::Config(_))));
        let unsorted = SweepConfig { grid: Some(vec![1.0, 0.5]), ..SweepConfig::default() };
        assert!(unsorted.values().is_err());
    }

    #[test]
    fn physical_units_convert() {
        let src = r#"{
  "units": "physical",
  "chain": { "ions": 1, "nu1": 6.283185307179586e6, "mass": 6.64e-26 },
  "drives": [ { "ion": 1, "rabi": 6.283185307179586e5, "detuning": 6.283185307179586e6, "wavevector": 7.9e6 } ]
}"#;
        let cfg = ExperimentConfig::parse(src).unwrap();
        let model = cfg.model().unwrap();
        assert!((model.drives[0].rabi - 0.1).abs() < 1e-12);
        assert!((model.detuning(0) - 1.0).abs() < 1e-12);
        let eta = 7.9e6 * (HBAR / (2.0 * 6.64e-26 * 6.283185307179586e6)).sqrt();
        assert!((model.lamb_dicke[(0, 0)] - eta).abs() < 1e-12 * eta);
    }
}
