use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::Method;
use crate::error::{Error, Result};
use crate::model::{EvalMode, SystemParams};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Actual noise or error levels that differ from the design assumptions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mismatch {
    /// Relay and destination noise power.
    pub sigma2: Option<f64>,
    pub eps2: Option<f64>,
    pub eta2: Option<f64>,
}

impl Mismatch {
    pub fn is_empty(&self) -> bool {
        self.sigma2.is_none() && self.eps2.is_none() && self.eta2.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TightnessConfig {
    pub instances: usize,
    pub max_dim: usize,
    /// Number of evenly spaced rho values inside the dominance window.
    pub window_points: usize,
    /// Additional rho values outside the window; violations are only counted.
    pub extra_rho: Vec<f64>,
}

impl Default for TightnessConfig {
    fn default() -> Self {
        Self {
            instances: 10_000,
            max_dim: 8,
            window_points: 20,
            extra_rho: vec![0.001, 0.01, 0.1, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub relays: usize,
    pub pt: f64,
    /// Relay noise power, identical across relays.
    pub sigma2: f64,
    pub sigma_v2: f64,
    pub rho: f64,
    pub eps2: f64,
    pub eta2: f64,
    pub gamma_db: Vec<f64>,
    pub channels: usize,
    /// Perturbations per outage estimate.
    pub perts: usize,
    pub randomizations: usize,
    pub seed: u64,
    /// Outage mode used for satisfaction rates; rows always carry both.
    pub mode: EvalMode,
    pub mismatch: Mismatch,
    pub tightness: TightnessConfig,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            relays: 4,
            pt: 10.0,
            sigma2: 0.25,
            sigma_v2: 0.25,
            rho: 0.1,
            eps2: 0.002,
            eta2: 0.002,
            gamma_db: vec![3.0, 6.0, 9.0, 12.0, 15.0, 18.0],
            channels: 100,
            perts: 1000,
            randomizations: 1000,
            seed: 0,
            mode: EvalMode::Exact,
            mismatch: Mismatch::default(),
            tightness: TightnessConfig::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.methods.is_empty() {
            return bad("method set is empty");
        }
        if self.gamma_db.is_empty() {
            return bad("gamma grid is empty");
        }
        if self.gamma_db.iter().any(|g| !g.is_finite()) {
            return bad("gamma grid has a non-finite value");
        }
        if self.channels == 0 || self.perts == 0 || self.randomizations == 0 || self.relays == 0 {
            return bad("relays, channels, perts and randomizations must be at least 1");
        }
        if !(self.eps2 >= 0.0 && self.eta2 >= 0.0) {
            return bad("error variances must be nonnegative");
        }
        for v in [self.mismatch.sigma2, self.mismatch.eps2, self.mismatch.eta2]
            .into_iter()
            .flatten()
        {
            if !(v >= 0.0) {
                return bad("mismatch levels must be nonnegative");
            }
        }
        if self.tightness.max_dim == 0 || self.tightness.instances == 0 {
            return bad("tightness instances and max_dim must be at least 1");
        }
        self.params(self.gamma_db[0]).map(|_| ())
    }

    /// System parameters at threshold `gamma_db`.
    pub fn params(&self, gamma_db: f64) -> Result<SystemParams> {
        SystemParams::uniform(
            self.relays,
            self.pt,
            db_to_linear(gamma_db),
            self.rho,
            self.sigma_v2,
            self.sigma2,
        )
    }

    pub fn eps(&self) -> f64 {
        self.eps2.sqrt()
    }

    pub fn eta(&self) -> f64 {
        self.eta2.sqrt()
    }
}
