use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_paths() -> usize {
    100_000
}
fn default_dt() -> f64 {
    1e-3
}
fn default_horizon() -> f64 {
    1.0
}
fn default_degree() -> u32 {
    2
}
fn default_z() -> f64 {
    4.0
}
fn default_p() -> f64 {
    1e-3
}

/// Simulation and comparison settings.
///
/// `x0` and `params` are keyed by symbol name; a missing time variable starts
/// at 0. `eval_times` are on the transformed clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub x0: BTreeMap<String, f64>,
    #[serde(default)]
    pub eval_times: Vec<f64>,
    #[serde(default = "default_degree")]
    pub degree_cap: u32,
    #[serde(default = "default_z")]
    pub z_max: f64,
    #[serde(default = "default_p")]
    pub p_min: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: default_paths(),
            dt: default_dt(),
            horizon: default_horizon(),
            seed: 0,
            params: BTreeMap::new(),
            x0: BTreeMap::new(),
            eval_times: Vec::new(),
            degree_cap: default_degree(),
            z_max: default_z(),
            p_min: default_p(),
        }
    }
}

impl McConfig {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::InvalidConfig("dt and horizon must be positive".into()));
        }
        let k = self.horizon / self.dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} is not a multiple of dt {}",
                self.horizon, self.dt
            )));
        }
        if self.n_paths < 2 {
            return Err(Error::InvalidConfig("need at least two paths".into()));
        }
        if self.eval_times.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidConfig("eval times must be positive".into()));
        }
        Ok(())
    }

    /// Evaluation times, defaulting to the horizon.
    pub fn times(&self) -> Vec<f64> {
        if self.eval_times.is_empty() {
            vec![self.horizon]
        } else {
            self.eval_times.clone()
        }
    }
}
