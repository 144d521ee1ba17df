//! Declarative run configuration.
//!
//! ```toml
//! [scenario]
//! total_users = 50
//! target_success = 0.7
//! pathloss_exp = 3.0
//! user_distance_m = 15.0
//! backhaul_length_m = 500.0
//! backhaul_coeff_s_per_bit_m = 1e-8
//! clock_speed_hz = 2e9
//! msg_bits_up = 1000.0
//! msg_bits_dn = 1000.0
//! bandwidth_up_hz = 1e9
//! bandwidth_dn_hz = 1e9
//! snr_budget_up_db = 20.0
//! snr_budget_dn_db = 30.0
//!
//! [optimizer]
//! saa_samples = 50
//! iterations = 50
//! step_scale = 2.0
//! # step_size = 5e15   # absolute step, overrides step_scale
//! seed = 2
//!
//! [sweep]
//! rho_grid = [0.0, 0.08, 0.16]
//! variants = ["equal-both", "optimal-up-only"]
//! eval_samples = 100000
//! eval_seed = 1
//! ```
//!
//! Every key is optional; missing keys take the reference values above.
//! Power budgets are given in dB and converted to linear ratios on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::{default_grid, SweepSpec, Variant};
use crate::error::{Error, Result};
use crate::model::{db_to_linear, ScenarioConfig};
use crate::optimizer::{OptimizerSettings, StepSize, DEFAULT_STEP_SCALE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub total_users: u32,
    pub target_success: f64,
    pub pathloss_exp: f64,
    pub user_distance_m: f64,
    pub backhaul_length_m: f64,
    pub backhaul_coeff_s_per_bit_m: f64,
    pub clock_speed_hz: f64,
    pub msg_bits_up: f64,
    pub msg_bits_dn: f64,
    pub bandwidth_up_hz: f64,
    pub bandwidth_dn_hz: f64,
    pub snr_budget_up_db: f64,
    pub snr_budget_dn_db: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            total_users: 50,
            target_success: 0.7,
            pathloss_exp: 3.0,
            user_distance_m: 15.0,
            backhaul_length_m: 500.0,
            backhaul_coeff_s_per_bit_m: 1e-8,
            clock_speed_hz: 2e9,
            msg_bits_up: 1000.0,
            msg_bits_dn: 1000.0,
            bandwidth_up_hz: 1e9,
            bandwidth_dn_hz: 1e9,
            snr_budget_up_db: 20.0,
            snr_budget_dn_db: 30.0,
        }
    }
}

impl ScenarioSection {
    pub fn to_scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            snr_budget_up: db_to_linear(self.snr_budget_up_db),
            snr_budget_dn: db_to_linear(self.snr_budget_dn_db),
            pathloss_exp: self.pathloss_exp,
            user_distance: self.user_distance_m,
            backhaul_length: self.backhaul_length_m,
            backhaul_coeff: self.backhaul_coeff_s_per_bit_m,
            clock_speed: self.clock_speed_hz,
            msg_bits_up: self.msg_bits_up,
            msg_bits_dn: self.msg_bits_dn,
            bandwidth_up: self.bandwidth_up_hz,
            bandwidth_dn: self.bandwidth_dn_hz,
            target_success: self.target_success,
            total_users: self.total_users,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub saa_samples: usize,
    pub iterations: usize,
    pub step_scale: f64,
    pub step_size: Option<f64>,
    pub seed: u64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerSettings::default();
        OptimizerSection {
            saa_samples: d.t_samples,
            iterations: d.k_iters,
            step_scale: DEFAULT_STEP_SCALE,
            step_size: None,
            seed: d.seed,
        }
    }
}

impl OptimizerSection {
    pub fn to_settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            t_samples: self.saa_samples,
            k_iters: self.iterations,
            step: match self.step_size {
                Some(beta) => StepSize::Absolute(beta),
                None => StepSize::Scaled(self.step_scale),
            },
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub rho_grid: Vec<f64>,
    pub variants: Vec<Variant>,
    pub eval_samples: usize,
    pub eval_seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            rho_grid: default_grid(),
            variants: Variant::ALL.to_vec(),
            eval_samples: 100_000,
            eval_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub optimizer: OptimizerSection,
    pub sweep: SweepSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn scenario(&self) -> ScenarioConfig {
        self.scenario.to_scenario()
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        self.optimizer.to_settings()
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            rho_grid: self.sweep.rho_grid.clone(),
            variants: self.sweep.variants.clone(),
            eval_samples: self.sweep.eval_samples,
            eval_seed: self.sweep.eval_seed,
            optimizer: self.optimizer_settings(),
            stamp: false,
        }
    }
}
