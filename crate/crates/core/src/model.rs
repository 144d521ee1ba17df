//! Domain types for the two-station, two-community network and the channel
//! constants derived from them.
//!
//! Index conventions: `i` is the VR community, `j` the base station, both
//! zero-based in code and one-based in user-facing text (`N11`, `w12`, ...).
//! Community `i` is served by the computing server attached to station `i`,
//! so a user of type `(i, j)` is cross-type exactly when `i != j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violations};

/// 2x2 table indexed as `[community][station]`.
pub type Grid<T> = [[T; 2]; 2];

/// Iterates `(community, station)` pairs in canonical order 11, 12, 21, 22.
pub fn types() -> impl Iterator<Item = (usize, usize)> {
    (0..2).flat_map(|i| (0..2).map(move |j| (i, j)))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Physical, channel and traffic constants of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Uplink transmit power over noise variance, linear.
    pub snr_budget_up: f64,
    /// Downlink transmit power over noise variance, linear.
    pub snr_budget_dn: f64,
    pub pathloss_exp: f64,
    /// User to station distance in meters. Every user sits at this distance.
    pub user_distance: f64,
    /// Inter-station distance in meters. Also the backhaul Gamma shape.
    pub backhaul_length: f64,
    /// Backhaul delay per bit and meter, seconds.
    pub backhaul_coeff: f64,
    /// Server clock speed, cycles per second.
    pub clock_speed: f64,
    pub msg_bits_up: f64,
    pub msg_bits_dn: f64,
    /// Uplink bandwidth per station, Hz.
    pub bandwidth_up: f64,
    /// Downlink bandwidth per station, Hz.
    pub bandwidth_dn: f64,
    /// Per-attempt HARQ success probability.
    pub target_success: f64,
    pub total_users: u32,
}

impl ScenarioConfig {
    /// The reference parameter set: 50 users, 1 kbit messages, 1 GHz bands,
    /// 20/30 dB power budgets, 15 m cells and a 500 m backhaul.
    pub fn reference() -> Self {
        ScenarioConfig {
            snr_budget_up: db_to_linear(20.0),
            snr_budget_dn: db_to_linear(30.0),
            pathloss_exp: 3.0,
            user_distance: 15.0,
            backhaul_length: 500.0,
            backhaul_coeff: 1e-8,
            clock_speed: 2e9,
            msg_bits_up: 1000.0,
            msg_bits_dn: 1000.0,
            bandwidth_up: 1e9,
            bandwidth_dn: 1e9,
            target_success: 0.7,
            total_users: 50,
        }
    }

    /// Returns every violated invariant; an empty list means the scenario is valid.
    pub fn violations(&self) -> Violations {
        let mut out = Vec::new();
        let positive = [
            ("snr_budget_up", self.snr_budget_up),
            ("snr_budget_dn", self.snr_budget_dn),
            ("user_distance", self.user_distance),
            ("backhaul_length", self.backhaul_length),
            ("backhaul_coeff", self.backhaul_coeff),
            ("clock_speed", self.clock_speed),
            ("msg_bits_up", self.msg_bits_up),
            ("msg_bits_dn", self.msg_bits_dn),
            ("bandwidth_up", self.bandwidth_up),
            ("bandwidth_dn", self.bandwidth_dn),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                out.push(format!("{name} must be positive and finite"));
            }
        }
        if !(self.pathloss_exp.is_finite() && self.pathloss_exp >= 2.0) {
            out.push("pathloss_exp must be at least 2".to_string());
        }
        if !(self.target_success > 0.0 && self.target_success < 1.0) {
            out.push("target_success must lie in (0,1)".to_string());
        }
        if self.total_users == 0 {
            out.push("total_users must be positive".to_string());
        }
        if self.user_distance > self.backhaul_length / 2.0 {
            out.push("user_distance exceeds D/2".to_string());
        }
        Violations(out)
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// Mean backhaul delay for a message of `bits`.
    pub fn mean_backhaul(&self, bits: f64) -> f64 {
        self.backhaul_coeff * bits * self.backhaul_length
    }
}

/// Validates a scenario, returning the violated invariants if any.
pub fn validate_scenario(cfg: &ScenarioConfig) -> std::result::Result<(), Violations> {
    let v = cfg.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// User counts `N_ij` by community and serving station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UserConfiguration {
    pub counts: Grid<u32>,
}

impl UserConfiguration {
    pub fn new(counts: Grid<u32>) -> Self {
        UserConfiguration { counts }
    }

    /// Builds from the flat order `N11, N12, N21, N22`.
    pub fn from_flat(c: [u32; 4]) -> Self {
        Self::new([[c[0], c[1]], [c[2], c[3]]])
    }

    pub fn flat(&self) -> [u32; 4] {
        let c = self.counts;
        [c[0][0], c[0][1], c[1][0], c[1][1]]
    }

    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i][j]
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    /// `N_Vi`, the size of community `i`.
    pub fn community_size(&self, i: usize) -> u32 {
        self.counts[i][0] + self.counts[i][1]
    }

    /// `N_Bj`, the number of users served by station `j`.
    pub fn station_load(&self, j: usize) -> u32 {
        self.counts[0][j] + self.counts[1][j]
    }

    pub fn fraction(&self, i: usize, j: usize) -> f64 {
        f64::from(self.counts[i][j]) / f64::from(self.total())
    }

    pub fn is_cross(i: usize, j: usize) -> bool {
        i != j
    }

    pub fn cross_users(&self) -> u32 {
        self.counts[0][1] + self.counts[1][0]
    }

    pub fn check_against(&self, cfg: &ScenarioConfig) -> Result<()> {
        if self.total() != cfg.total_users {
            return Err(Error::InvalidUsers(format!(
                "counts sum to {} but the scenario has {} users",
                self.total(),
                cfg.total_users
            )));
        }
        Ok(())
    }

    /// Index of the first user of community `i` in canonical user order.
    ///
    /// Users are enumerated type by type in the order 11, 12, 21, 22, so each
    /// community occupies a contiguous block whose station-1 users come first.
    pub fn community_offset(&self, i: usize) -> usize {
        (0..i).map(|c| self.community_size(c) as usize).sum()
    }

    /// Type `(i, j)` of every user in canonical order.
    pub fn user_types(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.total() as usize);
        for (i, j) in types() {
            out.extend(std::iter::repeat_n((i, j), self.counts[i][j] as usize));
        }
        out
    }
}

/// Uplink SNR threshold reaching per-attempt success `target_success`.
pub fn uplink_threshold(cfg: &ScenarioConfig) -> f64 {
    cfg.snr_budget_up * (1.0 / cfg.target_success).log2() / cfg.user_distance.powf(cfg.pathloss_exp)
}

/// Downlink multicast threshold for a group of `n` receivers.
pub fn downlink_threshold(cfg: &ScenarioConfig, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidUsers(
            "downlink threshold is undefined for an empty multicast group".into(),
        ));
    }
    Ok(cfg.snr_budget_dn * (1.0 / cfg.target_success).log2()
        / (cfg.user_distance.powf(cfg.pathloss_exp) * f64::from(n)))
}

/// Thresholds and the uplink airtime coefficient for a scenario and user split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDerived {
    pub theta_up: f64,
    /// `None` for empty types.
    pub theta_dn: Grid<Option<f64>>,
    /// `a = b_up / log2(1 + theta_up)`: seconds times Hz per attempt.
    pub per_bit_coeff_up: f64,
}

impl ChannelDerived {
    pub fn new(cfg: &ScenarioConfig, users: &UserConfiguration) -> Self {
        let theta_up = uplink_threshold(cfg);
        let mut theta_dn = [[None; 2]; 2];
        for (i, j) in types() {
            theta_dn[i][j] = downlink_threshold(cfg, users.count(i, j)).ok();
        }
        ChannelDerived {
            theta_up,
            theta_dn,
            per_bit_coeff_up: cfg.msg_bits_up / (1.0 + theta_up).log2(),
        }
    }
}

/// Per-user uplink bandwidths and per-group downlink multicast bandwidths.
/// Empty types carry `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAllocation {
    pub up: Grid<Option<f64>>,
    pub dn: Grid<Option<f64>>,
}

impl SpectrumAllocation {
    /// Checks non-negativity, presence for populated types, and that each
    /// station spends its whole band (relative tolerance `rel_tol`).
    pub fn check(&self, cfg: &ScenarioConfig, users: &UserConfiguration, rel_tol: f64) -> Result<()> {
        for (i, j) in types() {
            let populated = users.count(i, j) > 0;
            for (name, grid) in [("up", &self.up), ("dn", &self.dn)] {
                match grid[i][j] {
                    Some(w) if !(w >= 0.0 && w.is_finite()) => {
                        return Err(Error::InvalidAllocation(format!(
                            "{name}{}{} = {w} is not a finite non-negative bandwidth",
                            i + 1,
                            j + 1
                        )))
                    }
                    None if populated => {
                        return Err(Error::InvalidAllocation(format!(
                            "{name}{}{} missing for a populated type",
                            i + 1,
                            j + 1
                        )))
                    }
                    _ => {}
                }
            }
        }
        for j in 0..2 {
            if users.station_load(j) == 0 {
                continue;
            }
            let up: f64 = (0..2)
                .map(|i| self.up[i][j].unwrap_or(0.0) * f64::from(users.count(i, j)))
                .sum();
            let dn: f64 = (0..2)
                .filter(|&i| users.count(i, j) > 0)
                .map(|i| self.dn[i][j].unwrap_or(0.0))
                .sum();
            if (up - cfg.bandwidth_up).abs() > rel_tol * cfg.bandwidth_up {
                return Err(Error::InvalidAllocation(format!(
                    "station {} uplink uses {up} Hz of {}",
                    j + 1,
                    cfg.bandwidth_up
                )));
            }
            if (dn - cfg.bandwidth_dn).abs() > rel_tol * cfg.bandwidth_dn {
                return Err(Error::InvalidAllocation(format!(
                    "station {} downlink uses {dn} Hz of {}",
                    j + 1,
                    cfg.bandwidth_dn
                )));
            }
        }
        Ok(())
    }
}
