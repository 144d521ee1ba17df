//! Spectrum allocation: closed-form downlink split, stochastic projected
//! subgradient for the uplink, and the equal-split baselines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency::{community_maxima, user_bandwidths};
use crate::model::{types, ChannelDerived, Grid, ScenarioConfig, SpectrumAllocation, UserConfiguration};
use crate::sampler::{Phases, UploadScenarios};
use crate::stats;

/// Default multiplier `c` in the scaled step size.
pub const DEFAULT_STEP_SCALE: f64 = 2.0;

/// Per-BS equal split: `W_dn / 2` per multicast group (all of it for a lone
/// group) and `W_up / N_Bj` per uplink user.
pub fn equal_baseline(users: &UserConfiguration, cfg: &ScenarioConfig) -> SpectrumAllocation {
    let mut up = [[None; 2]; 2];
    let mut dn = [[None; 2]; 2];
    for j in 0..2 {
        let load = users.station_load(j);
        let groups = (0..2).filter(|&i| users.count(i, j) > 0).count();
        for i in 0..2 {
            if users.count(i, j) > 0 {
                up[i][j] = Some(cfg.bandwidth_up / f64::from(load));
                dn[i][j] = Some(cfg.bandwidth_dn / groups as f64);
            }
        }
    }
    SpectrumAllocation { up, dn }
}

/// Square-root rule: `w_ij = W sqrt(N_ij) / (sqrt(N_1j) + sqrt(N_2j))`.
pub fn optimize_downlink(users: &UserConfiguration, w_total: f64) -> Grid<Option<f64>> {
    let mut dn = [[None; 2]; 2];
    for j in 0..2 {
        let roots = [0, 1].map(|i| f64::from(users.count(i, j)).sqrt());
        let denom = roots[0] + roots[1];
        for i in 0..2 {
            if users.count(i, j) > 0 {
                dn[i][j] = Some(w_total * roots[i] / denom);
            }
        }
    }
    dn
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..500 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes `c1 / w1 + c2 / w2` subject to `w1 + w2 = w_total` numerically.
///
/// The objective is nearly flat at its minimum, so comparing objective values
/// stalls around `sqrt(eps)` relative accuracy. The search instead minimizes
/// the magnitude of the derivative along the constraint, which is unimodal
/// (the objective is convex) and vanishes exactly at the minimizer.
pub fn minimize_inverse_sum(c: [f64; 2], w_total: f64) -> [f64; 2] {
    let slope = |w1: f64| (c[1] / (w_total - w1).powi(2) - c[0] / (w1 * w1)).abs();
    let tiny = w_total * 1e-12;
    let w1 = golden_section(slope, tiny, w_total - tiny, w_total * 1e-15);
    [w1, w_total - w1]
}

/// Numerical check of the square-root rule for one station: minimizes the
/// surrogate `N_1j / w_1 + N_2j / w_2` without using the closed form.
pub fn downlink_kkt_oracle(n: [u32; 2], w_total: f64) -> Result<[f64; 2]> {
    if n[0] == 0 || n[1] == 0 {
        return Err(Error::InvalidUsers(
            "the downlink oracle needs both groups populated".into(),
        ));
    }
    Ok(minimize_inverse_sum([f64::from(n[0]), f64::from(n[1])], w_total))
}

/// Downlink split minimizing the exact mean multicast airtime, keeping the
/// group-size dependence of the threshold that the surrogate drops.
pub fn exact_downlink_split(cfg: &ScenarioConfig, users: &UserConfiguration) -> Grid<Option<f64>> {
    let derived = ChannelDerived::new(cfg, users);
    let mut dn = [[None; 2]; 2];
    for j in 0..2 {
        let weight = |i: usize| {
            derived.theta_dn[i][j].map(|theta| f64::from(users.count(i, j)) / (1.0 + theta).log2())
        };
        match (weight(0), weight(1)) {
            (Some(c1), Some(c2)) => {
                let [w1, w2] = minimize_inverse_sum([c1, c2], cfg.bandwidth_dn);
                dn[0][j] = Some(w1);
                dn[1][j] = Some(w2);
            }
            (Some(_), None) => dn[0][j] = Some(cfg.bandwidth_dn),
            (None, Some(_)) => dn[1][j] = Some(cfg.bandwidth_dn),
            (None, None) => {}
        }
    }
    dn
}

/// Euclidean projection of `(w1, w2)` onto `{w >= 0 : n1 w1 + n2 w2 = W}`.
///
/// An empty group gets `None` and the other group the whole band per user.
pub fn project_uplink(w_tilde: [f64; 2], n: [u32; 2], w_total: f64) -> Result<[Option<f64>; 2]> {
    let [n1, n2] = n.map(f64::from);
    let [x1, x2] = w_tilde;
    match n {
        [0, 0] => Err(Error::Infeasible),
        [0, _] => Ok([None, Some(w_total / n2)]),
        [_, 0] => Ok([Some(w_total / n1), None]),
        _ => {
            if x1 < (x2 - w_total / n2) * n1 / n2 {
                Ok([Some(0.0), Some(w_total / n2)])
            } else if x2 < (x1 - w_total / n1) * n2 / n1 {
                Ok([Some(w_total / n1), Some(0.0)])
            } else {
                let norm = n1 * n1 + n2 * n2;
                let w1 = (n1 * w_total - n1 * n2 * x2 + n2 * n2 * x1) / norm;
                let w2 = (n2 * w_total - n1 * n2 * x1 + n1 * n1 * x2) / norm;
                Ok([Some(w1), Some(w2)])
            }
        }
    }
}

/// Empirical uplink objective `sum_i N_Vi * mean_t max_l (a M_lt / w_l + B_lt)`.
pub fn saa_objective(
    scenarios: &UploadScenarios,
    derived: &ChannelDerived,
    up: &Grid<Option<f64>>,
) -> Result<f64> {
    let users = &scenarios.users;
    let mut terms = Vec::with_capacity(2);
    for i in 0..2 {
        let size = users.community_size(i);
        if size == 0 {
            continue;
        }
        let maxima = community_maxima(scenarios, derived, up, i)?;
        terms.push(f64::from(size) * stats::sum(&maxima) / scenarios.samples as f64);
    }
    Ok(stats::sum(&terms))
}

/// Subgradient of [`saa_objective`] with respect to each `w_ij`.
///
/// For every sample the worst user of each community is found (lowest user
/// index on ties) and its attempt count charged to its type. Empty types get
/// `None`.
pub fn saa_subgradient(
    up: &Grid<Option<f64>>,
    scenarios: &UploadScenarios,
    derived: &ChannelDerived,
) -> Result<Grid<Option<f64>>> {
    let users = &scenarios.users;
    let widths = user_bandwidths(users, up)?;
    let a = derived.per_bit_coeff_up;
    let types_of = users.user_types();

    // Per sample, per community: (station of the worst user, its attempts).
    let worst: Vec<[(usize, u32); 2]> = (0..scenarios.samples)
        .into_par_iter()
        .map(|s| {
            let attempts = scenarios.attempts_row(s);
            let backhaul = scenarios.backhaul_row(s);
            let mut out = [(0, 0); 2];
            for (i, slot) in out.iter_mut().enumerate() {
                let start = users.community_offset(i);
                let end = start + users.community_size(i) as usize;
                let mut best = f64::NEG_INFINITY;
                for l in start..end {
                    let v = a * f64::from(attempts[l]) / widths[l] + backhaul[l];
                    if v > best {
                        best = v;
                        *slot = (types_of[l].1, attempts[l]);
                    }
                }
            }
            out
        })
        .collect();

    let mut charged = [[0u64; 2]; 2];
    for row in &worst {
        for (i, &(j, m)) in row.iter().enumerate() {
            if users.community_size(i) > 0 {
                charged[i][j] += u64::from(m);
            }
        }
    }
    let t = scenarios.samples as f64;
    let mut g = [[None; 2]; 2];
    for (i, j) in types() {
        if users.count(i, j) == 0 {
            continue;
        }
        let w = up[i][j].unwrap_or(0.0);
        let size = f64::from(users.community_size(i));
        g[i][j] = Some(-a * size / (t * w * w) * charged[i][j] as f64);
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSize {
    /// Fixed `beta`, in Hz^2 per second.
    Absolute(f64),
    /// `beta = c (W_up / N)^3 / (a N)`, which makes `beta |g|` a fraction of
    /// the per-user equal share at the baseline.
    Scaled(f64),
}

impl StepSize {
    pub fn resolve(&self, cfg: &ScenarioConfig, derived: &ChannelDerived) -> f64 {
        match *self {
            StepSize::Absolute(beta) => beta,
            StepSize::Scaled(c) => {
                let n = f64::from(cfg.total_users);
                c * (cfg.bandwidth_up / n).powi(3) / (derived.per_bit_coeff_up * n)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Number of scenario draws in the sample average.
    pub t_samples: usize,
    pub k_iters: usize,
    pub step: StepSize,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            t_samples: 50,
            k_iters: 50,
            step: StepSize::Scaled(DEFAULT_STEP_SCALE),
            seed: 2,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let ok_step = match self.step {
            StepSize::Absolute(b) | StepSize::Scaled(b) => b > 0.0 && b.is_finite(),
        };
        if self.t_samples == 0 || self.k_iters == 0 || !ok_step {
            return Err(Error::InvalidSettings(format!(
                "need T >= 1, K >= 1 and a positive step, got T = {}, K = {}, step = {:?}",
                self.t_samples, self.k_iters, self.step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    /// Uplink allocation at iteration 0 (the baseline) through K.
    pub iterates: Vec<Grid<Option<f64>>>,
    /// SAA objective of each iterate. Infinite when a populated type was
    /// projected to zero bandwidth, which ends the run.
    pub saa_objective: Vec<f64>,
    pub best_index: usize,
    pub step_size: f64,
}

impl OptimizerTrace {
    pub fn best(&self) -> &Grid<Option<f64>> {
        &self.iterates[self.best_index]
    }

    /// Best objective among the first `k + 1` iterates.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.saa_objective
            .iter()
            .scan(f64::INFINITY, |best, &v| {
                *best = best.min(v);
                Some(*best)
            })
            .collect()
    }
}

fn has_starved_type(users: &UserConfiguration, up: &Grid<Option<f64>>) -> bool {
    types().any(|(i, j)| users.count(i, j) > 0 && !(up[i][j].unwrap_or(0.0) > 0.0))
}

/// Projected subgradient descent on the sample-average uplink objective.
///
/// Scenarios are drawn once from `settings.seed` and kept for every
/// iteration. The iteration starts at the equal split and returns the
/// iterate with the lowest sample-average objective.
pub fn optimize_uplink(
    cfg: &ScenarioConfig,
    users: &UserConfiguration,
    settings: &OptimizerSettings,
) -> Result<(Grid<Option<f64>>, OptimizerTrace)> {
    cfg.validate()?;
    users.check_against(cfg)?;
    settings.validate()?;
    let derived = ChannelDerived::new(cfg, users);
    let scenarios = UploadScenarios::draw(cfg, users, settings.t_samples, settings.seed, Phases::SAA);
    let beta = settings.step.resolve(cfg, &derived);

    let mut w = equal_baseline(users, cfg).up;
    let mut iterates = vec![w];
    let mut objective = vec![saa_objective(&scenarios, &derived, &w)?];
    for _ in 0..settings.k_iters {
        let g = saa_subgradient(&w, &scenarios, &derived)?;
        let mut next = [[None; 2]; 2];
        for j in 0..2 {
            let n = [users.count(0, j), users.count(1, j)];
            if n == [0, 0] {
                continue;
            }
            let step = |i: usize| w[i][j].unwrap_or(0.0) - beta * g[i][j].unwrap_or(0.0);
            let p = project_uplink([step(0), step(1)], n, cfg.bandwidth_up)?;
            next[0][j] = p[0];
            next[1][j] = p[1];
        }
        w = next;
        iterates.push(w);
        if has_starved_type(users, &w) {
            objective.push(f64::INFINITY);
            break;
        }
        objective.push(saa_objective(&scenarios, &derived, &w)?);
    }
    let best_index = objective
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v < objective[best] { k } else { best });
    let trace = OptimizerTrace {
        iterates,
        saa_objective: objective,
        best_index,
        step_size: beta,
    };
    Ok((*trace.best(), trace))
}
