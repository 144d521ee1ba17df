//! Average end-to-end latency of a reference user.
//!
//! The upload term is the expected maximum, over the members of a community,
//! of wireless airtime plus backhaul delay. It has no closed form once Gamma
//! backhaul delays mix with geometric attempt counts, so it is estimated by
//! Monte Carlo over a pre-drawn [`UploadScenarios`] block. Compute and
//! download terms are closed-form means.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{types, ChannelDerived, Grid, ScenarioConfig, SpectrumAllocation, UserConfiguration};
use crate::sampler::UploadScenarios;
use crate::stats;

/// Airtime of `attempts` uplink transmissions on `w_up` Hz.
pub fn wireless_upload_delay(attempts: u32, w_up: f64, derived: &ChannelDerived) -> Result<f64> {
    if !(w_up > 0.0 && w_up.is_finite()) {
        return Err(Error::InvalidAllocation(format!(
            "uplink bandwidth {w_up} Hz for a transmitting user"
        )));
    }
    Ok(f64::from(attempts) * derived.per_bit_coeff_up / w_up)
}

/// Server processing time for a community of `n_community` users.
pub fn compute_delay(cfg: &ScenarioConfig, n_community: u32) -> f64 {
    cfg.msg_bits_up * f64::from(n_community) / cfg.clock_speed
}

/// Mean downlink delay of a type-`(i, j)` user: multicast airtime under
/// HARQ plus, for cross-type users, the mean backhaul transfer.
pub fn download_latency(
    cfg: &ScenarioConfig,
    users: &UserConfiguration,
    dn: &Grid<Option<f64>>,
    i: usize,
    j: usize,
) -> Result<f64> {
    let n = users.count(i, j);
    if n == 0 {
        return Err(Error::EmptyType {
            community: i + 1,
            station: j + 1,
        });
    }
    let w = dn[i][j].unwrap_or(0.0);
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidAllocation(format!(
            "downlink bandwidth {w} Hz for populated type N{}{}",
            i + 1,
            j + 1
        )));
    }
    let theta = crate::model::downlink_threshold(cfg, n)?;
    let wireless = cfg.msg_bits_dn / (w * cfg.target_success * (1.0 + theta).log2());
    let backhaul = if UserConfiguration::is_cross(i, j) {
        cfg.mean_backhaul(cfg.msg_bits_dn)
    } else {
        0.0
    };
    Ok(wireless + backhaul)
}

/// Monte-Carlo estimate of one community's upload term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UploadEstimate {
    pub mean_s: f64,
    pub stderr_s: f64,
    /// Set when the community has no users; the estimate is then zero.
    pub empty: bool,
}

/// Per-type uplink bandwidth of every user in canonical order, or an error if
/// a populated type has no usable bandwidth.
pub(crate) fn user_bandwidths(users: &UserConfiguration, up: &Grid<Option<f64>>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(users.total() as usize);
    for (i, j) in types() {
        let n = users.count(i, j) as usize;
        if n == 0 {
            continue;
        }
        let w = up[i][j].unwrap_or(0.0);
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidAllocation(format!(
                "uplink bandwidth {w} Hz for populated type N{}{}",
                i + 1,
                j + 1
            )));
        }
        out.extend(std::iter::repeat_n(w, n));
    }
    Ok(out)
}

/// Worst upload delay within community `i` for every sample, in sample order.
pub fn community_maxima(
    scenarios: &UploadScenarios,
    derived: &ChannelDerived,
    up: &Grid<Option<f64>>,
    i: usize,
) -> Result<Vec<f64>> {
    let users = &scenarios.users;
    let widths = user_bandwidths(users, up)?;
    let start = users.community_offset(i);
    let end = start + users.community_size(i) as usize;
    let a = derived.per_bit_coeff_up;
    let maxima = (0..scenarios.samples)
        .into_par_iter()
        .map(|s| {
            let attempts = &scenarios.attempts_row(s)[start..end];
            let backhaul = &scenarios.backhaul_row(s)[start..end];
            attempts
                .iter()
                .zip(backhaul)
                .zip(&widths[start..end])
                .map(|((&m, &b), &w)| a * f64::from(m) / w + b)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(maxima)
}

/// Upload term of both communities against a pre-drawn scenario block.
pub fn upload_from_scenarios(
    scenarios: &UploadScenarios,
    derived: &ChannelDerived,
    up: &Grid<Option<f64>>,
) -> Result<[UploadEstimate; 2]> {
    let mut out = [UploadEstimate {
        mean_s: 0.0,
        stderr_s: 0.0,
        empty: true,
    }; 2];
    for (i, slot) in out.iter_mut().enumerate() {
        if scenarios.users.community_size(i) == 0 {
            continue;
        }
        let maxima = community_maxima(scenarios, derived, up, i)?;
        let (mean_s, stderr_s) = stats::mean_stderr(&maxima);
        *slot = UploadEstimate {
            mean_s,
            stderr_s,
            empty: false,
        };
    }
    Ok(out)
}

/// Draws `samples` evaluation scenarios from `seed` and estimates the upload term.
pub fn estimate_upload_latency(
    cfg: &ScenarioConfig,
    users: &UserConfiguration,
    alloc: &SpectrumAllocation,
    samples: usize,
    seed: u64,
) -> Result<[UploadEstimate; 2]> {
    if samples == 0 {
        return Err(Error::InvalidSettings("at least one sample is required".into()));
    }
    users.check_against(cfg)?;
    let scenarios = UploadScenarios::evaluation(cfg, users, samples, seed);
    upload_from_scenarios(&scenarios, &ChannelDerived::new(cfg, users), &alloc.up)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub upload_s: [f64; 2],
    pub upload_stderr_s: [f64; 2],
    pub compute_s: [f64; 2],
    /// `None` for empty types.
    pub download_s: Grid<Option<f64>>,
    pub total_s: Grid<Option<f64>>,
    pub weighted_total_s: f64,
    /// Standard error of `weighted_total_s`; the two communities' upload
    /// estimates use disjoint users and are independent.
    pub weighted_stderr_s: f64,
    pub samples_used: usize,
}

/// Full report against a pre-drawn scenario block; use this to evaluate
/// several allocations on common random numbers.
pub fn report_from_scenarios(
    cfg: &ScenarioConfig,
    scenarios: &UploadScenarios,
    alloc: &SpectrumAllocation,
) -> Result<LatencyReport> {
    let users = &scenarios.users;
    users.check_against(cfg)?;
    let derived = ChannelDerived::new(cfg, users);
    let upload = upload_from_scenarios(scenarios, &derived, &alloc.up)?;

    let mut compute_s = [0.0; 2];
    for (i, c) in compute_s.iter_mut().enumerate() {
        *c = compute_delay(cfg, users.community_size(i));
    }
    let mut download_s = [[None; 2]; 2];
    let mut total_s = [[None; 2]; 2];
    let mut weighted = Vec::with_capacity(4);
    for (i, j) in types() {
        if users.count(i, j) == 0 {
            continue;
        }
        let dn = download_latency(cfg, users, &alloc.dn, i, j)?;
        let total = upload[i].mean_s + compute_s[i] + dn;
        download_s[i][j] = Some(dn);
        total_s[i][j] = Some(total);
        weighted.push(users.fraction(i, j) * total);
    }
    let weighted_stderr_s = (0..2)
        .map(|i| {
            let p = f64::from(users.community_size(i)) / f64::from(users.total());
            (p * upload[i].stderr_s).powi(2)
        })
        .sum::<f64>()
        .sqrt();

    Ok(LatencyReport {
        upload_s: [upload[0].mean_s, upload[1].mean_s],
        upload_stderr_s: [upload[0].stderr_s, upload[1].stderr_s],
        compute_s,
        download_s,
        total_s,
        weighted_total_s: stats::sum(&weighted),
        weighted_stderr_s,
        samples_used: scenarios.samples,
    })
}

pub fn end_to_end_report(
    cfg: &ScenarioConfig,
    users: &UserConfiguration,
    alloc: &SpectrumAllocation,
    samples: usize,
    seed: u64,
) -> Result<LatencyReport> {
    if samples == 0 {
        return Err(Error::InvalidSettings("at least one sample is required".into()));
    }
    cfg.validate()?;
    users.check_against(cfg)?;
    let scenarios = UploadScenarios::evaluation(cfg, users, samples, seed);
    report_from_scenarios(cfg, &scenarios, alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::equal_baseline;

    fn reference() -> ScenarioConfig {
        ScenarioConfig::reference()
    }

    #[test]
    fn single_attempt_airtime_at_equal_split() {
        let cfg = reference();
        let users = UserConfiguration::from_flat([25, 0, 0, 25]);
        let d = ChannelDerived::new(&cfg, &users);
        let t = wireless_upload_delay(1, 4e7, &d).unwrap();
        // a / 4e7 with a = 1000 / log2(1 + theta_up), 40-digit evaluation.
        assert!((t - 1.145_201_805_517_746_3e-3).abs() < 1e-15);
        assert_eq!(wireless_upload_delay(2, 4e7, &d).unwrap(), 2.0 * t);
        assert_eq!(wireless_upload_delay(1, 8e7, &d).unwrap(), t / 2.0);
        assert!(wireless_upload_delay(1, 0.0, &d).is_err());
    }

    #[test]
    fn compute_delay_values() {
        let cfg = reference();
        assert!((compute_delay(&cfg, 25) - 12.5e-6).abs() < 1e-18);
        assert_eq!(compute_delay(&cfg, 0), 0.0);
        let mut big = cfg;
        big.msg_bits_up *= 2.0;
        assert_eq!(compute_delay(&big, 25), 2.0 * compute_delay(&cfg, 25));
    }

    #[test]
    fn download_same_and_cross_type() {
        let cfg = reference();
        let users = UserConfiguration::from_flat([25, 25, 25, 25]);
        let mut c = cfg;
        c.total_users = 100;
        let dn = [[Some(5e8); 2]; 2];
        let same = download_latency(&c, &users, &dn, 0, 0).unwrap();
        assert!((same - 3.257_204_401_090_637e-4).abs() < 1e-15);
        let cross = download_latency(&c, &users, &dn, 0, 1).unwrap();
        assert!((cross - same - 5e-3).abs() < 1e-15);
    }

    #[test]
    fn download_errors() {
        let cfg = reference();
        let users = UserConfiguration::from_flat([25, 0, 0, 25]);
        let dn = [[Some(1e9), None], [None, Some(0.0)]];
        assert!(matches!(
            download_latency(&cfg, &users, &dn, 0, 1),
            Err(Error::EmptyType { community: 1, station: 2 })
        ));
        assert!(matches!(
            download_latency(&cfg, &users, &dn, 1, 1),
            Err(Error::InvalidAllocation(_))
        ));
    }

    #[test]
    fn no_cross_users_means_symmetric_report() {
        let cfg = reference();
        let users = UserConfiguration::from_flat([25, 0, 0, 25]);
        let alloc = equal_baseline(&users, &cfg);
        let r = end_to_end_report(&cfg, &users, &alloc, 20_000, 4).unwrap();
        let t11 = r.total_s[0][0].unwrap();
        let t22 = r.total_s[1][1].unwrap();
        assert!((t11 - t22).abs() < 3.0 * (r.upload_stderr_s[0].hypot(r.upload_stderr_s[1])));
        assert!(r.total_s[0][1].is_none());
        let weighted = 0.5 * t11 + 0.5 * t22;
        assert!((r.weighted_total_s - weighted).abs() < 1e-15);
    }

    #[test]
    fn total_is_sum_of_parts() {
        let cfg = reference();
        let users = UserConfiguration::from_flat([13, 12, 12, 13]);
        let alloc = equal_baseline(&users, &cfg);
        let r = end_to_end_report(&cfg, &users, &alloc, 2_000, 1).unwrap();
        for (i, j) in types() {
            let t = r.upload_s[i] + r.compute_s[i] + r.download_s[i][j].unwrap();
            assert_eq!(r.total_s[i][j].unwrap(), t);
        }
        let w: f64 = types().map(|(i, j)| users.fraction(i, j) * r.total_s[i][j].unwrap()).sum();
        assert!((w - r.weighted_total_s).abs() < 1e-15);
    }

    #[test]
    fn empty_community_estimate_is_flagged() {
        let mut cfg = reference();
        cfg.total_users = 2;
        let users = UserConfiguration::from_flat([2, 0, 0, 0]);
        let alloc = SpectrumAllocation {
            up: [[Some(5e8), None], [None, None]],
            dn: [[Some(1e9), None], [None, None]],
        };
        let est = estimate_upload_latency(&cfg, &users, &alloc, 100, 1).unwrap();
        assert!(est[1].empty && est[1].mean_s == 0.0);
        assert!(!est[0].empty && est[0].mean_s > 0.0);
    }

    #[test]
    fn missing_uplink_bandwidth_is_rejected() {
        let cfg = reference();
        let users = UserConfiguration::from_flat([13, 12, 12, 13]);
        let mut alloc = equal_baseline(&users, &cfg);
        alloc.up[0][1] = Some(0.0);
        assert!(matches!(
            end_to_end_report(&cfg, &users, &alloc, 10, 1),
            Err(Error::InvalidAllocation(_))
        ));
    }
}
