//! Seedable variate generation for HARQ attempt counts and backhaul delays.
//!
//! Every variate comes from its own stream, keyed by
//!
//! ```text
//! stream_id = mix64(mix64(mix64(phase) ^ sample_index) ^ user_index)
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer. A stream is a ChaCha8 generator
//! seeded with `seed_from_u64(seed)` and positioned on `stream_id` with
//! `set_stream`. Results therefore do not depend on thread count or the
//! order in which samples are evaluated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;

use crate::model::{uplink_threshold, ScenarioConfig, UserConfiguration};

/// Phase tags separating the independent families of draws.
pub mod phase {
    pub const ATTEMPTS: u64 = 1;
    pub const BACKHAUL: u64 = 2;
    /// Scenario draws used by the stochastic optimizer.
    pub const SAA_ATTEMPTS: u64 = 11;
    pub const SAA_BACKHAUL: u64 = 12;
    pub const FADING: u64 = 21;
}

/// SplitMix64 output function.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_id(sample_index: u64, user_index: u64, phase: u64) -> u64 {
    mix64(mix64(mix64(phase) ^ sample_index) ^ user_index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream { seed, stream_id }
    }

    pub fn derive(seed: u64, sample_index: u64, user_index: u64, phase: u64) -> Self {
        Self::new(seed, stream_id(sample_index, user_index, phase))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Inverse CDF of the geometric law on `{1, 2, ...}` with success `eta`.
pub fn geometric_from_uniform(u: f64, eta: f64) -> u32 {
    let m = ((-u).ln_1p() / (-eta).ln_1p()).ceil();
    if m < 1.0 {
        1
    } else {
        m as u32
    }
}

/// Number of attempts until the first success, one uniform per variate.
pub fn sample_geometric<R: Rng + ?Sized>(rng: &mut R, eta: f64) -> u32 {
    assert!(eta > 0.0 && eta < 1.0, "eta must lie in (0,1), got {eta}");
    geometric_from_uniform(rng.gen::<f64>(), eta)
}

/// Gamma(shape, scale) backhaul delay in seconds.
pub fn sample_backhaul<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    Gamma::new(shape, scale)
        .unwrap_or_else(|e| panic!("invalid gamma parameters ({shape}, {scale}): {e}"))
        .sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UploadDelaySample {
    pub attempts: u32,
    /// Zero for same-type users.
    pub backhaul_s: f64,
}

/// Tags selecting which family of streams a scenario set draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phases {
    pub attempts: u64,
    pub backhaul: u64,
}

impl Phases {
    pub const EVALUATION: Phases = Phases {
        attempts: phase::ATTEMPTS,
        backhaul: phase::BACKHAUL,
    };
    pub const SAA: Phases = Phases {
        attempts: phase::SAA_ATTEMPTS,
        backhaul: phase::SAA_BACKHAUL,
    };
}

fn draw_sample(
    cfg: &ScenarioConfig,
    user_types: &[(usize, usize)],
    seed: u64,
    sample_index: u64,
    phases: Phases,
) -> Vec<UploadDelaySample> {
    let shape = cfg.backhaul_length;
    let scale = cfg.backhaul_coeff * cfg.msg_bits_up;
    user_types
        .iter()
        .enumerate()
        .map(|(user, &(i, j))| {
            let user = user as u64;
            let mut rng = RandomStream::derive(seed, sample_index, user, phases.attempts).rng();
            let attempts = sample_geometric(&mut rng, cfg.target_success);
            let backhaul_s = if UserConfiguration::is_cross(i, j) {
                let mut rng = RandomStream::derive(seed, sample_index, user, phases.backhaul).rng();
                sample_backhaul(&mut rng, shape, scale)
            } else {
                0.0
            };
            UploadDelaySample { attempts, backhaul_s }
        })
        .collect()
}

/// One upload delay draw per user, in canonical user order.
pub fn sample_upload_delays(
    cfg: &ScenarioConfig,
    users: &UserConfiguration,
    seed: u64,
    sample_index: u64,
) -> Vec<UploadDelaySample> {
    draw_sample(cfg, &users.user_types(), seed, sample_index, Phases::EVALUATION)
}

/// A pre-drawn block of upload scenarios, `samples x users`, row-major.
///
/// Evaluating several allocations against the same block gives common
/// random numbers across those evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct UploadScenarios {
    pub users: UserConfiguration,
    pub samples: usize,
    pub seed: u64,
    attempts: Vec<u32>,
    backhaul: Vec<f64>,
}

impl UploadScenarios {
    pub fn draw(
        cfg: &ScenarioConfig,
        users: &UserConfiguration,
        samples: usize,
        seed: u64,
        phases: Phases,
    ) -> Self {
        let types = users.user_types();
        let rows: Vec<Vec<UploadDelaySample>> = (0..samples as u64)
            .into_par_iter()
            .map(|s| draw_sample(cfg, &types, seed, s, phases))
            .collect();
        let mut attempts = Vec::with_capacity(samples * types.len());
        let mut backhaul = Vec::with_capacity(samples * types.len());
        for row in rows {
            for d in row {
                attempts.push(d.attempts);
                backhaul.push(d.backhaul_s);
            }
        }
        UploadScenarios {
            users: *users,
            samples,
            seed,
            attempts,
            backhaul,
        }
    }

    pub fn evaluation(cfg: &ScenarioConfig, users: &UserConfiguration, samples: usize, seed: u64) -> Self {
        Self::draw(cfg, users, samples, seed, Phases::EVALUATION)
    }

    pub fn n_users(&self) -> usize {
        self.users.total() as usize
    }

    pub fn attempts_row(&self, sample: usize) -> &[u32] {
        let n = self.n_users();
        &self.attempts[sample * n..(sample + 1) * n]
    }

    pub fn backhaul_row(&self, sample: usize) -> &[f64] {
        let n = self.n_users();
        &self.backhaul[sample * n..(sample + 1) * n]
    }

    pub fn get(&self, sample: usize, user: usize) -> UploadDelaySample {
        let k = sample * self.n_users() + user;
        UploadDelaySample {
            attempts: self.attempts[k],
            backhaul_s: self.backhaul[k],
        }
    }
}

/// Diagnostic: empirical `Pr(SNR_up >= theta_up)` under unit-mean exponential
/// fading, with the threshold computed from the base-2 logarithm formula.
/// The result is `eta^(1/ln 2)` rather than `eta`, which is why attempt counts
/// are drawn from the geometric law directly.
pub fn fading_success_rate(cfg: &ScenarioConfig, draws: usize, seed: u64) -> f64 {
    let theta = uplink_threshold(cfg);
    let gain = cfg.snr_budget_up * cfg.user_distance.powf(-cfg.pathloss_exp);
    let mut rng = RandomStream::derive(seed, 0, 0, phase::FADING).rng();
    let hits = (0..draws)
        .filter(|_| {
            let g: f64 = Exp1.sample(&mut rng);
            gain * g >= theta
        })
        .count();
    hits as f64 / draws as f64
}
