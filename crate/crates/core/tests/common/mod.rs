//! Test-only oracles, independent of the library code paths they check.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Least-squares projection onto `{w >= 0 : n . w = total}` by enumerating
/// active sets: for each subset of coordinates pinned at zero, solve the
/// equality-constrained problem on the rest in closed form, keep feasible
/// candidates, return the closest.
pub fn qp_project(x: [f64; 2], n: [f64; 2], total: f64) -> [f64; 2] {
    let mut best: Option<([f64; 2], f64)> = None;
    for mask in 0u8..4 {
        let free = [mask & 1 == 0, mask & 2 == 0];
        let nn: f64 = (0..2).filter(|&k| free[k]).map(|k| n[k] * n[k]).sum();
        if nn == 0.0 {
            continue;
        }
        let resid: f64 = (0..2).filter(|&k| free[k]).map(|k| n[k] * x[k]).sum::<f64>() - total;
        let mut w = [0.0; 2];
        for k in 0..2 {
            if free[k] {
                w[k] = x[k] - n[k] * resid / nn;
            }
        }
        if w.iter().any(|&v| v < -1e-12 * total) {
            continue;
        }
        let d = (w[0] - x[0]).powi(2) + (w[1] - x[1]).powi(2);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((w, d));
        }
    }
    best.expect("feasible set is non-empty").0
}

/// `E[max(M_1..M_n)]` for i.i.d. geometric attempt counts with success `eta`,
/// summing `P(max > m)` until the tail term drops below `1e-12`.
pub fn expected_max_geometric(n: u32, eta: f64) -> f64 {
    let q = 1.0 - eta;
    let mut total = 0.0;
    let mut m = 0;
    loop {
        let tail = 1.0 - (1.0 - q.powi(m)).powi(n as i32);
        total += tail;
        if tail < 1e-12 {
            return total;
        }
        m += 1;
    }
}
