//! Cross-type ratio sweeps over the symmetric two-station layout.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency::{report_from_scenarios, LatencyReport};
use crate::model::{types, ScenarioConfig, SpectrumAllocation, UserConfiguration};
use crate::optimizer::{equal_baseline, optimize_downlink, optimize_uplink, OptimizerSettings};
use crate::sampler::UploadScenarios;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    EqualBoth,
    OptimalDnOnly,
    OptimalUpOnly,
    OptimalBoth,
    /// Equal split with each community served by the other station's server.
    SwappedServers,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::EqualBoth,
        Variant::OptimalDnOnly,
        Variant::OptimalUpOnly,
        Variant::OptimalBoth,
        Variant::SwappedServers,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::EqualBoth => "equal-both",
            Variant::OptimalDnOnly => "optimal-dn-only",
            Variant::OptimalUpOnly => "optimal-up-only",
            Variant::OptimalBoth => "optimal-both",
            Variant::SwappedServers => "swapped-servers",
        }
    }

    fn optimizes_uplink(&self) -> bool {
        matches!(self, Variant::OptimalUpOnly | Variant::OptimalBoth)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Variant::ALL.iter().map(Variant::as_str).collect();
                format!("unknown variant '{s}', expected one of {}", names.join(", "))
            })
    }
}

/// `{0, 0.08, ..., 0.96, 1}`; every point gives integer counts for 50 users.
pub fn default_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=12).map(|k| f64::from(k * 8) / 100.0).collect();
    grid.push(1.0);
    grid
}

/// Symmetric layout: `N12 = N21 = N rho / 2` and `N11 = N22 = N (1 - rho) / 2`.
pub fn symmetric_configuration(n_total: u32, rho_c: f64) -> Result<UserConfiguration> {
    let non_integer = || Error::NonIntegerCounts {
        rho: rho_c,
        total: n_total,
        step: 2.0 / f64::from(n_total),
    };
    if !(0.0..=1.0).contains(&rho_c) || !n_total.is_multiple_of(2) {
        return Err(non_integer());
    }
    let cross = f64::from(n_total) * rho_c / 2.0;
    let rounded = cross.round();
    if (cross - rounded).abs() > 1e-9 {
        return Err(non_integer());
    }
    let cross = rounded as u32;
    let same = n_total / 2 - cross;
    Ok(UserConfiguration::new([[same, cross], [cross, same]]))
}

/// Exchanges community labels, equivalent to moving each community onto the
/// other station's server.
pub fn swap_communities(users: &UserConfiguration) -> UserConfiguration {
    let c = users.counts;
    UserConfiguration::new([c[1], c[0]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub rho_grid: Vec<f64>,
    pub variants: Vec<Variant>,
    pub eval_samples: usize,
    pub eval_seed: u64,
    pub optimizer: OptimizerSettings,
    /// Record the wall-clock time in each record. Off by default so repeated
    /// runs produce identical files.
    pub stamp: bool,
}

impl SweepSpec {
    pub fn new(rho_grid: Vec<f64>, variants: Vec<Variant>) -> Self {
        SweepSpec {
            rho_grid,
            variants,
            eval_samples: 100_000,
            eval_seed: 1,
            optimizer: OptimizerSettings::default(),
            stamp: false,
        }
    }

    pub fn validate(&self, cfg: &ScenarioConfig) -> Result<()> {
        if self.rho_grid.is_empty() || self.variants.is_empty() {
            return Err(Error::InvalidSettings("empty grid or variant list".into()));
        }
        if self.eval_samples == 0 {
            return Err(Error::InvalidSettings("eval_samples must be positive".into()));
        }
        if self.variants.iter().any(Variant::optimizes_uplink) {
            self.optimizer.validate()?;
        }
        for &rho in &self.rho_grid {
            symmetric_configuration(cfg.total_users, rho).map_err(|e| Error::GridPoint {
                rho,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }
}

/// One evaluated `(rho_c, variant)` point. Columns are stable; empty types
/// leave their per-type fields blank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub rho_c: f64,
    pub variant: Variant,
    pub n11: u32,
    pub n12: u32,
    pub n21: u32,
    pub n22: u32,
    pub weighted_total_s: f64,
    pub stderr_s: f64,
    /// `(T_equal - T_variant) / T_equal` on the same configuration and draws.
    pub gain: f64,
    pub t11_s: Option<f64>,
    pub t12_s: Option<f64>,
    pub t21_s: Option<f64>,
    pub t22_s: Option<f64>,
    pub up11_hz: Option<f64>,
    pub up12_hz: Option<f64>,
    pub up21_hz: Option<f64>,
    pub up22_hz: Option<f64>,
    pub dn11_hz: Option<f64>,
    pub dn12_hz: Option<f64>,
    pub dn21_hz: Option<f64>,
    pub dn22_hz: Option<f64>,
    pub eval_samples: usize,
    pub eval_seed: u64,
    pub opt_seed: u64,
    pub saa_t: usize,
    pub iters_k: usize,
    pub step_size: Option<f64>,
    pub timestamp: Option<String>,
}

impl SweepRecord {
    pub fn counts(&self) -> UserConfiguration {
        UserConfiguration::from_flat([self.n11, self.n12, self.n21, self.n22])
    }

    pub fn allocation(&self) -> SpectrumAllocation {
        SpectrumAllocation {
            up: [[self.up11_hz, self.up12_hz], [self.up21_hz, self.up22_hz]],
            dn: [[self.dn11_hz, self.dn12_hz], [self.dn21_hz, self.dn22_hz]],
        }
    }

    pub fn totals(&self) -> [Option<f64>; 4] {
        [self.t11_s, self.t12_s, self.t21_s, self.t22_s]
    }
}

struct Evaluated {
    users: UserConfiguration,
    alloc: SpectrumAllocation,
    report: LatencyReport,
    baseline_total: f64,
    step_size: Option<f64>,
}

fn make_record(rho_c: f64, variant: Variant, e: &Evaluated, spec: &SweepSpec, stamp: &Option<String>) -> SweepRecord {
    let [n11, n12, n21, n22] = e.users.flat();
    let t = e.report.total_s;
    let (up, dn) = (e.alloc.up, e.alloc.dn);
    SweepRecord {
        rho_c,
        variant,
        n11,
        n12,
        n21,
        n22,
        weighted_total_s: e.report.weighted_total_s,
        stderr_s: e.report.weighted_stderr_s,
        gain: (e.baseline_total - e.report.weighted_total_s) / e.baseline_total,
        t11_s: t[0][0],
        t12_s: t[0][1],
        t21_s: t[1][0],
        t22_s: t[1][1],
        up11_hz: up[0][0],
        up12_hz: up[0][1],
        up21_hz: up[1][0],
        up22_hz: up[1][1],
        dn11_hz: dn[0][0],
        dn12_hz: dn[0][1],
        dn21_hz: dn[1][0],
        dn22_hz: dn[1][1],
        eval_samples: spec.eval_samples,
        eval_seed: spec.eval_seed,
        opt_seed: spec.optimizer.seed,
        saa_t: spec.optimizer.t_samples,
        iters_k: spec.optimizer.k_iters,
        step_size: e.step_size,
        timestamp: stamp.clone(),
    }
}

fn run_point(cfg: &ScenarioConfig, spec: &SweepSpec, rho_c: f64, stamp: &Option<String>) -> Result<Vec<SweepRecord>> {
    let users = symmetric_configuration(cfg.total_users, rho_c)?;
    let scenarios = UploadScenarios::evaluation(cfg, &users, spec.eval_samples, spec.eval_seed);
    let baseline = equal_baseline(&users, cfg);
    let base_report = report_from_scenarios(cfg, &scenarios, &baseline)?;
    let baseline_total = base_report.weighted_total_s;

    let optimized = if spec.variants.iter().any(Variant::optimizes_uplink) {
        let (up, trace) = optimize_uplink(cfg, &users, &spec.optimizer)?;
        Some((up, trace.step_size))
    } else {
        None
    };

    let mut variants = spec.variants.clone();
    variants.sort();
    variants.dedup();
    let mut out = Vec::with_capacity(variants.len());
    for variant in variants {
        let evaluated = match variant {
            Variant::EqualBoth => Evaluated {
                users,
                alloc: baseline,
                report: base_report.clone(),
                baseline_total,
                step_size: None,
            },
            Variant::SwappedServers => {
                let swapped = swap_communities(&users);
                let scenarios = UploadScenarios::evaluation(cfg, &swapped, spec.eval_samples, spec.eval_seed);
                let alloc = equal_baseline(&swapped, cfg);
                let report = report_from_scenarios(cfg, &scenarios, &alloc)?;
                Evaluated {
                    users: swapped,
                    alloc,
                    baseline_total: report.weighted_total_s,
                    report,
                    step_size: None,
                }
            }
            Variant::OptimalDnOnly | Variant::OptimalUpOnly | Variant::OptimalBoth => {
                let mut alloc = baseline;
                let mut step_size = None;
                if variant.optimizes_uplink() {
                    let (up, beta) = optimized.expect("optimizer ran for uplink variants");
                    alloc.up = up;
                    step_size = Some(beta);
                }
                if matches!(variant, Variant::OptimalDnOnly | Variant::OptimalBoth) {
                    alloc.dn = optimize_downlink(&users, cfg.bandwidth_dn);
                }
                let report = report_from_scenarios(cfg, &scenarios, &alloc)?;
                Evaluated {
                    users,
                    alloc,
                    report,
                    baseline_total,
                    step_size,
                }
            }
        };
        out.push(make_record(rho_c, variant, &evaluated, spec, stamp));
    }
    Ok(out)
}

/// Evaluates every `(rho_c, variant)` pair. Within a grid point all variants
/// share the same evaluation draws. Records come back sorted by
/// `(rho_c, variant)` whatever the completion order.
pub fn run_sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    spec.validate(cfg)?;
    let stamp = spec.stamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default()
    });
    let per_point: Vec<Vec<SweepRecord>> = spec
        .rho_grid
        .par_iter()
        .map(|&rho| {
            run_point(cfg, spec, rho, &stamp).map_err(|e| Error::GridPoint {
                rho,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<SweepRecord> = per_point.into_iter().flatten().collect();
    records.sort_by(|a, b| a.rho_c.total_cmp(&b.rho_c).then(a.variant.cmp(&b.variant)));
    Ok(records)
}

/// Re-checks a record's allocation against the scenario constraints.
pub fn check_record(cfg: &ScenarioConfig, record: &SweepRecord, rel_tol: f64) -> Result<()> {
    let users = record.counts();
    record.allocation().check(cfg, &users, rel_tol)?;
    if record.stderr_s < 0.0 {
        return Err(Error::InvalidAllocation("negative standard error".into()));
    }
    for ((i, j), t) in types().zip(record.totals()) {
        if (users.count(i, j) > 0) != t.is_some() {
            return Err(Error::InvalidAllocation(format!(
                "total for N{}{} does not match the type's population",
                i + 1,
                j + 1
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_counts() {
        assert_eq!(symmetric_configuration(50, 0.0).unwrap().flat(), [25, 0, 0, 25]);
        assert_eq!(symmetric_configuration(50, 1.0).unwrap().flat(), [0, 25, 25, 0]);
        assert_eq!(symmetric_configuration(50, 0.48).unwrap().flat(), [13, 12, 12, 13]);
        match symmetric_configuration(50, 0.5) {
            Err(Error::NonIntegerCounts { step, .. }) => assert!((step - 0.04).abs() < 1e-15),
            other => panic!("expected non-integer error, got {other:?}"),
        }
        assert!(symmetric_configuration(50, 1.2).is_err());
    }

    #[test]
    fn default_grid_is_admissible() {
        let grid = default_grid();
        assert_eq!(grid.len(), 14);
        assert_eq!(grid[3], 0.24);
        for rho in grid {
            assert!(symmetric_configuration(50, rho).is_ok(), "{rho}");
        }
    }

    #[test]
    fn swap_is_a_reflection() {
        let u = UserConfiguration::from_flat([13, 12, 12, 13]);
        assert_eq!(swap_communities(&u).flat(), [12, 13, 13, 12]);
        assert_eq!(swap_communities(&swap_communities(&u)), u);
        let s = swap_communities(&symmetric_configuration(50, 0.8).unwrap());
        assert_eq!(s, symmetric_configuration(50, 0.2).unwrap());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("best".parse::<Variant>().is_err());
    }

    #[test]
    fn bad_grid_point_is_named() {
        let spec = SweepSpec::new(vec![0.0, 0.5], vec![Variant::EqualBoth]);
        let err = run_sweep(&ScenarioConfig::reference(), &spec).unwrap_err();
        assert!(err.to_string().contains("rho_c = 0.5"), "{err}");
        assert!(err.is_validation());
    }
}
