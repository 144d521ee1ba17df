mod common;

use proptest::prelude::*;

use vrlat::harness::{default_grid, run_sweep, symmetric_configuration, SweepSpec, Variant};
use vrlat::latency::{download_latency, end_to_end_report, report_from_scenarios, upload_from_scenarios};
use vrlat::model::{downlink_threshold, uplink_threshold, ChannelDerived, ScenarioConfig, UserConfiguration};
use vrlat::optimizer::{
    equal_baseline, optimize_downlink, optimize_uplink, project_uplink, OptimizerSettings, StepSize,
};
use vrlat::sampler::UploadScenarios;

use common::qp_project;

fn counts() -> impl Strategy<Value = [u32; 4]> {
    prop::array::uniform4(0u32..15).prop_filter("needs users", |c| c.iter().sum::<u32>() > 0)
}

fn surrogate(n: [u32; 2], w: [f64; 2]) -> f64 {
    f64::from(n[0]) / w[0] + f64::from(n[1]) / w[1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marginals_add_up(c in counts()) {
        let u = UserConfiguration::from_flat(c);
        prop_assert_eq!(u.community_size(0) + u.community_size(1), u.total());
        prop_assert_eq!(u.station_load(0) + u.station_load(1), u.total());
        prop_assert_eq!(u.cross_users(), c[1] + c[2]);
        prop_assert_eq!(u.user_types().len() as u32, u.total());
    }

    #[test]
    fn thresholds_shrink_with_distance_and_group(d in 5.0f64..240.0, n in 1u32..60) {
        let cfg = ScenarioConfig { user_distance: d, ..ScenarioConfig::reference() };
        let far = ScenarioConfig { user_distance: d * 1.1, ..cfg };
        prop_assert!(uplink_threshold(&far) < uplink_threshold(&cfg));
        prop_assert!(downlink_threshold(&cfg, n + 1).unwrap() < downlink_threshold(&cfg, n).unwrap());
    }

    #[test]
    fn projection_is_feasible_idempotent_and_optimal(
        x in prop::array::uniform2(-2e9f64..2e9),
        n in prop::array::uniform2(1u32..30),
    ) {
        let w_total = 1e9;
        let p = project_uplink(x, n, w_total).unwrap().map(Option::unwrap);
        prop_assert!(p[0] >= 0.0 && p[1] >= 0.0);
        let used = f64::from(n[0]) * p[0] + f64::from(n[1]) * p[1];
        prop_assert!((used - w_total).abs() <= 1e-9 * w_total);
        let again = project_uplink(p, n, w_total).unwrap().map(Option::unwrap);
        prop_assert!((again[0] - p[0]).abs() <= 1e-6 && (again[1] - p[1]).abs() <= 1e-6);
        let oracle = qp_project(x, n.map(f64::from), w_total);
        prop_assert!((oracle[0] - p[0]).abs() <= 1.0 && (oracle[1] - p[1]).abs() <= 1.0);
    }

    #[test]
    fn downlink_split_beats_equal_split(n in prop::array::uniform2(1u32..100)) {
        let users = UserConfiguration::from_flat([n[0], 0, n[1], 0]);
        let dn = optimize_downlink(&users, 1.0);
        let opt = [dn[0][0].unwrap(), dn[1][0].unwrap()];
        prop_assert!((opt[0] + opt[1] - 1.0).abs() < 1e-12);
        let eq = surrogate(n, [0.5, 0.5]);
        let best = surrogate(n, opt);
        if n[0] == n[1] {
            prop_assert!((best - eq).abs() <= 1e-12 * eq);
        } else {
            prop_assert!(best < eq);
        }
    }

    #[test]
    fn download_shrinks_with_bandwidth(n in 1u32..50, w in 1e6f64..1e9, k in 1.01f64..10.0) {
        let cfg = ScenarioConfig::reference();
        let users = UserConfiguration::from_flat([n, 0, 0, 50 - n.min(49)]);
        let dn = |x: f64| [[Some(x), None], [None, Some(x)]];
        let slow = download_latency(&cfg, &users, &dn(w), 0, 0).unwrap();
        let fast = download_latency(&cfg, &users, &dn(w * k), 0, 0).unwrap();
        prop_assert!(fast < slow);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn upload_never_grows_with_bandwidth_under_common_numbers(
        cross in 0u32..=25,
        bump in prop::array::uniform4(1.0f64..3.0),
        seed in any::<u64>(),
    ) {
        let cfg = ScenarioConfig::reference();
        let users = symmetric_configuration(50, f64::from(cross) / 25.0).unwrap();
        let derived = ChannelDerived::new(&cfg, &users);
        let scenarios = UploadScenarios::evaluation(&cfg, &users, 500, seed);
        let base = equal_baseline(&users, &cfg).up;
        let mut wider = base;
        for (k, (i, j)) in vrlat::model::types().enumerate() {
            wider[i][j] = base[i][j].map(|w| w * bump[k]);
        }
        let before = upload_from_scenarios(&scenarios, &derived, &base).unwrap();
        let after = upload_from_scenarios(&scenarios, &derived, &wider).unwrap();
        for i in 0..2 {
            prop_assert!(after[i].mean_s <= before[i].mean_s);
        }
    }

    #[test]
    fn latency_scales_with_message_size(kappa in 0.1f64..10.0, seed in any::<u64>()) {
        let cfg = ScenarioConfig::reference();
        let scaled = ScenarioConfig {
            msg_bits_up: cfg.msg_bits_up * kappa,
            msg_bits_dn: cfg.msg_bits_dn * kappa,
            ..cfg
        };
        let users = symmetric_configuration(50, 0.4).unwrap();
        let alloc = equal_baseline(&users, &cfg);
        let scenarios = UploadScenarios::evaluation(&cfg, &users, 300, seed);
        let r = report_from_scenarios(&cfg, &scenarios, &alloc).unwrap();
        let scaled_scenarios = UploadScenarios::evaluation(&scaled, &users, 300, seed);
        let s = report_from_scenarios(&scaled, &scaled_scenarios, &alloc).unwrap();
        prop_assert!((s.weighted_total_s / r.weighted_total_s / kappa - 1.0).abs() < 1e-12);
        for i in 0..2 {
            prop_assert!((s.upload_s[i] / r.upload_s[i] / kappa - 1.0).abs() < 1e-12);
            prop_assert!((s.compute_s[i] / r.compute_s[i] / kappa - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn optimizer_iterates_stay_feasible(c in counts(), seed in any::<u64>(), scale in 0.5f64..4.0) {
        let cfg = ScenarioConfig { total_users: c.iter().sum(), ..ScenarioConfig::reference() };
        let users = UserConfiguration::from_flat(c);
        let settings = OptimizerSettings { t_samples: 10, k_iters: 10, step: StepSize::Scaled(scale), seed };
        let (best, trace) = optimize_uplink(&cfg, &users, &settings).unwrap();
        prop_assert!(trace.iterates.len() <= settings.k_iters + 1);
        prop_assert_eq!(trace.iterates.len(), trace.saa_objective.len());
        for w in &trace.iterates {
            let alloc = vrlat::SpectrumAllocation { up: *w, dn: equal_baseline(&users, &cfg).dn };
            prop_assert!(alloc.check(&cfg, &users, 1e-9).is_ok());
        }
        let so_far = trace.best_so_far();
        prop_assert!(so_far.windows(2).all(|p| p[1] <= p[0]));
        prop_assert_eq!(trace.saa_objective[trace.best_index], *so_far.last().unwrap());
        prop_assert!(trace.saa_objective[trace.best_index] <= trace.saa_objective[0]);
        prop_assert_eq!(&best, trace.best());
    }
}

#[test]
fn report_is_independent_of_thread_count() {
    let cfg = ScenarioConfig::reference();
    let users = symmetric_configuration(50, 0.48).unwrap();
    let alloc = equal_baseline(&users, &cfg);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| end_to_end_report(&cfg, &users, &alloc, 20_000, 11).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let cfg = ScenarioConfig::reference();
    let mut spec = SweepSpec::new(default_grid()[..4].to_vec(), Variant::ALL.to_vec());
    spec.eval_samples = 2_000;
    spec.optimizer.t_samples = 10;
    spec.optimizer.k_iters = 5;
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_sweep(&cfg, &spec).unwrap())
    };
    assert_eq!(run(1), run(5));
}
