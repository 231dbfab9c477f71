//! Scenario-level invariants of the simulator.

use sibauth::failstop::Verdict;
use sibauth::simnet::{
    run_bootstrap_scenario, run_forgery_scenario, run_unavailability_scenario, ScenarioConfig,
    TamperKind, TamperSpec,
};

fn subsets(n: u32) -> Vec<Vec<u32>> {
    (0u32..1 << n)
        .map(|m| (1..=n).filter(|i| m & (1 << (i - 1)) != 0).collect())
        .collect()
}

#[test]
fn threshold_resilience_over_all_offline_sets() {
    for (t, n) in [(1, 1), (1, 3), (2, 3), (2, 4), (3, 5), (2, 5)] {
        let cfg = ScenarioConfig {
            t,
            n,
            broadcasts: 3,
            ..ScenarioConfig::default()
        };
        for offline in subsets(n as u32) {
            let tr = run_unavailability_scenario(&cfg, &offline).unwrap();
            let s = &tr.summary;
            if offline.len() <= n - t {
                assert_eq!(
                    (s.verified, s.unavailable),
                    (3, 0),
                    "({t},{n}) offline {offline:?}"
                );
            } else {
                assert_eq!(
                    (s.verified, s.unavailable),
                    (0, 3),
                    "({t},{n}) offline {offline:?}"
                );
                assert_eq!(tr.events_of("fallback").count(), 3);
            }
        }
    }
}

#[test]
fn delay_components_sum_exactly() {
    for seed in 0..20 {
        for (t, n, depth) in [(1, 1, 2), (2, 3, 2), (3, 5, 3), (2, 3, 4)] {
            let cfg = ScenarioConfig {
                t,
                n,
                depth,
                seed,
                broadcasts: 20,
                preprocess_batch: 7,
                link_latency_ms: seed % 11,
                ..ScenarioConfig::default()
            };
            let tr = run_bootstrap_scenario(&cfg).unwrap();
            assert_eq!(tr.summary.verified, 20);
            for b in &tr.summary.breakdowns {
                assert_eq!(b.e2e_us, b.component_sum());
            }
        }
    }
}

#[test]
fn forgery_detection_rate_and_no_false_halts() {
    let mut detected = 0;
    let mut false_halts = 0;
    for seed in 0..200u64 {
        let cfg = ScenarioConfig {
            seed,
            broadcasts: 4,
            ..ScenarioConfig::default()
        };
        let target = 1 + seed % 4;
        let tamper = TamperSpec {
            target_j: target,
            kind: TamperKind::ReplaceR,
            detector: None,
        };
        let (_, halt) = run_forgery_scenario(&cfg, &tamper).unwrap();
        if halt.halted && halt.verdict == Some(Verdict::ForgeryConfirmed) {
            detected += 1;
        }
        let honest = TamperSpec {
            target_j: target,
            kind: TamperKind::None,
            detector: Some(1 + (seed % 3) as u32),
        };
        let (tr, halt) = run_forgery_scenario(&cfg, &honest).unwrap();
        if halt.halted || tr.summary.halted {
            false_halts += 1;
        }
        assert_eq!(tr.summary.verified, 4);
    }
    assert_eq!((detected, false_halts), (200, 0));
}

#[test]
fn transcripts_use_only_the_simulated_clock() {
    let cfg = ScenarioConfig {
        broadcasts: 5,
        ..ScenarioConfig::default()
    };
    let a = run_bootstrap_scenario(&cfg).unwrap().to_jsonl();
    std::thread::sleep(std::time::Duration::from_millis(20));
    let b = run_bootstrap_scenario(&cfg).unwrap().to_jsonl();
    assert_eq!(a, b);
}
