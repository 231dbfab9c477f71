//! Simulated bootstrapping: key distribution, preprocessing and ten signed
//! SIB1 broadcasts, then the same network with base stations offline and
//! with a tampered broadcast.

use sibauth::simnet::{
    run_bootstrap_scenario, run_forgery_scenario, run_unavailability_scenario, ScenarioConfig,
    TamperKind, TamperSpec,
};

fn main() -> sibauth::Result<()> {
    let cfg = ScenarioConfig::default();
    let t = run_bootstrap_scenario(&cfg)?;
    let s = &t.summary;
    println!(
        "({},{}): {} of {} broadcasts verified",
        cfg.t, cfg.n, s.verified, s.broadcasts
    );
    for b in s.breakdowns.iter().take(3) {
        println!(
            "  j={} sign {} + link {} + processing {} + transmission {} + verify {} = {} us",
            b.j,
            b.sign_us,
            b.aggregation_link_us,
            b.packet_processing_us,
            b.transmission_us,
            b.verification_us,
            b.e2e_us
        );
    }

    let centralized = ScenarioConfig {
        t: 1,
        n: 1,
        ..cfg.clone()
    };
    let c = run_bootstrap_scenario(&centralized)?;
    println!(
        "(1,1): end-to-end {} us per broadcast",
        c.summary.breakdowns[0].e2e_us
    );

    for offline in [vec![3], vec![1, 3]] {
        let u = run_unavailability_scenario(&cfg, &offline)?;
        println!(
            "offline {offline:?}: {} verified, {} unavailable",
            u.summary.verified, u.summary.unavailable
        );
    }

    let spec = TamperSpec {
        target_j: 4,
        kind: TamperKind::ReplaceR,
        detector: None,
    };
    let (f, halt) = run_forgery_scenario(&cfg, &spec)?;
    println!(
        "tampered j=4: verdict {:?}, halted {}, {} later requests refused",
        halt.verdict, halt.halted, f.summary.refused
    );
    for e in f
        .events
        .iter()
        .filter(|e| e.j == Some(4) || e.kind == "halt")
    {
        println!(
            "  {:>8} us {:<6} {:<16} {}",
            e.time_us, e.actor, e.kind, e.detail
        );
    }
    Ok(())
}
