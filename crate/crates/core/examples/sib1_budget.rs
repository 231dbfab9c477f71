//! Size budget of authenticated SIB1 under several signature architectures,
//! with fragment counts, cyclic reassembly statistics and broadcast delays.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sibauth::sib_model::{
    broadcast_delay, expected_packets_cyclic, fragment_plan, monte_carlo_reassembly, scheme_report,
    simulate_reassembly, ReassemblyPolicy, SizeRegistry, DEFAULT_FREE_BYTES,
};

fn main() {
    let registry = SizeRegistry::default();
    let report = scheme_report(&registry.profiles, 79, DEFAULT_FREE_BYTES);
    print!("{}", report.render_text());

    let plan = fragment_plan(3732, DEFAULT_FREE_BYTES);
    let counts = expected_packets_cyclic(plan.fragments);
    println!(
        "\n3732-byte payload: {} fragments, packets best {} expected {} worst {}",
        plan.fragments, counts.best, counts.expected, counts.worst
    );
    for period in [20, 160] {
        println!(
            "  period {period} ms: best-case delay {} ms, expected {} ms",
            broadcast_delay(counts.best, period),
            broadcast_delay(counts.expected.to_integer(), period)
        );
    }

    for start in [1, 2, 13] {
        let heard = simulate_reassembly(plan.fragments, start, ReassemblyPolicy::AnchorFirst);
        println!("  tuning in at fragment {start}: {heard} packets until complete");
    }

    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for policy in [
        ReassemblyPolicy::AnchorFirst,
        ReassemblyPolicy::SlidingWindow,
    ] {
        let stats = monte_carlo_reassembly(plan.fragments, policy, 100_000, &mut rng);
        println!(
            "  {policy:?}: mean {:.3} +- {:.3} over {} trials",
            stats.mean, stats.std_err, stats.trials
        );
    }
}
