//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sibauth::algebra::{sample_scalar, scalar_product, DefaultGroup, Group, ScalarField};
use sibauth::audit::{
    cross_validate, AuditEntry, AuditLog, EntryFields, InsecureMacThpq, ThresholdPq,
};
use sibauth::cli::bench::{bench_row, Preprocessing};
use sibauth::failstop::{pof, pof_verify, HistoryRecord, PofOutcome, SignatureHistory, Verdict};
use sibauth::hierarchy::{
    derived_level_public_key, extract, identity_hashes, reconstruct_secret, setup, Extraction,
    LevelKey,
};
use sibauth::sib_model::{
    broadcast_delay, build_authenticated_sib1, expected_packets_cyclic, fragment_plan,
    monte_carlo_reassembly, ReassemblyPolicy, SizeRegistry, DEFAULT_FREE_BYTES, SIB1_MAX_BYTES,
};
use sibauth::simnet::{
    run_bootstrap_scenario, run_forgery_scenario, ScenarioConfig, TamperKind, TamperSpec,
};
use sibauth::thresh_sign::{
    aggregate, mverify, preprocess, sign_session_share, CommitmentList, NonceStore, SigningSession,
    ThresholdSignature,
};

type G = DefaultGroup;
type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

struct Signers {
    parent: LevelKey<G>,
    ex: Extraction<G>,
    stores: BTreeMap<u32, NonceStore<G>>,
    lists: BTreeMap<u32, CommitmentList<G>>,
}

impl Signers {
    fn new(depth: usize, t: usize, n: usize, slots: usize, rng: &mut ChaCha20Rng) -> Self {
        let (mk, _) = setup::<G, _>(rng);
        let mut parent = mk.level_key();
        for l in 1..depth {
            let ex = extract(format!("LVL{l:05}").as_bytes(), &parent, 1, 1, 0, rng).unwrap();
            parent = ex.shares[0].clone().into_level_key().unwrap();
        }
        let ex = extract(b"BSG-0001", &parent, t, n, 0, rng).unwrap();
        let mut stores = BTreeMap::new();
        let mut lists = BTreeMap::new();
        for s in &ex.shares {
            let (st, l) = preprocess(s, slots, rng).unwrap();
            stores.insert(s.index, st);
            lists.insert(s.index, l);
        }
        Self {
            parent,
            ex,
            stores,
            lists,
        }
    }

    fn sign(&mut self, m: &[u8], j: u64, set: &[u32]) -> ThresholdSignature<G> {
        let t = self.ex.shares[0].threshold;
        let session = SigningSession::new(m, j, set, &self.lists, t, self.ex.chain.last()).unwrap();
        let shares: Vec<_> = set
            .iter()
            .map(|&i| {
                let store = self.stores.get_mut(&i).unwrap();
                sign_session_share(&session, &self.ex.shares[i as usize - 1], store).unwrap()
            })
            .collect();
        let pks = self.ex.indexed_pks().into_iter().collect();
        aggregate(&session, &shares, &pks).unwrap()
    }

    fn verify(&self, m: &[u8], sig: &ThresholdSignature<G>) -> bool {
        mverify(m, &self.ex.shares[0].ids, &self.ex.chain, sig).unwrap()
    }
}

fn random_message(rng: &mut ChaCha20Rng) -> Vec<u8> {
    let len = rng.gen_range(1..200);
    (0..len).map(|_| rng.gen()).collect()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn completeness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let (mut total, mut accepted) = (0u32, 0u32);
    for (t, n) in [(1, 1), (2, 2), (2, 3), (3, 5)] {
        for beta in t..=n {
            for depth in 1..=3 {
                let mut s = Signers::new(depth, t, n, 100, &mut rng);
                for j in 1..=100u64 {
                    let m = random_message(&mut rng);
                    let mut set: Vec<u32> = (1..=n as u32).collect();
                    rand::seq::SliceRandom::shuffle(set.as_mut_slice(), &mut rng);
                    set.truncate(beta);
                    let sig = s.sign(&m, j, &set);
                    total += 1;
                    accepted += s.verify(&m, &sig) as u32;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        accepted == total && elapsed < Duration::from_secs(60),
        format!(
            "{accepted}/{total} accepted in {:.1} s (limit 60 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn key_chain_identity() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut ok = 0;
    for depth in 1..=3 {
        for _ in 0..100 {
            let s = Signers::new(depth, 2, 3, 1, &mut rng);
            let ids = &s.ex.shares[0].ids;
            let keys = s.ex.chain.elements();
            let h = identity_hashes::<G>(ids, &s.ex.chain).unwrap();
            let k = ids.level();
            // Q = prod_{l<k} Q_l^(prod_{w>l} h_w)
            let q = (1..k).fold(G::identity(), |acc, l| {
                G::combine(&acc, &G::exp(&keys[l], &scalar_product(&h[l..])))
            });
            let rhs = G::combine(
                &G::combine(&q, &keys[k]),
                &G::exp(&keys[0], &scalar_product(&h)),
            );
            let sk = reconstruct_secret(&s.ex.shares[1..]).unwrap();
            if G::exp_generator(&sk) == rhs
                && derived_level_public_key(ids, &s.ex.chain).unwrap() == rhs
            {
                ok += 1;
            }
        }
    }
    check(
        ok == 300,
        format!("{ok}/300 hierarchies (100 per depth 1..3)"),
    )
}

fn threshold_soundness() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut accepted = 0;
    let mut attempts = 0;
    for (t, n) in [(2, 3), (3, 5), (2, 2), (4, 5)] {
        let mut s = Signers::new(2, t, n, 250, &mut rng);
        for j in 1..=250u64 {
            let m = random_message(&mut rng);
            let coalition: Vec<u32> = (1..t as u32).collect();
            attempts += 1;
            let forged = if j % 2 == 0 {
                // Coalition ignores the honest threshold check and
                // interpolates over itself as if it were qualified.
                let session =
                    SigningSession::new(&m, j, &coalition, &s.lists, t - 1, s.ex.chain.last())
                        .unwrap();
                let shares: Vec<_> = coalition
                    .iter()
                    .map(|&i| {
                        let st = s.stores.get_mut(&i).unwrap();
                        let mut share = s.ex.shares[i as usize - 1].clone();
                        share.threshold = t - 1;
                        sign_session_share(&session, &share, st).unwrap()
                    })
                    .collect();
                let z = shares
                    .iter()
                    .fold(<G as Group>::Scalar::zero(), |a, x| a + x.z);
                ThresholdSignature {
                    r: session.r,
                    z,
                    j,
                    signer_set: coalition.clone(),
                }
            } else {
                // Partial sum of an honest qualified session.
                let full: Vec<u32> = (1..=t as u32).collect();
                let session =
                    SigningSession::new(&m, j, &full, &s.lists, t, s.ex.chain.last()).unwrap();
                let shares: Vec<_> = coalition
                    .iter()
                    .map(|&i| {
                        let st = s.stores.get_mut(&i).unwrap();
                        sign_session_share(&session, &s.ex.shares[i as usize - 1], st).unwrap()
                    })
                    .collect();
                let pks: BTreeMap<_, _> = s.ex.indexed_pks().into_iter().collect();
                assert!(aggregate(&session, &shares, &pks).is_err());
                let z = shares
                    .iter()
                    .fold(<G as Group>::Scalar::zero(), |a, x| a + x.z);
                let r = shares
                    .iter()
                    .fold(G::identity(), |a, x| G::combine(&a, &x.r));
                ThresholdSignature {
                    r,
                    z,
                    j,
                    signer_set: coalition.clone(),
                }
            };
            accepted += s.verify(&m, &forged) as u32;
        }
    }
    check(
        accepted == 0,
        format!("{accepted} of {attempts} (t-1)-share aggregations accepted"),
    )
}

fn fail_stop_detection() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let (mut proofs, mut confirmed, mut not_forgery, mut false_halts) = (0, 0, 0, 0);
    for _ in 0..10 {
        let mut s = Signers::new(2, 2, 3, 200, &mut rng);
        let ids = s.ex.shares[0].ids.clone();
        let pks: BTreeMap<_, _> = s.ex.indexed_pks().into_iter().collect();
        let hist = SignatureHistory::new();
        for j in 1..=200u64 {
            let m = random_message(&mut rng);
            let sets: [&[u32]; 4] = [&[1, 2], &[1, 3], &[2, 3], &[1, 2, 3]];
            let set = sets[j as usize % 4];
            let sig = s.sign(&m, j, set);
            hist.append(HistoryRecord {
                message: m.clone(),
                signature: sig.clone(),
                timestamp_ms: 0,
            })
            .unwrap();
            let reveals: BTreeMap<_, _> = set
                .iter()
                .map(|&i| (i, s.stores[&i].reveal(j).unwrap()))
                .collect();
            let verify = |suspect: &ThresholdSignature<G>, outcome: &PofOutcome<G>| {
                pof_verify(
                    &s.ex.level_secret.alpha,
                    &s.parent.sk,
                    &ids,
                    &s.ex.chain,
                    &pks,
                    &m,
                    suspect,
                    outcome,
                )
                .unwrap()
            };
            if j % 2 == 0 {
                let mut forged = sig.clone();
                forged.r = G::exp_generator(&sample_scalar::<G, _>(&mut rng));
                let out = pof(&forged, &m, &hist, &ids, &reveals).unwrap();
                if matches!(out, PofOutcome::Proof(_)) {
                    proofs += 1;
                }
                if verify(&forged, &out) == Verdict::ForgeryConfirmed {
                    confirmed += 1;
                }
            } else {
                let out = pof(&sig, &m, &hist, &ids, &reveals).unwrap();
                if out == PofOutcome::NotAForgery {
                    not_forgery += 1;
                }
                if verify(&sig, &out).is_confirmed() {
                    false_halts += 1;
                }
            }
        }
    }
    check(
        (proofs, confirmed, not_forgery, false_halts) == (1000, 1000, 1000, 0),
        format!(
            "tampered: {proofs} proofs, {confirmed} confirmed; honest: {not_forgery} not-a-forgery, {false_halts} false halts"
        ),
    )
}

fn feasibility_figures() -> Outcome {
    let f = fragment_plan(3732, DEFAULT_FREE_BYTES).fragments;
    let c = expected_packets_cyclic(13);
    let got = (
        f,
        c.best,
        c.expected,
        c.worst,
        broadcast_delay(13, 20),
        broadcast_delay(13, 160),
        broadcast_delay(19, 20),
        broadcast_delay(19, 160),
    );
    let want = (13, 13, Ratio::new(247, 13), 25, 240, 1920, 360, 2880);
    check(
        got == want && c.expected == Ratio::from_integer(19),
        format!(
            "fragments {}, packets {}/{}/{}, delay {}-{} ms, expected delay {}-{} ms",
            got.0, got.1, got.2, got.3, got.4, got.5, got.6, got.7
        ),
    )
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let stats = monte_carlo_reassembly(13, ReassemblyPolicy::AnchorFirst, 100_000, &mut rng);
    let elapsed = start.elapsed();
    check(
        (stats.mean - 19.0).abs() <= 0.1 && elapsed < Duration::from_secs(5),
        format!(
            "mean {:.4} (|x-19| <= 0.1) in {:.2} s (limit 5 s)",
            stats.mean,
            elapsed.as_secs_f64()
        ),
    )
}

fn size_budget() -> Outcome {
    let registry = SizeRegistry::default();
    let borg = registry
        .get("(2,3)-BORG")
        .ok_or("profile missing")?
        .crypto_bytes();
    let total = 79 + borg;
    let frags = if total <= SIB1_MAX_BYTES {
        0
    } else {
        fragment_plan(borg, DEFAULT_FREE_BYTES).fragments
    };

    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut s = Signers::new(2, 2, 3, 1, &mut rng);
    let base = vec![0u8; 79];
    let sig = s.sign(&base, 1, &[1, 2]);
    let ids = sibauth::hierarchy::IdentityVector::new([b"AMF-0001".to_vec(), b"BSG-0001".to_vec()]);
    let built =
        build_authenticated_sib1(&base, &sig, &s.ex.chain, &ids).map_err(|e| e.to_string())?;
    let sig_len = ThresholdSignature::<G>::wire_len();
    check(
        borg == 144 && total == 223 && frags == 0 && built.total_len() == 223 && sig_len == 64 && G::ELEMENT_LEN == 32,
        format!(
            "overhead {borg} B, SIB1 {total} B (built {}) of {SIB1_MAX_BYTES}, {frags} fragments, signature {sig_len} B, Q {} B",
            built.total_len(),
            G::ELEMENT_LEN
        ),
    )
}

fn audit_log_50() -> Vec<AuditEntry> {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let km = InsecureMacThpq.keygen(2, 3, &mut rng).unwrap();
    let mut log = AuditLog::new(InsecureMacThpq, km.public_key.clone());
    for j in 1..=50u64 {
        let sigma_bs = j.to_be_bytes().repeat(8);
        let partials: Vec<_> = km.shares[1..]
            .iter()
            .map(|s| InsecureMacThpq.sign_share(s, &sigma_bs))
            .collect();
        let sigma_a = InsecureMacThpq.aggregate(2, &partials).unwrap();
        log.append(EntryFields {
            j,
            timestamp_ms: 20 * j,
            bs_ids: vec!["BS-2".into(), "BS-3".into()],
            sigma_bs,
            sigma_a,
        })
        .unwrap();
    }
    log.entries().to_vec()
}

fn audit_integrity() -> Outcome {
    let start = Instant::now();
    let log = audit_log_50();
    let clean = cross_validate(&[log.clone(), log.clone(), log.clone()]).is_clean();
    let (mut tried, mut caught) = (0, 0);
    for replica in 0..3 {
        for h in 0..log.len() {
            for field in 0..8 {
                for reseal in [false, true] {
                    let mut reps = vec![log.clone(), log.clone(), log.clone()];
                    let e = &mut reps[replica][h];
                    match field {
                        0 => e.height += 1,
                        1 => e.j += 1000,
                        2 => e.timestamp_ms += 1,
                        3 => e.bs_ids.push("BS-1".into()),
                        4 => e.sigma_bs = "00".repeat(64),
                        5 => e.sigma_a = format!("ff{}", &e.sigma_a[2..]),
                        6 => e.prev = "1".repeat(64),
                        _ => e.digest = "2".repeat(64),
                    }
                    if reseal && field != 7 {
                        e.digest = e.compute_digest();
                    }
                    tried += 1;
                    caught += !cross_validate(&reps).is_clean() as u32;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        clean && caught == tried && elapsed < Duration::from_secs(10),
        format!(
            "identical replicas clean: {clean}; {caught}/{tried} mutations detected in {:.2} s (limit 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn timing_properties() -> Outcome {
    let iterations = 200;
    let pre =
        bench_row(2, 3, Preprocessing::Precomputed, iterations, 9).map_err(|e| e.to_string())?;
    let inline =
        bench_row(2, 3, Preprocessing::Inline, iterations, 9).map_err(|e| e.to_string())?;

    // Verification cost across group shapes, measured round-robin.
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let mut cases = Vec::new();
    for (t, n) in [(1, 1), (2, 3), (3, 5)] {
        let mut s = Signers::new(2, t, n, 1, &mut rng);
        let m = random_message(&mut rng);
        let set: Vec<u32> = (1..=t as u32).collect();
        let sig = s.sign(&m, 1, &set);
        cases.push((s, m, sig, Vec::new()));
    }
    for _ in 0..400 {
        for (s, m, sig, times) in cases.iter_mut() {
            let start = Instant::now();
            assert!(s.verify(m, sig));
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
    }
    let medians: Vec<f64> = cases
        .into_iter()
        .map(|(_, _, _, mut t)| {
            t.sort_by(|a, b| a.total_cmp(b));
            t[t.len() / 2]
        })
        .collect();
    let (lo, hi) = medians
        .iter()
        .fold((f64::MAX, 0f64), |(l, h), &x| (l.min(x), h.max(x)));
    let spread = hi / lo - 1.0;
    check(
        pre.round_trip_ms < 50.0 && inline.round_trip_ms < 50.0 && inline.sign_ms > pre.sign_ms && spread <= 0.20,
        format!(
            "(2,3) round trip {:.3} ms (limit 50); sign inline {:.3} ms > precomputed {:.3} ms; verify (1,1)/(2,3)/(3,5) {:.3}/{:.3}/{:.3} ms, spread {:.1}% (limit 20%)",
            inline.round_trip_ms, inline.sign_ms, pre.sign_ms, medians[0], medians[1], medians[2], spread * 100.0
        ),
    )
}

fn determinism() -> Outcome {
    let cfg = ScenarioConfig {
        seed: 77,
        ..ScenarioConfig::default()
    };
    let a = run_bootstrap_scenario(&cfg)
        .map_err(|e| e.to_string())?
        .to_jsonl();
    let b = run_bootstrap_scenario(&cfg)
        .map_err(|e| e.to_string())?
        .to_jsonl();
    let tamper = TamperSpec {
        target_j: 3,
        kind: TamperKind::ReplaceR,
        detector: None,
    };
    let fa = run_forgery_scenario(&cfg, &tamper)
        .map_err(|e| e.to_string())?
        .0
        .to_jsonl();
    let fb = run_forgery_scenario(&cfg, &tamper)
        .map_err(|e| e.to_string())?
        .0
        .to_jsonl();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let args = [
            "sibauth",
            "--seed",
            "77",
            "keygen",
            "--t",
            "2",
            "--n",
            "3",
            "--out",
            out.to_str().unwrap(),
        ];
        let code = sibauth::cli::run(args, &mut std::io::sink(), &mut std::io::sink());
        if code != 0 {
            return Err(format!("keygen exited {code}"));
        }
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        trees.push(files);
    }
    check(
        a == b && fa == fb && trees[0] == trees[1] && !trees[0].is_empty(),
        format!(
            "bootstrap transcript {} B, forgery transcript {} B, {} key files: identical across runs: {}",
            a.len(),
            fa.len(),
            trees[0].len(),
            a == b && fa == fb && trees[0] == trees[1]
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("scheme completeness", completeness),
        ("key-chain identity", key_chain_identity),
        ("threshold soundness", threshold_soundness),
        ("fail-stop detection", fail_stop_detection),
        ("fragmentation and delay figures", feasibility_figures),
        ("Monte Carlo vs closed form", monte_carlo),
        ("size budget", size_budget),
        ("audit integrity", audit_integrity),
        ("timing properties", timing_properties),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
