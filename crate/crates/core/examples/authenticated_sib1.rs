//! Attaches a group signature, key chain and identities to a 79-byte SIB1,
//! then parses and checks it the way a UE would, including freshness.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sibauth::algebra::DefaultGroup;
use sibauth::hierarchy::{extract, setup};
use sibauth::sib_model::{
    build_authenticated_sib1, freshness_check, parse_attachment, FreshnessPolicy, SIB1_MAX_BYTES,
};
use sibauth::thresh_sign::{
    aggregate, mverify, preprocess, sign_share, SigningSession, ThresholdSignature,
};

type G = DefaultGroup;

fn main() -> sibauth::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let (master, _) = setup::<G, _>(&mut rng);
    let amf = extract(b"AMF-0001", &master.level_key(), 1, 1, 86_400, &mut rng)?;
    let amf = amf.shares[0].clone().into_level_key()?;
    let group = extract(b"BSG-0001", &amf, 2, 3, 86_400, &mut rng)?;

    let mut stores = BTreeMap::new();
    let mut lists = BTreeMap::new();
    for share in &group.shares {
        let (s, l) = preprocess(share, 1, &mut rng)?;
        stores.insert(share.index, s);
        lists.insert(share.index, l);
    }

    let now_ms: u64 = 1_000_000;
    let mut base = vec![0u8; 79];
    base[..8].copy_from_slice(&now_ms.to_be_bytes());
    let signers = [2, 3];
    let shares = signers
        .iter()
        .map(|&i| {
            sign_share(
                &base,
                1,
                &lists,
                &signers,
                &group.shares[i as usize - 1],
                stores.get_mut(&i).unwrap(),
            )
        })
        .collect::<sibauth::Result<Vec<_>>>()?;
    let session = SigningSession::new(&base, 1, &signers, &lists, 2, group.chain.last())?;
    let pks = group.indexed_pks().into_iter().collect();
    let sig = aggregate(&session, &shares, &pks)?;

    let sib = build_authenticated_sib1(&base, &sig, &group.chain, &group.shares[0].ids)?;
    println!(
        "SIB1: {} base + {} attached = {} of {} bytes",
        sib.base.len(),
        sib.attached.len(),
        sib.total_len(),
        SIB1_MAX_BYTES
    );

    let parsed = parse_attachment::<G>(&sib.attached, &master.pk, 2)?;
    let received = ThresholdSignature::<G>::from_bytes(&parsed.signature, 1, Vec::new())?;
    let ok = mverify(&sib.base, &parsed.ids, &parsed.chain, &received)?;
    println!(
        "UE verification: {}",
        if ok { "accepted" } else { "rejected" }
    );

    let window = FreshnessPolicy::default().window_ms("threshold-2-of-3");
    for delay in [5, 25, 40] {
        let verdict = freshness_check(now_ms as i64, window, (now_ms + delay) as i64);
        println!("received {delay} ms later (window {window} ms): {verdict:?}");
    }
    Ok(())
}
