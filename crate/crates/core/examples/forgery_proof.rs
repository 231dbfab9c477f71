//! A broadcast whose commitment `R` was replaced still passes verification
//! if the adversary can solve discrete logs; the signers prove otherwise by
//! revealing the slot's nonces, and the parent checks the proof.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sibauth::algebra::{sample_scalar, DefaultGroup, Group};
use sibauth::failstop::{pof, pof_verify, HistoryRecord, PofOutcome, ProofFile, SignatureHistory};
use sibauth::hierarchy::{extract, setup};
use sibauth::thresh_sign::{aggregate, preprocess, sign_session_share, SigningSession};

type G = DefaultGroup;

fn main() -> sibauth::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let (master, _) = setup::<G, _>(&mut rng);
    let amf = extract(b"AMF-0001", &master.level_key(), 1, 1, 86_400, &mut rng)?;
    let amf = amf.shares[0].clone().into_level_key()?;
    let group = extract(b"BSG-0001", &amf, 2, 3, 86_400, &mut rng)?;
    let ids = group.shares[0].ids.clone();
    let pks: BTreeMap<u32, _> = group.indexed_pks().into_iter().collect();

    let mut stores = BTreeMap::new();
    let mut lists = BTreeMap::new();
    for share in &group.shares {
        let (s, l) = preprocess(share, 4, &mut rng)?;
        stores.insert(share.index, s);
        lists.insert(share.index, l);
    }

    let history = SignatureHistory::new();
    let message = b"cell 0x1A2B, tracking area 7".to_vec();
    let signers = [1, 3];
    let session = SigningSession::new(&message, 1, &signers, &lists, 2, group.chain.last())?;
    let shares = signers
        .iter()
        .map(|&i| {
            sign_session_share(
                &session,
                &group.shares[i as usize - 1],
                stores.get_mut(&i).unwrap(),
            )
        })
        .collect::<sibauth::Result<Vec<_>>>()?;
    let genuine = aggregate(&session, &shares, &pks)?;
    history.append(HistoryRecord {
        message: message.clone(),
        signature: genuine.clone(),
        timestamp_ms: 0,
    })?;

    let reveals: BTreeMap<_, _> = signers
        .iter()
        .map(|&i| (i, stores[&i].reveal(1).expect("slot 1 preprocessed")))
        .collect();

    let honest = pof(&genuine, &message, &history, &ids, &reveals)?;
    assert_eq!(honest, PofOutcome::NotAForgery);
    println!("genuine signature: not-a-forgery");

    let mut forged = genuine.clone();
    forged.r = G::exp_generator(&sample_scalar::<G, _>(&mut rng));
    let outcome = pof(&forged, &message, &history, &ids, &reveals)?;
    let PofOutcome::Proof(proof) = &outcome else {
        panic!("expected a proof")
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&ProofFile::from_proof(proof))?
    );

    let verdict = pof_verify(
        &group.level_secret.alpha,
        &amf.sk,
        &ids,
        &group.chain,
        &pks,
        &message,
        &forged,
        &outcome,
    )?;
    println!("{verdict}");
    assert!(verdict.is_confirmed());
    Ok(())
}
