//! Two-round threshold signing by a (3,5) base-station group: nonce
//! preprocessing, commitment publication, per-signer shares, aggregation and
//! verification from the master key and identities.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sibauth::algebra::DefaultGroup;
use sibauth::hierarchy::{extract, setup};
use sibauth::thresh_sign::{aggregate, context_id, mverify, preprocess, sign_share, Bulletin};
use sibauth::Error;

type G = DefaultGroup;

fn main() -> sibauth::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let (master, _) = setup::<G, _>(&mut rng);
    let amf = extract(b"AMF-0001", &master.level_key(), 1, 1, 86_400, &mut rng)?;
    let amf = amf.shares[0].clone().into_level_key()?;
    let group = extract(b"BSG-0001", &amf, 3, 5, 86_400, &mut rng)?;
    let ctx = context_id(&group.shares[0].ids, &group.chain);

    let bulletin = Bulletin::new();
    let mut stores = BTreeMap::new();
    for share in &group.shares {
        let (store, list) = preprocess(share, 8, &mut rng)?;
        bulletin.publish(&ctx, &list);
        stores.insert(share.index, store);
    }
    let lists = bulletin.fetch_all::<G>(&ctx)?;
    let pks: BTreeMap<u32, _> = group.indexed_pks().into_iter().collect();

    for (j, signers) in [
        (1u64, vec![1u32, 2, 3]),
        (2, vec![2, 4, 5]),
        (3, vec![1, 3, 4, 5]),
    ] {
        let message = format!("SIB1 payload #{j}").into_bytes();
        let shares = signers
            .iter()
            .map(|&i| {
                let store = stores.get_mut(&i).expect("preprocessed");
                sign_share(
                    &message,
                    j,
                    &lists,
                    &signers,
                    &group.shares[i as usize - 1],
                    store,
                )
            })
            .collect::<sibauth::Result<Vec<_>>>()?;
        let session = sibauth::thresh_sign::SigningSession::new(
            &message,
            j,
            &signers,
            &lists,
            3,
            group.chain.last(),
        )?;
        let sig = aggregate(&session, &shares, &pks)?;
        let ok = mverify(&message, &group.shares[0].ids, &group.chain, &sig)?;
        println!(
            "slot {j} signers {signers:?}: {}",
            if ok { "accepted" } else { "rejected" }
        );
        assert!(ok);
        assert!(!mverify(
            b"other payload",
            &group.shares[0].ids,
            &group.chain,
            &sig
        )?);
    }

    let store = stores.get_mut(&1).expect("preprocessed");
    match sign_share(b"again", 1, &lists, &[1, 2, 3], &group.shares[0], store) {
        Err(Error::NonceReuse { index, slot }) => {
            println!("slot {slot} of BS-{index} cannot be reused")
        }
        other => panic!("expected nonce reuse, got {other:?}"),
    }
    match sign_share(b"too few", 4, &lists, &[1, 2], &group.shares[0], store) {
        Err(e @ Error::BelowThreshold { .. }) => println!("{e}"),
        other => panic!("expected threshold error, got {other:?}"),
    }
    Ok(())
}
