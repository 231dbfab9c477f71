//! The same hierarchy and threshold signing over the 224-bit Koblitz curve,
//! showing the smaller wire sizes of the alternate group.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sibauth::algebra::{Group, Secp224k1};
use sibauth::hierarchy::{extract, setup};
use sibauth::thresh_sign::{
    aggregate, mverify, preprocess, sign_share, SigningSession, ThresholdSignature,
};

type G = Secp224k1;

fn main() -> sibauth::Result<()> {
    let params = G::params();
    println!(
        "{}: element {} bytes, scalar {} bytes",
        params.name,
        G::ELEMENT_LEN,
        G::SCALAR_LEN
    );
    println!(
        "signature wire length {} bytes",
        ThresholdSignature::<G>::wire_len()
    );

    let mut rng = ChaCha20Rng::seed_from_u64(3);
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
    let message = b"secp224k1 SIB1";
    let signers = [1, 2];
    let shares = signers
        .iter()
        .map(|&i| {
            sign_share(
                message,
                1,
                &lists,
                &signers,
                &group.shares[i as usize - 1],
                stores.get_mut(&i).unwrap(),
            )
        })
        .collect::<sibauth::Result<Vec<_>>>()?;
    let session = SigningSession::new(message, 1, &signers, &lists, 2, group.chain.last())?;
    let pks = group.indexed_pks().into_iter().collect();
    let sig = aggregate(&session, &shares, &pks)?;
    let ok = mverify(message, &group.shares[0].ids, &group.chain, &sig)?;
    println!("verification: {}", if ok { "accepted" } else { "rejected" });
    assert!(ok);
    Ok(())
}
