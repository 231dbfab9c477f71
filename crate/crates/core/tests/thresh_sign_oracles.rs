//! Signing-path values checked against direct recomputation.

mod common;

use std::collections::BTreeMap;

use common::{big, oracle_exp, order, scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sibauth::algebra::{
    element_to_hex, hash_to_scalar_h1, hash_to_scalar_h2, sample_scalar, DefaultGroup, Group,
    HashInput,
};
use sibauth::failstop::recompute_commitment;
use sibauth::hierarchy::{extract, identity_hash, setup, Extraction};
use sibauth::thresh_sign::{
    aggregate, mverify, preprocess, sign_session_share, verify_share, CommitmentList, NonceStore,
    SignatureShare, SigningSession, ThresholdSignature,
};
use sibauth::Error;

type G = DefaultGroup;

struct Group3 {
    ex: Extraction<G>,
    stores: BTreeMap<u32, NonceStore<G>>,
    lists: BTreeMap<u32, CommitmentList<G>>,
    pks: BTreeMap<u32, <G as Group>::Element>,
}

fn group(t: usize, n: usize, slots: usize, seed: u64) -> Group3 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mk, _) = setup::<G, _>(&mut rng);
    let amf = extract(b"AMF-0001", &mk.level_key(), 1, 1, 0, &mut rng).unwrap();
    let amf = amf.shares[0].clone().into_level_key().unwrap();
    let ex = extract(b"BSG-0001", &amf, t, n, 0, &mut rng).unwrap();
    let mut stores = BTreeMap::new();
    let mut lists = BTreeMap::new();
    for s in &ex.shares {
        let (st, l) = preprocess(s, slots, &mut rng).unwrap();
        stores.insert(s.index, st);
        lists.insert(s.index, l);
    }
    let pks = ex.indexed_pks().into_iter().collect();
    Group3 {
        ex,
        stores,
        lists,
        pks,
    }
}

fn sign(
    g: &mut Group3,
    m: &[u8],
    j: u64,
    set: &[u32],
) -> (SigningSession<G>, Vec<SignatureShare<G>>) {
    let t = g.ex.shares[0].threshold;
    let session = SigningSession::new(m, j, set, &g.lists, t, g.ex.chain.last()).unwrap();
    let shares = set
        .iter()
        .map(|&i| {
            sign_session_share(
                &session,
                &g.ex.shares[i as usize - 1],
                g.stores.get_mut(&i).unwrap(),
            )
            .unwrap()
        })
        .collect();
    (session, shares)
}

/// `g^z == R * Y^h` with `Y` built level by level and `h` hashed directly.
fn oracle_verify(ex: &Extraction<G>, m: &[u8], sig: &ThresholdSignature<G>) -> bool {
    let ids = &ex.shares[0].ids;
    let mut y = ex.chain.elements()[0];
    for l in 1..=ids.level() {
        let h = identity_hash::<G>(ids.id(l).unwrap(), &ex.chain.prefix(l));
        y = G::combine(&oracle_exp::<G>(&y, &h), &ex.chain.elements()[l]);
    }
    let h = hash_to_scalar_h2::<G>(
        &HashInput::new()
            .element::<G>(&sig.r)
            .element::<G>(ex.chain.last())
            .bytes(m)
            .finish(),
    );
    oracle_exp::<G>(&G::generator(), &sig.z) == G::combine(&sig.r, &oracle_exp::<G>(&y, &h))
}

#[test]
fn first_commitment_pinned() {
    let g = group(2, 3, 1, 1234);
    let store = &g.stores[&1];
    let raw = store.reveal(1).unwrap();
    let member = HashInput::new().bytes(b"BSG-0001").u64(1).finish();
    let bind = |x: &<G as Group>::Scalar| {
        hash_to_scalar_h1::<G>(
            &HashInput::new()
                .scalar::<G>(x)
                .u64(1)
                .bytes(&member)
                .finish(),
        )
    };
    let e = oracle_exp::<G>(&G::generator(), &bind(&raw.e_hat));
    let d = oracle_exp::<G>(&G::generator(), &bind(&raw.d_hat));
    let c = g.lists[&1].get(1).unwrap();
    assert_eq!((c.e, c.d), (e, d));
    assert_eq!(element_to_hex::<G>(&c.e), PINNED_E11);
    assert_eq!(element_to_hex::<G>(&c.d), PINNED_D11);
}

// Seed 1234, signer 1, slot 1; recomputed by double-and-add above.
const PINNED_E11: &str = "02a6ab9c7af1b50c254f17c85d0285c67094684f23ee98f4220097ebdcc3ea25";
const PINNED_D11: &str = "b4e1c2da48c169ad40fd4bce6e2aa541d12d658ea89a4d0291e22df902f61a20";

#[test]
fn aggregate_matches_oracle_verification() {
    let mut g = group(2, 3, 10, 1);
    for (j, set) in [
        (1, vec![1, 2]),
        (2, vec![2, 3]),
        (3, vec![1, 3]),
        (4, vec![1, 2, 3]),
    ] {
        let m = format!("message {j}").into_bytes();
        let (session, shares) = sign(&mut g, &m, j, &set);
        let sig = aggregate(&session, &shares, &g.pks).unwrap();
        assert!(oracle_verify(&g.ex, &m, &sig));
        assert!(mverify(&m, &g.ex.shares[0].ids, &g.ex.chain, &sig).unwrap());

        // z is the plain sum of the share responses.
        let q = order::<G>();
        let z = shares.iter().fold(num_bigint::BigUint::from(0u32), |a, s| {
            (a + big::<G>(&s.z)) % &q
        });
        assert_eq!(scalar::<G>(&z), sig.z);
    }
}

#[test]
fn different_subsets_give_different_accepted_signatures() {
    let mut g = group(2, 3, 10, 2);
    let m = b"same payload";
    let mut seen = Vec::new();
    for (j, set) in [(1, [1, 2]), (2, [1, 3]), (3, [2, 3])] {
        let (session, shares) = sign(&mut g, m, j, &set);
        let sig = aggregate(&session, &shares, &g.pks).unwrap();
        assert!(mverify(m, &g.ex.shares[0].ids, &g.ex.chain, &sig).unwrap());
        assert!(!seen.contains(&sig.to_bytes()));
        seen.push(sig.to_bytes());
    }
}

#[test]
fn share_validity_fails_on_any_perturbation() {
    let mut g = group(3, 5, 2, 3);
    let mut rng = ChaCha20Rng::seed_from_u64(30);
    let (session, shares) = sign(&mut g, b"m", 1, &[1, 3, 5]);
    for s in &shares {
        let pk = g.pks[&s.index];
        let lambda = session.lambda(s.index).unwrap();
        assert!(verify_share(s, &pk, &lambda, &session.h));
        let other = sample_scalar::<G, _>(&mut rng);
        let mut bad = *s;
        bad.z = other;
        assert!(!verify_share(&bad, &pk, &lambda, &session.h));
        let mut bad = *s;
        bad.r = G::exp_generator(&other);
        assert!(!verify_share(&bad, &pk, &lambda, &session.h));
        assert!(!verify_share(
            s,
            &G::exp_generator(&other),
            &lambda,
            &session.h
        ));
        assert!(!verify_share(s, &pk, &other, &session.h));
        assert!(!verify_share(s, &pk, &lambda, &other));
    }
}

#[test]
fn swapped_commitment_share_is_rejected() {
    let mut g = group(2, 3, 2, 4);
    let (session, mut shares) = sign(&mut g, b"m", 1, &[1, 2]);
    shares[0].r = shares[1].r;
    assert!(matches!(
        aggregate(&session, &shares, &g.pks),
        Err(Error::ShareVerificationFailed(1))
    ));
}

#[test]
fn pof_and_signing_share_one_commitment_path() {
    let g = group(2, 3, 100, 5);
    let ids = g.ex.shares[0].ids.clone();
    for j in 1..=100u64 {
        let set = [1 + (j % 3) as u32, 1 + ((j + 1) % 3) as u32];
        let m = j.to_be_bytes();
        let session = SigningSession::new(&m, j, &set, &g.lists, 2, g.ex.chain.last()).unwrap();
        let mut reveals: Vec<_> = set
            .iter()
            .map(|&i| (i, g.stores[&i].reveal(j).unwrap()))
            .collect();
        reveals.sort_by_key(|(i, _)| *i);
        assert_eq!(recompute_commitment::<G>(&ids, &m, j, &reveals), session.r);
    }
}

#[test]
fn below_threshold_partial_sums_never_verify() {
    let mut g = group(3, 5, 40, 6);
    let ids = g.ex.shares[0].ids.clone();
    for j in 1..=40u64 {
        let m = j.to_be_bytes();
        let (session, shares) = sign(&mut g, &m, j, &[1, 2, 3]);
        let q = order::<G>();
        let z = shares[..2]
            .iter()
            .fold(num_bigint::BigUint::from(0u32), |a, s| {
                (a + big::<G>(&s.z)) % &q
            });
        let r = G::combine(&shares[0].r, &shares[1].r);
        let partial = ThresholdSignature {
            r,
            z: scalar::<G>(&z),
            j,
            signer_set: vec![1, 2],
        };
        assert!(!mverify(&m, &ids, &g.ex.chain, &partial).unwrap());
        let full = aggregate(&session, &shares, &g.pks).unwrap();
        assert!(mverify(&m, &ids, &g.ex.chain, &full).unwrap());
    }
}
