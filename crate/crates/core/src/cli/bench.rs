//! Host-measured sign/verify timings in three configurations: a centralized
//! signer, a threshold group with precomputed nonces, and a threshold group
//! that preprocesses inline before each signature.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::algebra::DefaultGroup;
use crate::error::Result;
use crate::hierarchy::{extract, setup, Extraction, LevelKey};
use crate::simnet::level_identity;
use crate::thresh_sign::{
    aggregate, mverify, preprocess_batch, sign_session_share, CommitmentList, NonceStore,
    SigningSession,
};

type G = DefaultGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocessing {
    Precomputed,
    Inline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub scheme: String,
    pub t: usize,
    pub n: usize,
    pub preprocessing: Preprocessing,
    pub iterations: u64,
    /// Median over iterations, milliseconds.
    pub sign_ms: f64,
    pub verify_ms: f64,
    pub round_trip_ms: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// BS group `(t, n)` two levels below the master key.
fn group(t: usize, n: usize, rng: &mut ChaCha20Rng) -> Result<Extraction<G>> {
    let (mk, _) = setup::<G, _>(rng);
    let amf = extract(&level_identity(1, 2), &mk.level_key(), 1, 1, u64::MAX, rng)?;
    let amf: LevelKey<G> = amf.shares[0].clone().into_level_key()?;
    extract(&level_identity(2, 2), &amf, t, n, u64::MAX, rng)
}

pub fn bench_row(
    t: usize,
    n: usize,
    mode: Preprocessing,
    iterations: u64,
    seed: u64,
) -> Result<BenchRow> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let ex = group(t, n, &mut rng)?;
    let signers: Vec<u32> = (1..=t as u32).collect();
    let pks: BTreeMap<u32, _> = ex.indexed_pks().into_iter().collect();
    let ids = ex.shares[0].ids.clone();

    let mut stores: BTreeMap<u32, NonceStore<G>> = BTreeMap::new();
    let mut lists: BTreeMap<u32, CommitmentList<G>> = BTreeMap::new();
    if mode == Preprocessing::Precomputed {
        for &i in &signers {
            let (s, l) =
                preprocess_batch(&ex.shares[i as usize - 1], 1, iterations as usize, &mut rng)?;
            stores.insert(i, s);
            lists.insert(i, l);
        }
    }

    let (mut sign, mut verify, mut total) = (Vec::new(), Vec::new(), Vec::new());
    for j in 1..=iterations {
        let mut message = vec![0u8; 64];
        rng.fill_bytes(&mut message);

        let start = Instant::now();
        if mode == Preprocessing::Inline {
            for &i in &signers {
                let (s, l) = preprocess_batch(&ex.shares[i as usize - 1], j, 1, &mut rng)?;
                match stores.get_mut(&i) {
                    Some(st) => {
                        st.extend(s)?;
                        lists.get_mut(&i).expect("paired").extend(l)?;
                    }
                    None => {
                        stores.insert(i, s);
                        lists.insert(i, l);
                    }
                }
            }
        }
        let session = SigningSession::new(&message, j, &signers, &lists, t, ex.chain.last())?;
        let shares = signers
            .iter()
            .map(|&i| {
                let store = stores.get_mut(&i).expect("preprocessed");
                sign_session_share(&session, &ex.shares[i as usize - 1], store)
            })
            .collect::<Result<Vec<_>>>()?;
        let sig = aggregate(&session, &shares, &pks)?;
        let s = ms(start);

        let start = Instant::now();
        let ok = mverify(&message, &ids, &ex.chain, &sig)?;
        let v = ms(start);
        assert!(ok, "benchmark signature must verify");
        sign.push(s);
        verify.push(v);
        total.push(s + v);
    }

    let scheme = match (t, n, mode) {
        (1, 1, _) => "Centralized-BORG".to_string(),
        (_, _, Preprocessing::Precomputed) => format!("({t},{n})-BORG*"),
        (_, _, Preprocessing::Inline) => format!("({t},{n})-BORG"),
    };
    Ok(BenchRow {
        scheme,
        t,
        n,
        preprocessing: mode,
        iterations,
        sign_ms: median(sign),
        verify_ms: median(verify),
        round_trip_ms: median(total),
    })
}

/// Centralized, `(t,n)` precomputed and `(t,n)` inline rows.
pub fn bench_rows(t: usize, n: usize, iterations: u64, seed: u64) -> Result<Vec<BenchRow>> {
    Ok(vec![
        bench_row(1, 1, Preprocessing::Precomputed, iterations, seed)?,
        bench_row(t, n, Preprocessing::Precomputed, iterations, seed)?,
        bench_row(t, n, Preprocessing::Inline, iterations, seed)?,
    ])
}
