//! Proofs of forgery. Signers reveal the raw nonces of a slot; anyone holding
//! them recomputes the group commitment `R` through the signing code path
//! and compares it with the suspect signature's `R'`.

use std::collections::BTreeMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::algebra::{scalar_from_hex, scalar_to_hex, Group};
use crate::error::{Error, Result};
use crate::hierarchy::{
    identity_hash, interpolate_public_key, level_randomizer, member_id, GroupKeyChain,
    IdentityVector,
};
use crate::thresh_sign::{
    commit_nonces, group_commitment, normalize_signer_set, RawNonces, ThresholdSignature,
};

pub const PROOF_FILE_VERSION: u32 = 1;

/// One signed broadcast as remembered by the signers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryRecord<G: Group> {
    pub message: Vec<u8>,
    pub signature: ThresholdSignature<G>,
    pub timestamp_ms: u64,
}

/// Append-only map from slot `j` to what was signed there.
#[derive(Debug, Default)]
pub struct SignatureHistory<G: Group> {
    records: RwLock<BTreeMap<u64, HistoryRecord<G>>>,
}

impl<G: Group> SignatureHistory<G> {
    pub fn new() -> Self {
        Self {
            records: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn append(&self, record: HistoryRecord<G>) -> Result<()> {
        let mut map = self.records.write().expect("history lock poisoned");
        let j = record.signature.j;
        if map.contains_key(&j) {
            return Err(Error::DuplicateHistoryIndex(j));
        }
        map.insert(j, record);
        Ok(())
    }

    pub fn get(&self, j: u64) -> Option<HistoryRecord<G>> {
        self.records
            .read()
            .expect("history lock poisoned")
            .get(&j)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("history lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> Vec<u64> {
        self.records
            .read()
            .expect("history lock poisoned")
            .keys()
            .copied()
            .collect()
    }
}

/// `pi = (j, e_hat[], d_hat[])` in signer-set order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeryProof<G: Group> {
    pub j: u64,
    pub signer_set: Vec<u32>,
    pub e_hat: Vec<G::Scalar>,
    pub d_hat: Vec<G::Scalar>,
}

impl<G: Group> ForgeryProof<G> {
    fn reveals(&self) -> Result<Vec<(u32, RawNonces<G>)>> {
        let set = normalize_signer_set(&self.signer_set)
            .map_err(|e| Error::MalformedProof(e.to_string()))?;
        if set.is_empty()
            || set != self.signer_set
            || self.e_hat.len() != set.len()
            || self.d_hat.len() != set.len()
        {
            return Err(Error::MalformedProof(
                "nonce count must be twice the signer-set size".into(),
            ));
        }
        Ok(set
            .into_iter()
            .zip(self.e_hat.iter().zip(&self.d_hat))
            .map(|(i, (e, d))| {
                (
                    i,
                    RawNonces {
                        e_hat: *e,
                        d_hat: *d,
                    },
                )
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PofOutcome<G: Group> {
    NotAForgery,
    Proof(ForgeryProof<G>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    NoProof,
    ChainMismatch,
    KeyCheckFailed,
    CommitmentMatches,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ForgeryConfirmed,
    Rejected(RejectReason),
}

impl Verdict {
    pub fn is_confirmed(&self) -> bool {
        matches!(self, Verdict::ForgeryConfirmed)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::ForgeryConfirmed => f.write_str("forgery-confirmed"),
            Verdict::Rejected(RejectReason::NoProof) => f.write_str("rejected: no proof"),
            Verdict::Rejected(RejectReason::ChainMismatch) => {
                f.write_str("rejected: alpha does not match the key chain")
            }
            Verdict::Rejected(RejectReason::KeyCheckFailed) => {
                f.write_str("rejected: share keys inconsistent with parent key")
            }
            Verdict::Rejected(RejectReason::CommitmentMatches) => {
                f.write_str("rejected: commitment matches the signature")
            }
        }
    }
}

/// `R_j` recomputed from raw nonces of the listed signers.
pub fn recompute_commitment<G: Group>(
    ids: &IdentityVector,
    message: &[u8],
    j: u64,
    reveals: &[(u32, RawNonces<G>)],
) -> G::Element {
    let commitments: Vec<_> = reveals
        .iter()
        .map(|(i, raw)| (*i, commit_nonces::<G>(raw, j, &member_id(ids, *i))))
        .collect();
    group_commitment::<G>(message, j, &commitments).0
}

/// Signer side: is `suspect` the signature recorded at its slot?
/// `reveals` must cover every signer of the recorded slot.
pub fn pof<G: Group>(
    suspect: &ThresholdSignature<G>,
    message: &[u8],
    hist: &SignatureHistory<G>,
    ids: &IdentityVector,
    reveals: &BTreeMap<u32, RawNonces<G>>,
) -> Result<PofOutcome<G>> {
    let j = suspect.j;
    let record = hist.get(j).ok_or(Error::UnknownMessageIndex(j))?;
    if record.message != message {
        return Err(Error::UnknownMessageIndex(j));
    }
    let set = &record.signature.signer_set;
    let ordered = set
        .iter()
        .map(|i| {
            reveals
                .get(i)
                .map(|raw| (*i, *raw))
                .ok_or(Error::IncompleteNonceReveal(*i))
        })
        .collect::<Result<Vec<_>>>()?;
    let r = recompute_commitment(ids, &record.message, j, &ordered);
    if r == suspect.r {
        return Ok(PofOutcome::NotAForgery);
    }
    Ok(PofOutcome::Proof(ForgeryProof {
        j,
        signer_set: set.clone(),
        e_hat: ordered.iter().map(|(_, r)| r.e_hat).collect(),
        d_hat: ordered.iter().map(|(_, r)| r.d_hat).collect(),
    }))
}

/// Parent side. `ids`/`chain` describe the child level; `share_pks` maps
/// index to `PK_i`.
#[allow(clippy::too_many_arguments)]
pub fn pof_verify<G: Group>(
    alpha_k: &G::Scalar,
    parent_sk: &G::Scalar,
    ids: &IdentityVector,
    chain: &GroupKeyChain<G>,
    share_pks: &BTreeMap<u32, G::Element>,
    message: &[u8],
    suspect: &ThresholdSignature<G>,
    outcome: &PofOutcome<G>,
) -> Result<Verdict> {
    let proof = match outcome {
        PofOutcome::NotAForgery => return Ok(Verdict::Rejected(RejectReason::NoProof)),
        PofOutcome::Proof(p) => p,
    };
    let reveals = proof.reveals()?;
    if proof.j != suspect.j {
        return Err(Error::MalformedProof(
            "proof slot differs from signature slot".into(),
        ));
    }

    let q_k = G::exp_generator(&level_randomizer::<G>(alpha_k));
    if chain.level() == 0 || chain.level() != ids.level() || &q_k != chain.last() {
        return Ok(Verdict::Rejected(RejectReason::ChainMismatch));
    }
    let h = identity_hash::<G>(ids.id(ids.level()).expect("level >= 1"), chain);

    let pks = proof
        .signer_set
        .iter()
        .map(|i| {
            share_pks
                .get(i)
                .map(|pk| (*i, *pk))
                .ok_or_else(|| Error::MalformedProof(format!("no public key for signer {i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let expected = G::combine(&G::exp_generator(&(h * *parent_sk)), &q_k);
    if interpolate_public_key::<G>(&pks)? != expected {
        return Ok(Verdict::Rejected(RejectReason::KeyCheckFailed));
    }

    if recompute_commitment(ids, message, proof.j, &reveals) == suspect.r {
        return Ok(Verdict::Rejected(RejectReason::CommitmentMatches));
    }
    Ok(Verdict::ForgeryConfirmed)
}

/// JSON form of a proof.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofFile {
    pub version: u32,
    pub j: u64,
    pub signer_set: Vec<u32>,
    pub e_hat: Vec<String>,
    pub d_hat: Vec<String>,
}

impl ProofFile {
    pub fn from_proof<G: Group>(p: &ForgeryProof<G>) -> Self {
        Self {
            version: PROOF_FILE_VERSION,
            j: p.j,
            signer_set: p.signer_set.clone(),
            e_hat: p.e_hat.iter().map(scalar_to_hex::<G>).collect(),
            d_hat: p.d_hat.iter().map(scalar_to_hex::<G>).collect(),
        }
    }

    pub fn to_proof<G: Group>(&self) -> Result<ForgeryProof<G>> {
        if self.version != PROOF_FILE_VERSION {
            return Err(Error::MalformedProof(format!(
                "unsupported proof version {}",
                self.version
            )));
        }
        let parse = |v: &[String]| -> Result<Vec<G::Scalar>> {
            v.iter().map(|s| scalar_from_hex::<G>(s)).collect()
        };
        let proof = ForgeryProof {
            j: self.j,
            signer_set: self.signer_set.clone(),
            e_hat: parse(&self.e_hat)?,
            d_hat: parse(&self.d_hat)?,
        };
        proof.reveals()?;
        Ok(proof)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{sample_scalar, Ristretto255};
    use crate::hierarchy::{extract, setup, Extraction, LevelKey};
    use crate::thresh_sign::{aggregate, preprocess, sign_share, NonceStore, SigningSession};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = Ristretto255;

    struct World {
        amf: LevelKey<G>,
        ex: Extraction<G>,
        stores: BTreeMap<u32, NonceStore<G>>,
        hist: SignatureHistory<G>,
        pks: BTreeMap<u32, <G as Group>::Element>,
        rng: ChaCha20Rng,
    }

    fn world(seed: u64) -> World {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mk, _) = setup::<G, _>(&mut rng);
        let amf = extract(b"AMF-0001", &mk.level_key(), 1, 1, 0, &mut rng)
            .unwrap()
            .shares[0]
            .clone()
            .into_level_key()
            .unwrap();
        let ex = extract(b"BSG-0001", &amf, 2, 3, 0, &mut rng).unwrap();
        let mut stores = BTreeMap::new();
        let mut lists = BTreeMap::new();
        for s in &ex.shares {
            let (st, l) = preprocess(s, 2, &mut rng).unwrap();
            stores.insert(s.index, st);
            lists.insert(s.index, l);
        }
        let hist = SignatureHistory::new();
        let set = [1u32, 2];
        let shares: Vec<_> = set
            .iter()
            .map(|&i| {
                sign_share(
                    b"m1",
                    1,
                    &lists,
                    &set,
                    &ex.shares[i as usize - 1],
                    stores.get_mut(&i).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let pks: BTreeMap<_, _> = ex.indexed_pks().into_iter().collect();
        let session = SigningSession::new(b"m1", 1, &set, &lists, 2, ex.chain.last()).unwrap();
        let sig = aggregate(&session, &shares, &pks).unwrap();
        hist.append(HistoryRecord {
            message: b"m1".to_vec(),
            signature: sig,
            timestamp_ms: 0,
        })
        .unwrap();
        World {
            amf,
            ex,
            stores,
            hist,
            pks,
            rng,
        }
    }

    fn reveals(w: &World, j: u64) -> BTreeMap<u32, RawNonces<G>> {
        w.stores
            .iter()
            .map(|(i, s)| (*i, s.reveal(j).unwrap()))
            .collect()
    }

    fn verify(w: &World, sig: &ThresholdSignature<G>, out: &PofOutcome<G>) -> Verdict {
        pof_verify(
            &w.ex.level_secret.alpha,
            &w.amf.sk,
            &w.ex.shares[0].ids,
            &w.ex.chain,
            &w.pks,
            b"m1",
            sig,
            out,
        )
        .unwrap()
    }

    #[test]
    fn honest_signature_is_not_a_forgery() {
        let w = world(1);
        let sig = w.hist.get(1).unwrap().signature;
        let ids = &w.ex.shares[0].ids;
        let out = pof(&sig, b"m1", &w.hist, ids, &reveals(&w, 1)).unwrap();
        assert_eq!(out, PofOutcome::NotAForgery);
        assert_eq!(
            verify(&w, &sig, &out),
            Verdict::Rejected(RejectReason::NoProof)
        );

        // A proof fabricated from the true nonces still matches R.
        let r = reveals(&w, 1);
        let fabricated = PofOutcome::Proof(ForgeryProof {
            j: 1,
            signer_set: vec![1, 2],
            e_hat: vec![r[&1].e_hat, r[&2].e_hat],
            d_hat: vec![r[&1].d_hat, r[&2].d_hat],
        });
        assert_eq!(
            verify(&w, &sig, &fabricated),
            Verdict::Rejected(RejectReason::CommitmentMatches)
        );
    }

    #[test]
    fn substituted_r_is_confirmed() {
        let mut w = world(2);
        let mut forged = w.hist.get(1).unwrap().signature;
        forged.r = G::exp_generator(&sample_scalar::<G, _>(&mut w.rng));
        let ids = w.ex.shares[0].ids.clone();
        let out = pof(&forged, b"m1", &w.hist, &ids, &reveals(&w, 1)).unwrap();
        assert!(matches!(out, PofOutcome::Proof(_)));
        assert_eq!(verify(&w, &forged, &out), Verdict::ForgeryConfirmed);

        let mut bad_pks = w.pks.clone();
        let one = bad_pks[&1];
        bad_pks.insert(1, G::combine(&one, &G::generator()));
        let v = pof_verify(
            &w.ex.level_secret.alpha,
            &w.amf.sk,
            &ids,
            &w.ex.chain,
            &bad_pks,
            b"m1",
            &forged,
            &out,
        )
        .unwrap();
        assert_eq!(v, Verdict::Rejected(RejectReason::KeyCheckFailed));

        let wrong_alpha = sample_scalar::<G, _>(&mut w.rng);
        let v = pof_verify(
            &wrong_alpha,
            &w.amf.sk,
            &ids,
            &w.ex.chain,
            &w.pks,
            b"m1",
            &forged,
            &out,
        )
        .unwrap();
        assert_eq!(v, Verdict::Rejected(RejectReason::ChainMismatch));
    }

    #[test]
    fn pof_errors() {
        let w = world(3);
        let mut sig = w.hist.get(1).unwrap().signature;
        let ids = &w.ex.shares[0].ids;
        assert!(matches!(
            pof(&sig, b"other", &w.hist, ids, &reveals(&w, 1)),
            Err(Error::UnknownMessageIndex(1))
        ));
        let mut partial = reveals(&w, 1);
        partial.remove(&2);
        assert!(matches!(
            pof(&sig, b"m1", &w.hist, ids, &partial),
            Err(Error::IncompleteNonceReveal(2))
        ));
        sig.j = 7;
        assert!(matches!(
            pof(&sig, b"m1", &w.hist, ids, &reveals(&w, 1)),
            Err(Error::UnknownMessageIndex(7))
        ));
        let dup = w.hist.get(1).unwrap();
        assert!(matches!(
            w.hist.append(dup),
            Err(Error::DuplicateHistoryIndex(1))
        ));
    }

    #[test]
    fn malformed_proofs() {
        let w = world(4);
        let sig = w.hist.get(1).unwrap().signature;
        let r = reveals(&w, 1);
        let short = PofOutcome::Proof(ForgeryProof {
            j: 1,
            signer_set: vec![1, 2],
            e_hat: vec![r[&1].e_hat],
            d_hat: vec![r[&1].d_hat, r[&2].d_hat],
        });
        let err = pof_verify(
            &w.ex.level_secret.alpha,
            &w.amf.sk,
            &w.ex.shares[0].ids,
            &w.ex.chain,
            &w.pks,
            b"m1",
            &sig,
            &short,
        );
        assert!(matches!(err, Err(Error::MalformedProof(_))));
    }

    #[test]
    fn proof_file_round_trip() {
        let p = ForgeryProof::<G> {
            j: 3,
            signer_set: vec![1, 3],
            e_hat: vec![
                <G as Group>::Scalar::from(5u64),
                <G as Group>::Scalar::from(6u64),
            ],
            d_hat: vec![
                <G as Group>::Scalar::from(7u64),
                <G as Group>::Scalar::from(8u64),
            ],
        };
        let file = ProofFile::from_proof(&p);
        let json = serde_json::to_string(&file).unwrap();
        let back: ProofFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_proof::<G>().unwrap(), p);
        let mut bad = back;
        bad.d_hat.pop();
        assert!(bad.to_proof::<G>().is_err());
    }
}
