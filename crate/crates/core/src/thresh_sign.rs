//! Two-round threshold Schnorr signing over a level's shares, and
//! hierarchical verification.
//!
//! Round one ([`preprocess`]) publishes nonce commitments `(E, D)` per slot
//! `j`. Round two ([`sign_share`]) produces `z_i = d + e*rho_i + lambda_i*sk_i*h`
//! which [`aggregate`] sums after checking each share.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::RwLock;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    element_from_hex, element_to_hex, hash_to_scalar_h1, hash_to_scalar_h2, sample_scalar, Group,
    HashInput, ScalarField,
};
use crate::error::{Error, Result};
use crate::hierarchy::keyfile::{chain_from_hex, chain_to_hex, ids_from_hex, ids_to_hex};
use crate::hierarchy::{
    derived_level_public_key, lagrange_coefficient, GroupKeyChain, IdentityVector, KeyShare,
};

/// Raw nonces for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawNonces<G: Group> {
    pub e_hat: G::Scalar,
    pub d_hat: G::Scalar,
}

#[derive(Debug, Clone)]
struct NonceEntry<G: Group> {
    raw: RawNonces<G>,
    consumed: bool,
}

/// A signer's private nonce table.
#[derive(Debug, Clone)]
pub struct NonceStore<G: Group> {
    owner: u32,
    member: Vec<u8>,
    entries: BTreeMap<u64, NonceEntry<G>>,
}

impl<G: Group> NonceStore<G> {
    pub fn owner(&self) -> u32 {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_consumed(&self, j: u64) -> Option<bool> {
        self.entries.get(&j).map(|e| e.consumed)
    }

    /// Slots that have not been used for signing.
    pub fn unused_slots(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries
            .iter()
            .filter(|(_, e)| !e.consumed)
            .map(|(j, _)| *j)
    }

    /// Raw nonces for slot `j`, revealed only for forgery proofs.
    pub fn reveal(&self, j: u64) -> Option<RawNonces<G>> {
        self.entries.get(&j).map(|e| e.raw)
    }

    /// `(e, d)` for slot `j`.
    pub fn derived(&self, j: u64) -> Option<(G::Scalar, G::Scalar)> {
        self.reveal(j)
            .map(|raw| derive_nonces::<G>(&raw, j, &self.member))
    }

    /// Merges a later batch produced for the same member.
    pub fn extend(&mut self, other: NonceStore<G>) -> Result<()> {
        if other.owner != self.owner || other.member != self.member {
            return Err(Error::MixedContext);
        }
        for (j, entry) in other.entries {
            if self.entries.contains_key(&j) {
                return Err(Error::NonceReuse {
                    index: self.owner,
                    slot: j,
                });
            }
            self.entries.insert(j, entry);
        }
        Ok(())
    }
}

/// Public nonce commitment for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Commitment<G: Group> {
    pub e: G::Element,
    pub d: G::Element,
}

/// A signer's published commitments by slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitmentList<G: Group> {
    pub owner: u32,
    pub entries: BTreeMap<u64, Commitment<G>>,
}

impl<G: Group> CommitmentList<G> {
    pub fn new(owner: u32) -> Self {
        Self {
            owner,
            entries: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, j: u64) -> Option<&Commitment<G>> {
        self.entries.get(&j)
    }

    pub fn to_records(&self, context: &str) -> Vec<CommitmentRecord> {
        self.entries
            .iter()
            .map(|(j, c)| CommitmentRecord {
                context: context.to_string(),
                index: self.owner,
                j: *j,
                e: element_to_hex::<G>(&c.e),
                d: element_to_hex::<G>(&c.d),
            })
            .collect()
    }

    pub fn extend(&mut self, other: CommitmentList<G>) -> Result<()> {
        if other.owner != self.owner {
            return Err(Error::MixedContext);
        }
        self.entries.extend(other.entries);
        Ok(())
    }
}

/// Wire form of one commitment, one line of the bulletin file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentRecord {
    pub context: String,
    pub index: u32,
    pub j: u64,
    pub e: String,
    pub d: String,
}

/// Decodes records of a single owner; fails on any non-member element.
pub fn decode_commitments<G: Group>(
    owner: u32,
    records: &[CommitmentRecord],
) -> Result<CommitmentList<G>> {
    let mut list = CommitmentList::new(owner);
    for r in records {
        if r.index != owner {
            return Err(Error::MixedContext);
        }
        let c = Commitment {
            e: element_from_hex::<G>(&r.e)?,
            d: element_from_hex::<G>(&r.d)?,
        };
        list.entries.insert(r.j, c);
    }
    Ok(list)
}

/// Group-membership check over published commitments. Empty is accepted.
pub fn validate_commitments<G: Group>(records: &[CommitmentRecord]) -> bool {
    records
        .iter()
        .all(|r| element_from_hex::<G>(&r.e).is_ok() && element_from_hex::<G>(&r.d).is_ok())
}

/// `e = H1(e_hat || j || ID_{k,i})`, `d = H1(d_hat || j || ID_{k,i})`.
pub fn derive_nonces<G: Group>(
    raw: &RawNonces<G>,
    j: u64,
    member: &[u8],
) -> (G::Scalar, G::Scalar) {
    let bind = |x: &G::Scalar| {
        hash_to_scalar_h1::<G>(
            &HashInput::new()
                .scalar::<G>(x)
                .u64(j)
                .bytes(member)
                .finish(),
        )
    };
    (bind(&raw.e_hat), bind(&raw.d_hat))
}

pub fn commit_nonces<G: Group>(raw: &RawNonces<G>, j: u64, member: &[u8]) -> Commitment<G> {
    let (e, d) = derive_nonces::<G>(raw, j, member);
    Commitment {
        e: G::exp_generator(&e),
        d: G::exp_generator(&d),
    }
}

/// Generates slots `first ..first + count`.
pub fn preprocess_batch<G: Group, R: RngCore + CryptoRng>(
    share: &KeyShare<G>,
    first: u64,
    count: usize,
    rng: &mut R,
) -> Result<(NonceStore<G>, CommitmentList<G>)> {
    if count == 0 {
        return Err(Error::InvalidConfig(
            "preprocess batch size must be at least 1".into(),
        ));
    }
    let member = share.member_id();
    let mut store = NonceStore {
        owner: share.index,
        member: member.clone(),
        entries: BTreeMap::new(),
    };
    let mut list = CommitmentList::new(share.index);
    for j in first..first + count as u64 {
        let raw = RawNonces {
            e_hat: sample_scalar::<G, _>(rng),
            d_hat: sample_scalar::<G, _>(rng),
        };
        list.entries.insert(j, commit_nonces(&raw, j, &member));
        store.entries.insert(
            j,
            NonceEntry {
                raw,
                consumed: false,
            },
        );
    }
    Ok((store, list))
}

/// Slots `1..=count`.
pub fn preprocess<G: Group, R: RngCore + CryptoRng>(
    share: &KeyShare<G>,
    count: usize,
    rng: &mut R,
) -> Result<(NonceStore<G>, CommitmentList<G>)> {
    preprocess_batch(share, 1, count, rng)
}

/// Sorted, duplicate-free signer set.
pub fn normalize_signer_set(signers: &[u32]) -> Result<Vec<u32>> {
    let mut seen = BTreeSet::new();
    for &i in signers {
        if i == 0 {
            return Err(Error::ZeroIndex);
        }
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(seen.into_iter().collect())
}

/// `rho_i = H1(i || m || j || (index, E, D) for the signer set)`.
pub fn binding_factor<G: Group>(
    index: u32,
    message: &[u8],
    j: u64,
    commitments: &[(u32, Commitment<G>)],
) -> G::Scalar {
    let input = commitments.iter().fold(
        HashInput::new().u64(index as u64).bytes(message).u64(j),
        |acc, (i, c)| acc.u64(*i as u64).element::<G>(&c.e).element::<G>(&c.d),
    );
    hash_to_scalar_h1::<G>(&input.finish())
}

/// Per-signer `R_i = D_i * E_i^{rho_i}` and their product `R`. Signing,
/// aggregation and forgery proofs all go through here.
pub fn group_commitment<G: Group>(
    message: &[u8],
    j: u64,
    commitments: &[(u32, Commitment<G>)],
) -> (G::Element, Vec<(u32, G::Element)>) {
    let parts: Vec<(u32, G::Element)> = commitments
        .iter()
        .map(|(i, c)| {
            let rho = binding_factor::<G>(*i, message, j, commitments);
            (*i, G::combine(&c.d, &G::exp(&c.e, &rho)))
        })
        .collect();
    let r = parts
        .iter()
        .fold(G::identity(), |acc, (_, ri)| G::combine(&acc, ri));
    (r, parts)
}

/// `h_j = H2(R || Q_k || m)`.
pub fn challenge<G: Group>(r: &G::Element, q_k: &G::Element, message: &[u8]) -> G::Scalar {
    hash_to_scalar_h2::<G>(
        &HashInput::new()
            .element::<G>(r)
            .element::<G>(q_k)
            .bytes(message)
            .finish(),
    )
}

/// Everything signers and the aggregator derive identically for one slot.
#[derive(Debug, Clone)]
pub struct SigningSession<G: Group> {
    pub message: Vec<u8>,
    pub j: u64,
    pub signer_set: Vec<u32>,
    pub commitments: Vec<(u32, Commitment<G>)>,
    pub r: G::Element,
    pub r_parts: Vec<(u32, G::Element)>,
    pub h: G::Scalar,
}

impl<G: Group> SigningSession<G> {
    pub fn new(
        message: &[u8],
        j: u64,
        signer_set: &[u32],
        lists: &BTreeMap<u32, CommitmentList<G>>,
        threshold: usize,
        q_k: &G::Element,
    ) -> Result<Self> {
        let signer_set = normalize_signer_set(signer_set)?;
        if signer_set.len() < threshold {
            return Err(Error::BelowThreshold {
                t: threshold,
                signers: signer_set.len(),
            });
        }
        let commitments = signer_set
            .iter()
            .map(|&i| {
                lists
                    .get(&i)
                    .and_then(|l| l.get(j))
                    .map(|c| (i, *c))
                    .ok_or(Error::MissingCommitment { index: i, slot: j })
            })
            .collect::<Result<Vec<_>>>()?;
        let (r, r_parts) = group_commitment::<G>(message, j, &commitments);
        let h = challenge::<G>(&r, q_k, message);
        Ok(Self {
            message: message.to_vec(),
            j,
            signer_set,
            commitments,
            r,
            r_parts,
            h,
        })
    }

    pub fn lambda(&self, index: u32) -> Result<G::Scalar> {
        lagrange_coefficient::<G::Scalar>(index, &self.signer_set)
    }

    pub fn commitment_share(&self, index: u32) -> Option<G::Element> {
        self.r_parts
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, r)| *r)
    }
}

/// One signer's contribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureShare<G: Group> {
    pub index: u32,
    pub j: u64,
    pub z: G::Scalar,
    pub r: G::Element,
}

/// `sigma = (R, z)` with the slot and signer set that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdSignature<G: Group> {
    pub r: G::Element,
    pub z: G::Scalar,
    pub j: u64,
    pub signer_set: Vec<u32>,
}

impl<G: Group> ThresholdSignature<G> {
    pub fn wire_len() -> usize {
        G::ELEMENT_LEN + G::SCALAR_LEN
    }

    /// `R || z`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = G::encode_element(&self.r);
        out.extend(self.z.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], j: u64, signer_set: Vec<u32>) -> Result<Self> {
        if bytes.len() != Self::wire_len() {
            return Err(Error::Decode(format!(
                "signature must be {} bytes, got {}",
                Self::wire_len(),
                bytes.len()
            )));
        }
        let (r, z) = bytes.split_at(G::ELEMENT_LEN);
        Ok(Self {
            r: G::decode_element(r).ok_or_else(|| Error::Decode("invalid R".into()))?,
            z: G::Scalar::from_be_bytes(z).ok_or_else(|| Error::Decode("invalid z".into()))?,
            j,
            signer_set,
        })
    }
}

pub const SIGNATURE_FILE_VERSION: u32 = 1;

/// Signature plus the identity vector and key chain a verifier needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureFile {
    pub version: u32,
    pub group: String,
    pub ids: Vec<String>,
    pub chain: Vec<String>,
    pub j: u64,
    pub signer_set: Vec<u32>,
    /// Hex of `R || z`.
    pub signature: String,
}

impl SignatureFile {
    pub fn new<G: Group>(
        ids: &IdentityVector,
        chain: &GroupKeyChain<G>,
        sig: &ThresholdSignature<G>,
    ) -> Self {
        Self {
            version: SIGNATURE_FILE_VERSION,
            group: G::NAME.into(),
            ids: ids_to_hex(ids),
            chain: chain_to_hex(chain),
            j: sig.j,
            signer_set: sig.signer_set.clone(),
            signature: hex::encode(sig.to_bytes()),
        }
    }

    pub fn decode<G: Group>(
        &self,
    ) -> Result<(IdentityVector, GroupKeyChain<G>, ThresholdSignature<G>)> {
        if self.version != SIGNATURE_FILE_VERSION || self.group != G::NAME {
            return Err(Error::Decode(format!(
                "unsupported signature file: version {} group {}",
                self.version, self.group
            )));
        }
        let bytes =
            hex::decode(&self.signature).map_err(|e| Error::Decode(format!("signature: {e}")))?;
        Ok((
            ids_from_hex(&self.ids)?,
            chain_from_hex::<G>(&self.chain)?,
            ThresholdSignature::from_bytes(&bytes, self.j, self.signer_set.clone())?,
        ))
    }
}

/// Produces this signer's share for slot `session.j`, consuming the nonce.
pub fn sign_session_share<G: Group>(
    session: &SigningSession<G>,
    share: &KeyShare<G>,
    store: &mut NonceStore<G>,
) -> Result<SignatureShare<G>> {
    let index = share.index;
    if store.owner != index {
        return Err(Error::MixedContext);
    }
    if !session.signer_set.contains(&index) {
        return Err(Error::NotInSignerSet(index));
    }
    if session.signer_set.len() < share.threshold {
        return Err(Error::BelowThreshold {
            t: share.threshold,
            signers: session.signer_set.len(),
        });
    }
    let j = session.j;
    let entry = store
        .entries
        .get(&j)
        .ok_or(Error::MissingCommitment { index, slot: j })?;
    if entry.consumed {
        return Err(Error::NonceReuse { index, slot: j });
    }
    let (e, d) = derive_nonces::<G>(&entry.raw, j, &store.member);
    let rho = binding_factor::<G>(index, &session.message, j, &session.commitments);
    let lambda = session.lambda(index)?;
    let z = d + e * rho + lambda * share.sk_share * session.h;
    let r = session
        .commitment_share(index)
        .ok_or(Error::NotInSignerSet(index))?;

    store.entries.get_mut(&j).expect("checked above").consumed = true;
    Ok(SignatureShare { index, j, z, r })
}

/// Builds the session from published lists and signs in one call.
pub fn sign_share<G: Group>(
    message: &[u8],
    j: u64,
    lists: &BTreeMap<u32, CommitmentList<G>>,
    signer_set: &[u32],
    share: &KeyShare<G>,
    store: &mut NonceStore<G>,
) -> Result<SignatureShare<G>> {
    let set = normalize_signer_set(signer_set)?;
    if !set.contains(&share.index) {
        return Err(Error::NotInSignerSet(share.index));
    }
    if store.is_consumed(j) == Some(true) {
        return Err(Error::NonceReuse {
            index: share.index,
            slot: j,
        });
    }
    let session =
        SigningSession::new(message, j, &set, lists, share.threshold, share.chain.last())?;
    sign_session_share(&session, share, store)
}

/// `g^z == R_i * PK_i^{lambda_i * h}`.
pub fn verify_share<G: Group>(
    s: &SignatureShare<G>,
    pk_share: &G::Element,
    lambda: &G::Scalar,
    h: &G::Scalar,
) -> bool {
    G::exp_generator(&s.z) == G::combine(&s.r, &G::exp(pk_share, &(*lambda * *h)))
}

/// Checks every share against its public key and the session's `R_i`, then
/// sums. `share_pks` maps index to `PK_i`.
pub fn aggregate<G: Group>(
    session: &SigningSession<G>,
    shares: &[SignatureShare<G>],
    share_pks: &BTreeMap<u32, G::Element>,
) -> Result<ThresholdSignature<G>> {
    let mut by_index = BTreeMap::new();
    for s in shares {
        if by_index.insert(s.index, s).is_some() {
            return Err(Error::DuplicateIndex(s.index));
        }
    }
    if by_index.len() != session.signer_set.len()
        || !session.signer_set.iter().all(|i| by_index.contains_key(i))
    {
        return Err(Error::IncompleteSet);
    }
    let mut z = G::Scalar::zero();
    for &i in &session.signer_set {
        let s = by_index[&i];
        let pk = share_pks.get(&i).ok_or(Error::ShareVerificationFailed(i))?;
        let expected_r = session.commitment_share(i);
        if s.j != session.j
            || expected_r != Some(s.r)
            || !verify_share(s, pk, &session.lambda(i)?, &session.h)
        {
            return Err(Error::ShareVerificationFailed(i));
        }
        z = z + s.z;
    }
    Ok(ThresholdSignature {
        r: session.r,
        z,
        j: session.j,
        signer_set: session.signer_set.clone(),
    })
}

/// `g^z == R * (Q * Q_k * PK_0^{prod h})^{h_j}`.
pub fn mverify<G: Group>(
    message: &[u8],
    ids: &IdentityVector,
    chain: &GroupKeyChain<G>,
    sig: &ThresholdSignature<G>,
) -> Result<bool> {
    let y = derived_level_public_key::<G>(ids, chain)?;
    let h = challenge::<G>(&sig.r, chain.last(), message);
    Ok(G::exp_generator(&sig.z) == G::combine(&sig.r, &G::exp(&y, &h)))
}

/// Stable identifier for a signing group: hex of the first 16 bytes of
/// SHA-256 over its identities and chain.
pub fn context_id<G: Group>(ids: &IdentityVector, chain: &GroupKeyChain<G>) -> String {
    use sha2::{Digest, Sha256};
    let input = ids
        .ids()
        .iter()
        .fold(HashInput::new(), |acc, id| acc.bytes(id));
    let input = chain
        .elements()
        .iter()
        .fold(input, |acc, q| acc.element::<G>(q));
    hex::encode(&Sha256::digest(input.finish())[..16])
}

/// Public commitment board keyed by `(context, signer index)`.
#[derive(Debug, Default)]
pub struct Bulletin {
    records: RwLock<BTreeMap<(String, u32), Vec<CommitmentRecord>>>,
}

impl Bulletin {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish<G: Group>(&self, context: &str, list: &CommitmentList<G>) {
        let mut map = self.records.write().expect("bulletin lock poisoned");
        map.entry((context.to_string(), list.owner))
            .or_default()
            .extend(list.to_records(context));
    }

    pub fn fetch<G: Group>(&self, context: &str, index: u32) -> Result<Option<CommitmentList<G>>> {
        let map = self.records.read().expect("bulletin lock poisoned");
        map.get(&(context.to_string(), index))
            .map(|recs| decode_commitments::<G>(index, recs))
            .transpose()
    }

    /// All lists published for `context`, by signer index.
    pub fn fetch_all<G: Group>(&self, context: &str) -> Result<BTreeMap<u32, CommitmentList<G>>> {
        let map = self.records.read().expect("bulletin lock poisoned");
        map.iter()
            .filter(|((ctx, _), _)| ctx == context)
            .map(|((_, i), recs)| Ok((*i, decode_commitments::<G>(*i, recs)?)))
            .collect()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let map = self.records.read().expect("bulletin lock poisoned");
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for rec in map.values().flatten() {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let bulletin = Self::new();
        {
            let mut map = bulletin.records.write().expect("bulletin lock poisoned");
            for line in file.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CommitmentRecord = serde_json::from_str(&line)?;
                map.entry((rec.context.clone(), rec.index))
                    .or_default()
                    .push(rec);
            }
        }
        Ok(bulletin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Ristretto255;
    use crate::hierarchy::{extract, setup, Extraction, LevelKey};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = Ristretto255;

    struct Fixture {
        ex: Extraction<G>,
        stores: BTreeMap<u32, NonceStore<G>>,
        lists: BTreeMap<u32, CommitmentList<G>>,
        pks: BTreeMap<u32, <G as Group>::Element>,
    }

    fn fixture(t: usize, n: usize, slots: usize, seed: u64) -> Fixture {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mk, _) = setup::<G, _>(&mut rng);
        let amf = extract(b"AMF-0001", &mk.level_key(), 1, 1, 0, &mut rng).unwrap();
        let amf_key: LevelKey<G> = amf.shares[0].clone().into_level_key().unwrap();
        let ex = extract(b"BSG-0001", &amf_key, t, n, 0, &mut rng).unwrap();
        let mut stores = BTreeMap::new();
        let mut lists = BTreeMap::new();
        for s in &ex.shares {
            let (st, l) = preprocess(s, slots, &mut rng).unwrap();
            stores.insert(s.index, st);
            lists.insert(s.index, l);
        }
        let pks = ex.indexed_pks().into_iter().collect();
        Fixture {
            ex,
            stores,
            lists,
            pks,
        }
    }

    fn run(f: &mut Fixture, m: &[u8], j: u64, set: &[u32]) -> Result<ThresholdSignature<G>> {
        let shares = set
            .iter()
            .map(|&i| {
                let share = &f.ex.shares[i as usize - 1];
                sign_share(m, j, &f.lists, set, share, f.stores.get_mut(&i).unwrap())
            })
            .collect::<Result<Vec<_>>>()?;
        let session = SigningSession::new(
            m,
            j,
            set,
            &f.lists,
            f.ex.shares[0].threshold,
            f.ex.chain.last(),
        )?;
        aggregate(&session, &shares, &f.pks)
    }

    #[test]
    fn two_of_three_round_trip() {
        let mut f = fixture(2, 3, 4, 1);
        let sig = run(&mut f, b"sib1", 1, &[1, 3]).unwrap();
        let ids = f.ex.shares[0].ids.clone();
        assert!(mverify(b"sib1", &ids, &f.ex.chain, &sig).unwrap());
        assert!(!mverify(b"sib2", &ids, &f.ex.chain, &sig).unwrap());
        let other = IdentityVector::new(["AMF-0001", "BSG-0002"]);
        assert!(!mverify(b"sib1", &other, &f.ex.chain, &sig).unwrap());
        assert_eq!(sig.to_bytes().len(), 64);
        let back = ThresholdSignature::<G>::from_bytes(&sig.to_bytes(), 1, vec![1, 3]).unwrap();
        assert_eq!(back, sig);
    }

    #[test]
    fn nonce_reuse_and_set_errors() {
        let mut f = fixture(2, 3, 2, 2);
        run(&mut f, b"m", 1, &[1, 2]).unwrap();
        assert!(matches!(
            run(&mut f, b"m", 1, &[1, 2]),
            Err(Error::NonceReuse { index: 1, slot: 1 })
        ));
        let share = f.ex.shares[0].clone();
        let store = f.stores.get_mut(&1).unwrap();
        assert!(matches!(
            sign_share(b"m", 2, &f.lists, &[1], &share, store),
            Err(Error::BelowThreshold { t: 2, signers: 1 })
        ));
        assert!(matches!(
            sign_share(b"m", 2, &f.lists, &[2, 3], &share, store),
            Err(Error::NotInSignerSet(1))
        ));
        assert!(matches!(
            sign_share(b"m", 9, &f.lists, &[1, 2], &share, store),
            Err(Error::MissingCommitment { slot: 9, .. })
        ));
        // A failed attempt leaves slot 2 usable.
        assert_eq!(store.is_consumed(2), Some(false));
    }

    #[test]
    fn tampered_and_missing_shares() {
        let mut f = fixture(2, 3, 1, 3);
        let set = [1, 2];
        let mut shares: Vec<_> = set
            .iter()
            .map(|&i| {
                sign_share(
                    b"m",
                    1,
                    &f.lists,
                    &set,
                    &f.ex.shares[i as usize - 1],
                    f.stores.get_mut(&i).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let session = SigningSession::new(b"m", 1, &set, &f.lists, 2, f.ex.chain.last()).unwrap();
        for s in &shares {
            let l = session.lambda(s.index).unwrap();
            assert!(verify_share(s, &f.pks[&s.index], &l, &session.h));
            let mut bumped = *s;
            bumped.z = s.z + <G as Group>::Scalar::one();
            assert!(!verify_share(&bumped, &f.pks[&s.index], &l, &session.h));
        }
        let swapped = SignatureShare {
            r: shares[1].r,
            ..shares[0]
        };
        let l1 = session.lambda(1).unwrap();
        assert!(!verify_share(&swapped, &f.pks[&1], &l1, &session.h));

        assert!(matches!(
            aggregate(&session, &shares[..1], &f.pks),
            Err(Error::IncompleteSet)
        ));
        let bumped = shares[1].z + <G as Group>::Scalar::one();
        shares[1].z = bumped;
        assert!(matches!(
            aggregate(&session, &shares, &f.pks),
            Err(Error::ShareVerificationFailed(2))
        ));
    }

    #[test]
    fn commitments_validate_and_bind_slot() {
        let f = fixture(2, 3, 3, 4);
        let recs = f.lists[&1].to_records("ctx");
        assert!(validate_commitments::<G>(&recs));
        assert!(validate_commitments::<G>(&[]));
        let mut bad = recs.clone();
        bad[1].d = "ff".repeat(32);
        assert!(!validate_commitments::<G>(&bad));
        assert!(decode_commitments::<G>(1, &bad).is_err());

        let raw = RawNonces::<G> {
            e_hat: <G as Group>::Scalar::from_u64(7),
            d_hat: <G as Group>::Scalar::from_u64(7),
        };
        assert_ne!(commit_nonces(&raw, 1, b"id"), commit_nonces(&raw, 2, b"id"));
        assert_ne!(
            commit_nonces(&raw, 1, b"id"),
            commit_nonces(&raw, 1, b"id2")
        );
    }

    #[test]
    fn bulletin_round_trip() {
        let f = fixture(2, 3, 2, 5);
        let ctx = context_id(&f.ex.shares[0].ids, &f.ex.chain);
        let board = Bulletin::new();
        for l in f.lists.values() {
            board.publish(&ctx, l);
        }
        assert_eq!(board.fetch_all::<G>(&ctx).unwrap(), f.lists);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bulletin.jsonl");
        board.write_jsonl(&path).unwrap();
        let back = Bulletin::read_jsonl(&path).unwrap();
        assert_eq!(back.fetch::<G>(&ctx, 2).unwrap().as_ref(), f.lists.get(&2));
        assert!(back.fetch::<G>("other", 2).unwrap().is_none());
    }

    #[test]
    fn zero_batch_rejected() {
        let f = fixture(1, 1, 1, 6);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(preprocess(&f.ex.shares[0], 0, &mut rng).is_err());
    }
}
