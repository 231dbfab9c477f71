//! System setup, hierarchical identity-based key extraction with Shamir
//! splitting, and Lagrange interpolation.
//!
//! A level's secret is `sk_k = sk_{k-1} * h_k + r_k` where `r_k = H1(alpha_k)`,
//! `Q_k = g^{r_k}` and `h_k = H1(ID_k || Q_0..Q_k)`. The child level receives
//! Shamir shares `f(1..=n)` of `sk_k`; the full secret only exists inside
//! [`extract`] and [`reconstruct_secret`].

use std::collections::BTreeSet;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    hash_to_scalar_h1, product, sample_scalar, scalar_product, Group, GroupParams, HashInput,
    ScalarField, H1_TAG, H2_TAG,
};
use crate::error::{Error, Result};

/// Ordered identities `ID_1 .. ID_k`; the level is the length.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IdentityVector {
    ids: Vec<Vec<u8>>,
}

impl IdentityVector {
    pub fn new<I, B>(ids: I) -> Self
    where
        I: IntoIterator<Item = B>,
        B: AsRef<[u8]>,
    {
        Self {
            ids: ids.into_iter().map(|b| b.as_ref().to_vec()).collect(),
        }
    }

    /// The empty vector of the root (level 0).
    pub fn root() -> Self {
        Self::default()
    }

    pub fn level(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[Vec<u8>] {
        &self.ids
    }

    /// `ID_l`, 1-based.
    pub fn id(&self, level: usize) -> Option<&[u8]> {
        level
            .checked_sub(1)
            .and_then(|i| self.ids.get(i))
            .map(Vec::as_slice)
    }

    pub fn prefix(&self, level: usize) -> Self {
        Self {
            ids: self.ids[..level.min(self.ids.len())].to_vec(),
        }
    }

    pub fn child(&self, id: &[u8]) -> Self {
        let mut ids = self.ids.clone();
        ids.push(id.to_vec());
        Self { ids }
    }
}

/// `(PK_0, Q_1, .., Q_k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupKeyChain<G: Group> {
    keys: Vec<G::Element>,
}

impl<G: Group> GroupKeyChain<G> {
    pub fn root(master_pk: G::Element) -> Self {
        Self {
            keys: vec![master_pk],
        }
    }

    /// Builds a chain from its elements; element 0 is the master key.
    pub fn from_elements(keys: Vec<G::Element>) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::MalformedChain("empty key chain".into()));
        }
        Ok(Self { keys })
    }

    pub fn elements(&self) -> &[G::Element] {
        &self.keys
    }

    pub fn level(&self) -> usize {
        self.keys.len() - 1
    }

    pub fn master(&self) -> &G::Element {
        &self.keys[0]
    }

    /// `Q_k`, the group verification key of the deepest level.
    pub fn last(&self) -> &G::Element {
        self.keys.last().expect("chain is never empty")
    }

    /// `(PK_0, Q_1, .., Q_level)`.
    pub fn prefix(&self, level: usize) -> Self {
        Self {
            keys: self.keys[..=level.min(self.level())].to_vec(),
        }
    }

    pub fn extended(&self, q: G::Element) -> Self {
        let mut keys = self.keys.clone();
        keys.push(q);
        Self { keys }
    }
}

/// `h_{ID_l} = H1(ID_l || Q_0 .. Q_l)`; `chain` must be exactly the prefix
/// ending at level `l`.
pub fn identity_hash<G: Group>(id: &[u8], chain: &GroupKeyChain<G>) -> G::Scalar {
    let input = chain
        .elements()
        .iter()
        .fold(HashInput::new().bytes(id), |acc, q| acc.element::<G>(q));
    hash_to_scalar_h1::<G>(&input.finish())
}

/// `h_{ID_1} .. h_{ID_k}` for a full identity vector and matching chain.
pub fn identity_hashes<G: Group>(
    ids: &IdentityVector,
    chain: &GroupKeyChain<G>,
) -> Result<Vec<G::Scalar>> {
    if chain.level() != ids.level() {
        return Err(Error::MalformedChain(format!(
            "chain has level {} but identity vector has level {}",
            chain.level(),
            ids.level()
        )));
    }
    Ok((1..=ids.level())
        .map(|l| identity_hash::<G>(ids.id(l).expect("level in range"), &chain.prefix(l)))
        .collect())
}

/// `Q * Q_k * PK_0^(prod h)`: the public image `g^{sk_k}` of a level's secret,
/// computed from public data only.
pub fn derived_level_public_key<G: Group>(
    ids: &IdentityVector,
    chain: &GroupKeyChain<G>,
) -> Result<G::Element> {
    let hashes = identity_hashes::<G>(ids, chain)?;
    let k = ids.level();
    let keys = chain.elements();
    let mut acc = G::exp(&keys[0], &scalar_product(&hashes));
    for l in 1..=k {
        // Q_l raised to the product of h_{l+1} .. h_k (empty product for l = k).
        let weight = scalar_product(&hashes[l..]);
        acc = G::combine(&acc, &G::exp(&keys[l], &weight));
    }
    Ok(acc)
}

/// Public parameters published by setup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub group: GroupParams,
    pub h1_tag: String,
    pub h2_tag: String,
}

impl SystemParams {
    pub fn for_group<G: Group>() -> Self {
        Self {
            group: G::params(),
            h1_tag: String::from_utf8_lossy(H1_TAG).into_owned(),
            h2_tag: String::from_utf8_lossy(H2_TAG).into_owned(),
        }
    }
}

/// Root key held by the core key generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterKey<G: Group> {
    pub alpha: G::Scalar,
    pub sk: G::Scalar,
    pub pk: G::Element,
}

impl<G: Group> MasterKey<G> {
    pub fn level_key(&self) -> LevelKey<G> {
        LevelKey {
            ids: IdentityVector::root(),
            chain: GroupKeyChain::root(self.pk),
            sk: self.sk,
        }
    }
}

/// A complete (non-shared) level key: enough to extract the next level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelKey<G: Group> {
    pub ids: IdentityVector,
    pub chain: GroupKeyChain<G>,
    pub sk: G::Scalar,
}

/// Randomness chosen by the parent for one child level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSecret<G: Group> {
    /// `alpha_k`, kept by the parent for forgery-proof verification.
    pub alpha: G::Scalar,
    /// `sk_{ID_k}`; only meaningful to tests and audits.
    pub secret: G::Scalar,
}

/// One participant's Shamir share of a level key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyShare<G: Group> {
    pub index: u32,
    pub sk_share: G::Scalar,
    pub pk_share: G::Element,
    pub threshold: usize,
    pub group_size: usize,
    pub ids: IdentityVector,
    pub chain: GroupKeyChain<G>,
    /// Seconds since the Unix epoch; carried, not enforced here.
    pub expiry: u64,
}

impl<G: Group> KeyShare<G> {
    /// `ID_{k,i}`: the level identity bound to this participant's index.
    pub fn member_id(&self) -> Vec<u8> {
        member_id(&self.ids, self.index)
    }

    fn same_context(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.chain == other.chain
            && self.threshold == other.threshold
            && self.group_size == other.group_size
    }

    /// A `t = 1` share is the full level secret.
    pub fn into_level_key(self) -> Result<LevelKey<G>> {
        if self.threshold != 1 {
            return Err(Error::InsufficientShares {
                needed: self.threshold,
                got: 1,
            });
        }
        Ok(LevelKey {
            ids: self.ids,
            chain: self.chain,
            sk: self.sk_share,
        })
    }
}

/// Canonical `ID_{k,i}` bytes.
pub fn member_id(ids: &IdentityVector, index: u32) -> Vec<u8> {
    let base = ids.ids().last().map(Vec::as_slice).unwrap_or_default();
    HashInput::new().bytes(base).u64(index as u64).finish()
}

/// Output of [`extract`].
#[derive(Debug, Clone)]
pub struct Extraction<G: Group> {
    pub shares: Vec<KeyShare<G>>,
    pub share_pks: Vec<G::Element>,
    pub chain: GroupKeyChain<G>,
    pub level_secret: LevelSecret<G>,
}

impl<G: Group> Extraction<G> {
    /// `(index, PK_i)` pairs.
    pub fn indexed_pks(&self) -> Vec<(u32, G::Element)> {
        self.shares.iter().map(|s| (s.index, s.pk_share)).collect()
    }
}

/// One-time system setup: `sk_0 = H1(alpha_0)`, `PK_0 = g^{sk_0}`.
pub fn setup<G: Group, R: RngCore + CryptoRng>(rng: &mut R) -> (MasterKey<G>, SystemParams) {
    let alpha = sample_scalar::<G, _>(rng);
    let sk = hash_to_scalar_h1::<G>(&HashInput::new().scalar::<G>(&alpha).finish());
    let pk = G::exp_generator(&sk);
    (MasterKey { alpha, sk, pk }, SystemParams::for_group::<G>())
}

/// `r_k = H1(alpha_k)`.
pub fn level_randomizer<G: Group>(alpha: &G::Scalar) -> G::Scalar {
    hash_to_scalar_h1::<G>(&HashInput::new().scalar::<G>(alpha).finish())
}

fn check_threshold(t: usize, n: usize) -> Result<()> {
    if t < 1 || t > n || n > u32::MAX as usize {
        return Err(Error::InvalidThreshold { t, n });
    }
    Ok(())
}

fn eval_polynomial<S: ScalarField>(coeffs: &[S], x: S) -> S {
    coeffs.iter().rev().fold(S::zero(), |acc, c| acc * x + *c)
}

/// Derives the key material for child identity `child_id` under `parent` and
/// splits it `(t, n)` among the child's members.
pub fn extract<G: Group, R: RngCore + CryptoRng>(
    child_id: &[u8],
    parent: &LevelKey<G>,
    t: usize,
    n: usize,
    expiry: u64,
    rng: &mut R,
) -> Result<Extraction<G>> {
    check_threshold(t, n)?;
    if parent.chain.level() != parent.ids.level() {
        return Err(Error::MalformedChain(
            "parent chain and identity vector disagree on level".into(),
        ));
    }

    let alpha = sample_scalar::<G, _>(rng);
    let r = level_randomizer::<G>(&alpha);
    let q = G::exp_generator(&r);
    let chain = parent.chain.extended(q);
    let h = identity_hash::<G>(child_id, &chain);
    let secret = parent.sk * h + r;

    let mut coeffs = Vec::with_capacity(t);
    coeffs.push(secret);
    for _ in 1..t {
        coeffs.push(sample_scalar::<G, _>(rng));
    }

    let ids = parent.ids.child(child_id);
    let shares: Vec<KeyShare<G>> = (1..=n as u32)
        .map(|i| {
            let sk_share = eval_polynomial(&coeffs, G::Scalar::from_u64(i as u64));
            KeyShare {
                index: i,
                sk_share,
                pk_share: G::exp_generator(&sk_share),
                threshold: t,
                group_size: n,
                ids: ids.clone(),
                chain: chain.clone(),
                expiry,
            }
        })
        .collect();
    let share_pks = shares.iter().map(|s| s.pk_share).collect();

    Ok(Extraction {
        shares,
        share_pks,
        chain,
        level_secret: LevelSecret { alpha, secret },
    })
}

/// Lagrange coefficients at `x = 0` for the given evaluation points.
pub fn lagrange_coefficients<S: ScalarField>(indices: &[u32]) -> Result<Vec<S>> {
    if indices.is_empty() {
        return Err(Error::InsufficientShares { needed: 1, got: 0 });
    }
    let mut seen = BTreeSet::new();
    for &i in indices {
        if i == 0 {
            return Err(Error::ZeroIndex);
        }
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(indices
        .iter()
        .map(|&i| {
            let xi = S::from_u64(i as u64);
            let (num, den) =
                indices
                    .iter()
                    .filter(|&&j| j != i)
                    .fold((S::one(), S::one()), |(num, den), &j| {
                        let xj = S::from_u64(j as u64);
                        (num * xj, den * (xj - xi))
                    });
            num * den
                .invert()
                .expect("distinct indices give a nonzero denominator")
        })
        .collect())
}

/// Lagrange coefficient of `index` within `indices`.
pub fn lagrange_coefficient<S: ScalarField>(index: u32, indices: &[u32]) -> Result<S> {
    let pos = indices
        .iter()
        .position(|&i| i == index)
        .ok_or(Error::NotInSignerSet(index))?;
    Ok(lagrange_coefficients::<S>(indices)?[pos])
}

/// Recombines `sk_k` from at least `t` shares of one extraction.
pub fn reconstruct_secret<G: Group>(shares: &[KeyShare<G>]) -> Result<G::Scalar> {
    let first = shares
        .first()
        .ok_or(Error::InsufficientShares { needed: 1, got: 0 })?;
    if shares.iter().any(|s| !s.same_context(first)) {
        return Err(Error::MixedContext);
    }
    if shares.len() < first.threshold {
        return Err(Error::InsufficientShares {
            needed: first.threshold,
            got: shares.len(),
        });
    }
    let indices: Vec<u32> = shares.iter().map(|s| s.index).collect();
    let lambdas = lagrange_coefficients::<G::Scalar>(&indices)?;
    Ok(shares
        .iter()
        .zip(&lambdas)
        .fold(G::Scalar::zero(), |acc, (s, l)| acc + *l * s.sk_share))
}

/// `prod PK_i^{lambda_i}` over the given `(index, PK_i)` pairs.
pub fn interpolate_public_key<G: Group>(share_pks: &[(u32, G::Element)]) -> Result<G::Element> {
    let indices: Vec<u32> = share_pks.iter().map(|(i, _)| *i).collect();
    let lambdas = lagrange_coefficients::<G::Scalar>(&indices)?;
    let terms: Vec<G::Element> = share_pks
        .iter()
        .zip(&lambdas)
        .map(|((_, pk), l)| G::exp(pk, l))
        .collect();
    Ok(product::<G>(&terms))
}

pub mod keyfile;
