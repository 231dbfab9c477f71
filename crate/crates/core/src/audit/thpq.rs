//! Threshold post-quantum signature interface used to seal audit entries.
//!
//! [`InsecureMacThpq`] is a test double. Its public key IS the MAC key, so
//! anyone who can verify can also forge. Never use it outside tests and
//! simulations.

use std::collections::BTreeSet;

use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThpqShare {
    pub index: u32,
    pub secret: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThpqPartial {
    pub index: u32,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThpqKeyMaterial {
    pub public_key: Vec<u8>,
    pub shares: Vec<ThpqShare>,
    pub threshold: usize,
}

pub trait ThresholdPq {
    fn name(&self) -> &'static str;
    fn keygen(&self, threshold: usize, n: usize, rng: &mut dyn RngCore) -> Result<ThpqKeyMaterial>;
    fn sign_share(&self, share: &ThpqShare, message: &[u8]) -> ThpqPartial;
    fn aggregate(&self, threshold: usize, partials: &[ThpqPartial]) -> Result<Vec<u8>>;
    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool;
}

/// INSECURE hash-MAC stand-in for a lattice threshold scheme.
#[derive(Debug, Clone, Copy, Default)]
pub struct InsecureMacThpq;

const KEY_LEN: usize = 32;
const TAG_LEN: usize = 32;

fn partial_tag(key: &[u8], index: u32, message: &[u8]) -> Vec<u8> {
    let mut h = Sha256::new();
    h.update(b"INSECURE-THPQ-PARTIAL");
    h.update(key);
    h.update(index.to_be_bytes());
    h.update((message.len() as u64).to_be_bytes());
    h.update(message);
    h.finalize().to_vec()
}

fn combine(indices: &[u32], tags: &[&[u8]]) -> Vec<u8> {
    let mut h = Sha256::new();
    h.update(b"INSECURE-THPQ-AGG");
    for (i, t) in indices.iter().zip(tags) {
        h.update(i.to_be_bytes());
        h.update(t);
    }
    h.finalize().to_vec()
}

impl ThresholdPq for InsecureMacThpq {
    fn name(&self) -> &'static str {
        "insecure-mac-test-double"
    }

    fn keygen(&self, threshold: usize, n: usize, rng: &mut dyn RngCore) -> Result<ThpqKeyMaterial> {
        if threshold < 1 || threshold > n || n > u32::MAX as usize {
            return Err(Error::InvalidThreshold { t: threshold, n });
        }
        let mut key = vec![0u8; KEY_LEN];
        rng.fill_bytes(&mut key);
        let mut public_key = key.clone();
        public_key.extend((threshold as u32).to_be_bytes());
        let shares = (1..=n as u32)
            .map(|index| ThpqShare {
                index,
                secret: key.clone(),
            })
            .collect();
        Ok(ThpqKeyMaterial {
            public_key,
            shares,
            threshold,
        })
    }

    fn sign_share(&self, share: &ThpqShare, message: &[u8]) -> ThpqPartial {
        ThpqPartial {
            index: share.index,
            bytes: partial_tag(&share.secret, share.index, message),
        }
    }

    /// Signature: `count:u32 || index:u32 * count || tag`.
    fn aggregate(&self, threshold: usize, partials: &[ThpqPartial]) -> Result<Vec<u8>> {
        let mut sorted: Vec<&ThpqPartial> = partials.iter().collect();
        sorted.sort_by_key(|p| p.index);
        let distinct: BTreeSet<u32> = sorted.iter().map(|p| p.index).collect();
        if distinct.len() != sorted.len() {
            return Err(Error::DuplicateIndex(sorted[0].index));
        }
        if sorted.len() < threshold {
            return Err(Error::InsufficientShares {
                needed: threshold,
                got: sorted.len(),
            });
        }
        let indices: Vec<u32> = sorted.iter().map(|p| p.index).collect();
        let tags: Vec<&[u8]> = sorted.iter().map(|p| p.bytes.as_slice()).collect();
        let mut out = (indices.len() as u32).to_be_bytes().to_vec();
        for i in &indices {
            out.extend(i.to_be_bytes());
        }
        out.extend(combine(&indices, &tags));
        Ok(out)
    }

    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        if public_key.len() != KEY_LEN + 4 || signature.len() < 4 + TAG_LEN {
            return false;
        }
        let (key, t) = public_key.split_at(KEY_LEN);
        let threshold = u32::from_be_bytes(t.try_into().expect("4 bytes")) as usize;
        let count = u32::from_be_bytes(signature[..4].try_into().expect("4 bytes")) as usize;
        if count < threshold || signature.len() != 4 + 4 * count + TAG_LEN {
            return false;
        }
        let indices: Vec<u32> = signature[4..4 + 4 * count]
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        let tags: Vec<Vec<u8>> = indices
            .iter()
            .map(|i| partial_tag(key, *i, message))
            .collect();
        let tag_refs: Vec<&[u8]> = tags.iter().map(Vec::as_slice).collect();
        combine(&indices, &tag_refs) == signature[4 + 4 * count..]
    }
}
