//! Prime-order group abstraction, hash-to-scalar oracles and canonical
//! encodings.
//!
//! Group law is written multiplicatively to match the usual Schnorr
//! presentation: [`Group::combine`] is the group operation and
//! [`Group::exp`] raises an element to a scalar power.
//!
//! Two groups ship with the crate:
//!
//! - [`Ristretto255`] (default): 32-byte elements, 32-byte scalars. A threshold
//!   signature `R || z` is 64 bytes.
//! - [`Secp224k1`]: the SEC 2 Koblitz curve over a 224-bit field. Elements are
//!   29-byte compressed points, scalars 29 bytes.

mod ristretto;
mod secp224k1;

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use ristretto::Ristretto255;
pub use secp224k1::Secp224k1;

/// Group used when nothing else is configured.
pub type DefaultGroup = Ristretto255;

/// Domain-separation tag for the first hash oracle.
pub const H1_TAG: &[u8] = b"BORG-H1";
/// Domain-separation tag for the second hash oracle.
pub const H2_TAG: &[u8] = b"BORG-H2";

/// Arithmetic in the scalar field `Z_q`.
pub trait ScalarField:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    /// Multiplicative inverse; `None` for zero.
    fn invert(&self) -> Option<Self>;
    /// Interprets up to 64 big-endian bytes as an integer and reduces it mod q.
    fn reduce_be(bytes: &[u8]) -> Self;
    /// Fixed-length big-endian encoding.
    fn to_be_bytes(&self) -> Vec<u8>;
    /// Inverse of [`ScalarField::to_be_bytes`]; rejects non-canonical input.
    fn from_be_bytes(bytes: &[u8]) -> Option<Self>;
}

/// A cyclic group of prime order q with a fixed generator.
pub trait Group: Copy + Clone + Debug + Default + Eq + Send + Sync + 'static {
    type Scalar: ScalarField;
    type Element: Copy + Eq + Debug + Send + Sync + 'static;

    /// Stable identifier written into key files.
    const NAME: &'static str;
    /// Encoded scalar length in bytes.
    const SCALAR_LEN: usize;
    /// Encoded element length in bytes.
    const ELEMENT_LEN: usize;

    fn generator() -> Self::Element;
    fn identity() -> Self::Element;
    /// The group operation.
    fn combine(a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn invert_element(a: &Self::Element) -> Self::Element;
    /// `base^s`.
    fn exp(base: &Self::Element, s: &Self::Scalar) -> Self::Element;
    /// `g^s`; groups may override with a precomputed-table fast path.
    fn exp_generator(s: &Self::Scalar) -> Self::Element {
        Self::exp(&Self::generator(), s)
    }
    fn encode_element(e: &Self::Element) -> Vec<u8>;
    /// Decodes a canonical encoding. Every `Some` is a member of the group.
    fn decode_element(bytes: &[u8]) -> Option<Self::Element>;
    /// Big-endian group order q.
    fn order_be_bytes() -> Vec<u8>;

    fn params() -> GroupParams {
        GroupParams {
            name: Self::NAME.to_string(),
            generator: hex::encode(Self::encode_element(&Self::generator())),
            order: hex::encode(Self::order_be_bytes()),
            element_len: Self::ELEMENT_LEN,
            scalar_len: Self::SCALAR_LEN,
        }
    }
}

/// Public description of a group, as published by setup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    pub name: String,
    pub generator: String,
    pub order: String,
    pub element_len: usize,
    pub scalar_len: usize,
}

/// Product of an iterator of elements under the group law.
pub fn product<'a, G: Group>(items: impl IntoIterator<Item = &'a G::Element>) -> G::Element {
    items
        .into_iter()
        .fold(G::identity(), |acc, e| G::combine(&acc, e))
}

/// Sum of an iterator of scalars.
pub fn scalar_sum<'a, S: ScalarField>(items: impl IntoIterator<Item = &'a S>) -> S {
    items.into_iter().fold(S::zero(), |acc, s| acc + *s)
}

/// Product of an iterator of scalars.
pub fn scalar_product<'a, S: ScalarField>(items: impl IntoIterator<Item = &'a S>) -> S {
    items.into_iter().fold(S::one(), |acc, s| acc * *s)
}

fn tagged_hash_to_scalar<G: Group>(tag: &[u8], input: &[u8]) -> G::Scalar {
    let digest = Sha256::new()
        .chain_update(tag)
        .chain_update(input)
        .finalize();
    G::Scalar::reduce_be(&digest)
}

/// `H1: {0,1}* -> Z_q`, SHA-256 over `"BORG-H1" || input`, reduced mod q.
pub fn hash_to_scalar_h1<G: Group>(input: &[u8]) -> G::Scalar {
    tagged_hash_to_scalar::<G>(H1_TAG, input)
}

/// `H2: {0,1}* -> Z_q`, SHA-256 over `"BORG-H2" || input`, reduced mod q.
pub fn hash_to_scalar_h2<G: Group>(input: &[u8]) -> G::Scalar {
    tagged_hash_to_scalar::<G>(H2_TAG, input)
}

/// Uniform scalar from 64 random bytes (wide reduction, negligible bias).
pub fn sample_scalar<G: Group, R: RngCore + CryptoRng>(rng: &mut R) -> G::Scalar {
    let mut wide = [0u8; 64];
    rng.fill_bytes(&mut wide);
    G::Scalar::reduce_be(&wide)
}

/// Canonical, unambiguous byte string for hash inputs.
///
/// Every field is prefixed with its length as a big-endian `u32`, so
/// concatenations of variable-length fields cannot collide.
#[derive(Debug, Default, Clone)]
pub struct HashInput {
    buf: Vec<u8>,
}

impl HashInput {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(mut self, data: &[u8]) -> Self {
        self.buf
            .extend_from_slice(&(data.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(data);
        self
    }

    pub fn u64(self, v: u64) -> Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn scalar<G: Group>(self, s: &G::Scalar) -> Self {
        self.bytes(&s.to_be_bytes())
    }

    pub fn element<G: Group>(self, e: &G::Element) -> Self {
        self.bytes(&G::encode_element(e))
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Lowercase fixed-width hex of a scalar.
pub fn scalar_to_hex<G: Group>(s: &G::Scalar) -> String {
    hex::encode(s.to_be_bytes())
}

/// Lowercase fixed-width hex of a group element.
pub fn element_to_hex<G: Group>(e: &G::Element) -> String {
    hex::encode(G::encode_element(e))
}

pub fn scalar_from_hex<G: Group>(text: &str) -> Result<G::Scalar> {
    let bytes = hex::decode(text).map_err(|e| Error::Decode(format!("scalar hex: {e}")))?;
    if bytes.len() != G::SCALAR_LEN {
        return Err(Error::Decode(format!(
            "scalar must be {} bytes, got {}",
            G::SCALAR_LEN,
            bytes.len()
        )));
    }
    G::Scalar::from_be_bytes(&bytes).ok_or_else(|| Error::Decode("scalar is not canonical".into()))
}

pub fn element_from_hex<G: Group>(text: &str) -> Result<G::Element> {
    let bytes = hex::decode(text).map_err(|e| Error::Decode(format!("element hex: {e}")))?;
    G::decode_element(&bytes).ok_or_else(|| Error::Decode("not a valid group element".into()))
}
