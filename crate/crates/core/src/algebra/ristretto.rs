use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::traits::Identity;
use curve25519_dalek::{constants::RISTRETTO_BASEPOINT_POINT, Scalar};

use super::{Group, ScalarField};

/// The Ristretto prime-order group built on Curve25519.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Ristretto255;

// l = 2^252 + 27742317777372353535851937790883648493
const ORDER_BE: [u8; 32] = [
    0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
    0x14, 0xde, 0xf9, 0xde, 0xa2, 0xf7, 0x9c, 0xd6, 0x58, 0x12, 0x63, 0x1a, 0x5c, 0xf5, 0xd3, 0xed,
];

impl ScalarField for Scalar {
    fn zero() -> Self {
        Scalar::ZERO
    }

    fn one() -> Self {
        Scalar::ONE
    }

    fn from_u64(v: u64) -> Self {
        Scalar::from(v)
    }

    fn invert(&self) -> Option<Self> {
        if *self == Scalar::ZERO {
            None
        } else {
            Some(Scalar::invert(self))
        }
    }

    fn reduce_be(bytes: &[u8]) -> Self {
        assert!(bytes.len() <= 64, "reduce_be takes at most 64 bytes");
        let mut le = [0u8; 64];
        for (dst, src) in le.iter_mut().zip(bytes.iter().rev()) {
            *dst = *src;
        }
        Scalar::from_bytes_mod_order_wide(&le)
    }

    fn to_be_bytes(&self) -> Vec<u8> {
        let mut out = self.to_bytes();
        out.reverse();
        out.to_vec()
    }

    fn from_be_bytes(bytes: &[u8]) -> Option<Self> {
        let mut le: [u8; 32] = bytes.try_into().ok()?;
        le.reverse();
        Option::from(Scalar::from_canonical_bytes(le))
    }
}

impl Group for Ristretto255 {
    type Scalar = Scalar;
    type Element = RistrettoPoint;

    const NAME: &'static str = "ristretto255";
    const SCALAR_LEN: usize = 32;
    const ELEMENT_LEN: usize = 32;

    fn generator() -> RistrettoPoint {
        RISTRETTO_BASEPOINT_POINT
    }

    fn identity() -> RistrettoPoint {
        RistrettoPoint::identity()
    }

    fn combine(a: &RistrettoPoint, b: &RistrettoPoint) -> RistrettoPoint {
        a + b
    }

    fn invert_element(a: &RistrettoPoint) -> RistrettoPoint {
        -a
    }

    fn exp(base: &RistrettoPoint, s: &Scalar) -> RistrettoPoint {
        base * s
    }

    fn exp_generator(s: &Scalar) -> RistrettoPoint {
        RISTRETTO_BASEPOINT_TABLE * s
    }

    fn encode_element(e: &RistrettoPoint) -> Vec<u8> {
        e.compress().to_bytes().to_vec()
    }

    fn decode_element(bytes: &[u8]) -> Option<RistrettoPoint> {
        CompressedRistretto::from_slice(bytes).ok()?.decompress()
    }

    fn order_be_bytes() -> Vec<u8> {
        ORDER_BE.to_vec()
    }
}
