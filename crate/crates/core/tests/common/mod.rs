//! Arbitrary-precision helpers shared by the oracle tests.
#![allow(dead_code)]

use num_bigint::BigUint;
use sibauth::algebra::{Group, ScalarField};

pub fn order<G: Group>() -> BigUint {
    BigUint::from_bytes_be(&G::order_be_bytes())
}

pub fn big<G: Group>(s: &G::Scalar) -> BigUint {
    BigUint::from_bytes_be(&s.to_be_bytes())
}

pub fn scalar<G: Group>(x: &BigUint) -> G::Scalar {
    let x = x % order::<G>();
    let mut bytes = x.to_bytes_be();
    while bytes.len() < G::SCALAR_LEN {
        bytes.insert(0, 0);
    }
    G::Scalar::from_be_bytes(&bytes).expect("reduced value is canonical")
}

/// Left-to-right double-and-add using only the group operation.
pub fn oracle_exp<G: Group>(base: &G::Element, s: &G::Scalar) -> G::Element {
    let k = big::<G>(s);
    let mut acc = G::identity();
    for i in (0..k.bits()).rev() {
        acc = G::combine(&acc, &acc);
        if k.bit(i) {
            acc = G::combine(&acc, base);
        }
    }
    acc
}

pub fn modinv(a: &BigUint, m: &BigUint) -> BigUint {
    a.modpow(&(m - 2u32), m)
}
