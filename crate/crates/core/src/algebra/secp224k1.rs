//! secp224k1 (SEC 2): `y^2 = x^3 + 5` over a 224-bit prime field, cofactor 1.
//!
//! Points are kept in affine form between operations so that `Eq` is
//! structural; arithmetic runs in Jacobian coordinates and normalizes once at
//! the end. Not constant time.

use std::ops::{Add, Mul, Neg, Sub};

use crypto_bigint::modular::constant_mod::{Residue, ResidueParams};
use crypto_bigint::{impl_modulus, Encoding, NonZero, U256, U512};

use super::{Group, ScalarField};

impl_modulus!(
    FieldModulus,
    U256,
    "00000000fffffffffffffffffffffffffffffffffffffffffffffffeffffe56d"
);
impl_modulus!(
    OrderModulus,
    U256,
    "000000010000000000000000000000000001dce8d2ec6184caf0a971769fb1f7"
);

const LIMBS: usize = U256::LIMBS;
const FIELD_LEN: usize = 28;
const SCALAR_BYTES: usize = 29;

const GX: U256 =
    U256::from_be_hex("00000000a1455b334df099df30fc28a169a467e9e47075a90f7e650eb6b7a45c");
const GY: U256 =
    U256::from_be_hex("000000007e089fed7fba344282cafbd6f7e319f7c0b0bd59e2ca4bdb556d61a5");

type Fp = Residue<FieldModulus, LIMBS>;

fn reduce_wide(bytes: &[u8], modulus: &U256) -> U256 {
    assert!(bytes.len() <= 64, "reduce_be takes at most 64 bytes");
    let mut wide = [0u8; 64];
    wide[64 - bytes.len()..].copy_from_slice(bytes);
    let value = U512::from_be_slice(&wide);
    let mut m = [0u8; 64];
    m[32..].copy_from_slice(&modulus.to_be_bytes());
    let m = NonZero::new(U512::from_be_slice(&m)).unwrap();
    let reduced = value.rem(&m).to_be_bytes();
    U256::from_be_slice(&reduced[32..])
}

fn fp(v: &U256) -> Fp {
    Fp::new(v)
}

fn fp_from_u64(v: u64) -> Fp {
    Fp::new(&U256::from_u64(v))
}

fn fp_is_zero(a: &Fp) -> bool {
    *a == Fp::ZERO
}

/// Square root for p = 5 (mod 8) (Atkin).
fn fp_sqrt(a: &Fp) -> Option<Fp> {
    if fp_is_zero(a) {
        return Some(Fp::ZERO);
    }
    let exp = FieldModulus::MODULUS
        .wrapping_sub(&U256::from_u8(5))
        .shr_vartime(3);
    let two_a = a.add(a);
    let v = two_a.pow(&exp);
    let i = two_a.mul(&v.square());
    let y = a.mul(&v).mul(&i.sub(&Fp::ONE));
    if y.square() == *a {
        Some(y)
    } else {
        None
    }
}

/// Element of Z_q for the secp224k1 group order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Secp224k1Scalar(Residue<OrderModulus, LIMBS>);

impl Add for Secp224k1Scalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for Secp224k1Scalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Mul for Secp224k1Scalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Neg for Secp224k1Scalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl ScalarField for Secp224k1Scalar {
    fn zero() -> Self {
        Self(Residue::ZERO)
    }

    fn one() -> Self {
        Self(Residue::ONE)
    }

    fn from_u64(v: u64) -> Self {
        Self(Residue::new(&reduce_wide(
            &v.to_be_bytes(),
            &OrderModulus::MODULUS,
        )))
    }

    fn invert(&self) -> Option<Self> {
        let (inv, ok) = self.0.invert();
        bool::from(ok).then_some(Self(inv))
    }

    fn reduce_be(bytes: &[u8]) -> Self {
        Self(Residue::new(&reduce_wide(bytes, &OrderModulus::MODULUS)))
    }

    fn to_be_bytes(&self) -> Vec<u8> {
        self.0.retrieve().to_be_bytes()[32 - SCALAR_BYTES..].to_vec()
    }

    fn from_be_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != SCALAR_BYTES {
            return None;
        }
        let mut buf = [0u8; 32];
        buf[32 - SCALAR_BYTES..].copy_from_slice(bytes);
        let v = U256::from_be_slice(&buf);
        (v < OrderModulus::MODULUS).then(|| Self(Residue::new(&v)))
    }
}

/// Affine point; `infinity` marks the identity (coordinates are then zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Secp224k1Point {
    x: Fp,
    y: Fp,
    infinity: bool,
}

impl Secp224k1Point {
    const IDENTITY: Self = Self {
        x: Fp::ZERO,
        y: Fp::ZERO,
        infinity: true,
    };

    fn is_on_curve(x: &Fp, y: &Fp) -> bool {
        y.square() == x.square().mul(x).add(&fp_from_u64(5))
    }

    fn to_jacobian(self) -> Jacobian {
        if self.infinity {
            Jacobian::IDENTITY
        } else {
            Jacobian {
                x: self.x,
                y: self.y,
                z: Fp::ONE,
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Jacobian {
    x: Fp,
    y: Fp,
    z: Fp,
}

impl Jacobian {
    const IDENTITY: Self = Self {
        x: Fp::ONE,
        y: Fp::ONE,
        z: Fp::ZERO,
    };

    fn is_identity(&self) -> bool {
        fp_is_zero(&self.z)
    }

    // dbl-2009-l, a = 0
    fn double(&self) -> Self {
        if self.is_identity() || fp_is_zero(&self.y) {
            return Self::IDENTITY;
        }
        let a = self.x.square();
        let b = self.y.square();
        let c = b.square();
        let xb = self.x.add(&b);
        let d = xb.square().sub(&a).sub(&c);
        let d = d.add(&d);
        let e = a.add(&a).add(&a);
        let f = e.square();
        let x3 = f.sub(&d).sub(&d);
        let c8 = c.add(&c);
        let c8 = c8.add(&c8);
        let c8 = c8.add(&c8);
        let y3 = e.mul(&d.sub(&x3)).sub(&c8);
        let yz = self.y.mul(&self.z);
        let z3 = yz.add(&yz);
        Self {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    // add-2007-bl
    fn add(&self, other: &Self) -> Self {
        if self.is_identity() {
            return *other;
        }
        if other.is_identity() {
            return *self;
        }
        let z1z1 = self.z.square();
        let z2z2 = other.z.square();
        let u1 = self.x.mul(&z2z2);
        let u2 = other.x.mul(&z1z1);
        let s1 = self.y.mul(&other.z).mul(&z2z2);
        let s2 = other.y.mul(&self.z).mul(&z1z1);
        let h = u2.sub(&u1);
        let r = s2.sub(&s1);
        if fp_is_zero(&h) {
            return if fp_is_zero(&r) {
                self.double()
            } else {
                Self::IDENTITY
            };
        }
        let r = r.add(&r);
        let h2 = h.add(&h);
        let i = h2.square();
        let j = h.mul(&i);
        let v = u1.mul(&i);
        let x3 = r.square().sub(&j).sub(&v).sub(&v);
        let s1j = s1.mul(&j);
        let y3 = r.mul(&v.sub(&x3)).sub(&s1j).sub(&s1j);
        let z3 = self.z.add(&other.z).square().sub(&z1z1).sub(&z2z2).mul(&h);
        Self {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn to_affine(self) -> Secp224k1Point {
        if self.is_identity() {
            return Secp224k1Point::IDENTITY;
        }
        let (zinv, _) = self.z.invert();
        let zinv2 = zinv.square();
        Secp224k1Point {
            x: self.x.mul(&zinv2),
            y: self.y.mul(&zinv2).mul(&zinv),
            infinity: false,
        }
    }
}

/// The secp224k1 Koblitz curve group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Secp224k1;

impl Group for Secp224k1 {
    type Scalar = Secp224k1Scalar;
    type Element = Secp224k1Point;

    const NAME: &'static str = "secp224k1";
    const SCALAR_LEN: usize = SCALAR_BYTES;
    const ELEMENT_LEN: usize = 1 + FIELD_LEN;

    fn generator() -> Secp224k1Point {
        Secp224k1Point {
            x: fp(&GX),
            y: fp(&GY),
            infinity: false,
        }
    }

    fn identity() -> Secp224k1Point {
        Secp224k1Point::IDENTITY
    }

    fn combine(a: &Secp224k1Point, b: &Secp224k1Point) -> Secp224k1Point {
        a.to_jacobian().add(&b.to_jacobian()).to_affine()
    }

    fn invert_element(a: &Secp224k1Point) -> Secp224k1Point {
        if a.infinity {
            *a
        } else {
            Secp224k1Point {
                x: a.x,
                y: a.y.neg(),
                infinity: false,
            }
        }
    }

    fn exp(base: &Secp224k1Point, s: &Secp224k1Scalar) -> Secp224k1Point {
        let k = s.0.retrieve();
        let b = base.to_jacobian();
        let mut acc = Jacobian::IDENTITY;
        for bit in (0..k.bits_vartime()).rev() {
            acc = acc.double();
            if k.bit_vartime(bit) {
                acc = acc.add(&b);
            }
        }
        acc.to_affine()
    }

    fn encode_element(e: &Secp224k1Point) -> Vec<u8> {
        let mut out = vec![0u8; 1 + FIELD_LEN];
        if e.infinity {
            return out;
        }
        let y = e.y.retrieve();
        out[0] = if y.bit_vartime(0) { 0x03 } else { 0x02 };
        out[1..].copy_from_slice(&e.x.retrieve().to_be_bytes()[32 - FIELD_LEN..]);
        out
    }

    fn decode_element(bytes: &[u8]) -> Option<Secp224k1Point> {
        if bytes.len() != 1 + FIELD_LEN {
            return None;
        }
        if bytes.iter().all(|b| *b == 0) {
            return Some(Secp224k1Point::IDENTITY);
        }
        let odd = match bytes[0] {
            0x02 => false,
            0x03 => true,
            _ => return None,
        };
        let mut buf = [0u8; 32];
        buf[32 - FIELD_LEN..].copy_from_slice(&bytes[1..]);
        let xv = U256::from_be_slice(&buf);
        if xv >= FieldModulus::MODULUS {
            return None;
        }
        let x = fp(&xv);
        let rhs = x.square().mul(&x).add(&fp_from_u64(5));
        let mut y = fp_sqrt(&rhs)?;
        if y.retrieve().bit_vartime(0) != odd {
            y = y.neg();
        }
        debug_assert!(Secp224k1Point::is_on_curve(&x, &y));
        Some(Secp224k1Point {
            x,
            y,
            infinity: false,
        })
    }

    fn order_be_bytes() -> Vec<u8> {
        OrderModulus::MODULUS.to_be_bytes()[32 - SCALAR_BYTES..].to_vec()
    }
}
