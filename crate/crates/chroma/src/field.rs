//! Exact arithmetic in GF(p^n) for q = p^n >= 4.
//!
//! Elements are stored by their canonical integer encoding: the element with
//! coefficient vector (c_0, ..., c_{n-1}) in the generator basis encodes as
//! sum c_i * p^i (little-endian in the generator). The modulus is the monic
//! irreducible degree-n polynomial over GF(p) whose non-leading coefficient
//! vector has the smallest such encoding, so field construction is
//! deterministic and two contexts for the same (p, n) are interchangeable.

use std::fmt;

use thiserror::Error;

/// Largest supported field order. Everything here is desk scale: element
/// enumeration, exhaustive evaluation and Lagrange interpolation all walk the
/// whole field.
pub const MAX_ORDER: u64 = 1 << 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NonPrime(u64),
    #[error("field order {0} is below 4")]
    OrderTooSmall(u64),
    #[error("field order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooLarge(u64),
    #[error("inversion of zero")]
    ZeroInverse,
    #[error("element encoding {enc} out of range for field of order {q}")]
    EncodingOutOfRange { enc: u64, q: u64 },
    #[error("invalid field spec {0:?}: expected \"p^n\" such as \"2^2\" or \"5^1\"")]
    BadSpec(String),
}

/// An element of a fixed GF(p^n), stored by canonical encoding.
///
/// Elements are plain values; all arithmetic goes through the [`FieldCtx`]
/// they belong to. Mixing elements across contexts is not detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(u64);

impl FieldElement {
    pub fn encoding(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The field GF(p^n): characteristic, degree, order and reduction modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldCtx {
    p: u64,
    n: u32,
    q: u64,
    /// Monic modulus, coefficients low-to-high over GF(p); length n + 1.
    modulus: Vec<u64>,
}

impl FieldCtx {
    /// Builds GF(p^n) with the canonical modulus for (p, n).
    pub fn new(p: u64, n: u32) -> Result<FieldCtx, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NonPrime(p));
        }
        if n == 0 {
            return Err(FieldError::OrderTooSmall(1));
        }
        let q = match p.checked_pow(n) {
            Some(q) if q <= MAX_ORDER => q,
            Some(q) => return Err(FieldError::OrderTooLarge(q)),
            None => return Err(FieldError::OrderTooLarge(u64::MAX)),
        };
        if q < 4 {
            return Err(FieldError::OrderTooSmall(q));
        }
        let modulus = canonical_modulus(p, n);
        Ok(FieldCtx { p, n, q, modulus })
    }

    /// Parses a field spec of the form `p^n` (a bare `p` means `p^1`).
    pub fn from_spec(spec: &str) -> Result<FieldCtx, FieldError> {
        let bad = || FieldError::BadSpec(spec.to_string());
        let (p_str, n_str) = match spec.split_once('^') {
            Some((p, n)) => (p, n),
            None => (spec, "1"),
        };
        let p: u64 = p_str.parse().map_err(|_| bad())?;
        let n: u32 = n_str.parse().map_err(|_| bad())?;
        FieldCtx::new(p, n)
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    /// ceil(log2 q): the binary-logarithm convention every cost bound in
    /// this crate uses (power chains are counted in binary steps).
    pub fn log2_order(&self) -> u32 {
        64 - (self.q - 1).leading_zeros()
    }

    /// Monic modulus coefficients, low degree first, length `degree() + 1`.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement(0)
    }

    pub fn one(&self) -> FieldElement {
        FieldElement(1)
    }

    /// -1, which equals 1 in characteristic 2.
    pub fn minus_one(&self) -> FieldElement {
        self.neg(self.one())
    }

    /// The element with the given canonical encoding.
    pub fn element(&self, enc: u64) -> Result<FieldElement, FieldError> {
        if enc < self.q {
            Ok(FieldElement(enc))
        } else {
            Err(FieldError::EncodingOutOfRange { enc, q: self.q })
        }
    }

    /// All field elements in encoding order 0, 1, ..., q-1.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(FieldElement)
    }

    /// The elements of F \ {0, -1} in encoding order. In characteristic 2
    /// this excludes {0, 1}; otherwise {0, p-1-ish encoding of -1}.
    pub fn units_excluding_minus_one(&self) -> Vec<FieldElement> {
        let m1 = self.minus_one();
        self.elements()
            .filter(|&a| !a.is_zero() && a != m1)
            .collect()
    }

    fn coeffs(&self, a: FieldElement) -> Vec<u64> {
        let mut v = vec![0; self.n as usize];
        let mut x = a.0;
        for c in v.iter_mut() {
            *c = x % self.p;
            x /= self.p;
        }
        v
    }

    fn encode(&self, coeffs: &[u64]) -> FieldElement {
        let mut enc = 0;
        for &c in coeffs.iter().rev() {
            enc = enc * self.p + c % self.p;
        }
        FieldElement(enc)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.n == 1 {
            return FieldElement((a.0 + b.0) % self.p);
        }
        let (ca, cb) = (self.coeffs(a), self.coeffs(b));
        let sum: Vec<u64> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % self.p).collect();
        self.encode(&sum)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.n == 1 {
            return FieldElement((self.p - a.0) % self.p);
        }
        let ca = self.coeffs(a);
        let neg: Vec<u64> = ca.iter().map(|x| (self.p - x) % self.p).collect();
        self.encode(&neg)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.n == 1 {
            return FieldElement(a.0 * b.0 % self.p);
        }
        let (ca, cb) = (self.coeffs(a), self.coeffs(b));
        let n = self.n as usize;
        // Schoolbook convolution followed by reduction by the monic modulus.
        let mut prod = vec![0u64; 2 * n - 1];
        for (i, &x) in ca.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        for i in (n..2 * n - 1).rev() {
            let lead = prod[i];
            if lead == 0 {
                continue;
            }
            prod[i] = 0;
            for (k, &m) in self.modulus.iter().enumerate().take(n) {
                let idx = i - n + k;
                prod[idx] = (prod[idx] + (self.p - m % self.p) * lead) % self.p;
            }
        }
        self.encode(&prod[..n])
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        // a^(q-2) = a^-1 by Fermat; q is tiny so the pow chain is cheap.
        Ok(self.pow(a, self.q - 2))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// First irreducible monic degree-n polynomial over GF(p), ordered by the
/// integer encoding of its non-leading coefficients.
fn canonical_modulus(p: u64, n: u32) -> Vec<u64> {
    let n = n as usize;
    let count = p.pow(n as u32);
    for enc in 0..count {
        let mut poly = vec![0u64; n + 1];
        let mut x = enc;
        for c in poly.iter_mut().take(n) {
            *c = x % p;
            x /= p;
        }
        poly[n] = 1;
        if is_irreducible(&poly, p) {
            return poly;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over GF(p)")
}

/// Trial division by all monic polynomials of degree 1..=n/2.
fn is_irreducible(poly: &[u64], p: u64) -> bool {
    let n = poly.len() - 1;
    if n == 1 {
        return true;
    }
    for d in 1..=n / 2 {
        let count = p.pow(d as u32);
        for enc in 0..count {
            let mut div = vec![0u64; d + 1];
            let mut x = enc;
            for c in div.iter_mut().take(d) {
                *c = x % p;
                x /= p;
            }
            div[d] = 1;
            if zp_rem_is_zero(poly, &div, p) {
                return false;
            }
        }
    }
    true
}

/// Remainder test for monic divisors over GF(p).
fn zp_rem_is_zero(poly: &[u64], div: &[u64], p: u64) -> bool {
    let mut rem = poly.to_vec();
    let d = div.len() - 1;
    while rem.len() > d {
        let lead = *rem.last().unwrap() % p;
        let shift = rem.len() - 1 - d;
        if lead != 0 {
            for (k, &m) in div.iter().enumerate() {
                rem[shift + k] = (rem[shift + k] + (p - m % p) * lead) % p;
            }
        }
        rem.pop();
    }
    rem.iter().all(|&c| c % p == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u64, n: u32) -> FieldCtx {
        FieldCtx::new(p, n).unwrap()
    }

    #[test]
    fn canonical_moduli() {
        // Unique monic irreducible quadratic over GF(2).
        assert_eq!(gf(2, 2).modulus(), &[1, 1, 1]);
        // Prime field: modulus is x.
        assert_eq!(gf(5, 1).modulus(), &[0, 1]);
        // First rootless monic quadratic over GF(3) in encoding order.
        assert_eq!(gf(3, 2).modulus(), &[1, 0, 1]);
        assert_eq!(gf(2, 3).modulus(), &[1, 1, 0, 1]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(FieldCtx::new(4, 1).unwrap_err(), FieldError::NonPrime(4));
        assert_eq!(FieldCtx::new(6, 2).unwrap_err(), FieldError::NonPrime(6));
        assert_eq!(FieldCtx::new(2, 1).unwrap_err(), FieldError::OrderTooSmall(2));
        assert_eq!(FieldCtx::new(3, 1).unwrap_err(), FieldError::OrderTooSmall(3));
        assert!(matches!(
            FieldCtx::new(2, 63),
            Err(FieldError::OrderTooLarge(_))
        ));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(FieldCtx::from_spec("2^2").unwrap().order(), 4);
        assert_eq!(FieldCtx::from_spec("5^1").unwrap().order(), 5);
        assert_eq!(FieldCtx::from_spec("5").unwrap().order(), 5);
        assert!(FieldCtx::from_spec("").is_err());
        assert!(FieldCtx::from_spec("2^").is_err());
        assert!(FieldCtx::from_spec("^3").is_err());
        assert!(FieldCtx::from_spec("x^2").is_err());
        assert!(FieldCtx::from_spec("2^2^2").is_err());
    }

    #[test]
    fn gf4_multiplication() {
        let f = gf(2, 2);
        let g = f.element(2).unwrap();
        // g^2 = g + 1 under x^2 + x + 1.
        assert_eq!(f.mul(g, g).encoding(), 3);
        assert_eq!(f.inv(g).unwrap().encoding(), 3);
        assert_eq!(f.inv(f.zero()), Err(FieldError::ZeroInverse));
        for a in f.elements().skip(1) {
            assert_eq!(f.pow(a, 3), f.one());
        }
    }

    #[test]
    fn units_excluding_minus_one_examples() {
        let encs = |f: &FieldCtx| -> Vec<u64> {
            f.units_excluding_minus_one()
                .iter()
                .map(|a| a.encoding())
                .collect()
        };
        assert_eq!(encs(&gf(2, 2)), vec![2, 3]);
        assert_eq!(encs(&gf(5, 1)), vec![1, 2, 3]);
        assert_eq!(encs(&gf(7, 1)), vec![1, 2, 3, 4, 5]);
        assert_eq!(encs(&gf(2, 3)).len(), 6);
    }

    #[test]
    fn fermat_exponent_exhaustive() {
        for (p, n) in [(2, 2), (5, 1), (7, 1), (2, 3), (3, 2)] {
            let f = gf(p, n);
            for a in f.elements().skip(1) {
                assert_eq!(f.pow(a, f.order() - 1), f.one(), "q={}", f.order());
            }
        }
    }

    #[test]
    fn encode_decode_round_trip_up_to_256() {
        for (p, n) in [(2u64, 8u32), (3, 5), (5, 3), (13, 2), (251, 1)] {
            let f = gf(p, n);
            assert!(f.order() <= 256);
            for enc in 0..f.order() {
                let a = f.element(enc).unwrap();
                assert_eq!(f.encode(&f.coeffs(a)), a);
            }
        }
    }

    #[test]
    fn field_axioms_small_fields() {
        for (p, n) in [(2, 2), (3, 2), (5, 1)] {
            let f = gf(p, n);
            for a in f.elements() {
                assert_eq!(f.add(a, f.neg(a)), f.zero());
                for b in f.elements() {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in f.elements() {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    }
                }
            }
        }
    }
}
