//! Univariate polynomials over GF(p^n): ring arithmetic, monic gcd,
//! evaluation and full-field Lagrange interpolation.

use thiserror::Error;

use crate::field::{FieldCtx, FieldElement};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("interpolation requires every field point exactly once ({0})")]
    BadInterpolationPoints(String),
}

/// Coefficients low degree first, never with a trailing zero; the zero
/// polynomial is the empty vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: Vec<FieldElement>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: FieldElement) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { coeffs: vec![c] }
        }
    }

    pub fn one(ctx: &FieldCtx) -> Poly {
        Poly::constant(ctx.one())
    }

    /// The monomial x.
    pub fn x(ctx: &FieldCtx) -> Poly {
        Poly {
            coeffs: vec![ctx.zero(), ctx.one()],
        }
    }

    pub fn from_coeffs(ctx: &FieldCtx, coeffs: Vec<FieldElement>) -> Poly {
        let _ = ctx;
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn coeff(&self, ctx: &FieldCtx, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or(ctx.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<FieldElement> {
        self.coeffs.last().copied()
    }

    pub fn add(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| ctx.add(self.coeff(ctx, i), other.coeff(ctx, i)))
            .collect();
        Poly::from_coeffs(ctx, coeffs)
    }

    pub fn neg(&self, ctx: &FieldCtx) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|&c| ctx.neg(c)).collect(),
        }
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        self.add(ctx, &other.neg(ctx))
    }

    pub fn scale(&self, ctx: &FieldCtx, c: FieldElement) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs.iter().map(|&a| ctx.mul(a, c)).collect(),
        }
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![ctx.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = ctx.add(coeffs[i + j], ctx.mul(a, b));
            }
        }
        Poly::from_coeffs(ctx, coeffs)
    }

    /// Euclidean division: returns (quotient, remainder) with
    /// deg r < deg divisor.
    pub fn divmod(&self, ctx: &FieldCtx, divisor: &Poly) -> Result<(Poly, Poly), PolyError> {
        if divisor.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let dlead = ctx.inv(divisor.leading().unwrap()).expect("nonzero leading");
        let ddeg = divisor.degree().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![ctx.zero(); self.coeffs.len().saturating_sub(ddeg)];
        while rem.len() > ddeg {
            let lead = *rem.last().unwrap();
            let shift = rem.len() - 1 - ddeg;
            if !lead.is_zero() {
                let factor = ctx.mul(lead, dlead);
                quot[shift] = factor;
                for (k, &m) in divisor.coeffs.iter().enumerate() {
                    rem[shift + k] = ctx.sub(rem[shift + k], ctx.mul(factor, m));
                }
            }
            rem.pop();
        }
        Ok((
            Poly::from_coeffs(ctx, quot),
            Poly::from_coeffs(ctx, rem),
        ))
    }

    pub fn pow(&self, ctx: &FieldCtx, mut e: u64) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one(ctx);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(ctx, &base);
            }
            base = base.mul(ctx, &base);
            e >>= 1;
        }
        acc
    }

    pub fn eval(&self, ctx: &FieldCtx, x: FieldElement) -> FieldElement {
        let mut acc = ctx.zero();
        for &c in self.coeffs.iter().rev() {
            acc = ctx.add(ctx.mul(acc, x), c);
        }
        acc
    }

    /// Monic normalization; the zero polynomial stays zero.
    pub fn monic(&self, ctx: &FieldCtx) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some(l) => self.scale(ctx, ctx.inv(l).expect("nonzero leading")),
        }
    }

    /// Reduces exponents by x^q = x, preserving the polynomial as a function
    /// on the field. The result has degree < q.
    pub fn reduce_mod_xq_minus_x(&self, ctx: &FieldCtx) -> Poly {
        let q = ctx.order() as usize;
        if self.coeffs.len() <= q {
            return self.clone();
        }
        let mut coeffs = vec![ctx.zero(); q];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let slot = if i == 0 { 0 } else { (i - 1) % (q - 1) + 1 };
            coeffs[slot] = ctx.add(coeffs[slot], c);
        }
        Poly::from_coeffs(ctx, coeffs)
    }

    /// Rendering used by file formats and reports: space-separated
    /// coefficient encodings, lowest degree first; the zero polynomial
    /// renders as "0".
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        self.coeffs
            .iter()
            .map(|c| c.encoding().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Monic gcd of a list, via Euclid with monic normalization at every step.
/// The gcd of an all-zero (or empty) list is 0.
pub fn monic_gcd(ctx: &FieldCtx, polys: &[Poly]) -> Poly {
    let mut acc = Poly::zero();
    for p in polys {
        acc = gcd_pair(ctx, &acc, p);
        if acc.degree() == Some(0) {
            break;
        }
    }
    acc
}

fn gcd_pair(ctx: &FieldCtx, a: &Poly, b: &Poly) -> Poly {
    let mut a = a.monic(ctx);
    let mut b = b.monic(ctx);
    while !b.is_zero() {
        let (_, r) = a.divmod(ctx, &b).expect("nonzero divisor");
        a = b;
        b = r.monic(ctx);
    }
    a
}

/// Unique polynomial of degree < q through all q points of the field.
/// Every field element must appear exactly once as an abscissa.
pub fn interpolate(
    ctx: &FieldCtx,
    points: &[(FieldElement, FieldElement)],
) -> Result<Poly, PolyError> {
    let q = ctx.order();
    if points.len() as u64 != q {
        return Err(PolyError::BadInterpolationPoints(format!(
            "got {} points, field has {} elements",
            points.len(),
            q
        )));
    }
    let mut seen = vec![false; q as usize];
    for &(x, _) in points {
        let idx = x.encoding() as usize;
        if seen[idx] {
            return Err(PolyError::BadInterpolationPoints(format!(
                "duplicate abscissa {}",
                x
            )));
        }
        seen[idx] = true;
    }
    let mut acc = Poly::zero();
    for &(xi, yi) in points {
        if yi.is_zero() {
            continue;
        }
        // Lagrange basis polynomial for xi, built incrementally.
        let mut basis = Poly::constant(yi);
        for &(xj, _) in points {
            if xj == xi {
                continue;
            }
            let denom = ctx.inv(ctx.sub(xi, xj)).expect("distinct abscissas");
            // basis *= (x - xj) / (xi - xj)
            let factor = Poly::from_coeffs(ctx, vec![ctx.mul(ctx.neg(xj), denom), denom]);
            basis = basis.mul(ctx, &factor);
        }
        acc = acc.add(ctx, &basis);
    }
    Ok(acc)
}
