//! Finite exact-rational linear combinations of normal monomials.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    self, check_winding, expand_level, mul_monomial, normalize_monomial, AlgebraContext, Monomial,
};
use crate::error::{QpError, Result};

pub type Coefficient = BigRational;

/// An element of the dense *-subalgebra spanned by the monomials.
///
/// Terms are kept in a sorted map keyed by `(m - n, n, i, j)`; zero
/// coefficients are never stored. Two elements may be equal in the algebra
/// while having different term maps; [`Element::canonicalize`] picks the
/// unique representative.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    ctx: AlgebraContext,
    terms: BTreeMap<Monomial, Coefficient>,
}

impl Element {
    pub fn zero(ctx: AlgebraContext) -> Self {
        Element {
            ctx,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ctx: AlgebraContext) -> Self {
        Element::from(Monomial::identity(ctx))
    }

    pub fn scalar(ctx: AlgebraContext, c: Coefficient) -> Self {
        Element::term(Monomial::identity(ctx), c)
    }

    pub fn term(x: Monomial, c: Coefficient) -> Self {
        let mut e = Element::zero(x.context());
        e.add_term(x, c);
        e
    }

    /// `U^i S^m S*^n U^j` from raw exponents.
    pub fn word(ctx: AlgebraContext, i: impl Into<BigInt>, m: u32, n: u32, j: impl Into<BigInt>) -> Self {
        Element::from(normalize_monomial(ctx, &i.into(), m, n, &j.into()))
    }

    /// The Cuntz isometry `T_j = U^j S`, `0 <= j < p`.
    pub fn cuntz_generator(ctx: AlgebraContext, j: u32) -> Result<Self> {
        if j >= ctx.p() {
            return Err(QpError::Range(format!(
                "Cuntz generator index {j} must lie in [0, {})",
                ctx.p()
            )));
        }
        Ok(Element::word(ctx, j, 1, 0, 0))
    }

    pub fn context(&self) -> AlgebraContext {
        self.ctx
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coefficient)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// No stored terms. Use [`Element::is_zero`] for equality with zero in
    /// the algebra.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The single monomial if the element is `1 * x`.
    pub fn as_monomial(&self) -> Option<&Monomial> {
        match self.terms.iter().next() {
            Some((x, c)) if self.terms.len() == 1 && c.is_one() => Some(x),
            _ => None,
        }
    }

    pub fn add_term(&mut self, x: Monomial, c: Coefficient) {
        debug_assert_eq!(x.context(), self.ctx);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(x) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Coefficient) -> Element {
        if c.is_zero() {
            return Element::zero(self.ctx);
        }
        Element {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(x, v)| (x.clone(), v * c)).collect(),
        }
    }

    pub fn checked_add(&self, other: &Element) -> Result<Element> {
        self.ctx.check_same(&other.ctx)?;
        let mut out = self.clone();
        for (x, c) in &other.terms {
            out.add_term(x.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Element) -> Result<Element> {
        self.checked_add(&-other)
    }

    /// Bilinear extension of [`mul_monomial`].
    pub fn checked_mul(&self, other: &Element) -> Result<Element> {
        self.ctx.check_same(&other.ctx)?;
        let mut out = Element::zero(self.ctx);
        for (x, a) in &self.terms {
            for (y, b) in &other.terms {
                if let Some(z) = mul_monomial(x, y)? {
                    out.add_term(z, a * b);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Element {
        let mut out = Element::one(self.ctx);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn adjoint(&self) -> Element {
        let mut out = Element::zero(self.ctx);
        for (x, c) in &self.terms {
            out.add_term(x.adjoint(), c.clone());
        }
        out
    }

    /// The unique representative of this element.
    ///
    /// Within each gauge degree every term is expanded to the largest
    /// S*-power present, coefficients are merged, and then complete families
    /// of `p` siblings carrying equal coefficients are folded back into their
    /// parent, bottom level first.
    pub fn canonicalize(&self) -> Element {
        let p = self.ctx.p() as usize;
        let mut by_degree: BTreeMap<i64, Vec<(&Monomial, &Coefficient)>> = BTreeMap::new();
        for (x, c) in &self.terms {
            by_degree.entry(x.gauge_degree()).or_default().push((x, c));
        }

        let mut out = Element::zero(self.ctx);
        for terms in by_degree.values() {
            let top = terms.iter().map(|(x, _)| x.n()).max().unwrap_or(0);
            let mut level = Element::zero(self.ctx);
            for (x, c) in terms {
                for y in expand_level(x, top).expect("top is the maximum level") {
                    level.add_term(y, (*c).clone());
                }
            }

            let mut current = level.terms;
            while !current.is_empty() {
                let mut families: BTreeMap<Monomial, Vec<(Monomial, Coefficient)>> = BTreeMap::new();
                for (x, c) in current {
                    match algebra::parent(&x) {
                        Some(par) => families.entry(par).or_default().push((x, c)),
                        None => out.add_term(x, c),
                    }
                }
                let mut next = BTreeMap::new();
                for (par, kids) in families {
                    let uniform = kids.len() == p && kids.iter().all(|(_, c)| *c == kids[0].1);
                    if uniform {
                        next.insert(par, kids[0].1.clone());
                    } else {
                        for (x, c) in kids {
                            out.add_term(x, c);
                        }
                    }
                }
                current = next;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.canonicalize().is_empty()
    }

    /// Equality in the algebra.
    pub fn equals(&self, other: &Element) -> Result<bool> {
        Ok(self.checked_sub(other)?.is_zero())
    }

    /// The winding endomorphism `U -> U^k`, `S -> S`.
    pub fn chi(&self, k: &BigInt) -> Result<Element> {
        check_winding(self.ctx, k)?;
        let mut out = Element::zero(self.ctx);
        for (x, c) in &self.terms {
            out.add_term(algebra::chi_monomial(k, x)?, c.clone());
        }
        Ok(out)
    }

    /// Membership in the gauge-fixed subalgebra.
    pub fn is_gauge_invariant(&self) -> bool {
        self.canonicalize().terms.keys().all(|x| x.gauge_degree() == 0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("element serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Element> {
        Element::deserialize(value).map_err(|e| QpError::Json(e.to_string()))
    }
}

impl From<Monomial> for Element {
    fn from(x: Monomial) -> Self {
        Element::term(x, Coefficient::one())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parse::render(self))
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.checked_add(rhs).expect("context mismatch in element sum")
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.checked_sub(rhs).expect("context mismatch in element difference")
    }
}

impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        self.checked_mul(rhs).expect("context mismatch in element product")
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        Element {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(x, c)| (x.clone(), -c)).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    i: String,
    m: u32,
    n: u32,
    j: String,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    p: u32,
    terms: Vec<TermRepr>,
}

impl Serialize for Element {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            p: self.ctx.p(),
            terms: self
                .terms
                .iter()
                .map(|(x, c)| TermRepr {
                    i: x.i().to_string(),
                    m: x.m(),
                    n: x.n(),
                    j: x.j().to_string(),
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = ElementRepr::deserialize(d)?;
        let ctx = AlgebraContext::new(repr.p).map_err(D::Error::custom)?;
        let int = |s: &str| s.parse::<BigInt>().map_err(D::Error::custom);
        let mut out = Element::zero(ctx);
        for t in repr.terms {
            let den = int(&t.den)?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            let x = normalize_monomial(ctx, &int(&t.i)?, t.m, t.n, &int(&t.j)?);
            out.add_term(x, BigRational::new(int(&t.num)?, den));
        }
        Ok(out)
    }
}
