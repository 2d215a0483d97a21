//! Conditional expectations onto the images of the winding endomorphisms,
//! their quasi-bases and Watatani indices.
//!
//! `E_k` maps the gauge-fixed subalgebra onto `chi_k` of it and `F` maps the
//! whole algebra onto `chi_{p-1}(Q_p)`. Both average a cyclic group acting on
//! `U^i S^m S*^n U^j` by `z^{i+j}`, so they keep exactly the terms with
//! `i + j` divisible by the group order.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::algebra::{abs_u64, check_winding, normalize_monomial, AlgebraContext, Monomial};
use crate::dynamics::{odometer_orbit, OdometerSpec};
use crate::element::{Coefficient, Element};
use crate::error::{QpError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExpectationSpec {
    /// `E` on the gauge-fixed subalgebra, for any `k` coprime with `p`.
    Gauge { k: BigInt },
    /// `F_{i-1} o ... o F_0` on the whole algebra, onto `chi_{(p-1)^i}(Q_p)`.
    Full { iterate: u32 },
}

impl ExpectationSpec {
    pub fn gauge(ctx: AlgebraContext, k: impl Into<BigInt>) -> Result<Self> {
        let k = k.into();
        check_winding(ctx, &k)?;
        Ok(ExpectationSpec::Gauge { k })
    }

    /// `F`-kind from `k = +-(p-1)^i`, `i >= 1`.
    pub fn full(ctx: AlgebraContext, k: impl Into<BigInt>) -> Result<Self> {
        let k: BigInt = k.into();
        check_winding(ctx, &k)?;
        let base = BigInt::from(ctx.p() - 1);
        let target = k.abs();
        if base.is_one() {
            return if target.is_one() {
                Ok(ExpectationSpec::Full { iterate: 1 })
            } else {
                Err(QpError::NotInDomain(format!("k = {k} is not +-(p-1)^i for p = 2")))
            };
        }
        let mut power = base.clone();
        let mut iterate = 1;
        while power < target {
            power *= &base;
            iterate += 1;
        }
        if power != target {
            return Err(QpError::NotInDomain(format!(
                "k = {k} is not of the form +-(p-1)^i with p = {}",
                ctx.p()
            )));
        }
        Ok(ExpectationSpec::Full { iterate })
    }

    /// The order `|k|` of the averaged group (product of orders for iterates).
    pub fn order(&self, ctx: AlgebraContext) -> BigInt {
        match self {
            ExpectationSpec::Gauge { k } => k.abs(),
            ExpectationSpec::Full { iterate } => num_traits::pow(BigInt::from(ctx.p() - 1), *iterate as usize),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExpectationSpec::Gauge { .. } => "E",
            ExpectationSpec::Full { .. } => "F",
        }
    }
}

fn filter(x: &Element, modulus: &BigInt) -> Element {
    let mut out = Element::zero(x.context());
    for (y, c) in x.terms() {
        if (y.i() + y.j()).is_multiple_of(modulus) {
            out.add_term(y.clone(), c.clone());
        }
    }
    out
}

/// The unique `y` with `chi_{p-1}(y) = x`, for `x` a monomial whose
/// `i + j` is divisible by `p - 1`.
fn chi_base_preimage(x: &Monomial) -> Monomial {
    let ctx = x.context();
    let q = BigInt::from(ctx.p() - 1);
    let i_new = -(x.i() * (ctx.pow(x.m()) - 1u32)) / &q;
    let j_rem = x.j() + ctx.pow(x.n()) * x.i();
    debug_assert!(j_rem.is_multiple_of(&q));
    normalize_monomial(ctx, &i_new, x.m(), x.n(), &(j_rem / &q))
}

fn chi_base_preimage_element(x: &Element) -> Element {
    let mut out = Element::zero(x.context());
    for (y, c) in x.terms() {
        out.add_term(chi_base_preimage(y), c.clone());
    }
    out
}

/// Apply the conditional expectation.
///
/// The gauge kind canonicalizes first and rejects elements with a term of
/// nonzero gauge degree.
pub fn expectation(spec: &ExpectationSpec, x: &Element) -> Result<Element> {
    let ctx = x.context();
    match spec {
        ExpectationSpec::Gauge { k } => {
            let x = x.canonicalize();
            if let Some((y, _)) = x.terms().find(|(y, _)| y.gauge_degree() != 0) {
                return Err(QpError::NotInDomain(format!(
                    "term {y} has gauge degree {}",
                    y.gauge_degree()
                )));
            }
            Ok(filter(&x, &k.abs()))
        }
        ExpectationSpec::Full { iterate } => {
            let base = BigInt::from(ctx.p() - 1);
            if base.is_one() {
                return Ok(x.canonicalize());
            }
            let f = filter(x, &base);
            if *iterate <= 1 {
                return Ok(f.canonicalize());
            }
            // F_j = chi o F_{j-1} o chi^-1 on chi(Q_p)
            let inner = expectation(&ExpectationSpec::Full { iterate: iterate - 1 }, &chi_base_preimage_element(&f))?;
            Ok(inner.chi(&base)?.canonicalize())
        }
    }
}

/// `{U^j : 0 <= j < |k|}`.
pub fn quasi_basis(spec: &ExpectationSpec, ctx: AlgebraContext) -> Result<Vec<Element>> {
    let order = abs_u64(&spec.order(ctx))
        .filter(|&n| n <= 1 << 20)
        .ok_or_else(|| QpError::Range("quasi-basis is too large to materialize".into()))?;
    Ok((0..order).map(|j| Element::word(ctx, j, 0, 0, 0)).collect())
}

/// Both quasi-basis identities `x = sum u E(u* x) = sum E(x u) u*`.
pub fn verify_quasi_basis(spec: &ExpectationSpec, basis: &[Element], x: &Element) -> Result<bool> {
    let ctx = x.context();
    let mut left = Element::zero(ctx);
    let mut right = Element::zero(ctx);
    for u in basis {
        let us = u.adjoint();
        left = &left + &(u * &expectation(spec, &(&us * x))?);
        right = &right + &(&expectation(spec, &(x * u))? * &us);
    }
    Ok(left.equals(x)? && right.equals(x)?)
}

/// `sum u u*`.
pub fn watatani_index(spec: &ExpectationSpec, ctx: AlgebraContext) -> Result<Element> {
    let basis = quasi_basis(spec, ctx)?;
    let mut out = Element::zero(ctx);
    for u in &basis {
        out = &out + &(u * &u.adjoint());
    }
    Ok(out.canonicalize())
}

/// Distinct normal monomials `U^i S^h S*^h U^j`, `|i|, |j| <= bound`, `h <= max_level`.
pub fn gauge_domain_monomials(ctx: AlgebraContext, bound: i64, max_level: u32) -> Vec<Monomial> {
    let mut seen = BTreeSet::new();
    for h in 0..=max_level {
        for i in -bound..=bound {
            for j in -bound..=bound {
                seen.insert(normalize_monomial(ctx, &i.into(), h, h, &j.into()));
            }
        }
    }
    seen.into_iter().collect()
}

/// Distinct normal monomials with `|i|, |j| <= bound`, `m, n <= max_level`.
pub fn full_domain_monomials(ctx: AlgebraContext, bound: i64, max_level: u32) -> Vec<Monomial> {
    let mut seen = BTreeSet::new();
    for m in 0..=max_level {
        for n in 0..=max_level {
            for i in -bound..=bound {
                for j in -bound..=bound {
                    seen.insert(normalize_monomial(ctx, &i.into(), m, n, &j.into()));
                }
            }
        }
    }
    seen.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexReport {
    pub k: BigInt,
    pub p: u32,
    pub index: Coefficient,
    pub quasi_basis_size: usize,
    pub verified_on: usize,
    pub failures: Vec<Monomial>,
}

impl IndexReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let k = match self.k.to_i64() {
            Some(k) => json!(k),
            None => json!(self.k.to_string()),
        };
        json!({
            "k": k,
            "p": self.p,
            "index": self.index.to_string(),
            "quasi_basis_size": self.quasi_basis_size,
            "verified_on": self.verified_on,
        })
    }
}

/// Index of `spec` with the quasi-basis identities checked on every domain
/// monomial with `|i|, |j| <= bound` and levels up to `max_level`.
pub fn index_report(spec: &ExpectationSpec, k: &BigInt, ctx: AlgebraContext, bound: i64, max_level: u32) -> Result<IndexReport> {
    let basis = quasi_basis(spec, ctx)?;
    let index = watatani_index(spec, ctx)?;
    let scalar = match index.terms().collect::<Vec<_>>().as_slice() {
        [] => Coefficient::zero(),
        [(x, c)] if x.is_identity() => (*c).clone(),
        _ => return Err(QpError::Internal(format!("index {index} is not a scalar"))),
    };
    let domain = match spec {
        ExpectationSpec::Gauge { .. } => gauge_domain_monomials(ctx, bound, max_level),
        ExpectationSpec::Full { .. } => full_domain_monomials(ctx, bound, max_level),
    };
    let mut failures = Vec::new();
    for x in &domain {
        if !verify_quasi_basis(spec, &basis, &Element::from(x.clone()))? {
            failures.push(x.clone());
        }
    }
    Ok(IndexReport {
        k: k.clone(),
        p: ctx.p(),
        index: scalar,
        quasi_basis_size: basis.len(),
        verified_on: domain.len(),
        failures,
    })
}

/// `(1/|k|) sum_l alpha^l(x)` in floating point: each term's coefficient is
/// multiplied by the average of `z^{l(i+j)}` over a primitive `|k|`-th root `z`.
pub fn averaged_expectation(spec: &ExpectationSpec, x: &Element) -> Result<Vec<(Monomial, Complex64)>> {
    let ctx = x.context();
    let order = match spec {
        ExpectationSpec::Gauge { k } => k.abs(),
        ExpectationSpec::Full { iterate: 1 } => BigInt::from(ctx.p() - 1),
        ExpectationSpec::Full { .. } => {
            return Err(QpError::NotInDomain("averaging covers a single group only".into()))
        }
    };
    let x = match spec {
        ExpectationSpec::Gauge { .. } => {
            let x = x.canonicalize();
            if !x.terms().all(|(y, _)| y.gauge_degree() == 0) {
                return Err(QpError::NotInDomain("element is not gauge invariant".into()));
            }
            x
        }
        ExpectationSpec::Full { .. } => x.clone(),
    };
    let n = order.to_u64().ok_or_else(|| QpError::Range("group order too large".into()))?;
    let z = Complex64::from_polar(1.0, std::f64::consts::TAU / n as f64);
    let mut out = Vec::new();
    for (y, c) in x.terms() {
        let deg = (y.i() + y.j()).mod_floor(&order).to_u64().expect("residue below order");
        let step = z.powu(deg as u32);
        let mut acc = Complex64::zero();
        let mut w = Complex64::one();
        for _ in 0..n {
            acc += w;
            w *= step;
        }
        let c = c.to_f64().ok_or_else(|| QpError::Range("coefficient not representable".into()))?;
        out.push((y.clone(), acc * (c / n as f64)));
    }
    Ok(out)
}

/// `(b, m)` with `i + b p^h = m k`, from `1 = c k + d p^h`: `b = -i d`, `m = i c`.
pub fn bezout_lift(i: &BigInt, h: u32, k: &BigInt, p: u32) -> Result<(BigInt, BigInt)> {
    let ctx = AlgebraContext::new(p)?;
    check_winding(ctx, k)?;
    let ph = ctx.pow(h);
    let eg = k.extended_gcd(&ph);
    let (mut c, mut d) = (eg.x, eg.y);
    if eg.gcd.is_negative() {
        c = -c;
        d = -d;
    }
    debug_assert_eq!(&c * k + &d * &ph, BigInt::one());
    let (b, m) = (-(i * d), i * c);
    debug_assert_eq!(i + &b * &ph, &m * k);
    Ok((b, m))
}

/// `y` in the gauge-fixed subalgebra with `chi_k(y) = x`, for a monomial
/// `x = U^i S^h S*^h U^j` with `k | i + j`.
pub fn chi_preimage(k: &BigInt, x: &Monomial) -> Result<Element> {
    let ctx = x.context();
    check_winding(ctx, k)?;
    if x.m() != x.n() {
        return Err(QpError::NotInDomain(format!("{x} has gauge degree {}", x.gauge_degree())));
    }
    let total = x.i() + x.j();
    if !total.is_multiple_of(k) {
        return Err(QpError::NotInImage(format!("{x}: i + j = {total} is not divisible by {k}")));
    }
    let big_m = total / k;
    let h = x.m();
    let (_, m_lift) = bezout_lift(x.i(), h, k, ctx.p())?;
    let rest = big_m - &m_lift;
    Ok(Element::from(normalize_monomial(ctx, &m_lift, h, h, &rest)))
}

/// `chi_preimage` extended linearly over a gauge-invariant element.
pub fn chi_preimage_element(k: &BigInt, x: &Element) -> Result<Element> {
    let mut out = Element::zero(x.context());
    for (y, c) in x.canonicalize().terms() {
        out = &out + &chi_preimage(k, y)?.scale(c);
    }
    Ok(out.canonicalize())
}

/// Whether `+k` acts transitively on `Z/p^level`.
pub fn relative_commutant_probe(k: i64, p: u32, level: u32) -> Result<bool> {
    let spec = OdometerSpec::new(p, level, k)?;
    Ok(odometer_orbit(&spec, 0) == spec.modulus())
}
