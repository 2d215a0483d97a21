//! Normal-form monomials `U^i S^m (S*)^n U^j` and their products.
//!
//! A monomial is stored in normal form: the remainder exponent lives in a
//! half-open range, `0 <= j < p^n` when `m >= n` and `0 <= i < p^m` when
//! `m < n`. All exponent arithmetic is arbitrary precision.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{QpError, Result};

/// The algebra parameter `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraContext {
    p: u32,
}

impl AlgebraContext {
    pub fn new(p: u32) -> Result<Self> {
        if p < 2 {
            return Err(QpError::InvalidParameter(p as u64));
        }
        Ok(AlgebraContext { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// `p^e` as an arbitrary-precision integer.
    pub fn pow(&self, e: u32) -> BigInt {
        num_traits::pow(BigInt::from(self.p), e as usize)
    }

    pub(crate) fn check_same(&self, other: &AlgebraContext) -> Result<()> {
        if self.p != other.p {
            return Err(QpError::ContextMismatch {
                left: self.p,
                right: other.p,
            });
        }
        Ok(())
    }
}

/// A raw word `U^i S^m (S*)^n U^j`, not necessarily in normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    pub i: BigInt,
    pub m: u32,
    pub n: u32,
    pub j: BigInt,
}

impl Word {
    pub fn new(i: impl Into<BigInt>, m: u32, n: u32, j: impl Into<BigInt>) -> Self {
        Word {
            i: i.into(),
            m,
            n,
            j: j.into(),
        }
    }

    pub fn normalize(&self, ctx: AlgebraContext) -> Monomial {
        normalize_monomial(ctx, &self.i, self.m, self.n, &self.j)
    }
}

impl From<&Monomial> for Word {
    fn from(x: &Monomial) -> Self {
        Word {
            i: x.i.clone(),
            m: x.m,
            n: x.n,
            j: x.j.clone(),
        }
    }
}

/// A monomial `U^i S^m (S*)^n U^j` in normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    ctx: AlgebraContext,
    i: BigInt,
    m: u32,
    n: u32,
    j: BigInt,
}

impl Monomial {
    pub fn identity(ctx: AlgebraContext) -> Self {
        Monomial {
            ctx,
            i: BigInt::zero(),
            m: 0,
            n: 0,
            j: BigInt::zero(),
        }
    }

    /// `U^e`.
    pub fn unitary_power(ctx: AlgebraContext, e: impl Into<BigInt>) -> Self {
        normalize_monomial(ctx, &e.into(), 0, 0, &BigInt::zero())
    }

    pub fn context(&self) -> AlgebraContext {
        self.ctx
    }

    pub fn i(&self) -> &BigInt {
        &self.i
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn j(&self) -> &BigInt {
        &self.j
    }

    pub fn is_identity(&self) -> bool {
        self.m == 0 && self.n == 0 && self.i.is_zero() && self.j.is_zero()
    }

    /// The gauge degree `m - n`.
    pub fn gauge_degree(&self) -> i64 {
        self.m as i64 - self.n as i64
    }

    /// `(U^i S^m S*^n U^j)* = U^-j S^n S*^m U^-i`, renormalized.
    pub fn adjoint(&self) -> Monomial {
        normalize_monomial(self.ctx, &-&self.j, self.n, self.m, &-&self.i)
    }

    fn sort_key(&self) -> (i64, u32, &BigInt, &BigInt) {
        (self.gauge_degree(), self.n, &self.i, &self.j)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ctx
            .p
            .cmp(&other.ctx.p)
            .then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parse::render_monomial(self))
    }
}

/// Rewrites `U^i S^m (S*)^n U^j` into its unique normal form.
///
/// For `m >= n` the right exponent is reduced modulo `p^n` using
/// `S^m S*^n U^{p^n a} = U^{p^m a} S^m S*^n`; for `m < n` the left exponent is
/// reduced modulo `p^m` using the same identity read the other way.
pub fn normalize_monomial(
    ctx: AlgebraContext,
    i: &BigInt,
    m: u32,
    n: u32,
    j: &BigInt,
) -> Monomial {
    if m >= n {
        let (a, b) = j.div_mod_floor(&ctx.pow(n));
        Monomial {
            ctx,
            i: i + ctx.pow(m) * a,
            m,
            n,
            j: b,
        }
    } else {
        let (a, b) = i.div_mod_floor(&ctx.pow(m));
        Monomial {
            ctx,
            i: b,
            m,
            n,
            j: j + ctx.pow(n) * a,
        }
    }
}

/// Product of two normal monomials; `None` when the product vanishes.
///
/// The middle factor `(S*)^{x.n} U^t S^{y.m}` contracts through
/// `(S*)^q U^t S^q = [p^q | t] U^{t/p^q}` with `q = min(x.n, y.m)`.
pub fn mul_monomial(x: &Monomial, y: &Monomial) -> Result<Option<Monomial>> {
    x.ctx.check_same(&y.ctx)?;
    let ctx = x.ctx;
    let t = &x.j + &y.i;
    let q = x.n.min(y.m);
    let (c, rem) = t.div_mod_floor(&ctx.pow(q));
    if !rem.is_zero() {
        return Ok(None);
    }
    let out = if x.n <= y.m {
        normalize_monomial(
            ctx,
            &(&x.i + ctx.pow(x.m) * c),
            x.m + y.m - q,
            x.n + y.n - q,
            &y.j,
        )
    } else {
        normalize_monomial(
            ctx,
            &x.i,
            x.m,
            x.n + y.n - y.m,
            &(ctx.pow(y.n) * c + &y.j),
        )
    };
    Ok(Some(out))
}

/// Inserts the unit `sum_l U^l S^d S*^d U^-l` between `S^m` and `S*^n`,
/// producing `p^d` normal monomials at S*-power `target` whose sum is `x`.
pub fn expand_level(x: &Monomial, target: u32) -> Result<Vec<Monomial>> {
    if target < x.n {
        return Err(QpError::BadTarget {
            target,
            current: x.n,
        });
    }
    let ctx = x.ctx;
    let delta = target - x.n;
    if delta == 0 {
        return Ok(vec![x.clone()]);
    }
    let count = ctx.pow(delta);
    let step_left = ctx.pow(x.m);
    let step_right = ctx.pow(x.n);
    let mut out = Vec::new();
    let mut l = BigInt::zero();
    while l < count {
        out.push(normalize_monomial(
            ctx,
            &(&x.i + &l * &step_left),
            x.m + delta,
            x.n + delta,
            &(&x.j - &l * &step_right),
        ));
        l += 1;
    }
    Ok(out)
}

/// The monomial one level up whose expansion contains `x`, if `x` is not
/// already at the bottom level of its degree.
pub(crate) fn parent(x: &Monomial) -> Option<Monomial> {
    if x.m == 0 || x.n == 0 {
        return None;
    }
    Some(normalize_monomial(x.ctx, &x.i, x.m - 1, x.n - 1, &x.j))
}

/// Whether `[n] -> [kn]` is onto `Z/pZ`, by enumerating `{lk mod p}`.
pub fn residue_map_surjective(k: &BigInt, p: u32) -> bool {
    let p_big = BigInt::from(p);
    let mut hit = vec![false; p as usize];
    for l in 0..p {
        let r = (k * l).mod_floor(&p_big);
        let idx: usize = r.try_into().expect("residue below p");
        hit[idx] = true;
    }
    hit.into_iter().all(|b| b)
}

pub(crate) fn check_winding(ctx: AlgebraContext, k: &BigInt) -> Result<()> {
    if k.is_zero() {
        return Err(QpError::ZeroWinding);
    }
    if !k.gcd(&BigInt::from(ctx.p())).is_one() {
        return Err(QpError::NotCoprime {
            k: k.to_string(),
            p: ctx.p(),
        });
    }
    Ok(())
}

/// `chi_k` on a single monomial: `U^i S^m S*^n U^j -> U^{ki} S^m S*^n U^{kj}`.
pub fn chi_monomial(k: &BigInt, x: &Monomial) -> Result<Monomial> {
    check_winding(x.ctx, k)?;
    Ok(normalize_monomial(x.ctx, &(k * &x.i), x.m, x.n, &(k * &x.j)))
}

pub(crate) fn abs_u64(k: &BigInt) -> Option<u64> {
    k.abs().try_into().ok()
}
