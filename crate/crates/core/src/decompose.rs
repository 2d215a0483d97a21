//! Closed-form block decomposition of `Psi_h(x)` for a monomial word
//! `x = U^a S^m S*^n U^d`, with operator-norm checks.
//!
//! For `m >= n` every entry of `Psi_h(x)` is `0` or a single `U^e S^{m-n}`
//! with `-1 <= e <= p^{m-n}`, so `Psi_h(x) = sum_e R_e (x) U^e S^{m-n}` with
//! each `R_e` a partial permutation matrix. The case `m < n` is read off the
//! adjoint.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::algebra::{AlgebraContext, Monomial, Word};
use crate::element::{Coefficient, Element};
use crate::error::{QpError, Result};
use crate::matrix::{dimension, psi, OpMatrix, ScalarMatrix};
use crate::numeric::{self, PowerIteration, SparseOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DegreeCase {
    Positive,
    Zero,
    Negative,
}

impl DegreeCase {
    pub fn as_str(self) -> &'static str {
        match self {
            DegreeCase::Positive => "m>n",
            DegreeCase::Zero => "m=n",
            DegreeCase::Negative => "m<n",
        }
    }
}

/// Sign pattern of `(a, d)` after reduction to `|d| < p^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignCase {
    pub a_nonnegative: bool,
    pub d_positive: bool,
}

impl SignCase {
    pub fn label(self) -> &'static str {
        match (self.a_nonnegative, self.d_positive) {
            (true, false) => "a>=0,d<=0",
            (true, true) => "a>=0,d>0",
            (false, false) => "a<0,d<=0",
            (false, true) => "a<0,d>0",
        }
    }
}

/// `U^shift S^power`, or its adjoint `S*^power U^-shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorTag {
    pub power: u32,
    pub shift: i64,
    pub adjoint: bool,
}

impl OperatorTag {
    pub fn element(&self, ctx: AlgebraContext) -> Element {
        if self.adjoint {
            Element::word(ctx, 0, 0, self.power, -self.shift)
        } else {
            Element::word(ctx, self.shift, self.power, 0, 0)
        }
    }

    fn s_label(&self, star: &str) -> String {
        match self.power {
            1 => format!("S{star}"),
            k => format!("S{star}^{k}"),
        }
    }

    /// Label in parser syntax.
    pub fn label(&self, p: u32) -> String {
        if self.power == 0 {
            // the m = n tags 1, U, U* are self-describing
            let e = if self.adjoint { -self.shift } else { self.shift };
            return match e {
                0 => "1".into(),
                1 => "U".into(),
                -1 => "U'".into(),
                e => format!("U^{e}"),
            };
        }
        let big = u64::from(p).checked_pow(self.power).and_then(|v| i64::try_from(v).ok());
        let s = self.s_label("");
        let body = if Some(self.shift) == big {
            format!("{s}*U")
        } else {
            match self.shift {
                0 => s,
                1 => format!("U*{s}"),
                -1 => format!("U'*{s}"),
                e => format!("U^{e}*{s}"),
            }
        };
        if !self.adjoint {
            return body;
        }
        let s = self.s_label("'");
        if Some(self.shift) == big {
            format!("U'*{s}")
        } else {
            match self.shift {
                0 => s,
                -1 => format!("{s}*U"),
                e => format!("{s}*U^{}", -e),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiDecomposition {
    pub ctx: AlgebraContext,
    pub h: u32,
    pub case: DegreeCase,
    pub sign_case: SignCase,
    pub terms: Vec<(ScalarMatrix, OperatorTag)>,
}

impl PsiDecomposition {
    /// `sum R (x) tag` as a matrix of Elements.
    pub fn reassemble(&self) -> Result<OpMatrix> {
        let mut out = OpMatrix::zero(self.ctx, self.h)?;
        for (r, tag) in &self.terms {
            let t = tag.element(self.ctx);
            for (i, j, c) in r.nonzero() {
                let acc = out.get(i, j) + &t.scale(c);
                out.set(i, j, acc);
            }
        }
        let dim = out.dim();
        for i in 0..dim {
            for j in 0..dim {
                let c = out.get(i, j).canonicalize();
                out.set(i, j, c);
            }
        }
        Ok(out)
    }

    pub fn distinct_tags(&self) -> usize {
        self.terms.iter().map(|(_, t)| *t).collect::<std::collections::BTreeSet<_>>().len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(r, tag)| {
                let units: Vec<_> = r.nonzero().map(|(i, j, c)| json!([i, j, c.to_string()])).collect();
                json!({"tag": tag.label(self.ctx.p()), "units": units})
            })
            .collect();
        json!({
            "h": self.h,
            "p": self.ctx.p(),
            "case": self.case.as_str(),
            "sign_case": self.sign_case.label(),
            "terms": terms,
        })
    }
}

impl fmt::Display for PsiDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "case {} ({}), h = {}", self.case.as_str(), self.sign_case.label(), self.h)?;
        for (r, tag) in &self.terms {
            let units: Vec<String> = r.nonzero().map(|(i, j, _)| format!("e({i},{j})")).collect();
            writeln!(f, "  {} (x) {}", units.join(" + "), tag.label(self.ctx.p()))?;
        }
        Ok(())
    }
}

fn small(x: &BigInt, what: &str) -> Result<i64> {
    x.to_i64()
        .ok_or_else(|| QpError::Precondition(format!("{what} = {x} is too large")))
}

/// Decompose `Psi_h(U^a S^m S*^n U^d)` by the closed-form index formulas.
///
/// Requires `h > max(m, n)` and `|a|, |d| < p^h`. The word is first reduced
/// to `|d| < p^n` by moving multiples of `p^n` across `S*^n S^m`; the reduced
/// exponent `a` must still satisfy `|a| < p^h`.
pub fn decompose(ctx: AlgebraContext, h: u32, x: &Word) -> Result<PsiDecomposition> {
    if h <= x.m.max(x.n) {
        return Err(QpError::Precondition(format!(
            "h = {h} must exceed max(m, n) = {}",
            x.m.max(x.n)
        )));
    }
    let ph = ctx.pow(h);
    if x.i.abs() >= ph || x.j.abs() >= ph {
        return Err(QpError::Precondition(format!(
            "exponents must satisfy |i|, |j| < p^h = {ph}"
        )));
    }
    dimension(ctx, h)?;
    if x.m < x.n {
        let adj = Word::new(-&x.j, x.n, x.m, -&x.i);
        let mut dec = decompose_forward(ctx, h, &adj)?;
        dec.case = DegreeCase::Negative;
        for (r, tag) in dec.terms.iter_mut() {
            *r = r.transpose();
            tag.adjoint = true;
        }
        return Ok(dec);
    }
    decompose_forward(ctx, h, x)
}

/// Decompose a monomial given in normal form.
pub fn decompose_monomial(h: u32, x: &Monomial) -> Result<PsiDecomposition> {
    decompose(x.context(), h, &Word::from(x))
}

fn decompose_forward(ctx: AlgebraContext, h: u32, x: &Word) -> Result<PsiDecomposition> {
    let (m, n) = (x.m, x.n);
    debug_assert!(m >= n && h > m);
    let pn = ctx.pow(n);
    let pm = ctx.pow(m);
    let ph = ctx.pow(h);
    // truncated division keeps the sign of d, so |d| < p^n afterwards
    let q = &x.j / &pn;
    let d = &x.j - &q * &pn;
    let a = &x.i + &pm * &q;
    if a.abs() >= ph {
        return Err(QpError::Precondition(format!(
            "reduced exponent {a} is outside (-p^h, p^h)"
        )));
    }
    let (b, r) = a.div_mod_floor(&pm);
    let (b, r, d) = (small(&b, "b")?, small(&r, "r")?, small(&d, "d")?);
    let delta = i64::from(d > 0);
    let to_i = |v: BigInt| small(&v, "p-power");
    let (pn, pm) = (to_i(pn)?, to_i(pm)?);
    let block = to_i(ctx.pow(h - m))?;
    let wide = to_i(ctx.pow(m - n))?;
    let dim = usize::try_from(to_i(ph)?).expect("dimension checked");

    let mut mats: BTreeMap<i64, ScalarMatrix> = BTreeMap::new();
    let one = Coefficient::one();
    for i2 in 0..block {
        let j3 = (i2 - b - delta).rem_euclid(block);
        let s = b - i2 + delta + j3;
        if s % block != 0 {
            return Err(QpError::Internal(format!("carry residue {s} mod {block}")));
        }
        let carry = s / block;
        if !(-1..=1).contains(&carry) {
            return Err(QpError::Internal(format!("carry {carry} out of range")));
        }
        let row = r + i2 * pm;
        for j4 in 0..wide {
            let e = carry + j4;
            let col = pn * (delta + j3 + j4 * block) - d;
            if !(0..dim as i64).contains(&row) || !(0..dim as i64).contains(&col) {
                return Err(QpError::Internal(format!("matrix unit ({row},{col}) out of range")));
            }
            mats.entry(e)
                .or_insert_with(|| ScalarMatrix::zero(dim))
                .add_at(row as usize, col as usize, &one);
        }
    }
    let terms = mats
        .into_iter()
        .map(|(e, r)| {
            (
                r,
                OperatorTag {
                    power: m - n,
                    shift: e,
                    adjoint: false,
                },
            )
        })
        .collect();
    Ok(PsiDecomposition {
        ctx,
        h,
        case: if m > n { DegreeCase::Positive } else { DegreeCase::Zero },
        sign_case: SignCase {
            a_nonnegative: !a.is_negative(),
            d_positive: d > 0,
        },
        terms,
    })
}

/// Whether the decomposition reassembles to `Psi_h` of the word.
pub fn reassembly_matches(dec: &PsiDecomposition, x: &Word) -> Result<bool> {
    let target = psi(dec.h, &Element::from(x.normalize(dec.ctx)))?;
    dec.reassemble()?.equals(&target)
}

/// `A = sum_t Q_t (x) U^{e_t} S^k` with pairwise distinct shifts `e_t`,
/// acting on `C^d (x) l^2(Z)`. Covers both operators of the norm inequality:
/// shifts `0, P, -P, 1, -1` with `P = p^k` for `k > 0`, and `0, 1, -1` for `k = 0`.
#[derive(Clone, Debug)]
pub struct ShiftSum {
    pub p: u32,
    pub power: u32,
    pub terms: Vec<(Vec<f64>, i64)>,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct WitnessCheck {
    pub shift: i64,
    /// `||Q_t||` by power iteration.
    pub coefficient_norm: f64,
    /// `|(A(x (x) e_1), x' (x) e_{P+e_t})|` on the truncated operator.
    pub witness: f64,
    /// `|(Q_t x, x')|` for the same unit vectors.
    pub expected: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct NormInequalityReport {
    pub window: u64,
    pub operator_norm: f64,
    pub checks: Vec<WitnessCheck>,
}

impl NormInequalityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl ShiftSum {
    pub fn new(p: u32, power: u32, dim: usize) -> Self {
        ShiftSum {
            p,
            power,
            terms: Vec::new(),
            dim,
        }
    }

    pub fn push(&mut self, q: Vec<f64>, shift: i64) {
        assert_eq!(q.len(), self.dim * self.dim);
        assert!(self.terms.iter().all(|(_, e)| *e != shift), "shifts must be distinct");
        self.terms.push((q, shift));
    }

    fn big_p(&self) -> i64 {
        i64::from(self.p).pow(self.power)
    }

    /// The compression of `A` to `C^d (x) span{e_k : |k| <= N}`.
    pub fn truncated(&self, window: u64) -> SparseOperator {
        let n = window as i64;
        let width = (2 * n + 1) as usize;
        let rows = self.dim * width;
        let big = self.big_p();
        let mut op = SparseOperator::new(rows);
        for a in 0..self.dim {
            for k in -n..=n {
                let mut col = Vec::new();
                for (q, e) in &self.terms {
                    let target = big * k + e;
                    if target.abs() > n {
                        continue;
                    }
                    let slot = (target + n) as usize;
                    for b in 0..self.dim {
                        let v = q[b * self.dim + a];
                        if v != 0.0 {
                            col.push((b * width + slot, v));
                        }
                    }
                }
                op.push_column(col);
            }
        }
        op
    }

    /// Checks `||Q_t|| <= ||A||` through the witness vectors `y = e_1`,
    /// `y' = pi(U^{e_t} S^k) e_1`.
    pub fn check(&self, window: u64, power: &PowerIteration, tolerance: f64) -> NormInequalityReport {
        let n = window as i64;
        let width = (2 * n + 1) as usize;
        let big = self.big_p();
        assert!(big + self.terms.iter().map(|(_, e)| e.abs()).max().unwrap_or(0) <= n);
        let op = self.truncated(window);
        let embed = |v: &[f64], k: i64| {
            let mut out = vec![0.0; self.dim * width];
            for (a, &x) in v.iter().enumerate() {
                out[a * width + (k + n) as usize] = x;
            }
            out
        };

        let mut operator_norm: f64 = 0.0;
        let mut best_start: Option<Vec<f64>> = None;
        let mut partial = Vec::new();
        for (q, e) in &self.terms {
            let qop = SparseOperator::from_dense(self.dim, self.dim, q);
            let est = qop.norm_estimate_restarted(power);
            let x = est.right.clone();
            let mut xp = qop.apply(&x);
            let expected = numeric::normalize(&mut xp);
            let image = op.apply(&embed(&x, 1));
            let probe = embed(&xp, big + e);
            let witness: f64 = image.iter().zip(&probe).map(|(u, v)| u * v).sum::<f64>().abs();
            let image_norm = numeric::norm(&image);
            if image_norm > operator_norm {
                operator_norm = image_norm;
                best_start = Some(embed(&x, 1));
            }
            partial.push((*e, est.value, witness, expected));
        }
        if let Some(start) = best_start {
            let refine = PowerIteration {
                max_iterations: power.max_iterations.min(25),
                ..*power
            };
            operator_norm = operator_norm.max(op.norm_estimate(&refine, Some(&start)).value);
        }
        let checks = partial
            .into_iter()
            .map(|(shift, coefficient_norm, witness, expected)| WitnessCheck {
                shift,
                coefficient_norm,
                witness,
                expected,
                passed: (witness - expected).abs() <= tolerance
                    && coefficient_norm <= operator_norm + tolerance,
            })
            .collect();
        NormInequalityReport {
            window,
            operator_norm,
            checks,
        }
    }

    /// Random quintuple (`power > 0`) or triple (`power = 0`) of `dim x dim`
    /// coefficient matrices with entries in `[-1, 1]`.
    pub fn random(p: u32, power: u32, dim: usize, rng: &mut impl Rng) -> Self {
        let big = i64::from(p).pow(power);
        let shifts: Vec<i64> = if power == 0 {
            vec![0, 1, -1]
        } else {
            vec![0, big, -big, 1, -1]
        };
        let mut sum = ShiftSum::new(p, power, dim);
        for e in shifts {
            sum.push((0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(), e);
        }
        sum
    }

    /// Random family from a seed, for reproducible sweeps.
    pub fn seeded(p: u32, power: u32, dim: usize, seed: u64) -> Self {
        ShiftSum::random(p, power, dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

#[derive(Clone, Debug)]
pub struct NormBoundReport {
    pub bounds: Vec<(String, f64)>,
    pub witness: NormInequalityReport,
    pub tolerance: f64,
}

impl NormBoundReport {
    /// Every coefficient matrix has norm at most `||x|| = 1`.
    pub fn bounds_hold(&self) -> bool {
        self.bounds.iter().all(|(_, v)| *v <= 1.0 + self.tolerance)
    }

    pub fn passed(&self) -> bool {
        self.bounds_hold() && self.witness.passed()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let bounds: Vec<_> = self
            .bounds
            .iter()
            .map(|(tag, v)| json!({"tag": tag, "norm": v, "passed": *v <= 1.0 + self.tolerance}))
            .collect();
        let witnesses: Vec<_> = self
            .witness
            .checks
            .iter()
            .map(|c| {
                json!({
                    "shift": c.shift,
                    "coefficient_norm": c.coefficient_norm,
                    "witness": c.witness,
                    "passed": c.passed,
                })
            })
            .collect();
        json!({
            "bounds": bounds,
            "operator_norm": self.witness.operator_norm,
            "window": self.witness.window,
            "witnesses": witnesses,
            "passed": self.passed(),
        })
    }
}

/// Norms of the coefficient matrices of `dec` against `||x|| = 1`, and the
/// witness inequalities for `A = Psi_h(x)` itself on the window `[-N, N]`.
pub fn check_norm_bounds(dec: &PsiDecomposition, window: u64, power: &PowerIteration, tolerance: f64) -> NormBoundReport {
    let p = dec.ctx.p();
    let bounds = dec
        .terms
        .iter()
        .map(|(r, tag)| (tag.label(p), r.norm_estimate(power).value))
        .collect();
    // the adjoint case is checked on Psi_h(x)* which has the same norm
    let power_k = dec.terms.first().map_or(0, |(_, t)| t.power);
    let dim = dec.terms.first().map_or(1, |(r, _)| r.dim());
    let mut sum = ShiftSum::new(p, power_k, dim);
    for (r, tag) in &dec.terms {
        let r = if tag.adjoint { r.transpose() } else { r.clone() };
        sum.push(r.to_f64(), tag.shift);
    }
    let reach = i64::from(p).pow(power_k) + 2;
    let window = window.max(reach as u64);
    NormBoundReport {
        bounds,
        witness: sum.check(window, power, tolerance),
        tolerance,
    }
}

/// Whether every `R` is zero-or-one with at most one nonzero per row and column.
pub fn is_partial_permutation(r: &ScalarMatrix) -> bool {
    let dim = r.dim();
    let mut rows = vec![false; dim];
    let mut cols = vec![false; dim];
    for (i, j, c) in r.nonzero() {
        if !c.is_one() || rows[i] || cols[j] {
            return false;
        }
        rows[i] = true;
        cols[j] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    fn ctx(p: u32) -> AlgebraContext {
        AlgebraContext::new(p).unwrap()
    }

    #[test]
    fn unitary_at_level_one() {
        let c = ctx(2);
        let dec = decompose(c, 1, &Word::new(1, 0, 0, 0)).unwrap();
        assert_eq!(dec.case, DegreeCase::Zero);
        let by_label: BTreeMap<String, Vec<(usize, usize)>> = dec
            .terms
            .iter()
            .map(|(r, t)| (t.label(2), r.nonzero().map(|(i, j, _)| (i, j)).collect()))
            .collect();
        assert_eq!(by_label["1"], vec![(1, 0)]);
        assert_eq!(by_label["U"], vec![(0, 1)]);
        assert!(!by_label.contains_key("U'"));
        assert!(reassembly_matches(&dec, &Word::new(1, 0, 0, 0)).unwrap());
    }

    #[test]
    fn identity_is_diagonal() {
        for h in 1..=3 {
            let dec = decompose(ctx(2), h, &Word::new(0, 0, 0, 0)).unwrap();
            assert_eq!(dec.terms.len(), 1);
            assert_eq!(dec.terms[0].0, ScalarMatrix::identity(1 << h));
            assert_eq!(dec.terms[0].1.label(2), "1");
        }
    }

    #[test]
    fn isometry_reassembles() {
        let c = ctx(2);
        let x = Word::new(0, 1, 0, 0);
        let dec = decompose(c, 2, &x).unwrap();
        assert_eq!(dec.case, DegreeCase::Positive);
        assert!(reassembly_matches(&dec, &x).unwrap());
    }

    #[test]
    fn small_sweep_all_cases() {
        for p in [2u32, 3] {
            let c = ctx(p);
            for h in 1..=2u32 {
                let ph = i64::from(p).pow(h);
                for m in 0..h {
                    for n in 0..h {
                        for a in -(ph - 1)..ph {
                            for d in -(ph - 1)..ph {
                                let x = Word::new(a, m, n, d);
                                match decompose(c, h, &x) {
                                    Ok(dec) => {
                                        assert!(reassembly_matches(&dec, &x).unwrap(), "{p} {h} {a} {m} {n} {d}");
                                        assert!(dec.terms.iter().all(|(r, _)| is_partial_permutation(r)));
                                        if m > n {
                                            assert!(dec.distinct_tags() <= p.pow(m - n) as usize + 2);
                                        }
                                    }
                                    Err(QpError::Precondition(_)) => {}
                                    Err(e) => panic!("{e}"),
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn preconditions() {
        let c = ctx(2);
        assert!(matches!(decompose(c, 1, &Word::new(0, 1, 0, 0)), Err(QpError::Precondition(_))));
        assert!(matches!(decompose(c, 2, &Word::new(4, 0, 0, 0)), Err(QpError::Precondition(_))));
    }

    #[test]
    fn labels_parse_back() {
        let c = ctx(2);
        for x in [Word::new(3, 1, 1, 0), Word::new(-3, 2, 0, 1), Word::new(1, 0, 2, -5)] {
            let dec = decompose(c, 3, &x).unwrap();
            for (_, tag) in &dec.terms {
                assert!(parse(&tag.label(2), c).unwrap().equals(&tag.element(c)).unwrap(), "{}", tag.label(2));
            }
        }
    }

    #[test]
    fn norm_bounds_for_projection_word() {
        let c = ctx(2);
        let x = parse("U^3*S*S'", c).unwrap();
        let dec = decompose_monomial(3, x.as_monomial().unwrap()).unwrap();
        let report = check_norm_bounds(&dec, 64, &PowerIteration::default(), 1e-6);
        assert!(report.passed(), "{:?}", report);
        for (_, v) in &report.bounds {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn random_quintuples() {
        for seed in 0..5 {
            let sum = ShiftSum::seeded(2, 1 + (seed % 2) as u32, 3, seed);
            let report = sum.check(256, &PowerIteration::default(), 1e-9);
            assert!(report.passed(), "{report:?}");
        }
        let sum = ShiftSum::seeded(3, 0, 2, 7);
        assert!(sum.check(64, &PowerIteration::default(), 1e-9).passed());
    }
}
