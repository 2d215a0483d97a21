//! The canonical representation on `l^2(Z)`: `S e_k = e_{pk}`, `U e_k = e_{k+1}`.
//!
//! Every monomial maps basis vectors to basis vectors or to zero, so identity
//! checks run on exact integers with no truncation. Windows are only used to
//! estimate operator norms.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraContext, Monomial, Word};
use crate::element::{Coefficient, Element};
use crate::numeric::{PowerIteration, SparseOperator};

/// A finitely supported vector in `l^2(Z)` with exact coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepVector {
    coords: BTreeMap<BigInt, Coefficient>,
}

impl RepVector {
    pub fn zero() -> Self {
        RepVector::default()
    }

    pub fn basis(k: impl Into<BigInt>) -> Self {
        let mut v = RepVector::zero();
        v.add(k.into(), Coefficient::from_integer(1.into()));
        v
    }

    pub fn add(&mut self, k: BigInt, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        match self.coords.entry(k) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> impl Iterator<Item = (&BigInt, &Coefficient)> {
        self.coords.iter()
    }

    pub fn get(&self, k: &BigInt) -> Option<&Coefficient> {
        self.coords.get(k)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.coords
                .iter()
                .map(|(k, c)| {
                    serde_json::json!({
                        "k": k.to_string(),
                        "num": c.numer().to_string(),
                        "den": c.denom().to_string(),
                    })
                })
                .collect(),
        )
    }
}

/// Precomputed action of one monomial: `e_k -> e_{p^m (k+j)/p^n + i}` when
/// `p^n | k + j`, else zero.
#[derive(Clone, Debug)]
pub struct MonomialAction {
    i: BigInt,
    j: BigInt,
    pm: BigInt,
    pn: BigInt,
    small: Option<[i128; 4]>,
}

impl MonomialAction {
    pub fn new(x: &Monomial) -> Self {
        let ctx = x.context();
        let (pm, pn) = (ctx.pow(x.m()), ctx.pow(x.n()));
        let small = (|| Some([x.i().to_i128()?, x.j().to_i128()?, pm.to_i128()?, pn.to_i128()?]))();
        MonomialAction {
            i: x.i().clone(),
            j: x.j().clone(),
            pm,
            pn,
            small,
        }
    }

    pub fn apply(&self, k: &BigInt) -> Option<BigInt> {
        if let Some(k) = k.to_i128() {
            if let Some(out) = self.apply_small(k) {
                return out.map(BigInt::from);
            }
        }
        let (q, r) = (k + &self.j).div_mod_floor(&self.pn);
        if !r.is_zero() {
            return None;
        }
        Some(&self.pm * q + &self.i)
    }

    /// `None` when the computation leaves the `i128` range.
    pub fn apply_small(&self, k: i128) -> Option<Option<i128>> {
        let [i, j, pm, pn] = self.small?;
        let t = k.checked_add(j)?;
        if t.rem_euclid(pn) != 0 {
            return Some(None);
        }
        let out = pm.checked_mul(t.div_euclid(pn))?.checked_add(i)?;
        Some(Some(out))
    }
}

/// `pi(x) e_k` as a basis index, or `None` when annihilated.
pub fn act_monomial(x: &Monomial, k: &BigInt) -> Option<BigInt> {
    MonomialAction::new(x).apply(k)
}

/// One generator of the algebra, applied to basis vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    U,
    S,
    SAdj,
}

/// A product `g_1^{e_1} ... g_r^{e_r}` of generator powers. Powers of `S`
/// and `S*` must be nonnegative.
pub type GeneratorWord = Vec<(Generator, i64)>;

/// The generator word `U^i S^m S*^n U^j` of a raw word.
pub fn generator_word(w: &Word) -> Option<GeneratorWord> {
    Some(vec![
        (Generator::U, w.i.to_i64()?),
        (Generator::S, w.m as i64),
        (Generator::SAdj, w.n as i64),
        (Generator::U, w.j.to_i64()?),
    ])
}

/// Applies a generator word to `e_k`, rightmost factor first, one generator
/// step at a time.
pub fn act_generators(p: u32, word: &[(Generator, i64)], k: &BigInt) -> Option<BigInt> {
    if let Some(small) = k.to_i128() {
        if let Some(out) = act_generators_small(p, word, small) {
            return out.map(BigInt::from);
        }
    }
    let p = BigInt::from(p);
    let mut k = k.clone();
    for &(g, e) in word.iter().rev() {
        match g {
            Generator::U => k += e,
            Generator::S => {
                for _ in 0..e {
                    k *= &p;
                }
            }
            Generator::SAdj => {
                for _ in 0..e {
                    let (q, r) = k.div_mod_floor(&p);
                    if !r.is_zero() {
                        return None;
                    }
                    k = q;
                }
            }
        }
    }
    Some(k)
}

pub fn act_generators_small(p: u32, word: &[(Generator, i64)], k: i128) -> Option<Option<i128>> {
    let p = p as i128;
    let mut k = k;
    for &(g, e) in word.iter().rev() {
        match g {
            Generator::U => k = k.checked_add(e as i128)?,
            Generator::S => {
                for _ in 0..e {
                    k = k.checked_mul(p)?;
                }
            }
            Generator::SAdj => {
                for _ in 0..e {
                    if k.rem_euclid(p) != 0 {
                        return Some(None);
                    }
                    k = k.div_euclid(p);
                }
            }
        }
    }
    Some(Some(k))
}

/// Precomputed linear action of an element.
#[derive(Clone, Debug)]
pub struct ElementAction {
    terms: Vec<(MonomialAction, Coefficient)>,
}

impl ElementAction {
    pub fn new(x: &Element) -> Self {
        ElementAction {
            terms: x
                .terms()
                .map(|(m, c)| (MonomialAction::new(m), c.clone()))
                .collect(),
        }
    }

    pub fn apply_basis(&self, k: &BigInt) -> RepVector {
        let mut out = RepVector::zero();
        for (a, c) in &self.terms {
            if let Some(k2) = a.apply(k) {
                out.add(k2, c.clone());
            }
        }
        out
    }

    pub fn apply(&self, v: &RepVector) -> RepVector {
        let mut out = RepVector::zero();
        for (k, vc) in v.coords() {
            for (a, c) in &self.terms {
                if let Some(k2) = a.apply(k) {
                    out.add(k2, c * vc);
                }
            }
        }
        out
    }

    /// Whether `pi(x) e_k = 0` for every `|k| <= range`.
    pub fn annihilates_window(&self, range: i64) -> bool {
        let mut acc: BTreeMap<i128, Coefficient> = BTreeMap::new();
        for k in -range..=range {
            acc.clear();
            for (a, c) in &self.terms {
                match a.apply_small(k as i128) {
                    Some(Some(k2)) => {
                        let slot = acc.entry(k2).or_insert_with(Coefficient::zero);
                        *slot += c;
                    }
                    Some(None) => {}
                    None => return self.annihilates_big(k, range),
                }
            }
            if acc.values().any(|c| !c.is_zero()) {
                return false;
            }
        }
        true
    }

    fn annihilates_big(&self, from: i64, range: i64) -> bool {
        (from..=range).all(|k| self.apply_basis(&BigInt::from(k)).is_zero())
    }
}

/// Exact linear action of `x` on `v`.
pub fn act_element(x: &Element, v: &RepVector) -> RepVector {
    ElementAction::new(x).apply(v)
}

/// Oracle equality: `pi(x - y) e_k = 0` for all `|k| <= range`.
pub fn oracle_equal(x: &Element, y: &Element, range: i64) -> bool {
    ElementAction::new(&(x - y)).annihilates_window(range)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub k: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: String,
    pub checked_range: u64,
    pub violations: Vec<Violation>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

type Combination = Vec<(i64, GeneratorWord)>;

fn eval_combination(p: u32, comb: &Combination, k: i64) -> BTreeMap<BigInt, i64> {
    let mut out = BTreeMap::new();
    for (c, word) in comb {
        if let Some(k2) = act_generators(p, word, &BigInt::from(k)) {
            *out.entry(k2).or_insert(0) += c;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn check_relation(p: u32, name: String, lhs: &Combination, rhs: &Combination, range: u64) -> RelationReport {
    let r = range as i64;
    let mut violations = Vec::new();
    for k in -r..=r {
        let (a, b) = (eval_combination(p, lhs, k), eval_combination(p, rhs, k));
        if a != b {
            violations.push(Violation {
                k: k.to_string(),
                detail: format!("lhs {a:?} != rhs {b:?}"),
            });
        }
    }
    RelationReport {
        relation: name,
        checked_range: range,
        violations,
    }
}

/// Largest `m` used for the relation `S*^m U^-i U^j S^m = delta_ij`.
pub const DELTA_RELATION_MAX_M: u32 = 2;

/// Checks the defining relations and their consequences on `e_k`, `|k| <= range`.
pub fn verify_relations(ctx: AlgebraContext, range: u64) -> Vec<RelationReport> {
    use Generator::*;
    let p = ctx.p();
    let pi = p as i64;
    let mut reports = Vec::new();

    reports.push(check_relation(
        p,
        "U^p S = S U".into(),
        &vec![(1, vec![(U, pi), (S, 1)])],
        &vec![(1, vec![(S, 1), (U, 1)])],
        range,
    ));
    let partition: Combination = (0..pi)
        .map(|l| (1, vec![(U, l), (S, 1), (SAdj, 1), (U, -l)]))
        .collect();
    reports.push(check_relation(
        p,
        "sum_l U^l S S* U^-l = 1".into(),
        &partition,
        &vec![(1, vec![])],
        range,
    ));
    reports.push(check_relation(
        p,
        "U S* = S* U^p".into(),
        &vec![(1, vec![(U, 1), (SAdj, 1)])],
        &vec![(1, vec![(SAdj, 1), (U, pi)])],
        range,
    ));
    reports.push(check_relation(
        p,
        "U* S* = S* U^-p".into(),
        &vec![(1, vec![(U, -1), (SAdj, 1)])],
        &vec![(1, vec![(SAdj, 1), (U, -pi)])],
        range,
    ));

    let r = range as i64;
    let mut delta = RelationReport {
        relation: format!("S*^m U^-i U^j S^m = delta_ij (m <= {DELTA_RELATION_MAX_M})"),
        checked_range: range,
        violations: Vec::new(),
    };
    for m in 1..=DELTA_RELATION_MAX_M as i64 {
        let pm = pi.pow(m as u32);
        for i in 0..pm {
            for j in 0..pm {
                let word = vec![(SAdj, m), (U, -i), (U, j), (S, m)];
                for k in -r..=r {
                    let got = act_generators_small(p, &word, k as i128).expect("small indices");
                    let ok = if i == j { got == Some(k as i128) } else { got.is_none() };
                    if !ok {
                        delta.violations.push(Violation {
                            k: k.to_string(),
                            detail: format!("m={m} i={i} j={j}: image {got:?}"),
                        });
                    }
                }
            }
        }
    }
    reports.push(delta);
    reports
}

/// Truncation window `[-n, n]` for norm estimation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub n: u64,
    pub power: PowerIteration,
}

impl Window {
    pub const DEFAULT_N: u64 = 1 << 12;

    pub fn new(n: u64) -> Self {
        Window {
            n: n.max(1),
            power: PowerIteration::default(),
        }
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::new(Window::DEFAULT_N)
    }
}

/// The compression of `pi(x)` to basis indices `[-N, N]`.
#[derive(Clone, Debug)]
pub struct TruncatedMatrix {
    pub n: i64,
    /// `columns[c]` lists `(row index k', coefficient)` for column index `k = c - n`.
    pub columns: Vec<Vec<(i64, Coefficient)>>,
    /// Column `k` whose image under `pi(x)` leaves the window.
    pub column_boundary: Vec<bool>,
    /// Row `k'` whose preimage under `pi(x)` reaches outside the window.
    pub row_boundary: Vec<bool>,
}

impl TruncatedMatrix {
    pub fn entry(&self, row: i64, col: i64) -> Coefficient {
        self.columns[(col + self.n) as usize]
            .iter()
            .find(|(r, _)| *r == row)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Coefficient::zero)
    }

    fn interior_operator(&self) -> SparseOperator {
        let dim = (2 * self.n + 1) as usize;
        let mut op = SparseOperator::new(dim);
        for (col, boundary) in self.columns.iter().zip(&self.column_boundary) {
            if *boundary {
                continue;
            }
            op.push_column(
                col.iter()
                    .map(|(r, c)| ((r + self.n) as usize, c.to_f64().expect("finite coefficient")))
                    .collect(),
            );
        }
        op
    }
}

fn window_images(x: &Element, n: i64) -> (Vec<Vec<(i64, Coefficient)>>, Vec<bool>) {
    let action = ElementAction::new(x);
    let mut columns = Vec::with_capacity((2 * n + 1) as usize);
    let mut boundary = Vec::with_capacity((2 * n + 1) as usize);
    for k in -n..=n {
        let image = action.apply_basis(&BigInt::from(k));
        let mut col = Vec::new();
        let mut escapes = false;
        for (k2, c) in image.coords() {
            match k2.to_i64() {
                Some(r) if r.abs() <= n => col.push((r, c.clone())),
                _ => escapes = true,
            }
        }
        columns.push(col);
        boundary.push(escapes);
    }
    (columns, boundary)
}

pub fn truncated_matrix(x: &Element, w: &Window) -> TruncatedMatrix {
    let n = w.n as i64;
    let (columns, column_boundary) = window_images(x, n);
    let (_, row_boundary) = window_images(&x.adjoint(), n);
    TruncatedMatrix {
        n,
        columns,
        column_boundary,
        row_boundary,
    }
}

/// Lower bound for `||pi(x)||` from power iteration on the interior columns.
pub fn op_norm_estimate(x: &Element, w: &Window) -> f64 {
    truncated_matrix(x, w)
        .interior_operator()
        .norm_estimate(&w.power, None)
        .value
}
