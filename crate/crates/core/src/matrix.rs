//! The isomorphism `Psi_h : Q_p -> M_{p^h}(Q_p)`,
//! `Psi_h(x)_{ij} = S*^h U^-i x U^j S^h`, and its inverse.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::algebra::{normalize_monomial, AlgebraContext};
use crate::element::{Coefficient, Element};
use crate::error::{QpError, Result};
use crate::numeric::{NormEstimate, PowerIteration, SparseOperator};

/// `p^h` as a matrix dimension.
pub fn dimension(ctx: AlgebraContext, h: u32) -> Result<usize> {
    ctx.pow(h)
        .to_usize()
        .filter(|&d| d <= 1 << 16)
        .ok_or_else(|| QpError::Range(format!("p^h = {}^{h} is too large for a matrix", ctx.p())))
}

/// A `p^h x p^h` matrix with entries in the algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpMatrix {
    ctx: AlgebraContext,
    h: u32,
    dim: usize,
    entries: Vec<Element>,
}

impl OpMatrix {
    pub fn zero(ctx: AlgebraContext, h: u32) -> Result<Self> {
        let dim = dimension(ctx, h)?;
        Ok(OpMatrix {
            ctx,
            h,
            dim,
            entries: vec![Element::zero(ctx); dim * dim],
        })
    }

    pub fn identity(ctx: AlgebraContext, h: u32) -> Result<Self> {
        let mut m = OpMatrix::zero(ctx, h)?;
        for i in 0..m.dim {
            m.set(i, i, Element::one(ctx));
        }
        Ok(m)
    }

    pub fn context(&self) -> AlgebraContext {
        self.ctx
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Element {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Element) {
        self.entries[i * self.dim + j] = x;
    }

    /// Matrix product with entries canonicalized.
    pub fn checked_mul(&self, other: &OpMatrix) -> Result<OpMatrix> {
        self.ctx.check_same(&other.ctx)?;
        if self.dim != other.dim {
            return Err(QpError::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = OpMatrix::zero(self.ctx, self.h)?;
        for i in 0..self.dim {
            for k in 0..self.dim {
                let a = self.get(i, k);
                if a.is_empty() {
                    continue;
                }
                for j in 0..self.dim {
                    let b = other.get(k, j);
                    if b.is_empty() {
                        continue;
                    }
                    let acc = &out.entries[i * self.dim + j] + &(a * b);
                    out.set(i, j, acc);
                }
            }
        }
        out.entries.iter_mut().for_each(|e| *e = e.canonicalize());
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Element::is_zero)
    }

    /// Entrywise equality in the algebra.
    pub fn equals(&self, other: &OpMatrix) -> Result<bool> {
        self.ctx.check_same(&other.ctx)?;
        if self.dim != other.dim {
            return Ok(false);
        }
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if !a.equals(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("matrix serializes")
    }
}

impl Serialize for OpMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[Element]> = self.entries.chunks(self.dim).collect();
        let mut st = s.serialize_struct("OpMatrix", 3)?;
        st.serialize_field("h", &self.h)?;
        st.serialize_field("p", &self.ctx.p())?;
        st.serialize_field("entries", &rows)?;
        st.end()
    }
}

/// `Psi_h(x)`, entries canonicalized.
pub fn psi(h: u32, x: &Element) -> Result<OpMatrix> {
    if h == 0 {
        return Err(QpError::Precondition("psi needs h >= 1".into()));
    }
    let ctx = x.context();
    let mut out = OpMatrix::zero(ctx, h)?;
    let zero = BigInt::zero();
    for i in 0..out.dim {
        let left = Element::from(normalize_monomial(ctx, &zero, 0, h, &-BigInt::from(i)));
        let lx = &left * x;
        if lx.is_empty() {
            continue;
        }
        for j in 0..out.dim {
            let right = Element::from(normalize_monomial(ctx, &BigInt::from(j), h, 0, &zero));
            out.set(i, j, (&lx * &right).canonicalize());
        }
    }
    Ok(out)
}

/// `sum_{i,j} U^i S^h M_{ij} S*^h U^-j`.
pub fn psi_inverse(h: u32, m: &OpMatrix) -> Result<Element> {
    let ctx = m.ctx;
    let dim = dimension(ctx, h)?;
    if m.dim != dim {
        return Err(QpError::Dimension {
            expected: dim,
            found: m.dim,
        });
    }
    let zero = BigInt::zero();
    let mut out = Element::zero(ctx);
    for i in 0..dim {
        let left = Element::from(normalize_monomial(ctx, &BigInt::from(i), h, 0, &zero));
        for j in 0..dim {
            let entry = m.get(i, j);
            if entry.is_empty() {
                continue;
            }
            let right = Element::from(normalize_monomial(ctx, &zero, 0, h, &-BigInt::from(j)));
            out = &out + &(&(&left * entry) * &right);
        }
    }
    Ok(out.canonicalize())
}

/// A square matrix of exact scalars.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarMatrix {
    dim: usize,
    entries: Vec<Coefficient>,
}

impl ScalarMatrix {
    pub fn zero(dim: usize) -> Self {
        ScalarMatrix {
            dim,
            entries: vec![Coefficient::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = ScalarMatrix::zero(dim);
        for i in 0..dim {
            m.set(i, i, Coefficient::from_integer(1.into()));
        }
        m
    }

    /// The matrix unit `e_{ij}`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = ScalarMatrix::zero(dim);
        m.set(i, j, Coefficient::from_integer(1.into()));
        m
    }

    pub fn from_f64_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut m = ScalarMatrix::zero(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "square matrix expected");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, Coefficient::from_float(v).expect("finite entry"));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Coefficient {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, c: Coefficient) {
        self.entries[i * self.dim + j] = c;
    }

    pub fn add_at(&mut self, i: usize, j: usize, c: &Coefficient) {
        self.entries[i * self.dim + j] += c;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> ScalarMatrix {
        let mut t = ScalarMatrix::zero(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, &Coefficient)> {
        let dim = self.dim;
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(k, c)| (k / dim, k % dim, c))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|c| c.to_f64().expect("finite entry"))
            .collect()
    }

    pub fn operator(&self) -> SparseOperator {
        SparseOperator::from_dense(self.dim, self.dim, &self.to_f64())
    }

    /// Operator norm by power iteration on `R^T R`.
    pub fn norm_estimate(&self, params: &PowerIteration) -> NormEstimate {
        self.operator().norm_estimate_restarted(params)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<String>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).to_string()).collect())
            .collect();
        serde_json::json!(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    fn ctx(p: u32) -> AlgebraContext {
        AlgebraContext::new(p).unwrap()
    }

    #[test]
    fn psi_of_u() {
        let c = ctx(2);
        let m = psi(1, &parse("U", c).unwrap()).unwrap();
        assert_eq!(m.get(0, 0), &Element::zero(c));
        assert_eq!(m.get(0, 1), &parse("U", c).unwrap());
        assert_eq!(m.get(1, 0), &Element::one(c));
        assert_eq!(m.get(1, 1), &Element::zero(c));
        assert_eq!(psi_inverse(1, &m).unwrap(), parse("U", c).unwrap());
    }

    #[test]
    fn psi_of_one_and_projection() {
        for (p, h) in [(2, 1), (2, 3), (3, 2)] {
            let c = ctx(p);
            let m = psi(h, &Element::one(c)).unwrap();
            assert_eq!(m, OpMatrix::identity(c, h).unwrap());
        }
        let c = ctx(2);
        let m = psi(1, &parse("S*S'", c).unwrap()).unwrap();
        let mut expected = OpMatrix::zero(c, 1).unwrap();
        expected.set(0, 0, Element::one(c));
        assert_eq!(m, expected);
        assert_eq!(psi_inverse(1, &expected).unwrap(), parse("S*S'", c).unwrap());
    }

    #[test]
    fn psi_is_multiplicative() {
        let c = ctx(3);
        let x = parse("U^4*S*S'^2*U^7 + 2*S'", c).unwrap();
        let y = parse("U^-2*S^2 - U", c).unwrap();
        for h in 1..=2 {
            let lhs = psi(h, &(&x * &y)).unwrap();
            let rhs = psi(h, &x).unwrap().checked_mul(&psi(h, &y).unwrap()).unwrap();
            assert!(lhs.equals(&rhs).unwrap());
            assert_eq!(psi_inverse(h, &psi(h, &x).unwrap()).unwrap(), x.canonicalize());
        }
    }

    #[test]
    fn inverse_dimension_check() {
        let c = ctx(2);
        let m = OpMatrix::identity(c, 2).unwrap();
        assert_eq!(
            psi_inverse(1, &m).unwrap_err(),
            QpError::Dimension {
                expected: 2,
                found: 4
            }
        );
        assert!(psi(0, &Element::one(c)).is_err());
    }

    #[test]
    fn json_shape() {
        let c = ctx(2);
        let v = psi(1, &parse("U", c).unwrap()).unwrap().to_json();
        assert_eq!(v["h"], 1);
        assert_eq!(v["p"], 2);
        assert_eq!(v["entries"][1][0], Element::one(c).to_json());
    }

    #[test]
    fn scalar_norms() {
        assert!((ScalarMatrix::unit(4, 1, 2).norm_estimate(&PowerIteration::default()).value - 1.0).abs() < 1e-12);
        let m = ScalarMatrix::from_f64_rows(&[vec![3.0, 0.0], vec![4.0, 0.0]]);
        assert!((m.norm_estimate(&PowerIteration::default()).value - 5.0).abs() < 1e-9);
        assert_eq!(ScalarMatrix::zero(3).norm_estimate(&PowerIteration::default()).value, 0.0);
    }
}
