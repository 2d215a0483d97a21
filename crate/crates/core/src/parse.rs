//! Text syntax for elements.
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := rational | atom ['^' int]
//! atom   := 'U' | 'S' | atom "'" | '(' expr ')'
//! ```
//!
//! A trailing `'` is the adjoint, so `S'` is `S*` and `U'` equals `U^-1`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::{AlgebraContext, Monomial};
use crate::element::{Coefficient, Element};
use crate::error::{QpError, Result};

/// Largest exponent accepted for a non-unitary base.
const MAX_GENERAL_POWER: u32 = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Scalar(BigRational),
    U,
    S,
    Adjoint(Box<Expr>),
    Power {
        base: Box<Expr>,
        exponent: BigInt,
        position: usize,
    },
    Product(Vec<Expr>),
    Sum(Vec<(bool, Expr)>),
}

impl Expr {
    pub fn eval(&self, ctx: AlgebraContext) -> Result<Element> {
        match self {
            Expr::Scalar(c) => Ok(Element::scalar(ctx, c.clone())),
            Expr::U => Ok(Element::word(ctx, 1, 0, 0, 0)),
            Expr::S => Ok(Element::word(ctx, 0, 1, 0, 0)),
            Expr::Adjoint(inner) => Ok(inner.eval(ctx)?.adjoint()),
            Expr::Power {
                base,
                exponent,
                position,
            } => power(&base.eval(ctx)?, exponent, *position),
            Expr::Product(factors) => {
                let mut acc = Element::one(ctx);
                for f in factors {
                    acc = acc.checked_mul(&f.eval(ctx)?)?;
                }
                Ok(acc)
            }
            Expr::Sum(terms) => {
                let mut acc = Element::zero(ctx);
                for (negate, t) in terms {
                    let v = t.eval(ctx)?;
                    acc = if *negate {
                        acc.checked_sub(&v)?
                    } else {
                        acc.checked_add(&v)?
                    };
                }
                Ok(acc)
            }
        }
    }
}

/// `c * U^a` when the element has exactly that shape.
fn as_scaled_unitary(x: &Element) -> Option<(&Coefficient, &BigInt)> {
    let mut terms = x.terms();
    let (mono, c) = terms.next()?;
    if terms.next().is_some() || mono.m() != 0 || mono.n() != 0 {
        return None;
    }
    Some((c, mono.i()))
}

fn power(base: &Element, exponent: &BigInt, position: usize) -> Result<Element> {
    let ctx = base.context();
    if let Some((c, a)) = as_scaled_unitary(base) {
        let e = exponent.abs().to_u32().ok_or_else(|| QpError::Syntax {
            position,
            message: "exponent too large".into(),
        })?;
        let mut coef = num_traits::pow(c.clone(), e as usize);
        let mut shift = a * e;
        if exponent.is_negative() {
            coef = coef.recip();
            shift = -shift;
        }
        return Ok(Element::term(Monomial::unitary_power(ctx, shift), coef));
    }
    if base.is_empty() {
        if exponent.is_negative() {
            return Err(QpError::Syntax {
                position,
                message: "negative power of zero".into(),
            });
        }
        return Ok(if exponent.is_zero() {
            Element::one(ctx)
        } else {
            Element::zero(ctx)
        });
    }
    if exponent.is_negative() {
        return Err(QpError::NegativeSPower { position });
    }
    match exponent.to_u32() {
        Some(e) if e <= MAX_GENERAL_POWER => Ok(base.pow(e)),
        _ => Err(QpError::Syntax {
            position,
            message: format!("exponent exceeds {MAX_GENERAL_POWER} for a non-unitary base"),
        }),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> QpError {
        QpError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected digits"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(text.parse().expect("digits parse"))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = Vec::new();
        let mut negate = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        loop {
            terms.push((negate, self.term()?));
            negate = match self.peek() {
                Some(b'+') => false,
                Some(b'-') => true,
                _ => break,
            };
            self.pos += 1;
        }
        Ok(if terms.len() == 1 && !terms[0].0 {
            terms.pop().expect("one term").1
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.factor()?];
        while self.eat(b'*') {
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().expect("one factor")
        } else {
            Expr::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let num = self.digits()?;
                let den = if self.eat(b'/') {
                    let d = self.digits()?;
                    if d.is_zero() {
                        return Err(self.error("zero denominator"));
                    }
                    d
                } else {
                    BigInt::one()
                };
                Ok(Expr::Scalar(BigRational::new(num, den)))
            }
            _ => {
                let atom = self.atom()?;
                if self.eat(b'^') {
                    let position = self.pos;
                    let negative = self.eat(b'-');
                    let mut e = self.digits()?;
                    if negative {
                        e = -e;
                    }
                    if negative && contains_bare_s(&atom) {
                        return Err(QpError::NegativeSPower { position });
                    }
                    Ok(Expr::Power {
                        base: Box::new(atom),
                        exponent: e,
                        position,
                    })
                } else {
                    Ok(atom)
                }
            }
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let mut atom = match self.peek() {
            Some(b'U') => {
                self.pos += 1;
                Expr::U
            }
            Some(b'S') => {
                self.pos += 1;
                Expr::S
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                inner
            }
            Some(c) => return Err(self.error(format!("unexpected character '{}'", c as char))),
            None => return Err(self.error("unexpected end of input")),
        };
        while self.eat(b'\'') {
            atom = Expr::Adjoint(Box::new(atom));
        }
        Ok(atom)
    }
}

fn contains_bare_s(e: &Expr) -> bool {
    match e {
        Expr::S => true,
        Expr::Adjoint(inner) => contains_bare_s(inner),
        _ => false,
    }
}

/// Parses `text` into an expression tree.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = parser.expr()?;
    if parser.peek().is_some() {
        return Err(parser.error("trailing input"));
    }
    Ok(e)
}

/// Parses and evaluates `text` to a canonical element.
pub fn parse(text: &str, ctx: AlgebraContext) -> Result<Element> {
    Ok(parse_expr(text)?.eval(ctx)?.canonicalize())
}

fn render_power(out: &mut Vec<String>, symbol: &str, e: &BigInt) {
    if e.is_zero() {
        return;
    }
    if e.is_one() {
        out.push(symbol.to_string());
    } else {
        out.push(format!("{symbol}^{e}"));
    }
}

pub fn render_monomial(x: &Monomial) -> String {
    let mut parts = Vec::new();
    render_power(&mut parts, "U", x.i());
    render_power(&mut parts, "S", &BigInt::from(x.m()));
    render_power(&mut parts, "S'", &BigInt::from(x.n()));
    render_power(&mut parts, "U", x.j());
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

fn render_coefficient(c: &Coefficient) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Text form accepted back by [`parse`].
pub fn render(x: &Element) -> String {
    let mut out = String::new();
    for (k, (mono, c)) in x.terms().enumerate() {
        let negative = c.is_negative();
        let magnitude = c.abs();
        match (k, negative) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let word = render_monomial(mono);
        if magnitude.is_one() {
            out.push_str(&word);
        } else if mono.is_identity() {
            out.push_str(&render_coefficient(&magnitude));
        } else {
            out.push_str(&render_coefficient(&magnitude));
            out.push('*');
            out.push_str(&word);
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(p: u32) -> AlgebraContext {
        AlgebraContext::new(p).unwrap()
    }

    #[test]
    fn single_normalized_term() {
        let x = parse("U^3*S*S'*U^-1", ctx(2)).unwrap();
        assert_eq!(x, Element::word(ctx(2), 1, 1, 1, 1));
    }

    #[test]
    fn identity_and_relations() {
        assert_eq!(parse("1", ctx(2)).unwrap(), Element::one(ctx(2)));
        let x = parse("S*S' + U*S*S'*U^-1", ctx(2)).unwrap();
        assert!(x.equals(&Element::one(ctx(2))).unwrap());
        assert_eq!(x, Element::one(ctx(2)));
    }

    #[test]
    fn adjoint_marks() {
        let c = ctx(3);
        assert_eq!(parse("U'", c).unwrap(), parse("U^-1", c).unwrap());
        assert_eq!(parse("(U*S)'", c).unwrap(), parse("S'*U^-1", c).unwrap());
        assert_eq!(parse("S''", c).unwrap(), parse("S", c).unwrap());
        assert_eq!(parse("S'^2", c).unwrap(), parse("S'*S'", c).unwrap());
    }

    #[test]
    fn scalars_and_signs() {
        let c = ctx(2);
        let x = parse("-2/4*U + 3 - (U - U)", c).unwrap();
        let mut expected = Element::scalar(c, Coefficient::from_integer(3.into()));
        expected.add_term(
            Monomial::unitary_power(c, 1),
            Coefficient::new((-1).into(), 2.into()),
        );
        assert_eq!(x, expected);
        assert_eq!(parse("(2*U)^-2", c).unwrap().to_string(), "1/4*U^-2");
    }

    #[test]
    fn errors() {
        let c = ctx(2);
        assert_eq!(
            parse("S^-1", c).unwrap_err(),
            QpError::NegativeSPower { position: 2 }
        );
        assert!(matches!(
            parse("(S*U)^-1", c),
            Err(QpError::NegativeSPower { .. })
        ));
        assert!(matches!(
            parse("U + * S", c),
            Err(QpError::Syntax { position: 4, .. })
        ));
        assert!(matches!(parse("(U", c), Err(QpError::Syntax { .. })));
        assert!(matches!(parse("U V", c), Err(QpError::Syntax { .. })));
        assert!(matches!(parse("1/0", c), Err(QpError::Syntax { .. })));
        assert!(matches!(parse("", c), Err(QpError::Syntax { .. })));
    }

    #[test]
    fn rendering() {
        let c = ctx(2);
        assert_eq!(render(&Element::zero(c)), "0");
        assert_eq!(render(&Element::one(c)), "1");
        let x = parse("U^3*S*S'*U^-1 - 2*S'^2*U^5 + 1/3", c).unwrap();
        assert_eq!(render(&x), "-2*S'^2*U^5 + 1/3 + U*S*S'*U");
    }

    proptest! {
        #[test]
        fn render_then_parse(ts in prop::collection::vec((-50i64..50, 0u32..4, 0u32..4, -50i64..50, -5i64..6, 1i64..4), 0..6), p in 2u32..6) {
            let c = ctx(p);
            let mut x = Element::zero(c);
            for (i, m, n, j, num, den) in ts {
                x = &x + &Element::word(c, i, m, n, j).scale(&Coefficient::new(num.into(), den.into()));
            }
            let x = x.canonicalize();
            prop_assert_eq!(parse(&render(&x), c).unwrap(), x);
        }
    }
}
