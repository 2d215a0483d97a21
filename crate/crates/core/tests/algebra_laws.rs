use num_bigint::BigInt;
use proptest::prelude::*;

use qp_core::rep::{act_element, oracle_equal, RepVector};
use qp_core::{normalize_monomial, parse, AlgebraContext, Coefficient, Element, Monomial};

fn ctx(p: u32) -> AlgebraContext {
    AlgebraContext::new(p).unwrap()
}

fn monomial(p: u32, bound: i64, level: u32) -> impl Strategy<Value = Monomial> {
    (-bound..=bound, 0..=level, 0..=level, -bound..=bound)
        .prop_map(move |(i, m, n, j)| normalize_monomial(ctx(p), &i.into(), m, n, &j.into()))
}

fn element(p: u32, bound: i64, level: u32) -> impl Strategy<Value = Element> {
    prop::collection::vec((monomial(p, bound, level), -4i64..=4, 1i64..=3), 1..4).prop_map(move |terms| {
        let mut x = Element::zero(ctx(p));
        for (m, num, den) in terms {
            x.add_term(m, Coefficient::new(num.into(), den.into()));
        }
        x
    })
}

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![2u32, 3, 5])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn associative_and_distributive(
        (x, y, z) in prime().prop_flat_map(|p| (element(p, 12, 2), element(p, 12, 2), element(p, 12, 2)))
    ) {
        prop_assert!((&(&x * &y) * &z).equals(&(&x * &(&y * &z))).unwrap());
        prop_assert!((&x * &(&y + &z)).equals(&(&(&x * &y) + &(&x * &z))).unwrap());
        prop_assert!((&(&x + &y) * &z).equals(&(&(&x * &z) + &(&y * &z))).unwrap());
    }

    #[test]
    fn adjoint_is_anti_multiplicative_involution(
        (x, y) in prime().prop_flat_map(|p| (element(p, 12, 3), element(p, 12, 3)))
    ) {
        prop_assert_eq!(x.adjoint().adjoint(), x.clone());
        prop_assert!((&x * &y).adjoint().equals(&(&y.adjoint() * &x.adjoint())).unwrap());
    }

    #[test]
    fn gauge_degree_is_additive((x, y) in prime().prop_flat_map(|p| (monomial(p, 40, 4), monomial(p, 40, 4)))) {
        if let Some(xy) = qp_core::mul_monomial(&x, &y).unwrap() {
            prop_assert_eq!(xy.gauge_degree(), x.gauge_degree() + y.gauge_degree());
        }
    }

    #[test]
    fn canonical_form_is_idempotent_and_decides_equality(
        (x, y) in prime().prop_flat_map(|p| (element(p, 10, 3), element(p, 10, 3)))
    ) {
        let c = x.canonicalize();
        prop_assert_eq!(c.canonicalize(), c.clone());
        let range = 1000;
        prop_assert_eq!(x.equals(&y).unwrap(), oracle_equal(&x, &y, range));
        // x + (y - y) has a different term map but the same canonical form
        let padded = &x + &(&y - &y.canonicalize());
        prop_assert_eq!(padded.canonicalize(), c);
    }

    #[test]
    fn product_action_composes(
        (x, y, k) in prime().prop_flat_map(|p| (element(p, 15, 3), element(p, 15, 3), -200i64..=200))
    ) {
        let v = RepVector::basis(k);
        prop_assert_eq!(act_element(&(&x * &y), &v), act_element(&x, &act_element(&y, &v)));
    }

    #[test]
    fn chi_is_unital_star_endomorphism(
        (x, y, k1, k2) in (element(2, 15, 3), element(2, 15, 3),
                           prop::sample::select(vec![-7i64, -5, -3, -1, 1, 3, 5, 7]),
                           prop::sample::select(vec![-5i64, -3, -1, 1, 3, 5]))
    ) {
        let (k1b, k2b) = (BigInt::from(k1), BigInt::from(k2));
        let c = ctx(2);
        prop_assert_eq!(Element::one(c).chi(&k1b).unwrap(), Element::one(c));
        prop_assert!((&x * &y).chi(&k1b).unwrap().equals(&(&x.chi(&k1b).unwrap() * &y.chi(&k1b).unwrap())).unwrap());
        prop_assert!(x.adjoint().chi(&k1b).unwrap().equals(&x.chi(&k1b).unwrap().adjoint()).unwrap());
        prop_assert!(x.chi(&k2b).unwrap().chi(&k1b).unwrap().equals(&x.chi(&BigInt::from(k1 * k2)).unwrap()).unwrap());
    }
}

#[test]
fn defining_relations_symbolically() {
    for p in [2u32, 3, 5] {
        let c = ctx(p);
        let lhs = parse(&format!("U^{p}*S"), c).unwrap();
        assert!(lhs.equals(&parse("S*U", c).unwrap()).unwrap());
        for m in 0..=3u32 {
            let pm = (p as i64).pow(m);
            if pm > 27 {
                continue;
            }
            for i in 0..pm {
                for j in 0..pm {
                    let x = &Element::word(c, 0, 0, m, -i) * &Element::word(c, j, m, 0, 0);
                    let want = if i == j { Element::one(c) } else { Element::zero(c) };
                    assert!(x.equals(&want).unwrap(), "p = {p}, m = {m}, i = {i}, j = {j}");
                }
            }
        }
    }
}

#[test]
fn cuntz_family() {
    for p in [2u32, 3, 5] {
        let c = ctx(p);
        let ts: Vec<Element> = (0..p).map(|j| Element::cuntz_generator(c, j).unwrap()).collect();
        let mut sum = Element::zero(c);
        for t in &ts {
            sum = &sum + &(t * &t.adjoint());
        }
        assert!(sum.equals(&Element::one(c)).unwrap());
        for (a, ta) in ts.iter().enumerate() {
            for (b, tb) in ts.iter().enumerate() {
                let want = if a == b { Element::one(c) } else { Element::zero(c) };
                assert!((&ta.adjoint() * tb).equals(&want).unwrap());
            }
        }
        assert!(Element::cuntz_generator(c, p).is_err());
    }
}

/// Distinct normal monomials at the same (m, n) act differently on some
/// `e_k` with `|k| <= p^max(m,n) + |i| + |j|`.
#[test]
fn same_level_monomials_are_separated() {
    for p in [2u32, 3] {
        let c = ctx(p);
        for m in 0..=2u32 {
            for n in 0..=2u32 {
                let mut seen = std::collections::BTreeSet::new();
                for i in -6..=6i64 {
                    for j in -6..=6i64 {
                        seen.insert(normalize_monomial(c, &i.into(), m, n, &j.into()));
                    }
                }
                let list: Vec<_> = seen.into_iter().collect();
                for (a, x) in list.iter().enumerate() {
                    for y in &list[a + 1..] {
                        let bound = |z: &Monomial| {
                            (p as i64).pow(z.m().max(z.n()))
                                + i64::try_from(z.i()).unwrap().abs()
                                + i64::try_from(z.j()).unwrap().abs()
                        };
                        let range = bound(x).max(bound(y));
                        let (ex, ey) = (Element::from(x.clone()), Element::from(y.clone()));
                        assert!(!oracle_equal(&ex, &ey, range), "{x} and {y} not separated within {range}");
                    }
                }
            }
        }
    }
}
