use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use qp_core::index::{
    expectation, full_domain_monomials, quasi_basis, relative_commutant_probe, verify_quasi_basis, ExpectationSpec,
};
use qp_core::rep::{op_norm_estimate, truncated_matrix, Window};
use qp_core::{normalize_monomial, psi, psi_inverse, AlgebraContext, Coefficient, Element, Monomial};

fn ctx(p: u32) -> AlgebraContext {
    AlgebraContext::new(p).unwrap()
}

fn ratio(num: i64, den: i64) -> Coefficient {
    Coefficient::new(num.into(), den.into())
}

fn element(p: u32, bound: i64, level: u32) -> impl Strategy<Value = Element> {
    prop::collection::vec(
        (-bound..=bound, 0..=level, 0..=level, -bound..=bound, -3i64..=3, 1i64..=2),
        1..4,
    )
    .prop_map(move |terms| {
        let mut x = Element::zero(ctx(p));
        for (i, m, n, j, a, b) in terms {
            x.add_term(normalize_monomial(ctx(p), &i.into(), m, n, &j.into()), ratio(a, b));
        }
        x
    })
}

/// Sums of `U^i S^h S*^h U^j`.
fn gauge_fixed(p: u32, bound: i64, level: u32) -> impl Strategy<Value = Element> {
    prop::collection::vec((-bound..=bound, 0..=level, -bound..=bound, -3i64..=3), 1..4).prop_map(move |terms| {
        let mut x = Element::zero(ctx(p));
        for (i, h, j, a) in terms {
            x.add_term(normalize_monomial(ctx(p), &i.into(), h, h, &j.into()), ratio(a, 1));
        }
        x
    })
}

fn winding(p: u32) -> impl Strategy<Value = i64> {
    (-9i64..=9).prop_filter("coprime with p", move |k| *k != 0 && k.gcd(&(p as i64)) == 1)
}

fn psi_adjoint_matches(h: u32, x: &Element) -> bool {
    let a = psi(h, x).unwrap();
    let b = psi(h, &x.adjoint()).unwrap();
    (0..a.dim()).all(|r| (0..a.dim()).all(|c| b.get(r, c).equals(&a.get(c, r).adjoint()).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psi_is_a_star_homomorphism(
        (h, x, y) in prop::sample::select(vec![(2u32, 1u32), (2, 2), (3, 1)])
            .prop_flat_map(|(p, h)| (Just(h), element(p, 10, 2), element(p, 10, 2)))
    ) {
        let xy = psi(h, &(&x * &y)).unwrap();
        let prod = psi(h, &x).unwrap().checked_mul(&psi(h, &y).unwrap()).unwrap();
        prop_assert!(xy.equals(&prod).unwrap());
        prop_assert!(psi_adjoint_matches(h, &x));
        prop_assert!(psi_inverse(h, &psi(h, &x).unwrap()).unwrap().equals(&x).unwrap());
        // psi is injective, so nonzero elements have nonzero images
        prop_assert_eq!(psi(h, &x).unwrap().is_zero(), x.canonicalize().is_zero());
    }

    #[test]
    fn gauge_expectation_is_idempotent_bimodule_map(
        (p, k, x, a, b) in prop::sample::select(vec![2u32, 3, 5]).prop_flat_map(|p| {
            (Just(p), winding(p), gauge_fixed(p, 12, 2), gauge_fixed(p, 6, 1), gauge_fixed(p, 6, 1))
        })
    ) {
        let c = ctx(p);
        let kb = BigInt::from(k);
        let spec = ExpectationSpec::gauge(c, kb.clone()).unwrap();
        let ex = expectation(&spec, &x).unwrap();
        prop_assert!(expectation(&spec, &ex).unwrap().equals(&ex).unwrap());
        let (ca, cb) = (a.chi(&kb).unwrap(), b.chi(&kb).unwrap());
        prop_assert!(expectation(&spec, &ca).unwrap().equals(&ca).unwrap());
        let lhs = expectation(&spec, &(&(&ca * &x) * &cb)).unwrap();
        let rhs = &(&ca * &ex) * &cb;
        prop_assert!(lhs.equals(&rhs).unwrap());
    }

    #[test]
    fn gauge_expectation_is_positive(
        (p, k, x, v) in prop::sample::select(vec![2u32, 3]).prop_flat_map(|p| {
            (Just(p), winding(p), gauge_fixed(p, 8, 2), prop::collection::vec(-5i64..=5, 2 * 24 + 1))
        })
    ) {
        let spec = ExpectationSpec::gauge(ctx(p), k).unwrap();
        let y = expectation(&spec, &(&x.adjoint() * &x)).unwrap();
        let t = truncated_matrix(&y, &Window::new(24));
        let mut form = Coefficient::zero();
        for (col, entries) in t.columns.iter().enumerate() {
            for (row, c) in entries {
                form += c * ratio(v[(row + t.n) as usize] * v[col], 1);
            }
        }
        prop_assert!(!form.is_negative(), "quadratic form {form}");
    }

    #[test]
    fn full_expectation_fixes_its_range(
        (p, i, x) in prop::sample::select(vec![3u32, 5])
            .prop_flat_map(|p| (Just(p), 1u32..=2, element(p, 10, 2)))
    ) {
        let c = ctx(p);
        let k = BigInt::from(p - 1).pow(i);
        let spec = ExpectationSpec::full(c, k.clone()).unwrap();
        let fx = expectation(&spec, &x).unwrap();
        prop_assert!(expectation(&spec, &fx).unwrap().equals(&fx).unwrap());
        let image = x.chi(&k).unwrap();
        prop_assert!(expectation(&spec, &image).unwrap().equals(&image).unwrap());
    }
}

#[test]
fn full_quasi_basis_on_a_sweep() {
    for (p, k) in [(3u32, 2i64), (3, -4), (5, 4)] {
        let c = ctx(p);
        let spec = ExpectationSpec::full(c, k).unwrap();
        let basis = quasi_basis(&spec, c).unwrap();
        assert_eq!(basis.len() as i64, k.abs());
        for x in full_domain_monomials(c, 6, 1) {
            let x = Element::from(x);
            assert!(verify_quasi_basis(&spec, &basis, &x).unwrap(), "p = {p}, k = {k}, x = {x}");
        }
    }
    assert!(ExpectationSpec::full(ctx(5), 8).is_err());
}

#[test]
fn probe_matches_coprimality() {
    for p in [2u32, 3, 5] {
        for level in 1..=4 {
            for k in (-40i64..=40).filter(|k| *k != 0) {
                let coprime = k.gcd(&(p as i64)) == 1;
                assert_eq!(relative_commutant_probe(k, p, level).unwrap(), coprime, "p = {p}, k = {k}");
            }
        }
    }
}

#[test]
fn isometry_and_projection_norms() {
    let c = ctx(2);
    let w = Window::new(256);
    for x in [
        Element::word(c, 3, 0, 0, 0),
        Element::word(c, 0, 1, 0, 0),
        Element::word(c, 0, 1, 1, 0),
        Element::word(c, 1, 2, 2, -1),
    ] {
        let est = op_norm_estimate(&x, &w);
        assert!((est - 1.0).abs() < 1e-6, "{x}: {est}");
    }
    let mut x = Element::zero(c);
    x.add_term(Monomial::identity(c), ratio(1, 2));
    x.add_term(Monomial::unitary_power(c, 1), ratio(-3, 2));
    let est = op_norm_estimate(&x, &w);
    // spectrum of (1 - 3z)/2 over the circle tops out at 2
    assert!(est <= 2.0 + 1e-9 && est > 1.99, "{est}");
}
