mod common;

use num_bigint::BigInt;
use proptest::prelude::*;
use specialcycles::density::{alpha, check_functional_equation, check_recursion_star, f_poly_rank1};
use specialcycles::exactpoly::{rat, rpow, Rational};
use specialcycles::intersect::{check_kr_identity, intersection_number, ztriple, ValuationTriple};
use specialcycles::localgeom::{degree_zero_check, reduced_locus, CycleDescriptor, TreeWindow, DEFAULT_NODE_BUDGET};
use specialcycles::oracle::{alpha_hat_rank1, count_representations};
use specialcycles::padic::{herm_diagonalize, HermMatrix};
use specialcycles::{ExponentVector, ExtRingElem, LaurentPoly, RingParams};

fn poly() -> impl Strategy<Value = LaurentPoly> {
    (-3i64..3, prop::collection::vec(-5i64..6, 0..5)).prop_map(|(m, c)| LaurentPoly::from_ints(m, &c))
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (1i64..7, 1i64..7, any::<bool>()).prop_map(|(n, d, neg)| rat(if neg { -n } else { n }, d))
}

proptest! {
    #[test]
    fn product_divides_back(a in poly(), b in poly()) {
        prop_assume!(!b.is_zero());
        let prod = &a * &b;
        prop_assert_eq!(prod.exact_div(&b).unwrap(), a);
    }

    #[test]
    fn ring_laws(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a - &a), &LaurentPoly::zero());
    }

    #[test]
    fn substitution_matches_evaluation(f in poly(), c in nonzero_rational(), x in nonzero_rational()) {
        let g = f.substitute(&c, false).unwrap();
        prop_assert_eq!(g.eval(&x).unwrap(), f.eval(&(&c * &x)).unwrap());
        let h = f.substitute(&c, true).unwrap();
        prop_assert_eq!(h.eval(&x).unwrap(), f.eval(&(&c / &x)).unwrap());
    }

    #[test]
    fn derivative_is_linear(a in poly(), b in poly()) {
        prop_assert_eq!((&a + &b).derivative(), &a.derivative() + &b.derivative());
    }

    #[test]
    fn json_round_trip(f in poly()) {
        prop_assert_eq!(LaurentPoly::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn ring_elements(p in prop::sample::select(vec![3u64, 5, 7, 11]), k in 1u32..4,
                     a in any::<u32>(), b in any::<u32>(), c in any::<u32>(), d in any::<u32>()) {
        let r = RingParams::new(p, k).unwrap();
        let x = ExtRingElem::new(r, a as i128, b as i128);
        let y = ExtRingElem::new(r, c as i128, d as i128);
        let xy = x.mul(&y).unwrap();
        prop_assert_eq!(xy, y.mul(&x).unwrap());
        prop_assert_eq!(xy.conj(), x.conj().mul(&y.conj()).unwrap());
        prop_assert_eq!(xy.norm(), r.mul(x.norm(), y.norm()));
        prop_assert_eq!(x.is_unit(), x.valuation() == 0);
        if x.is_unit() {
            prop_assert_eq!(x.mul(&x.inverse().unwrap()).unwrap(), ExtRingElem::one(r));
        }
    }

    #[test]
    fn diagonalization_is_a_congruence_invariant(seed in any::<u64>(), e in prop::collection::vec(0u32..3, 1..4)) {
        let params = RingParams::new(3, 7).unwrap();
        let mut rng = common::rng(seed);
        let t = common::random_hermitian(params, &e, &mut rng);
        let g = common::random_unimodular(params, e.len(), &mut rng);
        let want = ExponentVector::new(e);
        prop_assert_eq!(herm_diagonalize(&t).unwrap(), want.clone());
        prop_assert_eq!(herm_diagonalize(&t.congruence(&g).unwrap()).unwrap(), want);
    }

    #[test]
    fn full_count_is_a_congruence_invariant(seed in any::<u64>(), e0 in 0u32..2) {
        let params = RingParams::new(3, 1).unwrap();
        let mut rng = common::rng(seed);
        let s = HermMatrix::identity(params, 2);
        let t = HermMatrix::diag_powers(params, &[0, e0]);
        let g = common::random_unimodular(params, 2, &mut rng);
        let a = count_representations(&s, &t).unwrap();
        let b = count_representations(&s, &t.congruence(&g).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn functional_equation_and_recursion(p in prop::sample::select(vec![3u64, 5, 7]), e in prop::collection::vec(0u32..4, 1..4)) {
        let ev = ExponentVector::new(e);
        prop_assert!(check_functional_equation(p, &ev).unwrap());
        prop_assert!(check_recursion_star(p, &ev).unwrap());
    }

    #[test]
    fn ztriple_is_symmetric(p in prop::sample::select(vec![3u64, 5, 7, 11]), a in -1i64..8, b in -1i64..8, c in -1i64..8) {
        prop_assume!((a + b + c).rem_euclid(2) == 1 || a.min(b).min(c) < 0);
        let z = ztriple(p, [a, b, c]).unwrap();
        prop_assert_eq!(&z, &ztriple(p, [b, c, a]).unwrap());
        prop_assert_eq!(&z, &ztriple(p, [c, b, a]).unwrap());
    }

    #[test]
    fn kr_identity_random(p in prop::sample::select(vec![3u64, 5, 7, 11, 13]), a in 0u32..9, b in 0u32..9, c in 0u32..9) {
        let t = ValuationTriple::sorted([a, b, c]);
        prop_assume!(t.odd_sum());
        prop_assert!(intersection_number(p, &t).is_ok());
        prop_assert!(check_kr_identity(p, &t).unwrap());
    }
}

#[test]
fn rank1_oracle_equals_polynomial() {
    for p in [3u64, 5] {
        for a in 0..=2u32 {
            let f = f_poly_rank1(p, a).unwrap().poly;
            for s in 1..=4u32 {
                let x = rpow(&Rational::from_integer(-BigInt::from(p)), -(s as i64));
                assert_eq!(alpha_hat_rank1(p, a + 2, s, a).unwrap().normalized, f.eval(&x).unwrap());
                assert_eq!(
                    alpha_hat_rank1(p, a + 2, s, a).unwrap().normalized,
                    alpha(p, s, &ExponentVector::new(vec![a])).unwrap()
                );
            }
        }
    }
}

#[test]
fn counts_do_not_depend_on_the_nonresidue() {
    let values: Vec<_> = [2u64, 3]
        .iter()
        .map(|&delta| {
            let r = RingParams::with_delta(5, 1, delta).unwrap();
            let s = HermMatrix::identity(r, 2);
            let t = HermMatrix::diag(r, &[1]);
            count_representations(&s, &t).unwrap()
        })
        .collect();
    assert_eq!(values[0], values[1]);
    let r = RingParams::with_delta(5, 1, 3).unwrap();
    let id = HermMatrix::identity(r, 2);
    assert_eq!(
        count_representations(&id, &id).unwrap(),
        count_representations(&HermMatrix::identity(RingParams::new(5, 1).unwrap(), 2), &HermMatrix::identity(RingParams::new(5, 1).unwrap(), 2)).unwrap()
    );
}

#[test]
fn windows_pass_audit() {
    for (p, r) in [(3u64, 0u32), (3, 1), (3, 2), (5, 1), (7, 1)] {
        let w = TreeWindow::build(p, r, DEFAULT_NODE_BUDGET).unwrap();
        w.audit().unwrap();
        assert_eq!(w.len() as u64, TreeWindow::node_count_for(p, r));
    }
}

#[test]
fn even_locus_is_a_ball() {
    // curves at point distance d from x: (p+1)(p^4)^{d-1}
    for (p, radius) in [(3u64, 3u32), (5, 2)] {
        let w = TreeWindow::build(p, radius, DEFAULT_NODE_BUDGET).unwrap();
        let x = w.root_point(0);
        for r in 0..radius {
            let locus = reduced_locus(&w, &CycleDescriptor::even(2 * r, x)).unwrap();
            let want: u64 = (1..=r).map(|d| (p + 1) * p.pow(4 * (d - 1))).sum();
            assert_eq!(locus.len() as u64, want, "p={p} r={r}");
            for (c, b) in locus {
                assert!(b < r.max(1));
                let _ = c;
            }
        }
    }
}

#[test]
fn degree_zero_holds() {
    let w = TreeWindow::build(3, 2, DEFAULT_NODE_BUDGET).unwrap();
    for u in [1u32, 3, 5, 7] {
        assert!(degree_zero_check(&w, &CycleDescriptor::odd(u, (4..8).collect())).unwrap(), "u={u}");
    }
}
