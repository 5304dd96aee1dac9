//! Randomized invariants of projections, resolvents, bifunction sums and the
//! splitting iteration.

use nalgebra::DMatrix;
use proptest::prelude::*;

use dr_equilibrium::bifunctions::{sum, AffineMap, Bifunction, ConvexFunction};
use dr_equilibrium::hilbert::{ConvexSet, Vector};
use dr_equilibrium::resolvents::{Resolvent, ResolventOracle};
use dr_equilibrium::solver::{iterate, SolverConfig};

fn vec2() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-5.0..5.0f64, 2).prop_map(Vector::from)
}

fn set2() -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        (
            prop::collection::vec(-2.0..0.0f64, 2),
            prop::collection::vec(0.0..2.0f64, 2)
        )
            .prop_map(|(lo, hi)| ConvexSet::boxed(lo, hi).unwrap()),
        (vec2(), 0.1..3.0f64).prop_map(|(c, r)| ConvexSet::ball(c, r).unwrap()),
        (vec2(), -2.0..2.0f64)
            .prop_filter("nonzero normal", |(n, _)| n.norm() > 0.1)
            .prop_map(|(n, b)| ConvexSet::halfspace(n, b).unwrap()),
        Just(ConvexSet::simplex(2).unwrap()),
        Just(ConvexSet::whole_space(2).unwrap()),
    ]
}

/// A monotone affine map: positive semidefinite part plus a skew part.
fn monotone_map() -> impl Strategy<Value = AffineMap> {
    (prop::collection::vec(-1.0..1.0f64, 4), -1.0..1.0f64, vec2()).prop_map(|(a, skew, c)| {
        let a = DMatrix::from_row_slice(2, 2, &a);
        let s = DMatrix::from_row_slice(2, 2, &[0.0, skew, -skew, 0.0]);
        AffineMap::new(&a * a.transpose() + s, c).unwrap()
    })
}

fn fne_excess(j: &dyn Resolvent, x: &Vector, y: &Vector) -> f64 {
    let (jx, jy) = (j.resolve(x).unwrap(), j.resolve(y).unwrap());
    let r = &(x - &jx) - &(y - &jy);
    jx.distance(&jy).powi(2) + r.norm_squared() - x.distance(y).powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_lands_in_set_and_is_idempotent(set in set2(), x in vec2()) {
        let p = set.project(&x);
        prop_assert!(set.contains(&p, 1e-9));
        prop_assert!(set.project(&p).distance(&p) <= 1e-12);
    }

    #[test]
    fn projection_is_firmly_nonexpansive(set in set2(), x in vec2(), y in vec2()) {
        let (px, py) = (set.project(&x), set.project(&y));
        let r = &(&x - &px) - &(&y - &py);
        prop_assert!(px.distance(&py).powi(2) + r.norm_squared() <= x.distance(&y).powi(2) + 1e-9);
    }

    #[test]
    fn projection_satisfies_the_obtuse_angle_condition(set in set2(), x in vec2(), seed in 0u64..1000) {
        let p = set.project(&x);
        for y in set.sample_points(16, seed) {
            prop_assert!((&x - &p).dot(&(&y - &p)) <= 1e-9);
        }
    }

    #[test]
    fn simplex_projection_is_a_distribution(x in prop::collection::vec(-5.0..5.0f64, 1..6)) {
        let d = x.len();
        let p = ConvexSet::simplex(d).unwrap().project(&Vector::from(x));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn bifunction_sum_commutes(map in monotone_map(), w in prop::collection::vec(0.0..2.0f64, 2), x in vec2(), y in vec2()) {
        let set = ConvexSet::whole_space(2).unwrap();
        let f = Bifunction::operator_induced(set.clone(), map).unwrap();
        let g = Bifunction::function_difference(set, ConvexFunction::weighted_l1(Vector::from(w)).unwrap()).unwrap();
        let (fg, gf) = (sum(&f, &g).unwrap(), sum(&g, &f).unwrap());
        prop_assert!((fg.eval(&x, &y) - gf.eval(&x, &y)).abs() <= 1e-12);
        prop_assert_eq!(fg.eval(&x, &x), 0.0);
    }

    #[test]
    fn operator_induced_resolvent_is_firmly_nonexpansive(
        map in monotone_map(), gamma in 0.05..5.0f64, x in vec2(), y in vec2(),
    ) {
        let set = ConvexSet::cube(2, -1.0, 1.0).unwrap();
        let j = ResolventOracle::new(Bifunction::operator_induced(set, map).unwrap(), gamma).unwrap();
        prop_assert!(fne_excess(&j, &x, &y) <= 1e-7);
    }

    #[test]
    fn l1_resolvent_is_firmly_nonexpansive(
        w in prop::collection::vec(0.0..2.0f64, 2), gamma in 0.05..5.0f64, x in vec2(), y in vec2(),
    ) {
        let set = ConvexSet::ball(Vector::zeros(2), 1.5).unwrap();
        let f = Bifunction::function_difference(set, ConvexFunction::weighted_l1(Vector::from(w)).unwrap()).unwrap();
        let j = ResolventOracle::new(f, gamma).unwrap();
        prop_assert!(fne_excess(&j, &x, &y) <= 1e-7);
    }

    #[test]
    fn resolvent_output_solves_its_defining_inequality(map in monotone_map(), gamma in 0.05..5.0f64, x in vec2()) {
        let set = ConvexSet::cube(2, -1.0, 1.0).unwrap();
        let j = ResolventOracle::new(Bifunction::operator_induced(set.clone(), map).unwrap(), gamma).unwrap();
        let z = j.resolve(&x).unwrap();
        prop_assert!(set.contains(&z, 1e-9));
        prop_assert!(j.residual(&x, &z) <= 1e-7);
    }

    #[test]
    fn trace_is_ordered_with_nonnegative_residuals(map in monotone_map(), x0 in vec2(), every in 1usize..5) {
        let set = ConvexSet::cube(2, -1.0, 1.0).unwrap();
        let f = Bifunction::operator_induced(set.clone(), map).unwrap();
        let cfg = SolverConfig { max_iter: 40, trace_every: every, ..SolverConfig::default() };
        let (jf, jg) = (cfg.oracle(f).unwrap(), cfg.oracle(Bifunction::zero(set)).unwrap());
        let r = iterate(&jf, &jg, &x0, &cfg).unwrap();
        let records = r.trace.records();
        prop_assert!(!records.is_empty());
        prop_assert!(records.windows(2).all(|w| w[0].n < w[1].n));
        prop_assert!(records.iter().all(|t| t.residual_dr >= 0.0));
    }
}
