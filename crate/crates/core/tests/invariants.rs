//! Property tests for the coordinate-operator layer.

use std::collections::BTreeMap;

use latwalk::coord_ops::{
    apply, apply_adjoint, build_walk_generator, operator_norm, perturbation_from, L1Vector,
    Perturbation, RateField, Site,
};
use proptest::prelude::*;

fn arb_rates() -> impl Strategy<Value = RateField> {
    let defect = (-6_i64..=6, 0.0_f64..4.0, 0.0_f64..4.0);
    proptest::collection::vec(defect, 0..5).prop_map(|defects| {
        let mut rates = RateField::homogeneous_unit();
        for (site, lambda, mu) in defects {
            rates = rates.with_defect(site, lambda, mu).unwrap();
        }
        rates
    })
}

fn arb_entries() -> impl Strategy<Value = BTreeMap<(Site, Site), f64>> {
    proptest::collection::btree_map(
        ((-5_i64..=5), (-5_i64..=5)),
        -3.0_f64..3.0,
        0..12,
    )
}

fn arb_vector() -> impl Strategy<Value = L1Vector> {
    proptest::collection::vec(((-8_i64..=8), -2.0_f64..2.0), 0..8)
        .prop_map(L1Vector::from_pairs)
}

proptest! {
    #[test]
    fn generator_rows_sum_to_zero(rates in arb_rates()) {
        let a = build_walk_generator(&rates);
        for x in -9..=9 {
            prop_assert!(a.row_sum(x).abs() < 1e-14, "row {x}");
        }
    }

    #[test]
    fn norm_triangle_and_homogeneity(e1 in arb_entries(), e2 in arb_entries(), c in -4.0_f64..4.0) {
        let d1 = Perturbation::from_entries(e1.clone());
        let d2 = Perturbation::from_entries(e2.clone());
        let mut sum = e1.clone();
        for (k, v) in &e2 {
            *sum.entry(*k).or_insert(0.0) += v;
        }
        let ds = Perturbation::from_entries(sum);
        prop_assert!(ds.norm() <= d1.norm() + d2.norm() + 1e-12);

        let scaled = Perturbation::from_entries(
            e1.iter().map(|(k, v)| (*k, c * v)),
        );
        prop_assert!((scaled.norm() - c.abs() * d1.norm()).abs() < 1e-12);
    }

    #[test]
    fn perturbation_plus_base_recovers_generator(rates in arb_rates()) {
        let a0 = build_walk_generator(&RateField::homogeneous_unit());
        let a1 = build_walk_generator(&rates);
        let d = perturbation_from(&a1, &a0).unwrap();
        for x in -8..=8 {
            for y in -8..=8 {
                let rebuilt = a0.entry(x, y) + d.entry(x, y);
                prop_assert!((rebuilt - a1.entry(x, y)).abs() < 1e-14, "({x},{y})");
            }
        }
    }

    #[test]
    fn support_sets_are_exact_projections(entries in arb_entries()) {
        let d = Perturbation::from_entries(entries.clone());
        let nonzero: Vec<((Site, Site), f64)> =
            entries.into_iter().filter(|(_, v)| *v != 0.0).collect();
        let cols: std::collections::BTreeSet<Site> =
            nonzero.iter().map(|((_, y), _)| *y).collect();
        let rows: std::collections::BTreeSet<Site> =
            nonzero.iter().map(|((x, _), _)| *x).collect();
        prop_assert_eq!(d.xi1(), &cols);
        prop_assert_eq!(d.xi2(), &rows);
    }

    #[test]
    fn apply_is_norm_bounded(rates in arb_rates(), q in arb_vector()) {
        let a = build_walk_generator(&rates);
        let aq = apply(&a, &q);
        prop_assert!(aq.norm1() <= operator_norm(&a) * q.norm1() + 1e-10);
    }

    #[test]
    fn adjoint_matches_dense_transpose(rates in arb_rates(), p in arb_vector()) {
        let a = build_walk_generator(&rates);
        let pa = apply_adjoint(&p, &a);
        // brute force: (pA)(y) = Σ_x p(x) A(x,y) over the touched window
        for y in -12..=12 {
            let brute: f64 = p.iter().map(|(x, v)| v * a.entry(x, y)).sum();
            prop_assert!((pa.get(y) - brute).abs() < 1e-12, "y={y}");
        }
    }
}
