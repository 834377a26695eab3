use proptest::prelude::*;
use qhm::algebra::StarConvention;
use qhm::laplace::solve_poisson;
use qhm::lattice::{Grid, GridSpec, Params, Rational};
use qhm::morita::{verify_bimodule_preservation, MoritaGrid};
use qhm::sampling::{rng, skew_torus, smooth_d_element};

fn grid(su: (i64, i64), sv: (i64, i64)) -> Grid {
    let p = Params::new(1, 0.5, Rational::new(su.0, su.1), Rational::new(sv.0, sv.1)).unwrap();
    Grid::new(
        p,
        GridSpec {
            refinement: 1,
            x_cells: 4,
            y_cells: 2,
            ..GridSpec::default()
        },
    )
    .unwrap()
}

fn params() -> impl Strategy<Value = ((i64, i64), (i64, i64))> {
    prop_oneof![Just((1, 4)), Just((1, 3)), Just((3, 10))]
        .prop_flat_map(|su| prop_oneof![Just((1, 4)), Just((1, 2)), Just((2, 5))].prop_map(move |sv| (su, sv)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn star_is_associative((su, sv) in params(), seed in 0u64..1000) {
        let g = grid(su, sv);
        let mut r = rng(seed);
        let (a, b, c) = (
            smooth_d_element::<f64>(&g, &mut r).unwrap(),
            smooth_d_element::<f64>(&g, &mut r).unwrap(),
            smooth_d_element::<f64>(&g, &mut r).unwrap(),
        );
        let lhs = a.star(&b).unwrap().star(&c).unwrap();
        let rhs = a.star(&b.star(&c).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * lhs.sup_norm().max(1.0));
        let opp = a.star_with(&b, StarConvention::Opposite).unwrap();
        prop_assert!(opp.star_with(&c, StarConvention::Opposite).is_ok());
    }

    #[test]
    fn poisson_inverts_the_laplacian((su, sv) in params(), seed in 0u64..1000) {
        let g = grid(su, sv);
        let h = skew_torus::<f64>(&g, 1, &mut rng(seed));
        let m = h.mean();
        let h = h.map(|z| z - m);
        let back = solve_poisson(&h.laplacian()).unwrap();
        prop_assert!(back.max_abs_diff(&h).unwrap() <= 1e-11 * h.sup_norm().max(1.0));
    }

    #[test]
    fn morita_identities_hold((su, sv) in params(), seed in 0u64..1000) {
        let g = MoritaGrid::new(1, Rational::new(su.0, su.1), Rational::new(sv.0, sv.1), 2, 2).unwrap();
        let rep = verify_bimodule_preservation::<f64>(&g, 1, seed, false).unwrap();
        prop_assert!(rep.worst() < 1e-12, "{:?}", rep);
    }
}
