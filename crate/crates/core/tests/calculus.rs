use qhm::algebra::{AlgebraElement, Flavor, LieLabel};
use qhm::bimodule::{act_left, inner_d};
use qhm::calculus::*;
use qhm::lattice::{DiffScheme, Grid, GridSpec, Params, Rational, TorusFunction};
use qhm::projection::{build_r, grassmann_apply, BumpSpec};
use qhm::sampling::{rng, skew_torus, smooth_battery};
use qhm::Cx;

fn grid_at(x_cells: u32, refinement: u32) -> Grid {
    let p = Params::new(1, 0.5, Rational::new(1, 4), Rational::new(1, 4)).unwrap();
    Grid::new(
        p,
        GridSpec {
            refinement,
            x_cells,
            y_cells: 8,
            ..GridSpec::default()
        },
    )
    .unwrap()
}

fn grid(x_cells: u32) -> Grid {
    grid_at(x_cells, 1)
}

/// Resolution at which the ramp of R is resolved well enough for 1e-6 checks.
fn setup_fine(refinement: u32) -> (Grid, Connection<f64>) {
    let g = grid_at(256, refinement);
    let r = build_r(&g, &BumpSpec::default()).unwrap();
    (g, Connection::grassmann(r, DiffScheme::Spectral))
}

fn setup(x_cells: u32) -> (Grid, Connection<f64>) {
    let g = grid(x_cells);
    let r = build_r(&g, &BumpSpec::default()).unwrap();
    (g, Connection::grassmann(r, DiffScheme::default()))
}

fn rel(a: &qhm::Field, b: &qhm::Field) -> f64 {
    a.max_abs_diff(b).unwrap() / b.sup_norm().max(1e-300)
}

#[test]
fn closed_form_matches_operator_definition() {
    let mut errs = Vec::new();
    for refinement in [1, 2] {
        let (g, nabla) = setup_fine(refinement);
        let theta = curvature_closed(nabla.r(), nabla.scheme()).unwrap();
        let mut worst: f64 = 0.0;
        for f in smooth_battery::<f64>(&g, 2, 1).unwrap() {
            for (w1, w2) in Curvature2Form::<f64>::PAIRS {
                let op = curvature_definition(&nabla, w1, w2, &f).unwrap();
                let cl = act_left(&theta.get(w1, w2).unwrap(), &f).unwrap();
                let scale = f.sup_norm() * theta.xy.sup_norm().max(theta.yz.sup_norm());
                worst = worst.max(op.max_abs_diff(&cl).unwrap() / scale);
            }
        }
        errs.push(worst);
    }
    assert!(errs[1] < 5e-6, "{errs:?}");
    assert!(errs[0] / errs[1] > 8.0, "{errs:?}");
}

#[test]
fn grassmann_curvature_structure() {
    let (g, nabla) = setup(32);
    let theta = curvature_closed(nabla.r(), nabla.scheme()).unwrap();
    assert!(theta.xz.sup_norm() < 1e-6 * theta.xy.sup_norm());
    assert!(theta.skew_defect() < 1e-10 * theta.xy.sup_norm().max(1.0));
    let (f1, f2) = extract_f1_f2(&theta).unwrap();
    assert!(f1.real_part_sup() < 1e-9 * f1.sup_norm());
    assert!(f1.dx().sup_norm() > 1e-3);
    assert!(f2.dx().sup_norm() > 1e-3);
    for i in 0..g.nsu() {
        assert_eq!(f1.eval_index(i, 3), f1.eval_index(i - g.nsu(), 3));
    }
}

#[test]
fn constant_perturbation_shifts_by_a_multiple_of_f() {
    let (g, nabla) = setup(16);
    let k = Cx::new(0.0, 0.7);
    let c = TorusFunction::constant(g, k);
    let z = TorusFunction::zeros(g);
    let p = Perturbation::new(c.clone(), z.clone(), z).unwrap();
    let pert = nabla.clone().with_perturbation(p).unwrap();
    let f = &smooth_battery::<f64>(&g, 1, 2).unwrap()[0];
    let d = pert
        .connect(LieLabel::X, f)
        .unwrap()
        .sub(&nabla.connect(LieLabel::X, f).unwrap())
        .unwrap();
    assert!(d.max_abs_diff(&f.scale(-k)).unwrap() < 1e-14);
    let same = pert.connect(LieLabel::Y, f).unwrap();
    assert!(
        same.max_abs_diff(&grassmann_apply(nabla.r(), LieLabel::Y, f, nabla.scheme()).unwrap())
            .unwrap()
            < 1e-15
    );
}

#[test]
fn perturbation_rejects_non_skew() {
    let g = grid(4);
    let re = TorusFunction::constant(g, Cx::new(1.0, 0.0));
    let z = TorusFunction::zeros(g);
    assert!(Perturbation::new(re, z.clone(), z).is_err());
}

#[test]
fn compatibility_survives_skew_perturbation() {
    let (g, nabla) = setup_fine(2);
    let mut r = rng(5);
    let p = Perturbation::new(
        skew_torus(&g, 2, &mut r),
        skew_torus(&g, 2, &mut r),
        skew_torus(&g, 2, &mut r),
    )
    .unwrap();
    let pert = nabla.with_perturbation(p).unwrap();
    let fs = smooth_battery::<f64>(&g, 2, 6).unwrap();
    for w in LieLabel::ALL {
        let lhs = inner_d(&fs[0], &fs[1])
            .unwrap()
            .derivation(w, DiffScheme::default())
            .unwrap();
        let rhs = inner_d(&pert.connect(w, &fs[0]).unwrap(), &fs[1])
            .unwrap()
            .add(&inner_d(&fs[0], &pert.connect(w, &fs[1]).unwrap()).unwrap())
            .unwrap();
        assert!(
            lhs.max_abs_diff(&rhs).unwrap() < 1e-6 * lhs.sup_norm().max(1.0),
            "{w:?}"
        );
    }
}

#[test]
fn commutators_with_multiplications() {
    let (g, nabla) = setup_fine(2);
    let mut r = rng(7);
    let gf = skew_torus::<f64>(&g, 2, &mut r);
    let f = &smooth_battery::<f64>(&g, 1, 8).unwrap()[0];
    for w in LieLabel::ALL {
        let op = commutator_mult(&nabla, &gf, w, f).unwrap();
        let want = act_left(&commutator_element(&gf, w), f).unwrap();
        let scale = f.sup_norm() * gf.dx().sup_norm();
        assert!(op.max_abs_diff(&want).unwrap() < 1e-6 * scale, "{w:?}");
    }
    // Operator form of the X commutator: ([∇⁰_X, G] f) = (∂ᵧG)·f
    let op = commutator_mult(&nabla, &gf, LieLabel::X, f).unwrap();
    let want = gf.dy().multiply_field(f).unwrap();
    assert!(rel(&op, &want) < 1e-6);
    let cst = TorusFunction::constant(g, Cx::new(0.0, 2.0));
    for w in LieLabel::ALL {
        assert!(commutator_mult(&nabla, &cst, w, f).unwrap().sup_norm() < 1e-9);
    }
}

#[test]
fn multiplications_commute_exactly() {
    let g = grid(8);
    let mut r = rng(9);
    let a = multiplication_element(&skew_torus::<f64>(&g, 2, &mut r));
    let b = multiplication_element(&skew_torus::<f64>(&g, 2, &mut r));
    let f = &smooth_battery::<f64>(&g, 1, 10).unwrap()[0];
    let ab = act_left(&a, &act_left(&b, f).unwrap()).unwrap();
    let ba = act_left(&b, &act_left(&a, f).unwrap()).unwrap();
    assert!(ab.max_abs_diff(&ba).unwrap() < 1e-15);
    assert!(a.star(&b).unwrap().max_abs_diff(&b.star(&a).unwrap()).unwrap() < 1e-15);
}

#[test]
fn perturbed_curvature_matches_definition() {
    let (g, nabla) = setup_fine(2);
    let mut r = rng(11);
    let p = Perturbation::new(
        skew_torus(&g, 1, &mut r),
        skew_torus(&g, 1, &mut r),
        skew_torus(&g, 1, &mut r),
    )
    .unwrap();
    let theta0 = curvature_closed(nabla.r(), nabla.scheme()).unwrap();
    let theta = perturbed_curvature(&theta0, &p).unwrap();
    let pert = nabla.with_perturbation(p).unwrap();
    for f in smooth_battery::<f64>(&g, 1, 12).unwrap() {
        for (w1, w2) in Curvature2Form::<f64>::PAIRS {
            let op = curvature_definition(&pert, w1, w2, &f).unwrap();
            let cl = act_left(&theta.get(w1, w2).unwrap(), &f).unwrap();
            assert!(rel(&op, &cl) < 1e-5, "{w1:?}{w2:?}: {}", rel(&op, &cl));
        }
    }
    assert_eq!(theta.get(LieLabel::X, LieLabel::X), None);
    let _ = AlgebraElement::<f64>::identity(Flavor::E, g);
}

#[test]
fn battery_defects_match_single_ones() {
    let (g, nabla) = setup(32);
    let fs = smooth_battery::<f64>(&g, 3, 13).unwrap();
    let a = qhm::sampling::smooth_d_element(&g, &mut rng(14)).unwrap();
    let all = axiom_defects(&nabla, &fs, &a).unwrap();
    let mut lb: f64 = 0.0;
    let mut cp: f64 = 0.0;
    for w in LieLabel::ALL {
        for k in 0..3 {
            lb = lb.max(leibniz_defect(&nabla, w, &fs[k], &a).unwrap());
            cp = cp.max(compatibility_defect(&nabla, w, &fs[k], &fs[(k + 1) % 3]).unwrap());
        }
    }
    assert_eq!((all.leibniz, all.compatibility), (lb, cp));
    assert!(lb > 0.0 && cp > 0.0);
}
