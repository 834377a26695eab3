use qhm::algebra::{AlgebraElement, Flavor, LieLabel};
use qhm::bimodule::act_left;
use qhm::calculus::*;
use qhm::laplace::*;
use qhm::lattice::{DiffScheme, Grid, GridSpec, Params, Rational, TorusFunction};
use qhm::projection::{build_r, BumpSpec};
use qhm::sampling::{rng, skew_torus, smooth_battery};
use qhm::yangmills::*;
use qhm::Cx;

fn grid_at(x_cells: u32, y_cells: u32, refinement: u32) -> Grid {
    let p = Params::new(1, 0.5, Rational::new(1, 4), Rational::new(1, 4)).unwrap();
    Grid::new(
        p,
        GridSpec {
            refinement,
            x_cells,
            y_cells,
            ..GridSpec::default()
        },
    )
    .unwrap()
}

struct Fine {
    grid: Grid,
    r: qhm::Field,
    sol: CriticalSolution<f64>,
    theta0: Curvature2Form<f64>,
}

fn fine(policy: ZeroModePolicy) -> Fine {
    let grid = grid_at(256, 16, 2);
    let r = build_r(&grid, &BumpSpec::default()).unwrap();
    let sol = solve_critical(&r, DiffScheme::Spectral, policy).unwrap();
    let theta0 = curvature_closed(&r, DiffScheme::Spectral).unwrap();
    Fine { grid, r, sol, theta0 }
}

fn random_direction(g: &Grid, seed: u64) -> Perturbation<f64> {
    let mut r = rng(seed);
    Perturbation::new(
        skew_torus(g, 2, &mut r),
        skew_torus(g, 2, &mut r),
        skew_torus(g, 2, &mut r),
    )
    .unwrap()
}

#[test]
fn generic_equation_matches_the_specialized_ones() {
    let g = grid_at(32, 8, 1);
    let r = build_r(&g, &BumpSpec::default()).unwrap();
    let nabla = Connection::grassmann(r.clone(), DiffScheme::default())
        .with_perturbation(random_direction(&g, 1))
        .unwrap();
    let theta = connection_curvature(&nabla).unwrap();
    for f in smooth_battery::<f64>(&g, 2, 3).unwrap() {
        for i in LieLabel::ALL {
            let a = euler_lagrange_apply(&nabla, &theta, i, &f).unwrap();
            let b = euler_lagrange_generic(&nabla, &theta, i, &f).unwrap();
            assert!(
                a.max_abs_diff(&b).unwrap() <= 1e-12 * b.sup_norm().max(1.0),
                "{}",
                i.name()
            );
        }
        let all = euler_lagrange_all(&nabla, &theta, &f).unwrap();
        for (k, i) in LieLabel::ALL.into_iter().enumerate() {
            assert_eq!(all[k], euler_lagrange_apply(&nabla, &theta, i, &f).unwrap());
        }
    }
}

#[test]
fn zero_curvature_has_zero_residuals() {
    let g = grid_at(16, 4, 1);
    let r = build_r(&g, &BumpSpec::default()).unwrap();
    let nabla = Connection::grassmann(r.clone(), DiffScheme::default());
    let z = AlgebraElement::<f64>::zero(Flavor::E, g);
    let flat = Curvature2Form {
        xy: z.clone(),
        xz: z.clone(),
        yz: z,
    };
    let res = critical_residuals(&nabla, &flat, &smooth_battery(&g, 2, 4).unwrap(), 1.0).unwrap();
    assert_eq!(res.max(), 0.0);
    assert_eq!(ym_value(&flat).unwrap(), 0.0);

    let sol = solve_from_curvature(&flat, ZeroModePolicy::Assign).unwrap();
    assert!(components(&sol.perturbation).iter().all(|g| g.sup_norm() == 0.0));
    let rep = verify_against(
        &r,
        DiffScheme::default(),
        &flat,
        &sol,
        &smooth_battery(&g, 1, 4).unwrap(),
    )
    .unwrap();
    assert_eq!((rep.ym, rep.ym_base, rep.residuals.max()), (0.0, 0.0, 0.0));
}

#[test]
fn critical_pipeline() {
    let fx = fine(ZeroModePolicy::Assign);
    let (a0, f1) = (fx.sol.rhs.a0, &fx.sol.f1);
    assert!(a0.re.abs() < 1e-14 && a0.im.abs() > 0.1, "a0 = {a0}");
    assert!((fx.sol.rhs.discarded_mean - a0).norm() < 1e-9);

    let l2 = f1.map(|z| Cx::new(z.norm_sqr(), 0.0)).integrate().re
        + fx.sol.f2.map(|z| Cx::new(z.norm_sqr(), 0.0)).integrate().re;
    let ym0 = ym_value(&fx.theta0).unwrap();
    assert!((ym0 - l2).abs() < 1e-10 * l2);

    let mut battery = smooth_battery(&fx.grid, 2, 11).unwrap();
    battery.push(fx.r.clone());
    let rep = verify_critical(&fx.r, DiffScheme::Spectral, &fx.sol, &battery).unwrap();
    assert!(rep.residuals.max() < 1e-6, "{:?}", rep.residuals);
    assert!(rep.residuals_base.r3 * rep.scale >= f1.sup_norm());
    assert!(rep.elements.iter().all(|d| d.constant < 1e-12 && d.oscillatory < 1e-6));
    assert!(rep.poisson_residual < 1e-9);
    assert!(rep.ym > 0.0 && rep.ym < rep.ym_base);

    let b0 = fx.sol.f2.mean();
    let theta = perturbed_curvature(&fx.theta0, &fx.sol.perturbation).unwrap();
    assert!((rep.ym - fx.grid.su::<f64>() * b0.norm_sqr()).abs() < 1e-6 * rep.ym);
    for seed in 0..3 {
        let dir = random_direction(&fx.grid, 20 + seed);
        let d = directional_derivative(&fx.theta0, &fx.sol.perturbation, &dir, 1e-4).unwrap();
        assert!(d.abs() < 1e-8 * rep.ym, "{d}");
        assert!(first_variation(&theta, &dir).unwrap().abs() < 1e-8 * rep.ym);
    }
}

#[test]
fn discarding_the_zero_mode_leaves_a_constant_third_residual() {
    let fx = fine(ZeroModePolicy::Discard);
    let c = fx.grid.c() as f64;
    let theta = perturbed_curvature(&fx.theta0, &fx.sol.perturbation).unwrap();
    let el = euler_lagrange_elements(&theta).unwrap();
    let d = decompose(&el[2]);
    assert!((d.constant - c * fx.sol.rhs.a0.norm()).abs() < 1e-9);
    assert!(d.oscillatory < 1e-6 * residual_scale(&fx.sol.f1, &fx.sol.f2));
    let dev = theta
        .xy
        .to_torus()
        .unwrap()
        .max_abs_diff(&TorusFunction::constant(fx.grid, fx.sol.rhs.a0))
        .unwrap();
    assert!(dev < 1e-8 * fx.sol.f1.sup_norm(), "{dev:e}");
}

#[test]
fn residuals_ignore_constant_shifts_of_g1_and_g2() {
    let fx = fine(ZeroModePolicy::Assign);
    let shift = |w: LieLabel| {
        let p = &fx.sol.perturbation;
        let k = TorusFunction::constant(fx.grid, Cx::new(0.0, 0.37));
        let g = |v: LieLabel| {
            if v == w {
                p.get(v).add(&k).unwrap()
            } else {
                p.get(v).clone()
            }
        };
        Perturbation::new(g(LieLabel::X), g(LieLabel::Y), g(LieLabel::Z)).unwrap()
    };
    let base = perturbed_curvature(&fx.theta0, &fx.sol.perturbation).unwrap();
    let battery = smooth_battery(&fx.grid, 1, 5).unwrap();
    let nabla = Connection::grassmann(fx.r.clone(), DiffScheme::Spectral)
        .with_perturbation(fx.sol.perturbation.clone())
        .unwrap();
    let k = residual_scale(&fx.sol.f1, &fx.sol.f2);
    let r0 = critical_residuals(&nabla, &base, &battery, k).unwrap();
    for w in [LieLabel::X, LieLabel::Y] {
        let p = shift(w);
        let theta = perturbed_curvature(&fx.theta0, &p).unwrap();
        for (a, b) in euler_lagrange_elements(&theta)
            .unwrap()
            .iter()
            .zip(euler_lagrange_elements(&base).unwrap().iter())
        {
            assert!(a.max_abs_diff(b).unwrap() < 1e-12 * k);
        }
        let nabla = nabla.base().with_perturbation(p).unwrap();
        let r1 = critical_residuals(&nabla, &theta, &battery, k).unwrap();
        for (a, b) in [(r0.r1, r1.r1), (r0.r2, r1.r2), (r0.r3, r1.r3)] {
            assert!((a - b).abs() < 1e-12, "{r0:?} {r1:?}");
        }
    }
}

#[test]
fn commutator_laplacian_acts_as_the_solved_right_hand_side() {
    let fx = fine(ZeroModePolicy::Assign);
    let nabla0 = Connection::grassmann(fx.r.clone(), DiffScheme::Spectral);
    let w = AlgebraElement::multiplication(&fx.sol.rhs.w);
    for f in smooth_battery::<f64>(&fx.grid, 2, 9).unwrap() {
        let lhs = commutator_laplacian(&nabla0, &fx.sol.g3, &f).unwrap();
        let rhs = act_left(&w, &f).unwrap();
        let err = lhs.max_abs_diff(&rhs).unwrap() / (fx.sol.rhs.w.sup_norm() * f.sup_norm());
        assert!(err < 1e-6, "{err:e}");
    }
}
