//! The invariant battery behind `verify`.

use serde::Serialize;

use qhm::algebra::{AlgebraElement, Flavor, LieLabel, StarConvention};
use qhm::bimodule::{act_left, act_right, inner_d, inner_e, trace_d, trace_e, ModuleVector};
use qhm::calculus::{
    axiom_defects, curvature_closed, curvature_definition, curvature_structure, Connection, Curvature2Form,
};
use qhm::lattice::{ratio_f64, Grid, TorusFunction};
use qhm::projection::{build_r, verify_r_conditions};
use qhm::sampling::{rng, smooth_battery, smooth_d_element};
use qhm::{Complex, Element, Field};

use crate::config::RunConfig;
use crate::report::{Check, Checks};
use crate::{GridSummary, StageError};

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub grid: GridSummary,
    pub checks: Checks,
    pub pass: bool,
}

fn rel_elem(a: &Element, b: &Element) -> Result<f64, qhm::Error> {
    let s = a.sup_norm().max(b.sup_norm());
    Ok(if s == 0.0 { 0.0 } else { a.max_abs_diff(b)? / s })
}

fn rel_field(a: &Field, b: &Field) -> Result<f64, qhm::Error> {
    let s = a.sup_norm().max(b.sup_norm());
    Ok(if s == 0.0 { 0.0 } else { a.max_abs_diff(b)? / s })
}

/// Worst of `|Im τ|` and `max(0, −Re τ)`, relative to `|τ|`.
fn positivity(t: Complex) -> f64 {
    let n = t.norm();
    if n == 0.0 {
        0.0
    } else {
        t.im.abs().max(-t.re).max(0.0) / n
    }
}

fn condition_anchor(name: &str) -> &'static str {
    match name {
        "a-1" => "h(x,y) = Σ_k |R(x+k,y)|²",
        "a-2" => "g = δ₁-component of ⟨R,R⟩_D from its defining sum",
        "Q p-support ⊆ {-1,0,1}" => "⟨R,R⟩_D(x,y,p) = 0 for |p| ≥ 2",
        "b-1" => "g(x,y)·g(x−su,y−sv) = 0",
        "b-2" => "g(x,y)·(1 − h(x,y) − h(x−su,y−sv)) = 0",
        "b-3" => "|g(x,y)|² + |g(x+su,y+sv)|² = h − h²",
        "c-1" => "h(x+k,y) = h(x,y), g(x+k,y) = e(ck(y − sv/2))·g(x,y)",
        "d-1" => "⟨R,R⟩_E(x,y,0) = 1",
        "d-2" => "⟨R,R⟩_E(x,y,p) = 0 for p ≠ 0",
        "A-1" => "h = |R|², g = R·conj R(x−su,y−sv) on one period",
        "B-1" => "|R(x)|²·R(x−su)·R(x+su) = 0",
        "B-2" => "|R(x)|² + |R(x−su)|² = 1 where R(x)·R(x−su) ≠ 0",
        "B-3" => "|R(x−su)|² + |R(x)|² + |R(x+su)|² = 1 on supp R",
        "C-1" => "R(x)·R(x−l·su) = 0 for |l| ≥ 2",
        "C-2" => "Σ_k |R(x−k·su)|² = 1",
        "C-3" => "R(x)·R(x+m) = 0 for integers m ≠ 0",
        _ => "pointwise condition on R",
    }
}

pub fn run(cfg: &RunConfig) -> Result<VerifyReport, StageError> {
    let grid = cfg.grid().map_err(StageError::config)?;
    let mut checks = Checks::default();
    let stage = |name: &'static str| move |e: qhm::Error| StageError::new(name, e);

    algebra_checks(cfg, &grid, &mut checks).map_err(stage("algebra"))?;
    let r = build_r::<f64>(&grid, &cfg.ramp).map_err(stage("R"))?;
    bimodule_checks(cfg, &grid, &r, &mut checks).map_err(stage("bimodule"))?;
    projection_checks(cfg, &r, &mut checks).map_err(stage("projection"))?;
    calculus_checks(cfg, &grid, &r, &mut checks).map_err(stage("calculus"))?;

    let pass = checks.all_pass();
    Ok(VerifyReport {
        command: "verify",
        config: cfg.clone(),
        grid: GridSummary::of(&grid),
        checks,
        pass,
    })
}

fn algebra_checks(cfg: &RunConfig, grid: &Grid, out: &mut Checks) -> Result<(), qhm::Error> {
    let tol = &cfg.tol;
    let mut r = rng(cfg.seed ^ 0xa1);
    let a = smooth_d_element::<f64>(grid, &mut r)?;
    let b = smooth_d_element::<f64>(grid, &mut r)?;
    let c = smooth_d_element::<f64>(grid, &mut r)?;
    let fam = "algebra";

    let lhs = a.star(&b)?.star(&c)?;
    let rhs = a.star(&b.star(&c)?)?;
    out.push(Check::upper(
        fam,
        "star associativity",
        "(A★B)★C = A★(B★C)",
        rel_elem(&lhs, &rhs)?,
        tol.exact,
    ));

    let lhs = a.star(&b)?.adjoint();
    let rhs = b.adjoint().star(&a.adjoint())?;
    out.push(Check::upper(
        fam,
        "adjoint reverses products",
        "(A★B)* = B*★A*",
        rel_elem(&lhs, &rhs)?,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "adjoint is an involution",
        "A** = A",
        rel_elem(&a.adjoint().adjoint(), &a)?,
        tol.exact,
    ));
    let iso = (a.adjoint().sup_norm() - a.sup_norm()).abs() / a.sup_norm();
    out.push(Check::upper(fam, "adjoint is isometric", "‖A*‖ = ‖A‖", iso, tol.exact));

    let mut inv: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let e = inner_e(
        &smooth_battery::<f64>(grid, 1, cfg.seed ^ 0xa2)?[0],
        &smooth_battery(grid, 1, cfg.seed ^ 0xa3)?[0],
    )?;
    for x in [&a, &e] {
        for k in [-1i64, 1, 2] {
            inv = inv.max(rel_elem(&x.invariance_action(k), x)?);
            for l in [-1i64, 1] {
                comp = comp.max(rel_elem(
                    &x.invariance_action(k).invariance_action(l),
                    &x.invariance_action(k + l),
                )?);
            }
        }
    }
    out.push(Check::upper(
        fam,
        "invariance actions compose",
        "ρ_k∘ρ_l = ρ_{k+l}, γ_k∘γ_l = γ_{k+l}",
        comp,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "elements are invariant",
        "ρ_k A = A, γ_k B = B",
        inv,
        tol.exact,
    ));

    let s = cfg.x_derivative;
    let (dx, dy) = (a.derivation(LieLabel::X, s)?, a.derivation(LieLabel::Y, s)?);
    let bracket = dy.derivation(LieLabel::X, s)?.sub(&dx.derivation(LieLabel::Y, s)?)?;
    let cz = a.derivation(LieLabel::Z, s)?.scale(Complex::new(grid.c() as f64, 0.0));
    out.push(Check::upper(
        fam,
        "derivations close",
        "[δ_X, δ_Y] = c·δ_Z",
        rel_elem(&bracket, &cz)?,
        tol.derivation,
    ));

    let mut tr: f64 = 0.0;
    for w in LieLabel::ALL {
        let d = a.derivation(w, s)?;
        tr = tr.max(trace_d(&d)?.norm() / d.sup_norm().max(f64::MIN_POSITIVE));
    }
    out.push(Check::upper(
        fam,
        "trace is invariant",
        "τ_D(δ_W A) = 0",
        tr,
        tol.derivation,
    ));

    let t = (trace_d(&a.star(&b)?)? - trace_d(&b.star(&a)?)?).norm() / (a.sup_norm() * b.sup_norm());
    out.push(Check::upper(
        fam,
        "trace is tracial",
        "τ_D(A★B) = τ_D(B★A)",
        t,
        tol.trace,
    ));
    Ok(())
}

fn bimodule_checks(cfg: &RunConfig, grid: &Grid, r: &ModuleVector<f64>, out: &mut Checks) -> Result<(), qhm::Error> {
    let tol = &cfg.tol;
    let fam = "bimodule";
    let mut vs = smooth_battery::<f64>(grid, 3, cfg.seed ^ 0xb1)?;
    vs.push(r.clone());
    let phi = smooth_d_element::<f64>(grid, &mut rng(cfg.seed ^ 0xb2))?;

    let (mut imp, mut lin, mut pos_d, mut pos_e, mut pair, mut trac): (f64, f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let n = vs.len();
    for k in 0..n {
        let (f, g, h) = (&vs[k], &vs[(k + 1) % n], &vs[(k + 2) % n]);
        let lhs = act_left(&inner_e(f, g)?, h)?;
        let rhs = act_right(f, &inner_d(g, h)?)?;
        imp = imp.max(rel_field(&lhs, &rhs)?);

        let lhs = inner_d(f, &act_right(g, &phi)?)?;
        let rhs = inner_d(f, g)?.star(&phi)?;
        lin = lin.max(rel_elem(&lhs, &rhs)?);

        pos_d = pos_d.max(positivity(trace_d(&inner_d(f, f)?)?));
        pos_e = pos_e.max(positivity(trace_e(&inner_e(f, f)?)?));

        let td = trace_d(&inner_d(f, g)?)?;
        let te = trace_e(&inner_e(g, f)?)?;
        pair = pair.max((td - te).norm() / (f.sup_norm() * g.sup_norm()));

        let (x, y) = (inner_e(f, g)?, inner_e(h, f)?);
        let t = (trace_e(&x.star(&y)?)? - trace_e(&y.star(&x)?)?).norm() / (x.sup_norm() * y.sup_norm());
        trac = trac.max(t);
    }
    out.push(Check::upper(
        fam,
        "imprimitivity",
        "⟨f,g⟩_E·h = f·⟨g,h⟩_D",
        imp,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "right D-linearity",
        "⟨f, g·Φ⟩_D = ⟨f,g⟩_D★Φ",
        lin,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "positivity of τ_D",
        "τ_D(⟨f,f⟩_D) ≥ 0",
        pos_d,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "positivity of τ_E",
        "τ_E(⟨f,f⟩_E) ≥ 0",
        pos_e,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "trace pairing",
        "τ_D(⟨f,g⟩_D) = τ_E(⟨g,f⟩_E)",
        pair,
        tol.trace,
    ));
    out.push(Check::upper(
        fam,
        "τ_E is tracial",
        "τ_E(A★B) = τ_E(B★A)",
        trac,
        tol.trace,
    ));
    Ok(())
}

fn projection_checks(cfg: &RunConfig, r: &ModuleVector<f64>, out: &mut Checks) -> Result<(), qhm::Error> {
    let tol = &cfg.tol;
    let fam = "projection";
    let grid = *r.grid();
    let q = inner_d(r, r)?;
    let conv = if cfg.debug.tamper_star {
        StarConvention::Opposite
    } else {
        StarConvention::Standard
    };
    out.push(Check::upper(
        fam,
        "Q★Q = Q",
        "⟨R,R⟩_D★⟨R,R⟩_D = ⟨R,R⟩_D",
        q.star_with(&q, conv)?.max_abs_diff(&q)?,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "Q* = Q",
        "⟨R,R⟩_D* = ⟨R,R⟩_D",
        q.adjoint().max_abs_diff(&q)?,
        tol.exact,
    ));
    let id = AlgebraElement::identity(Flavor::E, grid);
    out.push(Check::upper(
        fam,
        "⟨R,R⟩_E = Id",
        "⟨R,R⟩_E = Id_E",
        inner_e(r, r)?.max_abs_diff(&id)?,
        tol.exact,
    ));
    let t = (trace_d(&q)? - Complex::new(ratio_f64(grid.params().su()), 0.0)).norm();
    out.push(Check::upper(fam, "τ_D(Q) = su", "τ_D(⟨R,R⟩_D) = 2ħμ", t, tol.trace));
    for e in verify_r_conditions(r)?.entries {
        out.push(Check::upper(
            "conditions",
            e.name,
            condition_anchor(e.name),
            e.max_violation,
            tol.exact,
        ));
    }
    Ok(())
}

fn calculus_checks(cfg: &RunConfig, grid: &Grid, r: &ModuleVector<f64>, out: &mut Checks) -> Result<(), qhm::Error> {
    let tol = &cfg.tol;
    let fam = "calculus";
    let nabla = Connection::grassmann(r.clone(), cfg.x_derivative);
    let battery = smooth_battery::<f64>(grid, cfg.battery, cfg.seed)?;
    let a = smooth_d_element::<f64>(grid, &mut rng(cfg.seed ^ 0xc1))?;
    let ax = axiom_defects(&nabla, &battery, &a)?;
    out.push(Check::upper(
        fam,
        "Leibniz rule",
        "∇⁰_W(f·A) = ∇⁰_W(f)·A + f·δ_W(A)",
        ax.leibniz,
        tol.connection,
    ));
    out.push(Check::upper(
        fam,
        "metric compatibility",
        "δ_W⟨f,g⟩_D = ⟨∇⁰_W f, g⟩_D + ⟨f, ∇⁰_W g⟩_D",
        ax.compatibility,
        tol.connection,
    ));

    let theta = curvature_closed(r, cfg.x_derivative)?;
    let st = curvature_structure(&theta)?;
    out.push(Check::upper(
        fam,
        "Θ⁰(X,Z) vanishes",
        "Θ⁰(X,Z) = 0",
        st.xz,
        tol.curvature_xz,
    ));
    out.push(Check::upper(
        fam,
        "Θ⁰ has p-support {0}",
        "Θ⁰(X,Y), Θ⁰(Y,Z) ∈ C(L)·δ₀",
        st.off_diagonal,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "Θ⁰ is y-independent",
        "∂_y f₁ = ∂_y f₂ = 0",
        st.y_variation,
        tol.structure,
    ));
    out.push(Check::upper(
        fam,
        "Θ⁰ is su-periodic",
        "f_i(x + su) = f_i(x)",
        st.su_periodicity,
        tol.exact,
    ));
    out.push(Check::upper(
        fam,
        "Θ⁰ is purely imaginary",
        "Re f₁ = Re f₂ = 0",
        st.real_part,
        tol.structure,
    ));

    let scale = theta.xy.sup_norm().max(theta.yz.sup_norm());
    let mut worst: f64 = 0.0;
    for f in &battery[..2] {
        for (w1, w2) in Curvature2Form::<f64>::PAIRS {
            let op = curvature_definition(&nabla, w1, w2, f)?;
            let cl = act_left(&theta.get(w1, w2).expect("off-diagonal"), f)?;
            worst = worst.max(op.max_abs_diff(&cl)? / (scale * f.sup_norm()));
        }
    }
    out.push(Check::upper(
        fam,
        "curvature closed form",
        "∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y] = ⟨R·(δQ★δQ − δQ★δQ), R⟩_E",
        worst,
        tol.closed_form,
    ));

    let f = &battery[0];
    let (su, sv) = (ratio_f64(grid.params().su()), ratio_f64(grid.params().sv()));
    let tau = std::f64::consts::TAU;
    for w in LieLabel::ALL {
        let nf = nabla.connect(w, f)?;
        let mut worst: f64 = 0.0;
        for (n, m) in [(1i64, 0i64), (0, 1), (1, -1), (2, 1)] {
            let chi = TorusFunction::<f64>::character(*grid, n, m);
            let kx = tau * (n as f64 - m as f64 * sv) / su;
            let ky = tau * m as f64;
            let factor = match w {
                LieLabel::X => Complex::new(0.0, -ky),
                LieLabel::Y => Complex::new(0.0, -kx),
                LieLabel::Z => Complex::new(0.0, 0.0),
            };
            let g = AlgebraElement::multiplication(&chi);
            let op = nabla.connect(w, &act_left(&g, f)?)?.sub(&act_left(&g, &nf)?)?;
            // G acts on the left through its conjugate.
            let want = chi.scale(factor).conj().multiply_field(f)?;
            worst = worst.max(op.max_abs_diff(&want)? / (f.sup_norm() * kx.abs().max(ky.abs())));
        }
        let (name, anchor) = match w {
            LieLabel::X => ("commutator [∇⁰_X, G]", "[∇⁰_X, G] = −∂_y G"),
            LieLabel::Y => ("commutator [∇⁰_Y, G]", "[∇⁰_Y, G] = −∂_x G"),
            LieLabel::Z => ("commutator [∇⁰_Z, G]", "[∇⁰_Z, G] = 0"),
        };
        out.push(Check::upper(fam, name, anchor, worst, tol.commutator));
    }
    Ok(())
}
