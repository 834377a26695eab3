//! `R → Θ⁰ → (f₁, f₂) → G₃ → (G₁, 0, G₃) → residuals`.

use std::path::Path;

use serde::Serialize;

use qhm::algebra::{AlgebraElement, Flavor, LieLabel};
use qhm::calculus::{curvature_closed, extract_f1_f2, Connection, Curvature2Form, Perturbation};
use qhm::laplace::ZeroModePolicy;
use qhm::laplace::{assemble_rhs, build_perturbation, solve_poisson, verify_against, CriticalReport, CriticalSolution};
use qhm::lattice::{Grid, TorusFunction};
use qhm::projection::build_r;
use qhm::sampling::{rng, skew_torus, smooth_battery};
use qhm::yangmills::{directional_derivative, euler_lagrange_all, first_variation, ym_complex, ym_value};

use crate::config::RunConfig;
use crate::report::{write_csv, Check, Checks};
use crate::{GridSummary, StageError};

/// Step of the central difference in the stationarity check.
pub const VARIATION_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct Direction {
    pub index: usize,
    /// Central difference of `t ↦ YM(∇ + tμ)` at 0.
    pub derivative: f64,
    /// `−2·Σ_i τ_E(μ_i·EL_i)`.
    pub first_variation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub refinement: u32,
    pub hx: f64,
    pub hy: f64,
    pub ym: f64,
    pub ym_base: f64,
    /// Operator residual of the perturbed connection on R, max over the three equations.
    pub residual: f64,
    /// Largest oscillatory element residual.
    pub element_residual: f64,
    pub poisson_residual: f64,
    /// Observed order of `residual` against the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub grid: GridSummary,
    pub zero_curvature_stub: bool,
    pub critical: CriticalReport,
    /// `|Im YM| / max(|YM|, 1)` before the real part is taken.
    pub ym_imag: f64,
    /// Expected constant part of the third residual under the zero-mode policy.
    pub r3_constant_expected: f64,
    pub directions: Vec<Direction>,
    pub files: Vec<String>,
    pub convergence: Option<Vec<SweepRow>>,
    pub checks: Checks,
    pub pass: bool,
}

struct Pipeline {
    r: qhm::Field,
    theta0: Curvature2Form<f64>,
    sol: CriticalSolution<f64>,
}

fn run_pipeline(cfg: &RunConfig, grid: &Grid) -> Result<Pipeline, StageError> {
    let r = build_r::<f64>(grid, &cfg.ramp).map_err(|e| StageError::new("R", e))?;
    let theta0 = if cfg.debug.zero_curvature {
        let z = AlgebraElement::zero(Flavor::E, *grid);
        Curvature2Form {
            xy: z.clone(),
            xz: z.clone(),
            yz: z,
        }
    } else {
        curvature_closed(&r, cfg.x_derivative).map_err(|e| StageError::new("curvature", e))?
    };
    let (f1, f2) = extract_f1_f2(&theta0).map_err(|e| StageError::new("extract f1, f2", e))?;
    let rhs = assemble_rhs(&f1, &f2, grid.c());
    let g3 = solve_poisson(&rhs.w).map_err(|e| StageError::new("poisson", e))?;
    let perturbation =
        build_perturbation(&f1, &g3, grid.c(), cfg.zero_mode).map_err(|e| StageError::new("perturbation", e))?;
    Ok(Pipeline {
        r,
        theta0,
        sol: CriticalSolution {
            f1,
            f2,
            rhs,
            g3,
            perturbation,
        },
    })
}

fn residual_battery(cfg: &RunConfig, grid: &Grid, r: &qhm::Field) -> Result<Vec<qhm::Field>, StageError> {
    let mut b = smooth_battery(grid, cfg.residual_battery, cfg.seed).map_err(|e| StageError::new("battery", e))?;
    b.push(r.clone());
    Ok(b)
}

pub fn random_direction(grid: &Grid, seed: u64) -> Perturbation<f64> {
    let mut r = rng(seed);
    let gx = skew_torus(grid, 2, &mut r);
    let gy = skew_torus(grid, 2, &mut r);
    let gz = skew_torus(grid, 2, &mut r);
    Perturbation::new(gx, gy, gz).expect("skew by construction")
}

pub fn run(cfg: &RunConfig, out: &Path, sweep: bool) -> Result<SolveReport, StageError> {
    let grid = cfg.grid().map_err(StageError::config)?;
    let p = run_pipeline(cfg, &grid)?;
    let battery = residual_battery(cfg, &grid, &p.r)?;
    let critical = verify_against(&p.r, cfg.x_derivative, &p.theta0, &p.sol, &battery)
        .map_err(|e| StageError::new("residuals", e))?;

    let stage = |e| StageError::new("stationarity", e);
    let theta = qhm::calculus::perturbed_curvature(&p.theta0, &p.sol.perturbation).map_err(stage)?;
    let ymc = ym_complex(&theta).map_err(stage)?;
    let ym_imag = ymc.im.abs() / ymc.re.abs().max(1.0);
    let mut directions = Vec::new();
    for index in 0..cfg.directions {
        let dir = random_direction(&grid, cfg.seed.wrapping_add(1000 + index as u64));
        let derivative = directional_derivative(&p.theta0, &p.sol.perturbation, &dir, VARIATION_STEP).map_err(stage)?;
        directions.push(Direction {
            index,
            derivative,
            first_variation: first_variation(&theta, &dir).map_err(stage)?,
        });
    }

    let c = grid.c() as f64;
    let a0 = p.sol.rhs.a0.norm();
    let r3_constant_expected = match cfg.zero_mode {
        ZeroModePolicy::Assign => 0.0,
        ZeroModePolicy::Discard => c * a0 / critical.scale,
    };
    let mut checks = solve_checks(cfg, &critical, r3_constant_expected, &directions);
    checks.push(Check::upper(
        "yang-mills",
        "YM(∇) is real",
        "Im τ_E({Θ,Θ}) = 0",
        ym_imag,
        cfg.tol.ym_imag,
    ));

    std::fs::create_dir_all(out).map_err(|e| StageError::io("output", e))?;
    let mut files = Vec::new();
    let fields: [(&str, &TorusFunction<f64>); 4] = [
        ("f1.csv", &p.sol.f1),
        ("f2.csv", &p.sol.f2),
        ("g3.csv", p.sol.perturbation.get(LieLabel::Z)),
        ("g1.csv", p.sol.perturbation.get(LieLabel::X)),
    ];
    for (name, f) in fields {
        write_torus_csv(&out.join(name), f).map_err(|e| StageError::io("output", e))?;
        files.push(name.to_string());
    }

    let convergence = if sweep { Some(run_sweep(cfg)?) } else { None };
    let pass = checks.all_pass();
    Ok(SolveReport {
        command: "solve",
        config: cfg.clone(),
        grid: GridSummary::of(&grid),
        zero_curvature_stub: cfg.debug.zero_curvature,
        critical,
        ym_imag,
        r3_constant_expected,
        directions,
        files,
        convergence,
        checks,
        pass,
    })
}

fn solve_checks(cfg: &RunConfig, rep: &CriticalReport, r3_expected: f64, dirs: &[Direction]) -> Checks {
    let tol = &cfg.tol;
    let fam = "critical";
    let mut out = Checks::default();
    out.push(Check::upper(
        fam,
        "r1",
        "Σ_j [∇_j, Θ(X,Z_j)] − Σ c^X_jk Θ(Z_j,Z_k) = 0",
        rep.residuals.r1,
        tol.residual,
    ));
    out.push(Check::upper(
        fam,
        "r2",
        "Σ_j [∇_j, Θ(Y,Z_j)] − Σ c^Y_jk Θ(Z_j,Z_k) = 0",
        rep.residuals.r2,
        tol.residual,
    ));
    out.push(Check::upper(
        fam,
        "r3 oscillatory part",
        "∂_y θ_XZ + ∂_x θ_YZ − c·θ_XY, mean removed",
        rep.elements[2].oscillatory,
        tol.residual,
    ));
    out.push(Check::upper(
        fam,
        "r3 constant part",
        "mean of the third residual = c·|a₀| if discarded, 0 if assigned",
        (rep.elements[2].constant - r3_expected).abs(),
        tol.residual,
    ));
    for d in dirs {
        out.push(Check::upper(
            fam,
            format!("stationarity direction {}", d.index),
            "d/dt YM(∇ + tμ) at t = 0 vanishes",
            d.derivative.abs(),
            tol.stationarity * rep.ym,
        ));
    }
    if !cfg.debug.zero_curvature {
        out.push(Check::lower(
            fam,
            "∇⁰ is not critical",
            "third residual of ∇⁰ ≫ tolerance",
            rep.residuals_base.r3,
            tol.base_margin * tol.residual,
        ));
    }
    out.push(Check::lower(
        "yang-mills",
        "YM(∇) ≥ 0",
        "YM = −τ_E({Θ,Θ}) ≥ 0",
        rep.ym,
        0.0,
    ));
    out.push(Check::upper(
        "poisson",
        "Poisson residual",
        "ΔG₃ = w",
        rep.poisson_residual,
        tol.poisson,
    ));
    out
}

fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, StageError> {
    let mut rows: Vec<SweepRow> = Vec::new();
    for &refinement in &cfg.sweep {
        let grid = cfg.grid_at(refinement).map_err(StageError::config)?;
        let p = run_pipeline(cfg, &grid)?;
        let stage = |e| StageError::new("sweep", e);
        let theta = qhm::calculus::perturbed_curvature(&p.theta0, &p.sol.perturbation).map_err(stage)?;
        let scale = qhm::laplace::residual_scale(&p.sol.f1, &p.sol.f2);
        let nabla = Connection::grassmann(p.r.clone(), cfg.x_derivative)
            .with_perturbation(p.sol.perturbation.clone())
            .map_err(stage)?;
        let norm = p.r.sup_norm() * scale;
        let worst = euler_lagrange_all(&nabla, &theta, &p.r)
            .map_err(stage)?
            .iter()
            .map(|e| e.sup_norm())
            .fold(0.0, f64::max);
        let residual = if worst > 0.0 { worst / norm } else { 0.0 };
        let element_residual = qhm::yangmills::euler_lagrange_elements(&theta)
            .map_err(stage)?
            .iter()
            .map(|e| qhm::yangmills::decompose(e).oscillatory / scale)
            .fold(0.0, f64::max);
        let w = p.sol.rhs.w.sup_norm();
        let pr = p.sol.g3.laplacian().sub(&p.sol.rhs.w).map_err(stage)?.sup_norm();
        let hx = qhm::lattice::ratio_f64(grid.hx_ratio());
        let order = rows.last().and_then(|prev| {
            (prev.residual > 0.0 && residual > 0.0).then(|| (prev.residual / residual).ln() / (prev.hx / hx).ln())
        });
        rows.push(SweepRow {
            refinement,
            hx,
            hy: qhm::lattice::ratio_f64(grid.hy_ratio()),
            ym: ym_value(&theta).map_err(stage)?,
            ym_base: ym_value(&p.theta0).map_err(stage)?,
            residual,
            element_residual,
            poisson_residual: if w > 0.0 { pr / w } else { pr },
            order,
        });
    }
    Ok(rows)
}

/// Samples on the fundamental domain `[0, su) × [0, 1)`.
pub fn write_torus_csv(path: &Path, f: &TorusFunction<f64>) -> std::io::Result<()> {
    let g = *f.grid();
    let (nsu, ny) = (g.nsu(), g.ny());
    let rows = (0..nsu).flat_map(move |i| {
        (0..ny).map(move |j| {
            let z = f.eval_index(i, j);
            [g.x::<f64>(i), g.y::<f64>(j), z.re, z.im]
        })
    });
    write_csv(path, rows)
}
