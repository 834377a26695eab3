//! Spectral Poisson solve on the skew torus and the critical perturbation
//! built from it.

use serde::Serialize;

use crate::algebra::LieLabel;
use crate::bimodule::ModuleVector;
use crate::calculus::{
    commutator_mult, curvature_closed, extract_f1_f2, perturbed_curvature, Connection, Curvature2Form, Perturbation,
};
use crate::error::{Error, Result};
use crate::lattice::{DiffScheme, TorusFunction};
use crate::scalar::{czero, Cx, Real};
use crate::yangmills::{critical_residuals, decompose, euler_lagrange_elements, ym_value, Decomposition, Residuals};

/// Mean-zero right-hand side of `ΔG₃ = w`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonRHS<T> {
    pub w: TorusFunction<T>,
    /// Mean of `f₁` over the torus.
    pub a0: Cx<T>,
    /// Constant removed from `∂ₓf₂ + c·a₀`.
    pub discarded_mean: Cx<T>,
}

/// `w = ∂ₓf₂ + c·a₀` with its mean removed.
pub fn assemble_rhs<T: Real>(f1: &TorusFunction<T>, f2: &TorusFunction<T>, c: i64) -> PoissonRHS<T> {
    let a0 = f1.mean();
    let raw = f2.dx().map(|z| z + a0 * T::lit(c as f64));
    let m = raw.mean();
    PoissonRHS {
        w: raw.map(|z| z - m),
        a0,
        discarded_mean: m,
    }
}

/// Relative size of a mean that counts as zero.
pub const MEAN_TOL: f64 = 1e-12;

/// Solves `ΔG = w` for mean-zero `w`, fixing the constant mode to 0.
pub fn solve_poisson<T: Real>(w: &TorusFunction<T>) -> Result<TorusFunction<T>> {
    let mean = w.mean();
    if mean.norm().as_f64() > MEAN_TOL * w.sup_norm().as_f64().max(1.0) {
        return Err(Error::NonzeroMean {
            mean: mean.norm().as_f64(),
        });
    }
    Ok(w.spectrum()
        .apply(|mode| {
            let s = mode.laplacian_symbol();
            if s.norm_sqr() == T::zero() {
                czero()
            } else {
                Cx::new(T::one(), T::zero()) / s
            }
        })
        .inverse())
}

/// What happens to the constant `c·a₀` that `ΔG₃ = w` cannot absorb.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroModePolicy {
    /// Drop it; it reappears as the constant part of the third residual.
    Discard,
    /// Add `a₀/c` to `G₃`, which cancels `Θ(X,Y)` outright.
    #[default]
    Assign,
}

impl std::str::FromStr for ZeroModePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discard" => Ok(Self::Discard),
            "assign" => Ok(Self::Assign),
            _ => Err(Error::InvalidParams(format!("unknown zero-mode policy {s:?}"))),
        }
    }
}

/// `G₂ = 0` and `G₁ = ∫ (c·G₃ − f̃₁) dx`, the integrand taken mean-free.
pub fn build_perturbation<T: Real>(
    f1: &TorusFunction<T>,
    g3: &TorusFunction<T>,
    c: i64,
    policy: ZeroModePolicy,
) -> Result<Perturbation<T>> {
    let a0 = f1.mean();
    let g3_mean = g3.mean();
    let cc = T::lit(c as f64);
    let integrand = g3.map(|z| (z - g3_mean) * cc).sub(&f1.map(|z| z - a0))?;
    let kernel = integrand.x_kernel_part().sup_norm().as_f64();
    if kernel > MEAN_TOL * integrand.sup_norm().as_f64().max(1.0) {
        return Err(Error::NonzeroMean { mean: kernel });
    }
    let g1 = integrand.antiderivative_x();
    let g3 = match policy {
        ZeroModePolicy::Discard => g3.clone(),
        ZeroModePolicy::Assign => g3.map(|z| z + a0 / cc),
    };
    Perturbation::new(g1, TorusFunction::zeros(*g3.grid()), g3)
}

/// Everything the solve stage produces.
#[derive(Debug, Clone)]
pub struct CriticalSolution<T> {
    pub f1: TorusFunction<T>,
    pub f2: TorusFunction<T>,
    pub rhs: PoissonRHS<T>,
    pub g3: TorusFunction<T>,
    pub perturbation: Perturbation<T>,
}

/// `R → Θ⁰ → (f₁, f₂) → w → G₃ → (G₁, 0, G₃)`.
pub fn solve_critical<T: Real>(
    r: &ModuleVector<T>,
    scheme: DiffScheme,
    policy: ZeroModePolicy,
) -> Result<CriticalSolution<T>> {
    solve_from_curvature(&curvature_closed(r, scheme)?, policy)
}

/// The solve stage starting from a given `Θ⁰`.
pub fn solve_from_curvature<T: Real>(
    theta0: &Curvature2Form<T>,
    policy: ZeroModePolicy,
) -> Result<CriticalSolution<T>> {
    let c = theta0.xy.grid().c();
    let (f1, f2) = extract_f1_f2(theta0)?;
    let rhs = assemble_rhs(&f1, &f2, c);
    let g3 = solve_poisson(&rhs.w)?;
    let perturbation = build_perturbation(&f1, &g3, c, policy)?;
    Ok(CriticalSolution {
        f1,
        f2,
        rhs,
        g3,
        perturbation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    /// Operator residuals of the perturbed connection.
    pub residuals: Residuals,
    /// Operator residuals of `∇⁰`.
    pub residuals_base: Residuals,
    /// Mean/oscillation split of each element-level residual, scaled like
    /// the operator residuals.
    pub elements: [Decomposition; 3],
    pub elements_base: [Decomposition; 3],
    pub ym: f64,
    pub ym_base: f64,
    pub a0: [f64; 2],
    pub discarded_mean: [f64; 2],
    /// `‖ΔG₃ − w‖ / ‖w‖`.
    pub poisson_residual: f64,
    /// Normalization of every relative residual.
    pub scale: f64,
}

/// `max(‖f₁‖, ‖f₂‖, ‖∂ₓf₁‖, ‖∂ₓf₂‖)`.
pub fn residual_scale<T: Real>(f1: &TorusFunction<T>, f2: &TorusFunction<T>) -> f64 {
    [f1.sup_norm(), f2.sup_norm(), f1.dx().sup_norm(), f2.dx().sup_norm()]
        .into_iter()
        .map(|v| v.as_f64())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Residuals and YM values for `∇⁰` and `∇⁰ + P`.
pub fn verify_critical<T: Real>(
    r: &ModuleVector<T>,
    scheme: DiffScheme,
    sol: &CriticalSolution<T>,
    battery: &[ModuleVector<T>],
) -> Result<CriticalReport> {
    verify_against(r, scheme, &curvature_closed(r, scheme)?, sol, battery)
}

/// As [`verify_critical`], with `Θ⁰` supplied by the caller.
pub fn verify_against<T: Real>(
    r: &ModuleVector<T>,
    scheme: DiffScheme,
    theta0: &Curvature2Form<T>,
    sol: &CriticalSolution<T>,
    battery: &[ModuleVector<T>],
) -> Result<CriticalReport> {
    let theta0 = theta0.clone();
    let theta = perturbed_curvature(&theta0, &sol.perturbation)?;
    let base = Connection::grassmann(r.clone(), scheme);
    let nabla = base.clone().with_perturbation(sol.perturbation.clone())?;
    let scale = residual_scale(&sol.f1, &sol.f2);
    let split = |th| -> Result<[Decomposition; 3]> {
        Ok(euler_lagrange_elements(th)?.map(|e| {
            let d = decompose(&e);
            Decomposition {
                constant: d.constant / scale,
                oscillatory: d.oscillatory / scale,
            }
        }))
    };
    let w_norm = sol.rhs.w.sup_norm().as_f64();
    let poisson = sol.g3.laplacian().sub(&sol.rhs.w)?.sup_norm().as_f64();
    let pair = |z: Cx<T>| [z.re.as_f64(), z.im.as_f64()];
    Ok(CriticalReport {
        residuals: critical_residuals(&nabla, &theta, battery, scale)?,
        residuals_base: critical_residuals(&base, &theta0, battery, scale)?,
        elements: split(&theta)?,
        elements_base: split(&theta0)?,
        ym: ym_value(&theta)?,
        ym_base: ym_value(&theta0)?,
        a0: pair(sol.rhs.a0),
        discarded_mean: pair(sol.rhs.discarded_mean),
        poisson_residual: if w_norm > 0.0 { poisson / w_norm } else { poisson },
        scale,
    })
}

/// `([∇⁰_X,[∇⁰_X,G]] + [∇⁰_Y,[∇⁰_Y,G]]) f`, which acts as `(ΔG)·δ₀`.
pub fn commutator_laplacian<T: Real>(
    nabla0: &Connection<T>,
    g: &TorusFunction<T>,
    f: &ModuleVector<T>,
) -> Result<ModuleVector<T>> {
    let mut acc = ModuleVector::empty(*f.grid());
    for w in [LieLabel::X, LieLabel::Y] {
        let inner = |v: &ModuleVector<T>| commutator_mult(nabla0, g, w, v);
        let outer = nabla0.connect(w, &inner(f)?)?.sub(&inner(&nabla0.connect(w, f)?)?)?;
        acc = acc.add(&outer)?;
    }
    Ok(acc)
}

/// `G_W` of a perturbation, as a plain array.
pub fn components<T: Real>(p: &Perturbation<T>) -> [&TorusFunction<T>; 3] {
    LieLabel::ALL.map(|w| p.get(w))
}
