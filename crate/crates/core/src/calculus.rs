//! Connections `∇ = ∇⁰ + μ` with multiplication-type μ, and their curvature.

use serde::Serialize;

use crate::algebra::{AlgebraElement, Flavor, LieLabel};
use crate::bimodule::{act_left, act_right, inner_d, inner_e, ModuleVector};
use crate::error::{Error, Result};
use crate::lattice::{DiffScheme, Grid, TorusFunction};
use crate::projection::grassmann_apply;
use crate::scalar::{Cx, Real};

/// Skew-symmetric torus functions `(G_X, G_Y, G_Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation<T> {
    g: [TorusFunction<T>; 3],
}

const SKEW_TOL: f64 = 1e-12;

impl<T: Real> Perturbation<T> {
    pub fn new(gx: TorusFunction<T>, gy: TorusFunction<T>, gz: TorusFunction<T>) -> Result<Self> {
        for (name, g) in [("G_X", &gx), ("G_Y", &gy), ("G_Z", &gz)] {
            let re = g.real_part_sup().as_f64();
            if re > SKEW_TOL * g.sup_norm().as_f64().max(1.0) {
                return Err(Error::Structure {
                    property: "skew-symmetry of a multiplication perturbation",
                    detail: format!("{name} has real part up to {re:e}"),
                });
            }
        }
        gx.grid().ensure_same(gy.grid())?;
        gx.grid().ensure_same(gz.grid())?;
        Ok(Self { g: [gx, gy, gz] })
    }

    pub fn zero(grid: Grid) -> Self {
        let z = TorusFunction::zeros(grid);
        Self {
            g: [z.clone(), z.clone(), z],
        }
    }

    pub fn get(&self, w: LieLabel) -> &TorusFunction<T> {
        &self.g[w as usize]
    }

    /// `self + t·dir`.
    pub fn axpy(&self, t: T, dir: &Self) -> Result<Self> {
        let s = Cx::new(t, T::zero());
        let comb = |w: LieLabel| self.get(w).add(&dir.get(w).scale(s));
        Ok(Self {
            g: [comb(LieLabel::X)?, comb(LieLabel::Y)?, comb(LieLabel::Z)?],
        })
    }
}

#[derive(Debug, Clone)]
pub struct Connection<T> {
    r: ModuleVector<T>,
    perturbation: Option<Perturbation<T>>,
    scheme: DiffScheme,
}

impl<T: Real> Connection<T> {
    /// The Grassmannian connection of R.
    pub fn grassmann(r: ModuleVector<T>, scheme: DiffScheme) -> Self {
        Self {
            r,
            perturbation: None,
            scheme,
        }
    }

    pub fn with_perturbation(mut self, p: Perturbation<T>) -> Result<Self> {
        self.r.grid().ensure_same(p.get(LieLabel::X).grid())?;
        self.perturbation = Some(p);
        Ok(self)
    }

    pub fn r(&self) -> &ModuleVector<T> {
        &self.r
    }
    pub fn perturbation(&self) -> Option<&Perturbation<T>> {
        self.perturbation.as_ref()
    }
    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    /// The same R without the perturbation.
    pub fn base(&self) -> Self {
        Self {
            r: self.r.clone(),
            perturbation: None,
            scheme: self.scheme,
        }
    }

    /// `∇_W f = ∇⁰_W f + G_W·f`, the second term through the left action of `G_W·δ₀`.
    pub fn connect(&self, w: LieLabel, f: &ModuleVector<T>) -> Result<ModuleVector<T>> {
        let base = grassmann_apply(&self.r, w, f, self.scheme)?;
        match &self.perturbation {
            None => Ok(base),
            Some(p) => base.add(&act_left(&multiplication_element(p.get(w)), f)?),
        }
    }

    /// `∇_{[W1,W2]}` with `[X,Y] = cZ`.
    fn connect_bracket(&self, w1: LieLabel, w2: LieLabel, f: &ModuleVector<T>) -> Result<ModuleVector<T>> {
        match LieLabel::bracket(w1, w2) {
            None => Ok(ModuleVector::empty(*f.grid())),
            Some((s, w)) => {
                let c = (s * f.grid().c()) as f64;
                Ok(self.connect(w, f)?.scale(Cx::new(T::lit(c), T::zero())))
            }
        }
    }
}

/// Curvature of a connection: the closed Grassmannian form plus the
/// multiplication-type correction.
pub fn connection_curvature<T: Real>(nabla: &Connection<T>) -> Result<Curvature2Form<T>> {
    let theta0 = curvature_closed(nabla.r(), nabla.scheme())?;
    match nabla.perturbation() {
        None => Ok(theta0),
        Some(p) => perturbed_curvature(&theta0, p),
    }
}

fn relative<T: Real>(defect: T, terms: &[T]) -> f64 {
    let scale = terms.iter().fold(T::zero(), |m, t| m.max(*t)).as_f64();
    if scale == 0.0 {
        0.0
    } else {
        defect.as_f64() / scale
    }
}

/// `‖∇_W(f·A) − ∇_W(f)·A − f·δ_W(A)‖` relative to the largest term.
pub fn leibniz_defect<T: Real>(
    nabla: &Connection<T>,
    w: LieLabel,
    f: &ModuleVector<T>,
    a: &AlgebraElement<T>,
) -> Result<f64> {
    let lhs = nabla.connect(w, &act_right(f, a)?)?;
    let t1 = act_right(&nabla.connect(w, f)?, a)?;
    let t2 = act_right(f, &a.derivation(w, nabla.scheme())?)?;
    let d = lhs.sub(&t1)?.sub(&t2)?.sup_norm();
    Ok(relative(d, &[lhs.sup_norm(), t1.sup_norm(), t2.sup_norm()]))
}

/// `‖δ_W⟨f,g⟩_D − ⟨∇_W f, g⟩_D − ⟨f, ∇_W g⟩_D‖` relative to the largest term.
pub fn compatibility_defect<T: Real>(
    nabla: &Connection<T>,
    w: LieLabel,
    f: &ModuleVector<T>,
    g: &ModuleVector<T>,
) -> Result<f64> {
    let lhs = inner_d(f, g)?.derivation(w, nabla.scheme())?;
    let t1 = inner_d(&nabla.connect(w, f)?, g)?;
    let t2 = inner_d(f, &nabla.connect(w, g)?)?;
    let d = lhs.sub(&t1)?.sub(&t2)?.sup_norm();
    Ok(relative(d, &[lhs.sup_norm(), t1.sup_norm(), t2.sup_norm()]))
}

/// Worst relative Leibniz and compatibility defects over a battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomDefects {
    pub leibniz: f64,
    pub compatibility: f64,
}

/// [`leibniz_defect`] for every vector against `a`, and [`compatibility_defect`]
/// for cyclically neighbouring pairs, computing each `∇_W f` once.
pub fn axiom_defects<T: Real>(
    nabla: &Connection<T>,
    battery: &[ModuleVector<T>],
    a: &AlgebraElement<T>,
) -> Result<AxiomDefects> {
    let mut out = AxiomDefects {
        leibniz: 0.0,
        compatibility: 0.0,
    };
    for w in LieLabel::ALL {
        let da = a.derivation(w, nabla.scheme())?;
        let nf = battery
            .iter()
            .map(|f| nabla.connect(w, f))
            .collect::<Result<Vec<_>>>()?;
        for (k, f) in battery.iter().enumerate() {
            let lhs = nabla.connect(w, &act_right(f, a)?)?;
            let t1 = act_right(&nf[k], a)?;
            let t2 = act_right(f, &da)?;
            let d = lhs.sub(&t1)?.sub(&t2)?.sup_norm();
            out.leibniz = out
                .leibniz
                .max(relative(d, &[lhs.sup_norm(), t1.sup_norm(), t2.sup_norm()]));

            let l = (k + 1) % battery.len();
            if l == k {
                continue;
            }
            let g = &battery[l];
            let lhs = inner_d(f, g)?.derivation(w, nabla.scheme())?;
            let t1 = inner_d(&nf[k], g)?;
            let t2 = inner_d(f, &nf[l])?;
            let d = lhs.sub(&t1)?.sub(&t2)?.sup_norm();
            out.compatibility = out
                .compatibility
                .max(relative(d, &[lhs.sup_norm(), t1.sup_norm(), t2.sup_norm()]));
        }
    }
    Ok(out)
}

/// `G·δ₀ ∈ E`.
pub fn multiplication_element<T: Real>(g: &TorusFunction<T>) -> AlgebraElement<T> {
    AlgebraElement::multiplication(g)
}

/// `Θ(W1,W2)f = ∇_{W1}∇_{W2}f − ∇_{W2}∇_{W1}f − ∇_{[W1,W2]}f`.
pub fn curvature_definition<T: Real>(
    nabla: &Connection<T>,
    w1: LieLabel,
    w2: LieLabel,
    f: &ModuleVector<T>,
) -> Result<ModuleVector<T>> {
    let a = nabla.connect(w1, &nabla.connect(w2, f)?)?;
    let b = nabla.connect(w2, &nabla.connect(w1, f)?)?;
    a.sub(&b)?.sub(&nabla.connect_bracket(w1, w2, f)?)
}

/// Curvature values on `X∧Y`, `X∧Z`, `Y∧Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature2Form<T> {
    pub xy: AlgebraElement<T>,
    pub xz: AlgebraElement<T>,
    pub yz: AlgebraElement<T>,
}

impl<T: Real> Curvature2Form<T> {
    pub const PAIRS: [(LieLabel, LieLabel); 3] = [
        (LieLabel::X, LieLabel::Y),
        (LieLabel::X, LieLabel::Z),
        (LieLabel::Y, LieLabel::Z),
    ];

    /// `Θ(W1, W2)`, extended antisymmetrically; `None` on the diagonal.
    pub fn get(&self, w1: LieLabel, w2: LieLabel) -> Option<AlgebraElement<T>> {
        use LieLabel::*;
        let neg = Cx::new(-T::one(), T::zero());
        match (w1, w2) {
            (X, Y) => Some(self.xy.clone()),
            (X, Z) => Some(self.xz.clone()),
            (Y, Z) => Some(self.yz.clone()),
            (Y, X) => Some(self.xy.scale(neg)),
            (Z, X) => Some(self.xz.scale(neg)),
            (Z, Y) => Some(self.yz.scale(neg)),
            _ => None,
        }
    }

    pub fn components(&self) -> [(&'static str, &AlgebraElement<T>); 3] {
        [("XY", &self.xy), ("XZ", &self.xz), ("YZ", &self.yz)]
    }

    /// Largest `sup |Θ* + Θ|` over the three components.
    pub fn skew_defect(&self) -> T {
        self.components().iter().fold(T::zero(), |m, (_, a)| {
            m.max(a.adjoint().add(a).map(|s| s.sup_norm()).unwrap_or(T::infinity()))
        })
    }
}

/// `Θ⁰(W1,W2) = ⟨R·(δ_{W1}Q ★ δ_{W2}Q − δ_{W2}Q ★ δ_{W1}Q), R⟩_E`, `Q = ⟨R,R⟩_D`.
pub fn curvature_closed<T: Real>(r: &ModuleVector<T>, scheme: DiffScheme) -> Result<Curvature2Form<T>> {
    let q = inner_d(r, r)?;
    let d = [
        q.derivation(LieLabel::X, scheme)?,
        q.derivation(LieLabel::Y, scheme)?,
        q.derivation(LieLabel::Z, scheme)?,
    ];
    let pair = |a: usize, b: usize| -> Result<AlgebraElement<T>> {
        let comm = d[a].star(&d[b])?.sub(&d[b].star(&d[a])?)?;
        inner_e(&act_right(r, &comm)?, r)
    };
    Ok(Curvature2Form {
        xy: pair(0, 1)?,
        xz: pair(0, 2)?,
        yz: pair(1, 2)?,
    })
}

/// Tolerance (relative to `max(1, sup)`) for the structure checks in [`extract_f1_f2`].
pub const STRUCTURE_TOL: f64 = 1e-9;

/// `f₁, f₂` with `Θ⁰(X,Y) = f₁δ₀`, `Θ⁰(Y,Z) = f₂δ₀`, after checking p-support,
/// y-independence, su-periodicity and skew-symmetry. Rows are replaced by
/// their y-means and real parts dropped.
pub fn extract_f1_f2<T: Real>(theta: &Curvature2Form<T>) -> Result<(TorusFunction<T>, TorusFunction<T>)> {
    Ok((one_variable(&theta.xy, "Θ(X,Y)")?, one_variable(&theta.yz, "Θ(Y,Z)")?))
}

fn one_variable<T: Real>(a: &AlgebraElement<T>, which: &str) -> Result<TorusFunction<T>> {
    a.expect(Flavor::E)?;
    let grid = *a.grid();
    let scale = a.sup_norm().as_f64().max(1.0);
    let tol = STRUCTURE_TOL * scale;
    let off: f64 = a
        .components()
        .filter(|(p, _)| *p != 0)
        .fold(0.0, |m, (_, v)| m.max(crate::scalar::sup_norm(v).as_f64()));
    if off > tol {
        return Err(Error::Structure {
            property: "p-support {0}",
            detail: format!("{which} has off-diagonal components up to {off:e}"),
        });
    }
    let comp = a.clone().prune(T::lit(tol)).to_torus()?;
    let ny = grid.ny() as usize;
    let mut rows = Vec::with_capacity(comp.data().len());
    let mut y_dev = 0.0f64;
    for row in comp.data().chunks(ny) {
        let mean = row.iter().fold(Cx::new(T::zero(), T::zero()), |s, z| s + z) / T::lit(ny as f64);
        y_dev = row.iter().fold(y_dev, |m, z| m.max((z - mean).norm().as_f64()));
        rows.extend(std::iter::repeat_n(mean, ny));
    }
    if y_dev > tol {
        return Err(Error::Structure {
            property: "independence of y",
            detail: format!("{which} varies in y by {y_dev:e}"),
        });
    }
    let f = TorusFunction::new(grid, rows)?;
    let mut period_dev = 0.0f64;
    for i in 0..grid.nsu() {
        period_dev = period_dev.max((f.eval_index(i, 0) - f.eval_index(i - grid.nsu(), 0)).norm().as_f64());
    }
    if period_dev > tol {
        return Err(Error::Structure {
            property: "su-periodicity",
            detail: format!("{which} changes by {period_dev:e} under x ↦ x − su"),
        });
    }
    let re = f.real_part_sup().as_f64();
    if re > tol {
        return Err(Error::Structure {
            property: "skew-symmetry",
            detail: format!("{which} has real part up to {re:e}"),
        });
    }
    Ok(f.map(|z| Cx::new(T::zero(), z.im)))
}

/// Measured structure of a curvature form, each entry relative to
/// `max(‖Θ(X,Y)‖, ‖Θ(Y,Z)‖)` except `xz`, which is absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureStructure {
    pub xz: f64,
    pub off_diagonal: f64,
    pub y_variation: f64,
    pub su_periodicity: f64,
    pub real_part: f64,
}

pub fn curvature_structure<T: Real>(theta: &Curvature2Form<T>) -> Result<CurvatureStructure> {
    let scale = theta
        .xy
        .sup_norm()
        .max(theta.yz.sup_norm())
        .as_f64()
        .max(f64::MIN_POSITIVE);
    let mut out = CurvatureStructure {
        xz: theta.xz.sup_norm().as_f64(),
        off_diagonal: 0.0,
        y_variation: 0.0,
        su_periodicity: 0.0,
        real_part: 0.0,
    };
    for a in [&theta.xy, &theta.yz] {
        a.expect(Flavor::E)?;
        let grid = *a.grid();
        for (p, v) in a.components() {
            if p != 0 {
                out.off_diagonal = out.off_diagonal.max(crate::scalar::sup_norm(v).as_f64() / scale);
            }
        }
        let Some(v) = a.component(0) else { continue };
        let ny = grid.ny() as usize;
        for row in v.chunks(ny) {
            let mean = row.iter().fold(Cx::new(T::zero(), T::zero()), |s, z| s + z) / T::lit(ny as f64);
            for z in row {
                out.y_variation = out.y_variation.max((z - mean).norm().as_f64() / scale);
                out.real_part = out.real_part.max(z.re.abs().as_f64() / scale);
            }
        }
        let phases = grid.half_phase_table::<T>();
        for i in 0..grid.nsu() {
            for j in 0..grid.ny() {
                let d = a.eval(0, i + grid.nsu(), j, &phases) - a.eval(0, i, j, &phases);
                out.su_periodicity = out.su_periodicity.max(d.norm().as_f64() / scale);
            }
        }
    }
    Ok(out)
}

/// `[∇⁰_W, G] f = ∇⁰_W(G·f) − G·(∇⁰_W f)` with `G` acting through `G·δ₀ ∈ E`.
pub fn commutator_mult<T: Real>(
    nabla0: &Connection<T>,
    g: &TorusFunction<T>,
    w: LieLabel,
    f: &ModuleVector<T>,
) -> Result<ModuleVector<T>> {
    let base = nabla0.base();
    let ge = multiplication_element(g);
    let a = base.connect(w, &act_left(&ge, f)?)?;
    let b = act_left(&ge, &base.connect(w, f)?)?;
    a.sub(&b)
}

/// The E-element `[∇⁰_W, G·δ₀]`: `−∂ᵧG`, `−∂ₓG`, `0` for `W = X, Y, Z`.
pub fn commutator_element<T: Real>(g: &TorusFunction<T>, w: LieLabel) -> AlgebraElement<T> {
    let neg = Cx::new(-T::one(), T::zero());
    match w {
        LieLabel::X => multiplication_element(&g.dy().scale(neg)),
        LieLabel::Y => multiplication_element(&g.dx().scale(neg)),
        LieLabel::Z => AlgebraElement::zero(Flavor::E, *g.grid()),
    }
}

/// Curvature of `∇⁰ + μ`: `Θ(W1,W2) = Θ⁰(W1,W2) + [∇⁰_{W1}, μ_{W2}] − [∇⁰_{W2}, μ_{W1}]
/// + [μ_{W1}, μ_{W2}] − μ_{[W1,W2]}`, where multiplication operators commute.
pub fn perturbed_curvature<T: Real>(theta0: &Curvature2Form<T>, p: &Perturbation<T>) -> Result<Curvature2Form<T>> {
    let c = theta0.xy.grid().c() as f64;
    let comp = |w1: LieLabel, w2: LieLabel, base: &AlgebraElement<T>| -> Result<AlgebraElement<T>> {
        let mut out = base
            .add(&commutator_element(p.get(w2), w1))?
            .sub(&commutator_element(p.get(w1), w2))?;
        if let Some((s, w)) = LieLabel::bracket(w1, w2) {
            let mu = multiplication_element(p.get(w)).scale(Cx::new(T::lit(s as f64 * c), T::zero()));
            out = out.sub(&mu)?;
        }
        Ok(out)
    };
    use LieLabel::*;
    Ok(Curvature2Form {
        xy: comp(X, Y, &theta0.xy)?,
        xz: comp(X, Z, &theta0.xz)?,
        yz: comp(Y, Z, &theta0.yz)?,
    })
}
