//! The Yang–Mills functional and its Euler–Lagrange residuals.

use serde::Serialize;

use crate::algebra::{trace_e, AlgebraElement, LieLabel};
use crate::bimodule::{act_left, ModuleVector};
use crate::calculus::{perturbed_curvature, Connection, Curvature2Form, Perturbation};
use crate::error::{Error, Result};
use crate::lattice::TorusFunction;
use crate::scalar::{Cx, Real};

/// `{Φ,Ψ}_E = Σ_{i<j} Φ(Z_i∧Z_j) ★ Ψ(Z_i∧Z_j)`.
pub fn pair_forms<T: Real>(a: &Curvature2Form<T>, b: &Curvature2Form<T>) -> Result<AlgebraElement<T>> {
    a.xy.star(&b.xy)?.add(&a.xz.star(&b.xz)?)?.add(&a.yz.star(&b.yz)?)
}

/// Relative tolerance on the imaginary part of YM.
pub const YM_IMAG_TOL: f64 = 1e-10;

/// `−τ_E({Θ,Θ}_E)` before the reality check.
pub fn ym_complex<T: Real>(theta: &Curvature2Form<T>) -> Result<Cx<T>> {
    Ok(-trace_e(&pair_forms(theta, theta)?)?)
}

/// `YM = −τ_E({Θ,Θ}_E)`, real for skew curvature.
pub fn ym_value<T: Real>(theta: &Curvature2Form<T>) -> Result<f64> {
    let v = ym_complex(theta)?;
    let (re, im) = (v.re.as_f64(), v.im.as_f64());
    if im.abs() > YM_IMAG_TOL * re.abs().max(1.0) {
        return Err(Error::NotReal { real: re, imag: im });
    }
    // Adding +0 maps −0 to +0.
    Ok(re + 0.0)
}

/// `[∇_W, T] f = ∇_W(T·f) − T·(∇_W f)`.
pub fn commutator_apply<T: Real>(
    nabla: &Connection<T>,
    w: LieLabel,
    t: &AlgebraElement<T>,
    f: &ModuleVector<T>,
) -> Result<ModuleVector<T>> {
    let a = nabla.connect(w, &act_left(t, f)?)?;
    let b = act_left(t, &nabla.connect(w, f)?)?;
    a.sub(&b)
}

/// Left side of the Euler–Lagrange equation for direction `i`, specialized
/// to the Heisenberg basis.
pub fn euler_lagrange_apply<T: Real>(
    nabla: &Connection<T>,
    theta: &Curvature2Form<T>,
    i: LieLabel,
    f: &ModuleVector<T>,
) -> Result<ModuleVector<T>> {
    use LieLabel::*;
    let th = |a, b| theta.get(a, b).expect("off-diagonal");
    match i {
        X => commutator_apply(nabla, Y, &th(X, Y), f)?.add(&commutator_apply(nabla, Z, &th(X, Z), f)?),
        Y => commutator_apply(nabla, X, &th(Y, X), f)?.add(&commutator_apply(nabla, Z, &th(Y, Z), f)?),
        Z => {
            let c = T::lit(nabla.r().grid().c() as f64);
            commutator_apply(nabla, X, &th(Z, X), f)?
                .add(&commutator_apply(nabla, Y, &th(Z, Y), f)?)?
                .sub(&act_left(&theta.xy.scale(Cx::new(c, T::zero())), f)?)
        }
    }
}

/// The same equation from a bracket table:
/// `Σ_j [∇_{Z_j}, Θ(Z_i∧Z_j)] − Σ_{j<k} c^i_{jk}·Θ(Z_j∧Z_k)`.
pub fn euler_lagrange_generic<T: Real>(
    nabla: &Connection<T>,
    theta: &Curvature2Form<T>,
    i: LieLabel,
    f: &ModuleVector<T>,
) -> Result<ModuleVector<T>> {
    let c = nabla.r().grid().c();
    let mut acc = ModuleVector::empty(*f.grid());
    for j in LieLabel::ALL {
        if let Some(t) = theta.get(i, j) {
            acc = acc.add(&commutator_apply(nabla, j, &t, f)?)?;
        }
    }
    for (j, k) in Curvature2Form::<T>::PAIRS {
        let s = LieLabel::structure_constant(c, j, k, i);
        if s != 0 {
            let t = theta.get(j, k).expect("off-diagonal");
            acc = acc.sub(&act_left(&t.scale(Cx::new(T::lit(s as f64), T::zero())), f)?)?;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3)
    }
}

/// Max over the battery of `‖EL_i(f)‖_∞ / (scale·‖f‖_∞)` for each equation.
pub fn critical_residuals<T: Real>(
    nabla: &Connection<T>,
    theta: &Curvature2Form<T>,
    battery: &[ModuleVector<T>],
    scale: f64,
) -> Result<Residuals> {
    let mut r = [0.0f64; 3];
    for f in battery {
        let norm = f.sup_norm().as_f64() * scale;
        if norm == 0.0 {
            continue;
        }
        for (k, e) in euler_lagrange_all(nabla, theta, f)?.iter().enumerate() {
            r[k] = r[k].max(e.sup_norm().as_f64() / norm);
        }
    }
    Ok(Residuals {
        r1: r[0],
        r2: r[1],
        r3: r[2],
    })
}

/// All three left sides at once, reusing `∇_W f`.
pub fn euler_lagrange_all<T: Real>(
    nabla: &Connection<T>,
    theta: &Curvature2Form<T>,
    f: &ModuleVector<T>,
) -> Result<[ModuleVector<T>; 3]> {
    use LieLabel::*;
    let nf = [nabla.connect(X, f)?, nabla.connect(Y, f)?, nabla.connect(Z, f)?];
    let idx = |w: LieLabel| match w {
        X => 0,
        Y => 1,
        Z => 2,
    };
    let comm = |w: LieLabel, t: &AlgebraElement<T>| -> Result<ModuleVector<T>> {
        nabla.connect(w, &act_left(t, f)?)?.sub(&act_left(t, &nf[idx(w)])?)
    };
    let th = |a, b| theta.get(a, b).expect("off-diagonal");
    let c = T::lit(nabla.r().grid().c() as f64);
    Ok([
        comm(Y, &th(X, Y))?.add(&comm(Z, &th(X, Z))?)?,
        comm(X, &th(Y, X))?.add(&comm(Z, &th(Y, Z))?)?,
        comm(X, &th(Z, X))?
            .add(&comm(Y, &th(Z, Y))?)?
            .sub(&act_left(&theta.xy.scale(Cx::new(c, T::zero())), f)?)?,
    ])
}

/// For curvature of multiplication type (every component `θ·δ₀`), the
/// Euler–Lagrange left sides as torus functions:
/// `−∂ₓθ_XY`, `∂ᵧθ_XY`, `∂ᵧθ_XZ + ∂ₓθ_YZ − c·θ_XY`.
pub fn euler_lagrange_elements<T: Real>(theta: &Curvature2Form<T>) -> Result<[TorusFunction<T>; 3]> {
    let xy = theta.xy.to_torus()?;
    let xz = theta.xz.to_torus()?;
    let yz = theta.yz.to_torus()?;
    let c = T::lit(xy.grid().c() as f64);
    let neg = Cx::new(-T::one(), T::zero());
    Ok([
        xy.dx().scale(neg),
        xy.dy(),
        xz.dy().add(&yz.dx())?.sub(&xy.scale(Cx::new(c, T::zero())))?,
    ])
}

/// Split of a residual function into its mean and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    /// `|mean|`.
    pub constant: f64,
    /// `sup |e − mean|`.
    pub oscillatory: f64,
}

pub fn decompose<T: Real>(e: &TorusFunction<T>) -> Decomposition {
    let m = e.mean();
    Decomposition {
        constant: m.norm().as_f64(),
        oscillatory: e.map(|z| z - m).sup_norm().as_f64(),
    }
}

/// First variation `dYM(μ) = −2·Σ_i τ_E(μ_i ★ EL_i)` for multiplication-type
/// curvature and direction.
pub fn first_variation<T: Real>(theta: &Curvature2Form<T>, dir: &Perturbation<T>) -> Result<f64> {
    let el = euler_lagrange_elements(theta)?;
    let mut acc = Cx::new(T::zero(), T::zero());
    for (k, w) in LieLabel::ALL.into_iter().enumerate() {
        acc = acc + dir.get(w).mul(&el[k])?.integrate();
    }
    Ok(-2.0 * acc.re.as_f64())
}

/// Central difference `(YM(∇+tμ) − YM(∇−tμ)) / 2t` around `∇⁰ + base`.
pub fn directional_derivative<T: Real>(
    theta0: &Curvature2Form<T>,
    base: &Perturbation<T>,
    dir: &Perturbation<T>,
    t: T,
) -> Result<f64> {
    let plus = ym_value(&perturbed_curvature(theta0, &base.axpy(t, dir)?)?)?;
    let minus = ym_value(&perturbed_curvature(theta0, &base.axpy(-t, dir)?)?)?;
    Ok((plus - minus) / (2.0 * t.as_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Flavor;
    use crate::lattice::{Grid, GridSpec, Params, Rational};
    use crate::sampling::{rng, skew_torus};

    fn grid() -> Grid {
        let p = Params::new(1, 0.5, Rational::new(1, 4), Rational::new(1, 4)).unwrap();
        Grid::new(
            p,
            GridSpec {
                refinement: 1,
                x_cells: 8,
                y_cells: 4,
                ..GridSpec::default()
            },
        )
        .unwrap()
    }

    fn mult_form(g: &Grid, seed: u64) -> Curvature2Form<f64> {
        let mut r = rng(seed);
        let m = |r: &mut _| AlgebraElement::multiplication(&skew_torus(g, 2, r));
        Curvature2Form {
            xy: m(&mut r),
            xz: m(&mut r),
            yz: m(&mut r),
        }
    }

    #[test]
    fn zero_pairs_to_zero() {
        let g = grid();
        let z = AlgebraElement::<f64>::zero(Flavor::E, g);
        let zero = Curvature2Form {
            xy: z.clone(),
            xz: z.clone(),
            yz: z,
        };
        let psi = mult_form(&g, 1);
        assert_eq!(pair_forms(&zero, &psi).unwrap().sup_norm(), 0.0);
        assert_eq!(ym_value(&zero).unwrap(), 0.0);
    }

    #[test]
    fn p_zero_pairing_is_pointwise() {
        let g = grid();
        let a = mult_form(&g, 2);
        let b = mult_form(&g, 3);
        let direct = a.xy.to_torus().unwrap().mul(&b.xy.to_torus().unwrap()).unwrap();
        let direct = direct
            .add(&a.xz.to_torus().unwrap().mul(&b.xz.to_torus().unwrap()).unwrap())
            .unwrap()
            .add(&a.yz.to_torus().unwrap().mul(&b.yz.to_torus().unwrap()).unwrap())
            .unwrap();
        let paired = pair_forms(&a, &b).unwrap().to_torus().unwrap();
        assert!(paired.max_abs_diff(&direct).unwrap() < 1e-14);
    }

    #[test]
    fn ym_of_skew_form_is_the_l2_norm() {
        let g = grid();
        let a = mult_form(&g, 4);
        let ym = ym_value(&a).unwrap();
        let l2: f64 = a
            .components()
            .iter()
            .map(|(_, e)| e.to_torus().unwrap().map(|z| Cx::new(z.norm_sqr(), 0.0)).integrate().re)
            .sum();
        assert!(ym > 0.0);
        assert!((ym - l2).abs() < 1e-12 * l2);
    }

    #[test]
    fn non_skew_form_is_rejected() {
        let g = grid();
        let mut a = mult_form(&g, 5);
        a.xy =
            a.xy.add(&AlgebraElement::multiplication(&TorusFunction::constant(
                g,
                Cx::new(1.0, 0.0),
            )))
            .unwrap();
        a.xz = a.xz.scale(Cx::new(0.0, 0.0));
        a.yz = a.yz.scale(Cx::new(0.0, 0.0));
        a.xy = a.xy.scale(Cx::new(1.0, 1.0));
        assert!(matches!(ym_value(&a), Err(Error::NotReal { .. })));
    }

    #[test]
    fn first_variation_matches_central_difference() {
        let g = grid();
        let theta0 = mult_form(&g, 6);
        let mut r = rng(7);
        let base = Perturbation::new(
            skew_torus(&g, 1, &mut r),
            skew_torus(&g, 1, &mut r),
            skew_torus(&g, 1, &mut r),
        )
        .unwrap();
        let dir = Perturbation::new(
            skew_torus(&g, 1, &mut r),
            skew_torus(&g, 1, &mut r),
            skew_torus(&g, 1, &mut r),
        )
        .unwrap();
        let theta = perturbed_curvature(&theta0, &base).unwrap();
        let fd = directional_derivative(&theta0, &base, &dir, 1e-4).unwrap();
        let an = first_variation(&theta, &dir).unwrap();
        assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
    }
}
