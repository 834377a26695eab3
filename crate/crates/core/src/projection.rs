//! The smooth function R with `⟨R,R⟩_E = Id`, the projection `Q = ⟨R,R⟩_D`
//! and the pointwise conditions R has to satisfy.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::algebra::{AlgebraElement, Flavor, LieLabel};
use crate::bimodule::{act_right, inner_d, inner_d_at, inner_e_at, ModuleVector};
use crate::error::{Error, Result};
use crate::lattice::{ratio_f64, DiffScheme, Grid, Rational, ScalarField};
use crate::scalar::{Cx, Real};

/// Placement of the two ramps of R, as fractions of `su`: R vanishes for
/// `x ≤ −ramp_start·su`, rises on `(−ramp_start·su, −ramp_end·su)` and is 1
/// from there up to the mirrored ramp starting at `(1 − ramp_start)·su`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpSpec {
    #[serde(serialize_with = "ser_ratio")]
    pub ramp_start: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub ramp_end: Rational,
}

fn ser_ratio<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self {
            ramp_start: Rational::new(1, 2),
            ramp_end: Rational::new(1, 4),
        }
    }
}

impl BumpSpec {
    pub fn validate(&self) -> Result<()> {
        let ok =
            self.ramp_end > Rational::zero() && self.ramp_end < self.ramp_start && self.ramp_start <= Rational::one();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "ramp fractions need 0 < ramp_end < ramp_start ≤ 1, got {} and {}",
                self.ramp_start, self.ramp_end
            )))
        }
    }
}

/// Flat-ended ramp `h(t) = φ(t)/(φ(t) + φ(1−t))`, `φ(t) = exp(−1/t)`.
pub fn ramp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

/// `(√h)'(t)`.
fn sqrt_ramp_slope(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let h = ramp(t);
    if h == 0.0 {
        return 0.0;
    }
    h.sqrt() * (1.0 - h) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / 2.0
}

/// Samples of R and R′ at x-index `i`. The right ramp reuses the left
/// ramp's parameter at `i − nsu`, so `R²(x) + R²(x − su) = 1` is exact up to
/// one rounding in the ramp.
fn r_and_slope(i: i64, nsu: i64, su: f64, a: f64, b: f64) -> (f64, f64) {
    let t_of = |k: i64| (k as f64 / nsu as f64 + a) / (a - b);
    let dt_dx = 1.0 / ((a - b) * su);
    let left_lo = -a * nsu as f64;
    let left_hi = -b * nsu as f64;
    let x = i as f64;
    if x <= left_lo {
        (0.0, 0.0)
    } else if x < left_hi {
        let t = t_of(i);
        (ramp(t).sqrt(), sqrt_ramp_slope(t) * dt_dx)
    } else if x <= left_lo + nsu as f64 {
        (1.0, 0.0)
    } else if x < left_hi + nsu as f64 {
        let s = 1.0 - t_of(i - nsu);
        (ramp(s).sqrt(), -sqrt_ramp_slope(s) * dt_dx)
    } else {
        (0.0, 0.0)
    }
}

/// Builds R (real, independent of y) with its analytic x-derivative attached.
pub fn build_r<T: Real>(grid: &Grid, spec: &BumpSpec) -> Result<ModuleVector<T>> {
    spec.validate()?;
    let su_r = grid.params().su();
    if su_r >= Rational::new(1, 2) || su_r <= Rational::zero() {
        return Err(Error::InvalidParams(format!("2ħμ = {su_r} must lie in (0, 1/2)")));
    }
    let nsu = grid.nsu();
    let (a, b) = (ratio_f64(spec.ramp_start), ratio_f64(spec.ramp_end));
    let su = ratio_f64(su_r);
    let lo = (-a * nsu as f64).floor() as i64;
    let hi = ((1.0 - b) * nsu as f64).ceil() as i64;
    let nx = (hi - lo + 1) as usize;
    let val = ScalarField::from_index_fn(*grid, lo, nx, |i, _| {
        Cx::new(T::lit(r_and_slope(i, nsu, su, a, b).0), T::zero())
    })?;
    let der = ScalarField::from_index_fn(*grid, lo, nx, |i, _| {
        Cx::new(T::lit(r_and_slope(i, nsu, su, a, b).1), T::zero())
    })?;
    val.with_analytic_dx(&der)
}

/// The `δ₀` and `δ₁` components of `Q` on one x-period, after checking the
/// `δ₋₁` component is `ḡ(x + su, y + sv)`.
pub fn extract_h_g<T: Real>(q: &AlgebraElement<T>) -> Result<(ScalarField<T>, ScalarField<T>)> {
    q.expect(Flavor::D)?;
    q.check_support(&[-1, 0, 1])?;
    let grid = *q.grid();
    let nxu = grid.nx_unit() as usize;
    let h = q.component_field(0, 0, nxu)?;
    let g = q.component_field(1, 0, nxu)?;
    let gm = q.component_field(-1, 0, nxu)?;
    let phases = grid.half_phase_table::<T>();
    let scale = q.sup_norm().max(T::one());
    let mut worst = T::zero();
    for i in 0..nxu as i64 {
        for j in 0..grid.ny() {
            let want = q.eval(1, i + grid.nsu(), j + grid.nsv(), &phases).conj();
            worst = worst.max((gm.get(i, j) - want).norm());
        }
    }
    if worst > T::lit(1e-12) * scale {
        return Err(Error::Structure {
            property: "δ₋₁ component of Q",
            detail: format!(
                "differs from the conjugate-shifted δ₁ component by {:e}",
                worst.as_f64()
            ),
        });
    }
    Ok((h, g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub name: &'static str,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub(crate) fn push(&mut self, name: &'static str, v: f64) {
        self.entries.push(ConditionEntry { name, max_violation: v });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.max_violation)
    }

    pub fn worst(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.max_violation))
    }

    pub fn failures(&self, tol: f64) -> Vec<&'static str> {
        self.entries
            .iter()
            // Negated so that NaN counts as a failure.
            .filter(|e| {
                !matches!(
                    e.max_violation.partial_cmp(&tol),
                    Some(std::cmp::Ordering::Less | std::cmp::Ordering::Equal)
                )
            })
            .map(|e| e.name)
            .collect()
    }
}

/// Evaluates the idempotence (b), invariance (c) and identity (d) conditions
/// through `Q` and the inner-product sums, and the reduced conditions (A),
/// (B), (C) directly on the samples of R.
pub fn verify_r_conditions<T: Real>(r: &ModuleVector<T>) -> Result<ConditionReport> {
    let grid = *r.grid();
    let (nxu, nsu, nsv, ny, c) = (grid.nx_unit(), grid.nsu(), grid.nsv(), grid.ny(), grid.c());
    let phases = grid.half_phase_table::<T>();
    let mut rep = ConditionReport::default();
    let q = inner_d(r, r)?;
    let qe = |p: i64, i: i64, j: i64| q.eval(p, i, j, &phases);
    let sup = |vals: &mut dyn Iterator<Item = T>| vals.fold(0.0f64, |m, v| m.max(v.as_f64()));
    let period = || (0..nxu).flat_map(|i| (0..ny).map(move |j| (i, j)));

    // (a-1), (a-2): the components of Q against their defining sums.
    let a1 = sup(&mut period().map(|(i, j)| {
        let direct = (-3..=3).fold(T::zero(), |s, k| s + r.get(i + k * nxu, j).norm_sqr());
        (qe(0, i, j) - Cx::new(direct, T::zero())).norm()
    }));
    rep.push("a-1", a1);
    let a2 = sup(&mut period().map(|(i, j)| (qe(1, i, j) - inner_d_at(r, r, i, j, 1, &phases)).norm()));
    rep.push("a-2", a2);

    let outside = q.p_support().into_iter().filter(|p| p.abs() > 1).fold(0.0f64, |m, p| {
        m.max(q.component(p).map_or(0.0, |v| crate::scalar::sup_norm(v).as_f64()))
    });
    rep.push("Q p-support ⊆ {-1,0,1}", outside);

    let g = |i, j| qe(1, i, j);
    let h = |i, j| qe(0, i, j);
    let one = Cx::new(T::one(), T::zero());
    rep.push(
        "b-1",
        sup(&mut period().map(|(i, j)| (g(i, j) * g(i - nsu, j - nsv)).norm())),
    );
    rep.push(
        "b-2",
        sup(&mut period().map(|(i, j)| (g(i, j) * (one - h(i, j) - h(i - nsu, j - nsv))).norm())),
    );
    rep.push(
        "b-3",
        sup(&mut period().map(|(i, j)| {
            let l = g(i, j).norm_sqr() + g(i + nsu, j + nsv).norm_sqr();
            (Cx::new(l, T::zero()) - (h(i, j) - h(i, j) * h(i, j))).norm()
        })),
    );

    // (c-1) from raw sums at x and x + k.
    let c1 = sup(&mut period().flat_map(|(i, j)| {
        let phases = &phases;
        [-2i64, -1, 1, 2].into_iter().map(move |k| {
            let h0 = inner_d_at(r, r, i, j, 0, phases);
            let hk = inner_d_at(r, r, i + k * nxu, j, 0, phases);
            let g0 = inner_d_at(r, r, i, j, 1, phases);
            let gk = inner_d_at(r, r, i + k * nxu, j, 1, phases);
            let ph = phases.get(-c * k * (2 * j - nsv));
            (h0 - hk).norm().max((g0 - ph * gk).norm())
        })
    }));
    rep.push("c-1", c1);

    // (d-1), (d-2) from the raw E-valued sum on one fundamental domain of γ.
    let dom = || (0..nsu).flat_map(|i| (0..ny).map(move |j| (i, j)));
    rep.push(
        "d-1",
        sup(&mut dom().map(|(i, j)| (inner_e_at(r, r, i, j, 0, &phases) - one).norm())),
    );
    rep.push(
        "d-2",
        sup(&mut dom().flat_map(|(i, j)| {
            let phases = &phases;
            [-2i64, -1, 1, 2]
                .into_iter()
                .map(move |p| inner_e_at(r, r, i, j, p, phases).norm())
        })),
    );

    // Reduced conditions on the samples of R.
    let span = r.x_range();
    let xs = || ((span.start - 2 * nsu)..(span.end + 2 * nsu)).flat_map(|i| (0..ny).map(move |j| (i, j)));
    let rr = |i: i64, j: i64| r.get(i, j);
    let r2 = |i: i64, j: i64| r.get(i, j).norm_sqr();
    rep.push(
        "A-1",
        sup(&mut (0..nxu).flat_map(|i| (0..ny).map(move |j| (i, j))).map(|(i, j)| {
            // only one k contributes to each of h and g on (−1/2, 1/2)
            let xi = i - if 2 * i >= nxu { nxu } else { 0 };
            let hv = Cx::new(r2(xi, j), T::zero());
            let gv = rr(xi, j) * rr(xi - nsu, j - nsv).conj();
            let k = xi - i;
            let ph = phases.get(-c * (k / nxu) * (2 * j - nsv));
            (h(i, j) - hv).norm().max((g(i, j) - ph * gv).norm())
        })),
    );
    rep.push(
        "B-1",
        sup(&mut xs().map(|(i, j)| r2(i, j) * (rr(i - nsu, j) * rr(i + nsu, j)).norm())),
    );
    rep.push(
        "B-2",
        sup(&mut xs()
            .filter(|&(i, j)| !(rr(i, j) * rr(i - nsu, j)).is_zero())
            .map(|(i, j)| (r2(i, j) + r2(i - nsu, j) - T::one()).abs())),
    );
    rep.push(
        "B-3",
        sup(&mut xs()
            .filter(|&(i, j)| !rr(i, j).is_zero())
            .map(|(i, j)| (r2(i - nsu, j) + r2(i + nsu, j) + r2(i, j) - T::one()).abs())),
    );
    let width = span.end - span.start;
    let lmax = width / nsu + 2;
    rep.push(
        "C-1",
        sup(&mut xs().flat_map(|(i, j)| {
            (2..=lmax)
                .flat_map(move |l| [l, -l])
                .map(move |l| (rr(i, j) * rr(i - l * nsu, j)).norm())
        })),
    );
    rep.push(
        "C-2",
        sup(&mut xs().map(|(i, j)| {
            let s = (-lmax - 2..=lmax + 2).fold(T::zero(), |s, k| s + r2(i - k * nsu, j));
            (s - T::one()).abs()
        })),
    );
    let jmax = width / nxu + 2;
    rep.push(
        "C-3",
        sup(&mut xs().flat_map(|(i, j)| {
            (1..=jmax)
                .flat_map(move |m| [m, -m])
                .map(move |m| (rr(i, j) * rr(i + m * nxu, j)).norm())
        })),
    );
    Ok(rep)
}

/// `∇⁰_W(f) = R·δ_W(⟨R, f⟩_D)`.
pub fn grassmann_apply<T: Real>(
    r: &ModuleVector<T>,
    w: LieLabel,
    f: &ModuleVector<T>,
    scheme: DiffScheme,
) -> Result<ModuleVector<T>> {
    let phi = inner_d(r, f)?.derivation(w, scheme)?;
    act_right(r, &phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::trace_d;
    use crate::bimodule::{act_right, inner_e};
    use crate::lattice::{GridSpec, Params};

    fn grid(su: (i64, i64), xc: u32) -> Grid {
        let p = Params::new(1, 0.5, Rational::new(su.0, su.1), Rational::new(1, 4)).unwrap();
        Grid::new(
            p,
            GridSpec {
                refinement: 1,
                x_cells: xc,
                y_cells: 2,
                ..GridSpec::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn ramp_is_complementary_and_flat() {
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert!((ramp(t) + ramp(1.0 - t) - 1.0).abs() < 1e-15);
        }
        assert_eq!(ramp(0.0), 0.0);
        assert!(ramp(0.01) < 1e-40);
    }

    #[test]
    fn r_plateau_and_support() {
        let g = grid((1, 4), 16);
        let r = build_r::<f64>(&g, &BumpSpec::default()).unwrap();
        let nsu = g.nsu();
        assert_eq!(r.get(-nsu / 4, 0).re, 1.0);
        assert_eq!(r.get(0, 0).re, 1.0);
        assert_eq!(r.get(-nsu, 0).re, 0.0);
        assert_eq!(r.get(-nsu / 2, 0).re, 0.0);
        let i = -3 * nsu / 4;
        let s = r.get(i, 0).re.powi(2) + r.get(i + nsu, 0).re.powi(2);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn built_r_satisfies_every_condition() {
        for su in [(1, 4), (3, 10), (1, 3)] {
            let g = grid(su, 8);
            let r = build_r::<f64>(&g, &BumpSpec::default()).unwrap();
            let rep = verify_r_conditions(&r).unwrap();
            assert!(rep.failures(1e-12).is_empty(), "{su:?}: {rep:?}");
        }
    }

    #[test]
    fn wide_indicator_violates_c3() {
        let g = grid((1, 4), 4);
        let n = g.nx_unit() as usize + 1;
        let bad = ScalarField::<f64>::from_index_fn(g, 0, n, |_, _| Cx::new(1.0, 0.0)).unwrap();
        let rep = verify_r_conditions(&bad).unwrap();
        assert!(rep.get("C-3").unwrap() > 0.5);
        assert!(rep.failures(1e-12).contains(&"C-3"));
    }

    #[test]
    fn projection_identities() {
        let g = grid((1, 4), 16);
        let r = build_r::<f64>(&g, &BumpSpec::default()).unwrap();
        let q = inner_d(&r, &r).unwrap();
        assert!(q.star(&q).unwrap().max_abs_diff(&q).unwrap() < 1e-12);
        assert!(q.adjoint().max_abs_diff(&q).unwrap() < 1e-12);
        let id = AlgebraElement::identity(Flavor::E, g);
        assert!(inner_e(&r, &r).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
        assert!((trace_d(&q).unwrap() - Cx::new(0.25, 0.0)).norm() < 1e-10);
        assert!(act_right(&r, &q).unwrap().max_abs_diff(&r).unwrap() < 1e-12);
        let (h, gg) = extract_h_g(&q).unwrap();
        // (A-1) at a plateau point and on the overlap
        let nsu = g.nsu();
        let x = nsu / 2 + nsu / 8;
        assert!((gg.get(x, 0).re - r.get(x, 0).re * r.get(x - nsu, 0).re).abs() < 1e-15);
        assert!((h.get(x, 0).re - r.get(x, 0).re.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn identity_has_trivial_h_g() {
        let g = grid((1, 4), 4);
        let (h, gg) = extract_h_g(&AlgebraElement::<f64>::identity(Flavor::D, g)).unwrap();
        assert!(h.max_abs_diff(&h.map(|_| Cx::new(1.0, 0.0))).unwrap() == 0.0);
        assert_eq!(gg.sup_norm(), 0.0);
    }

    #[test]
    fn wide_support_is_rejected_by_extract() {
        let g = grid((1, 4), 4);
        let a = AlgebraElement::<f64>::from_index_fn(Flavor::D, g, [0, 2], |_, _, _| Cx::new(1.0, 0.0));
        assert!(matches!(extract_h_g(&a), Err(Error::PSupport { .. })));
    }

    #[test]
    fn opposite_star_breaks_idempotence() {
        let g = grid((1, 4), 16);
        let r = build_r::<f64>(&g, &BumpSpec::default()).unwrap();
        let q = inner_d(&r, &r).unwrap();
        let qq = q.star_with(&q, crate::algebra::StarConvention::Opposite).unwrap();
        assert!(qq.max_abs_diff(&q).unwrap() > 1e-3);
    }

    #[test]
    fn rejects_bad_bump() {
        let g = grid((1, 4), 4);
        let spec = BumpSpec {
            ramp_start: Rational::new(1, 4),
            ramp_end: Rational::new(1, 2),
        };
        assert!(build_r::<f64>(&g, &spec).is_err());
    }
}
