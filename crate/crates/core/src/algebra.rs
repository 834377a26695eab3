//! The crossed products `D` (over λ) and `E` (over σ): star products,
//! involutions, the invariance actions ρ and γ, derivations and traces.
//!
//! An element is a finitely supported map `p ↦ Φ(·,·,p)`. Components are
//! stored on one fundamental x-domain (`[0, 1)` for `D`, `[0, su)` for `E`)
//! and extended by the invariance rule, so membership in the fixed-point
//! algebra holds by construction:
//!
//! * `D`: `Φ(x + k, y, p) = e(ckp(y − p·sv/2))·Φ(x, y, p)`
//! * `E`: `Ψ(x + k·su, y, p) = e(cpk(y − k·sv/2))·Ψ(x, y − k·sv, p)`

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{div_floor, DiffScheme, FftPair, Grid, ScalarField, TorusFunction};
use crate::scalar::{ci, czero, Cx, PhaseTable, Real, SplitPhaseTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    D,
    E,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::D => "D",
            Flavor::E => "E",
        }
    }

    /// Number of x-samples in the fundamental domain.
    pub fn period(self, grid: &Grid) -> i64 {
        match self {
            Flavor::D => grid.nx_unit(),
            Flavor::E => grid.nsu(),
        }
    }
}

/// Basis of the Heisenberg Lie algebra, `[X, Y] = cZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LieLabel {
    X,
    Y,
    Z,
}

impl LieLabel {
    pub const ALL: [LieLabel; 3] = [LieLabel::X, LieLabel::Y, LieLabel::Z];

    /// `[a, b] = coefficient·label`, with the coefficient in units of `c`.
    pub fn bracket(a: LieLabel, b: LieLabel) -> Option<(i64, LieLabel)> {
        match (a, b) {
            (LieLabel::X, LieLabel::Y) => Some((1, LieLabel::Z)),
            (LieLabel::Y, LieLabel::X) => Some((-1, LieLabel::Z)),
            _ => None,
        }
    }

    /// Structure constant `c^k_{ij}`.
    pub fn structure_constant(c: i64, i: LieLabel, j: LieLabel, k: LieLabel) -> i64 {
        match Self::bracket(i, j) {
            Some((s, l)) if l == k => s * c,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LieLabel::X => "X",
            LieLabel::Y => "Y",
            LieLabel::Z => "Z",
        }
    }
}

/// Which translation the second factor of a `D` star product sees.
/// `Opposite` exists only to show that the idempotence checks reject it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StarConvention {
    #[default]
    Standard,
    Opposite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement<T> {
    flavor: Flavor,
    grid: Grid,
    comps: BTreeMap<i64, Vec<Cx<T>>>,
}

impl<T: Real> AlgebraElement<T> {
    pub fn zero(flavor: Flavor, grid: Grid) -> Self {
        Self {
            flavor,
            grid,
            comps: BTreeMap::new(),
        }
    }

    /// `1·δ₀`.
    pub fn identity(flavor: Flavor, grid: Grid) -> Self {
        let n = (flavor.period(&grid) * grid.ny()) as usize;
        let mut comps = BTreeMap::new();
        comps.insert(0, vec![Cx::new(T::one(), T::zero()); n]);
        Self { flavor, grid, comps }
    }

    /// Samples `f(p, i, j)` on the fundamental domain for each `p` in `ps`.
    pub fn from_index_fn(
        flavor: Flavor,
        grid: Grid,
        ps: impl IntoIterator<Item = i64>,
        mut f: impl FnMut(i64, i64, i64) -> Cx<T>,
    ) -> Self {
        let nf = flavor.period(&grid);
        let ny = grid.ny();
        let mut comps = BTreeMap::new();
        for p in ps {
            let mut v = Vec::with_capacity((nf * ny) as usize);
            for i in 0..nf {
                for j in 0..ny {
                    v.push(f(p, i, j));
                }
            }
            comps.insert(p, v);
        }
        Self { flavor, grid, comps }
    }

    /// The multiplication-type element `G·δ₀` of `E`.
    pub fn multiplication(g: &TorusFunction<T>) -> Self {
        let mut comps = BTreeMap::new();
        comps.insert(0, g.data().to_vec());
        Self {
            flavor: Flavor::E,
            grid: *g.grid(),
            comps,
        }
    }

    /// The `p = 0` component of an `E` element as a torus function.
    pub fn to_torus(&self) -> Result<TorusFunction<T>> {
        self.expect(Flavor::E)?;
        self.check_support(&[0])?;
        match self.comps.get(&0) {
            Some(v) => TorusFunction::new(self.grid, v.clone()),
            None => Ok(TorusFunction::zeros(self.grid)),
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn p_support(&self) -> Vec<i64> {
        self.comps.keys().copied().collect()
    }
    pub fn component(&self, p: i64) -> Option<&[Cx<T>]> {
        self.comps.get(&p).map(|v| v.as_slice())
    }
    pub fn components(&self) -> impl Iterator<Item = (i64, &[Cx<T>])> {
        self.comps.iter().map(|(p, v)| (*p, v.as_slice()))
    }

    pub(crate) fn insert(&mut self, p: i64, v: Vec<Cx<T>>) {
        debug_assert_eq!(v.len() as i64, self.flavor.period(&self.grid) * self.grid.ny());
        self.comps.insert(p, v);
    }

    pub(crate) fn expect(&self, flavor: Flavor) -> Result<()> {
        if self.flavor == flavor {
            Ok(())
        } else {
            Err(Error::FlavorMismatch {
                expected: flavor.name(),
                found: self.flavor.name(),
            })
        }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        other.expect(self.flavor)?;
        self.grid.ensure_same(&other.grid)
    }

    /// Errors unless every stored component index is in `allowed`.
    pub fn check_support(&self, allowed: &[i64]) -> Result<()> {
        let found = self.p_support();
        if found.iter().all(|p| allowed.contains(p)) {
            Ok(())
        } else {
            Err(Error::PSupport {
                found,
                allowed: allowed.to_vec(),
            })
        }
    }

    fn nf(&self) -> i64 {
        self.flavor.period(&self.grid)
    }

    /// `Φ(x_i, y_j, p)` at any grid point.
    pub fn eval(&self, p: i64, i: i64, j: i64, phases: &PhaseTable<T>) -> Cx<T> {
        let Some(v) = self.comps.get(&p) else { return czero() };
        let (ny, nsv, c) = (self.grid.ny(), self.grid.nsv(), self.grid.c());
        let nf = self.nf();
        let k = div_floor(i, nf);
        let i0 = (i - k * nf) as usize;
        match self.flavor {
            Flavor::D => {
                if k == 0 {
                    return v[i0 * ny as usize + self.grid.wrap_y(j)];
                }
                phases.get(c * k * p * (2 * j - p * nsv)) * v[i0 * ny as usize + self.grid.wrap_y(j)]
            }
            Flavor::E => {
                let s = v[i0 * ny as usize + self.grid.wrap_y(j - k * nsv)];
                if k == 0 {
                    return s;
                }
                phases.get(c * p * k * (2 * j - k * nsv)) * s
            }
        }
    }

    /// `out[j] = Φ(x_i, y_{j+dj}, p)` for a whole row.
    pub fn eval_row(&self, p: i64, i: i64, dj: i64, phases: &PhaseTable<T>, out: &mut [Cx<T>]) {
        let Some(v) = self.comps.get(&p) else {
            out.iter_mut().for_each(|z| *z = czero());
            return;
        };
        let (ny, nsv, c) = (self.grid.ny(), self.grid.nsv(), self.grid.c());
        let nf = self.nf();
        let k = div_floor(i, nf);
        let row = &v[(i - k * nf) as usize * ny as usize..][..ny as usize];
        match self.flavor {
            Flavor::D => {
                for (j, z) in out.iter_mut().enumerate() {
                    let jj = j as i64 + dj;
                    let s = row[self.grid.wrap_y(jj)];
                    *z = if k == 0 {
                        s
                    } else {
                        phases.get(c * k * p * (2 * jj - p * nsv)) * s
                    };
                }
            }
            Flavor::E => {
                for (j, z) in out.iter_mut().enumerate() {
                    let jj = j as i64 + dj;
                    let s = row[self.grid.wrap_y(jj - k * nsv)];
                    *z = if k == 0 {
                        s
                    } else {
                        phases.get(c * p * k * (2 * jj - k * nsv)) * s
                    };
                }
            }
        }
    }

    /// Component `p` sampled on an arbitrary x-window.
    pub fn component_field(&self, p: i64, x0: i64, nx: usize) -> Result<ScalarField<T>> {
        let phases = self.grid.half_phase_table();
        let ny = self.grid.ny() as usize;
        let mut f = ScalarField::zeros(self.grid, x0, nx)?;
        let data = f.data_mut();
        for r in 0..nx {
            self.eval_row(p, x0 + r as i64, 0, &phases, &mut data[r * ny..(r + 1) * ny]);
        }
        Ok(f)
    }

    fn map_components(&self, mut f: impl FnMut(i64, &[Cx<T>]) -> Vec<Cx<T>>) -> Self {
        Self {
            flavor: self.flavor,
            grid: self.grid,
            comps: self.comps.iter().map(|(&p, v)| (p, f(p, v))).collect(),
        }
    }

    fn zip_with(&self, other: &Self, sign: T) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (&p, v) in &other.comps {
            let dst = out.comps.entry(p).or_insert_with(|| vec![czero(); v.len()]);
            for (a, b) in dst.iter_mut().zip(v) {
                *a = *a + b * sign;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, T::one())
    }
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, -T::one())
    }
    pub fn scale(&self, s: Cx<T>) -> Self {
        self.map_components(|_, v| v.iter().map(|z| z * s).collect())
    }

    /// Drops components whose sup-norm is at most `tol`.
    pub fn prune(mut self, tol: T) -> Self {
        self.comps.retain(|_, v| crate::scalar::sup_norm(v) > tol);
        self
    }

    pub fn sup_norm(&self) -> T {
        self.comps
            .values()
            .fold(T::zero(), |m, v| m.max(crate::scalar::sup_norm(v)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Star product with the standard convention.
    pub fn star(&self, other: &Self) -> Result<Self> {
        self.star_with(other, StarConvention::Standard)
    }

    /// `D`: `(A★B)(x,y,p) = Σ_q A(x,y,q)·B(x−q·su, y−q·sv, p−q)`;
    /// `E`: `(A★B)(x,y,p) = Σ_q A(x,y,q)·B(x+q, y, p−q)`.
    pub fn star_with(&self, other: &Self, conv: StarConvention) -> Result<Self> {
        self.compatible(other)?;
        let phases = self.grid.half_phase_table();
        let (nf, ny) = (self.nf(), self.grid.ny() as usize);
        let (nsu, nsv, nxu) = (self.grid.nsu(), self.grid.nsv(), self.grid.nx_unit());
        let dir = match conv {
            StarConvention::Standard => -1,
            StarConvention::Opposite => 1,
        };
        let mut out = Self::zero(self.flavor, self.grid);
        let mut row = vec![czero(); ny];
        for (&q, a) in &self.comps {
            for &pb in other.comps.keys() {
                let p = q + pb;
                let dst = out.comps.entry(p).or_insert_with(|| vec![czero(); nf as usize * ny]);
                for i in 0..nf {
                    let (bi, bj) = match self.flavor {
                        Flavor::D => (i + dir * q * nsu, dir * q * nsv),
                        Flavor::E => (i + q * nxu, 0),
                    };
                    other.eval_row(pb, bi, bj, &phases, &mut row);
                    let base = i as usize * ny;
                    for j in 0..ny {
                        dst[base + j] = dst[base + j] + a[base + j] * row[j];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `D`: `A*(x,y,p) = conj A(x−p·su, y−p·sv, −p)`; `E`: `A*(x,y,p) = conj A(x+p, y, −p)`.
    pub fn adjoint(&self) -> Self {
        let phases = self.grid.half_phase_table();
        let (nf, ny) = (self.nf(), self.grid.ny() as usize);
        let (nsu, nsv, nxu) = (self.grid.nsu(), self.grid.nsv(), self.grid.nx_unit());
        let mut out = Self::zero(self.flavor, self.grid);
        let mut row = vec![czero(); ny];
        for &p in self.comps.keys() {
            let mut v = vec![czero(); nf as usize * ny];
            for i in 0..nf {
                let (si, sj) = match self.flavor {
                    Flavor::D => (i + p * nsu, p * nsv),
                    Flavor::E => (i - p * nxu, 0),
                };
                self.eval_row(p, si, sj, &phases, &mut row);
                for j in 0..ny {
                    v[i as usize * ny + j] = row[j].conj();
                }
            }
            out.comps.insert(-p, v);
        }
        out
    }

    /// ρ_k on `D`: `ē(ckp(y − p·sv/2))·Φ(x+k, y, p)`;
    /// γ_k on `E`: `e(cpk(y − k·sv/2))·Ψ(x − k·su, y − k·sv, p)`.
    pub fn invariance_action(&self, k: i64) -> Self {
        let phases = self.grid.half_phase_table();
        let (nf, ny) = (self.nf(), self.grid.ny() as usize);
        let (nsu, nsv, nxu, c) = (self.grid.nsu(), self.grid.nsv(), self.grid.nx_unit(), self.grid.c());
        let mut row = vec![czero(); ny];
        let comps = self
            .comps
            .keys()
            .map(|&p| {
                let mut v = vec![czero(); nf as usize * ny];
                for i in 0..nf {
                    let (si, sj) = match self.flavor {
                        Flavor::D => (i + k * nxu, 0),
                        Flavor::E => (i - k * nsu, -k * nsv),
                    };
                    self.eval_row(p, si, sj, &phases, &mut row);
                    for j in 0..ny {
                        let jj = j as i64;
                        let ph = match self.flavor {
                            Flavor::D => phases.get(-c * k * p * (2 * jj - p * nsv)),
                            Flavor::E => phases.get(c * p * k * (2 * jj - k * nsv)),
                        };
                        v[i as usize * ny + j] = ph * row[j];
                    }
                }
                (p, v)
            })
            .collect();
        Self {
            flavor: self.flavor,
            grid: self.grid,
            comps,
        }
    }

    /// Derivation `δ_W` on `D`.
    pub fn derivation(&self, w: LieLabel, scheme: DiffScheme) -> Result<Self> {
        self.expect(Flavor::D)?;
        Ok(match w {
            // 2πip, so that [δ_X, δ_Y] = c·δ_Z matches [X, Y] = cZ.
            LieLabel::Z => self.map_components(|p, v| {
                let s = ci(T::TAU() * T::lit(p as f64));
                v.iter().map(|z| z * s).collect()
            }),
            LieLabel::X => self.delta_x(),
            LieLabel::Y => self.delta_y(scheme),
        })
    }

    /// `δ_X Φ = 2πicp(x − p·su/2)·Φ − ∂_yΦ`.
    fn delta_x(&self) -> Self {
        let ny = self.grid.ny() as usize;
        let fft = FftPair::<T>::new(ny);
        let c = T::lit(self.grid.c() as f64);
        let su: T = self.grid.su();
        let half = T::lit(0.5);
        self.map_components(|p, v| {
            let pt = T::lit(p as f64);
            let mut out = v.to_vec();
            for (i, row) in out.chunks_mut(ny).enumerate() {
                fft.differentiate(row, T::one());
                let x: T = self.grid.x(i as i64);
                let m = ci(T::TAU() * c * pt * (x - pt * su * half));
                let src = &v[i * ny..(i + 1) * ny];
                for (d, s) in row.iter_mut().zip(src) {
                    *d = m * s - *d;
                }
            }
            out
        })
    }

    /// `δ_Y Φ = −∂_xΦ`, via the quasi-periodic extension (FD) or via FFT
    /// after removing the twist `e(θx)`, `θ = cp(y − p·sv/2)`.
    fn delta_y(&self, scheme: DiffScheme) -> Self {
        let phases = self.grid.half_phase_table();
        let ny = self.grid.ny() as usize;
        let nxu = self.grid.nx_unit();
        let inv_h = T::lit(nxu as f64);
        match scheme {
            DiffScheme::FiniteDifference(order) => {
                let w: Vec<T> = crate::lattice::central_weights(order).into_iter().map(T::lit).collect();
                let mut plus = vec![czero(); ny];
                let mut minus = vec![czero(); ny];
                self.map_components(|p, _| {
                    let mut out = vec![czero(); nxu as usize * ny];
                    for i in 0..nxu {
                        let dst = &mut out[i as usize * ny..][..ny];
                        for (s, &ws) in w.iter().enumerate() {
                            let s = s as i64 + 1;
                            self.eval_row(p, i + s, 0, &phases, &mut plus);
                            self.eval_row(p, i - s, 0, &phases, &mut minus);
                            for j in 0..ny {
                                dst[j] = dst[j] - (plus[j] - minus[j]) * ws * inv_h;
                            }
                        }
                    }
                    out
                })
            }
            DiffScheme::Spectral => {
                const BLOCK: usize = 8;
                const ANCHOR: usize = 64;
                let (c, nsv, nyi) = (self.grid.c(), self.grid.nsv(), self.grid.ny());
                let n = nxu as usize;
                let fft = FftPair::<T>::new(n);
                let table = SplitPhaseTable::<T>::new(2 * nyi * nxu);
                let mut cols = vec![czero(); BLOCK * n];
                let mut twist = vec![czero(); BLOCK * n];
                self.map_components(|p, v| {
                    let mut out = vec![czero(); v.len()];
                    for j0 in (0..ny).step_by(BLOCK) {
                        let b = BLOCK.min(ny - j0);
                        // θ_j = num_j / (2·ny); the column is multiplied by e(−θ_j·x).
                        let num = |j: usize| c * p * (2 * (j0 + j) as i64 - p * nsv);
                        for jb in 0..b {
                            let step = table.get(-num(jb));
                            let tw = &mut twist[jb * n..][..n];
                            let mut ph = czero();
                            for (i, t) in tw.iter_mut().enumerate() {
                                ph = if i % ANCHOR == 0 {
                                    table.get(-num(jb) * i as i64)
                                } else {
                                    ph * step
                                };
                                *t = ph;
                            }
                        }
                        for i in 0..n {
                            let row = &v[i * ny + j0..][..b];
                            for (jb, z) in row.iter().enumerate() {
                                cols[jb * n + i] = z * twist[jb * n + i];
                            }
                        }
                        for jb in 0..b {
                            fft.differentiate(&mut cols[jb * n..][..n], T::one());
                        }
                        for jb in 0..b {
                            let theta = T::lit(num(jb) as f64) / T::lit(2.0 * nyi as f64);
                            let k = ci(T::TAU() * theta);
                            for i in 0..n {
                                let idx = i * ny + j0 + jb;
                                out[idx] = -(k * v[idx] + twist[jb * n + i].conj() * cols[jb * n + i]);
                            }
                        }
                    }
                    out
                })
            }
        }
    }

    /// `Δ = δ_X² + δ_Y²`.
    pub fn laplacian(&self, scheme: DiffScheme) -> Result<Self> {
        let xx = self.derivation(LieLabel::X, scheme)?.derivation(LieLabel::X, scheme)?;
        let yy = self.derivation(LieLabel::Y, scheme)?.derivation(LieLabel::Y, scheme)?;
        xx.add(&yy)
    }

    /// Integral of the `p = 0` component over the fundamental domain:
    /// `∫₀¹∫_𝕋` for `D` (so τ(Id) = 1) and `∫₀^{su}∫_𝕋` for `E`.
    pub fn trace(&self) -> Cx<T> {
        match self.comps.get(&0) {
            None => czero(),
            Some(v) => {
                let s = v.iter().fold(czero::<T>(), |a, z| a + z);
                s * (self.grid.hx::<T>() * self.grid.hy::<T>())
            }
        }
    }
}

pub fn trace_d<T: Real>(a: &AlgebraElement<T>) -> Result<Cx<T>> {
    a.expect(Flavor::D)?;
    Ok(a.trace())
}

pub fn trace_e<T: Real>(a: &AlgebraElement<T>) -> Result<Cx<T>> {
    a.expect(Flavor::E)?;
    Ok(a.trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{GridSpec, Params, Rational};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(xc: u32) -> Grid {
        let p = Params::new(1, 0.5, Rational::new(1, 4), Rational::new(1, 4)).unwrap();
        Grid::new(
            p,
            GridSpec {
                refinement: 1,
                x_cells: xc,
                y_cells: 4,
                ..GridSpec::default()
            },
        )
        .unwrap()
    }

    fn random(flavor: Flavor, grid: Grid, ps: &[i64], seed: u64) -> AlgebraElement<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AlgebraElement::from_index_fn(flavor, grid, ps.iter().copied(), |_, _, _| {
            Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn identity_is_a_unit() {
        let g = grid(2);
        for fl in [Flavor::D, Flavor::E] {
            let b = random(fl, g, &[-1, 0, 2], 1);
            let id = AlgebraElement::identity(fl, g);
            assert!(id.star(&b).unwrap().max_abs_diff(&b).unwrap() < 1e-15);
            assert!(b.star(&id).unwrap().max_abs_diff(&b).unwrap() < 1e-14);
        }
    }

    #[test]
    fn one_component_product_matches_double_loop() {
        let g = grid(2);
        let a = random(Flavor::D, g, &[1], 2);
        let b = random(Flavor::D, g, &[-1], 3);
        let ab = a.star(&b).unwrap();
        assert_eq!(ab.p_support(), vec![0]);
        let ph = g.half_phase_table();
        // brute-force oracle over q and every sample, with explicit extension
        for i in 0..g.nx_unit() {
            for j in 0..g.ny() {
                let mut acc = Cx::new(0.0, 0.0);
                for q in -2..=2 {
                    acc += a.eval(q, i, j, &ph) * b.eval(-q, i - q * g.nsu(), j - q * g.nsv(), &ph);
                }
                assert!((acc - ab.eval(0, i, j, &ph)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn star_is_associative() {
        let g = grid(2);
        for fl in [Flavor::D, Flavor::E] {
            let a = random(fl, g, &[-1, 0, 1], 4);
            let b = random(fl, g, &[0, 2], 5);
            let c = random(fl, g, &[-2, 1], 6);
            let l = a.star(&b).unwrap().star(&c).unwrap();
            let r = a.star(&b.star(&c).unwrap()).unwrap();
            assert!(l.max_abs_diff(&r).unwrap() / l.sup_norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_is_an_anti_involution() {
        let g = grid(2);
        for fl in [Flavor::D, Flavor::E] {
            let a = random(fl, g, &[-1, 0, 1], 7);
            let b = random(fl, g, &[0, 2], 8);
            assert!(a.adjoint().adjoint().max_abs_diff(&a).unwrap() < 1e-14);
            assert_eq!(a.adjoint().sup_norm(), a.sup_norm());
            let l = a.star(&b).unwrap().adjoint();
            let r = b.adjoint().star(&a.adjoint()).unwrap();
            assert!(l.max_abs_diff(&r).unwrap() < 1e-12);
        }
    }

    #[test]
    fn invariance_actions_compose_and_fix_elements() {
        let g = grid(2);
        for fl in [Flavor::D, Flavor::E] {
            let a = random(fl, g, &[-2, 1, 3], 9);
            assert_eq!(a.invariance_action(0), a);
            let a1 = a.invariance_action(1);
            assert!(a1.max_abs_diff(&a).unwrap() < 1e-13);
            let l = a.invariance_action(2).invariance_action(-3);
            let r = a.invariance_action(-1);
            assert!(l.max_abs_diff(&r).unwrap() < 1e-13);
        }
    }

    #[test]
    fn delta_z_kills_p_zero() {
        let g = grid(2);
        let a = random(Flavor::D, g, &[0], 10);
        let d = a.derivation(LieLabel::Z, DiffScheme::default()).unwrap();
        assert_eq!(d.sup_norm(), 0.0);
    }

    #[test]
    fn derivations_form_a_lie_homomorphism() {
        let p = Params::new(3, 0.5, Rational::new(1, 4), Rational::new(1, 4)).unwrap();
        let g = Grid::new(
            p,
            GridSpec {
                refinement: 1,
                x_cells: 128,
                y_cells: 64,
                ..GridSpec::default()
            },
        )
        .unwrap();
        let f = crate::sampling::smooth_battery::<f64>(&g, 2, 3).unwrap();
        let a = crate::bimodule::inner_d(&f[0], &f[1]).unwrap();
        let s = DiffScheme::Spectral;
        let xy = a
            .derivation(LieLabel::Y, s)
            .unwrap()
            .derivation(LieLabel::X, s)
            .unwrap();
        let yx = a
            .derivation(LieLabel::X, s)
            .unwrap()
            .derivation(LieLabel::Y, s)
            .unwrap();
        let cz = a.derivation(LieLabel::Z, s).unwrap().scale(Cx::new(3.0, 0.0));
        let err = xy.sub(&yx).unwrap().max_abs_diff(&cz).unwrap();
        let uncorrected = xy
            .sub(&yx)
            .unwrap()
            .max_abs_diff(&cz.scale(Cx::new(1.0 / 3.0, 0.0)))
            .unwrap();
        assert!(err < 1e-6 * cz.sup_norm(), "{err:e}");
        assert!(uncorrected > 0.1 * cz.sup_norm());
    }

    #[test]
    fn delta_x_on_a_y_mode() {
        let g = grid(2);
        let a = AlgebraElement::<f64>::from_index_fn(Flavor::D, g, [0], |_, _, j| crate::scalar::unit_phase(j, g.ny()));
        let d = a.derivation(LieLabel::X, DiffScheme::default()).unwrap();
        let want = a.scale(Cx::new(0.0, -std::f64::consts::TAU));
        assert!(d.max_abs_diff(&want).unwrap() < 1e-12);
        let lap = a.laplacian(DiffScheme::default()).unwrap();
        let want = a.scale(Cx::new(-4.0 * std::f64::consts::PI.powi(2), 0.0));
        assert!(lap.max_abs_diff(&want).unwrap() < 1e-10);
        let id = AlgebraElement::<f64>::identity(Flavor::D, g).scale(Cx::new(3.0, 1.0));
        assert!(id.laplacian(DiffScheme::default()).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn derivations_reject_e() {
        let g = grid(1);
        let a = AlgebraElement::<f64>::identity(Flavor::E, g);
        assert!(matches!(
            a.derivation(LieLabel::X, DiffScheme::default()),
            Err(Error::FlavorMismatch { .. })
        ));
    }

    #[test]
    fn traces_of_identities() {
        let g = grid(3);
        let d = AlgebraElement::<f64>::identity(Flavor::D, g);
        assert!((trace_d(&d).unwrap() - Cx::new(1.0, 0.0)).norm() < 1e-13);
        let e = AlgebraElement::<f64>::identity(Flavor::E, g);
        assert!((trace_e(&e).unwrap() - Cx::new(0.25, 0.0)).norm() < 1e-13);
        assert!(trace_e(&d).is_err());
    }

    #[test]
    fn random_elements_are_tracial() {
        let g = grid(2);
        let a = random(Flavor::D, g, &[-1, 0, 1], 12);
        let b = random(Flavor::D, g, &[-1, 0, 2], 13);
        let ab = trace_d(&a.star(&b).unwrap()).unwrap();
        let ba = trace_d(&b.star(&a).unwrap()).unwrap();
        assert!((ab - ba).norm() < 1e-10);
    }

    #[test]
    fn bracket_table() {
        assert_eq!(LieLabel::bracket(LieLabel::X, LieLabel::Y), Some((1, LieLabel::Z)));
        assert_eq!(LieLabel::bracket(LieLabel::X, LieLabel::Z), None);
        assert_eq!(
            LieLabel::structure_constant(3, LieLabel::Y, LieLabel::X, LieLabel::Z),
            -3
        );
    }
}
