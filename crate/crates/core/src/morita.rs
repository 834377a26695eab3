//! The maps `S`, `H` between `X^{β,u*}_α` and the first spectral subspace of
//! `E`, checked on their own exact lattice.
//!
//! Target points are `x = i/(bN)`, source points `X = i/(aN)` for
//! `su = a/b`, so `X = −x/su` is the index map `i ↦ −i`. Both sides share
//! `y = j/(b'M)` for `sv = a'/b'`; `y` is not reduced mod 1 because
//! `e(c·y²/sv)` is not 1-periodic.

use std::rc::Rc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::Rational;
use crate::projection::ConditionReport;
use crate::sampling::{rng, smooth_bump, TestRng};
use crate::scalar::{czero, unit_phase, Cx, Real};

/// A function sampled lazily on the lattice.
pub type IndexFn<T> = Rc<dyn Fn(i64, i64) -> Cx<T>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoritaGrid {
    c: i64,
    su: Rational,
    sv: Rational,
    x_cells: i64,
    y_cells: i64,
}

impl MoritaGrid {
    pub fn new(c: i64, su: Rational, sv: Rational, x_cells: i64, y_cells: i64) -> Result<Self> {
        let half = Rational::new(1, 2);
        let zero = Rational::from_integer(0);
        if c < 1 || !(su > zero && su < half) || sv <= zero || x_cells < 1 || y_cells < 1 {
            return Err(Error::InvalidParams(format!(
                "morita grid needs c ≥ 1, 0 < su < 1/2, sv > 0 and positive cell counts (c={c}, su={su}, sv={sv})"
            )));
        }
        Ok(Self {
            c,
            su,
            sv,
            x_cells,
            y_cells,
        })
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    /// Index steps of `1/su` on the source side, equivalently `1` on the target side.
    pub fn unit_steps(&self) -> i64 {
        self.su.denom() * self.x_cells
    }

    /// Index steps of `1` on the source side, equivalently `su` on the target side.
    pub fn su_steps(&self) -> i64 {
        self.su.numer() * self.x_cells
    }

    /// Index steps of `sv` in y.
    pub fn sv_steps(&self) -> i64 {
        self.sv.numer() * self.y_cells
    }

    /// Points per unit length in y.
    pub fn y_den(&self) -> i64 {
        self.sv.denom() * self.y_cells
    }

    /// `e(c(y − sv/2))` at `y = j/y_den`.
    fn u_star<T: Real>(&self, j: i64) -> Cx<T> {
        phase(
            self.c as i128 * (2 * j - self.sv_steps()) as i128,
            2 * self.y_den() as i128,
        )
    }

    /// `e(c·y²/sv)`.
    fn quadratic<T: Real>(&self, j: i64) -> Cx<T> {
        let (a2, b2, m) = (*self.sv.numer() as i128, *self.sv.denom() as i128, self.y_cells as i128);
        phase(self.c as i128 * (j as i128) * (j as i128), a2 * b2 * m * m)
    }
}

fn phase<T: Real>(num: i128, den: i128) -> Cx<T> {
    let g = num_integer::gcd(num, den);
    let (num, den) = (num / g, den / g);
    unit_phase(num.rem_euclid(den) as i64, den as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    XBetaUstarAlpha,
    EFirst,
}

#[derive(Clone)]
pub struct SpectralVector<T> {
    pub subspace: Subspace,
    pub f: IndexFn<T>,
}

impl<T: Real> SpectralVector<T> {
    pub fn zero(subspace: Subspace) -> Self {
        Self {
            subspace,
            f: Rc::new(|_, _| czero()),
        }
    }

    fn expect(&self, s: Subspace) -> Result<()> {
        if self.subspace != s {
            return Err(Error::InvalidParams(format!(
                "expected a {s:?} vector, got {:?}",
                self.subspace
            )));
        }
        Ok(())
    }
}

/// `S(f)(x,y) = e(c·y²/sv)·f(−x/su, −y)`.
pub fn map_s<T: Real>(grid: &MoritaGrid, f: &SpectralVector<T>) -> Result<SpectralVector<T>> {
    f.expect(Subspace::XBetaUstarAlpha)?;
    let (g, src) = (*grid, f.f.clone());
    Ok(SpectralVector {
        subspace: Subspace::EFirst,
        f: Rc::new(move |i, j| g.quadratic::<T>(j) * src(-i, -j)),
    })
}

/// `H(φ)(x,y) = φ(−x/su, −y)`.
pub fn map_h<T: Real>(phi: &IndexFn<T>) -> IndexFn<T> {
    let phi = phi.clone();
    Rc::new(move |i, j| phi(-i, -j))
}

fn combine<T: Real>(
    a: &IndexFn<T>,
    b: &IndexFn<T>,
    op: impl Fn(i64, i64, &IndexFn<T>, &IndexFn<T>) -> Cx<T> + 'static,
) -> IndexFn<T> {
    let (a, b) = (a.clone(), b.clone());
    Rc::new(move |i, j| op(i, j, &a, &b))
}

/// Source structure: `φ·f = φf`, `f·φ = f·φ(x − 1/su, y)`, `⟨f,g⟩_L = f ḡ`,
/// `⟨f,g⟩_R = f̄(x + 1/su, y)·g`.
pub mod source {
    use super::*;

    pub fn act_left<T: Real>(phi: &IndexFn<T>, f: &IndexFn<T>) -> IndexFn<T> {
        combine(phi, f, |i, j, p, f| p(i, j) * f(i, j))
    }

    pub fn act_right<T: Real>(grid: &MoritaGrid, f: &IndexFn<T>, phi: &IndexFn<T>) -> IndexFn<T> {
        let s = grid.unit_steps();
        combine(f, phi, move |i, j, f, p| f(i, j) * p(i - s, j))
    }

    pub fn inner_left<T: Real>(f: &IndexFn<T>, g: &IndexFn<T>) -> IndexFn<T> {
        combine(f, g, |i, j, f, g| f(i, j) * g(i, j).conj())
    }

    pub fn inner_right<T: Real>(grid: &MoritaGrid, f: &IndexFn<T>, g: &IndexFn<T>) -> IndexFn<T> {
        let s = grid.unit_steps();
        combine(f, g, move |i, j, f, g| f(i + s, j).conj() * g(i, j))
    }
}

/// Target structure inside `E`: `ψ·F = ψF`, `F·ψ = F·ψ(x + 1, y)`,
/// `⟨F,G⟩_L = F Ḡ`, `⟨F,G⟩_R = F̄(x − 1, y)·G`.
pub mod target {
    use super::*;

    pub fn act_left<T: Real>(psi: &IndexFn<T>, f: &IndexFn<T>) -> IndexFn<T> {
        combine(psi, f, |i, j, p, f| p(i, j) * f(i, j))
    }

    pub fn act_right<T: Real>(grid: &MoritaGrid, f: &IndexFn<T>, psi: &IndexFn<T>) -> IndexFn<T> {
        let s = grid.unit_steps();
        combine(f, psi, move |i, j, f, p| f(i, j) * p(i + s, j))
    }

    pub fn inner_left<T: Real>(f: &IndexFn<T>, g: &IndexFn<T>) -> IndexFn<T> {
        combine(f, g, |i, j, f, g| f(i, j) * g(i, j).conj())
    }

    pub fn inner_right<T: Real>(grid: &MoritaGrid, f: &IndexFn<T>, g: &IndexFn<T>) -> IndexFn<T> {
        let s = grid.unit_steps();
        combine(f, g, move |i, j, f, g| f(i - s, j).conj() * g(i, j))
    }
}

/// Index window the checks sweep: `x ∈ [−2, 2]`, `y ∈ [−1, 1)` on the target side.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub x: (i64, i64),
    pub y: (i64, i64),
}

impl Window {
    pub fn standard(grid: &MoritaGrid) -> Self {
        let (u, v) = (grid.unit_steps(), grid.y_den());
        Self {
            x: (-2 * u, 2 * u),
            y: (-v, v),
        }
    }

    fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.x.0..=self.x.1).flat_map(move |i| (self.y.0..self.y.1).map(move |j| (i, j)))
    }
}

/// `max|a − b| / max(sup|a|, sup|b|)`, 0 when both vanish.
pub fn relative_defect<T: Real>(win: &Window, a: &IndexFn<T>, b: &IndexFn<T>) -> f64 {
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (i, j) in win.points() {
        let (x, y) = (a(i, j), b(i, j));
        diff = diff.max((x - y).norm().as_f64());
        scale = scale.max(x.norm().as_f64()).max(y.norm().as_f64());
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Relative defect of `g(x−1, y−sv) = e(c(y − sv/2))·g(x,y)`.
pub fn source_membership<T: Real>(grid: &MoritaGrid, win: &Window, g: &IndexFn<T>) -> f64 {
    let (sx, sy, gr) = (grid.su_steps(), grid.sv_steps(), *grid);
    let g1 = g.clone();
    let lhs: IndexFn<T> = Rc::new(move |i, j| g1(i - sx, j - sy));
    let g2 = g.clone();
    let rhs: IndexFn<T> = Rc::new(move |i, j| gr.u_star::<T>(j) * g2(i, j));
    relative_defect(win, &lhs, &rhs)
}

/// Relative defect of `F(x,y) = e(c(y − sv/2))·F(x − su, y − sv)`.
pub fn target_membership<T: Real>(grid: &MoritaGrid, win: &Window, f: &IndexFn<T>) -> f64 {
    let (sx, sy, gr) = (grid.su_steps(), grid.sv_steps(), *grid);
    let f1 = f.clone();
    let rhs: IndexFn<T> = Rc::new(move |i, j| gr.u_star::<T>(j) * f1(i - sx, j - sy));
    relative_defect(win, f, &rhs)
}

/// `Σ_n e(c(n·y + n²·sv/2))·s(x + n, y + n·sv)` for a compactly supported
/// seed `s`; `broken` adds a stray `e(n/8)` to the twist.
pub fn random_member<T: Real>(grid: &MoritaGrid, rng: &mut TestRng, broken: bool) -> SpectralVector<T> {
    let center: f64 = rng.gen_range(-0.5..0.5);
    let radius: f64 = rng.gen_range(0.3..0.8);
    let coef: Vec<Cx<f64>> = (0..5)
        .map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let g = *grid;
    let (unit, sy, yd) = (g.su_steps(), g.sv_steps(), g.y_den());
    let extra = if broken { 8 } else { 1 };
    let f = move |i: i64, j: i64| {
        let x = i as f64 / unit as f64;
        let lo = (center - radius - x).ceil() as i64;
        let hi = (center + radius - x).floor() as i64;
        let mut acc = Cx::new(0.0, 0.0);
        for n in lo..=hi {
            let b = smooth_bump((x + n as f64 - center) / radius);
            if b == 0.0 {
                continue;
            }
            let jj = j + n * sy;
            let mut s = Cx::new(0.0, 0.0);
            for (k, a) in coef.iter().enumerate() {
                s += a * unit_phase::<f64>((k as i64 - 2) * jj, yd);
            }
            let twist_num = (g.c as i128 * (2 * n as i128 * j as i128 + (n * n) as i128 * sy as i128)) * extra
                + if broken { 2 * yd as i128 * n as i128 } else { 0 };
            let twist: Cx<f64> = phase(twist_num, 2 * yd as i128 * extra);
            acc += twist * s * b;
        }
        Cx::new(T::lit(acc.re), T::lit(acc.im))
    };
    SpectralVector {
        subspace: Subspace::XBetaUstarAlpha,
        f: Rc::new(f),
    }
}

/// `Σ a_{n,m} e((n − m·sv)X + m·Y)` over `|n|, |m| ≤ 2`: invariant under
/// `β(X,Y) = (X + 1, Y + sv)`.
pub fn random_beta_invariant<T: Real>(grid: &MoritaGrid, rng: &mut TestRng) -> IndexFn<T> {
    let mut terms = Vec::new();
    for n in -2i64..=2 {
        for m in -2i64..=2 {
            let a = Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (1.0 + (n * n + m * m) as f64);
            terms.push((n, m, a));
        }
    }
    let (a, b2, m_cells) = (*grid.su.numer() as i128, *grid.sv.denom() as i128, grid.y_cells as i128);
    let (a2, n_cells) = (*grid.sv.numer() as i128, grid.x_cells as i128);
    Rc::new(move |i, j| {
        let mut acc = Cx::new(0.0, 0.0);
        for &(n, m, c) in &terms {
            let (n, m) = (n as i128, m as i128);
            let num = (n * b2 - m * a2) * i as i128 * m_cells + m * j as i128 * a * n_cells;
            acc += c * phase::<f64>(num, a * b2 * n_cells * m_cells);
        }
        Cx::new(T::lit(acc.re), T::lit(acc.im))
    })
}

pub const PRESERVATION_CHECKS: [&str; 4] = [
    "S(φ·f) = H(φ)·S(f)",
    "S(f·φ) = S(f)·H(φ)",
    "⟨S f, S g⟩_L = H(⟨f,g⟩_L)",
    "⟨S f, S g⟩_R = H(⟨f,g⟩_R)",
];

/// Draws `sample_count` seeded triples `(f, g, φ)` and records the worst
/// relative violation of each preservation identity, of membership on both
/// sides, of closure under the actions, and of sup-norm preservation.
pub fn verify_bimodule_preservation<T: Real>(
    grid: &MoritaGrid,
    sample_count: usize,
    seed: u64,
    broken_u: bool,
) -> Result<ConditionReport> {
    let win = Window::standard(grid);
    let mut r = rng(seed);
    let mut worst = [0.0f64; 9];
    for _ in 0..sample_count {
        let f = random_member::<T>(grid, &mut r, broken_u);
        let g = random_member::<T>(grid, &mut r, broken_u);
        let phi = random_beta_invariant::<T>(grid, &mut r);
        let (sf, sg) = (map_s(grid, &f)?, map_s(grid, &g)?);
        let hphi = map_h(&phi);
        let lift = |h: IndexFn<T>| SpectralVector {
            subspace: Subspace::XBetaUstarAlpha,
            f: h,
        };
        let s_left = map_s(grid, &lift(source::act_left(&phi, &f.f)))?;
        let s_right = map_s(grid, &lift(source::act_right(grid, &f.f, &phi)))?;
        let t_left = target::act_left(&hphi, &sf.f);
        let t_right = target::act_right(grid, &sf.f, &hphi);
        let sup_f: IndexFn<T> = {
            let ff = f.f.clone();
            Rc::new(move |i, j| Cx::new(ff(-i, -j).norm(), T::zero()))
        };
        let sup_sf: IndexFn<T> = {
            let s = sf.f.clone();
            Rc::new(move |i, j| Cx::new(s(i, j).norm(), T::zero()))
        };
        let v = [
            relative_defect(&win, &s_left.f, &t_left),
            relative_defect(&win, &s_right.f, &t_right),
            relative_defect(
                &win,
                &target::inner_left(&sf.f, &sg.f),
                &map_h(&source::inner_left(&f.f, &g.f)),
            ),
            relative_defect(
                &win,
                &target::inner_right(grid, &sf.f, &sg.f),
                &map_h(&source::inner_right(grid, &f.f, &g.f)),
            ),
            source_membership(grid, &win, &f.f),
            target_membership(grid, &win, &sf.f),
            source_membership(grid, &win, &source::act_left(&phi, &f.f)).max(source_membership(
                grid,
                &win,
                &source::act_right(grid, &f.f, &phi),
            )),
            target_membership(grid, &win, &t_left).max(target_membership(grid, &win, &t_right)),
            relative_defect(&win, &sup_f, &sup_sf),
        ];
        for (w, x) in worst.iter_mut().zip(v) {
            *w = w.max(x);
        }
    }
    let mut rep = ConditionReport::default();
    let names = PRESERVATION_CHECKS.into_iter().chain([
        "source membership",
        "target membership of S(f)",
        "closure of source actions",
        "closure of target actions",
        "sup-norm preservation",
    ]);
    for (name, w) in names.zip(worst) {
        rep.push(name, w);
    }
    Ok(rep)
}
