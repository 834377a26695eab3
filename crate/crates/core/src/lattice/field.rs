use std::ops::Range;

use num_traits::Zero;

use super::spectral::{central_weights, DiffScheme, FftPair};
use super::{Grid, Rational};
use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Complex field on ℝ×𝕋 sampled on `grid`, nonzero only on the x-index
/// window `x0..x0+nx`. Samples are row-major in x: `data[(i−x0)·ny + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid,
    x0: i64,
    nx: usize,
    data: Vec<Cx<T>>,
    /// Exact x-derivative on the same window, for fields built from closed forms.
    dx: Option<Vec<Cx<T>>>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: Grid, x0: i64, nx: usize, data: Vec<Cx<T>>) -> Result<Self> {
        let ny = grid.ny() as usize;
        if data.len() != nx * ny {
            return Err(Error::InvalidParams(format!(
                "expected {} samples, got {}",
                nx * ny,
                data.len()
            )));
        }
        grid.check_samples(data.len())?;
        Ok(Self {
            grid,
            x0,
            nx,
            data,
            dx: None,
        })
    }

    pub fn empty(grid: Grid) -> Self {
        Self {
            grid,
            x0: 0,
            nx: 0,
            data: Vec::new(),
            dx: None,
        }
    }

    pub fn zeros(grid: Grid, x0: i64, nx: usize) -> Result<Self> {
        let n = nx.saturating_mul(grid.ny() as usize);
        grid.check_samples(n)?;
        Ok(Self {
            grid,
            x0,
            nx,
            data: vec![czero(); n],
            dx: None,
        })
    }

    /// Samples `f(i, j)` over the index window.
    pub fn from_index_fn(grid: Grid, x0: i64, nx: usize, mut f: impl FnMut(i64, i64) -> Cx<T>) -> Result<Self> {
        let mut out = Self::zeros(grid, x0, nx)?;
        let ny = grid.ny();
        for r in 0..nx {
            for j in 0..ny {
                out.data[r * ny as usize + j as usize] = f(x0 + r as i64, j);
            }
        }
        Ok(out)
    }

    /// Samples `f(x, y)` at the physical grid coordinates.
    pub fn from_fn(grid: Grid, x0: i64, nx: usize, mut f: impl FnMut(T, T) -> Cx<T>) -> Result<Self> {
        Self::from_index_fn(grid, x0, nx, |i, j| f(grid.x(i), grid.y(j)))
    }

    /// Attaches an exact x-derivative, resampled onto this window.
    pub fn with_analytic_dx(mut self, dx: &ScalarField<T>) -> Result<Self> {
        self.grid.ensure_same(&dx.grid)?;
        let d = dx.rewindow(self.x0, self.nx);
        self.dx = Some(d.data);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn x0(&self) -> i64 {
        self.x0
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn x_range(&self) -> Range<i64> {
        self.x0..self.x0 + self.nx as i64
    }
    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }
    pub(crate) fn data_mut(&mut self) -> &mut [Cx<T>] {
        self.dx = None;
        &mut self.data
    }
    pub fn has_analytic_dx(&self) -> bool {
        self.dx.is_some()
    }

    pub fn analytic_dx(&self) -> Option<ScalarField<T>> {
        self.dx.as_ref().map(|d| Self {
            grid: self.grid,
            x0: self.x0,
            nx: self.nx,
            data: d.clone(),
            dx: None,
        })
    }

    pub fn drop_analytic_dx(mut self) -> Self {
        self.dx = None;
        self
    }

    #[inline]
    fn ny(&self) -> usize {
        self.grid.ny() as usize
    }

    /// Value at x-index `i`, y-index `j` (taken mod `ny`); zero off the window.
    #[inline]
    pub fn get(&self, i: i64, j: i64) -> Cx<T> {
        match self.row(i) {
            Some(row) => row[self.grid.wrap_y(j)],
            None => czero(),
        }
    }

    #[inline]
    pub fn row(&self, i: i64) -> Option<&[Cx<T>]> {
        let r = i - self.x0;
        if r < 0 || r >= self.nx as i64 {
            return None;
        }
        let ny = self.ny();
        let r = r as usize;
        Some(&self.data[r * ny..(r + 1) * ny])
    }

    /// Copies onto the window `x0..x0+nx`, dropping or zero-filling rows.
    pub fn rewindow(&self, x0: i64, nx: usize) -> Self {
        let ny = self.ny();
        let copy = |src: &[Cx<T>]| {
            let mut out = vec![czero(); nx * ny];
            for r in 0..nx {
                let i = x0 + r as i64 - self.x0;
                if i >= 0 && (i as usize) < self.nx {
                    let i = i as usize;
                    out[r * ny..(r + 1) * ny].copy_from_slice(&src[i * ny..(i + 1) * ny]);
                }
            }
            out
        };
        Self {
            grid: self.grid,
            x0,
            nx,
            data: copy(&self.data),
            dx: self.dx.as_deref().map(copy),
        }
    }

    /// Shrinks the window to the rows holding a nonzero sample.
    pub fn trim(&self) -> Self {
        let ny = self.ny();
        let nonzero = |r: usize| self.data[r * ny..(r + 1) * ny].iter().any(|z| !z.is_zero());
        let first = (0..self.nx).find(|&r| nonzero(r));
        match first {
            None => Self::empty(self.grid),
            Some(first) => {
                let last = (0..self.nx).rev().find(|&r| nonzero(r)).unwrap_or(first);
                self.rewindow(self.x0 + first as i64, last - first + 1)
            }
        }
    }

    /// `result(x, y) = f(x + dx, y + dy)`; both amounts must be grid multiples.
    pub fn shift(&self, dx: Rational, dy: Rational) -> Result<Self> {
        match (self.grid.x_index(dx), self.grid.y_index(dy)) {
            (Some(di), Some(dj)) => Ok(self.shift_index(di, dj)),
            _ => Err(Error::Incommensurate {
                dx: dx.to_string(),
                dy: dy.to_string(),
            }),
        }
    }

    /// `result(i, j) = f(i + di, j + dj)`.
    pub fn shift_index(&self, di: i64, dj: i64) -> Self {
        let ny = self.ny();
        let roll = |src: &[Cx<T>]| {
            if dj.rem_euclid(ny as i64) == 0 {
                return src.to_vec();
            }
            let mut out = vec![czero(); src.len()];
            for r in 0..self.nx {
                let s = &src[r * ny..(r + 1) * ny];
                let d = &mut out[r * ny..(r + 1) * ny];
                for (j, v) in d.iter_mut().enumerate() {
                    *v = s[self.grid.wrap_y(j as i64 + dj)];
                }
            }
            out
        };
        Self {
            grid: self.grid,
            x0: self.x0 - di,
            nx: self.nx,
            data: roll(&self.data),
            dx: self.dx.as_deref().map(roll),
        }
    }

    /// Partial derivative. In x an attached analytic derivative wins over
    /// `scheme`; in y the derivative is always spectral.
    pub fn differentiate(&self, axis: Axis, scheme: DiffScheme) -> Self {
        if axis == Axis::X {
            if let Some(d) = self.analytic_dx() {
                return d;
            }
        }
        self.differentiate_numeric(axis, scheme)
    }

    /// Like [`Self::differentiate`] but ignores any analytic derivative.
    pub fn differentiate_numeric(&self, axis: Axis, scheme: DiffScheme) -> Self {
        match axis {
            Axis::Y => self.dy_spectral(),
            Axis::X => match scheme {
                DiffScheme::FiniteDifference(order) => self.dx_fd(order),
                DiffScheme::Spectral => self.dx_spectral(),
            },
        }
    }

    fn dy_spectral(&self) -> Self {
        let ny = self.ny();
        let fft = FftPair::new(ny);
        let mut data = self.data.clone();
        for row in data.chunks_mut(ny) {
            fft.differentiate(row, T::one());
        }
        Self {
            grid: self.grid,
            x0: self.x0,
            nx: self.nx,
            data,
            dx: None,
        }
    }

    fn dx_fd(&self, order: usize) -> Self {
        if self.nx == 0 {
            return self.clone().drop_analytic_dx();
        }
        let w: Vec<T> = central_weights(order).into_iter().map(T::lit).collect();
        let r = w.len();
        let ny = self.ny();
        let nx = self.nx + 2 * r;
        let x0 = self.x0 - r as i64;
        let inv_h = T::lit(self.grid.nx_unit() as f64);
        let mut data = vec![czero(); nx * ny];
        for out_r in 0..nx {
            let i = x0 + out_r as i64;
            let dst = &mut data[out_r * ny..(out_r + 1) * ny];
            for (s, &ws) in w.iter().enumerate() {
                let s = s as i64 + 1;
                let plus = self.row(i + s);
                let minus = self.row(i - s);
                for (j, d) in dst.iter_mut().enumerate() {
                    let a = plus.map_or(czero(), |p| p[j]);
                    let b = minus.map_or(czero(), |m| m[j]);
                    *d = *d + (a - b) * ws;
                }
            }
            for d in dst.iter_mut() {
                *d = *d * inv_h;
            }
        }
        Self {
            grid: self.grid,
            x0,
            nx,
            data,
            dx: None,
        }
    }

    /// Spectral x-derivative of compactly supported data: each column is
    /// zero-padded to twice the window and treated as periodic.
    fn dx_spectral(&self) -> Self {
        if self.nx == 0 {
            return self.clone().drop_analytic_dx();
        }
        let ny = self.ny();
        let pad = self.nx / 2 + 1;
        let n = self.nx + 2 * pad;
        let x0 = self.x0 - pad as i64;
        let period = T::lit(n as f64) / T::lit(self.grid.nx_unit() as f64);
        let fft = FftPair::new(n);
        let mut data = vec![czero(); n * ny];
        let mut col = vec![czero(); n];
        for j in 0..ny {
            col.iter_mut().for_each(|c| *c = czero());
            for r in 0..self.nx {
                col[r + pad] = self.data[r * ny + j];
            }
            fft.differentiate(&mut col, period);
            for (r, c) in col.iter().enumerate() {
                data[r * ny + j] = *c;
            }
        }
        Self {
            grid: self.grid,
            x0,
            nx: n,
            data,
            dx: None,
        }
    }

    /// `hx·hy·Σ` of the samples with x-index in `x_range`, over one y-period.
    pub fn integrate(&self, x_range: Range<i64>) -> Cx<T> {
        let lo = x_range.start.max(self.x0);
        let hi = x_range.end.min(self.x0 + self.nx as i64);
        let mut acc = czero::<T>();
        for i in lo..hi {
            if let Some(row) = self.row(i) {
                acc = row.iter().fold(acc, |a, z| a + z);
            }
        }
        acc * (self.grid.hx::<T>() * self.grid.hy::<T>())
    }

    pub fn integrate_all(&self) -> Cx<T> {
        self.integrate(self.x_range())
    }

    /// Pointwise map; the analytic derivative is dropped.
    pub fn map(&self, mut f: impl FnMut(Cx<T>) -> Cx<T>) -> Self {
        Self {
            grid: self.grid,
            x0: self.x0,
            nx: self.nx,
            data: self.data.iter().map(|&z| f(z)).collect(),
            dx: None,
        }
    }

    /// Pointwise map with the sample's `(i, j)`; the analytic derivative is dropped.
    pub fn map_indexed(&self, mut f: impl FnMut(i64, i64, Cx<T>) -> Cx<T>) -> Self {
        let ny = self.ny();
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &z)| f(self.x0 + (k / ny) as i64, (k % ny) as i64, z))
            .collect();
        Self {
            grid: self.grid,
            x0: self.x0,
            nx: self.nx,
            data,
            dx: None,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            x0: self.x0,
            nx: self.nx,
            data: self.data.iter().map(|z| z.conj()).collect(),
            dx: self.dx.as_ref().map(|d| d.iter().map(|z| z.conj()).collect()),
        }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self {
            grid: self.grid,
            x0: self.x0,
            nx: self.nx,
            data: self.data.iter().map(|z| z * s).collect(),
            dx: self.dx.as_ref().map(|d| d.iter().map(|z| z * s).collect()),
        }
    }

    fn combine(&self, other: &Self, sign: T) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        if other.nx == 0 {
            return Ok(self.clone());
        }
        if self.nx == 0 {
            return Ok(other.scale(Cx::new(sign, T::zero())));
        }
        let x0 = self.x0.min(other.x0);
        let end = (self.x0 + self.nx as i64).max(other.x0 + other.nx as i64);
        let nx = (end - x0) as usize;
        let mut a = self.rewindow(x0, nx);
        let b = other.rewindow(x0, nx);
        for (x, y) in a.data.iter_mut().zip(&b.data) {
            *x = *x + y * sign;
        }
        a.dx = match (a.dx.take(), b.dx) {
            (Some(mut da), Some(db)) => {
                for (x, y) in da.iter_mut().zip(&db) {
                    *x = *x + y * sign;
                }
                Some(da)
            }
            _ => None,
        };
        Ok(a)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -T::one())
    }

    /// Pointwise product on the intersection of the windows. Analytic
    /// derivatives propagate by the Leibniz rule when both are present.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let x0 = self.x0.max(other.x0);
        let end = (self.x0 + self.nx as i64).min(other.x0 + other.nx as i64);
        if end <= x0 {
            return Ok(Self::empty(self.grid));
        }
        let nx = (end - x0) as usize;
        let a = self.rewindow(x0, nx);
        let b = other.rewindow(x0, nx);
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
        let dx = match (&a.dx, &b.dx) {
            (Some(da), Some(db)) => Some(
                (0..a.data.len())
                    .map(|k| da[k] * b.data[k] + a.data[k] * db[k])
                    .collect(),
            ),
            _ => None,
        };
        Ok(Self {
            grid: self.grid,
            x0,
            nx,
            data,
            dx,
        })
    }

    pub fn sup_norm(&self) -> T {
        crate::scalar::sup_norm(&self.data)
    }

    /// Sup of `|self − other|` over the union of the windows.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// True when every sample equals the other's bitwise (windows may differ
    /// by zero rows).
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        let (a, b) = (self.trim(), other.trim());
        a.grid == b.grid && a.x0 == b.x0 && a.nx == b.nx && a.data == b.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_grid, GridSpec, Params};
    use crate::scalar::unit_phase;

    fn grid(refinement: u32) -> Grid {
        grid_cells(refinement, 8)
    }

    fn grid_cells(refinement: u32, x_cells: u32) -> Grid {
        let p = Params::new(1, 0.5, Rational::new(1, 4), Rational::new(1, 4)).unwrap();
        Grid::new(
            p,
            GridSpec {
                refinement,
                x_cells,
                y_cells: 4,
                ..GridSpec::default()
            },
        )
        .unwrap()
    }

    fn bump(x: f64) -> f64 {
        if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    }

    #[test]
    fn shift_identity_and_inverse_are_bitwise() {
        let g = grid(1);
        let f =
            ScalarField::<f64>::from_fn(g, -20, 40, |x, y| Cx::new(bump(4.0 * x) * (1.0 + y), bump(3.0 * x))).unwrap();
        let z = Rational::zero();
        assert_eq!(f.shift(z, z).unwrap(), f);
        let su = Rational::new(1, 4);
        let back = f.shift(su, su).unwrap().shift(-su, -su).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn shift_by_one_moves_bump() {
        let g = grid(1);
        let n = g.nx_unit();
        let f = ScalarField::<f64>::from_index_fn(g, -3, 7, |i, j| {
            if i == 0 {
                Cx::new(1.0 + j as f64, 0.0)
            } else {
                Cx::new(0.0, 0.0)
            }
        })
        .unwrap();
        let s = f.shift(Rational::from_integer(1), Rational::zero()).unwrap();
        for i in -n - 5..5 {
            for j in 0..g.ny() {
                let want = if i == -n {
                    Cx::new(1.0 + j as f64, 0.0)
                } else {
                    Cx::new(0.0, 0.0)
                };
                assert_eq!(s.get(i, j), want);
            }
        }
    }

    #[test]
    fn incommensurate_shift_is_rejected() {
        let g = grid(1);
        let f = ScalarField::<f64>::zeros(g, 0, 4).unwrap();
        let err = f.shift(Rational::new(1, 1000), Rational::zero()).unwrap_err();
        assert!(matches!(err, Error::Incommensurate { .. }));
    }

    #[test]
    fn y_derivative_of_single_mode_is_exact() {
        let g = grid(1);
        let f = ScalarField::<f64>::from_index_fn(g, 0, 3, |_, j| unit_phase(j, g.ny())).unwrap();
        let d = f.differentiate(Axis::Y, DiffScheme::default());
        let want = f.scale(Cx::new(0.0, std::f64::consts::TAU));
        assert!(d.max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn x_derivative_of_constant_vanishes_inside() {
        let g = grid(1);
        let f = ScalarField::<f64>::from_index_fn(g, 0, 50, |_, _| Cx::new(2.0, -1.0)).unwrap();
        let d = f.differentiate(Axis::X, DiffScheme::default());
        for i in 3..47 {
            for j in 0..g.ny() {
                assert!(d.get(i, j).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn fd_converges_at_sixth_order() {
        let mut errs = Vec::new();
        for r in [1, 2, 4] {
            let g = grid_cells(r, 32);
            let n = g.nx_unit();
            let f = ScalarField::<f64>::from_fn(g, -n, 2 * n as usize, |x, _| Cx::new(bump(x), 0.0)).unwrap();
            let exact = ScalarField::<f64>::from_fn(g, -n, 2 * n as usize, |x, _| {
                let v = if x.abs() < 1.0 {
                    -2.0 * x / (1.0 - x * x).powi(2) * bump(x)
                } else {
                    0.0
                };
                Cx::new(v, 0.0)
            })
            .unwrap();
            let d = f.differentiate(Axis::X, DiffScheme::FiniteDifference(6));
            errs.push(d.max_abs_diff(&exact).unwrap());
        }
        let rate = (errs[1] / errs[2]).log2();
        assert!(rate > 5.0, "errors {errs:?}");
    }

    #[test]
    fn spectral_x_derivative_of_bump() {
        let g = grid_cells(1, 64);
        let n = g.nx_unit();
        let f = ScalarField::<f64>::from_fn(g, -n, 2 * n as usize, |x, _| Cx::new(bump(x), 0.0)).unwrap();
        let exact = ScalarField::<f64>::from_fn(g, -n, 2 * n as usize, |x, _| {
            let v = if x.abs() < 1.0 {
                -2.0 * x / (1.0 - x * x).powi(2) * bump(x)
            } else {
                0.0
            };
            Cx::new(v, 0.0)
        })
        .unwrap();
        let d = f.differentiate(Axis::X, DiffScheme::Spectral);
        assert!(d.max_abs_diff(&exact).unwrap() < 1e-6);
    }

    #[test]
    fn analytic_derivative_overrides() {
        let g = grid(1);
        let f = ScalarField::<f64>::from_index_fn(g, 0, 4, |i, _| Cx::new(i as f64, 0.0)).unwrap();
        let d = ScalarField::<f64>::from_index_fn(g, 0, 4, |_, _| Cx::new(7.0, 0.0)).unwrap();
        let f = f.with_analytic_dx(&d).unwrap();
        assert_eq!(f.differentiate(Axis::X, DiffScheme::default()), d);
        let s = f.shift_index(2, 1);
        assert_eq!(s.differentiate(Axis::X, DiffScheme::default()), d.shift_index(2, 1));
    }

    #[test]
    fn integrate_area_and_orthogonality() {
        let g = grid(1);
        let n = g.nx_unit();
        let z = ScalarField::<f64>::zeros(g, 0, n as usize).unwrap();
        assert_eq!(z.integrate_all(), Cx::new(0.0, 0.0));
        let one = ScalarField::<f64>::from_index_fn(g, 0, n as usize, |_, _| Cx::new(1.0, 0.0)).unwrap();
        assert!((one.integrate(0..n) - Cx::new(1.0, 0.0)).norm() < 1e-14);
        let wave = ScalarField::<f64>::from_index_fn(g, -n, 2 * n as usize, |i, j| {
            unit_phase::<f64>(j, g.ny()) * bump(g.x::<f64>(i))
        })
        .unwrap();
        // oracle: per-row sum of e(j/ny) over a period
        let mut oracle = Cx::new(0.0, 0.0);
        for j in 0..g.ny() {
            oracle += unit_phase::<f64>(j, g.ny());
        }
        assert!(oracle.norm() < 1e-13);
        assert!(wave.integrate_all().norm() < 1e-14);
    }

    #[test]
    fn make_grid_is_the_bare_resolution() {
        let p = Params::new(1, 0.5, Rational::new(1, 4), Rational::new(1, 4)).unwrap();
        let g = make_grid(p, 4).unwrap();
        assert_eq!(g.nx_unit(), 16);
    }
}
