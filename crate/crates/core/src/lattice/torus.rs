use super::field::ScalarField;
use super::spectral::FftPair;
use super::{div_floor, Grid};
use crate::error::{Error, Result};
use crate::scalar::{ci, czero, Cx, PhaseTable, Real};

/// Function on the skew torus ℝ²/L, `L = ⟨(su, sv), (0, 1)⟩`, stored on the
/// fundamental domain `[0, su) × [0, 1)` (`nsu × ny` samples, row-major in x).
#[derive(Debug, Clone, PartialEq)]
pub struct TorusFunction<T> {
    grid: Grid,
    data: Vec<Cx<T>>,
}

impl<T: Real> TorusFunction<T> {
    pub fn new(grid: Grid, data: Vec<Cx<T>>) -> Result<Self> {
        let want = (grid.nsu() * grid.ny()) as usize;
        if data.len() != want {
            return Err(Error::InvalidParams(format!(
                "expected {want} samples, got {}",
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_index_fn(grid: Grid, mut f: impl FnMut(i64, i64) -> Cx<T>) -> Self {
        let (nsu, ny) = (grid.nsu(), grid.ny());
        let mut data = Vec::with_capacity((nsu * ny) as usize);
        for i in 0..nsu {
            for j in 0..ny {
                data.push(f(i, j));
            }
        }
        Self { grid, data }
    }

    /// Samples `f(x, y)` on the fundamental domain. `f` must itself be
    /// L-invariant for the result to represent it elsewhere.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(T, T) -> Cx<T>) -> Self {
        Self::from_index_fn(grid, |i, j| f(grid.x(i), grid.y(j)))
    }

    pub fn constant(grid: Grid, v: Cx<T>) -> Self {
        Self::from_index_fn(grid, |_, _| v)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, czero())
    }

    /// The character `χ_{n,m}(x,y) = e(n·x/su + m·(y − (sv/su)·x))`, phases
    /// computed in exact integer arithmetic.
    pub fn character(grid: Grid, n: i64, m: i64) -> Self {
        let (nsu, ny, nsv) = (grid.nsu(), grid.ny(), grid.nsv());
        let table = PhaseTable::new(nsu * ny);
        Self::from_index_fn(grid, |i, j| table.get(n * i * ny + m * j * nsu - m * i * nsv))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }

    /// Value at an arbitrary grid point; L-invariant by construction.
    #[inline]
    pub fn eval_index(&self, i: i64, j: i64) -> Cx<T> {
        let nsu = self.grid.nsu();
        let k = div_floor(i, nsu);
        let li = (i - k * nsu) as usize;
        let lj = self.grid.wrap_y(j - k * self.grid.nsv());
        self.data[li * self.grid.ny() as usize + lj]
    }

    /// Samples onto a field window.
    pub fn to_field(&self, x0: i64, nx: usize) -> Result<ScalarField<T>> {
        ScalarField::from_index_fn(self.grid, x0, nx, |i, j| self.eval_index(i, j))
    }

    /// Pointwise product `G(x, y)·f(x, y)`.
    pub fn multiply_field(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.grid.ensure_same(f.grid())?;
        Ok(f.map_indexed(|i, j, z| z * self.eval_index(i, j)))
    }

    pub fn map(&self, f: impl FnMut(&Cx<T>) -> Cx<T>) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(f).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(Cx<T>, Cx<T>) -> Cx<T>) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }
    pub fn scale(&self, s: Cx<T>) -> Self {
        self.map(|z| z * s)
    }
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn sup_norm(&self) -> T {
        crate::scalar::sup_norm(&self.data)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Average over the fundamental domain.
    pub fn mean(&self) -> Cx<T> {
        let s = self.data.iter().fold(czero::<T>(), |a, z| a + z);
        s / T::lit(self.data.len() as f64)
    }

    /// `∫` over the fundamental domain (area `su`).
    pub fn integrate(&self) -> Cx<T> {
        self.mean() * self.grid.su::<T>()
    }

    /// `sup |Re g|`: zero exactly when `g` is skew-adjoint as a multiplier.
    pub fn real_part_sup(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.re.abs()))
    }

    pub fn spectrum(&self) -> TorusSpectrum<T> {
        TorusSpectrum::forward(self)
    }

    pub fn dx(&self) -> Self {
        self.spectrum().apply(|mode| mode.dx_symbol()).inverse()
    }

    pub fn dy(&self) -> Self {
        self.spectrum().apply(|mode| mode.dy_symbol()).inverse()
    }

    pub fn laplacian(&self) -> Self {
        self.spectrum().apply(|mode| mode.laplacian_symbol()).inverse()
    }

    /// Spectral primitive in x. Modes that ∂ₓ annihilates are dropped; use
    /// [`Self::x_kernel_part`] to see what was discarded.
    pub fn antiderivative_x(&self) -> Self {
        self.spectrum()
            .apply(|mode| {
                let s = mode.dx_symbol();
                if s.norm_sqr() == T::zero() {
                    czero()
                } else {
                    Cx::new(T::one(), T::zero()) / s
                }
            })
            .inverse()
    }

    /// Projection onto the modes with zero x-frequency.
    pub fn x_kernel_part(&self) -> Self {
        self.spectrum()
            .apply(|mode| {
                if mode.xi_num == 0 {
                    Cx::new(T::one(), T::zero())
                } else {
                    czero()
                }
            })
            .inverse()
    }
}

/// One Fourier mode of the skew torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub n: i64,
    pub m: i64,
    /// `ny·(n − m·sv)`, the x-frequency in units of `1/ny`.
    pub xi_num: i64,
    pub nyquist: bool,
    nsu: i64,
    ny: i64,
    nx_unit: i64,
}

impl Mode {
    /// `∂ₓ` eigenvalue `2πi(n − m·sv)/su`.
    pub fn dx_symbol<T: Real>(&self) -> Cx<T> {
        if self.nyquist {
            return czero();
        }
        ci(self.kx())
    }

    /// `∂ᵧ` eigenvalue `2πi·m`.
    pub fn dy_symbol<T: Real>(&self) -> Cx<T> {
        if self.nyquist {
            return czero();
        }
        ci(T::TAU() * T::lit(self.m as f64))
    }

    pub fn laplacian_symbol<T: Real>(&self) -> Cx<T> {
        if self.nyquist {
            return czero();
        }
        let kx: T = self.kx();
        let ky = T::TAU() * T::lit(self.m as f64);
        Cx::new(-(kx * kx + ky * ky), T::zero())
    }

    fn kx<T: Real>(&self) -> T {
        T::TAU() * T::lit(self.xi_num as f64) * T::lit(self.nx_unit as f64)
            / (T::lit(self.ny as f64) * T::lit(self.nsu as f64))
    }
}

/// Coefficients of a [`TorusFunction`] in the character basis `χ_{n,m}`,
/// with `m ∈ (−ny/2, ny/2]` and `n` the representative whose x-frequency
/// `n − m·sv` lies in `(−nsu/2, nsu/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSpectrum<T> {
    grid: Grid,
    /// `coeffs[mi·nsu + ni]`.
    coeffs: Vec<Cx<T>>,
}

impl<T: Real> TorusSpectrum<T> {
    fn forward(g: &TorusFunction<T>) -> Self {
        let grid = g.grid;
        let (nsu, ny) = (grid.nsu() as usize, grid.ny() as usize);
        let fy = FftPair::<T>::new(ny);
        let fx = FftPair::<T>::new(nsu);
        let twist = PhaseTable::<T>::new(grid.nsu() * grid.ny());
        let inv_ny = T::one() / T::lit(ny as f64);
        let inv_nsu = T::one() / T::lit(nsu as f64);
        let mut rows = g.data.clone();
        for row in rows.chunks_mut(ny) {
            fy.forward(row);
        }
        let mut coeffs = vec![czero(); nsu * ny];
        let mut col = vec![czero(); nsu];
        for mi in 0..ny {
            let m = fy.freq(mi);
            for (i, c) in col.iter_mut().enumerate() {
                *c = rows[i * ny + mi] * inv_ny * twist.get(m * i as i64 * grid.nsv());
            }
            fx.forward(&mut col);
            for (ni, c) in col.iter().enumerate() {
                coeffs[mi * nsu + ni] = c * inv_nsu;
            }
        }
        Self { grid, coeffs }
    }

    pub fn inverse(&self) -> TorusFunction<T> {
        let grid = self.grid;
        let (nsu, ny) = (grid.nsu() as usize, grid.ny() as usize);
        let fy = FftPair::<T>::new(ny);
        let fx = FftPair::<T>::new(nsu);
        let twist = PhaseTable::<T>::new(grid.nsu() * grid.ny());
        let mut data = vec![czero(); nsu * ny];
        let mut col = vec![czero(); nsu];
        for mi in 0..ny {
            let m = fy.freq(mi);
            col.copy_from_slice(&self.coeffs[mi * nsu..(mi + 1) * nsu]);
            fx.inverse(&mut col);
            for (i, c) in col.iter().enumerate() {
                data[i * ny + mi] = c * twist.get(-m * i as i64 * grid.nsv());
            }
        }
        for row in data.chunks_mut(ny) {
            fy.inverse(row);
        }
        TorusFunction { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn mode(&self, mi: usize, ni: usize) -> Mode {
        let (nsu, ny, nsv) = (self.grid.nsu(), self.grid.ny(), self.grid.nsv());
        let m = if 2 * mi as i64 > ny { mi as i64 - ny } else { mi as i64 };
        let period = nsu * ny;
        let t = (ni as i64 * ny - m * nsv).rem_euclid(period);
        let xi_num = if 2 * t > period { t - period } else { t };
        let n = (xi_num + m * nsv) / ny;
        let nyquist = (ny % 2 == 0 && 2 * m == ny) || 2 * xi_num == period;
        Mode {
            n,
            m,
            xi_num,
            nyquist,
            nsu,
            ny,
            nx_unit: self.grid.nx_unit(),
        }
    }

    /// Every resolved mode with its coefficient.
    pub fn modes(&self) -> impl Iterator<Item = (Mode, Cx<T>)> + '_ {
        let nsu = self.grid.nsu() as usize;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.mode(k / nsu, k % nsu), c))
    }

    /// Coefficient of `χ_{n,m}`, or `None` when that pair is not a resolved mode.
    pub fn coefficient(&self, n: i64, m: i64) -> Option<Cx<T>> {
        let (nsu, ny) = (self.grid.nsu(), self.grid.ny());
        let mi = m.rem_euclid(ny) as usize;
        let ni = n.rem_euclid(nsu) as usize;
        let mode = self.mode(mi, ni);
        (mode.n == n && mode.m == m).then(|| self.coeffs[mi * nsu as usize + ni])
    }

    /// Multiplies every coefficient by `symbol(mode)`.
    pub fn apply(&self, symbol: impl Fn(&Mode) -> Cx<T>) -> Self {
        let nsu = self.grid.nsu() as usize;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * symbol(&self.mode(k / nsu, k % nsu)))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// `Σ |ĝ|²`, equal to the mean of `|g|²` (Parseval).
    pub fn energy(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, c| a + c.norm_sqr())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{GridSpec, Params, Rational};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(su: (i64, i64), sv: (i64, i64), xc: u32, yc: u32) -> Grid {
        let p = Params::new(1, 0.5, Rational::new(su.0, su.1), Rational::new(sv.0, sv.1)).unwrap();
        Grid::new(
            p,
            GridSpec {
                refinement: 1,
                x_cells: xc,
                y_cells: yc,
                ..GridSpec::default()
            },
        )
        .unwrap()
    }

    fn random(grid: Grid, seed: u64) -> TorusFunction<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TorusFunction::from_index_fn(grid, |_, _| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn constant_has_single_coefficient() {
        let g = grid((1, 4), (1, 4), 4, 4);
        let s = TorusFunction::constant(g, Cx::new(1.0, 0.0)).spectrum();
        for (mode, c) in s.modes() {
            let want = if mode.n == 0 && mode.m == 0 { 1.0 } else { 0.0 };
            assert!((c - Cx::new(want, 0.0)).norm() < 1e-13, "{mode:?}");
        }
    }

    #[test]
    fn characters_are_basis_vectors() {
        let g = grid((1, 4), (1, 3), 5, 2);
        for (n, m) in [(1, 0), (0, 1), (-1, 2), (2, -1)] {
            let s = TorusFunction::<f64>::character(g, n, m).spectrum();
            assert!((s.coefficient(n, m).unwrap() - Cx::new(1.0, 0.0)).norm() < 1e-12);
            let others: f64 = s
                .modes()
                .filter(|(md, _)| (md.n, md.m) != (n, m))
                .map(|(_, c)| c.norm())
                .sum();
            assert!(others < 1e-10);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = grid((3, 10), (-1, 4), 2, 3);
        let f = random(g, 7);
        let back = f.spectrum().inverse();
        assert!(f.max_abs_diff(&back).unwrap() < 1e-13);
        let e = f.spectrum().energy();
        let mean_sq = f.data().iter().map(|z| z.norm_sqr()).sum::<f64>() / f.data().len() as f64;
        assert!((e - mean_sq).abs() / mean_sq < 1e-12);
    }

    #[test]
    fn real_functions_have_conjugate_symmetric_spectrum() {
        let g = grid((1, 4), (1, 4), 3, 3);
        let f = random(g, 3).map(|z| Cx::new(z.re, 0.0));
        let s = f.spectrum();
        // direct-summation oracle
        for (mode, c) in s.modes().take(10) {
            let chi = TorusFunction::<f64>::character(g, mode.n, mode.m);
            let direct = f.mul(&chi.conj()).unwrap().mean();
            assert!((direct - c).norm() < 1e-12);
        }
        for (mode, c) in s.modes() {
            if mode.nyquist {
                continue;
            }
            if let Some(d) = s.coefficient(-mode.n, -mode.m) {
                assert!((d - c.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn evaluation_is_lattice_invariant() {
        let g = grid((1, 4), (1, 6), 3, 2);
        let f = random(g, 11);
        for i in -30..30 {
            for j in -7..7 {
                assert_eq!(f.eval_index(i, j), f.eval_index(i + g.nsu(), j + g.nsv()));
                assert_eq!(f.eval_index(i, j), f.eval_index(i, j + g.ny()));
            }
        }
    }

    #[test]
    fn derivatives_of_a_character() {
        let g = grid((1, 4), (1, 4), 8, 4);
        let chi = TorusFunction::<f64>::character(g, 2, 1);
        let sv = 0.25;
        let su = 0.25;
        let kx = std::f64::consts::TAU * (2.0 - sv) / su;
        let ky = std::f64::consts::TAU;
        assert!(chi.dx().max_abs_diff(&chi.scale(Cx::new(0.0, kx))).unwrap() < 1e-9);
        assert!(chi.dy().max_abs_diff(&chi.scale(Cx::new(0.0, ky))).unwrap() < 1e-9);
        let lap = chi.scale(Cx::new(-(kx * kx + ky * ky), 0.0));
        assert!(chi.laplacian().max_abs_diff(&lap).unwrap() < 1e-7);
        let prim = chi.antiderivative_x();
        assert!(prim.dx().max_abs_diff(&chi).unwrap() < 1e-12);
    }

    #[test]
    fn characters_are_lattice_invariant_as_functions() {
        // χ sampled directly at shifted points agrees with eval_index
        let g = grid((1, 4), (1, 3), 4, 2);
        let (n, m) = (1, 2);
        let chi = TorusFunction::<f64>::character(g, n, m);
        let (nsu, ny, nsv) = (g.nsu(), g.ny(), g.nsv());
        for i in -20..20 {
            for j in 0..ny {
                let direct = crate::scalar::unit_phase::<f64>(n * i * ny + m * j * nsu - m * i * nsv, nsu * ny);
                assert!((direct - chi.eval_index(i, j)).norm() < 1e-12);
            }
        }
    }
}
