//! Commensurate discretization of ℝ×𝕋 and of the skew torus ℝ²/L.
//!
//! Both translation steps `su = 2ℏμ` and `sv = 2ℏν` are exact rationals and
//! the grid spacings divide them, so every translation that appears in the
//! module formulas is an integer index shift. Only derivatives carry
//! discretization error.

mod field;
mod spectral;
mod torus;

pub use field::{Axis, ScalarField};
pub use spectral::{central_weights, DiffScheme, FftPair};
pub use torus::Mode;
pub use torus::{TorusFunction, TorusSpectrum};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{PhaseTable, Real};

pub type Rational = Ratio<i64>;

/// Model parameters: the integer `c`, Planck's constant and the two
/// translation steps `su = 2ℏμ`, `sv = 2ℏν` (exact rationals).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    c: i64,
    hbar: f64,
    su: Rational,
    sv: Rational,
}

impl Params {
    pub fn new(c: i64, hbar: f64, su: Rational, sv: Rational) -> Result<Self> {
        if c < 1 {
            return Err(Error::InvalidParams(format!("c must be a positive integer, got {c}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {hbar}")));
        }
        let half = Rational::new(1, 2);
        if !(su > Rational::zero() && su < half) {
            return Err(Error::InvalidParams(format!(
                "2ħμ = {su} must lie strictly between 0 and 1/2"
            )));
        }
        Ok(Self { c, hbar, su, sv })
    }

    /// Builds the parameters from `ħ, μ, ν` given as exact rationals.
    pub fn from_planck(c: i64, hbar: Rational, mu: Rational, nu: Rational) -> Result<Self> {
        if !hbar.is_positive() {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {hbar}")));
        }
        if mu.is_zero() && nu.is_zero() {
            return Err(Error::InvalidParams("μ² + ν² must be nonzero".into()));
        }
        let two = Rational::from_integer(2);
        let hbar_f = *hbar.numer() as f64 / *hbar.denom() as f64;
        Self::new(c, hbar_f, two * hbar * mu, two * hbar * nu)
    }

    pub fn c(&self) -> i64 {
        self.c
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn su(&self) -> Rational {
        self.su
    }
    pub fn sv(&self) -> Rational {
        self.sv
    }
    pub fn mu(&self) -> f64 {
        ratio_f64(self.su) / (2.0 * self.hbar)
    }
    pub fn nu(&self) -> f64 {
        ratio_f64(self.sv) / (2.0 * self.hbar)
    }
}

pub fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Resolution knobs. `x_cells`/`y_cells` set the number of samples per
/// `1/b` (resp. `1/b'`) where `su = a/b`, `sv = a'/b'`; `refinement`
/// multiplies both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub refinement: u32,
    pub x_cells: u32,
    pub y_cells: u32,
    pub max_samples: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            refinement: 1,
            x_cells: 1,
            y_cells: 1,
            max_samples: 1 << 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    params: Params,
    spec: GridSpec,
    nx_unit: i64,
    nsu: i64,
    ny: i64,
    nsv: i64,
}

/// Grid at the bare commensurate resolution: `hx = 1/(b·refinement)`,
/// `hy = 1/(b'·refinement)`.
pub fn make_grid(params: Params, refinement: u32) -> Result<Grid> {
    Grid::new(
        params,
        GridSpec {
            refinement,
            ..GridSpec::default()
        },
    )
}

impl Grid {
    pub fn new(params: Params, spec: GridSpec) -> Result<Self> {
        if spec.refinement == 0 || spec.x_cells == 0 || spec.y_cells == 0 {
            return Err(Error::InvalidParams("refinement and cell counts must be ≥ 1".into()));
        }
        let scale_x = spec.x_cells as i64 * spec.refinement as i64;
        let scale_y = spec.y_cells as i64 * spec.refinement as i64;
        let (a, b) = (*params.su.numer(), *params.su.denom());
        let (ap, bp) = (*params.sv.numer(), *params.sv.denom());
        let nx_unit = b.checked_mul(scale_x).ok_or(Error::Overflow {
            requested: usize::MAX,
            limit: spec.max_samples,
        })?;
        let ny = bp * scale_y;
        let grid = Self {
            params,
            spec,
            nx_unit,
            nsu: a * scale_x,
            ny,
            nsv: ap * scale_y,
        };
        // A D-element component spans one full x-period.
        grid.check_samples((nx_unit as usize).saturating_mul(ny as usize))?;
        Ok(grid)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn c(&self) -> i64 {
        self.params.c
    }
    /// Samples per unit length in x (`1/hx`).
    pub fn nx_unit(&self) -> i64 {
        self.nx_unit
    }
    /// `su/hx`.
    pub fn nsu(&self) -> i64 {
        self.nsu
    }
    /// Samples per y-period (`1/hy`).
    pub fn ny(&self) -> i64 {
        self.ny
    }
    /// `sv/hy` (not reduced modulo `ny`; phases depend on the actual value).
    pub fn nsv(&self) -> i64 {
        self.nsv
    }

    pub fn hx_ratio(&self) -> Rational {
        Rational::new(1, self.nx_unit)
    }
    pub fn hy_ratio(&self) -> Rational {
        Rational::new(1, self.ny)
    }
    pub fn hx<T: Real>(&self) -> T {
        T::one() / T::lit(self.nx_unit as f64)
    }
    pub fn hy<T: Real>(&self) -> T {
        T::one() / T::lit(self.ny as f64)
    }
    pub fn su<T: Real>(&self) -> T {
        T::lit(self.nsu as f64) / T::lit(self.nx_unit as f64)
    }
    pub fn sv<T: Real>(&self) -> T {
        T::lit(self.nsv as f64) / T::lit(self.ny as f64)
    }
    pub fn x<T: Real>(&self, i: i64) -> T {
        T::lit(i as f64) / T::lit(self.nx_unit as f64)
    }
    pub fn y<T: Real>(&self, j: i64) -> T {
        T::lit(j as f64) / T::lit(self.ny as f64)
    }

    #[inline]
    pub fn wrap_y(&self, j: i64) -> usize {
        j.rem_euclid(self.ny) as usize
    }

    /// Exact x-index of a rational coordinate.
    pub fn x_index(&self, x: Rational) -> Option<i64> {
        exact_index(x, self.nx_unit)
    }

    pub fn y_index(&self, y: Rational) -> Option<i64> {
        exact_index(y, self.ny)
    }

    /// Table of `e(k/(2·ny))`, the resolution every twisting phase lives on.
    pub fn half_phase_table<T: Real>(&self) -> PhaseTable<T> {
        PhaseTable::new(2 * self.ny)
    }

    pub fn check_samples(&self, n: usize) -> Result<()> {
        if n > self.spec.max_samples {
            Err(Error::Overflow {
                requested: n,
                limit: self.spec.max_samples,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

fn exact_index(r: Rational, per_unit: i64) -> Option<i64> {
    let scaled = r * Rational::from_integer(per_unit);
    if scaled.denom().is_one() {
        Some(*scaled.numer())
    } else {
        None
    }
}

/// `floor(a/b)` for `b > 0`.
#[inline]
pub fn div_floor(a: i64, b: i64) -> i64 {
    Integer::div_floor(&a, &b)
}
