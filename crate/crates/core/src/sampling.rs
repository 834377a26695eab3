//! Seeded smooth test data: module vectors, skew torus functions, D-elements.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::AlgebraElement;
use crate::bimodule::{inner_d, ModuleVector};
use crate::error::Result;
use crate::lattice::{Grid, ScalarField, TorusFunction};
use crate::scalar::{unit_phase, Cx, Real};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `exp(−1/(1 − s²))` for `|s| < 1`, else 0.
pub fn smooth_bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn complex(rng: &mut TestRng) -> Cx<f64> {
    Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// `bump((x − x₀)/r)·Σ_{|m|≤2} a_m e(m·y)` with a random center `x₀ ∈ [−1/2, 1/2]`
/// and radius `r ∈ [0.3, 0.5]`.
pub fn smooth_vector<T: Real>(grid: &Grid, rng: &mut TestRng) -> Result<ModuleVector<T>> {
    let center: f64 = rng.gen_range(-0.5..0.5);
    let radius: f64 = rng.gen_range(0.3..0.5);
    let coef: Vec<Cx<f64>> = (0..5).map(|_| complex(rng)).collect();
    let n = grid.nx_unit() as f64;
    let lo = ((center - radius) * n).floor() as i64;
    let hi = ((center + radius) * n).ceil() as i64;
    let ny = grid.ny();
    ScalarField::from_index_fn(*grid, lo, (hi - lo + 1) as usize, |i, j| {
        let b = smooth_bump((i as f64 / n - center) / radius);
        let mut s = Cx::new(0.0, 0.0);
        for (k, a) in coef.iter().enumerate() {
            s += a * unit_phase::<f64>((k as i64 - 2) * j, ny);
        }
        let v = s * b;
        Cx::new(T::lit(v.re), T::lit(v.im))
    })
}

pub fn smooth_battery<T: Real>(grid: &Grid, count: usize, seed: u64) -> Result<Vec<ModuleVector<T>>> {
    let mut r = rng(seed);
    (0..count).map(|_| smooth_vector(grid, &mut r)).collect()
}

/// `Σ (a·χ_{n,m} − ā·χ_{−n,−m})` over `|n|, |m| ≤ max_mode`, which is skew.
pub fn skew_torus<T: Real>(grid: &Grid, max_mode: i64, rng: &mut TestRng) -> TorusFunction<T> {
    let mut acc = TorusFunction::<T>::zeros(*grid);
    let lit = |z: Cx<f64>| Cx::new(T::lit(z.re), T::lit(z.im));
    for n in -max_mode..=max_mode {
        for m in -max_mode..=max_mode {
            let a = complex(rng) / ((1 + n * n + m * m) as f64);
            let chi = TorusFunction::<T>::character(*grid, n, m);
            let chi_bar = TorusFunction::<T>::character(*grid, -n, -m);
            acc = acc
                .add(&chi.scale(lit(a)))
                .and_then(|s| s.sub(&chi_bar.scale(lit(a.conj()))))
                .expect("same grid");
        }
    }
    acc
}

/// `⟨a, b⟩_D` for two smooth random vectors: a smooth element of `D`.
pub fn smooth_d_element<T: Real>(grid: &Grid, rng: &mut TestRng) -> Result<AlgebraElement<T>> {
    let a = smooth_vector(grid, rng)?;
    let b = smooth_vector(grid, rng)?;
    inner_d(&a, &b)
}
