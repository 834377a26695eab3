//! Scalar abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Real scalar type the kernels are generic over (`f32` or `f64`).
pub trait Real: Float + FloatConst + FftNum + Display + Default {
    /// Converts an `f64` constant into `Self`.
    fn lit(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Complex sample type.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn ci<T: Real>(im: T) -> Cx<T> {
    Complex::new(T::zero(), im)
}

/// `e(num/den) = exp(2πi·num/den)` with the argument reduced exactly in integers.
pub fn unit_phase<T: Real>(num: i64, den: i64) -> Cx<T> {
    debug_assert!(den > 0);
    let r = num.rem_euclid(den);
    let angle = 2.0 * std::f64::consts::PI * (r as f64) / (den as f64);
    Complex::new(T::lit(angle.cos()), T::lit(angle.sin()))
}

/// Lookup table for `e(k/den)`, `k` taken modulo `den`.
#[derive(Debug, Clone)]
pub struct PhaseTable<T> {
    den: i64,
    table: Vec<Cx<T>>,
}

impl<T: Real> PhaseTable<T> {
    pub fn new(den: i64) -> Self {
        let table = (0..den).map(|k| unit_phase(k, den)).collect();
        Self { den, table }
    }

    #[inline]
    pub fn get(&self, num: i64) -> Cx<T> {
        self.table[num.rem_euclid(self.den) as usize]
    }
}

/// `e(k/den)` for large `den` as a product of two tables of size about
/// `√den`.
#[derive(Debug, Clone)]
pub struct SplitPhaseTable<T> {
    den: i64,
    block: i64,
    lo: Vec<Cx<T>>,
    hi: Vec<Cx<T>>,
}

impl<T: Real> SplitPhaseTable<T> {
    pub fn new(den: i64) -> Self {
        let block = ((den as f64).sqrt().ceil() as i64).max(1);
        let lo = (0..block).map(|k| unit_phase(k, den)).collect();
        let hi = (0..=den / block).map(|k| unit_phase(k * block, den)).collect();
        Self { den, block, lo, hi }
    }

    #[inline]
    pub fn get(&self, num: i64) -> Cx<T> {
        let k = num.rem_euclid(self.den);
        self.hi[(k / self.block) as usize] * self.lo[(k % self.block) as usize]
    }
}

/// Sup-norm of a slice of samples.
pub fn sup_norm<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_table_matches_direct_phases() {
        let den = 2 * 128 * 4096;
        let t = SplitPhaseTable::<f64>::new(den);
        for num in [0, 1, -1, 977, den - 1, 3 * den + 12345, -7 * den - 5] {
            assert!((t.get(num) - unit_phase::<f64>(num, den)).norm() < 1e-15);
        }
    }
}
