use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::scalar::{ci, Cx, Real};

/// How x-derivatives are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    /// Central differences of the given even order.
    FiniteDifference(usize),
    /// FFT over one period (after removing the quasi-periodic twist where one applies).
    Spectral,
}

impl Default for DiffScheme {
    fn default() -> Self {
        DiffScheme::FiniteDifference(6)
    }
}

/// Weights `w_1..w_r` of the order-`2r` central first-derivative stencil
/// `f'(x) ≈ Σ w_s (f(x+s·h) − f(x−s·h)) / h`.
pub fn central_weights(order: usize) -> Vec<f64> {
    assert!(
        order >= 2 && order.is_multiple_of(2),
        "stencil order must be even and ≥ 2"
    );
    let r = order / 2;
    // w_s = (-1)^{s+1} (r!)^2 / (s (r-s)! (r+s)!)
    (1..=r)
        .map(|s| {
            let mut w = 1.0 / s as f64;
            // (r!)^2 / ((r-s)!(r+s)!) = Π_{t=1}^{s} (r-s+t)/(r+t)
            for t in 1..=s {
                w *= (r - s + t) as f64 / (r + t) as f64;
            }
            if s % 2 == 0 {
                -w
            } else {
                w
            }
        })
        .collect()
}

/// Forward/inverse FFT plans of one length.
#[derive(Clone)]
pub struct FftPair<T: Real> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    /// `2πik/n` per bin, Nyquist zeroed.
    deriv: Vec<Cx<T>>,
}

impl<T: Real> std::fmt::Debug for FftPair<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("n", &self.n).finish()
    }
}

impl<T: Real> FftPair<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let mut pair = Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            deriv: Vec::new(),
        };
        let scale = T::one() / T::lit(n as f64);
        pair.deriv = (0..n)
            .map(|k| {
                let f = pair.freq(k);
                if 2 * f.abs() == n as i64 {
                    Cx::new(T::zero(), T::zero())
                } else {
                    ci(T::TAU() * T::lit(f as f64) * scale)
                }
            })
            .collect();
        pair
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Cx<T>]) {
        self.fwd.process(buf);
    }

    /// Unnormalized inverse transform in place.
    pub fn inverse(&self, buf: &mut [Cx<T>]) {
        self.inv.process(buf);
    }

    /// Signed frequency of bin `k` in `(−n/2, n/2]`.
    #[inline]
    pub fn freq(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if 2 * k > n {
            k - n
        } else {
            k
        }
    }

    /// Replaces `buf` (one period of length `period`) by its derivative.
    /// The Nyquist bin of even lengths is dropped.
    pub fn differentiate(&self, buf: &mut [Cx<T>], period: T) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward(buf);
        let scale = T::one() / period;
        for (z, m) in buf.iter_mut().zip(&self.deriv) {
            *z = *z * m * scale;
        }
        self.inverse(buf);
    }

    /// Multiplies each Fourier bin by `mult(frequency)`.
    pub fn apply_multiplier(&self, buf: &mut [Cx<T>], mult: impl Fn(i64) -> Cx<T>) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward(buf);
        let scale = T::one() / T::lit(self.n as f64);
        for (k, z) in buf.iter_mut().enumerate() {
            *z = *z * mult(self.freq(k)) * scale;
        }
        self.inverse(buf);
    }
}
