//! One-dimensional chirp transform on centered indices,
//! `y_a = Σ_b x_b exp(i s β a b)` with `a, b ∈ {−M/2, …, M/2 − 1}`,
//! evaluated by Bluestein's identity `ab = (a² + b² − (a − b)²)/2` as a
//! linear convolution through a zero-padded FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct ChirpTransform {
    m: usize,
    /// `exp(i s β b²/2)` on centered indices.
    chirp: Vec<Complex64>,
    /// FFT of the kernel `exp(−i s β d²/2)`, `d ∈ (−M, M)`, wrapped.
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ChirpTransform {
    pub(crate) fn new(m: usize, beta: f64) -> Self {
        let half = (m / 2) as f64;
        let chirp: Vec<Complex64> =
            (0..m).map(|i| Complex64::from_polar(1.0, 0.5 * beta * (i as f64 - half).powi(2))).collect();
        let size = (2 * m).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); size];
        for d in -(m as i64 - 1)..(m as i64) {
            let idx = d.rem_euclid(size as i64) as usize;
            kernel_hat[idx] = Complex64::from_polar(1.0, -0.5 * beta * (d as f64).powi(2));
        }
        forward.process(&mut kernel_hat);
        Self { m, chirp, kernel_hat, forward, inverse }
    }

    /// Transforms `x` into `out`, both of length `M`.
    pub(crate) fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.m);
        debug_assert_eq!(out.len(), self.m);
        let size = self.kernel_hat.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (b, (v, w)) in buf.iter_mut().zip(x.iter().zip(&self.chirp)) {
            *b = v * w;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let norm = 1.0 / size as f64;
        for (o, (b, w)) in out.iter_mut().zip(buf.iter().zip(&self.chirp)) {
            *o = b * w * norm;
        }
    }
}
