//! Type-I discrete sine transform through an FFT of the odd extension.

use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// y_k = Σ_{j=1}^{n} x_j sin(πjk/(n+1)), k = 1..n, for complex data.
#[derive(Clone)]
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Dst1 { n, fft }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transform `data` in place; `buf` must hold 2(n+1) entries.
    pub fn apply(&self, data: &mut [C64], buf: &mut [C64]) {
        let n = self.n;
        buf[0] = C64::default();
        buf[n + 1] = C64::default();
        for j in 0..n {
            buf[j + 1] = data[j];
            buf[2 * n + 1 - j] = -data[j];
        }
        self.fft.process(buf);
        // FFT of the odd extension equals −2i times the sine sum.
        for k in 0..n {
            data[k] = buf[k + 1] * C64::new(0.0, 0.5);
        }
    }

    /// Scale factor making the transform its own inverse.
    pub fn inverse_scale(&self) -> f64 {
        2.0 / (self.n + 1) as f64
    }
}

/// Two-dimensional DST-I on an n×n row-major array.
pub fn dst2(t: &Dst1, data: &mut [C64]) {
    let n = t.len();
    let mut buf = vec![C64::default(); 2 * (n + 1)];
    let mut col = vec![C64::default(); n];
    for row in data.chunks_mut(n) {
        t.apply(row, &mut buf);
    }
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        t.apply(&mut col, &mut buf);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum_and_inverts() {
        let n = 11;
        let t = Dst1::new(n);
        let x: Vec<C64> = (0..n).map(|j| C64::new((j as f64).sin() + 0.3, (j * j) as f64 * 0.01)).collect();
        let mut y = x.clone();
        let mut buf = vec![C64::default(); 2 * (n + 1)];
        t.apply(&mut y, &mut buf);
        for k in 0..n {
            let direct: C64 = (0..n).map(|j| x[j] * (std::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / (n + 1) as f64).sin()).sum();
            assert!((y[k] - direct).norm() < 1e-12);
        }
        t.apply(&mut y, &mut buf);
        for k in 0..n {
            assert!((y[k] * t.inverse_scale() - x[k]).norm() < 1e-13);
        }
    }
}
