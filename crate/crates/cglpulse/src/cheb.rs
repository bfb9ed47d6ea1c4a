//! Chebyshev collocation on a radial interval [0, L].

use crate::C64;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Gauss-Lobatto grid r_j = L(1 − cos(πj/N))/2, increasing from 0 to L.
#[derive(Clone, Debug)]
pub struct ChebGrid {
    pub n: usize,
    pub length: f64,
    pub r: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// Clenshaw-Curtis weights for ∫₀ᴸ g(r) dr.
    pub weights: Vec<f64>,
    bary: Vec<f64>,
}

impl ChebGrid {
    pub fn new(n: usize, length: f64) -> Self {
        assert!(n >= 4, "need at least 4 intervals");
        let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
        let c = |j: usize| -> f64 {
            let e = if j == 0 || j == n { 2.0 } else { 1.0 };
            if j % 2 == 0 { e } else { -e }
        };
        let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
        for i in 0..=n {
            for j in 0..=n {
                if i != j {
                    d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
                }
            }
        }
        for i in 0..=n {
            let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
            d[(i, i)] = -s;
        }
        // r = L(1 − x)/2, so d/dr = −(2/L) d/dx.
        let d1 = d * (-2.0 / length);
        let d2 = &d1 * &d1;
        let r = x.iter().map(|&xi| 0.5 * length * (1.0 - xi)).collect();
        let weights = clenshaw_curtis(n).into_iter().map(|w| w * 0.5 * length).collect();
        let bary = (0..=n)
            .map(|j| {
                let h = if j == 0 || j == n { 0.5 } else { 1.0 };
                if j % 2 == 0 { h } else { -h }
            })
            .collect();
        ChebGrid { n, length, r, d1, d2, weights, bary }
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn diff(&self, v: &[C64]) -> Vec<C64> {
        apply(&self.d1, v)
    }

    pub fn diff2(&self, v: &[C64]) -> Vec<C64> {
        apply(&self.d2, v)
    }

    /// ∫₀ᴸ g(r) r dr.
    pub fn integrate_r(&self, g: impl Fn(usize) -> f64) -> f64 {
        (0..=self.n).map(|j| self.weights[j] * self.r[j] * g(j)).sum()
    }

    /// Barycentric interpolation of nodal values at an arbitrary radius.
    pub fn interp(&self, v: &[C64], r: f64) -> C64 {
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..=self.n {
            let dr = r - self.r[j];
            if dr == 0.0 {
                return v[j];
            }
            let t = self.bary[j] / dr;
            num += v[j] * t;
            den += t;
        }
        num / den
    }
}

pub fn apply(m: &DMatrix<f64>, v: &[C64]) -> Vec<C64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += v[j] * m[(i, j)];
            }
            acc
        })
        .collect()
}

/// Clenshaw-Curtis weights on [−1, 1] for nodes cos(πj/N).
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let theta: Vec<f64> = (0..=n).map(|j| PI * j as f64 / nf).collect();
    let mut v = vec![1.0; n.saturating_sub(1)];
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta[i + 1]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for i in 1..n {
        w[i] = 2.0 * v[i - 1] / nf;
    }
    w
}
