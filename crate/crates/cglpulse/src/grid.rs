//! Uniform Cartesian grids and composite Boole quadrature.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Square grid of (2m+1)² nodes with spacing dx = half_length / m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: [f64; 2],
    pub half_length: f64,
    pub m: usize,
}

impl GridSpec {
    pub fn new(center: [f64; 2], half_length: f64, m: usize) -> Self {
        GridSpec { center, half_length, m }
    }

    pub fn points(&self) -> usize {
        2 * self.m + 1
    }

    pub fn len(&self) -> usize {
        self.points() * self.points()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.half_length / self.m as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.center[axis] + (i as f64 - self.m as f64) * self.dx()
    }

    /// Flat index of node (i, j), i along x.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.points() + j
    }

    pub fn boole_compatible(&self) -> bool {
        self.points() % 4 == 1
    }

    pub fn same_nodes(&self, other: &GridSpec) -> bool {
        self == other
    }

    /// Smallest even m ≥ the given one, making the grid Boole compatible.
    pub fn suggest_m(m: usize) -> usize {
        m + m % 2
    }
}

/// Composite Boole weights for n = 4k+1 nodes of spacing h.
pub fn boole_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 5 || n % 4 != 1 {
        return Err(Error::NotBooleCompatible { points: n });
    }
    let pattern = [7.0, 32.0, 12.0, 32.0];
    let mut w = vec![0.0; n];
    for panel in 0..(n - 1) / 4 {
        for (k, c) in pattern.iter().enumerate() {
            w[4 * panel + k] += c;
        }
        w[4 * panel + 4] += 7.0;
    }
    w.iter_mut().for_each(|x| *x *= 2.0 * h / 45.0);
    Ok(w)
}

/// Tensor-product Boole rule on a grid.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub spec: GridSpec,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let w1 = boole_weights(spec.points(), spec.dx())?;
        let n = spec.points();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                weights[i * n + j] = w1[i] * w1[j];
            }
        }
        Ok(Quadrature { spec, weights })
    }

    /// The same rule translated to a new centre.
    pub fn recentred(&self, center: [f64; 2]) -> Self {
        Quadrature { spec: GridSpec { center, ..self.spec }, weights: self.weights.clone() }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Re ∬ a b̄ dx dy.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> Result<f64> {
        if a.len() != self.weights.len() || b.len() != self.weights.len() {
            return Err(Error::GridMismatch);
        }
        Ok(self.inner_unchecked(a, b))
    }

    pub(crate) fn inner_unchecked(&self, a: &[C64], b: &[C64]) -> f64 {
        let mut acc = 0.0;
        for ((w, x), y) in self.weights.iter().zip(a).zip(b) {
            acc += w * (x.re * y.re + x.im * y.im);
        }
        acc
    }
}

/// Complex samples on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field2D {
    pub spec: GridSpec,
    pub values: Vec<C64>,
}

impl Field2D {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand() {
        let q = Quadrature::new(GridSpec::new([0.0, 0.0], 1.0, 8)).unwrap();
        let one = vec![C64::new(1.0, 0.0); q.spec.len()];
        assert!((q.inner(&one, &one).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn degree_five_exact() {
        let spec = GridSpec::new([0.3, -0.2], 1.5, 6);
        let q = Quadrature::new(spec).unwrap();
        let n = spec.points();
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) + x.powi(5);
        let mut f = vec![C64::default(); spec.len()];
        for i in 0..n {
            for j in 0..n {
                f[spec.index(i, j)] = C64::new(p(spec.coord(0, i)) * p(spec.coord(1, j)), 0.0);
            }
        }
        let one = vec![C64::new(1.0, 0.0); spec.len()];
        let prim = |x: f64| x - x * x + 0.125 * x.powi(4) + x.powi(6) / 6.0;
        let ix = prim(1.8) - prim(-1.2);
        let iy = prim(1.3) - prim(-1.7);
        let got = q.inner(&f, &one).unwrap();
        assert!((got - ix * iy).abs() < 1e-12 * (ix * iy).abs().max(1.0));
    }

    #[test]
    fn rejects_incompatible_grid() {
        assert!(matches!(boole_weights(7, 0.1), Err(Error::NotBooleCompatible { points: 7 })));
        assert!(Quadrature::new(GridSpec::new([0.0, 0.0], 1.0, 3)).is_err());
    }

    #[test]
    fn mismatched_fields() {
        let q = Quadrature::new(GridSpec::new([0.0, 0.0], 1.0, 4)).unwrap();
        let a = vec![C64::default(); 3];
        assert!(matches!(q.inner(&a, &a), Err(Error::GridMismatch)));
    }
}
