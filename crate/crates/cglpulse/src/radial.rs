//! Fast evaluation of radial profiles off the collocation grid.
//!
//! Barycentric interpolation over all Chebyshev nodes is exact to round-off
//! but costs O(n) per point. Sampling a 2D grid needs millions of
//! evaluations, so profiles are resampled once onto a fine uniform table and
//! evaluated with a local six-point Lagrange stencil. Parity about r = 0
//! keeps the stencil centred near the origin.

use crate::cheb::ChebGrid;
use crate::C64;

const STENCIL: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug)]
pub struct RadialTable {
    h: f64,
    length: f64,
    parity: Parity,
    values: Vec<C64>,
}

impl RadialTable {
    pub fn new(grid: &ChebGrid, nodal: &[C64], parity: Parity, samples: usize) -> Self {
        let length = grid.r[grid.len() - 1];
        let h = length / samples as f64;
        let values = (0..=samples).map(|i| grid.interp(nodal, i as f64 * h)).collect();
        RadialTable { h, length, parity, values }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn at(&self, i: i64) -> C64 {
        if i < 0 {
            let v = self.values[(-i) as usize];
            match self.parity {
                Parity::Even => v,
                Parity::Odd => -v,
            }
        } else {
            self.values.get(i as usize).copied().unwrap_or_default()
        }
    }

    /// Value and radial derivative at r ≥ 0; zero beyond the domain.
    pub fn eval(&self, r: f64) -> (C64, C64) {
        if r >= self.length {
            return (C64::default(), C64::default());
        }
        let t = r / self.h;
        let i0 = t.floor() as i64 - (STENCIL as i64 / 2 - 1);
        let s = t - i0 as f64;
        let mut value = C64::default();
        let mut slope = C64::default();
        for k in 0..STENCIL {
            let mut den = 1.0;
            let mut num = 1.0;
            let mut dnum = 0.0;
            for m in 0..STENCIL {
                if m == k {
                    continue;
                }
                den *= k as f64 - m as f64;
                dnum = dnum * (s - m as f64) + num;
                num *= s - m as f64;
            }
            let f = self.at(i0 + k as i64);
            value += f * (num / den);
            slope += f * (dnum / den);
        }
        (value, slope / self.h)
    }

    pub fn value(&self, r: f64) -> C64 {
        self.eval(r).0
    }
}

/// Tabulated pulse and adjoint radial profiles.
#[derive(Clone, Debug)]
pub struct PulseTables {
    pub v: RadialTable,
    pub psi_g: RadialTable,
    pub psi_r: RadialTable,
}

pub const DEFAULT_SAMPLES: usize = 1 << 15;

impl PulseTables {
    pub fn new(modes: &crate::modes::ModeSet, samples: usize) -> Self {
        let g = &modes.grid;
        PulseTables {
            v: RadialTable::new(g, &modes.v, Parity::Even, samples),
            psi_g: RadialTable::new(g, &modes.psi_g, Parity::Even, samples),
            psi_r: RadialTable::new(g, &modes.psi_r, Parity::Odd, samples),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_reproduces_smooth_profile() {
        let grid = ChebGrid::new(96, 10.0);
        let f = |r: f64| C64::new((-r * r).exp(), r * r * (-r).exp());
        let nodal: Vec<C64> = grid.r.iter().map(|&r| f(r)).collect();
        let t = RadialTable::new(&grid, &nodal, Parity::Even, 1 << 14);
        for &r in &[0.0, 1e-5, 0.3, 1.234, 4.5, 7.77] {
            let (v, d) = t.eval(r);
            assert!((v - f(r)).norm() < 1e-11, "r={r}");
            let df = C64::new(-2.0 * r * (-r * r).exp(), (2.0 * r - r * r) * (-r).exp());
            assert!((d - df).norm() < 1e-7, "r={r} {d} {df}");
        }
    }

    #[test]
    fn odd_parity_at_origin() {
        let grid = ChebGrid::new(64, 8.0);
        let nodal: Vec<C64> = grid.r.iter().map(|&r| C64::new(r * (-r * r).exp(), 0.0)).collect();
        let t = RadialTable::new(&grid, &nodal, Parity::Odd, 1 << 13);
        let (v, d) = t.eval(0.0);
        assert!(v.norm() < 1e-14);
        assert!((d.re - 1.0).abs() < 1e-9);
    }
}
