//! Neutral modes of the linearization about the pulse and their adjoints.
//!
//! The linearization 𝕃z = α∇²z + βz + (ζ + |V|²ζ')z + V²ζ' z̄ is only
//! real-linear, so modes are computed on the real/imaginary split. The adjoint
//! under ⟨u,v⟩ = Re∫u v̄ is 𝕃*ψ = ᾱ∇²ψ + conj(β + ζ + |V|²ζ')ψ + V²ζ' ψ̄.
//! An azimuthal factor cos(mθ) separates both operators.

use crate::cheb::ChebGrid;
use crate::pulse::PulseSolution;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct RadialMode {
    pub m: u32,
    pub adjoint: bool,
    pub values: Vec<C64>,
    /// Smallest and second-smallest singular values of the discrete operator.
    pub singular_values: (f64, f64),
    /// ‖A v‖₂ for the unit-norm discrete kernel vector.
    pub operator_residual: f64,
}

fn operator(sol: &PulseSolution, m: u32, adjoint: bool) -> DMatrix<f64> {
    let grid = &sol.grid;
    let p = &sol.params;
    let n = grid.len();
    let last = n - 1;
    let mf = (m * m) as f64;
    let alpha = if adjoint { p.alpha.conj() } else { p.alpha };
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 1..last {
        let r = grid.r[i];
        let v = sol.profile.values[i];
        let (lin, b) = p.linearization(v);
        let diag = if adjoint { (p.beta + lin).conj() } else { p.beta + lin };
        for k in 0..n {
            let mut lap = grid.d2[(i, k)] + grid.d1[(i, k)] / r;
            if k == i {
                lap -= mf / (r * r);
            }
            let op = alpha * lap;
            a[(i, k)] = op.re;
            a[(i, n + k)] = -op.im;
            a[(n + i, k)] = op.im;
            a[(n + i, n + k)] = op.re;
        }
        a[(i, i)] += diag.re + b.re;
        a[(i, n + i)] += -diag.im + b.im;
        a[(n + i, i)] += diag.im + b.im;
        a[(n + i, n + i)] += diag.re - b.re;
    }
    if m == 0 {
        for k in 0..n {
            a[(0, k)] = grid.d1[(0, k)];
            a[(n, n + k)] = grid.d1[(0, k)];
        }
    } else {
        a[(0, 0)] = 1.0;
        a[(n, n)] = 1.0;
    }
    a[(last, last)] = 1.0;
    a[(n + last, n + last)] = 1.0;
    a
}

/// Kernel of the discrete (adjoint) linearization restricted to azimuthal index m.
///
/// Boundary conditions: m=0 has zero slope at the origin, m=1 vanishes there;
/// both vanish at r = L. Direct modes are rescaled onto iV (m=0) or −V' (m=1).
pub fn solve_eigenmode(sol: &PulseSolution, m: u32, adjoint: bool) -> Result<RadialMode> {
    if m > 1 {
        return Err(Error::Invalid(format!("azimuthal index {m} not supported")));
    }
    let n = sol.grid.len();
    let a = operator(sol, m, adjoint);
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = svd.singular_values[order[0]];
    let next = svd.singular_values[order[1]];
    if !(smallest < 1e-6 * next) {
        return Err(Error::NullspaceDimension { m, adjoint, smallest, next });
    }
    let row = vt.row(order[0]).transpose();
    let operator_residual = (&a * &row).norm() / row.norm();
    let mut values: Vec<C64> = (0..n).map(|k| C64::new(row[k], row[n + k])).collect();
    if !adjoint {
        let target = direct_profile(sol, m);
        // Real-linear kernel: only real rescaling is admissible.
        let num: f64 = target.iter().zip(&values).map(|(t, v)| (v.conj() * t).re).sum();
        let den: f64 = values.iter().map(|v| v.norm_sqr()).sum();
        let c = num / den;
        values.iter_mut().for_each(|v| *v *= c);
    }
    Ok(RadialMode { m, adjoint, values, singular_values: (smallest, next), operator_residual })
}

/// Analytic direct modes: iV for m=0, −V' for m=1.
pub fn direct_profile(sol: &PulseSolution, m: u32) -> Vec<C64> {
    let v = &sol.profile.values;
    if m == 0 {
        v.iter().map(|z| C64::new(0.0, 1.0) * z).collect()
    } else {
        sol.grid.diff(v).into_iter().map(|z| -z).collect()
    }
}

/// Radial parts of the six neutral modes with the biorthogonal normalization.
///
/// φ_g = iV, φ_rx = −V'cosθ, φ_ry = −V'sinθ, and
/// ψ_g = ψ₀(r), ψ_rx = ψ₁(r)cosθ, ψ_ry = ψ₁(r)sinθ.
#[derive(Clone, Debug)]
pub struct ModeSet {
    pub grid: ChebGrid,
    pub v: Vec<C64>,
    pub dv: Vec<C64>,
    pub psi_g: Vec<C64>,
    pub psi_r: Vec<C64>,
    /// ⟨φ_a, ψ_b⟩ for a, b in (rx, ry, g).
    pub pairings: [[f64; 3]; 3],
    pub normalization_residual: f64,
}

impl ModeSet {
    pub fn phi_g(&self) -> Vec<C64> {
        self.v.iter().map(|z| C64::new(0.0, 1.0) * z).collect()
    }

    pub fn phi_r(&self) -> Vec<C64> {
        self.dv.iter().map(|z| -z).collect()
    }
}

/// 2π∫Re(a b̄) r dr, the pairing of two m=0 fields.
fn pair_m0(grid: &ChebGrid, a: &[C64], b: &[C64]) -> f64 {
    2.0 * PI * grid.integrate_r(|j| (a[j] * b[j].conj()).re)
}

/// π∫Re(a b̄) r dr, the pairing of two cosθ (or two sinθ) fields.
fn pair_m1(grid: &ChebGrid, a: &[C64], b: &[C64]) -> f64 {
    PI * grid.integrate_r(|j| (a[j] * b[j].conj()).re)
}

/// Rescale the adjoint kernels so that ⟨φ_a, ψ_b⟩ = δ_ab.
pub fn normalize_modes(sol: &PulseSolution, adjoint_m0: &RadialMode, adjoint_m1: &RadialMode) -> Result<ModeSet> {
    let grid = sol.grid.clone();
    let v = sol.profile.values.clone();
    let dv = grid.diff(&v);
    let phi_g = direct_profile(sol, 0);
    let phi_r = direct_profile(sol, 1);
    let ng = pair_m0(&grid, &phi_g, &adjoint_m0.values);
    let nr = pair_m1(&grid, &phi_r, &adjoint_m1.values);
    for value in [ng, nr] {
        if value.abs() < 1e-12 {
            return Err(Error::DegeneratePairing { value });
        }
    }
    let psi_g: Vec<C64> = adjoint_m0.values.iter().map(|z| z / ng).collect();
    let psi_r: Vec<C64> = adjoint_m1.values.iter().map(|z| z / nr).collect();
    let d_r = pair_m1(&grid, &phi_r, &psi_r);
    let d_g = pair_m0(&grid, &phi_g, &psi_g);
    // Cross pairings between different angular factors integrate to zero over θ.
    let pairings = [[d_r, 0.0, 0.0], [0.0, d_r, 0.0], [0.0, 0.0, d_g]];
    let normalization_residual = (d_r - 1.0).abs().max((d_g - 1.0).abs());
    Ok(ModeSet { grid, v, dv, psi_g, psi_r, pairings, normalization_residual })
}

/// Solve both adjoint kernels and normalize.
pub fn compute_modes(sol: &PulseSolution) -> Result<ModeSet> {
    let a0 = solve_eigenmode(sol, 0, true)?;
    let a1 = solve_eigenmode(sol, 1, true)?;
    normalize_modes(sol, &a0, &a1)
}
