//! Far-field amplitudes of the pulse and adjoint modes.
//!
//! V ≈ p H₀(iλr), ψ_g ≈ s conj(H₀(iλr)), ψ₁ ≈ q₁ conj(H₁(iλr)).
//! The translational tail is reported as q = i q₁, its leading-order
//! equivalent in H₀ form.

use crate::bessel::{hankel0_i, hankel1_i};
use crate::modes::ModeSet;
use crate::params::Dispersion;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Residuals above this in the fitting window are rejected.
pub const WINDOW_NOISE_LIMIT: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailWindow {
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for TailWindow {
    fn default() -> Self {
        TailWindow { r_min: 4.0, r_max: 5.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub amplitude: C64,
    /// max |y − c h| / min |c h| over the window nodes.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCoefficients {
    pub window: TailWindow,
    pub p: TailFit,
    pub s: TailFit,
    pub q1: TailFit,
    pub q: C64,
}

/// Complex least-squares amplitude of y ≈ c·basis, with relative residual.
pub fn fit_amplitude(y: &[C64], basis: &[C64]) -> TailFit {
    let num: C64 = basis.iter().zip(y).map(|(h, v)| h.conj() * v).sum();
    let den: f64 = basis.iter().map(|h| h.norm_sqr()).sum();
    let c = num / den;
    let err = y.iter().zip(basis).map(|(v, h)| (v - c * h).norm()).fold(0.0, f64::max);
    let floor = basis.iter().map(|h| (c * h).norm()).fold(f64::INFINITY, f64::min);
    TailFit { amplitude: c, residual: err / floor }
}

pub fn fit_tail_coefficients(modes: &ModeSet, disp: &Dispersion, window: TailWindow) -> Result<TailCoefficients> {
    let lam = disp.lambda;
    let i = C64::new(0.0, 1.0);
    let idx: Vec<usize> = (0..modes.grid.len())
        .filter(|&j| modes.grid.r[j] >= window.r_min && modes.grid.r[j] <= window.r_max)
        .collect();
    if idx.len() < 3 {
        return Err(Error::Invalid(format!("tail window [{}, {}] holds {} nodes", window.r_min, window.r_max, idx.len())));
    }
    let pick = |f: &[C64]| idx.iter().map(|&j| f[j]).collect::<Vec<_>>();
    let h0: Vec<C64> = idx.iter().map(|&j| hankel0_i(lam * modes.grid.r[j])).collect();
    let h1: Vec<C64> = idx.iter().map(|&j| hankel1_i(lam * modes.grid.r[j])).collect();
    let h0c: Vec<C64> = h0.iter().map(|z| z.conj()).collect();
    let h1c: Vec<C64> = h1.iter().map(|z| z.conj()).collect();
    let p = fit_amplitude(&pick(&modes.v), &h0);
    let s = fit_amplitude(&pick(&modes.psi_g), &h0c);
    let q1 = fit_amplitude(&pick(&modes.psi_r), &h1c);
    for fit in [p, s, q1] {
        if !(fit.residual <= WINDOW_NOISE_LIMIT) {
            return Err(Error::WindowTooNoisy { residual: fit.residual });
        }
    }
    Ok(TailCoefficients { window, p, s, q1, q: i * q1.amplitude })
}

/// Phase-coupling constant J₂e^{iκ₂} implied by the tails: 4iαp s̄ √(2i/(λπ)).
pub fn analytic_phase_constant(alpha: C64, lambda: C64, p: C64, s: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    4.0 * i * alpha * p * s.conj() * (2.0 * i / (lambda * std::f64::consts::PI)).sqrt()
}

/// Ratio B linking the translational constant to the tails:
/// J₁e^{iκ₁} = iαp q̄ √(2iλπ) B.
pub fn translation_ratio(alpha: C64, lambda: C64, p: C64, q: C64, c1: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    c1 / (i * alpha * p * q.conj() * (2.0 * i * lambda * std::f64::consts::PI).sqrt())
}
