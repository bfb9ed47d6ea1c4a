//! Closed-form pairwise interaction law.
//!
//! For pulses k ≠ j at distance d with phase difference g_k − g_j:
//!
//! ```text
//! ⟨Φ, ψ_{r,k}⟩ = Σ_j Re[J₁e^{iκ₁} e^{−i(g_k−g_j)} T(d)] (r_j − r_k)/d
//! ⟨Φ, ψ_{g,k}⟩ = Σ_j Re[J₂e^{iκ₂} e^{−i(g_k−g_j)} P(d)]
//! ```
//!
//! with T, P built from H₁(iλd), H₀(iλd) and normalized so that both tend to
//! d^{−1/2} e^{−λd} e^{iπ/4} at large d.

use crate::bessel::{hankel0_i, hankel1_i};
use crate::kernel::Pulse;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawConstants {
    pub j1: f64,
    pub kappa1: f64,
    pub j2: f64,
    pub kappa2: f64,
}

impl LawConstants {
    pub fn from_complex(c1: C64, c2: C64) -> Self {
        LawConstants { j1: c1.norm(), kappa1: c1.arg(), j2: c2.norm(), kappa2: c2.arg() }
    }

    pub fn c1(&self) -> C64 {
        C64::from_polar(self.j1, self.kappa1)
    }

    pub fn c2(&self) -> C64 {
        C64::from_polar(self.j2, self.kappa2)
    }

    /// J₁J₂λ_i cos(κ₂ − κ₁) > 0 gives a reversible two-pulse flow.
    pub fn hamiltonian_indicator(&self, lambda_i: f64) -> f64 {
        self.j1 * self.j2 * lambda_i * (self.kappa2 - self.kappa1).cos()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailForm {
    /// Full complex-argument Hankel functions.
    Hankel,
    /// Leading large-argument form d^{−1/2} e^{−λd} e^{iπ/4}.
    Asymptotic,
}

/// Distance below which the law is refused outright.
pub const DEFAULT_MIN_DISTANCE: f64 = 0.5;
/// Lower edge of the validated regime.
pub const VALIDATED_DISTANCE: f64 = 1.7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionLaw {
    pub constants: LawConstants,
    pub lambda: C64,
    pub form: TailForm,
    pub min_distance: f64,
}

impl InteractionLaw {
    pub fn new(constants: LawConstants, lambda: C64, form: TailForm) -> Self {
        InteractionLaw { constants, lambda, form, min_distance: DEFAULT_MIN_DISTANCE }
    }

    /// Radial factors (T(d), P(d)) of the translational and phase terms.
    pub fn kernels(&self, d: f64) -> (C64, C64) {
        kernels(self.lambda, self.form, d)
    }

    /// Contributions of the pair (k, j) to the inner products of k and of j.
    pub fn pair_terms(&self, pk: &Pulse, pj: &Pulse) -> Result<([f64; 3], [f64; 3])> {
        let d = pk.distance(pj);
        if !(d >= self.min_distance) {
            return Err(Error::TooClose { distance: d });
        }
        let (t, p) = self.kernels(d);
        let ex = (pj.x - pk.x) / d;
        let ey = (pj.y - pk.y) / d;
        let rot_k = C64::from_polar(1.0, -(pk.g - pj.g));
        let rot_j = rot_k.conj();
        let tk = (self.constants.c1() * rot_k * t).re;
        let tj = (self.constants.c1() * rot_j * t).re;
        let c2 = self.constants.c2();
        Ok(([tk * ex, tk * ey, (c2 * rot_k * p).re], [-tj * ex, -tj * ey, (c2 * rot_j * p).re]))
    }

    /// Interaction inner products (rx, ry, g) for every pulse.
    pub fn inner_products(&self, pulses: &[Pulse]) -> Result<Vec<[f64; 3]>> {
        let mut out = vec![[0.0; 3]; pulses.len()];
        for k in 0..pulses.len() {
            for j in k + 1..pulses.len() {
                let (a, b) = self.pair_terms(&pulses[k], &pulses[j])?;
                for c in 0..3 {
                    out[k][c] += a[c];
                    out[j][c] += b[c];
                }
            }
        }
        Ok(out)
    }
}

pub fn kernels(lambda: C64, form: TailForm, d: f64) -> (C64, C64) {
    match form {
        TailForm::Asymptotic => {
            let a = (-lambda * d).exp() * C64::from_polar(1.0, FRAC_PI_4) / d.sqrt();
            (a, a)
        }
        TailForm::Hankel => {
            let i = C64::new(0.0, 1.0);
            let norm = (2.0 * i / (PI * lambda)).sqrt();
            let z = lambda * d;
            (hankel1_i(z) / (i * norm), -hankel0_i(z) / norm)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam() -> C64 {
        C64::new(3.9981536787, 1.6472396359)
    }

    #[test]
    fn hankel_kernels_approach_asymptotic_form() {
        for d in [6.0, 12.0, 40.0] {
            let (t, p) = kernels(lam(), TailForm::Hankel, d);
            let (a, _) = kernels(lam(), TailForm::Asymptotic, d);
            let tol = 0.5 / (lam().norm() * d);
            assert!((t / a - 1.0).norm() < tol, "d={d} {}", t / a);
            assert!((p / a - 1.0).norm() < tol, "d={d} {}", p / a);
        }
    }

    #[test]
    fn pair_antisymmetry_and_phase_cosine() {
        let law = InteractionLaw::new(LawConstants { j1: 19.4, kappa1: -0.17, j2: 76.9, kappa2: 0.079 }, lam(), TailForm::Hankel);
        let a = Pulse::new(1.2, 0.0, std::f64::consts::FRAC_PI_2);
        let b = Pulse::new(-1.2, 0.0, 0.0);
        let ip = law.inner_products(&[a, b]).unwrap();
        // In-quadrature phases: equal drift, no relative motion.
        assert!((ip[0][0] - ip[1][0]).abs() < 1e-14 * ip[0][2].abs());
        let a = Pulse::new(1.2, 0.0, 0.4);
        let ip1 = law.inner_products(&[a, b]).unwrap();
        let ip2 = law.inner_products(&[b, a]).unwrap();
        for c in 0..3 {
            assert_eq!(ip1[0][c], ip2[1][c]);
        }
        let a0 = Pulse::new(1.2, 0.0, 0.0);
        let ip0 = law.inner_products(&[a0, b]).unwrap();
        assert!((ip0[0][0] + ip0[1][0]).abs() < 1e-14 * ip0[0][0].abs());
    }

    #[test]
    fn refuses_overlapping_pulses() {
        let law = InteractionLaw::new(LawConstants { j1: 1.0, kappa1: 0.0, j2: 1.0, kappa2: 0.0 }, lam(), TailForm::Asymptotic);
        let r = law.inner_products(&[Pulse::new(0.0, 0.0, 0.0), Pulse::new(0.3, 0.0, 0.0)]);
        assert!(matches!(r, Err(Error::TooClose { .. })));
    }
}
