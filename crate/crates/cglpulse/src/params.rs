//! Model coefficients and the tail decay rate.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Coefficients of u_t = α∇²u + βu + γ|u|²u + δ|u|⁴u.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl ModelParams {
    /// Reference set with Re β = −0.05; Im β is refined by the pulse solve.
    pub fn parameters1() -> Self {
        Self::reference(-0.05, -13.2)
    }

    /// Reference set with Re β = −2.0; Im β is refined by the pulse solve.
    pub fn parameters2() -> Self {
        Self::reference(-2.0, -10.8)
    }

    fn reference(beta_r: f64, beta_i: f64) -> Self {
        ModelParams {
            alpha: C64::new(0.5, 0.5),
            beta: C64::new(beta_r, beta_i),
            gamma: C64::new(1.8, 1.0),
            delta: C64::new(-0.05, 0.05),
        }
    }

    pub fn with_beta_imag(mut self, beta_i: f64) -> Self {
        self.beta.im = beta_i;
        self
    }

    /// ζ(s) with f(u) = ζ(|u|²)u.
    #[inline]
    pub fn zeta(&self, s: f64) -> C64 {
        self.gamma * s + self.delta * (s * s)
    }

    /// ζ'(s).
    #[inline]
    pub fn dzeta(&self, s: f64) -> C64 {
        self.gamma + self.delta * (2.0 * s)
    }

    /// f(u) = γ|u|²u + δ|u|⁴u.
    #[inline]
    pub fn nonlinearity(&self, u: C64) -> C64 {
        self.zeta(u.norm_sqr()) * u
    }

    /// Coefficients (a, b) of the real-linear derivative f'(u)z = a z + b z̄.
    #[inline]
    pub fn linearization(&self, u: C64) -> (C64, C64) {
        let s = u.norm_sqr();
        let dz = self.dzeta(s);
        (self.zeta(s) + dz * s, dz * u * u)
    }

    pub fn dispersion(&self) -> Result<Dispersion> {
        dispersion_lambda(self)
    }
}

/// Complex decay rate λ of the linear tail, αλ² + β = 0 with Re λ > 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub lambda: C64,
}

impl Dispersion {
    /// ε = e^{−λ_r d}.
    pub fn epsilon_of(&self, d: f64) -> f64 {
        (-self.lambda.re * d).exp()
    }

    pub fn lambda_r(&self) -> f64 {
        self.lambda.re
    }

    pub fn lambda_i(&self) -> f64 {
        self.lambda.im
    }
}

pub fn dispersion_lambda(params: &ModelParams) -> Result<Dispersion> {
    if params.alpha.norm() == 0.0 {
        return Err(Error::Invalid("alpha must be non-zero".into()));
    }
    let root = (-params.beta / params.alpha).sqrt();
    let lambda = if root.re > 0.0 {
        root
    } else if root.re < 0.0 {
        -root
    } else {
        return Err(Error::NoDecayingRoot);
    };
    Ok(Dispersion { lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_root() {
        let p = ModelParams {
            alpha: C64::new(1.0, 0.0),
            beta: C64::new(-1.0, 0.0),
            gamma: C64::new(0.0, 0.0),
            delta: C64::new(0.0, 0.0),
        };
        let d = dispersion_lambda(&p).unwrap();
        assert!((d.lambda - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn purely_oscillatory_has_no_decaying_root() {
        let p = ModelParams {
            alpha: C64::new(1.0, 0.0),
            beta: C64::new(1.0, 0.0),
            gamma: C64::new(0.0, 0.0),
            delta: C64::new(0.0, 0.0),
        };
        assert_eq!(dispersion_lambda(&p), Err(Error::NoDecayingRoot));
    }

    #[test]
    fn linearization_matches_directional_derivative() {
        let p = ModelParams::parameters1();
        let u = C64::new(1.3, -0.4);
        let z = C64::new(0.2, 0.7);
        let h = 1e-6;
        let fd = (p.nonlinearity(u + z * h) - p.nonlinearity(u - z * h)) / (2.0 * h);
        let (a, b) = p.linearization(u);
        assert!((fd - (a * z + b * z.conj())).norm() < 1e-8);
    }
}
