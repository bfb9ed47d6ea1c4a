//! Modified Bessel functions K₀, K₁ and Hankel functions on the imaginary-rotated axis.
//!
//! For Re z > 0 the Hankel functions of the pulse tails satisfy
//! H₀(iz) = (2/(πi))K₀(z) and H₁(iz) = −(2/π)K₁(z).

use crate::C64;
use std::f64::consts::{FRAC_PI_2, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// K₀(z) for Re z > 0.
pub fn bessel_k0(z: C64) -> C64 {
    if z.norm() <= 2.0 {
        k_series(z).0
    } else {
        k_integral(z, 0.0)
    }
}

/// K₁(z) for Re z > 0.
pub fn bessel_k1(z: C64) -> C64 {
    if z.norm() <= 2.0 {
        k_series(z).1
    } else {
        k_integral(z, 1.0)
    }
}

/// H₀⁽¹⁾(iz) for Re z > 0.
pub fn hankel0_i(z: C64) -> C64 {
    bessel_k0(z) * C64::new(0.0, -2.0 / PI)
}

/// H₁⁽¹⁾(iz) for Re z > 0.
pub fn hankel1_i(z: C64) -> C64 {
    bessel_k1(z) * (-2.0 / PI)
}

/// Ascending series, accurate for |z| ≤ 2.
fn k_series(z: C64) -> (C64, C64) {
    let t = z * z * 0.25;
    let log_half = (z * 0.5).ln();
    let mut i0 = C64::new(0.0, 0.0);
    let mut i1s = C64::new(0.0, 0.0);
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = C64::new(0.0, 0.0);
    // term0 = t^k/(k!)², term1 = t^k/(k!(k+1)!)
    let mut term0 = C64::new(1.0, 0.0);
    let mut term1 = C64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    for k in 0..40 {
        let kf = k as f64;
        if k > 0 {
            term0 = term0 * t / (kf * kf);
            term1 = term1 * t / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        let harmonic_next = harmonic + 1.0 / (kf + 1.0);
        i0 += term0;
        i1s += term1;
        s0 += term0 * harmonic;
        s1 += term1 * (harmonic + harmonic_next - 2.0 * EULER_GAMMA);
        if term0.norm() < 1e-18 * i0.norm() && k > 2 {
            break;
        }
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let i1 = z * 0.5 * i1s;
    let k1 = z.inv() + log_half * i1 - z * 0.25 * s1;
    (k0, k1)
}

/// Trapezoidal rule on K_ν(z) = e^{−z}∫₀^∞ e^{−z(cosh t − 1)} cosh(νt) dt.
///
/// The step is set from the half-width of the strip in which the integrand
/// stays analytic and bounded, which gives geometric convergence.
fn k_integral(z: C64, nu: f64) -> C64 {
    let arg = z.arg().abs();
    let strip = (FRAC_PI_2 - arg).max(0.02);
    let growth_cap = (1.0 - 5.0 / z.re).max(-1.0).acos();
    let b = strip.min(growth_cap);
    let h = b / 7.0;
    let mut acc = C64::new(0.5, 0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let decay = z.re * (t.cosh() - 1.0) - nu * t;
        let term = (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
        acc += term;
        if decay > 60.0 {
            break;
        }
        k += 1;
    }
    (-z).exp() * acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    // (re z, im z, K₀(z), K₁(z)) from a 30-digit reference evaluation.
    const TABLE: [(f64, f64, (f64, f64), (f64, f64)); 9] = [
        (0.1, 0.05, (2.3143029547026734, -0.4562403451086413), (7.847966253608484, -4.0472898177488785)),
        (0.7, -0.3, (0.5711581387160475, 0.2894436543407019), (0.8093895731567321, 0.5486268275808358)),
        (1.9, 0.4, (0.11238000832948605, -0.06058738024277606), (0.13553796697469678, -0.07958454435675691)),
        (2.5, 1.0, (0.02315533261499921, -0.05573836022918723), (0.023525779977987146, -0.06618294677839555)),
        (3.99815, 1.64724, (-0.002801596198642792, -0.010420184040362216), (-0.0035100761217087603, -0.01137740913206208)),
        (11.9944, 4.9417, (8.716381600799034e-07, 1.945138386376378e-06), (9.298927822909334e-07, 2.001091741109411e-06)),
        (40.0, 16.5, (-4.45271050800647e-19, 6.734108847201325e-19), (-4.470701835509398e-19, 6.825147220227329e-19)),
        (5.0, 4.5, (0.00045713439923814584, 0.003179378837171509), (0.0006325064026255173, 0.003331961009585998)),
        (3.764, 1.169, (0.0036470338701982473, -0.013768385343999521), (0.0035978140382675865, -0.015483850576940086)),
    ];

    #[test]
    fn matches_reference_values() {
        for &(re, im, k0, k1) in TABLE.iter() {
            let z = C64::new(re, im);
            let e0 = C64::new(k0.0, k0.1);
            let e1 = C64::new(k1.0, k1.1);
            let r0 = (bessel_k0(z) - e0).norm() / e0.norm();
            let r1 = (bessel_k1(z) - e1).norm() / e1.norm();
            assert!(r0 < 1e-12, "K0({z}) rel err {r0:e}");
            assert!(r1 < 1e-12, "K1({z}) rel err {r1:e}");
        }
    }

    #[test]
    fn series_and_integral_agree_at_switchover() {
        for &(re, im) in &[(1.9, 0.6), (1.2, 1.5), (2.0, 0.0)] {
            let z = C64::new(re, im);
            let (s0, s1) = k_series(z);
            assert!((s0 - k_integral(z, 0.0)).norm() < 1e-13 * s0.norm());
            assert!((s1 - k_integral(z, 1.0)).norm() < 1e-13 * s1.norm());
        }
    }

    #[test]
    fn hankel_large_argument_form() {
        // H₀(iλd) ≈ −i √(2/(πλd)) e^{−λd}
        let lam = C64::new(3.99815, 1.64724);
        let d = 12.0;
        let exact = hankel0_i(lam * d);
        let approx = C64::new(0.0, -1.0) * (2.0 / (PI * lam * d)).sqrt() * (-lam * d).exp();
        assert!((exact - approx).norm() < 0.01 * exact.norm());
    }
}
