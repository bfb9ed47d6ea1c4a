mod common;

use cglpulse::params::ModelParams;
use cglpulse::tails::analytic_phase_constant;
use cglpulse::C64;
use common::{Reference, BETA_I, LAMBDA};

/// Principal square root through the polar form, with the decaying branch picked.
fn decay_rate_oracle(alpha: C64, beta: C64) -> C64 {
    let z = -beta / alpha;
    let (r, th) = (z.re.hypot(z.im), z.im.atan2(z.re));
    let w = C64::new(r.sqrt() * (0.5 * th).cos(), r.sqrt() * (0.5 * th).sin());
    if w.re > 0.0 {
        w
    } else {
        -w
    }
}

#[test]
fn reference_pulse_and_modes() {
    let r = Reference::solve(ModelParams::parameters1());
    assert!((r.sol.beta_imag() - BETA_I).abs() < 1e-8, "{}", r.sol.beta_imag());
    assert!(r.sol.profile.residual_norm < 1e-9);
    assert!(r.sol.profile.values[0].im.abs() < 1e-12);

    let oracle = decay_rate_oracle(r.sol.params.alpha, r.sol.params.beta);
    assert!((r.sol.dispersion.lambda - oracle).norm() < 1e-12);
    assert!((r.sol.dispersion.lambda - LAMBDA).norm() < 1e-8);
    let p = r.sol.params;
    assert!((p.alpha * oracle * oracle + p.beta).norm() < 1e-12);

    assert!(r.modes.normalization_residual < 1e-8);
    for a in 0..3 {
        for b in 0..3 {
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((r.modes.pairings[a][b] - want).abs() < 1e-8, "pairing {a}{b} = {}", r.modes.pairings[a][b]);
        }
    }
    for fit in [&r.tails.p, &r.tails.s, &r.tails.q1] {
        assert!(fit.residual < 1e-3, "{fit:?}");
    }
    let c2 = analytic_phase_constant(p.alpha, r.sol.dispersion.lambda, r.tails.p.amplitude, r.tails.s.amplitude);
    assert!((c2.norm() - 77.72).abs() < 0.1, "{c2}");
}

#[test]
fn second_reference_pulse() {
    let r = cglpulse::pulse::solve_steady_pulse(&ModelParams::parameters2(), &Default::default(), None).unwrap();
    assert!((r.beta_imag() + 10.819205945863775).abs() < 1e-8, "{}", r.beta_imag());
    let oracle = decay_rate_oracle(r.params.alpha, r.params.beta);
    assert!((r.dispersion.lambda - oracle).norm() < 1e-12);
}

#[test]
fn decay_rate_branch_is_independent_of_sign_conventions() {
    for (br, bi) in [(-0.05, -13.2), (-2.0, -10.8), (-1.0, 3.0), (0.3, -0.1)] {
        let p = ModelParams::parameters1();
        let p = ModelParams { beta: C64::new(br, bi), ..p };
        match p.dispersion() {
            Ok(d) => {
                let o = decay_rate_oracle(p.alpha, p.beta);
                assert!((d.lambda - o).norm() < 1e-12 * o.norm());
                assert!(d.lambda.re > 0.0);
            }
            Err(e) => panic!("({br}, {bi}): {e}"),
        }
    }
}
