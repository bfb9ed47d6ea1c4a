use cglpulse_web::*;
use std::f64::consts::PI;

#[test]
fn first_cell_centre() {
    let want = (ASYMPTOTIC.kappa2 + 1.25 * PI) / LAMBDA.im;
    assert!((cell_centre(1) - want).abs() < 1e-12);
}

#[test]
fn orbits_stay_on_a_level_set() {
    let xy = two_pulse_orbit(2.8, PI / 2.0, 2000.0, 10.0);
    assert_eq!(xy.len(), 2 * 201);
    let h0 = hamiltonian(2.8, PI / 2.0);
    for p in xy.chunks(2) {
        let h = hamiltonian(p[0].hypot(p[1]), p[1].atan2(p[0]));
        assert!(((h - h0) / h0).abs() < 1e-6);
    }
}

#[test]
fn equilibrium_run_stays_put() {
    let s = fixed_point(3).unwrap();
    assert_eq!(s.len(), 9);
    assert_eq!(&s[6..], &[2.0, 0.0, 0.0]);
    let flat = n_pulse_run(s.clone(), 1000.0, 100.0).unwrap();
    assert_eq!(flat.len(), 11 * 9);
    let last = &flat[flat.len() - 9..];
    // Rigid drift: differences to the last pulse are unchanged.
    for k in 0..2 {
        for c in 0..3 {
            let d0 = s[3 * k + c] - s[6 + c];
            let d1 = last[3 * k + c] - last[6 + c];
            assert!((d0 - d1).abs() < 1e-6);
        }
    }
}

#[test]
fn pulse_solve_matches_reference() {
    let p = solve_pulse(-0.05, -13.2, 128).unwrap();
    assert!((p.beta_imag() + 13.2218).abs() < 1e-3);
    assert!((p.lambda_re() - LAMBDA.re).abs() < 1e-3);
    let r = p.r();
    assert!(r.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(r.len(), p.re().len());
}

#[test]
fn two_pulse_start_layout() {
    let s = two_pulse_start(2.5, 1.0);
    assert_eq!(s.len(), 6);
    assert!((s[0] - s[3] - 2.5).abs() < 1e-15);
    assert!((s[2] - s[5] - 1.0).abs() < 1e-15);
}
