mod common;

use cglpulse::ode::{integrate, Options, Scheme};
use cglpulse::pos::{TwoPulseState, TwoPulseSystem};
use common::{ASYMPTOTIC, LAMBDA};
use proptest::prelude::*;
use std::f64::consts::PI;

fn system() -> TwoPulseSystem {
    TwoPulseSystem::new(ASYMPTOTIC, LAMBDA)
}

#[test]
fn cell_centres_follow_the_phase_condition() {
    let (centres, saddles) = system().equilibria(3);
    for (n, c) in centres.iter().enumerate() {
        let want = (ASYMPTOTIC.kappa2 + PI / 4.0 + PI * (n + 1) as f64) / LAMBDA.im;
        assert!((c - want).abs() < 1e-12, "cell {n}: {c} vs {want}");
    }
    assert!((centres[0] - 2.432).abs() < 0.01);
    for (s, c) in saddles.iter().zip(&centres) {
        assert!(*s < *c);
    }
}

#[test]
fn closed_orbit_from_the_reference_start() {
    let rec = system().return_map(2.56, Scheme::adaptive(1e-10), 1e5).unwrap();
    assert!((rec.period - 1835.9207036663856).abs() < 1e-4, "{rec:?}");
    assert!((rec.half_time.unwrap() - 917.9603518154763).abs() < 1e-4);
    assert!(rec.pi.abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hamiltonian_is_conserved_along_orbits(r0 in 2.45f64..3.1, g0 in 0.3f64..2.8) {
        let sys = system();
        let h0 = sys.hamiltonian(TwoPulseState { rbar: r0, gbar: g0 }).unwrap();
        let mut opts = Options::new(Scheme::adaptive(1e-11), 2000.0);
        opts.sample_dt = Some(20.0);
        let sol = integrate(sys.as_ode(), 0.0, &[r0, g0], opts);
        prop_assert_eq!(sol.trajectory.t.len(), 101);
        for y in &sol.trajectory.y {
            let h = sys.hamiltonian(TwoPulseState { rbar: y[0], gbar: y[1] }).unwrap();
            prop_assert!(((h - h0) / h0).abs() <= 1e-6, "H {h} vs {h0}");
        }
    }
}
