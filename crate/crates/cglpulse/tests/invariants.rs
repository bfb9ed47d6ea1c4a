mod common;

use cglpulse::grid::boole_weights;
use cglpulse::kernel::Pulse;
use cglpulse::pos::pos_rhs;
use proptest::prelude::*;

fn state(p: &[Pulse]) -> Vec<f64> {
    p.iter().flat_map(|q| [q.x, q.y, q.g]).collect()
}

/// Three pulses at least 2 apart, on the rim of well separated sectors.
fn config() -> impl Strategy<Value = Vec<Pulse>> {
    prop::collection::vec((1.8f64..2.6, -0.3f64..0.3, -3.2f64..3.2), 3).prop_map(|v| {
        v.iter()
            .enumerate()
            .map(|(k, &(r, da, g))| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0 + da;
                Pulse::new(r * a.cos(), r * a.sin(), g)
            })
            .collect()
    })
}

fn close(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * scale)
}

proptest! {
    #[test]
    fn velocities_ignore_translation_and_global_phase(p in config(), dx in -5.0f64..5.0, dy in -5.0f64..5.0, dg in -3.0f64..3.0) {
        let law = common::hankel_law();
        let base = pos_rhs(&law, &state(&p)).unwrap();
        let moved: Vec<Pulse> = p.iter().map(|q| Pulse::new(q.x + dx, q.y + dy, q.g + dg)).collect();
        prop_assert!(close(&base, &pos_rhs(&law, &state(&moved)).unwrap()));
    }

    #[test]
    fn velocities_rotate_with_the_configuration(p in config(), th in -3.2f64..3.2) {
        let law = common::asymptotic_law();
        let base = pos_rhs(&law, &state(&p)).unwrap();
        let (s, c) = th.sin_cos();
        let turned: Vec<Pulse> = p.iter().map(|q| Pulse::new(c * q.x - s * q.y, s * q.x + c * q.y, q.g)).collect();
        let got = pos_rhs(&law, &state(&turned)).unwrap();
        let want: Vec<f64> = base.chunks(3).flat_map(|v| [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]).collect();
        prop_assert!(close(&want, &got));
    }

    #[test]
    fn velocities_follow_relabelling(p in config()) {
        let law = common::hankel_law();
        let base = pos_rhs(&law, &state(&p)).unwrap();
        let perm = [2usize, 0, 1];
        let q: Vec<Pulse> = perm.iter().map(|&k| p[k]).collect();
        let got = pos_rhs(&law, &state(&q)).unwrap();
        for (slot, &k) in perm.iter().enumerate() {
            prop_assert!(close(&base[3 * k..3 * k + 3], &got[3 * slot..3 * slot + 3]));
        }
    }

    #[test]
    fn boole_rule_is_exact_for_quintics(c in prop::collection::vec(-2.0f64..2.0, 6), a in -3.0f64..3.0, panels in 1usize..12, h in 0.01f64..0.3) {
        let n = 4 * panels + 1;
        let w = boole_weights(n, h).unwrap();
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let got: f64 = w.iter().enumerate().map(|(i, wi)| wi * f(a + i as f64 * h)).sum();
        let b = a + (n - 1) as f64 * h;
        let prim = |x: f64| c.iter().enumerate().map(|(k, ck)| ck * x.powi(k as i32 + 1) / (k + 1) as f64).sum::<f64>();
        let want = prim(b) - prim(a);
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
    }
}
