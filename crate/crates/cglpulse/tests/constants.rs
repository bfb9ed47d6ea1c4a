mod common;

use cglpulse::fit::kernel_table;
use cglpulse::law::LawConstants;
use cglpulse::params::ModelParams;
use common::{rel, Reference, ASYMPTOTIC, HANKEL};

fn assert_close(got: &LawConstants, want: &LawConstants, tol: f64) {
    for (g, w) in [(got.j1, want.j1), (got.kappa1, want.kappa1), (got.j2, want.j2), (got.kappa2, want.kappa2)] {
        assert!(rel(g, w) < tol, "got {got:?}, want {want:?}");
    }
}

#[test]
fn reference_fit_and_kernel_table() {
    let r = Reference::solve(ModelParams::parameters1());
    let c = r.constants();
    assert_close(&c.asymptotic.constants, &ASYMPTOTIC, 1e-6);
    assert_close(&c.hankel.constants, &HANKEL, 1e-6);
    assert!(c.asymptotic.residual_translation < 0.01 && c.asymptotic.residual_phase < 0.01);

    let b = c.b.unwrap();
    assert!((b.re - 0.280245).abs() < 1e-5 && (b.im + 0.119935).abs() < 1e-5, "{b}");
    // The tail-amplitude formula is an independent route to J₂e^{iκ₂}.
    assert!(c.analytic_mismatch().unwrap() < 1e-3);

    let law = c.law(cglpulse::law::TailForm::Hankel);
    let rows = kernel_table(&r.sol.params, &r.tables, &law, &[1.7, 3.0, 4.2], 0.025).unwrap();
    assert!(rows[0].relative_error() < 0.05, "{:?}", rows[0]);
    for row in &rows[1..] {
        assert!(row.relative_error() < 0.01, "{row:?}");
    }
}
