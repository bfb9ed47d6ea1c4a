//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Everything runs on the projected system with constants fitted once for the
//! reference parameters (Re β = −0.05) and embedded below; only the pulse
//! solve is computed from scratch.

use cglpulse::equilibria::{geometric_guess, newton_fixed_point, Mode, NewtonSettings, SymmetricFamily};
use cglpulse::law::{InteractionLaw, LawConstants, TailForm};
use cglpulse::ode::{integrate, Options, Scheme};
use cglpulse::params::ModelParams;
use cglpulse::pos::{pos_rhs, TwoPulseState, TwoPulseSystem};
use cglpulse::pulse::{solve_steady_pulse, PulseSettings};
use cglpulse::C64;
use wasm_bindgen::prelude::*;

/// λ of the reference parameters.
pub const LAMBDA: C64 = C64::new(3.998153678656601, 1.647239635923936);

/// Large-argument fit, used by the two-pulse system.
pub const ASYMPTOTIC: LawConstants = LawConstants { j1: 19.483346814455242, kappa1: -0.17359926941372333, j2: 76.83208662007583, kappa2: 0.0783685999096859 };

/// Full-Hankel fit, used by the N-pulse runs.
pub const HANKEL: LawConstants = LawConstants { j1: 18.820836190690528, kappa1: -0.16004404181076476, j2: 77.72325672173221, kappa2: 0.07384087943990018 };

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Steady pulse for one value of Re β.
#[wasm_bindgen]
pub struct PulseView {
    beta_imag: f64,
    lambda: [f64; 2],
    r: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[wasm_bindgen]
impl PulseView {
    #[wasm_bindgen(getter)]
    pub fn beta_imag(&self) -> f64 {
        self.beta_imag
    }

    #[wasm_bindgen(getter)]
    pub fn lambda_re(&self) -> f64 {
        self.lambda[0]
    }

    #[wasm_bindgen(getter)]
    pub fn lambda_im(&self) -> f64 {
        self.lambda[1]
    }

    pub fn r(&self) -> Vec<f64> {
        self.r.clone()
    }

    pub fn re(&self) -> Vec<f64> {
        self.re.clone()
    }

    pub fn im(&self) -> Vec<f64> {
        self.im.clone()
    }
}

/// Solve for the pulse at Re β = `beta_re`, starting Newton from Im β = `beta_im_guess`.
#[wasm_bindgen]
pub fn solve_pulse(beta_re: f64, beta_im_guess: f64, n_colloc: usize) -> Result<PulseView, JsError> {
    let params = ModelParams::parameters1();
    let params = ModelParams { beta: C64::new(beta_re, beta_im_guess), ..params };
    let settings = PulseSettings { n_colloc, ..Default::default() };
    let sol = solve_steady_pulse(&params, &settings, None).map_err(err)?;
    // Nodes run from the far field to the centre; reverse for plotting.
    let mut pts: Vec<(f64, C64)> = sol.profile.nodes.iter().copied().zip(sol.profile.values.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PulseView {
        beta_imag: sol.beta_imag(),
        lambda: [sol.dispersion.lambda.re, sol.dispersion.lambda.im],
        r: pts.iter().map(|p| p.0).collect(),
        re: pts.iter().map(|p| p.1.re).collect(),
        im: pts.iter().map(|p| p.1.im).collect(),
    })
}

fn system() -> TwoPulseSystem {
    TwoPulseSystem::new(ASYMPTOTIC, LAMBDA)
}

/// Centre of two-pulse cell `n` (1-based).
#[wasm_bindgen]
pub fn cell_centre(n: usize) -> f64 {
    system().equilibria(n.max(1)).0[n.max(1) - 1]
}

/// Orbit of the reduced two-pulse system from (r̄₀, ḡ₀), flattened as
/// [r̄cosḡ, r̄sinḡ, ...] and sampled every `dt` up to `t_end`.
///
/// Stops early when the pulses come within the interaction floor.
#[wasm_bindgen]
pub fn two_pulse_orbit(rbar0: f64, gbar0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let sys = system();
    let mut opts = Options::new(Scheme::adaptive(1e-9), t_end);
    opts.sample_dt = Some(dt);
    let sol = integrate(sys.as_ode(), 0.0, &[rbar0, gbar0], opts);
    sol.trajectory.y.iter().flat_map(|y| [y[0] * y[1].cos(), y[0] * y[1].sin()]).collect()
}

/// Value of the conserved quantity at (r̄, ḡ); NaN outside its domain.
#[wasm_bindgen]
pub fn hamiltonian(rbar: f64, gbar: f64) -> f64 {
    system().hamiltonian(TwoPulseState { rbar, gbar }).unwrap_or(f64::NAN)
}

/// Stable symmetric state of `n` pulses (3..=5) as a flat slow state.
#[wasm_bindgen]
pub fn fixed_point(n: usize) -> Result<Vec<f64>, JsError> {
    let fam = SymmetricFamily::new(n).map_err(err)?;
    let law = InteractionLaw::new(HANKEL, LAMBDA, TailForm::Hankel);
    let rec = newton_fixed_point(fam, Mode::Pos, &geometric_guess(n).map_err(err)?, |s| pos_rhs(&law, s), &NewtonSettings::default()).map_err(err)?;
    Ok(fam.expand(&rec.values))
}

/// Projected N-pulse run from a flat state (x₁, y₁, g₁, ...), sampled every `dt`.
///
/// Returns the samples back to back, 3N values each; a run that brings two
/// pulses together ends at the last sample before contact.
#[wasm_bindgen]
pub fn n_pulse_run(state: Vec<f64>, t_end: f64, dt: f64) -> Result<Vec<f64>, JsError> {
    if state.is_empty() || state.len() % 3 != 0 {
        return Err(JsError::new("state length must be a positive multiple of 3"));
    }
    let law = InteractionLaw::new(HANKEL, LAMBDA, TailForm::Hankel);
    let mut opts = Options::new(Scheme::adaptive(1e-9), t_end);
    opts.sample_dt = Some(dt);
    let sol = integrate(|_, y| pos_rhs(&law, y), 0.0, &state, opts);
    Ok(sol.trajectory.y.concat())
}

/// Two-pulse start on the x-axis, as a flat slow state.
#[wasm_bindgen]
pub fn two_pulse_start(rbar: f64, gbar: f64) -> Vec<f64> {
    cglpulse::pos::two_pulse_state(rbar, gbar).to_vec()
}
