#![allow(dead_code)]

use cglpulse::fit::{fit_interaction_constants, FitSettings, InteractionConstants};
use cglpulse::law::{InteractionLaw, LawConstants, TailForm};
use cglpulse::modes::{compute_modes, ModeSet};
use cglpulse::params::ModelParams;
use cglpulse::pulse::{solve_steady_pulse, PulseSettings, PulseSolution};
use cglpulse::radial::{PulseTables, DEFAULT_SAMPLES};
use cglpulse::tails::{fit_tail_coefficients, TailCoefficients, TailWindow};
use cglpulse::C64;

/// Frozen outputs of the reference (Re β = −0.05) pulse and constant fit.
pub const BETA_I: f64 = -13.22183441999649;
pub const LAMBDA: C64 = C64::new(3.998153678656601, 1.647239635923936);
pub const ASYMPTOTIC: LawConstants = LawConstants { j1: 19.483346814455242, kappa1: -0.17359926941372333, j2: 76.83208662007583, kappa2: 0.0783685999096859 };
pub const HANKEL: LawConstants = LawConstants { j1: 18.820836190690528, kappa1: -0.16004404181076476, j2: 77.72325672173221, kappa2: 0.07384087943990018 };

pub fn hankel_law() -> InteractionLaw {
    InteractionLaw::new(HANKEL, LAMBDA, TailForm::Hankel)
}

pub fn asymptotic_law() -> InteractionLaw {
    InteractionLaw::new(ASYMPTOTIC, LAMBDA, TailForm::Asymptotic)
}

pub struct Reference {
    pub sol: PulseSolution,
    pub modes: ModeSet,
    pub tails: TailCoefficients,
    pub tables: PulseTables,
}

impl Reference {
    pub fn solve(params: ModelParams) -> Self {
        let sol = solve_steady_pulse(&params, &PulseSettings::default(), None).expect("pulse solve");
        let modes = compute_modes(&sol).expect("neutral modes");
        let tails = fit_tail_coefficients(&modes, &sol.dispersion, TailWindow::default()).expect("tail fit");
        let tables = PulseTables::new(&modes, DEFAULT_SAMPLES);
        Reference { sol, modes, tails, tables }
    }

    pub fn constants(&self) -> InteractionConstants {
        fit_interaction_constants(&self.sol.params, &self.tables, &self.sol.dispersion, Some(&self.tails), &FitSettings::default()).expect("constant fit")
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
