//! Versioned JSON records: pulse archives and interaction-constant files.

use crate::cheb::ChebGrid;
use crate::fit::InteractionConstants;
use crate::modes::{solve_eigenmode, ModeSet};
use crate::params::{Dispersion, ModelParams};
use crate::pulse::{PulseSettings, PulseSolution, RadialProfile};
use crate::tails::TailCoefficients;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const ARCHIVE_VERSION: u32 = 1;
pub const PULSE_KIND: &str = "cglpulse.pulse-archive";
pub const CONSTANTS_KIND: &str = "cglpulse.interaction-constants";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub m: u32,
    pub adjoint: bool,
    pub smallest_singular_value: f64,
    pub next_singular_value: f64,
    pub operator_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub profile_residual: f64,
    pub origin_residual: f64,
    pub robin_residual: f64,
    pub newton_iterations: usize,
    pub modes: Vec<ModeReport>,
    pub normalization_residual: f64,
}

/// Steady pulse, its neutral modes and tail coefficients on the collocation grid.
///
/// Radial profiles only: the translation modes are φ₁(r)(cosθ, sinθ) and
/// ψ₁(r)(cosθ, sinθ), the phase modes φ₀(r) = iV and ψ₀(r).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseArchive {
    pub kind: String,
    pub version: u32,
    pub params: ModelParams,
    pub lambda: C64,
    pub settings: PulseSettings,
    pub nodes: Vec<f64>,
    pub v: Vec<C64>,
    pub phi_g: Vec<C64>,
    pub phi_r: Vec<C64>,
    pub psi_g: Vec<C64>,
    pub psi_r: Vec<C64>,
    pub pairings: [[f64; 3]; 3],
    pub tails: Option<TailCoefficients>,
    pub residuals: ResidualReport,
}

impl PulseArchive {
    pub fn build(sol: &PulseSolution, settings: &PulseSettings, modes: &ModeSet, tails: Option<TailCoefficients>) -> Result<Self> {
        let mut reports = Vec::new();
        for m in 0..2 {
            for adjoint in [false, true] {
                let e = solve_eigenmode(sol, m, adjoint)?;
                reports.push(ModeReport {
                    m,
                    adjoint,
                    smallest_singular_value: e.singular_values.0,
                    next_singular_value: e.singular_values.1,
                    operator_residual: e.operator_residual,
                });
            }
        }
        Ok(PulseArchive {
            kind: PULSE_KIND.into(),
            version: ARCHIVE_VERSION,
            params: sol.params,
            lambda: sol.dispersion.lambda,
            settings: settings.clone(),
            nodes: sol.grid.r.clone(),
            v: modes.v.clone(),
            phi_g: modes.phi_g(),
            phi_r: modes.phi_r(),
            psi_g: modes.psi_g.clone(),
            psi_r: modes.psi_r.clone(),
            pairings: modes.pairings,
            tails,
            residuals: ResidualReport {
                profile_residual: sol.profile.residual_norm,
                origin_residual: sol.profile.origin_residual,
                robin_residual: sol.profile.robin_residual,
                newton_iterations: sol.iterations,
                modes: reports,
                normalization_residual: modes.normalization_residual,
            },
        })
    }

    fn grid(&self) -> Result<ChebGrid> {
        let n = self.nodes.len().checked_sub(1).filter(|n| *n >= 4).ok_or_else(|| Error::Invalid("archive grid too small".into()))?;
        let grid = ChebGrid::new(n, self.settings.length);
        let drift = grid.r.iter().zip(&self.nodes).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if drift > 1e-12 * self.settings.length {
            return Err(Error::Invalid("archive nodes do not match the collocation grid".into()));
        }
        Ok(grid)
    }

    pub fn solution(&self) -> Result<PulseSolution> {
        let grid = self.grid()?;
        Ok(PulseSolution {
            params: self.params,
            dispersion: Dispersion { lambda: self.lambda },
            profile: RadialProfile {
                length: self.settings.length,
                nodes: self.nodes.clone(),
                values: self.v.clone(),
                interpolation_order: self.nodes.len() - 1,
                residual_norm: self.residuals.profile_residual,
                origin_residual: self.residuals.origin_residual,
                robin_residual: self.residuals.robin_residual,
            },
            grid,
            iterations: self.residuals.newton_iterations,
        })
    }

    pub fn modes(&self) -> Result<ModeSet> {
        let grid = self.grid()?;
        let dv = self.phi_r.iter().map(|z| -z).collect();
        Ok(ModeSet {
            grid,
            v: self.v.clone(),
            dv,
            psi_g: self.psi_g.clone(),
            psi_r: self.psi_r.clone(),
            pairings: self.pairings,
            normalization_residual: self.residuals.normalization_residual,
        })
    }
}

/// Fitted interaction law with provenance of the pulse it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub kind: String,
    pub version: u32,
    pub params: ModelParams,
    pub constants: InteractionConstants,
    pub tails: Option<TailCoefficients>,
}

impl ConstantsFile {
    pub fn new(params: ModelParams, constants: InteractionConstants, tails: Option<TailCoefficients>) -> Self {
        ConstantsFile { kind: CONSTANTS_KIND.into(), version: ARCHIVE_VERSION, params, constants, tails }
    }
}

fn check_header(kind: &str, version: u32, expected: &str) -> Result<()> {
    if kind != expected {
        return Err(Error::Invalid(format!("expected a {expected} record, found {kind}")));
    }
    if version != ARCHIVE_VERSION {
        return Err(Error::Invalid(format!("unsupported record version {version}")));
    }
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn pulse_from_json(s: &str) -> Result<PulseArchive> {
    let a: PulseArchive = serde_json::from_str(s).map_err(|e| Error::Invalid(format!("pulse archive: {e}")))?;
    check_header(&a.kind, a.version, PULSE_KIND)?;
    Ok(a)
}

pub fn constants_from_json(s: &str) -> Result<ConstantsFile> {
    let c: ConstantsFile = serde_json::from_str(s).map_err(|e| Error::Invalid(format!("constants file: {e}")))?;
    check_header(&c.kind, c.version, CONSTANTS_KIND)?;
    Ok(c)
}

/// Write through a temporary sibling and rename, so readers never see partial files.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("{}.partial", path.extension().and_then(|e| e.to_str()).unwrap_or("tmp")));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
