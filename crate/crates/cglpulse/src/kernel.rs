//! Pulse configurations, shifted fields on a Cartesian grid and direct
//! quadrature of the interaction inner products.

use crate::grid::{GridSpec, Quadrature};
use crate::params::ModelParams;
use crate::radial::PulseTables;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Wrap a phase into (−π, π].
pub fn wrap_phase(g: f64) -> f64 {
    let w = g - 2.0 * PI * ((g + PI) / (2.0 * PI)).floor();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub x: f64,
    pub y: f64,
    pub g: f64,
}

impl Pulse {
    pub fn new(x: f64, y: f64, g: f64) -> Self {
        Pulse { x, y, g }
    }

    pub fn distance(&self, other: &Pulse) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// N pulses with positions and phases. Phases are kept wrapped to (−π, π].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseConfiguration {
    pub pulses: Vec<Pulse>,
}

impl PulseConfiguration {
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        let pulses: Vec<Pulse> = pulses.into_iter().map(|p| Pulse { g: wrap_phase(p.g), ..p }).collect();
        if pulses.iter().any(|p| !(p.x.is_finite() && p.y.is_finite() && p.g.is_finite())) {
            return Err(Error::Invalid("non-finite pulse coordinate".into()));
        }
        let cfg = PulseConfiguration { pulses };
        if cfg.len() > 1 && cfg.min_separation() <= 0.0 {
            return Err(Error::TooClose { distance: 0.0 });
        }
        Ok(cfg)
    }

    /// From a slow state (x₁, y₁, g₁, ..., x_N, y_N, g_N).
    pub fn from_state(state: &[f64]) -> Result<Self> {
        if state.len() % 3 != 0 || state.is_empty() {
            return Err(Error::Invalid(format!("state length {} is not a positive multiple of 3", state.len())));
        }
        Self::new(state.chunks(3).map(|c| Pulse::new(c[0], c[1], c[2])).collect())
    }

    pub fn state(&self) -> Vec<f64> {
        self.pulses.iter().flat_map(|p| [p.x, p.y, p.g]).collect()
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn min_separation(&self) -> f64 {
        min_separation(&self.pulses)
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.len() as f64;
        [self.pulses.iter().map(|p| p.x).sum::<f64>() / n, self.pulses.iter().map(|p| p.y).sum::<f64>() / n]
    }
}

pub fn min_separation(pulses: &[Pulse]) -> f64 {
    let mut d = f64::INFINITY;
    for j in 0..pulses.len() {
        for k in j + 1..pulses.len() {
            d = d.min(pulses[j].distance(&pulses[k]));
        }
    }
    d
}

/// Every neutral-mode quantity of one pulse at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct LocalModes {
    pub v: C64,
    /// φ in the order (rx, ry, g).
    pub phi: [C64; 3],
    pub psi: [C64; 3],
    /// (∂x, ∂y) of each ψ.
    pub dpsi: [[C64; 2]; 3],
}

/// Evaluate e^{ig}F(x − r) for every pulse-attached field at offset (dx, dy).
pub fn local_modes(tables: &PulseTables, dx: f64, dy: f64, g: f64, with_derivatives: bool) -> LocalModes {
    let r = dx.hypot(dy);
    if r >= tables.v.length() {
        return LocalModes::default();
    }
    let rot = C64::from_polar(1.0, g);
    let i = C64::new(0.0, 1.0);
    let (c, s) = if r > 0.0 { (dx / r, dy / r) } else { (1.0, 0.0) };
    let (v, dv) = tables.v.eval(r);
    let (pg, dpg) = tables.psi_g.eval(r);
    let (pr, dpr) = tables.psi_r.eval(r);
    let mut out = LocalModes {
        v: rot * v,
        phi: [-rot * dv * c, -rot * dv * s, rot * i * v],
        psi: [rot * pr * c, rot * pr * s, rot * pg],
        dpsi: [[C64::default(); 2]; 3],
    };
    if with_derivatives {
        // ψ₁(r)/r, continuous through the origin.
        let pr_over_r = if r > 1e-6 { pr / r } else { dpr };
        let xx = dpr * c * c + pr_over_r * s * s;
        let xy = (dpr - pr_over_r) * c * s;
        let yy = dpr * s * s + pr_over_r * c * c;
        out.dpsi = [[rot * xx, rot * xy], [rot * xy, rot * yy], [rot * dpg * c, rot * dpg * s]];
    }
    out
}

/// Sampled fields of one pulse on a grid.
#[derive(Clone, Debug)]
pub struct PulseFields {
    pub v: Vec<C64>,
    pub phi: Option<[Vec<C64>; 3]>,
    pub psi: [Vec<C64>; 3],
    pub dpsi: Option<[[Vec<C64>; 2]; 3]>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FieldRequest {
    pub phi: bool,
    pub dpsi: bool,
}

fn sample_rows<F>(spec: &GridSpec, f: F) -> Vec<LocalModes>
where
    F: Fn(f64, f64) -> LocalModes + Sync + Send,
{
    let n = spec.points();
    let rows: Vec<usize> = (0..n).collect();
    let per_row = crate::par_map(&rows, |&i| {
        let x = spec.coord(0, i);
        (0..n).map(|j| f(x, spec.coord(1, j))).collect::<Vec<_>>()
    });
    per_row.into_iter().flatten().collect()
}

impl PulseFields {
    pub fn sample(tables: &PulseTables, pulse: &Pulse, spec: &GridSpec, req: FieldRequest) -> Self {
        let local = sample_rows(spec, |x, y| local_modes(tables, x - pulse.x, y - pulse.y, pulse.g, req.dpsi));
        let take = |f: &dyn Fn(&LocalModes) -> C64| local.iter().map(f).collect::<Vec<C64>>();
        PulseFields {
            v: take(&|l| l.v),
            phi: req.phi.then(|| [take(&|l| l.phi[0]), take(&|l| l.phi[1]), take(&|l| l.phi[2])]),
            psi: [take(&|l| l.psi[0]), take(&|l| l.psi[1]), take(&|l| l.psi[2])],
            dpsi: req.dpsi.then(|| {
                [
                    [take(&|l| l.dpsi[0][0]), take(&|l| l.dpsi[0][1])],
                    [take(&|l| l.dpsi[1][0]), take(&|l| l.dpsi[1][1])],
                    [take(&|l| l.dpsi[2][0]), take(&|l| l.dpsi[2][1])],
                ]
            }),
        }
    }

    /// Multiply every field by e^{iθ}.
    pub fn rotated(&self, theta: f64) -> Self {
        let rot = C64::from_polar(1.0, theta);
        let r = |v: &Vec<C64>| v.iter().map(|z| rot * z).collect::<Vec<_>>();
        PulseFields {
            v: r(&self.v),
            phi: self.phi.as_ref().map(|p| [r(&p[0]), r(&p[1]), r(&p[2])]),
            psi: [r(&self.psi[0]), r(&self.psi[1]), r(&self.psi[2])],
            dpsi: self.dpsi.as_ref().map(|d| [[r(&d[0][0]), r(&d[0][1])], [r(&d[1][0]), r(&d[1][1])], [r(&d[2][0]), r(&d[2][1])]]),
        }
    }
}

/// Sample a single pulse-attached field e^{ig}F(x − r) on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Pulse,
    Phi(usize),
    Psi(usize),
}

pub fn shifted_field(tables: &PulseTables, kind: FieldKind, pulse: &Pulse, spec: &GridSpec) -> Vec<C64> {
    sample_rows(spec, |x, y| local_modes(tables, x - pulse.x, y - pulse.y, pulse.g, false))
        .into_iter()
        .map(|l| match kind {
            FieldKind::Pulse => l.v,
            FieldKind::Phi(a) => l.phi[a],
            FieldKind::Psi(a) => l.psi[a],
        })
        .collect()
}

/// max|V| on the grid boundary relative to max|V|, over all pulses.
pub fn support_clip_ratio(tables: &PulseTables, pulses: &[Pulse], spec: &GridSpec) -> f64 {
    let peak = tables.v.value(0.0).norm();
    let mut worst: f64 = 0.0;
    for p in pulses {
        let edges = [
            p.x - (spec.center[0] - spec.half_length),
            spec.center[0] + spec.half_length - p.x,
            p.y - (spec.center[1] - spec.half_length),
            spec.center[1] + spec.half_length - p.y,
        ];
        let gap = edges.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
        worst = worst.max(tables.v.value(gap).norm() / peak);
    }
    worst
}

/// Φ = f(ΣV_k) − Σf(V_k).
pub fn interaction_function(params: &ModelParams, fields: &[&[C64]]) -> Vec<C64> {
    let n = fields.first().map_or(0, |f| f.len());
    (0..n)
        .map(|i| {
            let mut sum = C64::default();
            let mut each = C64::default();
            for f in fields {
                sum += f[i];
                each += params.nonlinearity(f[i]);
            }
            params.nonlinearity(sum) - each
        })
        .collect()
}

/// ⟨Φ, ψ_{a,k}⟩ for every pulse k and a in (rx, ry, g), by direct quadrature.
pub fn direct_inner_products(params: &ModelParams, tables: &PulseTables, config: &PulseConfiguration, quad: &Quadrature) -> Vec<[f64; 3]> {
    let fields: Vec<PulseFields> = config
        .pulses
        .iter()
        .map(|p| PulseFields::sample(tables, p, &quad.spec, FieldRequest::default()))
        .collect();
    project_interaction(params, &fields, quad)
}

pub(crate) fn project_interaction(params: &ModelParams, fields: &[PulseFields], quad: &Quadrature) -> Vec<[f64; 3]> {
    let vs: Vec<&[C64]> = fields.iter().map(|f| f.v.as_slice()).collect();
    let phi = interaction_function(params, &vs);
    fields
        .iter()
        .map(|f| {
            [
                quad.inner_unchecked(&phi, &f.psi[0]),
                quad.inner_unchecked(&phi, &f.psi[1]),
                quad.inner_unchecked(&phi, &f.psi[2]),
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_wrapping() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        for g in [-7.3, -1.0, 0.0, 2.5, 9.9] {
            let w = wrap_phase(g);
            assert!(w > -PI && w <= PI);
            assert!((C64::from_polar(1.0, g) - C64::from_polar(1.0, w)).norm() < 1e-13);
        }
    }

    #[test]
    fn state_round_trip() {
        let s = [0.5, -1.0, 0.25, 2.0, 0.0, -3.0];
        let c = PulseConfiguration::from_state(&s).unwrap();
        assert_eq!(c.state(), s.to_vec());
        assert!(PulseConfiguration::from_state(&s[..4]).is_err());
        assert!((c.min_separation() - 1.5f64.hypot(1.0)).abs() < 1e-15);
    }

    #[test]
    fn single_pulse_has_no_interaction() {
        let p = ModelParams::parameters1();
        let f = vec![C64::new(1.0, 2.0), C64::new(-0.3, 0.1)];
        assert!(interaction_function(&p, &[&f]).iter().all(|z| z.norm() == 0.0));
    }
}
