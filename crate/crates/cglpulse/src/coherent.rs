//! Two interacting N=3 triads, mirror-symmetric about the line x = 0.
//!
//! The slow state is carried in double-double and advanced with classical
//! RK4; after each step the configuration is projected back onto the mirror
//! symmetry so round-off cannot seed asymmetric modes.

use crate::dd::Dd;
use crate::equilibria::{FixedPointRecord, SymmetricFamily};
use crate::kernel::Pulse;
use crate::law::InteractionLaw;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Index of the out-of-phase (leading) pulse inside each triad.
pub const LEAD: usize = 2;

/// Triad geometry about its centroid, heading along +x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triad {
    pub offsets: [[f64; 3]; 3],
}

impl Triad {
    pub fn from_record(rec: &FixedPointRecord) -> Result<Self> {
        if rec.n != 3 {
            return Err(Error::Invalid(format!("triad needs an N=3 record, got N={}", rec.n)));
        }
        let s = SymmetricFamily { n: 3 }.expand(&rec.values);
        let cx = (s[0] + s[3] + s[6]) / 3.0;
        let cy = (s[1] + s[4] + s[7]) / 3.0;
        let mut offsets = [[0.0; 3]; 3];
        for k in 0..3 {
            offsets[k] = [s[3 * k] - cx, s[3 * k + 1] - cy, s[3 * k + 2]];
        }
        if offsets[LEAD][0] <= 0.0 {
            return Err(Error::Invalid("triad lead pulse is not ahead of the centroid".into()));
        }
        Ok(Triad { offsets })
    }

    /// Pulses of a triad centred at `c` and heading at angle `theta`.
    pub fn placed(&self, c: [f64; 2], theta: f64) -> [Pulse; 3] {
        let (sn, cs) = exact_sin_cos(theta);
        self.offsets.map(|[x, y, g]| Pulse { x: c[0] + cs * x - sn * y, y: c[1] + sn * x + cs * y, g })
    }
}

/// sin/cos that are exact at multiples of π/2, so aligned starts keep the
/// triad's own reflection symmetry.
fn exact_sin_cos(theta: f64) -> (f64, f64) {
    let q = theta / std::f64::consts::FRAC_PI_2;
    if (q - q.round()).abs() < 1e-12 {
        match (q.round() as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        theta.sin_cos()
    }
}

/// Six pulses: triad A centred at (−S/2, 0) heading θ₁, then its mirror image B.
pub fn initial_configuration(triad: &Triad, s: f64, theta1: f64) -> Vec<Pulse> {
    let a = triad.placed([-0.5 * s, 0.0], theta1);
    let b = a.map(|p| Pulse { x: -p.x, ..p });
    a.into_iter().chain(b).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherentOutcome {
    Drift = 0,
    PairEjectionLeading = 1,
    PairEjectionRear = 2,
    Interacting = 3,
}

impl CoherentOutcome {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoherentSettings {
    pub t_end: f64,
    pub dt: f64,
    pub sample_dt: f64,
    /// Fraction of the run inspected by the classifier.
    pub trailing_fraction: f64,
    /// A pair stays closer than this over the trailing window.
    pub pair_distance: f64,
    /// An ejected pair is at least this far from every other pulse.
    pub ejection_distance: f64,
    /// Intact triads keep all internal distances below this.
    pub intact_distance: f64,
}

impl Default for CoherentSettings {
    fn default() -> Self {
        CoherentSettings {
            t_end: 6e4,
            dt: 0.25,
            sample_dt: 20.0,
            trailing_fraction: 0.2,
            pair_distance: 4.0,
            ejection_distance: 8.0,
            intact_distance: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentRun {
    pub s: f64,
    pub theta1: f64,
    pub outcome: CoherentOutcome,
    /// Pulses came closer than the law's minimum distance.
    pub annihilated: bool,
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl CoherentRun {
    /// Distance between the two leading pulses at the end of the run.
    pub fn final_lead_separation(&self) -> Option<f64> {
        self.states.last().map(|s| dist(s, LEAD, 3 + LEAD))
    }
}

fn dist(s: &[f64], a: usize, b: usize) -> f64 {
    (s[3 * a] - s[3 * b]).hypot(s[3 * a + 1] - s[3 * b + 1])
}

fn rhs_dd(law: &InteractionLaw, y: &[Dd]) -> Result<Vec<Dd>> {
    let n = y.len() / 3;
    let pulses: Vec<Pulse> = (0..n).map(|k| Pulse { x: y[3 * k].to_f64(), y: y[3 * k + 1].to_f64(), g: y[3 * k + 2].to_f64() }).collect();
    let mut out = vec![Dd::ZERO; y.len()];
    for k in 0..n {
        for j in k + 1..n {
            let (a, b) = law.pair_terms(&pulses[k], &pulses[j])?;
            for c in 0..3 {
                out[3 * k + c] += a[c];
                out[3 * j + c] += b[c];
            }
        }
    }
    Ok(out)
}

/// Mirror projection: pulse k+3 is the image of pulse k under x ↦ −x.
fn project(y: &mut [Dd]) {
    for k in 0..3 {
        let (a, b) = (3 * k, 3 * (k + 3));
        let x = (y[a] - y[b]).half();
        let yy = (y[a + 1] + y[b + 1]).half();
        let g = (y[a + 2] + y[b + 2]).half();
        y[a] = x;
        y[b] = -x;
        y[a + 1] = yy;
        y[b + 1] = yy;
        y[a + 2] = g;
        y[b + 2] = g;
    }
}

fn axpy(y: &[Dd], h: f64, k: &[Dd]) -> Vec<Dd> {
    y.iter().zip(k).map(|(a, b)| *a + *b * h).collect()
}

/// Integrate one (S, θ₁) start and classify it.
pub fn coherent_structure_experiment(law: &InteractionLaw, triad: &Triad, s: f64, theta1: f64, settings: &CoherentSettings) -> Result<CoherentRun> {
    if !(settings.dt > 0.0 && settings.sample_dt >= settings.dt && settings.t_end > 0.0) {
        return Err(Error::Invalid("coherent run needs 0 < dt <= sample_dt and t_end > 0".into()));
    }
    let start = initial_configuration(triad, s, theta1);
    let mut y: Vec<Dd> = start.iter().flat_map(|p| [Dd::new(p.x), Dd::new(p.y), Dd::new(p.g)]).collect();
    project(&mut y);
    let steps = (settings.t_end / settings.dt).round() as usize;
    let every = ((settings.sample_dt / settings.dt).round() as usize).max(1);
    let h = settings.dt;
    let mut t = vec![0.0];
    let mut states = vec![y.iter().map(|v| v.to_f64()).collect::<Vec<_>>()];
    let mut annihilated = false;
    for step in 1..=steps {
        let stage = (|| -> Result<Vec<Dd>> {
            let k1 = rhs_dd(law, &y)?;
            let k2 = rhs_dd(law, &axpy(&y, 0.5 * h, &k1))?;
            let k3 = rhs_dd(law, &axpy(&y, 0.5 * h, &k2))?;
            let k4 = rhs_dd(law, &axpy(&y, h, &k3))?;
            Ok((0..y.len()).map(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0)).collect())
        })();
        match stage {
            Ok(next) => y = next,
            Err(Error::TooClose { .. }) => {
                annihilated = true;
                break;
            }
            Err(e) => return Err(e),
        }
        project(&mut y);
        if step % every == 0 || step == steps {
            t.push(step as f64 * h);
            states.push(y.iter().map(|v| v.to_f64()).collect());
        }
    }
    let outcome = if annihilated { CoherentOutcome::Interacting } else { classify(&t, &states, settings) };
    Ok(CoherentRun { s, theta1, outcome, annihilated, t, states })
}

/// Ejected pair, intact drifting triads, or still interacting.
pub fn classify(t: &[f64], states: &[Vec<f64>], settings: &CoherentSettings) -> CoherentOutcome {
    let t_end = *t.last().unwrap_or(&0.0);
    let from = t_end - settings.trailing_fraction * (t_end - t.first().copied().unwrap_or(0.0));
    let window: Vec<&Vec<f64>> = t.iter().zip(states).filter(|(ti, _)| **ti >= from).map(|(_, s)| s).collect();
    if window.len() < 2 {
        return CoherentOutcome::Interacting;
    }
    let (first, last) = (window[0], window[window.len() - 1]);
    let n = last.len() / 3;
    for a in 0..n {
        for b in a + 1..n {
            let bound = window.iter().all(|s| dist(s, a, b) < settings.pair_distance);
            let isolated = (0..n).filter(|&c| c != a && c != b).all(|c| {
                [a, b].iter().all(|&p| window.iter().all(|s| dist(s, p, c) > settings.ejection_distance) && dist(last, p, c) > dist(first, p, c))
            });
            if bound && isolated {
                let leading = a % 3 == LEAD || b % 3 == LEAD;
                return if leading { CoherentOutcome::PairEjectionLeading } else { CoherentOutcome::PairEjectionRear };
            }
        }
    }
    let intact = window.iter().all(|s| (0..2).all(|tr| (0..3).all(|i| (i + 1..3).all(|j| dist(s, 3 * tr + i, 3 * tr + j) < settings.intact_distance))));
    let gap = |s: &Vec<f64>| (0..3).flat_map(|i| (3..6).map(move |j| (i, j))).map(|(i, j)| dist(s, i, j)).fold(f64::INFINITY, f64::min);
    let gaps: Vec<f64> = window.iter().map(|s| gap(s)).collect();
    let monotone = gaps.windows(2).all(|w| w[1] >= w[0]) || gaps.windows(2).all(|w| w[1] <= w[0]);
    if intact && monotone {
        CoherentOutcome::Drift
    } else {
        CoherentOutcome::Interacting
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::Mode;
    use std::f64::consts::PI;

    fn triad() -> Triad {
        let rec = FixedPointRecord { n: 3, mode: Mode::Pos, values: vec![-0.13, 1.37, 1.72], j_max: -1.0, eigenvalues: vec![], residual: 0.0, iterations: 0 };
        Triad::from_record(&rec).unwrap()
    }

    #[test]
    fn triads_are_mirror_images() {
        let tr = triad();
        for theta in [0.0, 0.3, PI / 2.0, PI] {
            let p = initial_configuration(&tr, 6.0, theta);
            for k in 0..3 {
                assert_eq!(p[k + 3].x, -p[k].x);
                assert_eq!(p[k + 3].y, p[k].y);
                assert_eq!(p[k + 3].g, p[k].g);
            }
            let cx: f64 = p[..3].iter().map(|q| q.x).sum::<f64>() / 3.0;
            assert!((cx + 3.0).abs() < 1e-12);
        }
        // θ₁ = 0 points the lead pulse of A at B.
        let p = initial_configuration(&tr, 6.0, 0.0);
        assert!(p[LEAD].x > p[0].x && p[LEAD].y.abs() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent() {
        let mut y: Vec<Dd> = (0..18).map(|k| Dd::new(0.1 * k as f64 - 0.7)).collect();
        project(&mut y);
        let once = y.clone();
        project(&mut y);
        assert_eq!(once, y);
    }

    #[test]
    fn separated_pair_is_ejection() {
        let mut states = Vec::new();
        let mut t = Vec::new();
        for k in 0..50 {
            let s = k as f64;
            let mut v = vec![0.0; 18];
            // Pulses 2 and 0 leave together; everything else stays put.
            for (p, (x, y)) in [(-3.0 - s, 1.0), (0.0, 5.0), (-3.0 - s, -1.0), (3.0 + s, 1.0), (0.0, -5.0), (3.0 + s, -1.0)].iter().enumerate() {
                v[3 * p] = *x;
                v[3 * p + 1] = *y;
            }
            t.push(s);
            states.push(v);
        }
        assert_eq!(classify(&t, &states, &CoherentSettings::default()), CoherentOutcome::PairEjectionLeading);
    }
}
