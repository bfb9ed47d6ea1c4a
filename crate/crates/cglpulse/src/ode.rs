//! Explicit Runge-Kutta integration with dense output and event location.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    Rk4 { dt: f64 },
    /// Dormand-Prince 4(5); `tol` is used as both absolute and relative tolerance.
    Adaptive { tol: f64, h_init: f64, h_max: f64 },
}

impl Scheme {
    pub fn adaptive(tol: f64) -> Self {
        Scheme::Adaptive { tol, h_init: 1.0, h_max: f64::INFINITY }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

/// Zero of a scalar function of the state, located to |Δt| ≤ `time_tol`.
pub struct Event<'a> {
    pub f: Box<dyn Fn(&[f64]) -> f64 + 'a>,
    pub crossing: Crossing,
    pub terminal: bool,
}

pub const EVENT_TIME_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventHit {
    pub event: usize,
    pub t: f64,
    pub y: Vec<f64>,
    pub rising: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl Trajectory {
    fn push(&mut self, t: f64, y: &[f64]) {
        self.t.push(t);
        self.y.push(y.to_vec());
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.t.last().map(|&t| (t, self.y.last().unwrap().as_slice()))
    }
}

#[derive(Debug)]
pub enum Stop {
    Finished,
    Event(usize),
    Failed(Error),
}

pub struct Solution {
    pub trajectory: Trajectory,
    pub events: Vec<EventHit>,
    pub stop: Stop,
    pub steps: usize,
    pub rejected: usize,
}

impl Solution {
    pub fn final_state(&self) -> (f64, &[f64]) {
        self.trajectory.last().expect("trajectory holds the initial state")
    }

    pub fn into_result(self) -> Result<Self> {
        match self.stop {
            Stop::Failed(e) => Err(e),
            _ => Ok(self),
        }
    }
}

pub struct Options<'a> {
    pub scheme: Scheme,
    pub t_end: f64,
    /// Dense-output spacing; every accepted step is recorded when None.
    pub sample_dt: Option<f64>,
    pub events: Vec<Event<'a>>,
    /// Applied to the state after every accepted step.
    pub project: Option<&'a dyn Fn(&mut [f64])>,
    pub max_steps: usize,
}

impl<'a> Options<'a> {
    pub fn new(scheme: Scheme, t_end: f64) -> Self {
        Options { scheme, t_end, sample_dt: None, events: Vec::new(), project: None, max_steps: 10_000_000 }
    }
}

/// Continuous extension of one step on [t0, t0 + h].
enum Dense {
    /// Cubic Hermite from endpoint values and slopes.
    Hermite { y0: Vec<f64>, y1: Vec<f64>, f0: Vec<f64>, f1: Vec<f64> },
    /// Fifth-order Dormand-Prince extension.
    Dopri { r: [Vec<f64>; 5] },
}

impl Dense {
    fn eval(&self, theta: f64, h: f64) -> Vec<f64> {
        match self {
            Dense::Hermite { y0, y1, f0, f1 } => {
                let t2 = theta * theta;
                let t3 = t2 * theta;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + theta;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                (0..y0.len()).map(|i| h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i]).collect()
            }
            Dense::Dopri { r } => {
                let s = 1.0 - theta;
                (0..r[0].len()).map(|i| r[0][i] + theta * (r[1][i] + s * (r[2][i] + theta * (r[3][i] + s * r[4][i])))).collect()
            }
        }
    }
}

fn axpy(y: &[f64], terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(k.iter()) {
                *o += c * v;
            }
        }
    }
    out
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrate y' = f(t, y) from t0 over [t0, t_end].
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], opts: Options<'_>) -> Solution
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut traj = Trajectory::default();
    let mut events = Vec::new();
    let mut t = t0;
    let mut y = y0.to_vec();
    if let Some(p) = opts.project {
        p(&mut y);
    }
    traj.push(t, &y);
    let mut next_sample = opts.sample_dt.map(|dt| t0 + dt);
    let mut steps = 0;
    let mut rejected = 0;
    let finish = |traj, events, stop, steps, rejected| Solution { trajectory: traj, events, stop, steps, rejected };
    let mut k1 = match f(t, &y) {
        Ok(k) => k,
        Err(e) => return finish(traj, events, Stop::Failed(e), 0, 0),
    };
    let mut g_prev: Vec<f64> = opts.events.iter().map(|e| (e.f)(&y)).collect();
    let (mut h, tol, h_max) = match opts.scheme {
        Scheme::Rk4 { dt } => (dt, 0.0, dt),
        Scheme::Adaptive { tol, h_init, h_max } => (h_init, tol, h_max),
    };
    while t < opts.t_end {
        if steps >= opts.max_steps {
            return finish(traj, events, Stop::Failed(Error::StepSizeUnderflow { t }), steps, rejected);
        }
        h = h.min(opts.t_end - t).min(h_max);
        let step = match opts.scheme {
            Scheme::Rk4 { .. } => rk4_step(&mut f, t, &y, &k1, h).map(|(y1, k_end)| {
                let dense = Dense::Hermite { y0: y.clone(), y1: y1.clone(), f0: k1.clone(), f1: k_end.clone() };
                Some((y1, k_end, dense, h))
            }),
            Scheme::Adaptive { .. } => dopri_step(&mut f, t, &y, &k1, h, tol).map(|r| match r {
                DopriResult::Accepted { y1, k7, dense, h_next } => {
                    let used = h;
                    h = h_next;
                    Some((y1, k7, dense, used))
                }
                DopriResult::Rejected { h_next } => {
                    h = h_next;
                    None
                }
            }),
        };
        let (mut y1, mut k_end, dense, used) = match step {
            Ok(Some(s)) => s,
            Ok(None) => {
                rejected += 1;
                if h < 1e-14 * t.abs().max(1.0) {
                    return finish(traj, events, Stop::Failed(Error::StepSizeUnderflow { t }), steps, rejected);
                }
                continue;
            }
            Err(e) => return finish(traj, events, Stop::Failed(e), steps, rejected),
        };
        steps += 1;
        let t1 = t + used;
        // Events are located on the unprojected continuous extension.
        let mut terminal = None;
        for (idx, ev) in opts.events.iter().enumerate() {
            let g1 = (ev.f)(&y1);
            let g0 = g_prev[idx];
            let rising = g0 < 0.0 && g1 >= 0.0;
            let falling = g0 > 0.0 && g1 <= 0.0;
            let wanted = match ev.crossing {
                Crossing::Rising => rising,
                Crossing::Falling => falling,
                Crossing::Either => rising || falling,
            };
            if wanted {
                let (mut lo, mut hi) = (0.0, 1.0);
                while (hi - lo) * used > EVENT_TIME_TOL {
                    let mid = 0.5 * (lo + hi);
                    let gm = (ev.f)(&dense.eval(mid, used));
                    if (gm < 0.0) == (g0 < 0.0) && gm != 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let theta = 0.5 * (lo + hi);
                let hit = EventHit { event: idx, t: t + theta * used, y: dense.eval(theta, used), rising };
                if ev.terminal && terminal.as_ref().is_none_or(|(_, th)| theta < *th) {
                    terminal = Some((events.len(), theta));
                }
                events.push(hit);
            }
            g_prev[idx] = g1;
        }
        if let Some((pos, _)) = terminal {
            let hit = events[pos].clone();
            events.retain(|e| e.t <= hit.t);
            if let Some(ts) = next_sample.as_mut() {
                let dt = opts.sample_dt.unwrap();
                while *ts < hit.t {
                    traj.push(*ts, &dense.eval((*ts - t) / used, used));
                    *ts += dt;
                }
            }
            traj.push(hit.t, &hit.y);
            return finish(traj, events, Stop::Event(hit.event), steps, rejected);
        }
        if let Some(ts) = next_sample.as_mut() {
            let dt = opts.sample_dt.unwrap();
            while *ts <= t1 + 1e-12 * t1.abs() {
                let theta = ((*ts - t) / used).min(1.0);
                traj.push(*ts, &dense.eval(theta, used));
                *ts += dt;
            }
        }
        if let Some(p) = opts.project {
            p(&mut y1);
            match f(t1, &y1) {
                Ok(k) => k_end = k,
                Err(e) => return finish(traj, events, Stop::Failed(e), steps, rejected),
            }
        }
        t = t1;
        y = y1;
        k1 = k_end;
        if opts.sample_dt.is_none() {
            traj.push(t, &y);
        }
    }
    if opts.sample_dt.is_some() && traj.t.last() != Some(&t) {
        traj.push(t, &y);
    }
    finish(traj, events, Stop::Finished, steps, rejected)
}

fn rk4_step<F>(f: &mut F, t: f64, y: &[f64], k1: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k2 = f(t + 0.5 * h, &axpy(y, &[(0.5 * h, k1)]))?;
    let k3 = f(t + 0.5 * h, &axpy(y, &[(0.5 * h, &k2)]))?;
    let k4 = f(t + h, &axpy(y, &[(h, &k3)]))?;
    let y1 = axpy(y, &[(h / 6.0, k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)]);
    let k_end = f(t + h, &y1)?;
    Ok((y1, k_end))
}

enum DopriResult {
    Accepted { y1: Vec<f64>, k7: Vec<f64>, dense: Dense, h_next: f64 },
    Rejected { h_next: f64 },
}

fn dopri_step<F>(f: &mut F, t: f64, y: &[f64], k1: &[f64], h: f64, tol: f64) -> Result<DopriResult>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k2 = f(t + h / 5.0, &axpy(y, &[(h * A21, k1)]))?;
    let k3 = f(t + 3.0 * h / 10.0, &axpy(y, &[(h * A31, k1), (h * A32, &k2)]))?;
    let k4 = f(t + 4.0 * h / 5.0, &axpy(y, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]))?;
    let k5 = f(t + 8.0 * h / 9.0, &axpy(y, &[(h * A51, k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]))?;
    let k6 = f(t + h, &axpy(y, &[(h * A61, k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)]))?;
    let y1 = axpy(y, &[(h * B1, k1), (h * B3, &k3), (h * B4, &k4), (h * B5, &k5), (h * B6, &k6)]);
    let k7 = f(t + h, &y1)?;
    let mut err = 0.0;
    for i in 0..y.len() {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = tol + tol * y[i].abs().max(y1[i].abs());
        err += (e / sc).powi(2);
    }
    let err = (err / y.len() as f64).sqrt();
    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
    if !err.is_finite() || err > 1.0 {
        let shrink = if err.is_finite() { factor.min(1.0) } else { 0.2 };
        return Ok(DopriResult::Rejected { h_next: h * shrink });
    }
    let ydiff: Vec<f64> = y1.iter().zip(y).map(|(a, b)| a - b).collect();
    let bspl: Vec<f64> = (0..y.len()).map(|i| h * k1[i] - ydiff[i]).collect();
    let r4: Vec<f64> = (0..y.len()).map(|i| ydiff[i] - h * k7[i] - bspl[i]).collect();
    let r5: Vec<f64> = (0..y.len()).map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])).collect();
    let dense = Dense::Dopri { r: [y.to_vec(), ydiff, bspl, r4, r5] };
    Ok(DopriResult::Accepted { y1, k7, dense, h_next: h * factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![y[1], -y[0]])
    }

    #[test]
    fn adaptive_harmonic_oscillator() {
        let sol = integrate(oscillator, 0.0, &[1.0, 0.0], Options::new(Scheme::adaptive(1e-10), 10.0));
        let (t, y) = sol.final_state();
        assert_eq!(t, 10.0);
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn rk4_fourth_order() {
        let err = |dt: f64| {
            let sol = integrate(oscillator, 0.0, &[1.0, 0.0], Options::new(Scheme::Rk4 { dt }, 2.0));
            (sol.final_state().1[0] - 2f64.cos()).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn event_located_on_dense_output() {
        for scheme in [Scheme::adaptive(1e-10), Scheme::Rk4 { dt: 0.01 }] {
            let mut opts = Options::new(scheme, 10.0);
            opts.events.push(Event { f: Box::new(|y: &[f64]| y[0]), crossing: Crossing::Rising, terminal: true });
            let sol = integrate(oscillator, 0.0, &[1.0, 0.0], opts);
            assert!(matches!(sol.stop, Stop::Event(0)));
            assert!((sol.events[0].t - 1.5 * std::f64::consts::PI).abs() < 1e-7, "{}", sol.events[0].t);
        }
    }

    #[test]
    fn samples_on_requested_times() {
        let mut opts = Options::new(Scheme::adaptive(1e-10), 3.0);
        opts.sample_dt = Some(0.5);
        let sol = integrate(oscillator, 0.0, &[1.0, 0.0], opts);
        assert_eq!(sol.trajectory.t.len(), 7);
        for (t, y) in sol.trajectory.t.iter().zip(&sol.trajectory.y) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn failure_keeps_partial_trajectory() {
        let f = |t: f64, y: &[f64]| if t > 1.0 { Err(Error::TooClose { distance: 0.1 }) } else { Ok(vec![y[0]]) };
        let sol = integrate(f, 0.0, &[1.0], Options::new(Scheme::Rk4 { dt: 0.1 }, 5.0));
        assert!(matches!(sol.stop, Stop::Failed(Error::TooClose { .. })));
        assert!(sol.final_state().0 <= 1.0 + 1e-12);
    }

    #[test]
    fn constant_at_fixed_point() {
        let sol = integrate(|_, _| Ok(vec![0.0, 0.0]), 0.0, &[0.3, -0.2], Options::new(Scheme::adaptive(1e-8), 50.0));
        assert_eq!(sol.final_state().1, &[0.3, -0.2]);
    }
}
