//! Leading-order projected dynamics: Ẋ = F₁(X).

use crate::law::{InteractionLaw, LawConstants};
use crate::ode::{integrate, Crossing, Event, Options, Scheme, Stop, Trajectory};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Right-hand side of the projected ODE system for a slow state
/// (x₁, y₁, g₁, ..., x_N, y_N, g_N).
pub fn pos_rhs(law: &InteractionLaw, state: &[f64]) -> Result<Vec<f64>> {
    let pulses = crate::kernel::PulseConfiguration::from_state(state)?.pulses;
    Ok(law.inner_products(&pulses)?.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPulseState {
    /// r₁ˣ − r₂ˣ.
    pub rbar: f64,
    /// g₁ − g₂.
    pub gbar: f64,
}

/// Reduced two-pulse system on the x-axis with the large-argument tail form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPulseSystem {
    pub constants: LawConstants,
    pub lambda: C64,
    pub min_distance: f64,
}

impl TwoPulseSystem {
    pub fn new(constants: LawConstants, lambda: C64) -> Self {
        TwoPulseSystem { constants, lambda, min_distance: crate::law::DEFAULT_MIN_DISTANCE }
    }

    fn envelope(&self, r: f64) -> f64 {
        2.0 * (-self.lambda.re * r).exp() / r.sqrt()
    }

    pub fn rhs(&self, s: TwoPulseState) -> Result<(f64, f64)> {
        let r = s.rbar.abs();
        if !(r >= self.min_distance) {
            return Err(Error::TooClose { distance: r });
        }
        let c = &self.constants;
        let li = self.lambda.im;
        let e = self.envelope(r);
        let rdot = -s.rbar.signum() * c.j1 * e * (-li * r + c.kappa1 + FRAC_PI_4).cos() * s.gbar.cos();
        let gdot = c.j2 * e * (-li * r + c.kappa2 + FRAC_PI_4).sin() * s.gbar.sin();
        Ok((rdot, gdot))
    }

    pub fn hamiltonian_regime(&self) -> bool {
        self.constants.hamiltonian_indicator(self.lambda.im) > 0.0
    }

    /// Conserved quantity of the reduced flow on an open cell.
    pub fn hamiltonian(&self, s: TwoPulseState) -> Result<f64> {
        let li = self.lambda.im;
        let c = &self.constants;
        let indicator = c.hamiltonian_indicator(li);
        if !(indicator > 0.0) {
            return Err(Error::NotHamiltonianRegime { value: indicator });
        }
        let r = s.rbar.abs();
        let dk = c.kappa2 - c.kappa1;
        let exponent = c.j2 * dk.cos() / (c.j1 * li);
        let cell = (-li * r + c.kappa1 + FRAC_PI_4).cos().abs();
        Ok(s.gbar.sin() * (c.j2 / c.j1 * r * dk.sin()).exp() * cell.powf(exponent))
    }

    /// (centres, saddles) for n = 1..=n_max.
    pub fn equilibria(&self, n_max: usize) -> (Vec<f64>, Vec<f64>) {
        two_pulse_equilibria(&self.constants, self.lambda, n_max)
    }
}

pub fn two_pulse_equilibria(c: &LawConstants, lambda: C64, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let li = lambda.im;
    let centres = (1..=n_max).map(|n| (c.kappa2 + FRAC_PI_4 + n as f64 * PI) / li).collect();
    let saddles = (1..=n_max).map(|n| (c.kappa1 + FRAC_PI_4 + (2 * n - 1) as f64 * FRAC_PI_2) / li).collect();
    (centres, saddles)
}

/// Orbit from ḡ = π/2 to its first return there with ḡ increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnRecord {
    pub rbar0: f64,
    /// First crossing of ḡ = π/2 with ḡ decreasing.
    pub half_time: Option<f64>,
    pub half_rbar: Option<f64>,
    pub period: f64,
    pub rbar_end: f64,
    /// Π = r̄(T) − r̄(0).
    pub pi: f64,
    pub steps: usize,
}

/// Integrate y' = f(y) from y0 until `gbar(y)` returns to π/2 rising.
pub fn first_return<F, G, R>(f: F, y0: &[f64], gbar: G, rbar: R, scheme: Scheme, t_cap: f64) -> Result<ReturnRecord>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    G: Fn(&[f64]) -> f64 + Copy,
    R: Fn(&[f64]) -> f64,
{
    first_return_sampled(f, y0, gbar, rbar, scheme, t_cap, None).map(|(rec, _)| rec)
}

/// As [`first_return`], also keeping the orbit sampled every `sample_dt`.
pub fn first_return_sampled<F, G, R>(f: F, y0: &[f64], gbar: G, rbar: R, scheme: Scheme, t_cap: f64, sample_dt: Option<f64>) -> Result<(ReturnRecord, Trajectory)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    G: Fn(&[f64]) -> f64 + Copy,
    R: Fn(&[f64]) -> f64,
{
    let mut f = f;
    let f0 = f(0.0, y0)?;
    let probe: Vec<f64> = y0.iter().zip(&f0).map(|(y, d)| y + 1e-6 * d).collect();
    if gbar(&probe) < gbar(y0) {
        return Err(Error::Invalid("start lies on the falling half of the section ḡ = π/2".into()));
    }
    let mut opts = Options::new(scheme, t_cap);
    opts.sample_dt = sample_dt;
    opts.events.push(Event { f: Box::new(move |y: &[f64]| gbar(y) - FRAC_PI_2), crossing: Crossing::Falling, terminal: false });
    opts.events.push(Event { f: Box::new(move |y: &[f64]| gbar(y) - FRAC_PI_2), crossing: Crossing::Rising, terminal: true });
    let sol = integrate(f, 0.0, y0, opts).into_result()?;
    if !matches!(sol.stop, Stop::Event(1)) {
        return Err(Error::NoReturn { t_cap });
    }
    let half = sol.events.iter().find(|e| e.event == 0);
    let ret = sol.events.iter().rfind(|e| e.event == 1).expect("terminal event recorded");
    let r0 = rbar(y0);
    let r1 = rbar(&ret.y);
    let rec = ReturnRecord {
        rbar0: r0,
        half_time: half.map(|e| e.t),
        half_rbar: half.map(|e| rbar(&e.y)),
        period: ret.t,
        rbar_end: r1,
        pi: r1 - r0,
        steps: sol.steps,
    };
    Ok((rec, sol.trajectory))
}

impl TwoPulseSystem {
    pub fn as_ode(&self) -> impl FnMut(f64, &[f64]) -> Result<Vec<f64>> + '_ {
        move |_, y| {
            let (a, b) = self.rhs(TwoPulseState { rbar: y[0], gbar: y[1] })?;
            Ok(vec![a, b])
        }
    }

    pub fn return_map(&self, rbar0: f64, scheme: Scheme, t_cap: f64) -> Result<ReturnRecord> {
        first_return(self.as_ode(), &[rbar0, FRAC_PI_2], |y| y[1], |y| y[0], scheme, t_cap)
    }
}

/// Two-pulse slow state with pulse 1 at (r̄/2, 0, ḡ) and pulse 2 at (−r̄/2, 0, 0).
pub fn two_pulse_state(rbar: f64, gbar: f64) -> [f64; 6] {
    [rbar / 2.0, 0.0, gbar, -rbar / 2.0, 0.0, 0.0]
}

/// (r̄, ḡ) of the first two pulses of a slow state.
pub fn pair_differences(y: &[f64]) -> (f64, f64) {
    (y[0] - y[3], y[2] - y[5])
}

/// Closed orbits of the reduced system through (r̄₀, π/2) for each start.
pub fn phase_plane(system: &TwoPulseSystem, starts: &[f64], samples_per_orbit: usize, tol: f64) -> Result<Vec<Vec<TwoPulseState>>> {
    starts
        .iter()
        .map(|&r0| {
            let rec = system.return_map(r0, Scheme::adaptive(tol), 1e9)?;
            let mut opts = Options::new(Scheme::adaptive(tol), rec.period);
            opts.sample_dt = Some(rec.period / samples_per_orbit as f64);
            let sol = integrate(system.as_ode(), 0.0, &[r0, FRAC_PI_2], opts).into_result()?;
            Ok(sol.trajectory.y.iter().map(|y| TwoPulseState { rbar: y[0], gbar: y[1] }).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::TailForm;

    fn system() -> TwoPulseSystem {
        TwoPulseSystem::new(
            LawConstants { j1: 19.43732, kappa1: -0.17263, j2: 76.88165, kappa2: 0.07856 },
            C64::new(3.9981536787, 1.6472396359),
        )
    }

    #[test]
    fn reduced_system_matches_pairwise_law() {
        let s = system();
        let law = InteractionLaw::new(s.constants, s.lambda, TailForm::Asymptotic);
        for (r, g) in [(2.3, 0.4), (3.1, -2.0), (1.9, 1.2)] {
            let y = pos_rhs(&law, &two_pulse_state(r, g)).unwrap();
            let (a, b) = s.rhs(TwoPulseState { rbar: r, gbar: g }).unwrap();
            assert!((y[0] - y[3] - a).abs() < 1e-13 * a.abs().max(1e-300));
            assert!((y[2] - y[5] - b).abs() < 1e-13 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn first_return_of_a_linear_centre() {
        let f = |_: f64, y: &[f64]| -> Result<Vec<f64>> { Ok(vec![-(y[1] - FRAC_PI_2), y[0] - 2.5]) };
        let rec = first_return(f, &[3.0, FRAC_PI_2], |y| y[1], |y| y[0], Scheme::adaptive(1e-10), 100.0).unwrap();
        assert!((rec.period - 2.0 * PI).abs() < 1e-7, "{rec:?}");
        assert!(rec.pi.abs() < 1e-8);
        assert!((rec.half_rbar.unwrap() - 2.0).abs() < 1e-8);
        assert!(first_return(f, &[2.0, FRAC_PI_2], |y| y[1], |y| y[0], Scheme::adaptive(1e-10), 100.0).is_err());
    }

    #[test]
    fn gbar_zero_freezes_phase() {
        let (_, b) = system().rhs(TwoPulseState { rbar: 2.7, gbar: 0.0 }).unwrap();
        assert_eq!(b, 0.0);
        assert_eq!(system().hamiltonian(TwoPulseState { rbar: 2.7, gbar: 0.0 }).unwrap(), 0.0);
    }

    #[test]
    fn hamiltonian_is_conserved_by_the_vector_field() {
        let s = system();
        let st = TwoPulseState { rbar: 2.6, gbar: 1.1 };
        let (a, b) = s.rhs(st).unwrap();
        let h = 1e-6;
        let dr = (s.hamiltonian(TwoPulseState { rbar: st.rbar + h, ..st }).unwrap() - s.hamiltonian(TwoPulseState { rbar: st.rbar - h, ..st }).unwrap()) / (2.0 * h);
        let dg = (s.hamiltonian(TwoPulseState { gbar: st.gbar + h, ..st }).unwrap() - s.hamiltonian(TwoPulseState { gbar: st.gbar - h, ..st }).unwrap()) / (2.0 * h);
        let scale = (dr * a).abs() + (dg * b).abs();
        assert!((dr * a + dg * b).abs() < 1e-7 * scale);
    }

    #[test]
    fn global_phase_and_translation_invariance() {
        let s = system();
        let law = InteractionLaw::new(s.constants, s.lambda, TailForm::Hankel);
        let y = [0.3, 0.1, 0.7, 2.4, -0.5, -1.0, -1.0, 2.0, 2.0];
        let base = pos_rhs(&law, &y).unwrap();
        let mut moved = y;
        for k in 0..3 {
            moved[3 * k] += 4.0;
            moved[3 * k + 1] -= 1.5;
            moved[3 * k + 2] += 0.9;
        }
        let other = pos_rhs(&law, &moved).unwrap();
        for (a, b) in base.iter().zip(&other) {
            assert!((a - b).abs() < 1e-12 * a.abs().max(1e-12));
        }
    }
}
