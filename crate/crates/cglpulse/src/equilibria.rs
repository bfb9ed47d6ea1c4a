//! Symmetric relative equilibria, their stability, and basins of attraction.
//!
//! Pulse N is pinned at (2, 0, 0) and the remaining pulses are either on the
//! x-axis or in mirror pairs about it. Fixed points are zeros of the
//! velocities relative to pulse N, so a rigidly drifting cluster counts.

use crate::ode::{integrate, Options, Scheme, Stop};
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

pub const PINNED: [f64; 3] = [2.0, 0.0, 0.0];

/// Reflection-symmetric N-pulse family, N ∈ {3, 4, 5}.
///
/// Pulse order and unknowns:
/// - N=3: (P₁, P₁', P₃), unknowns (x₁, y₁, g₁);
/// - N=4: (P₁, P₂, P₁', P₄) with P₂ on the axis, unknowns (x₁, y₁, g₁, x₂, g₂);
/// - N=5: (P₁, P₂, P₂', P₁', P₅), unknowns (x₁, y₁, g₁, x₂, y₂, g₂).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricFamily {
    pub n: usize,
}

impl SymmetricFamily {
    pub fn new(n: usize) -> Result<Self> {
        if !(3..=5).contains(&n) {
            return Err(Error::Invalid(format!("symmetric family needs N in 3..=5, got {n}")));
        }
        Ok(SymmetricFamily { n })
    }

    pub fn unknowns(&self) -> usize {
        [3, 5, 6][self.n - 3]
    }

    /// (pulse, component) of each unknown.
    fn slots(&self) -> &'static [(usize, usize)] {
        match self.n {
            3 => &[(0, 0), (0, 1), (0, 2)],
            4 => &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 2)],
            _ => &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)],
        }
    }

    /// (pulse, mirror) pairs.
    fn mirrors(&self) -> &'static [(usize, usize)] {
        match self.n {
            3 => &[(0, 1)],
            4 => &[(0, 2)],
            _ => &[(1, 2), (0, 3)],
        }
    }

    /// Pulses other than N that sit on the symmetry axis.
    fn axis(&self) -> &'static [usize] {
        match self.n {
            4 => &[1],
            _ => &[],
        }
    }

    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut s = vec![0.0; 3 * n];
        s[3 * (n - 1)..].copy_from_slice(&PINNED);
        for (&(p, c), v) in self.slots().iter().zip(u) {
            s[3 * p + c] = *v;
        }
        for &(a, b) in self.mirrors() {
            s[3 * b] = s[3 * a];
            s[3 * b + 1] = 2.0 * PINNED[1] - s[3 * a + 1];
            s[3 * b + 2] = s[3 * a + 2];
        }
        for &a in self.axis() {
            s[3 * a + 1] = PINNED[1];
        }
        s
    }

    /// Free unknowns of a symmetric state after moving pulse N to the pin.
    pub fn restrict(&self, state: &[f64]) -> Vec<f64> {
        let last = 3 * (self.n - 1);
        self.slots().iter().map(|&(p, c)| state[3 * p + c] - state[last + c] + PINNED[c]).collect()
    }

    /// Velocities of the unknowns relative to pulse N.
    pub fn relative(&self, xdot: &[f64]) -> Vec<f64> {
        let last = 3 * (self.n - 1);
        self.slots().iter().map(|&(p, c)| xdot[3 * p + c] - xdot[last + c]).collect()
    }

    /// Restore exact mirror symmetry about the horizontal line through pulse N.
    pub fn project(&self, s: &mut [f64]) {
        let axis_y = s[3 * (self.n - 1) + 1];
        for &(a, b) in self.mirrors() {
            let x = 0.5 * (s[3 * a] + s[3 * b]);
            let dy = 0.5 * ((s[3 * a + 1] - axis_y) - (s[3 * b + 1] - axis_y));
            let g = 0.5 * (s[3 * a + 2] + s[3 * b + 2]);
            s[3 * a] = x;
            s[3 * b] = x;
            s[3 * a + 1] = axis_y + dy;
            s[3 * b + 1] = axis_y - dy;
            s[3 * a + 2] = g;
            s[3 * b + 2] = g;
        }
        for &a in self.axis() {
            s[3 * a + 1] = axis_y;
        }
    }
}

/// Vertex k of a regular n-gon with side `side`, vertex 0 at the pinned pulse
/// and the centre on the −x side.
fn polygon_vertex(n: usize, side: f64, k: usize) -> (f64, f64) {
    let r = side / (2.0 * (PI / n as f64).sin());
    let a = 2.0 * PI * k as f64 / n as f64;
    (PINNED[0] - r + r * a.cos(), r * a.sin())
}

/// Regular-geometry starting guesses for the stable symmetric states:
/// a triangle (N=3), a triangle around a central pulse (N=4), a pentagon (N=5).
pub fn geometric_guess(n: usize) -> Result<Vec<f64>> {
    Ok(match n {
        3 => {
            let (x, y) = polygon_vertex(3, 2.5, 1);
            vec![x, y, FRAC_PI_2]
        }
        4 => {
            let r = 2.2;
            let cx = PINNED[0] - r;
            vec![cx - 0.5 * r, r * 3f64.sqrt() / 2.0, -0.75 * PI, cx, FRAC_PI_2]
        }
        5 => {
            let (x1, y1) = polygon_vertex(5, 2.2, 1);
            let (x2, y2) = polygon_vertex(5, 2.2, 2);
            vec![x1, y1, 0.75 * PI, x2, y2, -0.75 * PI]
        }
        _ => return Err(Error::Invalid(format!("no geometric guess for N = {n}"))),
    })
}

/// Guesses for three pulses on the vertical line through the pinned pulse.
pub fn lined_up_guesses() -> Vec<Vec<f64>> {
    vec![vec![PINNED[0], 1.4, PI], vec![PINNED[0], 2.4, -FRAC_PI_2], vec![PINNED[0], 3.3, 0.0]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pos,
    Ps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub n: usize,
    pub mode: Mode,
    pub values: Vec<f64>,
    pub j_max: f64,
    pub eigenvalues: Vec<[f64; 2]>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    pub max_iter: usize,
    pub fd_step: f64,
    pub tol: f64,
    pub min_distance: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { max_iter: 40, fd_step: 1e-6, tol: 1e-8, min_distance: 1.0 }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Central-difference Jacobian of a map Rⁿ → Rⁿ.
pub fn fd_jacobian<F>(f: &mut F, u: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = u.len();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[j] += h;
        dn[j] -= h;
        let fp = f(&up)?;
        let fm = f(&dn)?;
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Newton iteration for a relative equilibrium of the symmetric family.
///
/// `rhs` maps a full slow state to Ẋ.
pub fn newton_fixed_point<F>(family: SymmetricFamily, mode: Mode, guess: &[f64], mut rhs: F, settings: &NewtonSettings) -> Result<FixedPointRecord>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut residual = |u: &[f64]| -> Result<Vec<f64>> {
        let s = family.expand(u);
        let d = crate::kernel::PulseConfiguration::from_state(&s)?.min_separation();
        if d < settings.min_distance {
            return Err(Error::LeftWeakRegime { distance: d });
        }
        Ok(family.relative(&rhs(&s)?))
    };
    let mut u = guess.to_vec();
    let mut r = residual(&u)?;
    let mut it = 0;
    // Velocities are exponentially small; stop at round-off of their scale.
    let scale = max_abs(&r).max(1e-300);
    while it < settings.max_iter {
        it += 1;
        let jac = fd_jacobian(&mut residual, &u, settings.fd_step)?;
        let step = jac.lu().solve(&nalgebra::DVector::from_column_slice(&r)).ok_or(Error::NewtonDiverged { iterations: it, residual: max_abs(&r) })?;
        let mut lambda = 1.0;
        let current = max_abs(&r);
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a - lambda * b).collect();
            match residual(&trial) {
                Ok(rt) if max_abs(&rt) < current || lambda < 1e-3 => {
                    u = trial;
                    r = rt;
                    break;
                }
                Err(e) if lambda < 1e-3 => return Err(e),
                _ => lambda *= 0.5,
            }
        }
        if max_abs(&r) <= 1e-12 * scale.max(1e-6) || max_abs(step.as_slice()) * lambda < 1e-12 {
            break;
        }
    }
    for (&(_, c), v) in family.slots().iter().zip(u.iter_mut()) {
        if c == 2 {
            *v = wrap(*v);
        }
    }
    let res = max_abs(&r);
    if !(res <= settings.tol) {
        return Err(Error::NewtonDiverged { iterations: it, residual: res });
    }
    let jac = fd_jacobian(&mut residual, &u, settings.fd_step)?;
    let eig = jac.complex_eigenvalues();
    let eigenvalues: Vec<[f64; 2]> = eig.iter().map(|z| [z.re, z.im]).collect();
    let j_max = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(FixedPointRecord { n: family.n, mode, values: u, j_max, eigenvalues, residual: res, iterations: it })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    None = 0,
    FixedPointN = 1,
    FixedPoint3 = 2,
    LimitCycle = 3,
    Annihilated = 4,
}

impl Outcome {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSettings {
    /// Fixed-point match tolerance on every difference coordinate.
    pub tol: f64,
    /// Looser tolerance for finding the N=3 triad inside larger runs.
    pub subset_tol: f64,
    /// Fraction of the run used by the limit-cycle test.
    pub trailing_fraction: f64,
    /// Minimal oscillation amplitude, in units of `tol`.
    pub amplitude_factor: f64,
    /// Max state mismatch between consecutive section crossings.
    pub recurrence_tol: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        ClassifierSettings { tol: 1e-4, subset_tol: 1e-3, trailing_fraction: 0.2, amplitude_factor: 10.0, recurrence_tol: 1e-2 }
    }
}

fn wrap(g: f64) -> f64 {
    crate::kernel::wrap_phase(g)
}

/// Difference coordinates of every pulse relative to pulse N.
pub fn differences(state: &[f64]) -> Vec<f64> {
    let n = state.len() / 3;
    let last = &state[3 * (n - 1)..];
    (0..n - 1).flat_map(|k| [state[3 * k] - last[0], state[3 * k + 1] - last[1], wrap(state[3 * k + 2] - last[2])]).collect()
}

fn matches_record(family: &SymmetricFamily, state: &[f64], rec: &FixedPointRecord, tol: f64) -> bool {
    let u = family.restrict(state);
    family.slots().iter().zip(u.iter().zip(&rec.values)).all(|(&(_, c), (a, b))| {
        let d = if c == 2 { wrap(a - b) } else { a - b };
        d.abs() <= tol
    })
}

/// Invariants of the N=3 triad: (apex distance, base distance, apex phase offset).
fn triad_shape(rec: &FixedPointRecord) -> [f64; 3] {
    let s = SymmetricFamily { n: 3 }.expand(&rec.values);
    let apex = (s[0] - s[6]).hypot(s[1] - s[7]);
    let base = (s[1] - s[4]).abs();
    [apex, base, wrap(s[2] - s[8])]
}

/// Whether some three pulses of `state` form the N=3 triad.
fn contains_triad(state: &[f64], shape: [f64; 3], tol: f64) -> bool {
    let n = state.len() / 3;
    let p = |k: usize| (state[3 * k], state[3 * k + 1], state[3 * k + 2]);
    let dist = |a: usize, b: usize| (p(a).0 - p(b).0).hypot(p(a).1 - p(b).1);
    for apex in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                if i == apex || j == apex {
                    continue;
                }
                let ok = (dist(apex, i) - shape[0]).abs() <= tol
                    && (dist(apex, j) - shape[0]).abs() <= tol
                    && (dist(i, j) - shape[1]).abs() <= tol
                    && wrap(p(i).2 - p(apex).2 - shape[2]).abs() <= tol
                    && wrap(p(j).2 - p(apex).2 - shape[2]).abs() <= tol;
                if ok {
                    return true;
                }
            }
        }
    }
    false
}

/// Trailing-window limit-cycle test on the difference coordinates.
pub fn is_limit_cycle(t: &[f64], states: &[Vec<f64>], settings: &ClassifierSettings) -> bool {
    let Some(&t_end) = t.last() else { return false };
    let start = t_end - settings.trailing_fraction * (t_end - t[0]);
    let window: Vec<(f64, Vec<f64>)> = t.iter().zip(states).filter(|(ti, _)| **ti >= start).map(|(ti, s)| (*ti, differences(s))).collect();
    if window.len() < 8 {
        return false;
    }
    let dim = window[0].1.len();
    let (mut best, mut amp) = (0, 0.0);
    for c in 0..dim {
        let lo = window.iter().map(|w| w.1[c]).fold(f64::INFINITY, f64::min);
        let hi = window.iter().map(|w| w.1[c]).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > amp {
            amp = hi - lo;
            best = c;
        }
    }
    if amp < settings.amplitude_factor * settings.tol {
        return false;
    }
    let lo = window.iter().map(|w| w.1[best]).fold(f64::INFINITY, f64::min);
    let mid = lo + 0.5 * amp;
    // Upward section crossings, linearly interpolated.
    let mut crossings: Vec<Vec<f64>> = Vec::new();
    for k in 1..window.len() {
        let (a, b) = (window[k - 1].1[best] - mid, window[k].1[best] - mid);
        if a < 0.0 && b >= 0.0 {
            let th = a / (a - b);
            crossings.push((0..dim).map(|c| window[k - 1].1[c] + th * (window[k].1[c] - window[k - 1].1[c])).collect());
        }
    }
    if crossings.len() < 2 {
        return false;
    }
    crossings.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| (a - b).abs() <= settings.recurrence_tol))
}

/// Hierarchical outcome of a finished run.
pub fn classify_outcome(
    family: &SymmetricFamily,
    t: &[f64],
    states: &[Vec<f64>],
    annihilated: bool,
    own: Option<&FixedPointRecord>,
    triad: Option<&FixedPointRecord>,
    settings: &ClassifierSettings,
) -> Outcome {
    if annihilated {
        return Outcome::Annihilated;
    }
    let Some(last) = states.last() else { return Outcome::None };
    if let Some(rec) = own {
        if rec.n == family.n && matches_record(family, last, rec, settings.tol) {
            return if family.n == 3 { Outcome::FixedPoint3 } else { Outcome::FixedPointN };
        }
    }
    if let Some(tr) = triad {
        let hit = if family.n == 3 { matches_record(family, last, tr, settings.tol) } else { contains_triad(last, triad_shape(tr), settings.subset_tol) };
        if hit {
            return Outcome::FixedPoint3;
        }
    }
    if is_limit_cycle(t, states, settings) {
        return Outcome::LimitCycle;
    }
    Outcome::None
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasinSettings {
    pub t_end: f64,
    /// Integration tolerance of the adaptive scheme.
    pub err: f64,
    pub sample_dt: f64,
    pub classifier: ClassifierSettings,
}

impl Default for BasinSettings {
    fn default() -> Self {
        BasinSettings { t_end: 6e4, err: 1e-10, sample_dt: 10.0, classifier: ClassifierSettings::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinCell {
    /// (r₁ˣ − r_Nˣ, r₁ʸ − r_Nʸ, g₁ − g_N) at t = 0.
    pub offsets: [f64; 3],
    pub outcome: Outcome,
    /// Time after which the state stayed within tolerance of its target.
    pub t_converge: Option<f64>,
    pub t_final: f64,
}

/// Integrate one symmetric start and classify it.
pub fn run_cell<F>(
    family: SymmetricFamily,
    start: &[f64],
    rhs: F,
    own: Option<&FixedPointRecord>,
    triad: Option<&FixedPointRecord>,
    settings: &BasinSettings,
) -> (BasinCell, crate::ode::Trajectory)
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let y0 = family.expand(start);
    let project = move |s: &mut [f64]| family.project(s);
    let mut opts = Options::new(Scheme::adaptive(settings.err), settings.t_end);
    opts.sample_dt = Some(settings.sample_dt);
    opts.project = Some(&project);
    let sol = integrate(rhs, 0.0, &y0, opts);
    let annihilated = matches!(sol.stop, Stop::Failed(Error::TooClose { .. }));
    let failed = matches!(sol.stop, Stop::Failed(_));
    let traj = sol.trajectory;
    let outcome = if failed && !annihilated {
        Outcome::None
    } else {
        classify_outcome(&family, &traj.t, &traj.y, annihilated, own, triad, &settings.classifier)
    };
    let target = match outcome {
        Outcome::FixedPointN => own,
        Outcome::FixedPoint3 if family.n == 3 => triad.or(own),
        _ => None,
    };
    let t_converge = target.map(|rec| {
        let mut tc = 0.0;
        for (t, s) in traj.t.iter().zip(&traj.y) {
            if !matches_record(&family, s, rec, settings.classifier.tol) {
                tc = *t;
            }
        }
        tc
    });
    let d = differences(&y0);
    let cell = BasinCell { offsets: [d[0], d[1], d[2]], outcome, t_converge, t_final: traj.t.last().copied().unwrap_or(0.0) };
    (cell, traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_is_mirror_symmetric() {
        for n in 3..=5 {
            let f = SymmetricFamily::new(n).unwrap();
            let u: Vec<f64> = (0..f.unknowns()).map(|k| 0.3 + k as f64 * 0.7).collect();
            let s = f.expand(&u);
            assert_eq!(&s[3 * (n - 1)..], &PINNED);
            for &(a, b) in f.mirrors() {
                assert_eq!(s[3 * a], s[3 * b]);
                assert_eq!(s[3 * a + 1], -s[3 * b + 1]);
                assert_eq!(s[3 * a + 2], s[3 * b + 2]);
            }
            for (a, b) in f.restrict(&s).iter().zip(&u) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn projection_restores_symmetry() {
        let f = SymmetricFamily::new(5).unwrap();
        let mut s = f.expand(&[-0.02, 1.38, 1.62, -2.42, 1.52, -2.98]);
        s[0] += 1e-9;
        s[4] += 3e-9;
        s[14] += 5.0;
        f.project(&mut s);
        let mut again = s.clone();
        f.project(&mut again);
        assert_eq!(s, again);
        assert_eq!(s[0], s[9]);
        assert_eq!(s[1] - s[13], s[13] - s[10]);
        assert_eq!(s[3], s[6]);
        assert_eq!(s[4] - s[13], s[13] - s[7]);
    }

    #[test]
    fn constant_trajectory_at_target() {
        let f = SymmetricFamily::new(3).unwrap();
        let rec = FixedPointRecord { n: 3, mode: Mode::Pos, values: vec![-0.13, 1.37, 1.72], j_max: -1.0, eigenvalues: vec![], residual: 0.0, iterations: 0 };
        let s = f.expand(&rec.values);
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let states = vec![s; 10];
        let out = classify_outcome(&f, &t, &states, false, None, Some(&rec), &ClassifierSettings::default());
        assert_eq!(out, Outcome::FixedPoint3);
    }

    #[test]
    fn detects_periodic_oscillation() {
        let t: Vec<f64> = (0..4000).map(|k| k as f64).collect();
        let states: Vec<Vec<f64>> = t.iter().map(|&t| vec![0.5 * (t / 50.0).sin(), 1.0, 0.2, 2.0 - 1e-4 * t, 0.0, 0.0]).collect();
        assert!(is_limit_cycle(&t, &states, &ClassifierSettings::default()));
        let decaying: Vec<Vec<f64>> = t.iter().map(|&t| vec![(-t / 100.0).exp(), 1.0, 0.2, 2.0, 0.0, 0.0]).collect();
        assert!(!is_limit_cycle(&t, &decaying, &ClassifierSettings::default()));
    }
}
