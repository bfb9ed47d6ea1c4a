//! Axisymmetric steady pulse: α(V'' + V'/r) + βV + f(V) = 0 with Im β unknown.

use crate::cheb::ChebGrid;
use crate::params::{Dispersion, ModelParams};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSettings {
    pub length: f64,
    pub n_colloc: usize,
    pub max_iter: usize,
    pub guess_amplitude: f64,
    pub guess_width: f64,
    /// Converged profiles with max|V| below this are rejected as trivial branches.
    pub min_amplitude: f64,
}

impl Default for PulseSettings {
    fn default() -> Self {
        PulseSettings {
            length: 15.0,
            n_colloc: 256,
            max_iter: 50,
            guess_amplitude: 5.0,
            guess_width: 0.2,
            min_amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RadialProfile {
    pub length: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<C64>,
    /// Polynomial degree of the collocation interpolant.
    pub interpolation_order: usize,
    /// Max interior residual relative to max|V|.
    pub residual_norm: f64,
    pub origin_residual: f64,
    pub robin_residual: f64,
}

impl RadialProfile {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct PulseSolution {
    /// Parameters with Im β replaced by the solved value.
    pub params: ModelParams,
    pub dispersion: Dispersion,
    pub profile: RadialProfile,
    pub grid: ChebGrid,
    pub iterations: usize,
}

impl PulseSolution {
    pub fn beta_imag(&self) -> f64 {
        self.params.beta.im
    }
}

fn decay_rate(params: &ModelParams, beta: C64) -> C64 {
    let root = (-beta / params.alpha).sqrt();
    if root.re >= 0.0 {
        root
    } else {
        -root
    }
}

struct System<'a> {
    grid: &'a ChebGrid,
    params: &'a ModelParams,
    rinv: Vec<f64>,
}

impl<'a> System<'a> {
    fn new(grid: &'a ChebGrid, params: &'a ModelParams) -> Self {
        let rinv = grid.r.iter().map(|&r| if r > 0.0 { 1.0 / r } else { 0.0 }).collect();
        System { grid, params, rinv }
    }

    fn residual(&self, v: &[C64], beta_i: f64) -> DVector<f64> {
        let n = self.grid.len();
        let last = n - 1;
        let beta = C64::new(self.params.beta.re, beta_i);
        let lam = decay_rate(self.params, beta);
        let v1 = self.grid.diff(v);
        let v2 = self.grid.diff(&v1);
        let mut f = DVector::zeros(2 * n + 1);
        for i in 0..n {
            let res = if i == 0 {
                v1[0]
            } else if i == last {
                v1[last] + lam * v[last]
            } else {
                self.params.alpha * (v2[i] + v1[i] * self.rinv[i]) + beta * v[i] + self.params.nonlinearity(v[i])
            };
            f[i] = res.re;
            f[n + i] = res.im;
        }
        f[2 * n] = v[0].im;
        f
    }

    fn jacobian(&self, v: &[C64], beta_i: f64) -> DMatrix<f64> {
        let n = self.grid.len();
        let last = n - 1;
        let beta = C64::new(self.params.beta.re, beta_i);
        let lam = decay_rate(self.params, beta);
        let alpha = self.params.alpha;
        let mut j = DMatrix::<f64>::zeros(2 * n + 1, 2 * n + 1);
        for i in 1..last {
            let (a, b) = self.params.linearization(v[i]);
            for k in 0..n {
                let op = alpha * (self.grid.d2[(i, k)] + self.rinv[i] * self.grid.d1[(i, k)]);
                j[(i, k)] = op.re;
                j[(i, n + k)] = -op.im;
                j[(n + i, k)] = op.im;
                j[(n + i, n + k)] = op.re;
            }
            let diag = beta + a;
            j[(i, i)] += diag.re + b.re;
            j[(i, n + i)] += -diag.im + b.im;
            j[(n + i, i)] += diag.im + b.im;
            j[(n + i, n + i)] += diag.re - b.re;
            // ∂/∂β_i of βV is iV.
            let dcol = C64::new(0.0, 1.0) * v[i];
            j[(i, 2 * n)] = dcol.re;
            j[(n + i, 2 * n)] = dcol.im;
        }
        for &row in &[0, last] {
            for k in 0..n {
                let d = self.grid.d1[(row, k)];
                j[(row, k)] = d;
                j[(n + row, n + k)] = d;
            }
        }
        j[(last, last)] += lam.re;
        j[(last, n + last)] -= lam.im;
        j[(n + last, last)] += lam.im;
        j[(n + last, n + last)] += lam.re;
        let dlam = C64::new(0.0, -1.0) / (2.0 * alpha * lam);
        let dcol = dlam * v[last];
        j[(last, 2 * n)] = dcol.re;
        j[(n + last, 2 * n)] = dcol.im;
        j[(2 * n, n)] = 1.0;
        j
    }
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Damped Newton solve of the radial steady equation with the gauge Im V(0) = 0.
///
/// `guess` must live on the collocation grid of `settings`; when absent the
/// sech profile from the settings is used.
pub fn solve_steady_pulse(params: &ModelParams, settings: &PulseSettings, guess: Option<&[C64]>) -> Result<PulseSolution> {
    if settings.n_colloc < 32 {
        return Err(Error::Invalid(format!("n_colloc = {} is below 32", settings.n_colloc)));
    }
    params.dispersion()?;
    let grid = ChebGrid::new(settings.n_colloc, settings.length);
    let n = grid.len();
    let mut v: Vec<C64> = match guess {
        Some(g) => {
            if g.len() != n {
                return Err(Error::Invalid(format!("guess has {} nodes, grid has {}", g.len(), n)));
            }
            g.to_vec()
        }
        None => grid
            .r
            .iter()
            .map(|&r| C64::new(settings.guess_amplitude / (r / settings.guess_width).cosh(), 0.0))
            .collect(),
    };
    let mut beta_i = params.beta.im;
    let sys = System::new(&grid, params);
    let mut iterations = 0;
    let mut converged = false;
    let mut fnorm = f64::INFINITY;
    while iterations < settings.max_iter {
        let f = sys.residual(&v, beta_i);
        fnorm = f.norm();
        let scale = max_abs(&v).max(1.0);
        if f.amax() < 1e-11 * scale {
            converged = true;
            break;
        }
        let jac = sys.jacobian(&v, beta_i);
        let step = match jac.lu().solve(&(-&f)) {
            Some(s) => s,
            None => break,
        };
        // The residual floor grows with n_colloc; a round-off sized step also ends the solve.
        if step.amax() < 1e-10 * scale {
            v = (0..n).map(|k| v[k] + C64::new(step[k], step[n + k])).collect();
            beta_i += step[2 * n];
            fnorm = sys.residual(&v, beta_i).norm();
            iterations += 1;
            converged = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-4 {
            let trial: Vec<C64> = (0..n).map(|k| v[k] + C64::new(step[k], step[n + k]) * t).collect();
            let trial_beta = beta_i + t * step[2 * n];
            let fn_trial = sys.residual(&trial, trial_beta).norm();
            if fn_trial.is_finite() && fn_trial < (1.0 - 1e-4 * t) * fnorm {
                accepted = Some((trial, trial_beta));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((nv, nb)) => {
                v = nv;
                beta_i = nb;
            }
            None => break,
        }
        if t == 1.0 && step.amax() < 1e-12 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NewtonDiverged { iterations, residual: fnorm });
    }
    if v[0].re < 0.0 {
        v.iter_mut().for_each(|z| *z = -*z);
    }
    let amp = max_abs(&v);
    if !(amp >= settings.min_amplitude) {
        return Err(Error::TrivialBranch { amplitude: amp });
    }
    let last = n - 1;
    let ratio = v[last].norm() / amp;
    if ratio > 1e-4 {
        return Err(Error::TailNotResolved { ratio });
    }
    let solved = params.with_beta_imag(beta_i);
    let dispersion = solved.dispersion()?;
    let f = sys.residual(&v, beta_i);
    let interior = (1..last)
        .map(|i| C64::new(f[i], f[n + i]).norm())
        .fold(0.0, f64::max);
    let profile = RadialProfile {
        length: settings.length,
        nodes: grid.r.clone(),
        values: v,
        interpolation_order: settings.n_colloc,
        residual_norm: interior / amp,
        origin_residual: C64::new(f[0], f[n]).norm(),
        robin_residual: C64::new(f[last], f[n + last]).norm(),
    };
    Ok(PulseSolution { params: solved, dispersion, profile, grid, iterations })
}
