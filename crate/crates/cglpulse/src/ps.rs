//! Projected system with the stationary remainder correction.
//!
//! At each slow state the remainder w solves 𝕃w = H·Ẋ₀ − Φ on a Cartesian
//! grid centred on the pulse centroid, where 𝕃 is the linearization about
//! U = ΣV_k, H stacks the shifted direct modes and Ẋ₀ = C₀⁻¹F₁. The corrected
//! velocities are Ẋ = C⁻¹F with the w-dependent C and F.

use crate::dst::{dst2, Dst1};
use crate::gmres::{gmres, GmresReport, GmresSettings};
use crate::grid::{Field2D, GridSpec, Quadrature};
use crate::kernel::{interaction_function, FieldRequest, PulseConfiguration, PulseFields};
use crate::params::ModelParams;
use crate::radial::PulseTables;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsSettings {
    /// Grid half-length L; nodes at spacing L/m on [−L, L]² about the centroid.
    pub half_length: f64,
    pub m: usize,
    pub gmres: GmresSettings,
    /// Required dx·λ_r bound.
    pub max_dx_lambda: f64,
    pub min_distance: f64,
    pub max_condition: f64,
}

impl Default for PsSettings {
    fn default() -> Self {
        PsSettings {
            half_length: 6.0,
            m: 150,
            gmres: GmresSettings::default(),
            max_dx_lambda: 0.25,
            min_distance: crate::law::DEFAULT_MIN_DISTANCE,
            max_condition: 1e8,
        }
    }
}

/// z ↦ α∇²z + (β + A)z + B z̄ on interior nodes, zero Dirichlet data.
#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub spec: GridSpec,
    pub alpha: C64,
    pub beta: C64,
    /// Pointwise coefficients on interior nodes.
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

impl LinearizedOperator {
    /// Linearization about the full-grid field u.
    pub fn assemble(params: &ModelParams, u: &[C64], spec: GridSpec) -> Self {
        let n = spec.points();
        let mi = n - 2;
        let mut a = Vec::with_capacity(mi * mi);
        let mut b = Vec::with_capacity(mi * mi);
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let (lin, conj) = params.linearization(u[spec.index(i, j)]);
                a.push(lin);
                b.push(conj);
            }
        }
        LinearizedOperator { spec, alpha: params.alpha, beta: params.beta, a, b }
    }

    pub fn interior(&self) -> usize {
        self.spec.points() - 2
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mi = self.interior();
        let h2 = 1.0 / (self.spec.dx() * self.spec.dx());
        let at = |i: isize, j: isize| -> C64 {
            if i < 0 || j < 0 || i >= mi as isize || j >= mi as isize {
                C64::default()
            } else {
                x[i as usize * mi + j as usize]
            }
        };
        for i in 0..mi {
            for j in 0..mi {
                let k = i * mi + j;
                let (ii, jj) = (i as isize, j as isize);
                let lap = (at(ii - 1, jj) + at(ii + 1, jj) + at(ii, jj - 1) + at(ii, jj + 1) - 4.0 * x[k]) * h2;
                y[k] = self.alpha * lap + (self.beta + self.a[k]) * x[k] + self.b[k] * x[k].conj();
            }
        }
    }
}

/// Exact inverse of the discrete α∇² + β by a 2D sine transform.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    dst: Dst1,
    inv_eig: Vec<C64>,
}

impl Preconditioner {
    pub fn new(spec: &GridSpec, alpha: C64, beta: C64) -> Self {
        let mi = spec.points() - 2;
        let h2 = spec.dx() * spec.dx();
        let mu: Vec<f64> = (1..=mi).map(|k| (2.0 * (std::f64::consts::PI * k as f64 / (mi + 1) as f64).cos() - 2.0) / h2).collect();
        let dst = Dst1::new(mi);
        let s = dst.inverse_scale();
        let mut inv_eig = Vec::with_capacity(mi * mi);
        for p in &mu {
            for q in &mu {
                inv_eig.push(s * s / (alpha * (p + q) + beta));
            }
        }
        Preconditioner { dst, inv_eig }
    }

    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        out.copy_from_slice(v);
        dst2(&self.dst, out);
        for (o, e) in out.iter_mut().zip(&self.inv_eig) {
            *o *= e;
        }
        dst2(&self.dst, out);
    }
}

/// Everything computed for one corrected right-hand side.
#[derive(Clone, Debug)]
pub struct CorrectionResult {
    pub x_dot: Vec<f64>,
    /// Leading-order velocities F₁ (unit C).
    pub f1: Vec<f64>,
    pub c: DMatrix<f64>,
    pub f: Vec<f64>,
    pub w: Field2D,
    /// Sum of the pulse fields U = Σ V_k.
    pub u: Field2D,
    pub gmres: GmresReport,
    /// ⟨w, ψ_{a,k}⟩ in slow-state order.
    pub orthogonality: Vec<f64>,
    pub condition: f64,
}

/// Corrected slow dynamics with a warm-started remainder solve.
pub struct PsSolver<'a> {
    pub params: ModelParams,
    pub tables: &'a PulseTables,
    pub settings: PsSettings,
    precond: Preconditioner,
    quad_weights: Quadrature,
    warm: Option<Vec<C64>>,
    pub evaluations: usize,
}

impl<'a> PsSolver<'a> {
    pub fn new(params: ModelParams, lambda_r: f64, tables: &'a PulseTables, settings: PsSettings) -> Result<Self> {
        let spec = GridSpec::new([0.0, 0.0], settings.half_length, settings.m);
        let required = settings.max_dx_lambda / lambda_r;
        if spec.dx() > required {
            return Err(Error::GridTooCoarse { dx: spec.dx(), required });
        }
        if settings.m < 16 {
            return Err(Error::Invalid(format!("grid half-count m = {} is below 16", settings.m)));
        }
        let precond = Preconditioner::new(&spec, params.alpha, params.beta);
        let quad_weights = Quadrature::new(spec)?;
        Ok(PsSolver { params, tables, settings, precond, quad_weights, warm: None, evaluations: 0 })
    }

    /// Ẋ = C⁻¹F at a slow state.
    pub fn rhs(&mut self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(state)?.x_dot)
    }

    pub fn evaluate(&mut self, state: &[f64]) -> Result<CorrectionResult> {
        let config = PulseConfiguration::from_state(state)?;
        let nk = config.len();
        if nk > 1 {
            let d = config.min_separation();
            if !(d >= self.settings.min_distance) {
                return Err(Error::TooClose { distance: d });
            }
        }
        self.evaluations += 1;
        let quad = self.quad_weights.recentred(config.centroid());
        let spec = quad.spec;
        let req = FieldRequest { phi: true, dpsi: true };
        let fields: Vec<PulseFields> = config.pulses.iter().map(|p| PulseFields::sample(self.tables, p, &spec, req)).collect();
        let npts = spec.len();
        let mut u = vec![C64::default(); npts];
        for f in &fields {
            for (ui, vi) in u.iter_mut().zip(&f.v) {
                *ui += vi;
            }
        }
        let vs: Vec<&[C64]> = fields.iter().map(|f| f.v.as_slice()).collect();
        let phi_int = interaction_function(&self.params, &vs);

        let dim = 3 * nk;
        let ip = |a: &[C64], b: &[C64]| quad.inner_unchecked(a, b);
        let mut f1 = vec![0.0; dim];
        let mut c0 = DMatrix::<f64>::zeros(dim, dim);
        for (k, fk) in fields.iter().enumerate() {
            for a in 0..3 {
                f1[3 * k + a] = ip(&phi_int, &fk.psi[a]);
                for (j, fj) in fields.iter().enumerate() {
                    let phis = fj.phi.as_ref().expect("requested");
                    for bb in 0..3 {
                        c0[(3 * k + a, 3 * j + bb)] = ip(&phis[bb], &fk.psi[a]);
                    }
                }
            }
        }
        let x0 = solve_small(&c0, &f1, self.settings.max_condition)?.0;

        // Right-hand side H·Ẋ₀ − Φ on interior nodes.
        let n = spec.points();
        let mi = n - 2;
        let mut rhs = vec![C64::default(); mi * mi];
        for i in 1..n - 1 {
            for jx in 1..n - 1 {
                let g = spec.index(i, jx);
                let mut acc = -phi_int[g];
                for (j, fj) in fields.iter().enumerate() {
                    let phis = fj.phi.as_ref().expect("requested");
                    for bb in 0..3 {
                        acc += phis[bb][g] * x0[3 * j + bb];
                    }
                }
                rhs[(i - 1) * mi + (jx - 1)] = acc;
            }
        }
        let op = LinearizedOperator::assemble(&self.params, &u, spec);
        let mut wi = match self.warm.take() {
            Some(w) if w.len() == rhs.len() => w,
            _ => vec![C64::default(); rhs.len()],
        };
        let report = gmres(|x, y| op.apply(x, y), |v, o| self.precond.apply(v, o), &rhs, &mut wi, &self.settings.gmres)?;
        let mut w = vec![C64::default(); npts];
        for i in 1..n - 1 {
            for jx in 1..n - 1 {
                w[spec.index(i, jx)] = wi[(i - 1) * mi + (jx - 1)];
            }
        }
        self.warm = Some(wi);

        // F = ⟨G + (f'(U) − f'(V_k))w + Φ, ψ_{a,k}⟩.
        let p = &self.params;
        let mut base = vec![C64::default(); npts];
        for g in 0..npts {
            let (la, lb) = p.linearization(u[g]);
            let fpw = la * w[g] + lb * w[g].conj();
            base[g] = p.nonlinearity(u[g] + w[g]) - fpw - p.nonlinearity(u[g]) + fpw + phi_int[g];
        }
        let mut fvec = vec![0.0; dim];
        let mut c = c0.clone();
        let mut orth = vec![0.0; dim];
        let iw: Vec<C64> = w.iter().map(|z| C64::new(-z.im, z.re)).collect();
        for (k, fk) in fields.iter().enumerate() {
            let own: Vec<C64> = (0..npts)
                .map(|g| {
                    let (la, lb) = p.linearization(fk.v[g]);
                    base[g] - la * w[g] - lb * w[g].conj()
                })
                .collect();
            let dpsi = fk.dpsi.as_ref().expect("requested");
            for a in 0..3 {
                let row = 3 * k + a;
                fvec[row] = ip(&own, &fk.psi[a]);
                c[(row, 3 * k)] += ip(&w, &dpsi[a][0]);
                c[(row, 3 * k + 1)] += ip(&w, &dpsi[a][1]);
                c[(row, 3 * k + 2)] += ip(&iw, &fk.psi[a]);
                orth[row] = ip(&w, &fk.psi[a]);
            }
        }
        let (x_dot, condition) = solve_small(&c, &fvec, self.settings.max_condition)?;
        Ok(CorrectionResult { x_dot, f1, c, f: fvec, w: Field2D { spec, values: w }, u: Field2D { spec, values: u }, gmres: report, orthogonality: orth, condition })
    }
}

/// Solve a small dense system, refusing ill-conditioned matrices.
fn solve_small(c: &DMatrix<f64>, f: &[f64], max_condition: f64) -> Result<(Vec<f64>, f64)> {
    let sv = c.clone().singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= max_condition) {
        return Err(Error::SingularC { condition });
    }
    let x = c.clone().lu().solve(&DVector::from_column_slice(f)).ok_or(Error::SingularC { condition })?;
    Ok((x.iter().cloned().collect(), condition))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_sine_mode() {
        let spec = GridSpec::new([0.0, 0.0], 2.0, 16);
        let p = ModelParams::parameters1();
        let u = vec![C64::default(); spec.len()];
        let op = LinearizedOperator::assemble(&p, &u, spec);
        let mi = op.interior();
        let (kx, ky) = (2usize, 3usize);
        let mode: Vec<C64> = (0..mi * mi)
            .map(|idx| {
                let (i, j) = (idx / mi + 1, idx % mi + 1);
                let s = |k: usize, i: usize| (std::f64::consts::PI * (k * i) as f64 / (mi + 1) as f64).sin();
                C64::new(s(kx, i) * s(ky, j), 0.0)
            })
            .collect();
        let mut y = vec![C64::default(); mi * mi];
        op.apply(&mode, &mut y);
        let h2 = spec.dx() * spec.dx();
        let mu = |k: usize| (2.0 * (std::f64::consts::PI * k as f64 / (mi + 1) as f64).cos() - 2.0) / h2;
        let eig = p.alpha * (mu(kx) + mu(ky)) + p.beta;
        for (yi, mi_) in y.iter().zip(&mode) {
            assert!((yi - eig * mi_).norm() < 1e-10 * eig.norm());
        }
        // Exact inverse of the constant-coefficient part.
        let pre = Preconditioner::new(&spec, p.alpha, p.beta);
        let mut back = vec![C64::default(); mi * mi];
        pre.apply(&y, &mut back);
        for (b, m) in back.iter().zip(&mode) {
            assert!((b - m).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugate_coupling_is_real_linear() {
        let spec = GridSpec::new([0.0, 0.0], 1.0, 4);
        let p = ModelParams::parameters1();
        let u: Vec<C64> = (0..spec.len()).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
        let op = LinearizedOperator::assemble(&p, &u, spec);
        let mi = op.interior();
        let z: Vec<C64> = (0..mi * mi).map(|k| C64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05)).collect();
        let iz: Vec<C64> = z.iter().map(|v| v * C64::i()).collect();
        let (mut a, mut b) = (vec![C64::default(); mi * mi], vec![C64::default(); mi * mi]);
        op.apply(&iz, &mut a);
        op.apply(&z, &mut b);
        for k in 0..mi * mi {
            // L(iz) − iL(z) = B(conj(iz) − i conj(z)) = −2i B z̄.
            let expect = -2.0 * C64::i() * op.b[k] * z[k].conj();
            assert!((a[k] - C64::i() * b[k] - expect).norm() < 1e-12 * (1.0 + expect.norm()));
        }
    }
}
