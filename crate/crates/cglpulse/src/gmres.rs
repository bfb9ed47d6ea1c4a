//! Restarted, right-preconditioned GMRES on real-linear operators.
//!
//! Vectors are complex arrays treated as real vectors of twice the length,
//! with inner product Re Σ a b̄, so operators with a conjugate coupling fit.

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GmresSettings {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Fail when the residual has not dropped over this many iterations.
    pub stall_window: usize,
}

impl Default for GmresSettings {
    fn default() -> Self {
        GmresSettings { tol: 1e-8, restart: 60, max_iter: 2000, stall_window: 50 }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct GmresReport {
    pub iterations: usize,
    /// ‖b − Ax‖/‖b‖ recomputed with one extra product.
    pub residual: f64,
}

fn dot(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm(a: &[C64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve A x = b with right preconditioner M ≈ A⁻¹, starting from `x`.
pub fn gmres<A, M>(apply: A, precond: M, b: &[C64], x: &mut [C64], settings: &GmresSettings) -> Result<GmresReport>
where
    A: Fn(&[C64], &mut [C64]),
    M: Fn(&[C64], &mut [C64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = C64::default());
        return Ok(GmresReport { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![C64::default(); n];
    let mut w = vec![C64::default(); n];
    let mut z = vec![C64::default(); n];
    let residual_of = |x: &[C64], r: &mut [C64]| {
        apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm(r) / bnorm
    };
    let mut rel = residual_of(x, &mut r);
    let mut iterations = 0;
    let mut best = rel;
    let mut best_at = 0;
    while rel > settings.tol {
        let m = settings.restart;
        let beta = rel * bnorm;
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m {
            precond(&basis[k], &mut z);
            apply(&z, &mut w);
            for (j, v) in basis.iter().enumerate() {
                let hj = dot(&w, v);
                h[j][k] = hj;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= vi * hj;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            let est = g[k].abs() / bnorm;
            if est < best * (1.0 - 1e-3) {
                best = est;
                best_at = iterations;
            }
            if est <= settings.tol || hn == 0.0 || iterations >= settings.max_iter || iterations - best_at >= settings.stall_window {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut u = vec![C64::default(); n];
        for (j, yj) in y.iter().enumerate() {
            for (ui, vi) in u.iter_mut().zip(&basis[j]) {
                *ui += vi * *yj;
            }
        }
        precond(&u, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        rel = residual_of(x, &mut r);
        if rel <= settings.tol {
            break;
        }
        if iterations >= settings.max_iter || iterations - best_at >= settings.stall_window {
            return Err(Error::GmresStalled { iterations, residual: rel });
        }
    }
    Ok(GmresReport { iterations, residual: rel })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_conjugate_coupled_system() {
        let n = 40;
        let a: Vec<C64> = (0..n).map(|i| C64::new(3.0 + (i as f64).sin(), 0.5 * (i as f64).cos())).collect();
        let c: Vec<C64> = (0..n).map(|i| C64::new(0.4, -0.2 * (i as f64 * 0.3).sin())).collect();
        let apply = |x: &[C64], y: &mut [C64]| {
            for i in 0..n {
                let left = if i > 0 { x[i - 1] } else { C64::default() };
                let right = if i + 1 < n { x[i + 1] } else { C64::default() };
                y[i] = a[i] * x[i] + c[i] * x[i].conj() - 0.5 * (left + right);
            }
        };
        let truth: Vec<C64> = (0..n).map(|i| C64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.05)).collect();
        let mut b = vec![C64::default(); n];
        apply(&truth, &mut b);
        let mut x = vec![C64::default(); n];
        let settings = GmresSettings { restart: 10, ..Default::default() };
        let rep = gmres(apply, |v: &[C64], out: &mut [C64]| out.copy_from_slice(v), &b, &mut x, &settings).unwrap();
        assert!(rep.residual <= 1e-8);
        for (xi, ti) in x.iter().zip(&truth) {
            assert!((xi - ti).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let b = vec![C64::default(); 5];
        let mut x = vec![C64::new(1.0, 1.0); 5];
        let rep = gmres(|v: &[C64], o: &mut [C64]| o.copy_from_slice(v), |v: &[C64], o: &mut [C64]| o.copy_from_slice(v), &b, &mut x, &GmresSettings::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }
}
