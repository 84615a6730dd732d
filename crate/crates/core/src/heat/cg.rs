use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgStats {
    pub iterations: usize,
    /// `|b - A x| / |b|` on exit (recomputed, not the recursive estimate).
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Default iteration cap: `10 sqrt(n)`.
pub fn iteration_limit(n: usize) -> usize {
    (10.0 * (n as f64).sqrt()).ceil().max(10.0) as usize
}

/// Conjugate gradient for a symmetric positive definite `apply`, starting from `x`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<CgStats> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = (tolerance * b_norm).powi(2);
    let mut it = 0;
    // The recursive residual drifts from the true one near machine precision, so
    // convergence is confirmed against a recomputed residual.
    loop {
        if rr <= target {
            apply(x, &mut ap);
            let true_rr: f64 = b.iter().zip(&ap).map(|(b, a)| (b - a) * (b - a)).sum();
            if true_rr <= target {
                return Ok(CgStats {
                    iterations: it,
                    residual: true_rr.sqrt() / b_norm,
                });
            }
            r.iter_mut().zip(b.iter().zip(&ap)).for_each(|(r, (b, a))| *r = b - a);
            p.copy_from_slice(&r);
            rr = true_rr;
        }
        if it >= max_iterations {
            return Err(LabError::SolverDiverged {
                iterations: it,
                residual: rr.sqrt() / b_norm,
            });
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
        it += 1;
    }
}
