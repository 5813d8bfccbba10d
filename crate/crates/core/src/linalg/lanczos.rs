use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosResult {
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator given by
/// its action `apply(x, y)` (`y <- H x`), by Lanczos with full
/// reorthogonalization.
///
/// Stops when the Ritz residual bound `beta_k |s_k|` falls below
/// `rel_tol * theta`, or when the Krylov space is exhausted. The start vector
/// is a fixed real vector so repeated calls are reproducible.
pub fn lanczos_max_eigenvalue<F>(n: usize, mut apply: F, rel_tol: f64, max_iter: usize) -> Result<LanczosResult>
where
    F: FnMut(&[Complex64], &mut [Complex64]) -> Result<()>,
{
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let max_iter = max_iter.min(n).max(1);
    let mut q: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + 0.5 * ((i as f64) * 0.618).sin(), 0.0)).collect();
    let q_norm = norm(&q);
    q.iter_mut().for_each(|v| *v /= q_norm);

    let mut basis: Vec<Vec<Complex64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut last = LanczosResult { eigenvalue: 0.0, residual: f64::INFINITY, iterations: 0 };

    for k in 0..max_iter {
        apply(&basis[k], &mut w)?;
        if w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::EigenSolverFailure("non-finite operator output".into()));
        }
        let alpha = dot(&basis[k], &w).re;
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let beta = norm(&w);

        let m = alphas.len();
        let t = Mat::<f64>::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i.abs_diff(j) == 1 {
                betas[i.min(j)]
            } else {
                0.0
            }
        });
        let eig = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigenSolverFailure(format!("{e:?}")))?;
        let theta = eig.S()[m - 1];
        let s_last = eig.U()[(m - 1, m - 1)];
        let residual = beta * s_last.abs();
        last = LanczosResult { eigenvalue: theta, residual, iterations: k + 1 };
        if residual <= rel_tol * theta.abs() || beta <= f64::EPSILON * theta.abs().max(1e-300) || m == n {
            return Ok(last);
        }
        betas.push(beta);
        let next: Vec<Complex64> = w.iter().map(|v| v / beta).collect();
        basis.push(next);
    }
    if last.residual <= 1e3 * rel_tol * last.eigenvalue.abs() {
        return Ok(last);
    }
    Err(Error::EigenSolverFailure(format!(
        "Lanczos did not converge in {max_iter} steps (residual {:e}, estimate {:e})",
        last.residual, last.eigenvalue
    )))
}
