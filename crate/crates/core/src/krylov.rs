//! Matrix-free Krylov kernels: full-memory GMRES with diagonal left
//! preconditioning, and a Lanczos iteration for the extreme eigenvalue
//! magnitude of a symmetric operator (applied to inverses for smallest
//! singular values).

use crate::error::{Result, VarwaveError};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Solves A x = b with left diagonal preconditioning M = diag(d); the
/// operator is a closure. Stops at relative residual `tol` measured on the
/// true (unpreconditioned) residual; restarts up to 4 cycles of `max_iter`.
pub fn gmres<F>(
    apply: F,
    rhs: &DVector<f64>,
    precond_diag: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = rhs.len();
    let bnorm = rhs.norm();
    if bnorm == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let minv = |v: &DVector<f64>| -> DVector<f64> {
        DVector::from_iterator(n, v.iter().zip(precond_diag.iter()).map(|(x, d)| x / d))
    };

    let mut x = DVector::zeros(n);
    for _cycle in 0..4 {
        let true_res = rhs - apply(&x);
        if true_res.norm() <= tol * bnorm {
            return Ok(x);
        }
        let r0 = minv(&true_res);
        let beta = r0.norm();
        if beta == 0.0 {
            return Ok(x);
        }
        let mut basis: Vec<DVector<f64>> = vec![r0 / beta];
        let mut h = DMatrix::<f64>::zeros(max_iter + 1, max_iter);
        let mut g = DVector::<f64>::zeros(max_iter + 1);
        g[0] = beta;
        let mut cs = vec![0.0_f64; max_iter];
        let mut sn = vec![0.0_f64; max_iter];
        let mut steps = 0;

        for j in 0..max_iter {
            let mut w = minv(&apply(&basis[j]));
            for (i, v) in basis.iter().enumerate() {
                let hij = w.dot(v);
                h[(i, j)] = hij;
                w -= hij * v;
            }
            // one reorthogonalization pass keeps the basis clean
            for (i, v) in basis.iter().enumerate() {
                let corr = w.dot(v);
                h[(i, j)] += corr;
                w -= corr * v;
            }
            let hjj = w.norm();
            h[(j + 1, j)] = hjj;

            for i in 0..j {
                let t = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                h[(i, j)] = t;
            }
            let denom = (h[(j, j)] * h[(j, j)] + hjj * hjj).sqrt();
            if denom == 0.0 {
                steps = j;
                break;
            }
            cs[j] = h[(j, j)] / denom;
            sn[j] = hjj / denom;
            h[(j, j)] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            steps = j + 1;

            if g[j + 1].abs() <= 0.1 * tol * beta || hjj == 0.0 {
                break;
            }
            if j + 1 < max_iter {
                basis.push(w / hjj);
            }
        }

        // back substitution on the triangularized H
        let mut y = DVector::<f64>::zeros(steps);
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for k in i + 1..steps {
                acc -= h[(i, k)] * y[k];
            }
            y[i] = acc / h[(i, i)];
        }
        for (i, v) in basis.iter().take(steps).enumerate() {
            x += y[i] * v;
        }
    }

    let res = (rhs - apply(&x)).norm();
    if res <= tol * bnorm * 10.0 {
        Ok(x)
    } else {
        Err(VarwaveError::NoConvergence(format!(
            "gmres stalled at relative residual {:.3e}",
            res / bnorm
        )))
    }
}

/// Largest |eigenvalue| of a symmetric operator by Lanczos with full
/// reorthogonalization. The operator may fail (inner solves), hence Result.
pub fn lanczos_extreme_abs<F>(apply: F, dim: usize, seed: u64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v0 = DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(-1.0..1.0_f64)));
    let mut v = v0.clone() / v0.norm();
    let mut basis: Vec<DVector<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev_extreme = f64::NAN;

    let steps = max_iter.min(dim);
    for j in 0..steps {
        let mut w = apply(&v)?;
        let alpha = w.dot(&v);
        alphas.push(alpha);
        w -= alpha * &v;
        if j > 0 {
            w -= betas[j - 1] * &basis[j - 1];
        }
        for b in &basis {
            let c = w.dot(b);
            w -= c * b;
        }
        let beta = w.norm();

        let extreme = tridiag_extreme_abs(&alphas, &betas);
        let converged = (extreme - prev_extreme).abs() <= tol * extreme.max(1e-300);
        prev_extreme = extreme;

        // breakdown: invariant subspace found, the Ritz values are exact
        if beta <= 1e-13 * alpha.abs().max(1.0) {
            return Ok(extreme);
        }
        if converged && j >= 8 {
            return Ok(extreme);
        }
        betas.push(beta);
        v = w / beta;
        basis.push(v.clone());
    }
    if steps == dim {
        return Ok(tridiag_extreme_abs(&alphas, &betas));
    }
    Err(VarwaveError::NoConvergence(format!(
        "lanczos: extreme eigenvalue not settled after {steps} iterations"
    )))
}

fn tridiag_extreme_abs(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0, |acc: f64, e| acc.max(e.abs()))
}
