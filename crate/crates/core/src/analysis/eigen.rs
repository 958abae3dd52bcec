//! Symmetric generalized eigenvalue solvers for the discrete stability constants.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::ops::serial::spsolve_csc_lower_triangular;
use nalgebra_sparse::ops::Op;
use nalgebra_sparse::CscMatrix;

use crate::error::{Error, Result};

/// Eigenvalues (ascending) of `S q = lambda M q` with `S` symmetric and `M` symmetric positive
/// definite, via `L^-1 S L^-T`.
pub fn generalized_eigenvalues(s: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if s.shape() != m.shape() || !s.is_square() {
        return Err(Error::Shape(format!("{:?} vs {:?}", s.shape(), m.shape())));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(s)
        .ok_or_else(|| Error::Numerical("singular mass factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Numerical("singular mass factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Result of [`largest_generalized_eigenvalue`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOutcome {
    pub value: f64,
    pub iterations: usize,
    /// Ritz residual estimate relative to `value`.
    pub residual: f64,
}

/// Largest `lambda` with `K u = lambda R u`, `K` symmetric positive semidefinite and `R` symmetric
/// positive definite. Lanczos with full reorthogonalization on `L^-1 K L^-T`, `R = L L^T`, from a
/// fixed start vector.
pub fn largest_generalized_eigenvalue(
    k: &CscMatrix<f64>,
    r: &CscMatrix<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<LanczosOutcome> {
    let n = k.nrows();
    let dims = |a: &CscMatrix<f64>| (a.nrows(), a.ncols());
    if dims(k) != dims(r) || k.nrows() != k.ncols() || n == 0 {
        return Err(Error::Shape(format!("{:?} vs {:?}", dims(k), dims(r))));
    }
    let chol = CscCholesky::factor(r).map_err(|e| Error::Numerical(format!("right-hand form not positive definite: {e}")))?;
    let l = chol.l();
    let apply = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let mut w = DMatrix::from_column_slice(n, 1, v.as_slice());
        spsolve_csc_lower_triangular(Op::Transpose(l), &mut w).map_err(|e| Error::Numerical(e.to_string()))?;
        let mut y = k * &w;
        spsolve_csc_lower_triangular(Op::NoOp(l), &mut y).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(DVector::from_column_slice(y.as_slice()))
    };

    // deterministic, generic start vector
    let mut q = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7548776662466927).fract());
    q /= q.norm();
    let max_iter = max_iter.min(n);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_iter);
    let mut alpha = Vec::with_capacity(max_iter);
    let mut beta: Vec<f64> = Vec::with_capacity(max_iter);
    let mut best = LanczosOutcome {
        value: 0.0,
        iterations: 0,
        residual: f64::INFINITY,
    };
    for it in 0..max_iter {
        basis.push(q.clone());
        let mut w = apply(&q)?;
        let a = q.dot(&w);
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let bnext = w.norm();
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let (imax, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        if !theta.is_finite() {
            return Err(Error::Numerical("non-finite Ritz value".into()));
        }
        let res = bnext * eig.eigenvectors[(m - 1, imax)].abs() / theta.abs().max(f64::MIN_POSITIVE);
        best = LanczosOutcome {
            value: theta,
            iterations: it + 1,
            residual: res,
        };
        if res <= tol || bnext <= 1e-14 * theta.abs() {
            return Ok(best);
        }
        beta.push(bnext);
        q = w / bnext;
    }
    if best.residual <= tol.sqrt() {
        Ok(best)
    } else {
        Err(Error::Numerical(format!(
            "Lanczos did not converge in {max_iter} steps (residual {:e})",
            best.residual
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra_sparse::CooMatrix;

    #[test]
    fn dense_generalized_diagonal() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0, 9.0]));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 3.0]));
        let ev = generalized_eigenvalues(&s, &m).unwrap();
        assert!((ev[0]).abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14 && (ev[2] - 3.0).abs() < 1e-14);
        assert!(generalized_eigenvalues(&s, &(-m)).is_err());
    }

    #[test]
    fn lanczos_matches_dense() {
        let n = 60;
        let mut kc = CooMatrix::new(n, n);
        let mut rc = CooMatrix::new(n, n);
        for i in 0..n {
            kc.push(i, i, 2.0);
            rc.push(i, i, 1.0 + (i as f64) / n as f64);
            if i + 1 < n {
                kc.push(i, i + 1, -1.0);
                kc.push(i + 1, i, -1.0);
            }
        }
        let (k, r) = (CscMatrix::from(&kc), CscMatrix::from(&rc));
        let dense = generalized_eigenvalues(&DMatrix::from(&k), &DMatrix::from(&r)).unwrap();
        let out = largest_generalized_eigenvalue(&k, &r, 200, 1e-10).unwrap();
        assert!((out.value - dense[n - 1]).abs() < 1e-8 * dense[n - 1], "{out:?} vs {}", dense[n - 1]);
    }
}
