//! Sparse SPD solves with a dense cross-check.

use crate::system::{relative_residual, CscMatrix};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Largest system accepted by [`dense_oracle`].
pub const DENSE_ORACLE_LIMIT: usize = 2000;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("singular or indefinite system ({n} DOFs): {detail}")]
    Singular { n: usize, detail: String },
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("right-hand side has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("dense oracle limited to {limit} DOFs, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("factorization setup failed: {0}")]
    Setup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SparseCholesky,
    JacobiCg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Required relative residual `‖Ku - f‖/‖f‖`.
    pub tolerance: f64,
    /// Systems with more DOFs use the iterative method.
    pub iterative_threshold: usize,
    pub max_iterations: usize,
    /// Iterative refinement sweeps after a direct solve.
    pub refinement_steps: usize,
    /// Solutions with `‖u‖·max|K| / ‖f‖` above this are reported singular.
    pub conditioning_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            iterative_threshold: 300_000,
            max_iterations: 20_000,
            refinement_steps: 2,
            conditioning_limit: 1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    /// Iterations per right-hand side (zero for the direct method).
    pub iterations: Vec<usize>,
    pub relative_residuals: Vec<f64>,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn max_residual(&self) -> f64 {
        self.relative_residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve `K u = f` for every right-hand side.
pub fn solve_spd(
    k: &CscMatrix,
    rhs: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<(Vec<Vec<f64>>, SolveReport), SolverError> {
    for f in rhs {
        if f.len() != k.n {
            return Err(SolverError::Dimension { got: f.len(), expected: k.n });
        }
    }
    let start = Instant::now();
    let (solutions, method, iterations) = if k.n > cfg.iterative_threshold {
        let mut sols = Vec::new();
        let mut its = Vec::new();
        for f in rhs {
            let (u, it) = jacobi_cg(k, f, cfg)?;
            sols.push(u);
            its.push(it);
        }
        (sols, Method::JacobiCg, its)
    } else {
        (sparse_cholesky(k, rhs, cfg)?, Method::SparseCholesky, vec![0; rhs.len()])
    };
    let relative_residuals: Vec<f64> = solutions.iter().zip(rhs).map(|(u, f)| relative_residual(k, u, f)).collect();
    let scale = k.max_abs();
    for (u, f) in solutions.iter().zip(rhs) {
        let nf = norm(f);
        if nf > 0.0 && norm(u) * scale / nf > cfg.conditioning_limit {
            return Err(SolverError::Singular {
                n: k.n,
                detail: format!(
                    "solution amplification {:.3e} exceeds {:.1e}; zero-energy modes likely",
                    norm(u) * scale / nf,
                    cfg.conditioning_limit
                ),
            });
        }
    }
    if let Some(&r) = relative_residuals.iter().find(|&&r| !(r <= cfg.tolerance)) {
        return Err(SolverError::NoConvergence {
            iterations: iterations.iter().copied().max().unwrap_or(0),
            residual: r,
        });
    }
    let report = SolveReport { method, iterations, relative_residuals, wall_time_s: start.elapsed().as_secs_f64() };
    Ok((solutions, report))
}

fn sparse_cholesky(k: &CscMatrix, rhs: &[Vec<f64>], cfg: &SolverConfig) -> Result<Vec<Vec<f64>>, SolverError> {
    faer::set_global_parallelism(Par::Seq);
    let n = k.n;
    let mut trip = Vec::with_capacity(k.nnz());
    for c in 0..n {
        for idx in k.col_ptr[c]..k.col_ptr[c + 1] {
            trip.push(Triplet::new(k.row_idx[idx], c, k.values[idx]));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| SolverError::Setup(format!("{e:?}")))?;
    let llt = a
        .sp_cholesky(Side::Lower)
        .map_err(|e| SolverError::Singular { n, detail: format!("Cholesky factorization failed: {e:?}") })?;
    let mut out = Vec::with_capacity(rhs.len());
    for f in rhs {
        let b = Mat::<f64>::from_fn(n, 1, |i, _| f[i]);
        let x = llt.solve(&b);
        let mut u: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        for _ in 0..cfg.refinement_steps {
            let ku = k.matvec(&u);
            let r = Mat::<f64>::from_fn(n, 1, |i, _| f[i] - ku[i]);
            let d = llt.solve(&r);
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += d[(i, 0)];
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Singular { n, detail: "non-finite solution".into() });
        }
        out.push(u);
    }
    Ok(out)
}

/// Conjugate gradients with diagonal preconditioning; fixed reduction order.
pub fn jacobi_cg(k: &CscMatrix, f: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, usize), SolverError> {
    let n = k.n;
    let diag = k.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(SolverError::Singular { n, detail: format!("non-positive diagonal at DOF {i}") });
    }
    let nf = norm(f);
    let mut u = vec![0.0; n];
    if nf == 0.0 {
        return Ok((u, 0));
    }
    let mut r = f.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=cfg.max_iterations {
        let kp = k.matvec(&p);
        let pkp: f64 = p.iter().zip(&kp).map(|(a, b)| a * b).sum();
        if !(pkp > 0.0) {
            return Err(SolverError::Singular {
                n,
                detail: format!("non-positive curvature {pkp:e} at iteration {it}"),
            });
        }
        let alpha = rz / pkp;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        if norm(&r) / nf <= 0.5 * cfg.tolerance {
            return Ok((u, it));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NoConvergence { iterations: cfg.max_iterations, residual: relative_residual(k, &u, f) })
}

/// Dense Cholesky solution, for cross-validation on small systems.
pub fn dense_oracle(k: &CscMatrix, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    if k.n > DENSE_ORACLE_LIMIT {
        return Err(SolverError::TooLarge { n: k.n, limit: DENSE_ORACLE_LIMIT });
    }
    if rhs.len() != k.n {
        return Err(SolverError::Dimension { got: rhs.len(), expected: k.n });
    }
    let d = k.to_dense();
    let m = nalgebra::DMatrix::from_fn(k.n, k.n, |i, j| d[i][j]);
    let chol = m.cholesky().ok_or_else(|| SolverError::Singular {
        n: k.n,
        detail: "dense Cholesky failed: matrix not positive definite".into(),
    })?;
    let x = chol.solve(&nalgebra::DVector::from_column_slice(rhs));
    Ok(x.iter().copied().collect())
}

/// Extreme eigenvalues of a small symmetric matrix.
pub fn dense_eigen_range(k: &CscMatrix) -> Result<(f64, f64), SolverError> {
    if k.n > DENSE_ORACLE_LIMIT {
        return Err(SolverError::TooLarge { n: k.n, limit: DENSE_ORACLE_LIMIT });
    }
    let d = k.to_dense();
    let m = nalgebra::DMatrix::from_fn(k.n, k.n, |i, j| d[i][j]);
    let ev = m.symmetric_eigen().eigenvalues;
    Ok((ev.min(), ev.max()))
}
