//! Symmetric positive definite solvers: Jacobi-preconditioned CG and a sparse
//! Cholesky factorisation (faer) with iterative refinement.

use std::fmt;
use std::str::FromStr;

use faer::prelude::*;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};

use crate::sparse::{dot, norm2, CsrMatrix};
use crate::{Error, Result};

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Largest accepted tolerance.
pub const MAX_TOL: f64 = 1e-6;

/// Componentwise backward error at which a solution counts as exact to working
/// precision even when the normwise residual test cannot be met.
pub const BACKWARD_LIMIT: f64 = 1e3 * f64::EPSILON;

const REFINEMENT_STEPS: usize = 8;
const CHECK_EVERY: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    Cg,
    #[default]
    Cholesky,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Cg => "cg",
            SolverKind::Cholesky => "cholesky",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cg" | "pcg" => Ok(SolverKind::Cg),
            "cholesky" | "direct" => Ok(SolverKind::Cholesky),
            other => Err(format!("unknown solver '{other}' (expected cg or cholesky)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `‖b − A x‖ / ‖b‖` (zero for `b = 0`).
    pub relative_residual: f64,
    /// `max_i |b − A x|_i / (|A| |x| + |b|)_i`.
    pub backward_error: f64,
    /// CG iterations or refinement steps.
    pub iterations: usize,
    pub method: SolverKind,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= MAX_TOL) {
        return Err(Error::InvalidParameter {
            name: "solver_tol",
            reason: format!("must lie in (0, {MAX_TOL}], got {tol}"),
        });
    }
    Ok(())
}

fn check_system(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.nrows != a.ncols {
        return Err(Error::DimensionMismatch { expected: a.nrows, got: a.ncols });
    }
    if b.len() != a.nrows {
        return Err(Error::DimensionMismatch { expected: a.nrows, got: b.len() });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    Ok(())
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Componentwise (Oettli–Prager) backward error of `x` for the residual `r`.
pub fn backward_error(a: &CsrMatrix, x: &[f64], b: &[f64], r: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows {
        let scale: f64 = a.row(i).map(|(j, v)| v.abs() * x[j].abs()).sum::<f64>() + b[i].abs();
        if scale > 0.0 {
            worst = worst.max(r[i].abs() / scale);
        } else if r[i] != 0.0 {
            return f64::INFINITY;
        }
    }
    worst
}

/// Residual quality of `x`: `(relative residual, backward error, accepted)`.
fn assess(a: &CsrMatrix, x: &[f64], b: &[f64], bnorm: f64, tol: f64) -> (f64, f64, bool) {
    let r = residual(a, x, b);
    let rel = norm2(&r) / bnorm;
    let omega = backward_error(a, x, b, &r);
    (rel, omega, rel <= tol || omega <= BACKWARD_LIMIT)
}

/// Jacobi-preconditioned CG to `‖b − A x‖ ≤ tol ‖b‖`, at most `20 n` iterations.
/// A solution whose backward error is below [`BACKWARD_LIMIT`] is also accepted.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
    check_tol(tol)?;
    check_system(a, b)?;
    pcg(a, b, tol, None)
}

fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, start: Option<Vec<f64>>) -> Result<SolveReport> {
    let n = a.nrows;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(SolveReport {
            solution: vec![0.0; n],
            relative_residual: 0.0,
            backward_error: 0.0,
            iterations: 0,
            method: SolverKind::Cg,
        });
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Indefinite(format!("diagonal entry {i} is {}", diag[i])));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let mut x = start.unwrap_or_else(|| vec![0.0; n]);
    let done = |x: Vec<f64>, rel, omega, iterations| SolveReport {
        solution: x,
        relative_residual: rel,
        backward_error: omega,
        iterations,
        method: SolverKind::Cg,
    };
    let (rel0, omega0, ok) = assess(a, &x, b, bnorm, tol);
    if ok {
        return Ok(done(x, rel0, omega0, 0));
    }
    let mut r = residual(a, &x, b);
    let mut best = (rel0, omega0);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n.max(1);
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::Breakdown(format!("non-finite curvature at iteration {it}")));
        }
        if pap <= 0.0 {
            return Err(Error::Indefinite(format!("p'Ap = {pap:e} at iteration {it}")));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        // the recursive residual drifts from the true one, so acceptance uses the latter
        if rel <= tol || it % CHECK_EVERY == 0 {
            let (true_rel, omega, ok) = assess(a, &x, b, bnorm, tol);
            if ok {
                return Ok(done(x, true_rel, omega, it));
            }
            best = (true_rel, omega);
            if rel <= tol {
                r = residual(a, &x, b);
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        if !(rz_new > 0.0) {
            return Err(Error::Breakdown(format!("r'z = {rz_new:e} at iteration {it}")));
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual: best.0 })
}

/// A matrix prepared for repeated solves.
pub struct SpdSolver {
    matrix: CsrMatrix,
    kind: SolverKind,
    tol: f64,
    factor: Option<Llt<usize, f64>>,
}

impl fmt::Debug for SpdSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpdSolver")
            .field("n", &self.matrix.nrows)
            .field("kind", &self.kind)
            .field("tol", &self.tol)
            .finish()
    }
}

impl SpdSolver {
    /// Checks the matrix and, for [`SolverKind::Cholesky`], factorises it once.
    pub fn new(matrix: CsrMatrix, kind: SolverKind, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        check_system(&matrix, &vec![0.0; matrix.nrows])?;
        let factor = match kind {
            SolverKind::Cg => None,
            SolverKind::Cholesky => Some(factorize(&matrix)?),
        };
        Ok(Self { matrix, kind, tol, factor })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn solve(&self, b: &[f64]) -> Result<SolveReport> {
        check_system(&self.matrix, b)?;
        let Some(llt) = &self.factor else {
            return pcg(&self.matrix, b, self.tol, None);
        };
        let n = self.matrix.nrows;
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(SolveReport {
                solution: vec![0.0; n],
                relative_residual: 0.0,
                backward_error: 0.0,
                iterations: 0,
                method: self.kind,
            });
        }
        let apply = |rhs: &[f64]| -> Vec<f64> {
            let m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
            let s = llt.solve(&m);
            (0..n).map(|i| s[(i, 0)]).collect()
        };
        let mut x = apply(b);
        let (mut rel, mut omega, mut ok) = assess(&self.matrix, &x, b, bnorm, self.tol);
        let mut steps = 0;
        while !ok && steps < REFINEMENT_STEPS {
            let dx = apply(&residual(&self.matrix, &x, b));
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(x, d)| x + d).collect();
            let (next_rel, next_omega, next_ok) = assess(&self.matrix, &candidate, b, bnorm, self.tol);
            steps += 1;
            if !next_rel.is_finite() {
                return Err(Error::Breakdown("non-finite residual during refinement".into()));
            }
            if next_rel >= rel && !next_ok {
                break;
            }
            (x, rel, omega, ok) = (candidate, next_rel, next_omega, next_ok);
        }
        if !ok {
            // refinement stalled: finish with CG from the direct solution
            let mut report = pcg(&self.matrix, b, self.tol, Some(x))?;
            report.iterations += steps;
            return Ok(report);
        }
        Ok(SolveReport {
            solution: x,
            relative_residual: rel,
            backward_error: omega,
            iterations: steps,
            method: self.kind,
        })
    }
}

fn factorize(a: &CsrMatrix) -> Result<Llt<usize, f64>> {
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..a.nrows {
        for (j, v) in a.row(i) {
            triplets.push(Triplet::new(i, j, v));
        }
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &triplets)
        .map_err(|e| Error::Breakdown(format!("sparse conversion failed: {e:?}")))?;
    m.sp_cholesky(faer::Side::Lower).map_err(|e| Error::Indefinite(format!("Cholesky factorisation failed: {e:?}")))
}
