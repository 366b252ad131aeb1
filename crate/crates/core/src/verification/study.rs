//! Convergence studies over a sequence of uniform meshes.

use std::time::Instant;

use rayon::prelude::*;

use super::examples::ManufacturedCase;
use super::norms::{control_error, error_broken_h1, error_interface_trace, error_l2, error_triple_norm, ERROR_DEGREE};
use crate::assembly::DEFAULT_CTILDE;
use crate::control::{fixed_point_solve, FixedPointSettings, OptimalTriple};
use crate::mesh::build_uniform_mesh;
use crate::space::CutSpace;
use crate::{Error, Point, Result, Side};

/// Error columns, in output order.
pub const COLUMNS: [&str; 9] = ["y_l2", "y_h1", "y_triple", "y_trace", "u_l2", "p_l2", "p_h1", "p_triple", "p_trace"];

#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub ctilde: f64,
    pub fixed_point: FixedPointSettings,
    pub error_degree: usize,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self { ctilde: DEFAULT_CTILDE, fixed_point: FixedPointSettings::default(), error_degree: ERROR_DEGREE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub y_l2: f64,
    pub y_h1: f64,
    pub y_triple: f64,
    pub y_trace: f64,
    pub u_l2: f64,
    pub p_l2: f64,
    pub p_h1: f64,
    pub p_triple: f64,
    pub p_trace: f64,
}

impl ErrorNorms {
    /// Values in [`COLUMNS`] order.
    pub fn values(&self) -> [f64; 9] {
        [
            self.y_l2,
            self.y_h1,
            self.y_triple,
            self.y_trace,
            self.u_l2,
            self.p_l2,
            self.p_h1,
            self.p_triple,
            self.p_trace,
        ]
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        COLUMNS.iter().position(|c| *c == column).map(|i| self.values()[i])
    }
}

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub n_cut_cells: usize,
    pub iterations: usize,
    pub converged: bool,
    pub update_norm: f64,
    pub objective: f64,
    pub max_relative_residual: f64,
    pub max_backward_error: f64,
    /// `None` when the case has no exact solution.
    pub norms: Option<ErrorNorms>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowFailure {
    pub n: usize,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub example: String,
    pub alpha: f64,
    pub ctilde: f64,
    /// Successful rows in increasing `N`.
    pub rows: Vec<StudyRow>,
    pub failures: Vec<RowFailure>,
}

impl ErrorReport {
    pub fn ns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.norms.and_then(|n| n.get(name))).collect()
    }

    /// EOC of a column between consecutive rows; the first entry is `None`.
    pub fn eoc(&self, name: &str) -> Vec<Option<f64>> {
        match self.column(name) {
            Some(errors) => eoc(&errors, &self.ns()),
            None => vec![None; self.rows.len()],
        }
    }

    pub fn all_converged(&self) -> bool {
        self.failures.is_empty() && self.rows.iter().all(|r| r.converged)
    }
}

/// `log(e_{k−1} / e_k) / log(N_k / N_{k−1})`, i.e. `log₂` of the error ratio for doubled `N`.
pub fn eoc(errors: &[f64], ns: &[usize]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for k in 1..errors.len() {
        let ratio = ns[k] as f64 / ns[k - 1] as f64;
        if errors[k] > 0.0 && errors[k - 1] > 0.0 && ratio > 1.0 {
            out[k] = Some((errors[k - 1] / errors[k]).ln() / ratio.ln());
        }
    }
    out
}

/// Discrete optimal triple on one mesh together with its space.
#[derive(Debug)]
pub struct CaseSolution {
    pub space: CutSpace,
    pub triple: OptimalTriple,
}

pub fn solve_case(case: &ManufacturedCase, n: usize, settings: &StudySettings) -> Result<CaseSolution> {
    let mesh = build_uniform_mesh(case.domain, n)?;
    let space = CutSpace::build(mesh, case.level_set.clone())?;
    let triple = fixed_point_solve(&space, &case.problem_data(), settings.ctilde, &settings.fixed_point)?;
    Ok(CaseSolution { space, triple })
}

/// All error norms of a solution, or `None` without an exact solution.
pub fn compute_norms(case: &ManufacturedCase, solution: &CaseSolution, degree: usize) -> Result<Option<ErrorNorms>> {
    let Some(exact) = &case.exact else { return Ok(None) };
    let space = &solution.space;
    let t = &solution.triple;
    let y = |s: Side, x: Point| (exact.y)(s, x).value;
    let gy = |s: Side, x: Point| (exact.y)(s, x).grad;
    let p = |s: Side, x: Point| (exact.p)(s, x).value;
    let gp = |s: Side, x: Point| (exact.p)(s, x).grad;
    // exact traces: y* and p* are continuous across Γ, so either branch serves
    let y_trace = |x: Point| (exact.y)(Side::One, x).value;
    let p_trace = |x: Point| (exact.p)(Side::One, x).value;
    Ok(Some(ErrorNorms {
        y_l2: error_l2(space, &t.y, &y, degree)?,
        y_h1: error_broken_h1(space, &t.y, &gy, degree)?,
        y_triple: error_triple_norm(space, &t.y, &y, &gy, degree)?,
        y_trace: error_interface_trace(space, &t.y, &y_trace),
        u_l2: control_error(space, &t.control, &|x| (exact.u)(x)),
        p_l2: error_l2(space, &t.p, &p, degree)?,
        p_h1: error_broken_h1(space, &t.p, &gp, degree)?,
        p_triple: error_triple_norm(space, &t.p, &p, &gp, degree)?,
        p_trace: error_interface_trace(space, &t.p, &p_trace),
    }))
}

fn study_row(case: &ManufacturedCase, n: usize, settings: &StudySettings) -> Result<StudyRow> {
    let start = Instant::now();
    let solution = solve_case(case, n, settings)?;
    let norms = compute_norms(case, &solution, settings.error_degree)?;
    let t = &solution.triple;
    Ok(StudyRow {
        n,
        h: solution.space.h(),
        n_dofs: solution.space.n_dofs(),
        n_cut_cells: solution.space.cuts.len(),
        iterations: t.iterations,
        converged: t.converged,
        update_norm: t.update_norm,
        objective: t.objective,
        max_relative_residual: t.max_relative_residual,
        max_backward_error: t.max_backward_error,
        norms,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn validate_ns(ns: &[usize]) -> Result<()> {
    let bad = |reason: String| Err(Error::InvalidParameter { name: "Ns", reason });
    if ns.is_empty() {
        return bad("at least one mesh size is required".into());
    }
    if ns.contains(&0) {
        return bad("mesh sizes must be positive".into());
    }
    for w in ns.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return bad(format!("{} does not refine {} (sizes must increase by integer factors)", w[1], w[0]));
        }
    }
    Ok(())
}

/// Solves and measures every `N` (in parallel). Per-N failures are collected
/// in the report; only invalid input is an error.
pub fn run_convergence_study(case: &ManufacturedCase, ns: &[usize], settings: &StudySettings) -> Result<ErrorReport> {
    validate_ns(ns)?;
    let results: Vec<(usize, Result<StudyRow>)> = ns.par_iter().map(|&n| (n, study_row(case, n, settings))).collect();
    let mut report = ErrorReport {
        example: case.id.clone(),
        alpha: case.alpha,
        ctilde: settings.ctilde,
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (n, result) in results {
        match result {
            Ok(row) => report.rows.push(row),
            Err(e) => report.failures.push(RowFailure { n, kind: e.kind(), message: e.to_string() }),
        }
    }
    Ok(report)
}
