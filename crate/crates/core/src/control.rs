//! Projected fixed-point iteration for the optimality system
//!
//! ```text
//! a_h(y, w) = (f, w) + (g + u, κ_2 w_1 + κ_1 w_2)_Γ,   y = y_D on ∂Ω
//! a_h(p, w) = (y − y_d, w),                            p = 0 on ∂Ω
//! u = P_[u_a, u_b](−(κ_2 p_1 + κ_1 p_2) / α)
//! ```
//!
//! The control lives at the interface quadrature points, ordered by cell then
//! Gauss index.

use std::sync::Arc;

use crate::assembly::{
    add_interface_load, assemble_mass, assemble_stiffness, assemble_volume_load, eliminate_dirichlet,
};
use crate::solver::{SolverKind, SpdSolver, DEFAULT_TOL};
use crate::space::CutSpace;
use crate::sparse::dot;
use crate::{Error, Point, Result, Side};

/// Quadrature degree of the objective's tracking term.
pub const OBJECTIVE_DEGREE: usize = 4;

/// A field with one branch per subdomain.
pub type SideField = Arc<dyn Fn(Side, Point) -> f64 + Send + Sync>;
/// A field evaluated on the interface.
pub type InterfaceField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Data of the control problem apart from the discretisation.
#[derive(Clone)]
pub struct ProblemData {
    pub a: [f64; 2],
    pub alpha: f64,
    pub f: SideField,
    pub g: InterfaceField,
    pub y_d: SideField,
    /// Boundary values of the state, per side.
    pub dirichlet: SideField,
    pub lower: InterfaceField,
    pub upper: InterfaceField,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData").field("a", &self.a).field("alpha", &self.alpha).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// `θ` in `u ← (1 − θ) u + θ P(−T p / α)`.
    pub damping: f64,
    pub solver: SolverKind,
    pub solver_tol: f64,
    /// Starting control; zero when absent. It is projected before use.
    pub initial: Option<Vec<f64>>,
}

impl Default for FixedPointSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            damping: 1.0,
            solver: SolverKind::default(),
            solver_tol: DEFAULT_TOL,
            initial: None,
        }
    }
}

impl FixedPointSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidParameter { name: "tol", reason: format!("must be positive, got {}", self.tol) });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter { name: "max_iter", reason: "must be at least 1".into() });
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "damping",
                reason: format!("must lie in (0, 1], got {}", self.damping),
            });
        }
        Ok(())
    }
}

/// Discrete state, adjoint and control after the fixed-point loop.
#[derive(Debug, Clone)]
pub struct OptimalTriple {
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub control: Vec<f64>,
    pub iterations: usize,
    /// `max_q |u^k_q − u^{k−1}_q|` of the last step.
    pub update_norm: f64,
    pub converged: bool,
    pub objective: f64,
    pub max_relative_residual: f64,
    pub max_backward_error: f64,
}

/// `P_[a, b](v)` componentwise.
pub fn project_control(values: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    if lower.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: lower.len() });
    }
    if upper.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: upper.len() });
    }
    values
        .iter()
        .zip(lower.iter().zip(upper))
        .enumerate()
        .map(|(index, (&v, (&lo, &hi)))| {
            if !(lo <= hi) {
                return Err(Error::InvalidBounds { index, lower: lo, upper: hi });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("control"));
            }
            Ok(v.clamp(lo, hi))
        })
        .collect()
}

/// `P(−(κ_2 p_1 + κ_1 p_2) / α)` at the interface points.
pub fn control_from_adjoint(space: &CutSpace, p: &[f64], alpha: f64, lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    let trace = space.conjugate_trace(p);
    let raw: Vec<f64> = trace.iter().map(|t| -t / alpha).collect();
    project_control(&raw, lower, upper)
}

/// `½ ‖y_h − y_d‖²_Ω + α/2 ‖u‖²_Γ`.
pub fn objective_value(
    space: &CutSpace,
    y: &[f64],
    y_d: &dyn Fn(Side, Point) -> f64,
    u: &[f64],
    alpha: f64,
) -> Result<f64> {
    if u.len() != space.interface.len() {
        return Err(Error::ControlPointMismatch { expected: space.interface.len(), got: u.len() });
    }
    let mut tracking = 0.0;
    for cell in 0..space.mesh.n_cells() {
        for side in Side::BOTH {
            let Some(rule) = space.volume_rule(cell, side, OBJECTIVE_DEGREE)? else { continue };
            tracking += rule.integrate(|x| (space.value(y, cell, side, x) - y_d(side, x)).powi(2));
        }
    }
    let control: f64 = space.interface.iter().zip(u).map(|(q, v)| q.weight * v * v).sum();
    Ok(0.5 * tracking + 0.5 * alpha * control)
}

/// Runs the projected fixed-point iteration. Returns the last iterate even when
/// `max_iter` is reached without meeting `tol` (`converged == false`).
pub fn fixed_point_solve(
    space: &CutSpace,
    data: &ProblemData,
    ctilde: f64,
    settings: &FixedPointSettings,
) -> Result<OptimalTriple> {
    settings.validate()?;
    if !(data.alpha > 0.0) || !data.alpha.is_finite() {
        return Err(Error::InvalidParameter { name: "alpha", reason: format!("must be positive, got {}", data.alpha) });
    }
    let m = space.interface.len();
    let points: Vec<Point> = space.interface.iter().map(|q| q.x).collect();
    let lower: Vec<f64> = points.iter().map(|&x| (data.lower)(x)).collect();
    let upper: Vec<f64> = points.iter().map(|&x| (data.upper)(x)).collect();
    let g: Vec<f64> = points.iter().map(|&x| (data.g)(x)).collect();

    let stiffness = assemble_stiffness(space, data.a, ctilde)?.matrix;
    let dirichlet = eliminate_dirichlet(&stiffness, &space.dofs.dirichlet);
    let solver = SpdSolver::new(dirichlet.matrix.clone(), settings.solver, settings.solver_tol)?;
    let mass = assemble_mass(space)?;
    let volume_load = assemble_volume_load(space, |s, x| (data.f)(s, x))?;
    let tracking_load = assemble_volume_load(space, |s, x| (data.y_d)(s, x))?;
    let boundary = space.boundary_values(|s, x| (data.dirichlet)(s, x));

    let mut u = match &settings.initial {
        Some(u0) if u0.len() != m => return Err(Error::ControlPointMismatch { expected: m, got: u0.len() }),
        Some(u0) => project_control(u0, &lower, &upper)?,
        None => project_control(&vec![0.0; m], &lower, &upper)?,
    };

    let theta = settings.damping;
    let mut max_residual: f64 = 0.0;
    let mut max_backward: f64 = 0.0;
    let mut update_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let (mut y, mut p) = (Vec::new(), Vec::new());
    while iterations < settings.max_iter {
        iterations += 1;
        let mut rhs = volume_load.clone();
        let interface_data: Vec<f64> = g.iter().zip(&u).map(|(g, u)| g + u).collect();
        add_interface_load(space, &interface_data, &mut rhs);
        dirichlet.apply(&mut rhs, &boundary);
        let state = solver.solve(&rhs)?;
        max_residual = max_residual.max(state.relative_residual);
        max_backward = max_backward.max(state.backward_error);
        y = state.solution;

        let mut rhs = mass.mul_vec(&y);
        for (r, t) in rhs.iter_mut().zip(&tracking_load) {
            *r -= t;
        }
        dirichlet.apply_homogeneous(&mut rhs);
        let adjoint = solver.solve(&rhs)?;
        max_residual = max_residual.max(adjoint.relative_residual);
        max_backward = max_backward.max(adjoint.backward_error);
        p = adjoint.solution;

        let target = control_from_adjoint(space, &p, data.alpha, &lower, &upper)?;
        let next: Vec<f64> = u.iter().zip(&target).map(|(u, t)| (1.0 - theta) * u + theta * t).collect();
        let next = project_control(&next, &lower, &upper)?;
        update_norm = u.iter().zip(&next).fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()));
        u = next;
        if update_norm < settings.tol {
            converged = true;
            break;
        }
    }
    let objective = objective_value(space, &y, &|s, x| (data.y_d)(s, x), &u, data.alpha)?;
    Ok(OptimalTriple {
        y,
        p,
        control: u,
        iterations,
        update_norm,
        converged,
        objective,
        max_relative_residual: max_residual,
        max_backward_error: max_backward,
    })
}

/// Reduced gradient `α u + T p` at the interface points, with `T` the conjugate trace.
pub fn reduced_gradient(space: &CutSpace, p: &[f64], u: &[f64], alpha: f64) -> Vec<f64> {
    space.conjugate_trace(p).iter().zip(u).map(|(t, u)| alpha * u + t).collect()
}

/// `Σ_q w_q a_q b_q` over the interface points.
pub fn interface_inner(space: &CutSpace, a: &[f64], b: &[f64]) -> f64 {
    let weights: Vec<f64> = space.interface.iter().map(|q| q.weight).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(a, b)| a * b).collect();
    dot(&weights, &ab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LevelSet;
    use crate::mesh::{build_uniform_mesh, Square};
    use proptest::prelude::*;

    fn constant(v: f64) -> SideField {
        Arc::new(move |_, _| v)
    }

    fn on_interface(v: f64) -> InterfaceField {
        Arc::new(move |_| v)
    }

    fn disc_space(n: usize) -> CutSpace {
        let mesh = build_uniform_mesh(Square::unit(), n).unwrap();
        CutSpace::build(mesh, LevelSet::circle([0.5, 0.5], 0.3)).unwrap()
    }

    fn data(alpha: f64, lower: f64, upper: f64) -> ProblemData {
        ProblemData {
            a: [1.0, 10.0],
            alpha,
            f: constant(1.0),
            g: on_interface(0.0),
            y_d: Arc::new(|s, _| if s == Side::One { 1.0 } else { 0.0 }),
            dirichlet: constant(0.0),
            lower: on_interface(lower),
            upper: on_interface(upper),
        }
    }

    #[test]
    fn projection_examples() {
        let lo = [-1.0; 3];
        let hi = [1.0; 3];
        assert_eq!(project_control(&[0.0, 5.0, -5.0], &lo, &hi).unwrap(), vec![0.0, 1.0, -1.0]);
        assert_eq!(project_control(&[-0.3], &[0.1], &[1.0]).unwrap(), vec![0.1]);
        assert!(matches!(project_control(&[0.0], &[1.0], &[0.0]), Err(Error::InvalidBounds { index: 0, .. })));
        assert!(matches!(project_control(&[0.0, 1.0], &[0.0], &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pinned_control_converges_in_one_step() {
        let space = disc_space(8);
        let result = fixed_point_solve(&space, &data(1.0, 0.25, 0.25), 50.0, &FixedPointSettings::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
        assert!(result.control.iter().all(|&u| u == 0.25));
        assert!(result.max_relative_residual <= DEFAULT_TOL);
    }

    #[test]
    fn loop_converges_and_is_stationary() {
        let space = disc_space(12);
        let d = data(1.0, 0.0, 1.0);
        let result = fixed_point_solve(&space, &d, 50.0, &FixedPointSettings::default()).unwrap();
        assert!(result.converged && result.update_norm < 1e-10);
        assert!(result.control.iter().all(|&u| (0.0..=1.0).contains(&u)));
        // the returned control reproduces itself from the returned adjoint
        let lower = vec![0.0; result.control.len()];
        let upper = vec![1.0; result.control.len()];
        let again = control_from_adjoint(&space, &result.p, 1.0, &lower, &upper).unwrap();
        let gap = again.iter().zip(&result.control).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap < 1e-9, "{gap}");
        // both solvers agree
        let cg = FixedPointSettings { solver: SolverKind::Cg, ..Default::default() };
        let other = fixed_point_solve(&space, &d, 50.0, &cg).unwrap();
        let diff = other.control.iter().zip(&result.control).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn objective_of_zero_state() {
        let mesh = build_uniform_mesh(Square::unit(), 4).unwrap();
        let space = CutSpace::build(mesh, LevelSet::new(|_| 1.0)).unwrap();
        let y = vec![0.0; space.n_dofs()];
        let j = objective_value(&space, &y, &|_, _| 1.0, &[], 1.0).unwrap();
        assert!((j - 0.5).abs() < 1e-14);
    }

    #[test]
    fn settings_are_validated() {
        let space = disc_space(4);
        let d = data(1.0, 0.0, 1.0);
        for bad in [
            FixedPointSettings { damping: 0.0, ..Default::default() },
            FixedPointSettings { damping: 1.5, ..Default::default() },
            FixedPointSettings { max_iter: 0, ..Default::default() },
            FixedPointSettings { tol: -1.0, ..Default::default() },
        ] {
            assert!(fixed_point_solve(&space, &d, 50.0, &bad).is_err());
        }
        assert!(fixed_point_solve(&space, &data(0.0, 0.0, 1.0), 50.0, &FixedPointSettings::default()).is_err());
        assert!(matches!(
            fixed_point_solve(&space, &data(1.0, 1.0, 0.0), 50.0, &FixedPointSettings::default()),
            Err(Error::InvalidBounds { .. })
        ));
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(
            v in prop::collection::vec(-1e3f64..1e3, 1..20),
            a in -10.0f64..10.0,
            w in 0.0f64..10.0,
        ) {
            let lo = vec![a; v.len()];
            let hi = vec![a + w; v.len()];
            let once = project_control(&v, &lo, &hi).unwrap();
            prop_assert!(once.iter().all(|&x| a <= x && x <= a + w));
            let twice = project_control(&once, &lo, &hi).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
