//! Side-respecting error norms against per-side exact fields.
//!
//! Cut cells are integrated over each side's sub-triangles against that side's
//! exact branch. Interface terms use two Gauss points per chord.

use crate::space::CutSpace;
use crate::{Point, Result, Side};

/// Volume quadrature degree for error norms.
pub const ERROR_DEGREE: usize = 4;

fn volume_sum(space: &CutSpace, degree: usize, mut term: impl FnMut(usize, Side, Point) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for cell in 0..space.mesh.n_cells() {
        for side in Side::BOTH {
            let Some(rule) = space.volume_rule(cell, side, degree)? else { continue };
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                total += w * term(cell, side, x);
            }
        }
    }
    Ok(total)
}

/// `‖v − v_h‖_{0,Ω}`.
pub fn error_l2(space: &CutSpace, coeffs: &[f64], exact: &dyn Fn(Side, Point) -> f64, degree: usize) -> Result<f64> {
    let sq = volume_sum(space, degree, |cell, side, x| (exact(side, x) - space.value(coeffs, cell, side, x)).powi(2))?;
    Ok(sq.sqrt())
}

/// `|v − v_h|_{1,Ω_1 ∪ Ω_2}`.
pub fn error_broken_h1(
    space: &CutSpace,
    coeffs: &[f64],
    exact_grad: &dyn Fn(Side, Point) -> Point,
    degree: usize,
) -> Result<f64> {
    let sq = volume_sum(space, degree, |cell, side, x| {
        let g = exact_grad(side, x);
        let gh = space.gradient(coeffs, cell, side);
        (g[0] - gh[0]).powi(2) + (g[1] - gh[1]).powi(2)
    })?;
    Ok(sq.sqrt())
}

/// Interface part of the mesh-dependent norm:
/// `Σ_K h_K⁻¹ ‖[e]‖²_{Γ_K}` and `Σ_K h_K ‖{∇_n e}‖²_{Γ_K}` (squared).
pub fn interface_norm_terms(
    space: &CutSpace,
    coeffs: &[f64],
    exact: &dyn Fn(Side, Point) -> f64,
    exact_grad: &dyn Fn(Side, Point) -> Point,
) -> (f64, f64) {
    let (mut jump, mut flux) = (0.0, 0.0);
    for q in &space.interface {
        let h = space.mesh.cell_diameter[q.cell];
        let e = |side| exact(side, q.x) - space.value(coeffs, q.cell, side, q.x);
        let en = |side| {
            let g = exact_grad(side, q.x);
            let gh = space.gradient(coeffs, q.cell, side);
            (g[0] - gh[0]) * q.normal[0] + (g[1] - gh[1]) * q.normal[1]
        };
        jump += q.weight / h * (e(Side::One) - e(Side::Two)).powi(2);
        flux += q.weight * h * (q.kappa[0] * en(Side::One) + q.kappa[1] * en(Side::Two)).powi(2);
    }
    (jump, flux)
}

/// `|||v − v_h|||`: broken H¹ seminorm plus the h-weighted jump and average-flux terms.
pub fn error_triple_norm(
    space: &CutSpace,
    coeffs: &[f64],
    exact: &dyn Fn(Side, Point) -> f64,
    exact_grad: &dyn Fn(Side, Point) -> Point,
    degree: usize,
) -> Result<f64> {
    let h1 = error_broken_h1(space, coeffs, exact_grad, degree)?;
    let (jump, flux) = interface_norm_terms(space, coeffs, exact, exact_grad);
    Ok((h1 * h1 + jump + flux).sqrt())
}

/// `‖v − (κ_2 v_{h,1} + κ_1 v_{h,2})‖_{0,Γ_h}`.
pub fn error_interface_trace(space: &CutSpace, coeffs: &[f64], exact_trace: &dyn Fn(Point) -> f64) -> f64 {
    let trace = space.conjugate_trace(coeffs);
    space.interface.iter().zip(&trace).map(|(q, t)| q.weight * (exact_trace(q.x) - t).powi(2)).sum::<f64>().sqrt()
}

/// `‖u − u_h‖_{0,Γ_h}` for a control stored at the interface points.
pub fn control_error(space: &CutSpace, control: &[f64], exact: &dyn Fn(Point) -> f64) -> f64 {
    space.interface.iter().zip(control).map(|(q, u)| q.weight * (exact(q.x) - u).powi(2)).sum::<f64>().sqrt()
}
