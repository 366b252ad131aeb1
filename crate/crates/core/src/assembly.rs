//! Assembly of the κ-weighted Nitsche form
//!
//! ```text
//! a_h(y, w) = Σ_i (a ∇y, ∇w)_{Ω_i} − ([y], {a ∇_n w})_Γ − ({a ∇_n y}, [w])_Γ + λ ([y], [w])_Γ
//! ```
//!
//! with `[v] = v_1 − v_2`, `{v} = κ_1 v_1 + κ_2 v_2`, `n` pointing from Ω_1 into
//! Ω_2 and `λ|_K = C̃ max(a_1, a_2) / h_K`. Interface loads are tested against
//! the conjugate average `κ_2 w_1 + κ_1 w_2`.

use crate::geometry::ElementClass;
use crate::space::{CutSpace, InterfacePoint};
use crate::sparse::{CsrMatrix, TripletList};
use crate::{Error, Point, Result, Side};

/// Volume quadrature degree for loads and mass terms.
pub const VOLUME_DEGREE: usize = 2;

/// Default penalty constant `C̃`.
pub const DEFAULT_CTILDE: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPenalty {
    pub cell: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub penalties: Vec<CellPenalty>,
}

/// `λ|_K = C̃ h_K⁻¹ max(a_1, a_2)`.
pub fn penalty_parameter(ctilde: f64, cell_diameter: f64, a: [f64; 2]) -> f64 {
    ctilde / cell_diameter * a[0].max(a[1])
}

fn check_coefficients(a: [f64; 2], ctilde: f64) -> Result<()> {
    for (name, v) in [("a1", a[0]), ("a2", a[1])] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter { name, reason: format!("must be positive, got {v}") });
        }
    }
    if !(ctilde > 0.0) || !ctilde.is_finite() {
        return Err(Error::InvalidParameter { name: "ctilde", reason: format!("must be positive, got {ctilde}") });
    }
    Ok(())
}

fn push_symmetric<const N: usize>(t: &mut TripletList, dofs: &[usize; N], local: &[[f64; N]; N]) {
    for i in 0..N {
        for j in 0..N {
            // mirror the upper triangle so that A is exactly symmetric
            let v = if j >= i { local[i][j] } else { local[j][i] };
            t.push(dofs[i], dofs[j], v);
        }
    }
}

/// Stiffness matrix of `a_h` (the right-hand side is left at zero).
pub fn assemble_stiffness(space: &CutSpace, a: [f64; 2], ctilde: f64) -> Result<AssembledSystem> {
    check_coefficients(a, ctilde)?;
    let n = space.n_dofs();
    let mesh = &space.mesh;
    let mut triplets = TripletList::with_capacity(n, n, 9 * mesh.n_cells() + 36 * space.cuts.len());
    let mut penalties = Vec::with_capacity(space.cuts.len());

    for cell in 0..mesh.n_cells() {
        let grads = &space.basis[cell].gradients;
        match space.classes[cell] {
            ElementClass::Cut => {
                let cut = &space.cuts[space.cut_of_cell[cell].expect("cut geometry")];
                let d1 = space.dofs.local_dofs(cell, Side::One).expect("side-1 dofs on cut cell");
                let d2 = space.dofs.local_dofs(cell, Side::Two).expect("side-2 dofs on cut cell");
                let dofs = [d1[0], d1[1], d1[2], d2[0], d2[1], d2[2]];
                let mut local = [[0.0; 6]; 6];
                for side in Side::BOTH {
                    let rule = space.volume_rule(cell, side, 1)?.expect("cut side rule");
                    let coef = a[side.index()] * rule.total_weight();
                    let off = 3 * side.index();
                    for i in 0..3 {
                        for j in 0..3 {
                            local[off + i][off + j] += coef * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                        }
                    }
                }
                let lambda = penalty_parameter(ctilde, mesh.cell_diameter[cell], a);
                penalties.push(CellPenalty { cell, lambda });
                let gn = grads.map(|g| g[0] * cut.normal[0] + g[1] * cut.normal[1]);
                let flux_weight = [cut.kappa[0] * a[0], cut.kappa[1] * a[1]];
                for q in space.interface.iter().filter(|q| q.cell == cell) {
                    let l = space.basis[cell].values(q.x);
                    let mut jump = [0.0; 6];
                    let mut flux = [0.0; 6];
                    for k in 0..3 {
                        jump[k] = l[k];
                        jump[3 + k] = -l[k];
                        flux[k] = flux_weight[0] * gn[k];
                        flux[3 + k] = flux_weight[1] * gn[k];
                    }
                    for i in 0..6 {
                        for j in i..6 {
                            local[i][j] +=
                                q.weight * (-jump[i] * flux[j] - flux[i] * jump[j] + lambda * jump[i] * jump[j]);
                        }
                    }
                }
                push_symmetric(&mut triplets, &dofs, &local);
            }
            class => {
                let side = class.interior_side().expect("interior class");
                let dofs = space.dofs.local_dofs(cell, side).expect("interior dofs");
                let area = mesh.area(cell);
                let coef = a[side.index()] * area;
                let mut local = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in i..3 {
                        local[i][j] = coef * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    }
                }
                push_symmetric(&mut triplets, &dofs, &local);
            }
        }
    }
    let matrix = triplets.into_csr();
    if !matrix.is_finite() {
        return Err(Error::NonFinite("stiffness matrix"));
    }
    Ok(AssembledSystem { matrix, rhs: vec![0.0; n], penalties })
}

/// Side-respecting mass matrix `(y, w)_Ω` (degree-2 rule, exact for P1 products).
pub fn assemble_mass(space: &CutSpace) -> Result<CsrMatrix> {
    let n = space.n_dofs();
    let mut triplets = TripletList::with_capacity(n, n, 9 * space.mesh.n_cells() + 18 * space.cuts.len());
    for cell in 0..space.mesh.n_cells() {
        for side in Side::BOTH {
            let Some(rule) = space.volume_rule(cell, side, VOLUME_DEGREE)? else { continue };
            let dofs = space.dofs.local_dofs(cell, side).expect("dofs on active side");
            let mut local = [[0.0; 3]; 3];
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let l = space.basis[cell].values(x);
                for i in 0..3 {
                    for j in i..3 {
                        local[i][j] += w * l[i] * l[j];
                    }
                }
            }
            push_symmetric(&mut triplets, &dofs, &local);
        }
    }
    Ok(triplets.into_csr())
}

/// `(f, w)_Ω` with each side's branch of `f`.
pub fn assemble_volume_load(space: &CutSpace, f: impl Fn(Side, Point) -> f64) -> Result<Vec<f64>> {
    let mut b = vec![0.0; space.n_dofs()];
    for cell in 0..space.mesh.n_cells() {
        for side in Side::BOTH {
            let Some(rule) = space.volume_rule(cell, side, VOLUME_DEGREE)? else { continue };
            let dofs = space.dofs.local_dofs(cell, side).expect("dofs on active side");
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let fx = w * f(side, x);
                let l = space.basis[cell].values(x);
                for k in 0..3 {
                    b[dofs[k]] += fx * l[k];
                }
            }
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("volume load"));
    }
    Ok(b)
}

/// `(v, κ_2 w_1 + κ_1 w_2)_Γ` for `v` given at the interface points.
pub fn assemble_interface_load(space: &CutSpace, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != space.interface.len() {
        return Err(Error::ControlPointMismatch { expected: space.interface.len(), got: values.len() });
    }
    let mut b = vec![0.0; space.n_dofs()];
    add_interface_load(space, values, &mut b);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("interface load"));
    }
    Ok(b)
}

pub(crate) fn add_interface_load(space: &CutSpace, values: &[f64], b: &mut [f64]) {
    for (q, &v) in space.interface.iter().zip(values) {
        let l = space.basis[q.cell].values(q.x);
        let d1 = space.dofs.local_dofs(q.cell, Side::One).expect("side-1 dofs");
        let d2 = space.dofs.local_dofs(q.cell, Side::Two).expect("side-2 dofs");
        let s = q.weight * v;
        for k in 0..3 {
            b[d1[k]] += s * q.kappa[1] * l[k];
            b[d2[k]] += s * q.kappa[0] * l[k];
        }
    }
}

/// State load `(f, w)_Ω + (g + u, κ_2 w_1 + κ_1 w_2)_Γ`; `u` lives on the interface points.
pub fn assemble_state_rhs(
    space: &CutSpace,
    f: impl Fn(Side, Point) -> f64,
    g: impl Fn(&InterfacePoint) -> f64,
    u: &[f64],
) -> Result<Vec<f64>> {
    if u.len() != space.interface.len() {
        return Err(Error::ControlPointMismatch { expected: space.interface.len(), got: u.len() });
    }
    let mut b = assemble_volume_load(space, f)?;
    let total: Vec<f64> = space.interface.iter().zip(u).map(|(q, &uq)| g(q) + uq).collect();
    add_interface_load(space, &total, &mut b);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state load"));
    }
    Ok(b)
}

/// Adjoint load `(y_h − y_d, w)_Ω`, `y_h` evaluated with each side's own dofs.
pub fn assemble_adjoint_rhs(space: &CutSpace, y: &[f64], y_d: impl Fn(Side, Point) -> f64) -> Result<Vec<f64>> {
    if y.len() != space.n_dofs() {
        return Err(Error::DimensionMismatch { expected: space.n_dofs(), got: y.len() });
    }
    assemble_volume_load_with(space, |cell, side, x| space.value(y, cell, side, x) - y_d(side, x))
}

fn assemble_volume_load_with(space: &CutSpace, f: impl Fn(usize, Side, Point) -> f64) -> Result<Vec<f64>> {
    let mut b = vec![0.0; space.n_dofs()];
    for cell in 0..space.mesh.n_cells() {
        for side in Side::BOTH {
            let Some(rule) = space.volume_rule(cell, side, VOLUME_DEGREE)? else { continue };
            let dofs = space.dofs.local_dofs(cell, side).expect("dofs on active side");
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let fx = w * f(cell, side, x);
                let l = space.basis[cell].values(x);
                for k in 0..3 {
                    b[dofs[k]] += fx * l[k];
                }
            }
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("adjoint load"));
    }
    Ok(b)
}

/// Symmetric Dirichlet elimination: Dirichlet rows and columns are zeroed with a
/// unit diagonal, and their coupling to free rows is kept for lifting.
#[derive(Debug, Clone)]
pub struct DirichletSystem {
    pub matrix: CsrMatrix,
    coupling: CsrMatrix,
    mask: Vec<bool>,
}

pub fn eliminate_dirichlet(matrix: &CsrMatrix, mask: &[bool]) -> DirichletSystem {
    let n = matrix.nrows;
    assert_eq!(mask.len(), n);
    let mut reduced = TripletList::with_capacity(n, n, matrix.nnz());
    let mut coupling = TripletList::new(n, n);
    for i in 0..n {
        if mask[i] {
            reduced.push(i, i, 1.0);
            continue;
        }
        for (j, v) in matrix.row(i) {
            if mask[j] {
                coupling.push(i, j, v);
            } else {
                reduced.push(i, j, v);
            }
        }
    }
    DirichletSystem { matrix: reduced.into_csr(), coupling: coupling.into_csr(), mask: mask.to_vec() }
}

impl DirichletSystem {
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Lifts the boundary values `g` (read on Dirichlet dofs) into `rhs`.
    pub fn apply(&self, rhs: &mut [f64], g: &[f64]) {
        let lift = self.coupling.mul_vec(g);
        for i in 0..rhs.len() {
            if self.mask[i] {
                rhs[i] = g[i];
            } else {
                rhs[i] -= lift[i];
            }
        }
    }

    pub fn apply_homogeneous(&self, rhs: &mut [f64]) {
        for (r, &m) in rhs.iter_mut().zip(&self.mask) {
            if m {
                *r = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LevelSet;
    use crate::mesh::{build_uniform_mesh, Square};

    fn plain_space(n: usize) -> CutSpace {
        CutSpace::build(build_uniform_mesh(Square::unit(), n).unwrap(), LevelSet::new(|_| 1.0)).unwrap()
    }

    #[test]
    fn local_stiffness_of_unit_right_triangle() {
        // one grid square → cell 0 = (0,0),(1,0),(1,1); its right angle sits at (1,0)
        let space = plain_space(1);
        let a = assemble_stiffness(&space, [1.0, 1.0], 50.0).unwrap().matrix;
        let m = &space.mesh;
        let c0 = m.cells[0];
        // reorder so that the right-angle vertex comes first
        let order = [c0[1], c0[0], c0[2]];
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        // cell 1 shares the diagonal (0,0)-(1,1); subtract its contribution via a one-cell assembly
        let mut only0 = TripletList::new(4, 4);
        let g = space.basis[0].gradients;
        for i in 0..3 {
            for j in 0..3 {
                only0.push(c0[i], c0[j], 0.5 * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
            }
        }
        let only0 = only0.into_csr();
        for i in 0..3 {
            for j in 0..3 {
                assert!((only0.get(order[i], order[j]) - expected[i][j]).abs() < 1e-15);
            }
        }
        // the full 2-cell matrix is the standard P1 Laplacian of the square
        assert_eq!(a.asymmetry(), 0.0);
        let rowsum: Vec<f64> = (0..4).map(|i| a.row(i).map(|(_, v)| v).sum()).collect();
        assert!(rowsum.iter().all(|s| s.abs() < 1e-14));
    }

    #[test]
    fn penalty_formula() {
        let h = 2f64.sqrt() / 16.0;
        let lambda = penalty_parameter(50.0, h, [1.0, 100.0]);
        assert!((lambda - 50.0 * 100.0 * 16.0 / 2f64.sqrt()).abs() < 1e-9);
        assert!((lambda - 5.65685e4).abs() < 1.0);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let space = plain_space(2);
        assert!(assemble_stiffness(&space, [0.0, 1.0], 50.0).is_err());
        assert!(assemble_stiffness(&space, [1.0, 1.0], -5.0).is_err());
    }

    #[test]
    fn cut_stiffness_is_symmetric_and_records_penalties() {
        let mesh = build_uniform_mesh(Square::unit(), 16).unwrap();
        let space = CutSpace::build(mesh, LevelSet::circle([0.5, 0.5], 0.3)).unwrap();
        let sys = assemble_stiffness(&space, [1.0, 100.0], 50.0).unwrap();
        assert_eq!(sys.matrix.asymmetry(), 0.0);
        assert_eq!(sys.penalties.len(), space.cuts.len());
        for p in &sys.penalties {
            assert_eq!(p.lambda, penalty_parameter(50.0, space.mesh.cell_diameter[p.cell], [1.0, 100.0]));
        }
    }

    #[test]
    fn zero_data_gives_zero_load() {
        let mesh = build_uniform_mesh(Square::unit(), 8).unwrap();
        let space = CutSpace::build(mesh, LevelSet::circle([0.5, 0.5], 0.3)).unwrap();
        let u = vec![0.0; space.interface.len()];
        let b = assemble_state_rhs(&space, |_, _| 0.0, |_| 0.0, &u).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
        assert!(matches!(
            assemble_state_rhs(&space, |_, _| 0.0, |_| 0.0, &u[1..]),
            Err(Error::ControlPointMismatch { .. })
        ));
    }

    #[test]
    fn unit_load_without_interface() {
        let space = plain_space(4);
        let b = assemble_volume_load(&space, |_, _| 1.0).unwrap();
        let mut expected = vec![0.0; space.n_dofs()];
        for cell in 0..space.mesh.n_cells() {
            for &v in &space.mesh.cells[cell] {
                expected[space.dofs.dof(v, Side::Two).unwrap()] += space.mesh.area(cell) / 3.0;
            }
        }
        for (x, y) in b.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn interface_load_of_continuous_test_function() {
        let mesh = build_uniform_mesh(Square::unit(), 10).unwrap();
        let space = CutSpace::build(mesh, LevelSet::circle([0.45, 0.5], 0.27)).unwrap();
        let ones = vec![1.0; space.interface.len()];
        let b = assemble_interface_load(&space, &ones).unwrap();
        // test with w = x1 + 2 x2 on both sides: Σ_dofs w_dof b_dof = ∫_Γh w ds
        let w = space.interpolate(|_, x| x[0] + 2.0 * x[1]);
        let lhs: f64 = w.iter().zip(&b).map(|(a, b)| a * b).sum();
        let rhs: f64 = space.interface.iter().map(|q| q.weight * (q.x[0] + 2.0 * q.x[1])).sum();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn adjoint_load_is_a_mass_column() {
        let space = plain_space(4);
        let mass = assemble_mass(&space).unwrap();
        let v = space.dofs.dof(12, Side::Two).unwrap();
        let mut y = vec![0.0; space.n_dofs()];
        y[v] = 1.0;
        let b = assemble_adjoint_rhs(&space, &y, |_, _| 0.0).unwrap();
        for (i, bi) in b.iter().enumerate() {
            assert!((bi - mass.get(i, v)).abs() < 1e-15);
        }
        // interior vertex of the uniform mesh: 6 incident cells of area 1/32 → diag = 6 · area/6
        assert!((mass.get(v, v) - 6.0 * (1.0 / 32.0) / 6.0).abs() < 1e-15);
        // consistency with a representable desired state
        let y = space.interpolate(|_, x| 1.0 + x[0]);
        let b = assemble_adjoint_rhs(&space, &y, |_, x| 1.0 + x[0]).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-15));
        assert!(matches!(assemble_adjoint_rhs(&space, &y[1..], |_, _| 0.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dirichlet_elimination_lifts_boundary_values() {
        let a = CsrMatrix::from_dense(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let sys = eliminate_dirichlet(&a, &[true, false, false]);
        assert_eq!(sys.matrix.asymmetry(), 0.0);
        assert_eq!(sys.matrix.get(0, 0), 1.0);
        assert_eq!(sys.matrix.get(1, 0), 0.0);
        let mut rhs = vec![9.0, 0.0, 0.0];
        sys.apply(&mut rhs, &[3.0, 0.0, 0.0]);
        assert_eq!(rhs, vec![3.0, 3.0, 0.0]);
    }
}
