//! The doubled P1 space `V^h = V_1^h × V_2^h`.
//!
//! Each vertex carries up to one dof per side: a side-`i` dof exists exactly
//! when the vertex belongs to a cut cell or to an interior cell of side `i`.
//! Cut cells therefore see six dofs, interior cells three.

use crate::geometry::{
    classify_elements, cut_all, interface_quadrature, subcell_quadrature, CutCell, ElementClass, LevelSet,
};
use crate::mesh::TriMesh;
use crate::quadrature::{triangle_rule, QuadRule};
use crate::{Error, Point, Result, Side};

/// Gauss points per chord used by assembly, the control and the interface norms.
pub const INTERFACE_POINTS: usize = 2;

#[derive(Debug, Clone)]
pub struct DofHandler {
    /// `vertex_dofs[v][side]`.
    pub vertex_dofs: Vec<[Option<usize>; 2]>,
    /// `cell_dofs[cell][side][local vertex]`.
    pub cell_dofs: Vec<[[Option<usize>; 3]; 2]>,
    /// Owning `(vertex, side)` of every dof.
    pub dof_owner: Vec<(usize, Side)>,
    pub dirichlet: Vec<bool>,
}

impl DofHandler {
    pub fn n_dofs(&self) -> usize {
        self.dof_owner.len()
    }

    pub fn dof(&self, vertex: usize, side: Side) -> Option<usize> {
        self.vertex_dofs[vertex][side.index()]
    }

    /// Local dofs of one side of a cell; `None` if the cell has no dofs on that side.
    pub fn local_dofs(&self, cell: usize, side: Side) -> Option<[usize; 3]> {
        let d = self.cell_dofs[cell][side.index()];
        Some([d[0]?, d[1]?, d[2]?])
    }
}

/// Numbers dofs side-major, then by vertex index.
pub fn build_dof_handler(mesh: &TriMesh, classes: &[ElementClass]) -> DofHandler {
    let mut active = vec![[false; 2]; mesh.n_vertices()];
    for (cell, class) in classes.iter().enumerate() {
        for side in Side::BOTH {
            if class.touches(side) {
                for v in mesh.cells[cell] {
                    active[v][side.index()] = true;
                }
            }
        }
    }
    let mut vertex_dofs = vec![[None; 2]; mesh.n_vertices()];
    let mut dof_owner = Vec::new();
    let mut dirichlet = Vec::new();
    for side in Side::BOTH {
        for v in 0..mesh.n_vertices() {
            if active[v][side.index()] {
                vertex_dofs[v][side.index()] = Some(dof_owner.len());
                dof_owner.push((v, side));
                dirichlet.push(mesh.boundary_vertex[v]);
            }
        }
    }
    let cell_dofs = classes
        .iter()
        .enumerate()
        .map(|(cell, class)| {
            let mut d = [[None; 3]; 2];
            for side in Side::BOTH {
                if class.touches(side) {
                    for (k, &v) in mesh.cells[cell].iter().enumerate() {
                        d[side.index()][k] = vertex_dofs[v][side.index()];
                    }
                }
            }
            d
        })
        .collect();
    DofHandler { vertex_dofs, cell_dofs, dof_owner, dirichlet }
}

/// Affine barycentric coordinates of a cell.
#[derive(Debug, Clone, Copy)]
pub struct CellBasis {
    pub origin: Point,
    pub gradients: [Point; 3],
}

impl CellBasis {
    pub fn new(p: [Point; 3]) -> Self {
        let area2 = crate::signed_area2(p[0], p[1], p[2]);
        let grad = |j: usize, k: usize| [(p[j][1] - p[k][1]) / area2, (p[k][0] - p[j][0]) / area2];
        Self { origin: p[0], gradients: [grad(1, 2), grad(2, 0), grad(0, 1)] }
    }

    #[inline]
    pub fn values(&self, x: Point) -> [f64; 3] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let l1 = self.gradients[1][0] * d[0] + self.gradients[1][1] * d[1];
        let l2 = self.gradients[2][0] * d[0] + self.gradients[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Barycentric tolerance for [`eval_basis`].
pub const INSIDE_TOL: f64 = 1e-10;

/// P1 hat values and gradients on `cell` at `point`; the same hats serve both sides.
pub fn eval_basis(mesh: &TriMesh, cell: usize, point: Point) -> Result<([f64; 3], [Point; 3])> {
    let basis = CellBasis::new(mesh.cell_points(cell));
    let values = basis.values(point);
    if values.iter().any(|&l| l < -INSIDE_TOL) {
        return Err(Error::PointOutsideCell { cell, x: point[0], y: point[1] });
    }
    Ok((values, basis.gradients))
}

/// One Gauss point on an interface chord, in (cell, Gauss index) order.
#[derive(Debug, Clone, Copy)]
pub struct InterfacePoint {
    pub cell: usize,
    /// Index into [`CutSpace::cuts`].
    pub cut: usize,
    pub x: Point,
    pub weight: f64,
    pub normal: Point,
    pub kappa: [f64; 2],
}

/// Everything that depends on the mesh and the interface but not on the PDE data.
#[derive(Debug, Clone)]
pub struct CutSpace {
    pub mesh: TriMesh,
    pub level_set: LevelSet,
    pub classes: Vec<ElementClass>,
    pub cuts: Vec<CutCell>,
    pub cut_of_cell: Vec<Option<usize>>,
    pub dofs: DofHandler,
    pub interface: Vec<InterfacePoint>,
    pub basis: Vec<CellBasis>,
}

impl CutSpace {
    pub fn build(mesh: TriMesh, level_set: LevelSet) -> Result<Self> {
        let classes = classify_elements(&mesh, &level_set);
        let cuts = cut_all(&mesh, &classes, &level_set)?;
        let mut cut_of_cell = vec![None; mesh.n_cells()];
        for (i, cut) in cuts.iter().enumerate() {
            cut_of_cell[cut.cell] = Some(i);
        }
        let dofs = build_dof_handler(&mesh, &classes);
        let mut interface = Vec::with_capacity(cuts.len() * INTERFACE_POINTS);
        for (i, cut) in cuts.iter().enumerate() {
            let rule = interface_quadrature(cut, INTERFACE_POINTS)?;
            for (&x, &weight) in rule.points.iter().zip(&rule.weights) {
                interface.push(InterfacePoint {
                    cell: cut.cell,
                    cut: i,
                    x,
                    weight,
                    normal: cut.normal,
                    kappa: cut.kappa,
                });
            }
        }
        let basis = (0..mesh.n_cells()).map(|c| CellBasis::new(mesh.cell_points(c))).collect();
        Ok(Self { mesh, level_set, classes, cuts, cut_of_cell, dofs, interface, basis })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    /// Side-respecting volume rule; `None` when the cell has no part on `side`.
    pub fn volume_rule(&self, cell: usize, side: Side, degree: usize) -> Result<Option<QuadRule>> {
        match self.classes[cell] {
            ElementClass::Cut => {
                let cut = &self.cuts[self.cut_of_cell[cell].expect("cut cell without geometry")];
                subcell_quadrature(cut, side, degree).map(Some)
            }
            class if class.interior_side() == Some(side) => {
                triangle_rule(self.mesh.cell_points(cell), degree).map(Some)
            }
            _ => Ok(None),
        }
    }

    /// Value of the side-`side` branch of a discrete field on `cell` at `x`.
    #[inline]
    pub fn value(&self, coeffs: &[f64], cell: usize, side: Side, x: Point) -> f64 {
        let dofs = self.dofs.local_dofs(cell, side).expect("cell has no dofs on this side");
        let l = self.basis[cell].values(x);
        l[0] * coeffs[dofs[0]] + l[1] * coeffs[dofs[1]] + l[2] * coeffs[dofs[2]]
    }

    #[inline]
    pub fn gradient(&self, coeffs: &[f64], cell: usize, side: Side) -> Point {
        let dofs = self.dofs.local_dofs(cell, side).expect("cell has no dofs on this side");
        let g = &self.basis[cell].gradients;
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += g[k][0] * coeffs[dofs[k]];
            out[1] += g[k][1] * coeffs[dofs[k]];
        }
        out
    }

    /// Nodal interpolation, each side from its own branch of `f`.
    pub fn interpolate(&self, f: impl Fn(Side, Point) -> f64) -> Vec<f64> {
        self.dofs.dof_owner.iter().map(|&(v, side)| f(side, self.mesh.vertices[v])).collect()
    }

    /// Coefficients that vanish except on Dirichlet dofs, where they take `f`.
    pub fn boundary_values(&self, f: impl Fn(Side, Point) -> f64) -> Vec<f64> {
        self.dofs
            .dof_owner
            .iter()
            .zip(&self.dofs.dirichlet)
            .map(|(&(v, side), &d)| if d { f(side, self.mesh.vertices[v]) } else { 0.0 })
            .collect()
    }

    /// `κ_2 v_1 + κ_1 v_2` at every interface point.
    pub fn conjugate_trace(&self, coeffs: &[f64]) -> Vec<f64> {
        self.interface
            .iter()
            .map(|q| {
                let v1 = self.value(coeffs, q.cell, Side::One, q.x);
                let v2 = self.value(coeffs, q.cell, Side::Two, q.x);
                q.kappa[1] * v1 + q.kappa[0] * v2
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::mesh::{build_uniform_mesh, Square};

    fn example_line() -> LevelSet {
        let k = -(3f64.sqrt()) / 3.0;
        let b = (6.0 + 6f64.sqrt() - 2.0 * 3f64.sqrt()) / 6.0;
        LevelSet::line_above(k, b)
    }

    #[test]
    fn no_interface_gives_standard_p1() {
        let mesh = build_uniform_mesh(Square::unit(), 6).unwrap();
        let space = CutSpace::build(mesh, LevelSet::new(|_| 1.0)).unwrap();
        assert!(space.cuts.is_empty());
        assert_eq!(space.n_dofs(), 49);
        let free = space.dofs.dirichlet.iter().filter(|d| !**d).count();
        assert_eq!(free, 25);
    }

    #[test]
    fn small_disc_doubles_its_patch() {
        let mesh = build_uniform_mesh(Square::unit(), 4).unwrap();
        // a disc around an interior vertex cuts exactly the cells of its patch
        let space = CutSpace::build(mesh, LevelSet::circle([0.5, 0.5], 0.05)).unwrap();
        assert_eq!(space.cuts.len(), 6);
        for cut in &space.cuts {
            for &v in &space.mesh.cells[cut.cell] {
                assert!(space.dofs.dof(v, Side::One).is_some() && space.dofs.dof(v, Side::Two).is_some());
            }
        }
        assert_eq!(space.n_dofs(), 25 + 7);
    }

    #[test]
    fn doubled_dofs_match_vertex_set_count() {
        let mesh = build_uniform_mesh(Square::unit(), 16).unwrap();
        let space = CutSpace::build(mesh, example_line()).unwrap();
        // brute-force recount: vertex sets of each side's cells
        let mut sets = [BTreeSet::new(), BTreeSet::new()];
        for verts in &space.mesh.cells {
            let phis: Vec<f64> = verts
                .iter()
                .map(|&v| crate::geometry::snap(space.level_set.value(space.mesh.vertices[v]), space.mesh.h))
                .collect();
            let has_neg = phis.iter().any(|&p| p < 0.0);
            let has_pos = phis.iter().any(|&p| p >= 0.0);
            for &v in verts {
                if has_neg {
                    sets[0].insert(v);
                }
                if has_pos {
                    sets[1].insert(v);
                }
            }
        }
        assert_eq!(space.n_dofs(), sets[0].len() + sets[1].len());
        for cut in &space.cuts {
            for &v in &space.mesh.cells[cut.cell] {
                assert!(space.dofs.dof(v, Side::One).is_some() && space.dofs.dof(v, Side::Two).is_some());
            }
        }
        // every non-Dirichlet dof is used by some cell
        let mut used = vec![false; space.n_dofs()];
        for cd in &space.dofs.cell_dofs {
            for d in cd.iter().flatten().flatten() {
                used[*d] = true;
            }
        }
        assert!(used.iter().zip(&space.dofs.dirichlet).all(|(u, d)| *u || *d));
        // numbering is side-major
        let first_two = space.dofs.dof_owner.iter().position(|&(_, s)| s == Side::Two).unwrap();
        assert!(space.dofs.dof_owner[first_two..].iter().all(|&(_, s)| s == Side::Two));
    }

    #[test]
    fn basis_on_reference_triangle() {
        let b = CellBasis::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(b.gradients, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(b.values([0.0, 0.0]), [1.0, 0.0, 0.0]);
        assert_eq!(b.values([1.0, 0.0]), [0.0, 1.0, 0.0]);
        assert_eq!(b.values([0.0, 1.0]), [0.0, 0.0, 1.0]);
        let v = b.values([0.2, 0.3]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_basis_rejects_outside_points() {
        let mesh = build_uniform_mesh(Square::unit(), 2).unwrap();
        let p = mesh.cell_points(0);
        assert!(eval_basis(&mesh, 0, p[1]).is_ok());
        assert!(matches!(eval_basis(&mesh, 0, [0.9, 0.9]), Err(Error::PointOutsideCell { .. })));
    }

    #[test]
    fn continuous_linear_is_reproduced_on_both_sides() {
        let mesh = build_uniform_mesh(Square::unit(), 12).unwrap();
        let space = CutSpace::build(mesh, LevelSet::circle([0.47, 0.52], 0.31)).unwrap();
        let f = |x: Point| 0.3 - 1.7 * x[0] + 2.2 * x[1];
        let coeffs = space.interpolate(|_, x| f(x));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for cell in 0..space.mesh.n_cells() {
            let p = space.mesh.cell_points(cell);
            let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let x = [
                p[0][0] + a * (p[1][0] - p[0][0]) + b * (p[2][0] - p[0][0]),
                p[0][1] + a * (p[1][1] - p[0][1]) + b * (p[2][1] - p[0][1]),
            ];
            for side in Side::BOTH {
                if space.classes[cell].touches(side) {
                    assert!((space.value(&coeffs, cell, side, x) - f(x)).abs() <= 1e-13);
                }
            }
        }
        for t in space.conjugate_trace(&coeffs).iter().zip(&space.interface) {
            assert!((t.0 - f(t.1.x)).abs() < 1e-13);
        }
    }
}
