//! Level-set interface, element classification and cut-cell geometry.
//!
//! Convention: `phi < 0` in subdomain 1, `phi > 0` in subdomain 2. Vertex
//! values with `|phi| < 1e-12 h` are pushed to `+1e-12 h`, so an interface
//! passing exactly through a vertex never produces a zero-measure part.
//! Each cut cell carries the straight chord between its two edge crossings.

use std::fmt;
use std::sync::Arc;

use crate::mesh::TriMesh;
use crate::quadrature::{segment_rule, triangle_rule, QuadRule};
use crate::{dot, signed_area2, sub, Error, Point, Result, Side};

/// Relative snapping threshold (multiplied by the mesh size).
pub const SNAP_FACTOR: f64 = 1e-12;

/// Absolute tolerance for locating edge crossings.
pub const CROSSING_TOL: f64 = 1e-13;

/// Scalar field whose zero set is the interface.
#[derive(Clone)]
pub struct LevelSet {
    phi: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
}

impl LevelSet {
    pub fn new(phi: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self { phi: Arc::new(phi) }
    }

    #[inline]
    pub fn value(&self, x: Point) -> f64 {
        (self.phi)(x)
    }

    /// Straight line `x2 = slope x1 + offset`, subdomain 1 above it.
    pub fn line_above(slope: f64, offset: f64) -> Self {
        Self::new(move |x| slope * x[0] + offset - x[1])
    }

    /// Disk of the given radius as subdomain 1.
    pub fn circle(center: Point, radius: f64) -> Self {
        Self::new(move |x| ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt() - radius)
    }

    /// Side of a point, using the same snapping rule as the classification.
    pub fn side_of(&self, x: Point, h: f64) -> Side {
        Side::of_value(snap(self.value(x), h))
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LevelSet")
    }
}

#[inline]
pub fn snap(phi: f64, h: f64) -> f64 {
    let threshold = SNAP_FACTOR * h;
    if phi.abs() < threshold {
        threshold
    } else {
        phi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementClass {
    Cut,
    Interior1,
    Interior2,
}

impl ElementClass {
    /// Whether the cell carries dofs of the given side.
    pub fn touches(self, side: Side) -> bool {
        matches!(
            (self, side),
            (ElementClass::Cut, _) | (ElementClass::Interior1, Side::One) | (ElementClass::Interior2, Side::Two)
        )
    }

    pub fn interior_side(self) -> Option<Side> {
        match self {
            ElementClass::Cut => None,
            ElementClass::Interior1 => Some(Side::One),
            ElementClass::Interior2 => Some(Side::Two),
        }
    }
}

/// Snapped level-set values at all mesh vertices.
pub fn vertex_values(mesh: &TriMesh, ls: &LevelSet) -> Vec<f64> {
    mesh.vertices.iter().map(|&x| snap(ls.value(x), mesh.h)).collect()
}

pub fn classify_values(values: [f64; 3]) -> ElementClass {
    let negative = values.iter().filter(|&&v| v < 0.0).count();
    match negative {
        3 => ElementClass::Interior1,
        0 => ElementClass::Interior2,
        _ => ElementClass::Cut,
    }
}

pub fn classify_elements(mesh: &TriMesh, ls: &LevelSet) -> Vec<ElementClass> {
    let values = vertex_values(mesh, ls);
    mesh.cells.iter().map(|c| classify_values(c.map(|v| values[v]))).collect()
}

/// Geometry of one cut cell.
#[derive(Debug, Clone)]
pub struct CutCell {
    pub cell: usize,
    /// Chord endpoints (edge crossings).
    pub crossings: [Point; 2],
    /// Unit normal pointing from subdomain 1 into subdomain 2.
    pub normal: Point,
    /// `|K_1|`, `|K_2|`.
    pub areas: [f64; 2],
    /// `κ_i = |K_i| / |K|`, with `κ_1 + κ_2 == 1` exactly.
    pub kappa: [f64; 2],
    /// Counter-clockwise sub-triangles tiling each side.
    pub sub_triangles: [Vec<[Point; 3]>; 2],
    pub segment_length: f64,
    pub diameter: f64,
}

impl CutCell {
    pub fn area(&self, side: Side) -> f64 {
        self.areas[side.index()]
    }

    pub fn kappa(&self, side: Side) -> f64 {
        self.kappa[side.index()]
    }

    pub fn midpoint(&self) -> Point {
        let [a, b] = self.crossings;
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }
}

fn ccw(t: [Point; 3]) -> [Point; 3] {
    if signed_area2(t[0], t[1], t[2]) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Crossing on the segment `a → b` by bisection on the snapped level set.
fn bisect_edge(ls: &LevelSet, h: f64, a: Point, b: Point, fa: f64, fb: f64) -> Option<Point> {
    if !(fa.is_finite() && fb.is_finite()) || (fa < 0.0) == (fb < 0.0) {
        return None;
    }
    let length = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let negative_at_a = fa < 0.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // lo stays on a's side, hi on b's side
    while (hi - lo) * length > CROSSING_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = snap(ls.value(lerp(a, b, mid)), h);
        if !fm.is_finite() {
            return None;
        }
        if (fm < 0.0) == negative_at_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lerp(a, b, 0.5 * (lo + hi)))
}

/// Cuts a cell classified `Cut` into its two sides.
pub fn cut_element(mesh: &TriMesh, cell: usize, ls: &LevelSet) -> Result<CutCell> {
    let values = mesh.cells[cell].map(|v| snap(ls.value(mesh.vertices[v]), mesh.h));
    cut_element_with_values(mesh, cell, ls, values)
}

pub(crate) fn cut_element_with_values(mesh: &TriMesh, cell: usize, ls: &LevelSet, values: [f64; 3]) -> Result<CutCell> {
    let pts = mesh.cell_points(cell);
    let ids = mesh.cells[cell];
    cut_triangle(pts, values, ls, mesh.h, mesh.cell_diameter[cell], cell).map_err(|e| match e {
        Error::NoBracket { cell, a, b } => Error::NoBracket { cell, a: ids[a], b: ids[b] },
        other => other,
    })
}

/// Cut of a standalone triangle; `values` are its snapped vertex values.
pub fn cut_triangle(
    pts: [Point; 3],
    values: [f64; 3],
    ls: &LevelSet,
    h: f64,
    diameter: f64,
    cell: usize,
) -> Result<CutCell> {
    let sign_changes = (0..3).filter(|&k| (values[k] < 0.0) != (values[(k + 1) % 3] < 0.0)).count();
    match sign_changes {
        0 => return Err(Error::NotCut(cell)),
        2 => {}
        n => return Err(Error::MultipleCrossings { cell, edges: n }),
    }

    // The lone vertex is the one whose sign differs from both others.
    let lone = (0..3)
        .find(|&k| (values[k] < 0.0) != (values[(k + 1) % 3] < 0.0) && (values[k] < 0.0) != (values[(k + 2) % 3] < 0.0))
        .ok_or(Error::NotCut(cell))?;
    let j = (lone + 1) % 3;
    let k = (lone + 2) % 3;
    let p = bisect_edge(ls, h, pts[lone], pts[j], values[lone], values[j]).ok_or(Error::NoBracket {
        cell,
        a: lone,
        b: j,
    })?;
    let q = bisect_edge(ls, h, pts[lone], pts[k], values[lone], values[k]).ok_or(Error::NoBracket {
        cell,
        a: lone,
        b: k,
    })?;

    let lone_side = Side::of_value(values[lone]);
    let lone_tris = vec![ccw([pts[lone], p, q])];
    let other_tris = vec![ccw([p, pts[j], pts[k]]), ccw([p, pts[k], q])];
    let tri_area = |t: &[Point; 3]| 0.5 * signed_area2(t[0], t[1], t[2]);
    let lone_area: f64 = lone_tris.iter().map(tri_area).sum();
    let other_area: f64 = other_tris.iter().map(tri_area).sum();
    let cell_area = 0.5 * signed_area2(pts[0], pts[1], pts[2]).abs();

    let (mut sub_triangles, mut areas) = (<[Vec<[Point; 3]>; 2]>::default(), [0.0; 2]);
    sub_triangles[lone_side.index()] = lone_tris;
    sub_triangles[lone_side.other().index()] = other_tris;
    areas[lone_side.index()] = lone_area;
    areas[lone_side.other().index()] = other_area;

    // The larger fraction is at least 1/2, so 1 - κ_big is exact and the pair sums to 1.
    let fractions = [areas[0] / cell_area, areas[1] / cell_area];
    let big = if fractions[0] >= fractions[1] { 0 } else { 1 };
    let mut kappa = [0.0; 2];
    kappa[big] = fractions[big].clamp(0.5, 1.0);
    kappa[1 - big] = 1.0 - kappa[big];

    let t = sub(q, p);
    let segment_length = t[0].hypot(t[1]);
    let mut normal = [t[1] / segment_length, -t[0] / segment_length];
    // Orient from side 1 into side 2: the lone vertex lies on the negative side iff it is in side 1.
    let towards_lone = dot(sub(pts[lone], p), normal) > 0.0;
    if towards_lone == (lone_side == Side::One) {
        normal = [-normal[0], -normal[1]];
    }

    Ok(CutCell { cell, crossings: [p, q], normal, areas, kappa, sub_triangles, segment_length, diameter })
}

/// Computes all cut cells; `cuts[i]` belongs to `cells[i]`.
pub fn cut_all(mesh: &TriMesh, classes: &[ElementClass], ls: &LevelSet) -> Result<Vec<CutCell>> {
    let values = vertex_values(mesh, ls);
    classes
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == ElementClass::Cut)
        .map(|(cell, _)| cut_element_with_values(mesh, cell, ls, mesh.cells[cell].map(|v| values[v])))
        .collect()
}

/// Volume rule on one side of a cut cell, exact to `degree` on each sub-triangle.
pub fn subcell_quadrature(cut: &CutCell, side: Side, degree: usize) -> Result<QuadRule> {
    let mut rule = QuadRule { degree, ..Default::default() };
    for &tri in &cut.sub_triangles[side.index()] {
        rule.extend(triangle_rule(tri, degree)?);
    }
    Ok(rule)
}

/// Gauss rule on the chord of a cut cell (length measure).
pub fn interface_quadrature(cut: &CutCell, npoints: usize) -> Result<QuadRule> {
    segment_rule(cut.crossings[0], cut.crossings[1], npoints)
}
