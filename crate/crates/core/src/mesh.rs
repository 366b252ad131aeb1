//! Uniform conforming triangulations of an axis-aligned square.

use crate::{signed_area2, Error, Point, Result};

/// Axis-aligned square domain `[x0, x0 + side] × [y0, y0 + side]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub lower_left: Point,
    pub side: f64,
}

impl Square {
    pub fn new(lower_left: Point, side: f64) -> Self {
        Self { lower_left, side }
    }

    pub fn unit() -> Self {
        Self::new([0.0, 0.0], 1.0)
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn contains(&self, x: Point, tol: f64) -> bool {
        let [x0, y0] = self.lower_left;
        x[0] >= x0 - tol && x[0] <= x0 + self.side + tol && x[1] >= y0 - tol && x[1] <= y0 + self.side + tol
    }
}

/// Triangulation with counter-clockwise cells.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub cells: Vec<[usize; 3]>,
    pub boundary_vertex: Vec<bool>,
    /// Diameter (longest edge) of each cell.
    pub cell_diameter: Vec<f64>,
    /// Maximum cell diameter.
    pub h: f64,
    pub domain: Square,
}

/// Splits each of the `n × n` grid squares along its lower-left to upper-right diagonal.
pub fn build_uniform_mesh(domain: Square, n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("N must be at least 1".into()));
    }
    if !(domain.side > 0.0) || !domain.side.is_finite() {
        return Err(Error::InvalidMesh(format!("side length must be positive, got {}", domain.side)));
    }
    let [x0, y0] = domain.lower_left;
    let step = domain.side / n as f64;
    let np = n + 1;
    let index = |i: usize, j: usize| j * np + i;

    let mut vertices = Vec::with_capacity(np * np);
    let mut boundary_vertex = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            // Pin the last row/column to the exact boundary coordinate.
            let x = if i == n { x0 + domain.side } else { x0 + i as f64 * step };
            let y = if j == n { y0 + domain.side } else { y0 + j as f64 * step };
            vertices.push([x, y]);
            boundary_vertex.push(i == 0 || j == 0 || i == n || j == n);
        }
    }

    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = index(i, j);
            let v10 = index(i + 1, j);
            let v01 = index(i, j + 1);
            let v11 = index(i + 1, j + 1);
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }

    let cell_diameter: Vec<f64> = cells
        .iter()
        .map(|c| {
            let p = c.map(|v| vertices[v]);
            (0..3)
                .map(|k| {
                    let a = p[k];
                    let b = p[(k + 1) % 3];
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let h = cell_diameter.iter().copied().fold(0.0, f64::max);

    Ok(TriMesh { vertices, cells, boundary_vertex, cell_diameter, h, domain })
}

impl TriMesh {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_points(&self, cell: usize) -> [Point; 3] {
        self.cells[cell].map(|v| self.vertices[v])
    }

    pub fn signed_area(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cell_points(cell);
        0.5 * signed_area2(a, b, c)
    }

    pub fn area(&self, cell: usize) -> f64 {
        self.signed_area(cell).abs()
    }

    /// Local edges `(k, (k + 1) % 3)` of a cell as global vertex pairs.
    pub fn cell_edges(&self, cell: usize) -> [(usize, usize); 3] {
        let c = self.cells[cell];
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])]
    }
}
