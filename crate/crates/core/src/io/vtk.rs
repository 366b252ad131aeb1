//! Legacy ASCII VTK export of the discrete state and co-state.
//!
//! Uncut cells use the mesh vertices, valued with their own side's dofs. Every
//! cut cell is replaced by the sub-triangles of both sides, each with its own
//! points carrying that side's values, so the jump across Γ renders sharply.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::space::CutSpace;
use crate::{Error, Point, Result, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VtkSummary {
    pub points: usize,
    pub cells: usize,
}

struct Grid {
    points: Vec<Point>,
    y: Vec<f64>,
    p: Vec<f64>,
    cells: Vec<[usize; 3]>,
    side: Vec<u8>,
    cut: Vec<u8>,
}

fn side_label(side: Side) -> u8 {
    side.index() as u8 + 1
}

fn build_grid(space: &CutSpace, y: &[f64], p: &[f64]) -> Result<Grid> {
    let n = space.n_dofs();
    for len in [y.len(), p.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mesh = &space.mesh;
    let h = space.h();
    let mut grid =
        Grid { points: Vec::new(), y: Vec::new(), p: Vec::new(), cells: Vec::new(), side: Vec::new(), cut: Vec::new() };
    for (v, &x) in mesh.vertices.iter().enumerate() {
        let side = space.level_set.side_of(x, h);
        let dof = space.dofs.dof(v, side).or_else(|| space.dofs.dof(v, side.other()));
        grid.points.push(x);
        grid.y.push(dof.map_or(0.0, |d| y[d]));
        grid.p.push(dof.map_or(0.0, |d| p[d]));
    }
    for (cell, class) in space.classes.iter().enumerate() {
        match (class.interior_side(), space.cut_of_cell[cell]) {
            (Some(side), _) => {
                grid.cells.push(mesh.cells[cell]);
                grid.side.push(side_label(side));
                grid.cut.push(0);
            }
            (None, Some(c)) => {
                let cut = &space.cuts[c];
                for side in Side::BOTH {
                    for tri in &cut.sub_triangles[side.index()] {
                        let start = grid.points.len();
                        for &x in tri {
                            grid.points.push(x);
                            grid.y.push(space.value(y, cell, side, x));
                            grid.p.push(space.value(p, cell, side, x));
                        }
                        grid.cells.push([start, start + 1, start + 2]);
                        grid.side.push(side_label(side));
                        grid.cut.push(1);
                    }
                }
            }
            (None, None) => return Err(Error::NotCut(cell)),
        }
    }
    Ok(grid)
}

/// The VTK file contents together with its point and cell counts.
pub fn vtk_string(space: &CutSpace, y: &[f64], p: &[f64], title: &str) -> Result<(String, VtkSummary)> {
    let grid = build_grid(space, y, p)?;
    let np = grid.points.len();
    let nc = grid.cells.len();
    let mut s = String::new();
    // writing to a String cannot fail
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or("cutfem"));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {np} double");
    for x in &grid.points {
        let _ = writeln!(s, "{:e} {:e} 0", x[0], x[1]);
    }
    let _ = writeln!(s, "CELLS {nc} {}", 4 * nc);
    for c in &grid.cells {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "CELL_DATA {nc}");
    for (name, values) in [("side", &grid.side), ("cut", &grid.cut)] {
        let _ = writeln!(s, "SCALARS {name} int 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{v}");
        }
    }
    let _ = writeln!(s, "POINT_DATA {np}");
    for (name, values) in [("y", &grid.y), ("p", &grid.p)] {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{v:e}");
        }
    }
    Ok((s, VtkSummary { points: np, cells: nc }))
}

pub fn export_vtk(space: &CutSpace, y: &[f64], p: &[f64], path: &Path) -> Result<VtkSummary> {
    let title = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cutfem");
    let (text, summary) = vtk_string(space, y, p, title)?;
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(summary)
}
