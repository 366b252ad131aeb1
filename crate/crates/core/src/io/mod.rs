//! Configuration, convergence tables and field export.

pub mod config;
pub mod csv;
pub mod vtk;

pub use config::{ConfigFile, CustomProblem, ExampleId, MeshSizes, ProblemSource, RunConfig};
pub use csv::{convergence_csv, render_pretty, write_convergence_csv};
pub use vtk::{export_vtk, vtk_string, VtkSummary};
