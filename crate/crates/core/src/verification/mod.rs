//! Manufactured solutions, error norms and convergence studies.

pub mod examples;
pub mod jet;
pub mod norms;
pub mod study;

pub use examples::{derive_sources_check, make_example, ExactSolution, ManufacturedCase};
pub use jet::Jet;
pub use norms::{control_error, error_broken_h1, error_interface_trace, error_l2, error_triple_norm, ERROR_DEGREE};
pub use study::{
    compute_norms, eoc, run_convergence_study, solve_case, CaseSolution, ErrorNorms, ErrorReport, StudyRow,
    StudySettings, COLUMNS,
};
