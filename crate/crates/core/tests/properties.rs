//! Properties that hold for arbitrary cuts and data, independent of the examples.

mod common;

use proptest::prelude::*;

use common::*;
use cutfem::control::project_control;
use cutfem::verification::{derive_sources_check, make_example};

#[test]
fn kappa_and_areas_add_up_on_random_cuts() {
    let defect = kappa_area_defect(1000, 7);
    assert!(defect <= 1e-12, "{defect:e}");
}

#[test]
fn cut_quadrature_agrees_with_monte_carlo() {
    let sigmas = monte_carlo_sigmas(10, 11, 200_000);
    assert!(sigmas <= 3.0, "{sigmas} σ");
}

fn arbitrary_level_set() -> impl Strategy<Value = (u8, f64, f64, f64)> {
    (0u8..2, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn assembled_matrices_are_exactly_symmetric(params in arbitrary_level_set(), a1 in 0.1..100.0f64, a2 in 0.1..100.0f64) {
        let space = space_for(level_set_from(params), 8);
        prop_assume!(space.is_some());
        prop_assert_eq!(symmetry_defect(&space.unwrap(), [a1, a2]), 0.0);
    }

    #[test]
    fn patch_test_reproduces_global_linears(params in arbitrary_level_set(), a in 0.5..20.0f64, c in prop::array::uniform3(-2.0..2.0f64)) {
        let space = space_for(level_set_from(params), 8);
        prop_assume!(space.is_some());
        let worst = patch_test_deviation(&space.unwrap(), a, c);
        prop_assert!(worst <= 1e-10, "max deviation {worst:e}");
    }

    #[test]
    fn projection_is_feasible_and_idempotent(v in prop::collection::vec((-1e3..1e3f64, -5.0..5.0f64, 0.0..5.0f64), 1..50)) {
        let values: Vec<f64> = v.iter().map(|t| t.0).collect();
        let lower: Vec<f64> = v.iter().map(|t| t.1).collect();
        let upper: Vec<f64> = v.iter().map(|t| t.1 + t.2).collect();
        let once = project_control(&values, &lower, &upper).unwrap();
        for i in 0..once.len() {
            prop_assert!(lower[i] <= once[i] && once[i] <= upper[i]);
        }
        prop_assert_eq!(project_control(&once, &lower, &upper).unwrap(), once);
    }
}

#[test]
fn sparse_solvers_match_dense_oracle() {
    let diff = dense_oracle_difference(200, 3);
    assert!(diff <= 1e-9, "relative difference {diff:e}");
}

#[test]
fn galerkin_residual_is_small_after_every_solve() {
    let worst = galerkin_residual().expect("fixed points converge");
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn derived_sources_satisfy_the_pdes() {
    for id in ["5.1", "5.2"] {
        let defect = derive_sources_check(&make_example(id).unwrap(), 200, 5).unwrap();
        assert!(defect <= 1e-6, "{id}: defect {defect:e}");
    }
}
