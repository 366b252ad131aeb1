//! Checks shared by the property tests and the acceptance suite. Each one
//! measures a defect and leaves the threshold to the caller.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cutfem::assembly::{assemble_mass, assemble_stiffness, eliminate_dirichlet};
use cutfem::control::{fixed_point_solve, project_control, FixedPointSettings};
use cutfem::geometry::{cut_triangle, snap, subcell_quadrature, CutCell, LevelSet};
use cutfem::io::config::{custom_case, CustomProblem};
use cutfem::mesh::{build_uniform_mesh, Square};
use cutfem::solver::{solve_spd, SolverKind, SpdSolver};
use cutfem::space::CutSpace;
use cutfem::sparse::{CsrMatrix, TripletList};
use cutfem::{Point, Side};

pub fn triangle_area(t: [Point; 3]) -> f64 {
    0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]))
}

/// A random CCW triangle in the unit square and a random line that cuts it.
pub fn random_cut_triangle(rng: &mut ChaCha8Rng) -> ([Point; 3], LevelSet) {
    loop {
        let mut t: [Point; 3] = [[rng.gen(), rng.gen()], [rng.gen(), rng.gen()], [rng.gen(), rng.gen()]];
        let area = triangle_area(t);
        if area.abs() < 1e-3 {
            continue;
        }
        if area < 0.0 {
            t.swap(1, 2);
        }
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (nx, ny) = (angle.cos(), angle.sin());
        let through: Point = [rng.gen(), rng.gen()];
        let c = nx * through[0] + ny * through[1];
        let ls = LevelSet::new(move |x| nx * x[0] + ny * x[1] - c);
        let negative = t.iter().filter(|&&p| ls.value(p) < 0.0).count();
        if negative == 0 || negative == 3 {
            continue;
        }
        return (t, ls);
    }
}

pub fn cut_of(t: [Point; 3], ls: &LevelSet) -> CutCell {
    let h = 1.0;
    let values = [snap(ls.value(t[0]), h), snap(ls.value(t[1]), h), snap(ls.value(t[2]), h)];
    cut_triangle(t, values, ls, h, 1.0, 0).unwrap()
}

/// Largest of `|κ₁ + κ₂ − 1|` and the relative area defects over `count` random cuts.
pub fn kappa_area_defect(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (t, ls) = random_cut_triangle(&mut rng);
        let cut = cut_of(t, &ls);
        let area = triangle_area(t);
        worst = worst.max((cut.kappa[0] + cut.kappa[1] - 1.0).abs());
        worst = worst.max((cut.areas[0] + cut.areas[1] - area).abs() / area);
        for side in Side::BOTH {
            let sub: f64 = cut.sub_triangles[side.index()].iter().map(|&s| triangle_area(s)).sum();
            worst = worst.max((sub - cut.area(side)).abs() / area);
        }
    }
    worst
}

/// Largest `|Q − MC| / σ` of the degree-6 cut rule against Monte-Carlo sampling.
pub fn monte_carlo_sigmas(count: usize, seed: u64, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = |x: Point| (1.5 * x[0]).exp() * (3.0 * x[1]).sin() + 1.0;
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < count {
        let (t, ls) = random_cut_triangle(&mut rng);
        let cut = cut_of(t, &ls);
        // slivers below a few percent get too few hits for a meaningful σ
        if cut.kappa[0].min(cut.kappa[1]) < 0.05 {
            continue;
        }
        tested += 1;
        let area = triangle_area(t);
        for side in Side::BOTH {
            let rule = subcell_quadrature(&cut, side, 6).unwrap().integrate(f);
            let (mut sum, mut sum2) = (0.0, 0.0);
            for _ in 0..samples {
                let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
                if a + b > 1.0 {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                let x = [
                    t[0][0] + a * (t[1][0] - t[0][0]) + b * (t[2][0] - t[0][0]),
                    t[0][1] + a * (t[1][1] - t[0][1]) + b * (t[2][1] - t[0][1]),
                ];
                let v = if Side::of_value(ls.value(x)) == side { area * f(x) } else { 0.0 };
                sum += v;
                sum2 += v * v;
            }
            let mean = sum / samples as f64;
            let sigma = ((sum2 / samples as f64 - mean * mean) / samples as f64).sqrt();
            worst = worst.max((rule - mean).abs() / sigma);
        }
    }
    worst
}

/// A line (`kind` 0) or circle through the unit square from parameters in `[0, 1)`.
pub fn level_set_from((kind, a, b, c): (u8, f64, f64, f64)) -> LevelSet {
    if kind == 0 {
        let angle = a * std::f64::consts::TAU;
        let (nx, ny) = (angle.cos(), angle.sin());
        let (px, py) = (0.2 + 0.6 * b, 0.2 + 0.6 * c);
        LevelSet::new(move |x| nx * (x[0] - px) + ny * (x[1] - py))
    } else {
        LevelSet::circle([0.35 + 0.3 * a, 0.35 + 0.3 * b], 0.15 + 0.15 * c)
    }
}

pub fn random_level_set_params(rng: &mut ChaCha8Rng) -> (u8, f64, f64, f64) {
    (rng.gen_range(0..2), rng.gen(), rng.gen(), rng.gen())
}

pub fn space_for(ls: LevelSet, n: usize) -> Option<CutSpace> {
    CutSpace::build(build_uniform_mesh(Square::unit(), n).unwrap(), ls).ok()
}

/// Largest entry of `|A − Aᵀ|` over stiffness and mass matrices.
pub fn symmetry_defect(space: &CutSpace, a: [f64; 2]) -> f64 {
    let stiffness = assemble_stiffness(space, a, 50.0).unwrap().matrix;
    stiffness.asymmetry().max(assemble_mass(space).unwrap().asymmetry())
}

/// Max nodal deviation of the discrete solution from the global linear `c₀ + c₁x₁ + c₂x₂`.
pub fn patch_test_deviation(space: &CutSpace, a: f64, c: [f64; 3]) -> f64 {
    let exact = move |_: Side, x: Point| c[0] + c[1] * x[0] + c[2] * x[1];
    let system = assemble_stiffness(space, [a, a], 50.0).unwrap();
    let dirichlet = eliminate_dirichlet(&system.matrix, &space.dofs.dirichlet);
    let mut rhs = vec![0.0; space.n_dofs()];
    dirichlet.apply(&mut rhs, &space.boundary_values(exact));
    let solver = SpdSolver::new(dirichlet.matrix.clone(), SolverKind::Cholesky, 1e-12).unwrap();
    let y = solver.solve(&rhs).unwrap().solution;
    let reference = space.interpolate(exact);
    y.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

/// A sparse SPD matrix: a randomly weighted grid-graph Laplacian plus a diagonal shift.
pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> CsrMatrix {
    let mut t = TripletList::new(n, n);
    let add_edge = |t: &mut TripletList, i: usize, j: usize, w: f64| {
        t.push(i, i, w);
        t.push(j, j, w);
        t.push(i, j, -w);
        t.push(j, i, -w);
    };
    let side = (n as f64).sqrt() as usize;
    for i in 0..n {
        if (i + 1) % side != 0 && i + 1 < n {
            add_edge(&mut t, i, i + 1, rng.gen_range(0.1..10.0));
        }
        if i + side < n {
            add_edge(&mut t, i, i + side, rng.gen_range(0.1..10.0));
        }
        if i + 7 < n && rng.gen_bool(0.3) {
            add_edge(&mut t, i, i + 7, rng.gen_range(0.1..1.0));
        }
        t.push(i, i, rng.gen_range(0.01..0.1));
    }
    t.into_csr()
}

/// Relative 2-norm difference of CG and Cholesky solutions to a dense Cholesky oracle.
pub fn dense_oracle_difference(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_spd(n, &mut rng);
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let oracle = dense.cholesky().expect("oracle matrix is SPD").solve(&DVector::from_vec(b.clone()));
    let scale = oracle.norm();
    let cg = solve_spd(&a, &b, 1e-12).unwrap().solution;
    let direct = SpdSolver::new(a, SolverKind::Cholesky, 1e-12).unwrap().solve(&b).unwrap().solution;
    [cg, direct]
        .iter()
        .map(|x| x.iter().zip(oracle.iter()).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt() / scale)
        .fold(0.0, f64::max)
}

/// Largest relative residual over all solves of two custom control problems,
/// with both linear solvers; `None` if a fixed point fails to converge.
pub fn galerkin_residual() -> Option<f64> {
    let mut worst: f64 = 0.0;
    for (circle, line) in [(Some([0.5, 0.45, 0.3]), None), (None, Some([0.3, 0.4]))] {
        let custom = CustomProblem {
            lower_left: [0.0, 0.0],
            side: 1.0,
            a: [1.0, 10.0],
            circle,
            line,
            f: [1.0, -2.0],
            y_d: [0.5, 0.0],
            g: 0.3,
            boundary: [0.0, 0.2],
            bounds: [-1.0, 1.0],
        };
        let case = custom_case(&custom).unwrap();
        let space = CutSpace::build(build_uniform_mesh(case.domain, 24).unwrap(), case.level_set.clone()).unwrap();
        for solver in [SolverKind::Cholesky, SolverKind::Cg] {
            let settings = FixedPointSettings { solver, ..Default::default() };
            let triple = fixed_point_solve(&space, &case.problem_data(), 50.0, &settings).unwrap();
            if !triple.converged {
                return None;
            }
            worst = worst.max(triple.max_relative_residual);
        }
    }
    Some(worst)
}

/// Whether projection is feasible and idempotent on `count` random inputs.
pub fn projection_holds(count: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).all(|_| {
        let len = rng.gen_range(1..50);
        let values: Vec<f64> = (0..len).map(|_| rng.gen_range(-1e3..1e3)).collect();
        let lower: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.0..5.0)).collect();
        let once = project_control(&values, &lower, &upper).unwrap();
        let feasible = (0..len).all(|i| lower[i] <= once[i] && once[i] <= upper[i]);
        feasible && project_control(&once, &lower, &upper).unwrap() == once
    })
}
