//! Manufactured test cases with known optimal triples.
//!
//! * `5.1`: straight interface through the unit square, coefficients (1, 100).
//! * `5.2`: diamond-shaped polygonal interface in `[0, 2]²`, coefficients (1, 10).
//! * `5.3`: five-pointed star in `[−1, 1]²`, coefficients (1, 10), no exact solution.
//!
//! For the first two, `f`, `g` and `y_d` are derived from the exact state and
//! co-state: `f_i = −a_i Δy_i`, `g = [a ∇_n y] − u`, `y_d,i = y_i + a_i Δp_i`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::jet::Jet;
use crate::control::{InterfaceField, ProblemData, SideField};
use crate::geometry::LevelSet;
use crate::mesh::Square;
use crate::{Error, Point, Result, Side};

/// A per-side field with its gradient and Laplacian.
pub type JetField = Arc<dyn Fn(Side, Point) -> Jet + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub y: JetField,
    pub p: JetField,
    pub u: InterfaceField,
}

#[derive(Clone)]
pub struct ManufacturedCase {
    pub id: String,
    pub domain: Square,
    pub level_set: LevelSet,
    pub a: [f64; 2],
    pub alpha: f64,
    pub lower: InterfaceField,
    pub upper: InterfaceField,
    pub f: SideField,
    pub g: InterfaceField,
    pub y_d: SideField,
    /// Boundary values of the state.
    pub dirichlet: SideField,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .field("a", &self.a)
            .field("alpha", &self.alpha)
            .field("has_exact", &self.has_exact())
            .finish()
    }
}

impl ManufacturedCase {
    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Same case with another regularisation weight. The exact co-state of the
    /// manufactured cases vanishes on Γ, so `u*` and `y_d` are unchanged.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn problem_data(&self) -> ProblemData {
        ProblemData {
            a: self.a,
            alpha: self.alpha,
            f: self.f.clone(),
            g: self.g.clone(),
            y_d: self.y_d.clone(),
            dirichlet: self.dirichlet.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    /// Unit normal of the interface at `x` (from side 1 into side 2), from
    /// central differences of the level set.
    pub fn interface_normal(&self, x: Point) -> Point {
        level_set_normal(&self.level_set, x, 1e-7 * self.domain.side)
    }
}

fn level_set_normal(ls: &LevelSet, x: Point, step: f64) -> Point {
    let gx = (ls.value([x[0] + step, x[1]]) - ls.value([x[0] - step, x[1]])) / (2.0 * step);
    let gy = (ls.value([x[0], x[1] + step]) - ls.value([x[0], x[1] - step])) / (2.0 * step);
    let n = gx.hypot(gy);
    [gx / n, gy / n]
}

/// Builds one of the three predefined cases (`"5.1"`, `"5.2"`, `"5.3"`).
pub fn make_example(id: &str) -> Result<ManufacturedCase> {
    match id.trim().trim_start_matches("ex").trim_start_matches("example") {
        "5.1" => Ok(straight_interface()),
        "5.2" => Ok(diamond_interface()),
        "5.3" => Ok(five_star()),
        _ => Err(Error::UnknownExample(id.to_string())),
    }
}

/// Assembles `f`, `g`, `y_d` and boundary data from exact fields.
fn manufactured(
    id: &str,
    domain: Square,
    level_set: LevelSet,
    a: [f64; 2],
    exact: ExactSolution,
    lower: InterfaceField,
    upper: InterfaceField,
) -> ManufacturedCase {
    let y = exact.y.clone();
    let f: SideField = Arc::new(move |s, x| -a[s.index()] * y(s, x).lap);
    let (y, p) = (exact.y.clone(), exact.p.clone());
    let y_d: SideField = Arc::new(move |s, x| y(s, x).value + a[s.index()] * p(s, x).lap);
    let y = exact.y.clone();
    let dirichlet: SideField = Arc::new(move |s, x| y(s, x).value);
    let (y, u, ls) = (exact.y.clone(), exact.u.clone(), level_set.clone());
    let step = 1e-7 * domain.side;
    let g: InterfaceField = Arc::new(move |x| {
        let n = level_set_normal(&ls, x, step);
        let (g1, g2) = (y(Side::One, x).grad, y(Side::Two, x).grad);
        let flux_jump = (a[0] * g1[0] - a[1] * g2[0]) * n[0] + (a[0] * g1[1] - a[1] * g2[1]) * n[1];
        flux_jump - u(x)
    });
    ManufacturedCase {
        id: id.to_string(),
        domain,
        level_set,
        a,
        alpha: 1.0,
        lower,
        upper,
        f,
        g,
        y_d,
        dirichlet,
        exact: Some(exact),
    }
}

fn straight_interface() -> ManufacturedCase {
    let k = -3f64.sqrt() / 3.0;
    let b = (6.0 + 6f64.sqrt() - 2.0 * 3f64.sqrt()) / 6.0;
    let y: JetField = Arc::new(move |s, x| {
        let (x1, x2) = Jet::coords(x);
        let psi = x2 - x1 * k - b;
        let v = psi * (x1 * x2).cos();
        match s {
            Side::One => v,
            Side::Two => v * 0.01,
        }
    });
    let p: JetField = Arc::new(move |s, x| {
        let (x1, x2) = Jet::coords(x);
        let psi = x2 - x1 * k - b;
        let bubble = x1 * (x1 - 1.0) * x2 * (x2 - 1.0);
        let v = psi * bubble * (x1 * x2).sin();
        match s {
            Side::One => v * 100.0,
            Side::Two => v,
        }
    });
    let lower: InterfaceField = Arc::new(|x| (PI * (x[0] - 0.5)).sin());
    let u: InterfaceField = Arc::new(|x| (PI * (x[0] - 0.5)).sin().max(0.0));
    manufactured(
        "5.1",
        Square::unit(),
        LevelSet::line_above(k, b),
        [1.0, 100.0],
        ExactSolution { y, p, u },
        lower,
        Arc::new(|_| 1.0),
    )
}

/// Product of the four side lines of the diamond; positive inside it.
fn diamond_product(x1: Jet, x2: Jet, b: f64) -> Jet {
    (x2 - (-x1 + 1.0 + b)) * (x2 - (x1 - 1.0 + b)) * (x2 - (-x1 - b + 3.0)) * (x2 - (x1 + 1.0 - b))
}

/// Sign-correct level set of the diamond: negative inside, zero on its boundary.
pub fn diamond_level_set(b: f64) -> LevelSet {
    LevelSet::new(move |x| {
        let (s, d) = (x[0] + x[1], x[1] - x[0]);
        ((1.0 + b) - s).max(d - (1.0 - b)).max(s - (3.0 - b)).max((b - 1.0) - d)
    })
}

fn diamond_interface() -> ManufacturedCase {
    let b = 3f64.sqrt() / 4.0;
    let y: JetField = Arc::new(move |s, x| {
        let (x1, x2) = Jet::coords(x);
        let v = diamond_product(x1, x2, b) * ((x1 - 1.0) * (x2 - 1.0)).exp();
        match s {
            Side::One => v * 10.0,
            Side::Two => v,
        }
    });
    let p: JetField = Arc::new(move |s, x| {
        let (x1, x2) = Jet::coords(x);
        let v = diamond_product(x1, x2, b) * x1 * (x1 - 2.0) * x2 * (x2 - 2.0);
        match s {
            Side::One => v * 10.0,
            Side::Two => v,
        }
    });
    let lower: InterfaceField = Arc::new(|x| (2.0 * PI * x[0]).sin());
    let u: InterfaceField = Arc::new(|x| (2.0 * PI * x[0]).sin().max(0.0));
    manufactured(
        "5.2",
        Square::new([0.0, 0.0], 2.0),
        diamond_level_set(b),
        [1.0, 10.0],
        ExactSolution { y, p, u },
        lower,
        Arc::new(|_| 1.0),
    )
}

/// `r − √3/4 − 0.1 sin(5θ + π/2)`.
pub fn star_level_set() -> LevelSet {
    LevelSet::new(|x| {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]);
        r - 3f64.sqrt() / 4.0 - 0.1 * (5.0 * theta + PI / 2.0).sin()
    })
}

fn five_star() -> ManufacturedCase {
    ManufacturedCase {
        id: "5.3".to_string(),
        domain: Square::new([-1.0, -1.0], 2.0),
        level_set: star_level_set(),
        a: [1.0, 10.0],
        alpha: 1.0,
        lower: Arc::new(|_| 0.0),
        upper: Arc::new(|_| 1.0),
        f: Arc::new(|_, _| 1.0),
        g: Arc::new(|_| 0.0),
        y_d: Arc::new(|s, _| if s == Side::One { 10.0 } else { 1.0 }),
        dirichlet: Arc::new(|_, _| 0.0),
        exact: None,
    }
}

/// Fourth-order central-difference Laplacian of `v` with step `h`.
fn fd_laplacian(v: &dyn Fn(Point) -> f64, x: Point, h: f64) -> f64 {
    let second = |e: Point| {
        let at = |t: f64| v([x[0] + t * e[0], x[1] + t * e[1]]);
        (-at(2.0 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h)
    };
    second([1.0, 0.0]) + second([0.0, 1.0])
}

/// Largest relative defect between the derived `f`, `y_d` and finite-difference
/// evaluations of `−∇·(a∇y*)` and `y* + ∇·(a∇p*)`, over `samples_per_side`
/// random points of each side. Defects are relative to `max(1, |reference|)`.
pub fn derive_sources_check(case: &ManufacturedCase, samples_per_side: usize, seed: u64) -> Result<f64> {
    let exact = case.exact.as_ref().ok_or_else(|| Error::InvalidParameter {
        name: "example",
        reason: format!("case {} has no exact solution", case.id),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-4 * case.domain.side;
    let margin = 2.0 * h;
    let mut counts = [0usize; 2];
    let mut worst: f64 = 0.0;
    let mut attempts = 0usize;
    while counts.iter().any(|&c| c < samples_per_side) {
        attempts += 1;
        if attempts > 1000 * samples_per_side.max(1) {
            break;
        }
        let x = [
            case.domain.lower_left[0] + margin + rng.gen::<f64>() * (case.domain.side - 2.0 * margin),
            case.domain.lower_left[1] + margin + rng.gen::<f64>() * (case.domain.side - 2.0 * margin),
        ];
        let side = Side::of_value(case.level_set.value(x));
        if counts[side.index()] >= samples_per_side {
            continue;
        }
        counts[side.index()] += 1;
        let a = case.a[side.index()];
        let y = |z: Point| (exact.y)(side, z).value;
        let p = |z: Point| (exact.p)(side, z).value;
        let f_ref = -a * fd_laplacian(&y, x, h);
        let yd_ref = y(x) + a * fd_laplacian(&p, x, h);
        for (got, reference) in [((case.f)(side, x), f_ref), ((case.y_d)(side, x), yd_ref)] {
            worst = worst.max((got - reference).abs() / reference.abs().max(1.0));
        }
    }
    Ok(worst)
}
