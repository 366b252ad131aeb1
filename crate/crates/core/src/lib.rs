//! Unfitted (cut) finite elements with κ-weighted Nitsche coupling for
//! linear-quadratic optimal control of elliptic interface problems.
//!
//! The pipeline is: [`mesh`] builds a uniform triangulation, [`geometry`]
//! cuts it with a level set, [`space`] doubles the P1 dofs on cut cells,
//! [`assembly`] builds the Nitsche system, [`solver`] solves it, [`control`]
//! runs the projected fixed-point loop and [`verification`] measures errors
//! against manufactured solutions.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod control;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;
pub mod verification;

pub use error::{Error, Result};

/// A point or vector in the plane.
pub type Point = [f64; 2];

/// Subdomain label. `One` is where the level set is negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::One, Side::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }

    #[inline]
    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }

    /// Side selected by the sign of a (snapped) level-set value.
    #[inline]
    pub fn of_value(phi: f64) -> Side {
        if phi < 0.0 {
            Side::One
        } else {
            Side::Two
        }
    }
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Twice the signed area of the triangle (a, b, c); positive when counter-clockwise.
#[inline]
pub(crate) fn signed_area2(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}
