//! Quadrature rules: symmetric triangle rules and Gauss–Legendre on segments.

use crate::{signed_area2, Error, Point, Result};

/// Points and positive weights over a region, weights summing to its measure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly on each piece.
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Appends another rule (used to concatenate sub-triangle rules).
    pub fn extend(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
        self.degree = if self.degree == 0 { other.degree } else { self.degree.min(other.degree) };
    }
}

/// Highest supported triangle degree.
pub const MAX_TRIANGLE_DEGREE: usize = 6;

fn s3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[b, a, a], [a, b, a], [a, a, b]]
}

fn s6(a: f64, b: f64) -> [[f64; 3]; 6] {
    let c = 1.0 - a - b;
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// Barycentric points and unit-sum weights of the reference rule of at least `degree`.
fn reference_triangle_rule(degree: usize) -> Result<Vec<([f64; 3], f64)>> {
    let third = 1.0 / 3.0;
    let mut out = Vec::new();
    let push_s3 = |a: f64, w: f64, out: &mut Vec<([f64; 3], f64)>| {
        for p in s3(a) {
            out.push((p, w));
        }
    };
    match degree {
        1 => out.push(([third; 3], 1.0)),
        2 => push_s3(1.0 / 6.0, third, &mut out),
        3 | 4 => {
            push_s3(0.445_948_490_915_965, 0.223_381_589_678_011, &mut out);
            push_s3(0.091_576_213_509_771, 0.109_951_743_655_322, &mut out);
        }
        5 => {
            out.push(([third; 3], 0.225));
            push_s3(0.470_142_064_105_115, 0.132_394_152_788_506, &mut out);
            push_s3(0.101_286_507_323_456, 0.125_939_180_544_827, &mut out);
        }
        6 => {
            push_s3(0.249_286_745_170_910, 0.116_786_275_726_379, &mut out);
            push_s3(0.063_089_014_491_502, 0.050_844_906_370_207, &mut out);
            for p in s6(0.053_145_049_844_817, 0.310_352_451_033_784) {
                out.push((p, 0.082_851_075_618_374));
            }
        }
        _ => return Err(Error::UnsupportedQuadrature { kind: "triangle degree", value: degree }),
    }
    // Renormalise so that the weights sum to one to full precision.
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    Ok(out)
}

/// Rule of the given degree mapped onto the triangle `(a, b, c)`.
pub fn triangle_rule(tri: [Point; 3], degree: usize) -> Result<QuadRule> {
    let reference = reference_triangle_rule(degree)?;
    let area = 0.5 * signed_area2(tri[0], tri[1], tri[2]).abs();
    let mut rule = QuadRule { degree, ..Default::default() };
    for (l, w) in reference {
        rule.points.push([
            l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
            l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
        ]);
        rule.weights.push(w * area);
    }
    Ok(rule)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(npoints: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w): (Vec<f64>, Vec<f64>) = match npoints {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (0.6f64).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let r = (6.0f64 / 5.0).sqrt() * 2.0 / 7.0;
            let a = (3.0 / 7.0 - r).sqrt();
            let b = (3.0 / 7.0 + r).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let r = 2.0 * (10.0f64 / 7.0).sqrt();
            let a = (5.0 - r).sqrt() / 3.0;
            let b = (5.0 + r).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
        _ => return Err(Error::UnsupportedQuadrature { kind: "Gauss points", value: npoints }),
    };
    Ok((x, w))
}

/// Gauss rule mapped onto the segment from `a` to `b` (length measure).
pub fn segment_rule(a: Point, b: Point, npoints: usize) -> Result<QuadRule> {
    let (x, w) = gauss_legendre(npoints)?;
    let half = 0.5 * ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let dir = [0.5 * (b[0] - a[0]), 0.5 * (b[1] - a[1])];
    Ok(QuadRule {
        points: x.iter().map(|&t| [mid[0] + t * dir[0], mid[1] + t * dir[1]]).collect(),
        weights: w.iter().map(|&wi| wi * half).collect(),
        degree: 2 * npoints - 1,
    })
}
