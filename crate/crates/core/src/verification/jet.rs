//! Second-order jets: a value with its gradient and Laplacian, propagated
//! through sums, products and smooth scalar functions.

use std::ops::{Add, Mul, Neg, Sub};

use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Point,
    pub lap: f64,
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Self { value, grad: [0.0; 2], lap: 0.0 }
    }

    /// The coordinate functions `x_1` and `x_2` at `x`.
    pub fn coords(x: Point) -> (Self, Self) {
        (Self { value: x[0], grad: [1.0, 0.0], lap: 0.0 }, Self { value: x[1], grad: [0.0, 1.0], lap: 0.0 })
    }

    /// `g ∘ self` given `g`, `g'` and `g''` at `self.value`.
    pub fn compose(self, g: f64, dg: f64, ddg: f64) -> Self {
        let sq = self.grad[0] * self.grad[0] + self.grad[1] * self.grad[1];
        Self { value: g, grad: [dg * self.grad[0], dg * self.grad[1]], lap: ddg * sq + dg * self.lap }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn scale(self, s: f64) -> Self {
        Self { value: s * self.value, grad: [s * self.grad[0], s * self.grad[1]], lap: s * self.lap }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            grad: [self.grad[0] + o.grad[0], self.grad[1] + o.grad[1]],
            lap: self.lap + o.lap,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { value: self.value + c, ..self }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        self + (-c)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let cross = self.grad[0] * o.grad[0] + self.grad[1] * o.grad[1];
        Jet {
            value: self.value * o.value,
            grad: [self.grad[0] * o.value + self.value * o.grad[0], self.grad[1] * o.value + self.value * o.grad[1]],
            lap: self.lap * o.value + 2.0 * cross + self.value * o.lap,
        }
    }
}
