//! Forward-mode dual numbers, nestable for higher derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed to evaluate manufactured fields and their derivatives.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, e: f64) -> Self;
    fn value(self) -> f64;
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powf(self, e: f64) -> Self {
        if e.fract() == 0.0 && e.abs() <= 16.0 {
            self.powi(e as i32)
        } else {
            f64::powf(self, e)
        }
    }
    fn value(self) -> f64 {
        self
    }
}

/// `re + eps * du` with `eps^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub du: S,
}

impl<S: Scalar> Dual<S> {
    pub fn var(x: S) -> Self {
        Self {
            re: x,
            du: S::cst(1.0),
        }
    }

    pub fn lift(x: S) -> Self {
        Self {
            re: x,
            du: S::cst(0.0),
        }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            re: self.re + o.re,
            du: self.du + o.du,
        }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            re: self.re - o.re,
            du: self.du - o.du,
        }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re * o.re,
            du: self.du * o.re + self.re * o.du,
        }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Self {
            re: self.re / o.re,
            du: (self.du * o.re - self.re * o.du) / (o.re * o.re),
        }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            du: -self.du,
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn cst(x: f64) -> Self {
        Self::lift(S::cst(x))
    }
    fn sin(self) -> Self {
        Self {
            re: self.re.sin(),
            du: self.du * self.re.cos(),
        }
    }
    fn cos(self) -> Self {
        Self {
            re: self.re.cos(),
            du: -(self.du * self.re.sin()),
        }
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Self {
            re: e,
            du: self.du * e,
        }
    }
    fn ln(self) -> Self {
        Self {
            re: self.re.ln(),
            du: self.du / self.re,
        }
    }
    fn powf(self, e: f64) -> Self {
        Self {
            re: self.re.powf(e),
            du: self.du * S::cst(e) * self.re.powf(e - 1.0),
        }
    }
    fn value(self) -> f64 {
        self.re.value()
    }
}

/// Derivative of `f` at `x`.
pub fn derivative<S: Scalar>(f: impl Fn(Dual<S>) -> Dual<S>, x: S) -> S {
    f(Dual::var(x)).du
}

/// Partial derivative of `f` in direction `axis` at `x`.
pub fn partial<S: Scalar, const N: usize>(
    f: impl Fn([Dual<S>; N]) -> Dual<S>,
    x: [S; N],
    axis: usize,
) -> S {
    let lifted = std::array::from_fn(|d| {
        if d == axis {
            Dual::var(x[d])
        } else {
            Dual::lift(x[d])
        }
    });
    f(lifted).du
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_and_second_derivatives() {
        // d/dx sin(x) exp(x) = exp(x) (sin x + cos x)
        let f = |x: Dual<f64>| x.sin() * x.exp();
        let x = 0.7f64;
        assert!((derivative(f, x) - x.exp() * (x.sin() + x.cos())).abs() < 1e-14);
        // d2/dx2 x^2.5 = 3.75 x^0.5
        let d2 = derivative(
            |y: Dual<f64>| derivative(|z: Dual<Dual<f64>>| z.powf(2.5), y),
            1.3,
        );
        assert!((d2 - 3.75 * 1.3f64.sqrt()).abs() < 1e-13);
        let q = derivative(|y: Dual<f64>| (y * y + Dual::cst(1.0)).ln(), 2.0);
        assert!((q - 0.8).abs() < 1e-15);
    }

    #[test]
    fn mixed_partials() {
        // f = x^2 y^3: d2f/dxdy = 6 x y^2
        let f = |v: [Dual<Dual<f64>>; 2]| v[0] * v[0] * v[1] * v[1] * v[1];
        let g = |v: [Dual<f64>; 2]| partial(f, v, 1);
        let m = partial(g, [1.5, 2.0], 0);
        assert!((m - 6.0 * 1.5 * 4.0).abs() < 1e-12);
    }
}
