//! Exponents as points of the (j, θ)-plane.
//!
//! A finite exponent (p, s) sits at j = 1/p > 0, θ = s.  An infinite exponent
//! (∞, s; α) sits at j = −α/n ≤ 0, θ = s, with r = s + α.  Every operation on
//! exponents is affine in (j, θ), so the pair is the stored representation.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Tolerance used for exponent comparisons.
pub const TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub n: usize,
    pub j: f64,
    #[serde(alias = "θ")]
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Finite,
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Views {
    pub j: f64,
    pub theta: f64,
    pub i: f64,
    pub r: f64,
}

impl Exponent {
    pub fn finite(n: usize, p: f64, s: f64) -> Self {
        assert!(n >= 1, "dimension must be positive");
        assert!(p > 0.0 && p.is_finite(), "finite exponent needs 0 < p < ∞");
        Exponent { n, j: 1.0 / p, theta: s }
    }

    pub fn infinite(n: usize, s: f64, alpha: f64) -> Self {
        assert!(n >= 1, "dimension must be positive");
        assert!(alpha >= 0.0, "Carleson order must be nonnegative");
        Exponent { n, j: -alpha / n as f64, theta: s }
    }

    pub fn from_views(n: usize, j: f64, theta: f64) -> Self {
        assert!(n >= 1, "dimension must be positive");
        Exponent { n, j, theta }
    }

    pub fn kind(&self) -> Kind {
        if self.j > 0.0 {
            Kind::Finite
        } else {
            Kind::Infinite
        }
    }

    pub fn is_finite(&self) -> bool {
        self.kind() == Kind::Finite
    }

    /// Integrability index i(p); infinite for j ≤ 0.
    pub fn i(&self) -> f64 {
        if self.is_finite() {
            1.0 / self.j
        } else {
            f64::INFINITY
        }
    }

    /// Carleson order α (zero for finite exponents).
    pub fn alpha(&self) -> f64 {
        if self.is_finite() {
            0.0
        } else {
            -(self.n as f64) * self.j
        }
    }

    pub fn r(&self) -> f64 {
        self.theta + self.alpha()
    }

    pub fn views(&self) -> Views {
        Views { j: self.j, theta: self.theta, i: self.i(), r: self.r() }
    }

    pub fn dual(&self) -> Self {
        Exponent { n: self.n, j: 1.0 - self.j, theta: -self.theta }
    }

    pub fn heart(&self) -> Self {
        Exponent { n: self.n, j: 1.0 - self.j, theta: -1.0 - self.theta }
    }

    pub fn shift(&self, r: f64) -> Self {
        Exponent { n: self.n, j: self.j, theta: self.theta + r }
    }

    /// Embedding p ↪ q: θ(p) ≥ θ(q) and θ(q) − θ(p) = n(j(q) − j(p)).
    pub fn embeds(&self, q: &Exponent) -> bool {
        assert_eq!(self.n, q.n, "exponents of different dimension");
        let n = self.n as f64;
        self.theta >= q.theta - TOL && ((q.theta - self.theta) - n * (q.j - self.j)).abs() <= TOL
    }

    /// Affine interpolation [p, q]_η, any real η.
    pub fn interp(&self, q: &Exponent, eta: f64) -> Self {
        assert_eq!(self.n, q.n, "exponents of different dimension");
        Exponent {
            n: self.n,
            j: (1.0 - eta) * self.j + eta * q.j,
            theta: (1.0 - eta) * self.theta + eta * q.theta,
        }
    }

    pub fn approx_eq(&self, other: &Exponent, tol: f64) -> bool {
        self.n == other.n && (self.j - other.j).abs() <= tol && (self.theta - other.theta).abs() <= tol
    }

    /// The energy exponent (2, −1/2).
    pub fn energy(n: usize) -> Self {
        Exponent::finite(n, 2.0, -0.5)
    }
}

/// δ_{p,q} = 1/q − 1/p for integrability indices in (0, ∞].
pub fn delta(p: f64, q: f64) -> f64 {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    inv(q) - inv(p)
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "({}, {})", self.i(), self.theta)
        } else {
            write!(f, "(∞, {}; {})", self.theta, self.alpha())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn views_of_basic_exponents() {
        let v = Exponent::finite(1, 2.0, 0.0).views();
        assert_eq!((v.j, v.theta, v.i, v.r), (0.5, 0.0, 2.0, 0.0));
        let v = Exponent::infinite(2, 0.25, 1.0).views();
        assert_eq!((v.j, v.theta, v.r), (-0.5, 0.25, 1.25));
        assert!(v.i.is_infinite());
        let v = Exponent::finite(3, 1.0, -1.0).views();
        assert_eq!((v.j, v.theta, v.i, v.r), (1.0, -1.0, 1.0, -1.0));
    }

    #[test]
    fn dual_examples() {
        let q = Exponent::finite(1, 4.0, -0.5).dual();
        assert!(q.approx_eq(&Exponent::finite(1, 4.0 / 3.0, 0.5), 1e-15));
        let q = Exponent::finite(2, 1.0, 0.0).dual();
        assert_eq!(q.kind(), Kind::Infinite);
        assert_eq!(q.alpha(), 0.0);
        assert_eq!(q.theta, 0.0);
    }

    #[test]
    fn heart_examples() {
        for n in 1..5 {
            assert_eq!(Exponent::energy(n).heart(), Exponent::energy(n));
        }
        let p = Exponent::finite(3, 6.0 / 5.0, 0.0).heart();
        assert!(p.approx_eq(&Exponent::finite(3, 6.0, -1.0), 1e-15));
    }

    #[test]
    fn shift_examples() {
        assert_eq!(Exponent::finite(1, 2.0, 0.0).shift(-1.0), Exponent::finite(1, 2.0, -1.0));
        let p = Exponent::infinite(2, 0.5, 1.0).shift(0.25);
        assert_eq!((p.theta, p.alpha()), (0.75, 1.0));
    }

    #[test]
    fn delta_convention() {
        assert_eq!(delta(1.0, 2.0), -0.5);
        assert_eq!(delta(2.0, f64::INFINITY), -0.5);
    }
}
