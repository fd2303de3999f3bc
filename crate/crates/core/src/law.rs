//! Constitutive laws `r = kappa(w) = c(|w|^2) w` and the manufactured
//! problems built on them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::mesh::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Law {
    /// `kappa(w) = w`
    Fourier,
    /// `kappa(w) = (2 atan(|w|^2 - 1) + pi/2 + 2) w`
    Arctan,
}

impl Law {
    /// Scalar conductivity `c(s)` at `s = |w|^2`.
    pub fn c(self, s: f64) -> f64 {
        match self {
            Law::Fourier => 1.0,
            Law::Arctan => 2.0 * (s - 1.0).atan() + 0.5 * PI + 2.0,
        }
    }

    /// `c'(s)`
    pub fn dc(self, s: f64) -> f64 {
        match self {
            Law::Fourier => 0.0,
            Law::Arctan => 2.0 / (1.0 + (s - 1.0) * (s - 1.0)),
        }
    }

    pub fn kappa(self, w: Point) -> Point {
        let c = self.c(w[0] * w[0] + w[1] * w[1]);
        [c * w[0], c * w[1]]
    }

    /// Jacobian `c I + 2 c' w w^T`.
    pub fn dkappa(self, w: Point) -> [[f64; 2]; 2] {
        let s = w[0] * w[0] + w[1] * w[1];
        let c = self.c(s);
        let d = 2.0 * self.dc(s);
        [
            [c + d * w[0] * w[0], d * w[0] * w[1]],
            [d * w[1] * w[0], c + d * w[1] * w[1]],
        ]
    }

    /// Source `f = -div kappa(grad u)` for the exact solution
    /// `u = sin(pi x) sin(pi y)`.
    pub fn source(self, x: Point) -> f64 {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let g = [PI * cx * sy, PI * sx * cy];
        let hxx = -PI * PI * sx * sy;
        let hxy = PI * PI * cx * cy;
        let lap = 2.0 * hxx;
        let s = g[0] * g[0] + g[1] * g[1];
        let ghg = hxx * (g[0] * g[0] + g[1] * g[1]) + 2.0 * hxy * g[0] * g[1];
        -(self.c(s) * lap + 2.0 * self.dc(s) * ghg)
    }

    pub fn name(self) -> &'static str {
        match self {
            Law::Fourier => "fourier",
            Law::Arctan => "arctan",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "fourier" | "linear" => Ok(Law::Fourier),
            "arctan" | "nonlinear" => Ok(Law::Arctan),
            other => Err(Error::InvalidArgument(format!("unknown law '{other}'"))),
        }
    }
}

/// Exact solution `u = sin(pi x) sin(pi y)`.
pub fn exact_u(x: Point) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

pub fn exact_grad_u(x: Point) -> Point {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    [PI * cx * sy, PI * sx * cy]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_reference_values() {
        assert_eq!(Law::Arctan.kappa([0.0, 0.0]), [0.0, 0.0]);
        let w = [0.6, 0.8];
        let k = Law::Arctan.kappa(w);
        let f = 0.5 * PI + 2.0;
        assert!((k[0] - f * 0.6).abs() < 1e-15 && (k[1] - f * 0.8).abs() < 1e-15);
        assert!((Law::Arctan.c(1e12) - (1.5 * PI + 2.0)).abs() < 1e-9);
        assert_eq!(Law::Fourier.kappa([3.0, -2.0]), [3.0, -2.0]);
    }

    #[test]
    fn conductivity_stays_in_bounds() {
        for i in 0..200 {
            let s = i as f64 * 0.37;
            let c = Law::Arctan.c(s);
            assert!(c > 2.0 - 0.5 * PI && c < 2.0 + 1.5 * PI);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let w = [0.7, -1.3];
        let j = Law::Arctan.dkappa(w);
        let h = 1e-6;
        for k in 0..2 {
            let mut wp = w;
            let mut wm = w;
            wp[k] += h;
            wm[k] -= h;
            let (kp, km) = (Law::Arctan.kappa(wp), Law::Arctan.kappa(wm));
            for i in 0..2 {
                let fd = (kp[i] - km[i]) / (2.0 * h);
                assert!((fd - j[i][k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn fourier_source_is_scaled_solution() {
        let x = [0.3, 0.45];
        assert!((Law::Fourier.source(x) - 2.0 * PI * PI * exact_u(x)).abs() < 1e-12);
    }

    #[test]
    fn arctan_source_matches_finite_difference_divergence() {
        let x = [0.31, 0.62];
        let h = 1e-5;
        let flux = |p: Point| Law::Arctan.kappa(exact_grad_u(p));
        let div = (flux([x[0] + h, x[1]])[0] - flux([x[0] - h, x[1]])[0]) / (2.0 * h)
            + (flux([x[0], x[1] + h])[1] - flux([x[0], x[1] - h])[1]) / (2.0 * h);
        assert!((Law::Arctan.source(x) + div).abs() < 1e-5);
    }

    #[test]
    fn law_parses() {
        assert_eq!("Fourier".parse::<Law>().unwrap(), Law::Fourier);
        assert_eq!("arctan".parse::<Law>().unwrap(), Law::Arctan);
        assert!("foo".parse::<Law>().is_err());
    }
}
