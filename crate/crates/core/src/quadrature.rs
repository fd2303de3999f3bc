//! Quadrature rules on triangles and edges.

use crate::mesh::Point;

/// A rule in barycentric coordinates; weights sum to one (multiply by area).
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// Edge-midpoint rule, exact for polynomials of degree 2.
pub const EDGE_MIDPOINTS: TriangleRule = TriangleRule {
    points: &[[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const D4_A: f64 = 0.445_948_490_915_964_886_32;
const D4_B: f64 = 0.091_576_213_509_770_743_46;
const D4_WA: f64 = 0.223_381_589_678_011_465_69;
const D4_WB: f64 = 0.109_951_743_655_321_867_64;

/// Six-point symmetric rule (Strang-Fix / Dunavant), exact for degree 4.
pub const DEGREE4: TriangleRule = TriangleRule {
    points: &[
        [1.0 - 2.0 * D4_A, D4_A, D4_A],
        [D4_A, 1.0 - 2.0 * D4_A, D4_A],
        [D4_A, D4_A, 1.0 - 2.0 * D4_A],
        [1.0 - 2.0 * D4_B, D4_B, D4_B],
        [D4_B, 1.0 - 2.0 * D4_B, D4_B],
        [D4_B, D4_B, 1.0 - 2.0 * D4_B],
    ],
    weights: &[D4_WA, D4_WA, D4_WA, D4_WB, D4_WB, D4_WB],
};

impl TriangleRule {
    /// Physical quadrature points and weights (weights include the area).
    pub fn map(&self, tri: &[Point; 3], area: f64) -> impl Iterator<Item = (Point, f64)> + '_ {
        let tri = *tri;
        self.points.iter().zip(self.weights).map(move |(b, &w)| {
            let x = [
                b[0] * tri[0][0] + b[1] * tri[1][0] + b[2] * tri[2][0],
                b[0] * tri[0][1] + b[1] * tri[1][1] + b[2] * tri[2][1],
            ];
            (x, w * area)
        })
    }

    pub fn integrate(&self, tri: &[Point; 3], area: f64, f: impl Fn(Point) -> f64) -> f64 {
        self.map(tri, area).map(|(x, w)| w * f(x)).sum()
    }
}

/// Five-point Gauss-Legendre rule on `[0, 1]`, exact for degree 9.
pub const GAUSS5_NODES: [f64; 5] = [
    0.046_910_077_030_668_00,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_6,
    0.953_089_922_969_332,
];
pub const GAUSS5_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_46,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    // Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!
    fn monomial(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn weights_sum_to_one() {
        for rule in [&EDGE_MIDPOINTS, &DEGREE4] {
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
        let s: f64 = GAUSS5_WEIGHTS.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_rules_reach_their_degree() {
        for (rule, deg) in [(&EDGE_MIDPOINTS, 2), (&DEGREE4, 4)] {
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    let got = rule.integrate(&TRI, 0.5, |x| x[0].powi(a as i32) * x[1].powi(b as i32));
                    assert!((got - monomial(a, b)).abs() < 1e-15, "deg {deg}: x^{a} y^{b}");
                }
            }
        }
    }

    #[test]
    fn gauss_reaches_degree_nine() {
        for p in 0..=9 {
            let got: f64 = GAUSS5_NODES
                .iter()
                .zip(GAUSS5_WEIGHTS)
                .map(|(&x, w)| w * x.powi(p))
                .sum();
            assert!((got - 1.0 / (p as f64 + 1.0)).abs() < 1e-15, "degree {p}");
        }
    }
}
