use crate::mesh::Point;

/// Quadrature on the reference triangle `{xi, eta >= 0, xi + eta <= 1}`.
///
/// Points are barycentric `(l0, l1, l2)` with `xi = l1`, `eta = l2`; the
/// weights sum to the reference area 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Iterates `(barycentric point, weight)` scaled to a triangle of the
    /// given area.
    pub fn scaled(&self, area: f64) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&p, &w)| (p, 2.0 * area * w))
    }
}

/// Six-point rule exact for polynomials of degree 4.
pub fn triangle_rule() -> QuadratureRule {
    const A1: f64 = 0.445_948_490_915_964_9;
    const W1: f64 = 0.223_381_589_678_011_47;
    const A2: f64 = 0.091_576_213_509_770_74;
    const W2: f64 = 0.109_951_743_655_321_87;
    let mut points = Vec::with_capacity(6);
    let mut weights = Vec::with_capacity(6);
    for (a, w) in [(A1, W1), (A2, W2)] {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            points.push(p);
            weights.push(0.5 * w);
        }
    }
    QuadratureRule {
        points,
        weights,
        degree: 4,
    }
}

/// Three-point Gauss-Legendre rule on `[0, 1]` as `(t, weight)`; weights sum to 1.
pub fn edge_rule() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

pub fn barycentric_to_point(pts: &[Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * pts[0][0] + l[1] * pts[1][0] + l[2] * pts[2][0],
        l[0] * pts[0][1] + l[1] * pts[1][1] + l[2] * pts[2][1],
    ]
}
