use crate::mesh::Point;

use super::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    P1,
    P2,
}

impl ElementKind {
    pub fn num_local(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
        }
    }
}

/// Basis values and gradients with respect to the reference coordinates
/// `(xi, eta) = (l1, l2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub ref_grads: Vec<[f64; 2]>,
}

const REF_GRAD_LAMBDA: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Evaluates the nodal basis at a barycentric point.
///
/// P2 ordering: vertex functions `l_i (2 l_i - 1)` for `i = 0..3`, then edge
/// functions `4 l_k l_{k+1}` for local edge `k` (`k + 1` taken mod 3).
pub fn eval_basis(kind: ElementKind, l: [f64; 3]) -> BasisEval {
    let g = REF_GRAD_LAMBDA;
    match kind {
        ElementKind::P1 => BasisEval {
            values: l.to_vec(),
            ref_grads: g.to_vec(),
        },
        ElementKind::P2 => {
            let mut values = Vec::with_capacity(6);
            let mut ref_grads = Vec::with_capacity(6);
            for i in 0..3 {
                values.push(l[i] * (2.0 * l[i] - 1.0));
                let s = 4.0 * l[i] - 1.0;
                ref_grads.push([s * g[i][0], s * g[i][1]]);
            }
            for k in 0..3 {
                let j = (k + 1) % 3;
                values.push(4.0 * l[k] * l[j]);
                ref_grads.push([
                    4.0 * (l[j] * g[k][0] + l[k] * g[j][0]),
                    4.0 * (l[j] * g[k][1] + l[k] * g[j][1]),
                ]);
            }
            BasisEval { values, ref_grads }
        }
    }
}

/// Barycentric coordinates of the six P2 nodes.
pub fn p2_nodes() -> [[f64; 3]; 6] {
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
    ]
}

/// Affine map data of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub points: [Point; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(points: [Point; 3]) -> Self {
        let [p0, p1, p2] = points;
        let two_a = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grad_lambda = [
            [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
            [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
            [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
        ];
        ElementGeometry {
            points,
            area: 0.5 * two_a,
            grad_lambda,
        }
    }

    /// Physical gradient from a reference gradient.
    pub fn map_gradient(&self, r: [f64; 2]) -> [f64; 2] {
        let g = &self.grad_lambda;
        [r[0] * g[1][0] + r[1] * g[2][0], r[0] * g[1][1] + r[1] * g[2][1]]
    }

    pub fn point(&self, l: [f64; 3]) -> Point {
        super::quadrature::barycentric_to_point(&self.points, l)
    }
}

/// Basis values and reference gradients at every point of a rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub kind: ElementKind,
    pub at: Vec<BasisEval>,
}

impl Tabulation {
    pub fn new(kind: ElementKind, rule: &QuadratureRule) -> Self {
        Tabulation {
            kind,
            at: rule.points.iter().map(|&p| eval_basis(kind, p)).collect(),
        }
    }

    /// Physical gradients of all basis functions at quadrature point `q`.
    pub fn grads(&self, geo: &ElementGeometry, q: usize) -> Vec<[f64; 2]> {
        self.at[q]
            .ref_grads
            .iter()
            .map(|&r| geo.map_gradient(r))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p1_at_centroid() {
        let e = eval_basis(ElementKind::P1, [1.0 / 3.0; 3]);
        for v in e.values {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn p2_kronecker() {
        let nodes = p2_nodes();
        for (j, n) in nodes.iter().enumerate() {
            let e = eval_basis(ElementKind::P2, *n);
            for (i, v) in e.values.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-15, "phi_{i} at node {j} = {v}");
            }
        }
    }

    #[test]
    fn gradient_of_lambda_on_physical_triangle() {
        let geo = ElementGeometry::new([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]);
        assert!((geo.area - 1.0).abs() < 1e-15);
        let e = eval_basis(ElementKind::P1, [1.0 / 3.0; 3]);
        let g: Vec<_> = e.ref_grads.iter().map(|&r| geo.map_gradient(r)).collect();
        assert_eq!(g, vec![[-0.5, -1.0], [0.5, 0.0], [0.0, 1.0]]);
    }

    fn bary() -> impl Strategy<Value = [f64; 3]> {
        (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| {
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            [1.0 - a - b, a, b]
        })
    }

    proptest! {
        #[test]
        fn partition_of_unity(l in bary()) {
            for kind in [ElementKind::P1, ElementKind::P2] {
                let e = eval_basis(kind, l);
                prop_assert!((e.values.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                let gx: f64 = e.ref_grads.iter().map(|g| g[0]).sum();
                let gy: f64 = e.ref_grads.iter().map(|g| g[1]).sum();
                prop_assert!(gx.abs() < 1e-13 && gy.abs() < 1e-13);
            }
        }

        #[test]
        fn p2_gradients_match_finite_differences(l in bary()) {
            let h = 1e-6;
            let e = eval_basis(ElementKind::P2, l);
            let shift = |dxi: f64, deta: f64| [l[0] - dxi - deta, l[1] + dxi, l[2] + deta];
            let fx0 = eval_basis(ElementKind::P2, shift(-h, 0.0)).values;
            let fx1 = eval_basis(ElementKind::P2, shift(h, 0.0)).values;
            let fy0 = eval_basis(ElementKind::P2, shift(0.0, -h)).values;
            let fy1 = eval_basis(ElementKind::P2, shift(0.0, h)).values;
            for i in 0..6 {
                prop_assert!(((fx1[i] - fx0[i]) / (2.0 * h) - e.ref_grads[i][0]).abs() < 1e-7);
                prop_assert!(((fy1[i] - fy0[i]) / (2.0 * h) - e.ref_grads[i][1]).abs() < 1e-7);
            }
        }
    }
}
