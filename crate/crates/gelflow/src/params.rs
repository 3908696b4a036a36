//! Material constants, conserved quantities, boundary loads and initial data.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::ParamError;
use crate::fem::{self, DofMap, FeField, SpaceKind};
use crate::mesh::{BoundaryTag, Mesh, Point};

/// Gel constants: bulk modulus `k`, shear modulus `g`, polymer volume
/// fraction `phi` and friction constant `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub k: f64,
    pub g: f64,
    pub phi: f64,
    pub xi: f64,
}

impl MaterialParams {
    /// PNIPA hydrogel.
    pub const PNIPA: MaterialParams = MaterialParams {
        k: 14285.7,
        g: 2097.9,
        phi: 0.15,
        xi: 100.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// `K + G/3`
    pub alpha: f64,
    /// `G`
    pub beta: f64,
    /// `(1 - phi)^2 / xi`
    pub kappa: f64,
    /// Diffusivity of `q`, `kappa (K + 4G/3)`.
    pub diffusivity: f64,
    /// `alpha + beta / d`
    pub c_d: f64,
    pub dim: usize,
}

pub fn derive_params(mp: &MaterialParams, d: usize) -> Result<DerivedParams, ParamError> {
    let bad = |name, value, reason| Err(ParamError::Invalid { name, value, reason });
    if d != 2 {
        return Err(ParamError::Dimension(d));
    }
    if !(mp.k > 0.0 && mp.k.is_finite()) {
        return bad("K", mp.k, "must be positive and finite");
    }
    if !(mp.g > 0.0 && mp.g.is_finite()) {
        return bad("G", mp.g, "must be positive and finite");
    }
    if !(0.0..1.0).contains(&mp.phi) {
        return bad("phi", mp.phi, "must satisfy 0 <= phi < 1");
    }
    if !(mp.xi > 0.0 && mp.xi.is_finite()) {
        return bad("xi", mp.xi, "must be positive and finite");
    }
    let alpha = mp.k + mp.g / 3.0;
    let beta = mp.g;
    let kappa = (1.0 - mp.phi).powi(2) / mp.xi;
    Ok(DerivedParams {
        alpha,
        beta,
        kappa,
        diffusivity: kappa * (alpha + beta),
        c_d: alpha + beta / d as f64,
        dim: d,
    })
}

/// Time-invariant integrals of the continuous solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedSet {
    /// `int q dx`
    pub c_q: f64,
    /// `oint u . normal dS`
    pub c_u: f64,
    /// `int p~ dx`
    pub c_ptilde: f64,
    /// `int p dx`
    pub c_p: f64,
}

type LoadFn = dyn Fn(Point, [f64; 2], BoundaryTag, f64) -> [f64; 2] + Send + Sync;
type VectorFn = dyn Fn(Point) -> [f64; 2] + Send + Sync;
type ScalarFn = dyn Fn(Point) -> f64 + Send + Sync;
type GradientFn = dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync;

/// Boundary traction `f(x, normal, tag, t)`, force per unit length.
#[derive(Clone)]
pub struct BoundaryLoad {
    eval: Arc<LoadFn>,
    time_dependent: bool,
}

impl fmt::Debug for BoundaryLoad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryLoad")
            .field("time_dependent", &self.time_dependent)
            .finish_non_exhaustive()
    }
}

impl BoundaryLoad {
    pub fn zero() -> Self {
        Self::from_fn(|_, _, _| [0.0, 0.0])
    }

    /// `magnitude` times the clockwise unit tangent `(n_y, -n_x)`.
    pub fn tangential(magnitude: f64) -> Self {
        Self::from_fn(move |_, n, _| [magnitude * n[1], -magnitude * n[0]])
    }

    /// Constant vector per boundary tag; unlisted tags get zero.
    pub fn per_tag(values: BTreeMap<BoundaryTag, [f64; 2]>) -> Self {
        Self::from_fn(move |_, _, tag| values.get(&tag).copied().unwrap_or([0.0, 0.0]))
    }

    pub fn from_fn(
        f: impl Fn(Point, [f64; 2], BoundaryTag) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        BoundaryLoad {
            eval: Arc::new(move |x, n, tag, _| f(x, n, tag)),
            time_dependent: false,
        }
    }

    /// A load that varies in time; only used for manufactured solutions.
    pub fn time_dependent(
        f: impl Fn(Point, [f64; 2], BoundaryTag, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        BoundaryLoad {
            eval: Arc::new(f),
            time_dependent: true,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn eval(&self, x: Point, normal: [f64; 2], tag: BoundaryTag, t: f64) -> [f64; 2] {
        (self.eval)(x, normal, tag, t)
    }
}

/// Initial displacement with optional analytic derivatives.
#[derive(Clone)]
pub struct InitialData {
    u0: Arc<VectorFn>,
    div_u0: Option<Arc<ScalarFn>>,
    grad_u0: Option<Arc<GradientFn>>,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialData")
            .field("div_u0", &self.div_u0.is_some())
            .field("grad_u0", &self.grad_u0.is_some())
            .finish_non_exhaustive()
    }
}

impl InitialData {
    pub fn new(u0: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        InitialData {
            u0: Arc::new(u0),
            div_u0: None,
            grad_u0: None,
        }
    }

    pub fn with_div(mut self, div: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.div_u0 = Some(Arc::new(div));
        self
    }

    /// `grad(x)[c]` is the gradient of component `c`.
    pub fn with_grad(mut self, grad: impl Fn(Point) -> [[f64; 2]; 2] + Send + Sync + 'static) -> Self {
        self.grad_u0 = Some(Arc::new(grad));
        self
    }

    pub fn zero() -> Self {
        Self::new(|_| [0.0, 0.0])
            .with_div(|_| 0.0)
            .with_grad(|_| [[0.0; 2]; 2])
    }

    /// `amplitude * sin(x + y) * (1, 1)`.
    pub fn diagonal_sine(amplitude: f64) -> Self {
        Self::new(move |x| {
            let s = amplitude * (x[0] + x[1]).sin();
            [s, s]
        })
        .with_div(move |x| 2.0 * amplitude * (x[0] + x[1]).cos())
        .with_grad(move |x| {
            let c = amplitude * (x[0] + x[1]).cos();
            [[c, c], [c, c]]
        })
    }

    /// `(c / 2) (x - center)`, whose divergence is the constant `c`.
    pub fn uniform_dilation(c: f64, center: Point) -> Self {
        Self::new(move |x| [0.5 * c * (x[0] - center[0]), 0.5 * c * (x[1] - center[1])])
            .with_div(move |_| c)
            .with_grad(move |_| [[0.5 * c, 0.0], [0.0, 0.5 * c]])
    }

    pub fn u0(&self, x: Point) -> [f64; 2] {
        (self.u0)(x)
    }

    pub fn div(&self) -> Option<&ScalarFn> {
        self.div_u0.as_deref()
    }

    pub fn grad(&self) -> Option<&GradientFn> {
        self.grad_u0.as_deref()
    }

    /// Largest gap between the supplied divergence and a centered finite
    /// difference of `u0` over the sample points. `None` without a divergence.
    pub fn div_consistency(&self, samples: &[Point], h: f64) -> Option<f64> {
        let div = self.div_u0.as_ref()?;
        Some(
            samples
                .iter()
                .map(|&x| {
                    let dx = (self.u0([x[0] + h, x[1]])[0] - self.u0([x[0] - h, x[1]])[0]) / (2.0 * h);
                    let dy = (self.u0([x[0], x[1] + h])[1] - self.u0([x[0], x[1] - h])[1]) / (2.0 * h);
                    (div(x) - dx - dy).abs()
                })
                .fold(0.0, f64::max),
        )
    }
}

/// `int div u0 dx`, from the analytic divergence when present and otherwise
/// from the quadratic interpolant of `u0`.
pub fn integrate_div_u0(u0: &InitialData, mesh: &Mesh) -> f64 {
    match u0.div() {
        Some(div) => fem::integrate(mesh, div),
        None => {
            let vdm = DofMap::new(mesh, SpaceKind::VectorP2);
            let coeffs = fem::interpolate_vector_p2(mesh, &vdm, |x| u0.u0(x));
            let field = FeField::new(&vdm, &coeffs).expect("interpolant length");
            let rule = fem::triangle_rule();
            (0..mesh.num_triangles())
                .map(|t| {
                    rule.scaled(mesh.triangle_area(t))
                        .map(|(l, w)| w * fem::divergence_at(mesh, &field, t, l))
                        .sum::<f64>()
                })
                .sum()
        }
    }
}

pub fn compute_conserved(u0: &InitialData, f: &BoundaryLoad, mesh: &Mesh, dp: &DerivedParams) -> ConservedSet {
    let c_q = integrate_div_u0(u0, mesh);
    let c_u = fem::boundary_integral(mesh, |x, n, _| {
        let u = u0.u0(x);
        u[0] * n[0] + u[1] * n[1]
    });
    let moment = fem::boundary_integral(mesh, |x, n, tag| {
        let fv = f.eval(x, n, tag, 0.0);
        fv[0] * x[0] + fv[1] * x[1]
    });
    let c_p = dp.c_d * c_q - moment / dp.dim as f64;
    ConservedSet {
        c_q,
        c_u,
        c_ptilde: c_p - dp.alpha * c_q,
        c_p,
    }
}

/// `|oint f dS|` at time `t`; zero for a load in equilibrium.
pub fn check_compatibility(f: &BoundaryLoad, mesh: &Mesh, t: f64) -> f64 {
    let fx = fem::boundary_integral(mesh, |x, n, tag| f.eval(x, n, tag, t)[0]);
    let fy = fem::boundary_integral(mesh, |x, n, tag| f.eval(x, n, tag, t)[1]);
    fx.hypot(fy)
}
