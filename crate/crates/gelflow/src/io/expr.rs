//! Initial displacements given as formulas in `x` and `y`.
//!
//! Parsing and symbolic differentiation are done by `exmex`. Its default
//! literal pattern has no exponent notation, hence the custom matcher. Note
//! that exmex binds unary minus tighter than `^`, so `-x^2` is `(-x)^2`.

use exmex::prelude::*;
use exmex::{literal_matcher_from_pattern, FloatOpsFactory, MatchLiteral};

use crate::error::ConfigError;
use crate::params::InitialData;

literal_matcher_from_pattern!(SciMatcher, r"^(([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?)");

type Ex = FlatEx<f64, FloatOpsFactory<f64>, SciMatcher>;

const VARS: [&str; 2] = ["x", "y"];

/// A parsed scalar formula with its two partial derivatives.
#[derive(Debug, Clone)]
struct Formula {
    value: Ex,
    /// Position of `x` and `y` among the formula's own variables.
    slots: [Option<usize>; 2],
    partials: [Option<Ex>; 2],
}

impl Formula {
    fn parse(field: &str, text: &str) -> Result<Self, ConfigError> {
        let path = format!("initial.{field}");
        let value = Ex::parse(text).map_err(|e| ConfigError::invalid(&path, e.to_string()))?;
        if let Some(v) = value.var_names().iter().find(|v| !VARS.contains(&v.as_str())) {
            return Err(ConfigError::invalid(
                &path,
                format!("unknown variable `{v}`, only x and y are allowed"),
            ));
        }
        let slots = VARS.map(|name| value.var_names().iter().position(|v| v == name));
        let mut partials = [None, None];
        for (d, slot) in slots.iter().enumerate() {
            if let Some(i) = slot {
                let p = value
                    .clone()
                    .partial(*i)
                    .map_err(|e| ConfigError::invalid(&path, format!("cannot differentiate: {e}")))?;
                partials[d] = Some(p);
            }
        }
        let f = Formula { value, slots, partials };
        let probe = f.eval([0.3, 0.7]);
        if !probe.is_finite() {
            return Err(ConfigError::invalid(&path, format!("not finite at (0.3, 0.7): {probe}")));
        }
        Ok(f)
    }

    /// Arguments in the order of `ex`'s own variable list.
    fn args(ex: &Ex, x: [f64; 2]) -> Vec<f64> {
        ex.var_names()
            .iter()
            .map(|v| if v == "x" { x[0] } else { x[1] })
            .collect()
    }

    fn eval_ex(ex: &Ex, x: [f64; 2]) -> f64 {
        ex.eval(&Self::args(ex, x)).unwrap_or(f64::NAN)
    }

    fn eval(&self, x: [f64; 2]) -> f64 {
        Self::eval_ex(&self.value, x)
    }

    fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        let d = |k: usize| match (&self.partials[k], self.slots[k]) {
            (Some(p), Some(_)) => Self::eval_ex(p, x),
            _ => 0.0,
        };
        [d(0), d(1)]
    }
}

/// `u0 = (u_x(x, y), u_y(x, y))` with exact divergence and gradient.
pub fn expression_initial(u_x: &str, u_y: &str) -> Result<InitialData, ConfigError> {
    let fx = Formula::parse("u_x", u_x)?;
    let fy = Formula::parse("u_y", u_y)?;
    let (vx, vy) = (fx.clone(), fy.clone());
    let (dx, dy) = (fx.clone(), fy.clone());
    Ok(InitialData::new(move |x| [vx.eval(x), vy.eval(x)])
        .with_div(move |x| dx.grad(x)[0] + dy.grad(x)[1])
        .with_grad(move |x| [fx.grad(x), fy.grad(x)]))
}
