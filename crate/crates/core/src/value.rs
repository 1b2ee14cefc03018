//! Intrinsic value functions v(theta) with their derivatives and mode
//! (standard vs suffering) validation.

use std::sync::Arc;

use crate::dist::TypeDistribution;
use crate::error::{Error, Result};
use crate::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ValueMode {
    /// v' >= 0, v'' <= 0: higher types value the good weakly more.
    Standard,
    /// v' <= -1: participation utility falls in type.
    Suffering,
}

#[derive(Clone)]
enum VKind {
    /// Coefficients low-to-high: c0 + c1 x + c2 x^2 + ...
    Poly(Vec<f64>),
    Custom {
        v: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        dv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

#[derive(Clone)]
pub struct ValueFunction {
    kind: VKind,
}

impl std::fmt::Debug for ValueFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            VKind::Poly(c) => write!(f, "ValueFunction::poly({c:?})"),
            VKind::Custom { .. } => write!(f, "ValueFunction::custom"),
        }
    }
}

impl ValueFunction {
    pub fn zero() -> Self {
        Self::poly(&[])
    }

    pub fn constant(c: f64) -> Self {
        Self::poly(&[c])
    }

    /// v(theta) = alpha * theta.
    pub fn linear(alpha: f64) -> Self {
        Self::poly(&[0.0, alpha])
    }

    /// v(theta) = c0 + c1 theta + c2 theta^2 + ...
    pub fn poly(coeffs: &[f64]) -> Self {
        Self { kind: VKind::Poly(coeffs.to_vec()) }
    }

    pub fn custom(
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { kind: VKind::Custom { v: Arc::new(v), dv: Arc::new(dv) } }
    }

    /// Parses `zero`, `const(c)`, `linear(a)`, or `poly(c0,c1,...)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "zero" {
            return Ok(Self::zero());
        }
        let open = spec
            .find('(')
            .ok_or_else(|| Error::Parse(format!("expected '(' in value spec '{spec}'")))?;
        if !spec.ends_with(')') {
            return Err(Error::Parse(format!("expected ')' at end of '{spec}'")));
        }
        let name = &spec[..open];
        let args: Vec<f64> = spec[open + 1..spec.len() - 1]
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number '{}' in '{spec}'", t.trim())))
            })
            .collect::<Result<_>>()?;
        match (name, args.len()) {
            ("const", 1) => Ok(Self::constant(args[0])),
            ("linear", 1) => Ok(Self::linear(args[0])),
            ("poly", _) if !args.is_empty() => Ok(Self::poly(&args)),
            _ => Err(Error::Parse(format!("unknown value spec '{spec}'"))),
        }
    }

    pub fn v(&self, theta: f64) -> f64 {
        match &self.kind {
            VKind::Poly(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * theta + ci),
            VKind::Custom { v, .. } => v(theta),
        }
    }

    pub fn dv(&self, theta: f64) -> f64 {
        match &self.kind {
            VKind::Poly(c) => {
                let mut acc = 0.0;
                for (i, &ci) in c.iter().enumerate().skip(1).rev() {
                    acc = acc * theta + i as f64 * ci;
                }
                acc
            }
            VKind::Custom { dv, .. } => dv(theta),
        }
    }

    /// Determines the mode on a dense interior grid, or errors when neither
    /// set of assumptions holds. v' in (-1, 0) anywhere is the countervailing
    /// regime, which is detected but unsupported.
    pub fn mode_on(&self, dist: &TypeDistribution, n: usize) -> Result<ValueMode> {
        let grid = dist.interior_grid(n);
        let tol = 1e-9;
        let standard = grid.iter().all(|&t| self.v(t) >= -tol && self.dv(t) >= -tol);
        if standard {
            let dvs: Vec<f64> = grid.iter().map(|&t| self.dv(t)).collect();
            // concavity: dv nonincreasing
            let neg: Vec<f64> = dvs.iter().map(|&x| -x).collect();
            if !num::is_nondecreasing(&neg, 1e-7) {
                return Err(Error::InvalidValueFunction(
                    "v' must be nonincreasing (v concave) in standard mode".into(),
                ));
            }
            return Ok(ValueMode::Standard);
        }
        if grid.iter().all(|&t| self.dv(t) <= -1.0 + tol) {
            return Ok(ValueMode::Suffering);
        }
        if grid.iter().any(|&t| {
            let d = self.dv(t);
            d > -1.0 + tol && d < -tol
        }) {
            return Err(Error::Inapplicable("countervailing regime, unsupported".into()));
        }
        Err(Error::InvalidValueFunction(
            "v does not satisfy standard-mode or suffering-mode assumptions".into(),
        ))
    }

    /// Max of |v'| over the interior grid.
    pub fn max_abs_slope(&self, dist: &TypeDistribution, n: usize) -> f64 {
        dist.interior_grid(n)
            .iter()
            .fold(0.0_f64, |m, &t| m.max(self.dv(t).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn poly_eval_and_derivative() {
        let v = ValueFunction::poly(&[1.0, 2.0, 3.0]); // 1 + 2x + 3x^2
        assert_abs_diff_eq!(v.v(0.5), 1.0 + 1.0 + 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(v.dv(0.5), 2.0 + 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ValueFunction::zero().v(0.3), 0.0);
        assert_abs_diff_eq!(ValueFunction::linear(0.5).dv(0.9), 0.5);
    }

    #[test]
    fn mode_detection() {
        let u = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(ValueFunction::zero().mode_on(&u, 256).unwrap(), ValueMode::Standard);
        assert_eq!(
            ValueFunction::poly(&[2.0, -1.0]).mode_on(&u, 256).unwrap(),
            ValueMode::Suffering
        );
        assert!(matches!(
            ValueFunction::poly(&[2.0, -0.5]).mode_on(&u, 256),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn parse_specs() {
        assert!(ValueFunction::parse("zero").is_ok());
        assert!(ValueFunction::parse("linear(0.5)").is_ok());
        assert!(ValueFunction::parse("poly(1,0.5,-0.1)").is_ok());
        assert!(ValueFunction::parse("bogus").is_err());
    }
}
