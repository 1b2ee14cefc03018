//! Strictly increasing pointwise transforms of status, for the convex /
//! concave status specifications.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PhiShape {
    Convex,
    Concave,
    General,
}

#[derive(Clone)]
enum PhiKind {
    Identity,
    /// phi(x) = x^k, k > 0.
    Pow(f64),
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        shape: PhiShape,
    },
}

#[derive(Clone)]
pub struct PhiTransform {
    kind: PhiKind,
}

impl std::fmt::Debug for PhiTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            PhiKind::Identity => write!(f, "phi(identity)"),
            PhiKind::Pow(k) => write!(f, "phi(pow {k})"),
            PhiKind::Custom { shape, .. } => write!(f, "phi(custom {shape:?})"),
        }
    }
}

impl PhiTransform {
    pub fn identity() -> Self {
        Self { kind: PhiKind::Identity }
    }

    /// x^k on [0, 1]; convex for k >= 1, concave for 0 < k <= 1.
    pub fn pow(k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("pow exponent {k}")));
        }
        Ok(Self { kind: PhiKind::Pow(k) })
    }

    pub fn sqrt() -> Self {
        Self { kind: PhiKind::Pow(0.5) }
    }

    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        shape: PhiShape,
    ) -> Self {
        Self { kind: PhiKind::Custom { f: Arc::new(f), df: Arc::new(df), shape } }
    }

    /// Parses `identity`, `sqrt`, or `pow(k)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "identity" => return Ok(Self::identity()),
            "sqrt" => return Ok(Self::sqrt()),
            _ => {}
        }
        if let Some(rest) = spec.strip_prefix("pow(").and_then(|r| r.strip_suffix(')')) {
            let k = rest
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad exponent in '{spec}'")))?;
            return Self::pow(k);
        }
        Err(Error::Parse(format!("unknown phi spec '{spec}'")))
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, PhiKind::Identity)
    }

    pub fn apply(&self, x: f64) -> f64 {
        match &self.kind {
            PhiKind::Identity => x,
            PhiKind::Pow(k) => x.max(0.0).powf(*k),
            PhiKind::Custom { f, .. } => f(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            PhiKind::Identity => 1.0,
            PhiKind::Pow(k) => {
                if x <= 0.0 {
                    if *k >= 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    k * x.powf(k - 1.0)
                }
            }
            PhiKind::Custom { df, .. } => df(x),
        }
    }

    pub fn shape(&self) -> PhiShape {
        match &self.kind {
            PhiKind::Identity => PhiShape::General,
            PhiKind::Pow(k) => {
                if *k >= 1.0 {
                    PhiShape::Convex
                } else {
                    PhiShape::Concave
                }
            }
            PhiKind::Custom { shape, .. } => *shape,
        }
    }

    /// Grid validation: strictly increasing, and second differences
    /// consistent with the declared shape.
    pub fn validate(&self, n: usize) -> Result<()> {
        let n = n.max(64);
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| self.apply(x)).collect();
        for w in ys.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "phi must be strictly increasing on [0,1]".into(),
                ));
            }
        }
        let shape = self.shape();
        if shape != PhiShape::General {
            for w in ys.windows(3) {
                let d2 = w[2] - 2.0 * w[1] + w[0];
                let bad = match shape {
                    PhiShape::Convex => d2 < -1e-9,
                    PhiShape::Concave => d2 > 1e-9,
                    PhiShape::General => false,
                };
                if bad {
                    return Err(Error::InvalidParameter(format!(
                        "phi second differences inconsistent with {shape:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pow_shapes() {
        assert_eq!(PhiTransform::pow(2.0).unwrap().shape(), PhiShape::Convex);
        assert_eq!(PhiTransform::sqrt().shape(), PhiShape::Concave);
        assert!(PhiTransform::pow(2.0).unwrap().validate(256).is_ok());
        assert!(PhiTransform::sqrt().validate(256).is_ok());
    }

    #[test]
    fn apply_and_derivative() {
        let p = PhiTransform::pow(2.0).unwrap();
        assert_abs_diff_eq!(p.apply(0.5), 0.25);
        assert_abs_diff_eq!(p.derivative(0.5), 1.0);
        assert!(PhiTransform::parse("pow(2)").is_ok());
        assert!(PhiTransform::parse("identity").unwrap().is_identity());
    }
}
