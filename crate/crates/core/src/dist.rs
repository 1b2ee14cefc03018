//! Buyer type distributions and the derived screening quantities: virtual
//! values, failure rates, and regularity classification.

use crate::error::{Error, Result};
use crate::num;

/// Mass fraction cut from an infinite upper tail for quadrature purposes.
pub const TAIL_CUT: f64 = 1e-9;

/// Per-step slack allowed before a grid monotonicity violation counts,
/// relative to the scale of the sampled function.
pub const MONO_TOL: f64 = 1e-9;

/// Default number of interior grid points for classification and checks.
pub const DEFAULT_GRID: usize = 2048;

#[derive(Debug, Clone)]
pub enum Kind {
    /// Uniform on [a, b].
    Uniform { a: f64, b: f64 },
    /// Exponential with the given rate, support [0, inf).
    Exponential { rate: f64 },
    /// F(x) = x^beta on [0, 1].
    Power { beta: f64 },
    /// Pareto with shape alpha and scale (minimum) x_m, support [x_m, inf).
    Pareto { shape: f64, scale: f64 },
    /// Piecewise-linear CDF through `nodes` = ascending (x, F(x)) pairs with
    /// F(first) = 0 and F(last) = 1.
    Empirical { nodes: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
pub struct TypeDistribution {
    kind: Kind,
}

/// Regularity flags with the worst grid violations backing them, so
/// borderline calls can be audited.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Classification {
    /// J(theta) nondecreasing on the interior grid.
    pub regular: bool,
    /// (1-F)/f nonincreasing (increasing failure rate).
    pub ifr: bool,
    /// (1-F)/f nondecreasing (decreasing failure rate).
    pub dfr: bool,
    /// Most negative step of J over the grid (0 if monotone).
    pub worst_j_decrease: f64,
    /// Most positive step of (1-F)/f (0 if nonincreasing).
    pub worst_hazard_rise: f64,
    /// Most negative step of (1-F)/f (0 if nondecreasing).
    pub worst_hazard_drop: f64,
}

impl TypeDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(b > a) || a < 0.0 {
            return Err(Error::InvalidParameter(format!("uniform({a},{b})")));
        }
        Ok(Self { kind: Kind::Uniform { a, b } })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!("exp({rate})")));
        }
        Ok(Self { kind: Kind::Exponential { rate } })
    }

    pub fn power(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("power({beta})")));
        }
        Ok(Self { kind: Kind::Power { beta } })
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("pareto({shape},{scale})")));
        }
        Ok(Self { kind: Kind::Pareto { shape, scale } })
    }

    /// Builds a piecewise-linear empirical distribution from raw samples
    /// with optional weights. Duplicate sample values are merged.
    pub fn empirical(samples: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter(
                "empirical distribution needs at least 2 samples".into(),
            ));
        }
        let mut pairs: Vec<(f64, f64)> = match weights {
            Some(w) => {
                if w.len() != samples.len() {
                    return Err(Error::InvalidParameter("weights length mismatch".into()));
                }
                samples.iter().copied().zip(w.iter().copied()).collect()
            }
            None => samples.iter().map(|&x| (x, 1.0)).collect(),
        };
        if pairs.iter().any(|&(x, w)| !x.is_finite() || x < 0.0 || w < 0.0) {
            return Err(Error::InvalidParameter(
                "samples must be finite and nonnegative with nonnegative weights".into(),
            ));
        }
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        // merge duplicates
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        if merged.len() < 2 {
            return Err(Error::InvalidParameter("all samples coincide".into()));
        }
        let total: f64 = merged.iter().map(|p| p.1).sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("zero total weight".into()));
        }
        // cumulative midpoints, rescaled so the first node sits at 0 and the
        // last at 1; this yields a strictly increasing piecewise-linear CDF
        let mut mids = Vec::with_capacity(merged.len());
        let mut cum = 0.0;
        for &(_, w) in &merged {
            mids.push((cum + 0.5 * w) / total);
            cum += w;
        }
        let (m0, m1) = (mids[0], *mids.last().unwrap());
        let nodes: Vec<(f64, f64)> = merged
            .iter()
            .zip(&mids)
            .map(|(&(x, _), &m)| (x, (m - m0) / (m1 - m0)))
            .collect();
        Ok(Self { kind: Kind::Empirical { nodes } })
    }

    /// Parses the distribution grammar: `uniform(a,b)`, `exp(rate)`,
    /// `power(beta)`, `pareto(shape,scale)`, `empirical(path.csv)` where the
    /// CSV has one sample value per line.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let open = spec
            .find('(')
            .ok_or_else(|| Error::Parse(format!("expected '(' in distribution spec '{spec}'")))?;
        if !spec.ends_with(')') {
            return Err(Error::Parse(format!("expected ')' at end of '{spec}'")));
        }
        let name = &spec[..open];
        let args = &spec[open + 1..spec.len() - 1];
        let num_args = |n: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = args
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number '{}' in '{spec}'", t.trim())))
                })
                .collect::<Result<_>>()?;
            if vals.len() != n {
                return Err(Error::Parse(format!("'{name}' takes {n} argument(s)")));
            }
            Ok(vals)
        };
        match name {
            "uniform" => {
                let v = num_args(2)?;
                Self::uniform(v[0], v[1])
            }
            "exp" => Self::exponential(num_args(1)?[0]),
            "power" => Self::power(num_args(1)?[0]),
            "pareto" => {
                let v = num_args(2)?;
                Self::pareto(v[0], v[1])
            }
            "empirical" => {
                let text = std::fs::read_to_string(args.trim())
                    .map_err(|e| Error::Parse(format!("cannot read '{}': {e}", args.trim())))?;
                let mut samples = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() {
                        continue;
                    }
                    samples.push(line.parse::<f64>().map_err(|_| {
                        Error::Parse(format!("bad sample '{line}' on line {}", i + 1))
                    })?);
                }
                Self::empirical(&samples, None)
            }
            _ => Err(Error::Parse(format!("unknown distribution '{name}'"))),
        }
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// (support_lo, support_hi); support_hi may be +inf.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Uniform { a, b } => (*a, *b),
            Kind::Exponential { .. } => (0.0, f64::INFINITY),
            Kind::Power { .. } => (0.0, 1.0),
            Kind::Pareto { scale, .. } => (*scale, f64::INFINITY),
            Kind::Empirical { nodes } => (nodes[0].0, nodes.last().unwrap().0),
        }
    }

    pub fn support_lo(&self) -> f64 {
        self.support().0
    }

    /// Finite upper bound for quadrature: the true upper end when bounded,
    /// else the quantile at 1 - TAIL_CUT.
    pub fn upper(&self) -> f64 {
        let (_, hi) = self.support();
        if hi.is_finite() {
            hi
        } else {
            self.quantile(1.0 - TAIL_CUT)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match &self.kind {
            Kind::Uniform { a, b } => (x - a) / (b - a),
            Kind::Exponential { rate } => 1.0 - (-rate * x).exp(),
            Kind::Power { beta } => x.powf(*beta),
            Kind::Pareto { shape, scale } => 1.0 - (scale / x).powf(*shape),
            Kind::Empirical { nodes } => pwl_eval(nodes, x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match &self.kind {
            Kind::Uniform { a, b } => 1.0 / (b - a),
            Kind::Exponential { rate } => rate * (-rate * x).exp(),
            Kind::Power { beta } => beta * x.powf(beta - 1.0),
            Kind::Pareto { shape, scale } => shape * scale.powf(*shape) / x.powf(shape + 1.0),
            Kind::Empirical { nodes } => pwl_slope(nodes, x),
        }
    }

    /// Inverse CDF on [0, 1].
    pub fn quantile(&self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, 1.0);
        match &self.kind {
            Kind::Uniform { a, b } => a + tau * (b - a),
            Kind::Exponential { rate } => {
                if tau >= 1.0 {
                    f64::INFINITY
                } else {
                    -(1.0 - tau).ln() / rate
                }
            }
            Kind::Power { beta } => tau.powf(1.0 / beta),
            Kind::Pareto { shape, scale } => {
                if tau >= 1.0 {
                    f64::INFINITY
                } else {
                    scale / (1.0 - tau).powf(1.0 / shape)
                }
            }
            Kind::Empirical { nodes } => pwl_inverse(nodes, tau),
        }
    }

    /// Population mean, via quadrature of the quantile function with
    /// geometric refinement toward the upper tail, where the quantile may
    /// grow without bound.
    pub fn mean(&self) -> f64 {
        let mut knots = Vec::new();
        let mut g = 0.5;
        while g > 2.0 * TAIL_CUT {
            knots.push(1.0 - g);
            g *= 0.5;
        }
        num::integrate_knotted(|t| self.quantile(t), 0.0, 1.0 - TAIL_CUT, &knots, 1024)
    }

    /// Inverse hazard (1 - F)/f at an interior point.
    pub fn inverse_hazard(&self, theta: f64) -> Result<f64> {
        let f = self.pdf(theta);
        if f <= 0.0 {
            return Err(Error::UndefinedDensity { theta });
        }
        Ok((1.0 - self.cdf(theta)) / f)
    }

    /// Virtual value J(theta) = theta - (1-F)/f. At the upper support end
    /// returns theta itself (the hazard term vanishes there).
    pub fn virtual_value(&self, theta: f64) -> Result<f64> {
        let (_, hi) = self.support();
        if theta >= hi {
            return Ok(hi);
        }
        Ok(theta - self.inverse_hazard(theta)?)
    }

    /// Reverse virtual value L(theta) = theta + F/f, the suffering-case
    /// analog where high types are the marginal participants.
    pub fn reverse_virtual(&self, theta: f64) -> Result<f64> {
        let f = self.pdf(theta);
        if f <= 0.0 {
            return Err(Error::UndefinedDensity { theta });
        }
        Ok(theta + self.cdf(theta) / f)
    }

    /// Smallest theta with J(theta) >= 0, by bisection on the interior.
    /// Meaningful for regular distributions; on others it returns the first
    /// sign change found from below.
    pub fn virtual_value_root(&self) -> f64 {
        let lo = self.support_lo();
        let hi = self.upper();
        let eps = (hi - lo) * 1e-12;
        let j = |t: f64| self.virtual_value(t).unwrap_or(f64::NEG_INFINITY);
        if j(lo + eps) >= 0.0 {
            return lo;
        }
        if j(hi - eps) <= 0.0 {
            return hi;
        }
        num::bisect_root(j, lo + eps, hi - eps, eps.max(1e-14))
    }

    /// Interior quantile grid in (0, 1): `n` uniform midpoints plus geometric
    /// refinement toward both endpoints, where hazards may diverge.
    pub fn quantile_grid(n: usize) -> Vec<f64> {
        let n = n.max(16);
        let mut taus: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let mut t = 0.5 / n as f64;
        while t > 1e-7 {
            t *= 0.5;
            taus.push(t);
            taus.push(1.0 - t);
        }
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        taus.dedup();
        taus
    }

    /// Interior theta grid obtained by mapping `quantile_grid` through the
    /// quantile function.
    pub fn interior_grid(&self, n: usize) -> Vec<f64> {
        Self::quantile_grid(n)
            .into_iter()
            .map(|t| self.quantile(t.min(1.0 - TAIL_CUT)))
            .collect()
    }

    /// Classifies regularity, IFR, and DFR by grid monotonicity with the
    /// MONO_TOL relative slack.
    pub fn classify(&self) -> Classification {
        self.classify_with(DEFAULT_GRID)
    }

    pub fn classify_with(&self, n: usize) -> Classification {
        let thetas = self.interior_grid(n);
        let mut j = Vec::with_capacity(thetas.len());
        let mut h = Vec::with_capacity(thetas.len());
        for &t in &thetas {
            if let (Ok(jv), Ok(hv)) = (self.virtual_value(t), self.inverse_hazard(t)) {
                j.push(jv);
                h.push(hv);
            }
        }
        let scale_j = j.iter().fold(1.0_f64, |m, &x| m.max(x.abs()));
        let scale_h = h.iter().fold(1.0_f64, |m, &x| m.max(x.abs()));
        let worst_j = num::worst_decrease(&j);
        let worst_h_drop = num::worst_decrease(&h);
        let neg_h: Vec<f64> = h.iter().map(|&x| -x).collect();
        let worst_h_rise = -num::worst_decrease(&neg_h);
        Classification {
            regular: worst_j >= -MONO_TOL * scale_j,
            ifr: worst_h_rise <= MONO_TOL * scale_h,
            dfr: worst_h_drop >= -MONO_TOL * scale_h,
            worst_j_decrease: worst_j,
            worst_hazard_rise: worst_h_rise,
            worst_hazard_drop: worst_h_drop,
        }
    }
}

fn pwl_eval(nodes: &[(f64, f64)], x: f64) -> f64 {
    let i = nodes.partition_point(|&(xi, _)| xi <= x);
    if i == 0 {
        return 0.0;
    }
    if i == nodes.len() {
        return 1.0;
    }
    let (x0, y0) = nodes[i - 1];
    let (x1, y1) = nodes[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn pwl_slope(nodes: &[(f64, f64)], x: f64) -> f64 {
    let i = nodes.partition_point(|&(xi, _)| xi <= x).clamp(1, nodes.len() - 1);
    let (x0, y0) = nodes[i - 1];
    let (x1, y1) = nodes[i];
    (y1 - y0) / (x1 - x0)
}

fn pwl_inverse(nodes: &[(f64, f64)], tau: f64) -> f64 {
    let i = nodes.partition_point(|&(_, yi)| yi < tau);
    if i == 0 {
        return nodes[0].0;
    }
    if i == nodes.len() {
        return nodes.last().unwrap().0;
    }
    let (x0, y0) = nodes[i - 1];
    let (x1, y1) = nodes[i];
    if y1 == y0 {
        return x0;
    }
    x0 + (x1 - x0) * (tau - y0) / (y1 - y0)
}
