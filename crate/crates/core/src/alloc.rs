//! Monotone piecewise status allocations: exclusion cutoff, pooling
//! intervals, separation segments, finite mixtures, gamma weighting, and
//! optional phi transforms.

use crate::dist::{TypeDistribution, TAIL_CUT};
use crate::error::{Error, Result};
use crate::num;
use crate::phi::PhiTransform;

/// Units in which statuses are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StatusMode {
    /// Status is a quantile-space value in [0, 1]; the feasibility reference
    /// is F itself.
    Quantile,
    /// Status is an expected type E[theta | pool] in [0, theta_bar]; the
    /// feasibility reference is the identity map theta.
    Signaling,
}

#[derive(Debug, Clone)]
pub enum Segment {
    /// s(theta) = F(theta) (quantile mode) or theta (signaling mode).
    Separation { lo: f64, hi: f64 },
    /// Constant status on [lo, hi).
    Pool { lo: f64, hi: f64, level: f64 },
    /// Piecewise-linear sampled status on [lo, hi); points are ascending
    /// (theta, s) pairs covering the interval.
    Curve { lo: f64, hi: f64, points: Vec<(f64, f64)> },
}

impl Segment {
    pub fn lo(&self) -> f64 {
        match self {
            Segment::Separation { lo, .. } | Segment::Pool { lo, .. } | Segment::Curve { lo, .. } => *lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match self {
            Segment::Separation { hi, .. } | Segment::Pool { hi, .. } | Segment::Curve { hi, .. } => *hi,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StatusAllocation {
    /// Types below this cutoff are excluded (status 0, no payment).
    pub exclusion_cutoff: f64,
    /// Ordered, non-overlapping segments tiling the participating range.
    pub segments: Vec<Segment>,
    /// Finite mixture over component allocations; empty means `segments`
    /// applies directly.
    pub mixture: Vec<(f64, StatusAllocation)>,
    /// Same-level weighting used at construction (1/2 is the baseline).
    pub gamma: f64,
    /// Optional strictly increasing transform applied pointwise to
    /// participant statuses.
    pub phi: Option<PhiTransform>,
    pub mode: StatusMode,
}

/// A deterministic menu: exclusion cutoff plus ordered pool breakpoints,
/// optionally with per-level prices.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PartitionMenu {
    /// theta_0 < theta_1 < ... < theta_m = theta_bar; the region below
    /// breakpoints[0] is excluded, each [theta_i, theta_{i+1}) is one level.
    pub breakpoints: Vec<f64>,
    pub prices: Option<Vec<f64>>,
}

impl PartitionMenu {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidParameter("menu needs at least two breakpoints".into()));
        }
        for w in breakpoints.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::EmptyInterval { lo: w[0], hi: w[1] });
            }
        }
        Ok(Self { breakpoints, prices: None })
    }

    pub fn levels(&self) -> usize {
        self.breakpoints.len() - 1
    }
}

impl StatusAllocation {
    /// s = F on [cutoff, theta_bar], 0 below.
    pub fn full_separation(dist: &TypeDistribution, cutoff: f64) -> Self {
        let hi = dist.upper();
        Self {
            exclusion_cutoff: cutoff,
            segments: vec![Segment::Separation { lo: cutoff, hi }],
            mixture: Vec::new(),
            gamma: 0.5,
            phi: None,
            mode: StatusMode::Quantile,
        }
    }

    /// Single pool at (1 + F(cutoff))/2 on [cutoff, theta_bar].
    pub fn total_pooling(dist: &TypeDistribution, cutoff: f64) -> Self {
        let hi = dist.upper();
        let level = 0.5 * (1.0 + dist.cdf(cutoff));
        Self {
            exclusion_cutoff: cutoff,
            segments: vec![Segment::Pool { lo: cutoff, hi, level }],
            mixture: Vec::new(),
            gamma: 0.5,
            phi: None,
            mode: StatusMode::Quantile,
        }
    }

    /// Status induced by a partition menu under the given mode and gamma.
    ///
    /// Quantile mode: pool on [a, b) sits at gamma F(b) + (1-gamma) F(a)
    /// (gamma = 1/2 recovers (F(a)+F(b))/2). Signaling mode: the level is
    /// E[theta | theta in [a, b)], in type units.
    pub fn induced(
        menu: &PartitionMenu,
        dist: &TypeDistribution,
        mode: StatusMode,
        gamma: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma {gamma} outside [0,1]")));
        }
        let mut segments = Vec::with_capacity(menu.levels());
        for w in menu.breakpoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                return Err(Error::EmptyInterval { lo: a, hi: b });
            }
            let level = match mode {
                StatusMode::Quantile => gamma * dist.cdf(b) + (1.0 - gamma) * dist.cdf(a),
                StatusMode::Signaling => {
                    let mass = dist.cdf(b) - dist.cdf(a);
                    if mass <= 0.0 {
                        return Err(Error::EmptyInterval { lo: a, hi: b });
                    }
                    num::integrate(|x| x * dist.pdf(x), a, b, 256) / mass
                }
            };
            segments.push(Segment::Pool { lo: a, hi: b, level });
        }
        Ok(Self {
            exclusion_cutoff: menu.breakpoints[0],
            segments,
            mixture: Vec::new(),
            gamma,
            phi: None,
            mode,
        })
    }

    /// Pointwise convex combination of allocations. Weights must be
    /// nonnegative and sum to 1.
    pub fn mix(components: Vec<(f64, StatusAllocation)>) -> Result<Self> {
        let sum: f64 = components.iter().map(|c| c.0).sum();
        if (sum - 1.0).abs() > 1e-9 || components.iter().any(|c| c.0 < 0.0) {
            return Err(Error::WeightSum { sum });
        }
        if components.len() == 1 {
            return Ok(components.into_iter().next().unwrap().1);
        }
        let cutoff = components
            .iter()
            .map(|c| c.1.exclusion_cutoff)
            .fold(f64::INFINITY, f64::min);
        let gamma = components[0].1.gamma;
        let mode = components[0].1.mode;
        Ok(Self {
            exclusion_cutoff: cutoff,
            segments: Vec::new(),
            mixture: components,
            gamma,
            phi: None,
            mode,
        })
    }

    fn base_eval(&self, dist: &TypeDistribution, theta: f64) -> f64 {
        if !self.mixture.is_empty() {
            return self
                .mixture
                .iter()
                .map(|(w, a)| w * a.eval(dist, theta))
                .sum();
        }
        if theta < self.exclusion_cutoff {
            return 0.0;
        }
        // half-open segments [lo, hi), last segment closed at hi
        let mut idx = None;
        for (i, seg) in self.segments.iter().enumerate() {
            let last = i + 1 == self.segments.len();
            if theta >= seg.lo() && (theta < seg.hi() || (last && theta <= seg.hi())) {
                idx = Some(i);
                break;
            }
        }
        let Some(i) = idx else { return 0.0 };
        match &self.segments[i] {
            Segment::Separation { .. } => match self.mode {
                StatusMode::Quantile => dist.cdf(theta),
                StatusMode::Signaling => theta,
            },
            Segment::Pool { level, .. } => *level,
            Segment::Curve { points, .. } => {
                let j = points.partition_point(|&(x, _)| x <= theta);
                if j == 0 {
                    points[0].1
                } else if j == points.len() {
                    points.last().unwrap().1
                } else {
                    let (x0, y0) = points[j - 1];
                    let (x1, y1) = points[j];
                    y0 + (y1 - y0) * (theta - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Interim status of type theta.
    pub fn eval(&self, dist: &TypeDistribution, theta: f64) -> f64 {
        let base = self.base_eval(dist, theta);
        match &self.phi {
            Some(p) if theta >= self.exclusion_cutoff => p.apply(base),
            _ => base,
        }
    }

    /// All theta values at which s may kink or jump, ascending.
    pub fn knots(&self) -> Vec<f64> {
        let mut ks = vec![self.exclusion_cutoff];
        for seg in &self.segments {
            ks.push(seg.lo());
            ks.push(seg.hi());
            if let Segment::Curve { points, .. } = seg {
                ks.extend(points.iter().map(|p| p.0));
            }
        }
        for (_, a) in &self.mixture {
            ks.extend(a.knots());
        }
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks.dedup();
        ks
    }

    /// End of the participating range (theta_bar for standard allocations).
    pub fn participation_hi(&self) -> f64 {
        let seg_hi = self.segments.last().map(|s| s.hi()).unwrap_or(self.exclusion_cutoff);
        self.mixture
            .iter()
            .map(|(_, a)| a.participation_hi())
            .fold(seg_hi, f64::max)
    }

    /// Integral over participants of g(theta, s(theta)) dF(theta), computed
    /// in quantile space with panel boundaries at every status knot.
    pub fn integrate_participants(
        &self,
        dist: &TypeDistribution,
        g: impl Fn(f64, f64) -> f64,
        panels: usize,
    ) -> f64 {
        let tau0 = dist.cdf(self.exclusion_cutoff);
        let tau1 = dist.cdf(self.participation_hi()).min(1.0 - TAIL_CUT);
        let knots: Vec<f64> = self.knots().iter().map(|&t| dist.cdf(t)).collect();
        num::integrate_knotted(
            |tau| {
                let theta = dist.quantile(tau);
                g(theta, self.eval(dist, theta))
            },
            tau0,
            tau1,
            &knots,
            panels,
        )
    }

    /// E[s] over the whole population (excluded types contribute 0).
    pub fn expected_status(&self, dist: &TypeDistribution, panels: usize) -> f64 {
        self.integrate_participants(dist, |_, s| s, panels)
    }

    /// Checks s is nondecreasing over a dense participant grid.
    pub fn is_monotone(&self, dist: &TypeDistribution, n: usize) -> bool {
        let tau0 = dist.cdf(self.exclusion_cutoff);
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let tau = tau0 + (1.0 - TAIL_CUT - tau0) * (i as f64 + 0.5) / n as f64;
                self.eval(dist, dist.quantile(tau))
            })
            .collect();
        num::is_nondecreasing(&vals, 1e-9)
    }

    /// Samples (theta, s) rows for export.
    pub fn sample_rows(&self, dist: &TypeDistribution, n: usize) -> Vec<(f64, f64)> {
        let lo = dist.support_lo();
        let hi = dist.upper();
        (0..=n)
            .map(|i| {
                let theta = lo + (hi - lo) * i as f64 / n as f64;
                (theta, self.eval(dist, theta))
            })
            .collect()
    }

    /// Returns a copy with phi applied pointwise.
    pub fn with_phi(mut self, phi: PhiTransform) -> Self {
        self.phi = Some(phi);
        self
    }
}
