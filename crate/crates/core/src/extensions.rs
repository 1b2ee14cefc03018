//! Model extensions: intrinsic quality coupled with status, transformed
//! status scales, negative status (excessive waiting), and the suffering
//! regime where participation utility falls in type.

use std::sync::Arc;

use crate::alloc::{Segment, StatusAllocation, StatusMode};
use crate::dist::{TypeDistribution, DEFAULT_GRID, TAIL_CUT};
use crate::error::{Error, Result};
use crate::mechanisms::{self, Mechanism};
use crate::num;
use crate::phi::PhiTransform;
use crate::value::{ValueFunction, ValueMode};

/// Strictly convex production cost of intrinsic quality.
#[derive(Clone)]
pub struct CostFunction {
    c: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    dc: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CostFunction")
    }
}

impl CostFunction {
    /// c(q) = k q^2 / 2.
    pub fn quadratic(k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("quadratic cost scale {k}")));
        }
        Ok(Self {
            c: Arc::new(move |q| 0.5 * k * q * q),
            dc: Arc::new(move |q| k * q),
        })
    }

    pub fn custom(
        c: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dc: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { c: Arc::new(c), dc: Arc::new(dc) }
    }

    pub fn cost(&self, q: f64) -> f64 {
        (self.c)(q)
    }

    pub fn marginal(&self, q: f64) -> f64 {
        (self.dc)(q)
    }

    /// Checks strict convexity (marginal cost strictly increasing) on a
    /// grid over [0, q_hi].
    pub fn validate_convex(&self, q_hi: f64, n: usize) -> Result<()> {
        let n = n.max(64);
        let mut prev = self.marginal(0.0);
        for i in 1..=n {
            let q = q_hi * i as f64 / n as f64;
            let m = self.marginal(q);
            if m <= prev {
                return Err(Error::NonConvexCost { worst: m - prev, at: q });
            }
            prev = m;
        }
        Ok(())
    }

    /// Inverse of the marginal cost by bracketed bisection, tolerance 1e-10.
    /// Returns 0 for targets at or below the marginal cost of zero quality.
    pub fn marginal_inverse(&self, y: f64) -> f64 {
        if y <= self.marginal(0.0) {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.marginal(hi) < y {
            hi *= 2.0;
            if hi > 1e12 {
                return hi;
            }
        }
        num::bisect_root(|q| self.marginal(q) - y, 0.0, hi, 1e-10)
    }
}

/// Optimal joint quality-and-status mechanism.
#[derive(Debug, Clone)]
pub struct IntrinsicOptimum {
    /// Exclusion cutoff (the root of the virtual value).
    pub cutoff: f64,
    /// Revenue when the good carries both intrinsic quality and status.
    pub revenue_with_status: f64,
    /// Revenue from quality alone (the classic nonlinear-pricing benchmark).
    pub revenue_pure_intrinsic: f64,
    /// Sampled optimal quality schedule (theta, Q*).
    pub quality: Vec<(f64, f64)>,
}

/// Solves the joint quality/status problem: exclude below the virtual-value
/// root and give each served type the quality equating marginal cost to
/// virtual value; status rides along as full separation.
pub fn intrinsic_quality_optimum(
    dist: &TypeDistribution,
    cost: &CostFunction,
) -> Result<IntrinsicOptimum> {
    if !dist.classify().regular {
        return Err(Error::Inapplicable(
            "intrinsic-quality optimum requires a regular distribution".into(),
        ));
    }
    let hi = dist.upper();
    let j_hi = dist.virtual_value(hi).unwrap_or(hi);
    cost.validate_convex(cost.marginal_inverse(j_hi).max(1.0), 512)?;
    let cutoff = dist.virtual_value_root();
    let tau0 = dist.cdf(cutoff);
    let top = 1.0 - TAIL_CUT;
    let q_star = |theta: f64| {
        let j = dist.virtual_value(theta).unwrap_or(theta);
        cost.marginal_inverse(j.max(0.0))
    };
    let with_status = num::integrate(
        |tau| {
            let t = dist.quantile(tau);
            let j = dist.virtual_value(t).unwrap_or(t);
            let q = q_star(t);
            j * (tau + q) - cost.cost(q)
        },
        tau0,
        top,
        1024,
    );
    let pure = num::integrate(
        |tau| {
            let t = dist.quantile(tau);
            let j = dist.virtual_value(t).unwrap_or(t);
            let q = q_star(t);
            j * q - cost.cost(q)
        },
        tau0,
        top,
        1024,
    );
    let n = 512;
    let quality = (0..=n)
        .map(|i| {
            let t = cutoff + (hi - cutoff) * i as f64 / n as f64;
            (t, q_star(t))
        })
        .collect();
    Ok(IntrinsicOptimum {
        cutoff,
        revenue_with_status: with_status,
        revenue_pure_intrinsic: pure,
        quality,
    })
}

/// Grid monotonicity of the transformed screening kernels.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PhiConditionReport {
    /// J(theta) phi'(F(theta)) nondecreasing (transformed regularity).
    pub j_phi_increasing: bool,
    /// ((1-F)/f) phi'(F(theta)) nonincreasing (transformed IFR).
    pub h_phi_decreasing: bool,
    /// J_lambda(theta) phi'(F(theta)) nondecreasing at the given lambda.
    pub j_lambda_phi_increasing: bool,
    pub lambda: f64,
}

pub fn phi_condition_check(
    dist: &TypeDistribution,
    phi: &PhiTransform,
    lambda: f64,
) -> PhiConditionReport {
    let grid = dist.interior_grid(DEFAULT_GRID);
    let mut jp = Vec::with_capacity(grid.len());
    let mut hp = Vec::with_capacity(grid.len());
    let mut jlp = Vec::with_capacity(grid.len());
    for &t in &grid {
        let f = dist.cdf(t);
        let dphi = phi.derivative(f);
        if !dphi.is_finite() {
            continue;
        }
        let h = dist.inverse_hazard(t).unwrap_or(0.0);
        jp.push((t - h) * dphi);
        hp.push(h * dphi);
        jlp.push((lambda * t - (lambda - 1.0) * h) * dphi);
    }
    let neg_hp: Vec<f64> = hp.iter().map(|&x| -x).collect();
    PhiConditionReport {
        j_phi_increasing: num::is_nondecreasing(&jp, 1e-9),
        h_phi_decreasing: num::is_nondecreasing(&neg_hp, 1e-9),
        j_lambda_phi_increasing: num::is_nondecreasing(&jlp, 1e-9),
        lambda,
    }
}

/// Revenue optimum when buyers value a transformed status scale: the
/// allocation is full separation with exclusion, transformed pointwise, and
/// the cutoff maximizes the transformed objective.
#[derive(Debug, Clone)]
pub struct PhiOptimum {
    pub cutoff: f64,
    pub revenue: f64,
    pub mech: Mechanism,
}

pub fn phi_transformed_optimum(
    dist: &TypeDistribution,
    v: &ValueFunction,
    phi: &PhiTransform,
) -> Result<PhiOptimum> {
    phi.validate(DEFAULT_GRID)?;
    if !dist.classify().regular {
        return Err(Error::Inapplicable(
            "transformed-status optimum requires a regular distribution".into(),
        ));
    }
    let lo = dist.support_lo();
    let hi = dist.upper();
    let top = 1.0 - TAIL_CUT;
    let obj = |theta0: f64| {
        let tau0 = dist.cdf(theta0);
        num::integrate(
            |tau| {
                let t = dist.quantile(tau);
                dist.virtual_value(t).unwrap_or(t) * phi.apply(tau)
            },
            tau0.min(top),
            top,
            512,
        ) + v.v(theta0) * (1.0 - tau0)
    };
    let (mut cutoff, mut value) = num::scan_then_golden(obj, lo, hi, 512, 1e-9);
    // polish on the analytic first-order kernel J phi(F) + v - h v'
    let psi = |t: f64| {
        dist.virtual_value(t).unwrap_or(t) * phi.apply(dist.cdf(t)) + v.v(t)
            - dist.inverse_hazard(t).unwrap_or(0.0) * v.dv(t)
    };
    let d = (hi - lo) * 1e-3;
    let (a, b) = ((cutoff - d).max(lo + 1e-12), (cutoff + d).min(hi - 1e-12));
    if psi(a) < 0.0 && psi(b) > 0.0 {
        let root = num::bisect_root(psi, a, b, (hi - lo) * 1e-14);
        let val = obj(root);
        if val >= value - 1e-12 {
            cutoff = root;
            value = val;
        }
    }
    let alloc = StatusAllocation::full_separation(dist, cutoff).with_phi(phi.clone());
    Ok(PhiOptimum {
        cutoff,
        revenue: value,
        mech: Mechanism::from_alloc(alloc, 0.0),
    })
}

/// Optimum when statuses may be pushed below zero (excessive waiting):
/// instead of excluding low types, they get the negative status -v' and pay
/// nothing net of their intrinsic value.
#[derive(Debug, Clone)]
pub struct NegStatusOptimum {
    pub mech: Mechanism,
    pub revenue: f64,
    pub consumer_surplus: f64,
    /// Revenue gain over the best exclusion mechanism (0 for linear v,
    /// strictly positive for strictly concave v).
    pub delta_revenue_vs_exclusion: f64,
    pub delta_cs_vs_exclusion: f64,
    /// Switch point: the root of the virtual value.
    pub switch: f64,
}

/// Default lower bound on admissible statuses: 1 + the largest |v'|.
pub fn default_negative_bound(dist: &TypeDistribution, v: &ValueFunction) -> f64 {
    1.0 + v.max_abs_slope(dist, DEFAULT_GRID)
}

pub fn negative_status_optimum(
    dist: &TypeDistribution,
    v: &ValueFunction,
    bound: Option<f64>,
) -> Result<NegStatusOptimum> {
    if !dist.classify().regular {
        return Err(Error::Inapplicable(
            "negative-status optimum requires a regular distribution".into(),
        ));
    }
    if v.mode_on(dist, DEFAULT_GRID)? != ValueMode::Standard {
        return Err(Error::InvalidValueFunction(
            "negative-status construction needs a standard-mode value function".into(),
        ));
    }
    let required = v.max_abs_slope(dist, DEFAULT_GRID);
    let m = bound.unwrap_or_else(|| default_negative_bound(dist, v));
    if m < required {
        return Err(Error::BoundTooSmall { required, given: m });
    }
    let lo = dist.support_lo();
    let hi = dist.upper();
    let switch = dist.virtual_value_root();
    let mut segments = Vec::new();
    if switch > lo {
        let n = 512;
        let points: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let t = lo + (switch - lo) * i as f64 / n as f64;
                (t, -v.dv(t))
            })
            .collect();
        segments.push(Segment::Curve { lo, hi: switch, points });
    }
    segments.push(Segment::Separation { lo: switch, hi });
    let alloc = StatusAllocation {
        exclusion_cutoff: lo,
        segments,
        mixture: Vec::new(),
        gamma: 0.5,
        phi: None,
        mode: StatusMode::Quantile,
    };
    let rev = mechanisms::revenue_unchecked(&alloc, dist, v, 0.0);
    let cs = mechanisms::consumer_surplus_unchecked(&alloc, dist, v, 0.0);
    let excl = mechanisms::optimal_exclusion(dist, v);
    let excl_cs = mechanisms::consumer_surplus_unchecked(&excl.alloc, dist, v, 0.0);
    Ok(NegStatusOptimum {
        mech: Mechanism::from_alloc(alloc, 0.0),
        revenue: rev,
        consumer_surplus: cs,
        delta_revenue_vs_exclusion: rev - excl.revenue,
        delta_cs_vs_exclusion: cs - excl_cs,
        switch,
    })
}

/// Waiting-time view of an allocation: t(theta) = 1 - s(theta).
pub fn waiting_time_rows(
    alloc: &StatusAllocation,
    dist: &TypeDistribution,
    n: usize,
) -> Vec<(f64, f64)> {
    alloc
        .sample_rows(dist, n)
        .into_iter()
        .map(|(t, s)| (t, 1.0 - s))
        .collect()
}

/// Surplus-maximal structure in the suffering regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CsMaxMode {
    /// Reverse failure rate f/F decreasing: pool all participants for free.
    TotalPooling,
    /// Reverse failure rate f/F increasing: separate everyone.
    FullSeparation,
    /// Neither monotone.
    Indeterminate,
}

/// Single-posted-price benchmark in the suffering regime.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SufferingSingleGood {
    pub cutoff: f64,
    pub price: f64,
    pub revenue: f64,
    pub ratio: f64,
}

/// Revenue optimum and diagnostics for the suffering regime (v' <= -1):
/// high types are excluded, participants are fully separated, and the
/// screening kernel is the reverse virtual value L = theta + F/f.
#[derive(Debug, Clone)]
pub struct SufferingOptimum {
    pub cutoff: f64,
    pub revenue: f64,
    /// True when -v'/v <= f/F everywhere, which forces no exclusion.
    pub no_exclusion_condition: bool,
    pub single_good: SufferingSingleGood,
    pub cs_max_mode: CsMaxMode,
}

/// Revenue of full separation below a high-type cutoff in the suffering
/// regime.
pub fn suffering_revenue(dist: &TypeDistribution, v: &ValueFunction, theta0: f64) -> f64 {
    let tau0 = dist.cdf(theta0);
    num::integrate(
        |tau| {
            let t = dist.quantile(tau);
            dist.reverse_virtual(t).unwrap_or(t) * tau
        },
        0.0,
        tau0,
        512,
    ) + v.v(theta0) * tau0
}

pub fn suffering_optimum(dist: &TypeDistribution, v: &ValueFunction) -> Result<SufferingOptimum> {
    if v.mode_on(dist, DEFAULT_GRID)? != ValueMode::Suffering {
        return Err(Error::NotSuffering);
    }
    let lo = dist.support_lo();
    let hi = dist.upper();
    let grid = dist.interior_grid(DEFAULT_GRID);
    let no_exclusion_condition = grid.iter().all(|&t| {
        let f = dist.pdf(t);
        let cdf = dist.cdf(t);
        let vv = v.v(t);
        if cdf <= 0.0 || vv <= 0.0 {
            return true;
        }
        -v.dv(t) / vv <= f / cdf + 1e-9
    });
    let (cutoff, revenue) = if no_exclusion_condition {
        (hi, suffering_revenue(dist, v, hi))
    } else {
        num::scan_then_golden(|t| suffering_revenue(dist, v, t), lo, hi, 512, 1e-9)
    };

    // single price p: all theta <= theta(p) participate, pooled above the
    // excluded mass at status 1 - F/2
    let r1 = |t: f64| {
        let ft = dist.cdf(t);
        (t * (1.0 - ft / 2.0) + v.v(t)).max(0.0) * ft
    };
    let (sg_cut, sg_rev) = num::scan_then_golden(r1, lo, hi, 1024, 1e-10);
    let single_good = SufferingSingleGood {
        cutoff: sg_cut,
        price: sg_cut * (1.0 - dist.cdf(sg_cut) / 2.0) + v.v(sg_cut),
        revenue: sg_rev,
        ratio: sg_rev / revenue,
    };

    // reverse failure rate monotonicity decides the surplus-optimal shape
    let rfr: Vec<f64> = grid
        .iter()
        .filter(|&&t| dist.cdf(t) > 1e-12)
        .map(|&t| dist.pdf(t) / dist.cdf(t))
        .collect();
    let neg: Vec<f64> = rfr.iter().map(|&x| -x).collect();
    let cs_max_mode = if num::is_nondecreasing(&neg, 1e-7) {
        CsMaxMode::TotalPooling
    } else if num::is_nondecreasing(&rfr, 1e-7) {
        CsMaxMode::FullSeparation
    } else {
        CsMaxMode::Indeterminate
    };

    Ok(SufferingOptimum {
        cutoff,
        revenue,
        no_exclusion_condition,
        single_good,
        cs_max_mode,
    })
}

/// Samples the suffering-regime optimum as mechanism rows: participants
/// are the types at or below the cutoff, fully separated at s = F, with
/// utilities from the reversed envelope U(theta) = -int_theta^theta0 (F + v')
/// pinned by a zero cutoff utility.
pub fn suffering_rows(
    dist: &TypeDistribution,
    v: &ValueFunction,
    theta0: f64,
    n: usize,
) -> Vec<crate::mechanisms::MechanismRow> {
    let lo = dist.support_lo();
    let hi = dist.upper();
    let thetas: Vec<f64> = (0..=n.max(2))
        .map(|i| lo + (hi - lo) * i as f64 / n.max(2) as f64)
        .collect();
    thetas
        .into_iter()
        .map(|t| {
            if t > theta0 + 1e-13 {
                return crate::mechanisms::MechanismRow { theta: t, s: 0.0, p: 0.0, u: 0.0 };
            }
            let s = dist.cdf(t);
            let u = -num::integrate(|x| dist.cdf(x) + v.dv(x), t, theta0, 64);
            let p = t * s + v.v(t) - u;
            crate::mechanisms::MechanismRow { theta: t, s, p, u }
        })
        .collect()
}

/// Largest revenue gain achievable by deliberately lowering statuses below
/// the suffering optimum: lowers the bottom segment [0, theta_c) by delta
/// for a grid of (theta_c, delta) pairs and reports the best improvement
/// (which should never be positive).
pub fn suffering_lowering_gain(dist: &TypeDistribution, v: &ValueFunction) -> Result<f64> {
    let opt = suffering_optimum(dist, v)?;
    let theta0 = opt.cutoff;
    let tau0 = dist.cdf(theta0);
    let base = opt.revenue;
    let mut best_gain = f64::NEG_INFINITY;
    for i in 1..=8 {
        let tau_c = tau0 * i as f64 / 9.0;
        for delta in [0.05, 0.2, 0.5, 1.0] {
            // s = F - delta below tau_c, F above: monotone, lies below the
            // optimum pointwise
            let lowered = num::integrate(
                |tau| {
                    let t = dist.quantile(tau);
                    let s = if tau < tau_c { tau - delta } else { tau };
                    dist.reverse_virtual(t).unwrap_or(t) * s + v.v(t)
                        + dist.cdf(t) / dist.pdf(t).max(1e-300) * v.dv(t)
                },
                0.0,
                tau0,
                512,
            );
            best_gain = best_gain.max(lowered - base);
        }
    }
    Ok(best_gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform() -> TypeDistribution {
        TypeDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn intrinsic_uniform_quadratic() {
        let dist = uniform();
        let cost = CostFunction::quadratic(1.0).unwrap();
        let opt = intrinsic_quality_optimum(&dist, &cost).unwrap();
        assert_abs_diff_eq!(opt.cutoff, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(opt.revenue_with_status, 7.0 / 24.0, epsilon = 1e-6);
        assert_abs_diff_eq!(opt.revenue_pure_intrinsic, 1.0 / 12.0, epsilon = 1e-6);
        // difference equals the pure-status revenue
        assert_abs_diff_eq!(
            opt.revenue_with_status - opt.revenue_pure_intrinsic,
            5.0 / 24.0,
            epsilon = 1e-6
        );
        // Q*(theta) = 2 theta - 1 on the served region
        for &(t, q) in opt.quality.iter().step_by(64) {
            assert_abs_diff_eq!(q, (2.0 * t - 1.0).max(0.0), epsilon = 1e-8);
        }
    }

    #[test]
    fn nonconvex_cost_is_rejected() {
        let dist = uniform();
        let cost = CostFunction::custom(|q| q, |_| 1.0); // linear: not strictly convex
        assert!(matches!(
            intrinsic_quality_optimum(&dist, &cost),
            Err(Error::NonConvexCost { .. })
        ));
    }

    #[test]
    fn phi_conditions_on_uniform() {
        let dist = uniform();
        let ident = phi_condition_check(&dist, &PhiTransform::identity(), 1.0);
        assert!(ident.j_phi_increasing && ident.h_phi_decreasing);
        // convex x^2: (1-x) * 2x has an interior max, so transformed IFR fails
        let sq = phi_condition_check(&dist, &PhiTransform::pow(2.0).unwrap(), 1.0);
        assert!(!sq.h_phi_decreasing);
        // concave sqrt: J phi' = (2x-1)/(2 sqrt x) is increasing
        let rt = phi_condition_check(&dist, &PhiTransform::sqrt(), 1.0);
        assert!(rt.j_phi_increasing);
    }

    #[test]
    fn phi_identity_reduces_to_base_case() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let opt = phi_transformed_optimum(&dist, &v, &PhiTransform::identity()).unwrap();
        assert_abs_diff_eq!(opt.cutoff, 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(opt.revenue, 5.0 / 24.0, epsilon = 1e-8);
    }

    #[test]
    fn phi_square_matches_closed_form() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let opt = phi_transformed_optimum(&dist, &v, &PhiTransform::pow(2.0).unwrap()).unwrap();
        // objective int_c^1 (2t-1) t^2 dt peaks at c = 1/2 with value 17/96
        assert_abs_diff_eq!(opt.cutoff, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(opt.revenue, 17.0 / 96.0, epsilon = 1e-8);
        // transformed statuses come out of the allocation
        assert_abs_diff_eq!(opt.mech.alloc.eval(&dist, 0.8), 0.64, epsilon = 1e-12);
    }

    #[test]
    fn phi_pointwise_bounds_bracket_revenue() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let base = phi_transformed_optimum(&dist, &v, &PhiTransform::identity()).unwrap();
        let below = phi_transformed_optimum(&dist, &v, &PhiTransform::pow(2.0).unwrap()).unwrap();
        let above = phi_transformed_optimum(&dist, &v, &PhiTransform::sqrt()).unwrap();
        assert!(below.revenue <= base.revenue + 1e-9);
        assert!(above.revenue >= base.revenue - 1e-9);
    }

    #[test]
    fn negative_status_linear_value() {
        let dist = uniform();
        let v = ValueFunction::linear(0.5);
        let opt = negative_status_optimum(&dist, &v, None).unwrap();
        assert_abs_diff_eq!(opt.switch, 0.5, epsilon = 1e-9);
        // waiting time t = 1 - s: 1 - theta above 1/2, 1 + alpha below
        let rows = waiting_time_rows(&opt.mech.alloc, &dist, 200);
        for &(t, w) in &rows {
            let expect = if t >= 0.5 { 1.0 - t } else { 1.5 };
            assert_abs_diff_eq!(w, expect, epsilon = 1e-9);
        }
        // linear v: no gain over exclusion
        assert_abs_diff_eq!(opt.delta_revenue_vs_exclusion, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn negative_status_concave_value_gains() {
        let dist = uniform();
        let v = ValueFunction::custom(
            |t| (t + 0.01).sqrt(),
            |t| 0.5 / (t + 0.01).sqrt(),
        );
        let opt = negative_status_optimum(&dist, &v, None).unwrap();
        assert!(
            opt.delta_revenue_vs_exclusion > 1e-4,
            "concave v should strictly gain: {}",
            opt.delta_revenue_vs_exclusion
        );
        assert!(
            opt.delta_cs_vs_exclusion < 0.0,
            "surplus should fall: {}",
            opt.delta_cs_vs_exclusion
        );
    }

    #[test]
    fn negative_status_bound_check() {
        let dist = uniform();
        let v = ValueFunction::linear(0.5);
        assert!(matches!(
            negative_status_optimum(&dist, &v, Some(0.1)),
            Err(Error::BoundTooSmall { .. })
        ));
    }

    #[test]
    fn suffering_uniform_no_exclusion() {
        let dist = uniform();
        let v = ValueFunction::poly(&[2.0, -1.0]); // v = 2 - theta
        let opt = suffering_optimum(&dist, &v).unwrap();
        assert!(opt.no_exclusion_condition);
        assert_abs_diff_eq!(opt.cutoff, 1.0, epsilon = 1e-9);
        // uniform: f/F = 1/theta decreasing -> pooling maximizes surplus
        assert_eq!(opt.cs_max_mode, CsMaxMode::TotalPooling);
        assert!(opt.single_good.ratio >= 0.5);
        assert!(opt.single_good.ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn suffering_revenue_matches_direct_payments() {
        // with full separation below theta0 and the reversed envelope,
        // revenue from the L-kernel formula must equal expected payments
        let dist = uniform();
        let v = ValueFunction::poly(&[2.0, -1.0]);
        let theta0 = 1.0;
        // U(theta) = -int_theta^{theta0} (F + v') dx; p = theta F + v - U
        let u = |t: f64| -num::integrate(|x| dist.cdf(x) + v.dv(x), t, theta0, 64);
        let ep = num::integrate(|t| t * dist.cdf(t) + v.v(t) - u(t), 0.0, theta0, 256);
        assert_abs_diff_eq!(suffering_revenue(&dist, &v, theta0), ep, epsilon = 1e-8);
    }

    #[test]
    fn suffering_rejects_standard_value() {
        let dist = uniform();
        assert!(matches!(
            suffering_optimum(&dist, &ValueFunction::zero()),
            Err(Error::NotSuffering)
        ));
    }

    #[test]
    fn lowering_status_never_helps() {
        let dist = uniform();
        let v = ValueFunction::poly(&[2.0, -1.0]);
        let gain = suffering_lowering_gain(&dist, &v).unwrap();
        assert!(gain <= 1e-9, "lowering should not raise revenue, gain {gain}");
    }
}
