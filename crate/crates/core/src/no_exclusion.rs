//! Mechanisms when the lowest positional level is free and exclusion is
//! impossible: the feasible set tightens to mean-preserving spreads of F,
//! a free bottom level plus one priced level gives a 1/2 guarantee, and
//! pooling-optimality conditions for consumer surplus.

use crate::alloc::{Segment, StatusAllocation};
use crate::dist::{TypeDistribution, DEFAULT_GRID, TAIL_CUT};
use crate::error::{Error, Result};
use crate::ironing;
use crate::mechanisms::Mechanism;
use crate::num;
use crate::value::ValueFunction;

/// Revenue-maximal mechanism without exclusion: full separation when the
/// virtual value is increasing, the ironed allocation otherwise. The bottom
/// type pays nothing, so revenue is the plain virtual-surplus integral.
pub fn revmax_no_exclusion(dist: &TypeDistribution, v: &ValueFunction) -> (Mechanism, f64) {
    let lo = dist.support_lo();
    let alloc = if dist.classify().regular {
        StatusAllocation::full_separation(dist, lo)
    } else {
        ironing::ironed_allocation(dist, lo)
    };
    let rev = alloc.integrate_participants(
        dist,
        |t, s| dist.virtual_value(t).unwrap_or(t) * s,
        512,
    );
    (Mechanism::from_alloc(alloc, v.v(lo)), rev)
}

/// The single-priced-level benchmark when the bottom level is free.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TwoLevelOptimum {
    /// Price of the high level.
    pub price: f64,
    /// Indifferent type: theta(p) = 2p.
    pub cutoff: f64,
    /// Revenue of the two-level menu.
    pub r2: f64,
    /// Unconstrained no-exclusion maximum used as the denominator.
    pub max_r: f64,
    pub ratio: f64,
}

/// Best free-bottom/priced-top menu: the type indifferent between the two
/// levels is theta(p) = 2p (the status gap is always 1/2), so the revenue
/// is p (1 - F(2p)), equivalently half of max_p p (1 - F(p)).
pub fn two_level_optimum(dist: &TypeDistribution) -> TwoLevelOptimum {
    let hi = dist.upper();
    let obj = |p: f64| p * (1.0 - dist.cdf(2.0 * p));
    let (price, r2) = num::scan_then_golden(obj, 0.0, hi / 2.0, 2048, 1e-12);
    let (_, max_r) = revmax_no_exclusion(dist, &ValueFunction::zero());
    TwoLevelOptimum {
        price,
        cutoff: 2.0 * price,
        r2,
        max_r,
        ratio: r2 / max_r,
    }
}

/// Best posted price of a standard (non-positional) good, for the identity
/// R2 = max_p p (1 - F(2p)) = (1/2) max_p p (1 - F(p)).
pub fn best_monopoly_price(dist: &TypeDistribution) -> (f64, f64) {
    let hi = dist.upper();
    num::scan_then_golden(|p| p * (1.0 - dist.cdf(p)), 0.0, hi, 2048, 1e-12)
}

/// Grid check of the pooling-optimality condition for consumer surplus:
/// the partial integral of ((1-F)/f - E[theta]) dF stays nonnegative.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PoolingCsCondition {
    pub holds: bool,
    /// Most negative value of the partial integral (0 when it holds).
    pub worst_violation: f64,
    /// Cross-check via the equivalent form: mean residual life never
    /// exceeds the mean (exact restatement when the support starts at 0).
    pub equivalent_holds: bool,
}

pub fn pooling_cs_condition(dist: &TypeDistribution) -> PoolingCsCondition {
    let mean = dist.mean();
    let top = 1.0 - TAIL_CUT;
    let n = DEFAULT_GRID;
    let taus: Vec<f64> = (0..=n).map(|i| top * i as f64 / n as f64).collect();
    // I(tau) = int_0^tau ((1-t)/f(Q(t)) - mean) dt, using (1-F)/f dF = (1-F) dtheta
    let partial = num::cumulative(
        |t| {
            let q = dist.quantile(t);
            (1.0 - t) / dist.pdf(q).max(1e-300) - mean
        },
        &taus,
        2,
    );
    let worst = partial.iter().fold(0.0_f64, |m, &x| m.min(x));
    // equivalent form: E[theta | theta >= q] - q <= mean
    let mut equivalent = true;
    for i in 1..n {
        let tau = taus[i];
        let q = dist.quantile(tau);
        let tail_mean = num::integrate(|t| dist.quantile(t), tau, top, 128) / (1.0 - tau);
        if tail_mean - q > mean + 1e-6 {
            equivalent = false;
            break;
        }
    }
    PoolingCsCondition {
        holds: worst >= -1e-7 * mean.max(1.0),
        worst_violation: worst,
        equivalent_holds: equivalent,
    }
}

/// First-order stochastic dominance over the uniform distribution on the
/// same bounded support: F(theta) * theta_bar <= theta everywhere.
pub fn uniform_dominance_condition(dist: &TypeDistribution) -> Result<bool> {
    let (_, hi) = dist.support();
    if !hi.is_finite() {
        return Err(Error::UnboundedSupport);
    }
    Ok(dist
        .interior_grid(DEFAULT_GRID)
        .iter()
        .all(|&t| dist.cdf(t) * hi <= t + 1e-9 * hi))
}

/// True when the allocation's top segment separates types over a positive
/// length (pooling never reaches the very top at a revenue optimum).
pub fn separation_at_top_check(alloc: &StatusAllocation) -> bool {
    match alloc.segments.last() {
        Some(Segment::Separation { lo, hi }) => hi > lo,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform() -> TypeDistribution {
        TypeDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_no_exclusion_revenue() {
        let dist = uniform();
        let (mech, rev) = revmax_no_exclusion(&dist, &ValueFunction::zero());
        assert_abs_diff_eq!(rev, 1.0 / 6.0, epsilon = 1e-9);
        assert!(separation_at_top_check(&mech.alloc));
    }

    #[test]
    fn exponential_no_exclusion_revenue() {
        let dist = TypeDistribution::exponential(1.0).unwrap();
        let (_, rev) = revmax_no_exclusion(&dist, &ValueFunction::zero());
        // int_0^1 (Q(t) - 1) t dt = 3/4 - 1/2
        assert_abs_diff_eq!(rev, 0.25, epsilon = 1e-4);
    }

    #[test]
    fn two_level_uniform_and_exponential() {
        let dist = uniform();
        let tl = two_level_optimum(&dist);
        assert_abs_diff_eq!(tl.r2, 0.125, epsilon = 1e-9);
        assert_abs_diff_eq!(tl.max_r, 1.0 / 6.0, epsilon = 1e-9);
        assert_abs_diff_eq!(tl.ratio, 0.75, epsilon = 1e-6);
        assert_abs_diff_eq!(tl.cutoff, 2.0 * tl.price, epsilon = 1e-12);

        let e = TypeDistribution::exponential(1.0).unwrap();
        let tle = two_level_optimum(&e);
        assert_abs_diff_eq!(tle.ratio, 2.0 / std::f64::consts::E, epsilon = 1e-3);
    }

    #[test]
    fn change_of_variable_identity() {
        for dist in [
            uniform(),
            TypeDistribution::exponential(1.0).unwrap(),
            TypeDistribution::power(2.0).unwrap(),
            TypeDistribution::pareto(3.0, 1.0).unwrap(),
        ] {
            let tl = two_level_optimum(&dist);
            let (_, mono) = best_monopoly_price(&dist);
            assert_abs_diff_eq!(tl.r2, 0.5 * mono, epsilon = 1e-8);
        }
    }

    #[test]
    fn no_exclusion_is_below_monopoly_revenue() {
        for dist in [uniform(), TypeDistribution::exponential(1.0).unwrap()] {
            let (_, rev) = revmax_no_exclusion(&dist, &ValueFunction::zero());
            let (_, mono) = best_monopoly_price(&dist);
            assert!(rev < mono - 1e-6, "rev {rev} should be strictly below {mono}");
        }
    }

    #[test]
    fn pooling_condition_cases() {
        assert!(pooling_cs_condition(&uniform()).holds);
        let e = pooling_cs_condition(&TypeDistribution::exponential(1.0).unwrap());
        // constant mean residual life: boundary case with equality
        assert!(e.worst_violation.abs() < 1e-4);
        let p = pooling_cs_condition(&TypeDistribution::pareto(2.0, 1.0).unwrap());
        assert!(!p.holds, "heavy tail violates the condition: {p:?}");
        assert!(!p.equivalent_holds);
    }

    #[test]
    fn uniform_dominance_cases() {
        assert!(uniform_dominance_condition(&TypeDistribution::power(2.0).unwrap()).unwrap());
        assert!(uniform_dominance_condition(&uniform()).unwrap());
        assert!(!uniform_dominance_condition(&TypeDistribution::power(0.5).unwrap()).unwrap());
        assert!(matches!(
            uniform_dominance_condition(&TypeDistribution::exponential(1.0).unwrap()),
            Err(Error::UnboundedSupport)
        ));
    }

    #[test]
    fn separation_at_top_for_nonregular_mixture() {
        let samples = crate::dist::tests::bimodal_samples();
        let dist = TypeDistribution::empirical(&samples, None).unwrap();
        let (mech, rev) = revmax_no_exclusion(&dist, &ValueFunction::zero());
        assert!(separation_at_top_check(&mech.alloc));
        // ironing strictly beats plain full separation here
        let sep = StatusAllocation::full_separation(&dist, dist.support_lo());
        let sep_rev = sep.integrate_participants(
            &dist,
            |t, s| dist.virtual_value(t).unwrap_or(t) * s,
            512,
        );
        assert!(rev > sep_rev + 1e-5, "ironed {rev} vs separated {sep_rev}");
        let pool = StatusAllocation::total_pooling(&dist, dist.support_lo());
        assert!(!separation_at_top_check(&pool));
        let _ = crate::mechanisms::evaluate(
            &Mechanism::from_alloc(mech.alloc.clone(), 0.0),
            &dist,
            &ValueFunction::zero(),
            1.0,
        )
        .unwrap();
    }
}
