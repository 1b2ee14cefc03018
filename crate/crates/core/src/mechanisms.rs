//! Objective evaluators (revenue, consumer surplus, weighted social
//! welfare), optimal-exclusion search, payment schedules via the envelope
//! formula, the single-posted-price benchmark, and the surplus-optimal
//! mechanism constructors.

use std::sync::Arc;

use crate::alloc::{PartitionMenu, StatusAllocation, StatusMode};
use crate::dist::{TypeDistribution, DEFAULT_GRID, TAIL_CUT};
use crate::error::{Error, Result};
use crate::feasibility;
use crate::ironing;
use crate::num;
use crate::value::ValueFunction;

/// Quadrature panel budget shared by the evaluators.
const PANELS: usize = 512;

fn jval(dist: &TypeDistribution, theta: f64) -> f64 {
    dist.virtual_value(theta).unwrap_or(theta)
}

fn hval(dist: &TypeDistribution, theta: f64) -> f64 {
    dist.inverse_hazard(theta).unwrap_or(0.0)
}

fn require_feasible(s: &StatusAllocation, dist: &TypeDistribution) -> Result<()> {
    let rep = feasibility::check_weak_majorization(s, dist, 1e-6)?;
    if !rep.feasible {
        return Err(Error::InfeasibleAllocation { violation: rep.worst_violation });
    }
    Ok(())
}

/// Seller revenue of a feasible allocation with boundary utility `u0`:
/// the virtual-surplus integral over participants plus the intrinsic value
/// extracted from the cutoff type.
pub fn revenue(
    s: &StatusAllocation,
    dist: &TypeDistribution,
    v: &ValueFunction,
    u0: f64,
) -> Result<f64> {
    require_feasible(s, dist)?;
    Ok(revenue_unchecked(s, dist, v, u0))
}

pub(crate) fn revenue_unchecked(
    s: &StatusAllocation,
    dist: &TypeDistribution,
    v: &ValueFunction,
    u0: f64,
) -> f64 {
    let tau0 = dist.cdf(s.exclusion_cutoff);
    s.integrate_participants(dist, |t, st| jval(dist, t) * st - u0, PANELS)
        + v.v(s.exclusion_cutoff) * (1.0 - tau0)
}

/// Aggregate consumer surplus of a feasible allocation priced by the
/// envelope formula with boundary utility `u0`.
pub fn consumer_surplus(
    s: &StatusAllocation,
    dist: &TypeDistribution,
    v: &ValueFunction,
    u0: f64,
) -> Result<f64> {
    require_feasible(s, dist)?;
    Ok(consumer_surplus_unchecked(s, dist, v, u0))
}

pub(crate) fn consumer_surplus_unchecked(
    s: &StatusAllocation,
    dist: &TypeDistribution,
    v: &ValueFunction,
    u0: f64,
) -> f64 {
    let tau0 = dist.cdf(s.exclusion_cutoff);
    s.integrate_participants(dist, |t, st| hval(dist, t) * (st + v.dv(t)), PANELS)
        + u0 * (1.0 - tau0)
}

/// Weighted social welfare: revenue weighted by `lambda` plus consumer
/// surplus, expressed through the lambda-weighted virtual value
/// J_lambda = lambda * theta - (lambda - 1) * (1 - F)/f. At lambda = 1 this
/// reduces to revenue + consumer surplus; at lambda = 0 with u0-consistent
/// pricing it reduces to consumer surplus.
pub fn social_welfare(
    s: &StatusAllocation,
    dist: &TypeDistribution,
    v: &ValueFunction,
    lambda: f64,
    u0: f64,
) -> Result<f64> {
    require_feasible(s, dist)?;
    Ok(social_welfare_unchecked(s, dist, v, lambda, u0))
}

pub(crate) fn social_welfare_unchecked(
    s: &StatusAllocation,
    dist: &TypeDistribution,
    v: &ValueFunction,
    lambda: f64,
    u0: f64,
) -> f64 {
    let tau0 = dist.cdf(s.exclusion_cutoff);
    let body = s.integrate_participants(
        dist,
        |t, st| {
            let h = hval(dist, t);
            let j_l = lambda * t - (lambda - 1.0) * h;
            j_l * st + lambda * v.v(t) - (lambda - 1.0) * v.dv(t) * h
        },
        PANELS,
    );
    body - (lambda - 1.0) * u0 * (1.0 - tau0)
}

/// Result of the optimal-exclusion search.
#[derive(Debug, Clone)]
pub struct ExclusionOptimum {
    pub cutoff: f64,
    pub revenue: f64,
    pub alloc: StatusAllocation,
}

/// Revenue of the revenue-optimal allocation for a fixed cutoff on a
/// regular distribution (full separation above the cutoff), computed in
/// quantile space.
pub fn full_separation_revenue(
    dist: &TypeDistribution,
    v: &ValueFunction,
    theta0: f64,
) -> f64 {
    let tau0 = dist.cdf(theta0);
    let top = 1.0 - TAIL_CUT;
    num::integrate(
        |tau| jval(dist, dist.quantile(tau)) * tau,
        tau0.min(top),
        top,
        PANELS,
    ) + v.v(theta0) * (1.0 - tau0)
}

/// Derivative kernel of the cutoff objective (up to the factor -f): the
/// optimal interior cutoff is a root of J(t) F(t) + v(t) - v'(t) (1-F)/f.
fn cutoff_psi(dist: &TypeDistribution, v: &ValueFunction, theta: f64) -> f64 {
    jval(dist, theta) * dist.cdf(theta) + v.v(theta) - v.dv(theta) * hval(dist, theta)
}

/// Finds the revenue-maximizing exclusion cutoff. Regular distributions
/// use full separation above the cutoff with a coarse scan, golden-section
/// refinement, and a final root polish on the closed-form derivative;
/// non-regular distributions optimize over ironed allocations instead.
pub fn optimal_exclusion(dist: &TypeDistribution, v: &ValueFunction) -> ExclusionOptimum {
    let lo = dist.support_lo();
    let hi = dist.upper();
    if dist.classify().regular {
        let obj = |t: f64| full_separation_revenue(dist, v, t);
        let (mut best_t, mut best_v) = num::scan_then_golden(obj, lo, hi, 512, 1e-9);
        // polish: bisect the analytic derivative kernel in a neighborhood
        let d = (hi - lo) * 1e-3;
        let (a, b) = ((best_t - d).max(lo + 1e-12), (best_t + d).min(hi - 1e-12));
        let psi = |t: f64| cutoff_psi(dist, v, t);
        if psi(a) < 0.0 && psi(b) > 0.0 {
            let root = num::bisect_root(psi, a, b, (hi - lo) * 1e-14);
            let val = obj(root);
            if val >= best_v - 1e-12 {
                best_t = root;
                best_v = val;
            }
        }
        ExclusionOptimum {
            cutoff: best_t,
            revenue: best_v,
            alloc: StatusAllocation::full_separation(dist, best_t),
        }
    } else {
        let obj = |t: f64| {
            let s = ironing::ironed_allocation(dist, t);
            revenue_unchecked(&s, dist, v, 0.0)
        };
        let (best_t, best_v) = num::scan_then_golden(obj, lo, hi, 128, 1e-7);
        ExclusionOptimum {
            cutoff: best_t,
            revenue: best_v,
            alloc: ironing::ironed_allocation(dist, best_t),
        }
    }
}

/// A direct mechanism: a feasible allocation plus a payment rule. When
/// `payment_override` is absent, payments follow the envelope formula with
/// boundary utility `u0`.
#[derive(Clone)]
pub struct Mechanism {
    pub alloc: StatusAllocation,
    pub u0: f64,
    pub payment_override: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

/// One sampled row of a mechanism: type, status, payment, utility.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct MechanismRow {
    pub theta: f64,
    pub s: f64,
    pub p: f64,
    pub u: f64,
}

impl std::fmt::Debug for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mechanism")
            .field("alloc", &self.alloc)
            .field("u0", &self.u0)
            .field("override", &self.payment_override.is_some())
            .finish()
    }
}

impl Mechanism {
    pub fn from_alloc(alloc: StatusAllocation, u0: f64) -> Self {
        Self { alloc, u0, payment_override: None }
    }

    pub fn with_payment(
        alloc: StatusAllocation,
        p: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { alloc, u0: 0.0, payment_override: Some(Arc::new(p)) }
    }

    /// Samples (theta, s, p, U) on a type grid of `n` cells with extra
    /// points at every allocation knot. Excluded types get s = p = U = 0.
    pub fn rows(&self, dist: &TypeDistribution, v: &ValueFunction, n: usize) -> Vec<MechanismRow> {
        let lo = dist.support_lo();
        let hi = dist.upper();
        let mut thetas: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        for k in self.alloc.knots() {
            if k > lo && k < hi {
                thetas.push(k);
            }
        }
        thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

        let cutoff = self.alloc.exclusion_cutoff;
        let mut rows = Vec::with_capacity(thetas.len());
        let mut u_acc = self.u0;
        let mut prev: Option<f64> = None;
        for &t in &thetas {
            if t < cutoff - 1e-13 {
                rows.push(MechanismRow { theta: t, s: 0.0, p: 0.0, u: 0.0 });
                continue;
            }
            let start = prev.unwrap_or(cutoff);
            if t > start {
                u_acc += num::integrate(|x| self.alloc.eval(dist, x) + v.dv(x), start, t, 8);
            }
            prev = Some(t);
            let s = self.alloc.eval(dist, t);
            let u = u_acc;
            let p = match &self.payment_override {
                Some(f) => f(t),
                None => t * s + v.v(t) - u,
            };
            let u = match &self.payment_override {
                Some(_) => t * s + v.v(t) - p,
                None => u,
            };
            rows.push(MechanismRow { theta: t, s, p, u });
        }
        rows
    }

    /// Utility of a single type under the envelope normalization.
    pub fn utility(&self, dist: &TypeDistribution, v: &ValueFunction, theta: f64) -> f64 {
        let cutoff = self.alloc.exclusion_cutoff;
        if theta < cutoff {
            return 0.0;
        }
        match &self.payment_override {
            Some(f) => theta * self.alloc.eval(dist, theta) + v.v(theta) - f(theta),
            None => {
                // panel boundaries at the allocation's kinks so the step
                // structure of s does not leak quadrature error
                let knots = self.alloc.knots();
                self.u0
                    + num::integrate_knotted(
                        |x| self.alloc.eval(dist, x) + v.dv(x),
                        cutoff,
                        theta,
                        &knots,
                        128,
                    )
            }
        }
    }

    pub fn payment(&self, dist: &TypeDistribution, v: &ValueFunction, theta: f64) -> f64 {
        let cutoff = self.alloc.exclusion_cutoff;
        if theta < cutoff {
            return 0.0;
        }
        match &self.payment_override {
            Some(f) => f(theta),
            None => {
                theta * self.alloc.eval(dist, theta) + v.v(theta)
                    - self.utility(dist, v, theta)
            }
        }
    }

    /// Expected payment over the whole population, by quantile-space
    /// quadrature (excluded types pay nothing).
    pub fn expected_payment(&self, dist: &TypeDistribution, v: &ValueFunction) -> f64 {
        match &self.payment_override {
            Some(f) => {
                let tau0 = dist.cdf(self.alloc.exclusion_cutoff);
                num::integrate(
                    |tau| f(dist.quantile(tau)),
                    tau0,
                    1.0 - TAIL_CUT,
                    1024,
                )
            }
            None => revenue_unchecked(&self.alloc, dist, v, self.u0),
        }
    }
}

/// Builds the envelope payment schedule of an allocation with the
/// boundary-utility-zero normalization, sampled on `n` grid cells.
pub fn payment_schedule(
    alloc: &StatusAllocation,
    dist: &TypeDistribution,
    v: &ValueFunction,
    n: usize,
) -> Vec<(f64, f64)> {
    Mechanism::from_alloc(alloc.clone(), 0.0)
        .rows(dist, v, n)
        .into_iter()
        .map(|r| (r.theta, r.p))
        .collect()
}

/// Aggregate evaluation of a mechanism at a welfare weight `lambda`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EvalReport {
    pub revenue: f64,
    pub consumer_surplus: f64,
    pub social_welfare: f64,
    pub lambda: f64,
    pub exclusion_mass: f64,
    pub expected_status: f64,
    pub min_utility: f64,
}

pub fn evaluate(
    mech: &Mechanism,
    dist: &TypeDistribution,
    v: &ValueFunction,
    lambda: f64,
) -> Result<EvalReport> {
    require_feasible(&mech.alloc, dist)?;
    let rows = mech.rows(dist, v, DEFAULT_GRID);
    let rev = match &mech.payment_override {
        Some(_) => mech.expected_payment(dist, v),
        None => revenue_unchecked(&mech.alloc, dist, v, mech.u0),
    };
    let cs = match &mech.payment_override {
        Some(_) => {
            // direct quadrature of U over participants
            let tau0 = dist.cdf(mech.alloc.exclusion_cutoff);
            num::integrate(
                |tau| mech.utility(dist, v, dist.quantile(tau)),
                tau0,
                1.0 - TAIL_CUT,
                1024,
            )
        }
        None => consumer_surplus_unchecked(&mech.alloc, dist, v, mech.u0),
    };
    let min_u = rows
        .iter()
        .filter(|r| r.theta >= mech.alloc.exclusion_cutoff)
        .fold(f64::INFINITY, |m, r| m.min(r.u));
    Ok(EvalReport {
        revenue: rev,
        consumer_surplus: cs,
        social_welfare: lambda * rev + cs,
        lambda,
        exclusion_mass: dist.cdf(mech.alloc.exclusion_cutoff),
        expected_status: mech.alloc.expected_status(dist, DEFAULT_GRID),
        min_utility: min_u,
    })
}

/// The best single-posted-price mechanism and its revenue guarantee.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SingleGoodOptimum {
    pub cutoff: f64,
    pub price: f64,
    pub revenue: f64,
    /// revenue / optimal revenue; always at least 1/2.
    pub ratio: f64,
}

/// Best single price: all buyers above the cutoff pool at status
/// (1 + F(cutoff))/2 and pay the cutoff type's willingness to pay.
pub fn single_good_optimum(dist: &TypeDistribution, v: &ValueFunction) -> SingleGoodOptimum {
    let lo = dist.support_lo();
    let hi = dist.upper();
    let r1 = |t: f64| {
        let ft = dist.cdf(t);
        (t * (1.0 + ft) / 2.0 + v.v(t)) * (1.0 - ft)
    };
    let (cutoff, rev) = num::scan_then_golden(r1, lo, hi, 1024, 1e-10);
    let best = optimal_exclusion(dist, v);
    let price = cutoff * (1.0 + dist.cdf(cutoff)) / 2.0 + v.v(cutoff);
    SingleGoodOptimum {
        cutoff,
        price,
        revenue: rev,
        ratio: rev / best.revenue,
    }
}

/// Consumer-surplus-maximal mechanism under budget balance (transfers may
/// be negative): full separation with payment p(theta) = A(theta) - E[A],
/// where A(theta) is the partial mean below theta. E[p] = 0 by
/// construction.
pub fn cs_max_budget_balanced(dist: &TypeDistribution) -> Mechanism {
    let d = dist.clone();
    let a = move |theta: f64| {
        let tau = d.cdf(theta);
        num::integrate(|t| d.quantile(t), 0.0, tau.min(1.0 - TAIL_CUT), 256)
    };
    let c = {
        let a = a.clone();
        num::integrate(|tau| a(dist.quantile(tau)), 0.0, 1.0 - TAIL_CUT, 1024)
    };
    let alloc = StatusAllocation::full_separation(dist, dist.support_lo());
    Mechanism::with_payment(alloc, move |theta| a(theta) - c)
}

/// Consumer-surplus-maximal mechanism under nonnegative prices. Requires a
/// monotone failure rate: pooling everything for free under an increasing
/// failure rate, full separation at prices equal to partial means under a
/// decreasing failure rate.
pub fn cs_max_nonneg_price(dist: &TypeDistribution, v: &ValueFunction) -> Result<Mechanism> {
    let class = dist.classify();
    let lo = dist.support_lo();
    if class.ifr {
        let alloc = StatusAllocation::total_pooling(dist, lo);
        Ok(Mechanism::with_payment(alloc, |_| 0.0))
    } else if class.dfr {
        let d = dist.clone();
        let alloc = StatusAllocation::full_separation(dist, lo);
        let _ = v;
        Ok(Mechanism::with_payment(alloc, move |theta| {
            let tau = d.cdf(theta);
            num::integrate(|t| d.quantile(t), 0.0, tau.min(1.0 - TAIL_CUT), 256)
        }))
    } else {
        Err(Error::Inapplicable(
            "surplus-optimal pricing needs a monotone failure rate".into(),
        ))
    }
}

/// Socially optimal mechanism at welfare weight `lambda`: full separation
/// with a cutoff maximizing the lambda-weighted objective; lambda = 1
/// forces no exclusion.
pub fn social_optimum(
    dist: &TypeDistribution,
    v: &ValueFunction,
    lambda: f64,
    nonneg_prices: bool,
) -> Result<Mechanism> {
    if !nonneg_prices && lambda < 1.0 {
        return Err(Error::InvalidParameter(
            "welfare weight below 1 requires the nonnegative-price regime".into(),
        ));
    }
    if nonneg_prices {
        // J_lambda must be monotone for full separation to be optimal
        let grid = dist.interior_grid(DEFAULT_GRID);
        let vals: Vec<f64> = grid
            .iter()
            .map(|&t| lambda * t - (lambda - 1.0) * hval(dist, t))
            .collect();
        if !num::is_nondecreasing(&vals, 1e-7) {
            return Err(Error::Inapplicable(
                "lambda-weighted virtual value is non-monotone".into(),
            ));
        }
    }
    let lo = dist.support_lo();
    let cutoff = if (lambda - 1.0).abs() < 1e-12 {
        lo
    } else {
        let hi = dist.upper();
        let obj = |t: f64| {
            let s = StatusAllocation::full_separation(dist, t);
            social_welfare_unchecked(&s, dist, v, lambda, 0.0)
        };
        num::scan_then_golden(obj, lo, hi, 512, 1e-9).0
    };
    Ok(Mechanism::from_alloc(
        StatusAllocation::full_separation(dist, cutoff),
        0.0,
    ))
}

/// A random feasible partition menu above a fixed cutoff, for sampled
/// dominance checks.
pub fn random_menu(
    dist: &TypeDistribution,
    rng: &mut impl rand::Rng,
    max_levels: usize,
    theta0: f64,
) -> PartitionMenu {
    let hi = dist.upper();
    let m = rng.gen_range(1..=max_levels.max(1));
    let mut bps = vec![theta0, hi];
    for _ in 1..m {
        bps.push(theta0 + (hi - theta0) * rng.gen::<f64>());
    }
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (hi - theta0));
    PartitionMenu::new(bps).expect("random breakpoints are strictly increasing")
}

/// Status allocation induced by a random menu.
pub fn random_menu_alloc(
    dist: &TypeDistribution,
    rng: &mut impl rand::Rng,
    max_levels: usize,
    theta0: f64,
) -> StatusAllocation {
    let menu = random_menu(dist, rng, max_levels, theta0);
    StatusAllocation::induced(&menu, dist, StatusMode::Quantile, 0.5)
        .expect("menu from random_menu is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn uniform() -> TypeDistribution {
        TypeDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_revenue_closed_forms() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let half = StatusAllocation::full_separation(&dist, 0.5);
        assert_abs_diff_eq!(revenue(&half, &dist, &v, 0.0).unwrap(), 5.0 / 24.0, epsilon = 1e-9);
        let all = StatusAllocation::full_separation(&dist, 0.0);
        assert_abs_diff_eq!(revenue(&all, &dist, &v, 0.0).unwrap(), 1.0 / 6.0, epsilon = 1e-9);
        // u0 reduces revenue one-for-one times the participation mass
        assert_abs_diff_eq!(
            revenue(&half, &dist, &v, 0.2).unwrap(),
            5.0 / 24.0 - 0.2 * 0.5,
            epsilon = 1e-9
        );
    }

    #[test]
    fn uniform_consumer_surplus_closed_forms() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let all = StatusAllocation::full_separation(&dist, 0.0);
        assert_abs_diff_eq!(
            consumer_surplus(&all, &dist, &v, 0.0).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-9
        );
        let pool = StatusAllocation::total_pooling(&dist, 0.0);
        // s = 1/2, p = 0 -> U(theta) = theta/2, W = 1/4
        let m = Mechanism::with_payment(pool, |_| 0.0);
        let rep = evaluate(&m, &dist, &v, 1.0).unwrap();
        assert_abs_diff_eq!(rep.consumer_surplus, 0.25, epsilon = 1e-6);
        // empty participation
        let none = StatusAllocation::full_separation(&dist, 1.0);
        assert_abs_diff_eq!(consumer_surplus(&none, &dist, &v, 0.0).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn welfare_identity_at_lambda_one() {
        let dist = uniform();
        let v = ValueFunction::linear(0.3);
        for cutoff in [0.0, 0.3, 0.6] {
            let s = StatusAllocation::full_separation(&dist, cutoff);
            let r = revenue(&s, &dist, &v, 0.0).unwrap();
            let w = consumer_surplus(&s, &dist, &v, 0.0).unwrap();
            let ws = social_welfare(&s, &dist, &v, 1.0, 0.0).unwrap();
            assert_abs_diff_eq!(ws, r + w, epsilon = 1e-8);
        }
    }

    #[test]
    fn welfare_reduces_to_surplus_at_lambda_zero() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let s = StatusAllocation::total_pooling(&dist, 0.0);
        let ws = social_welfare(&s, &dist, &v, 0.0, 0.0).unwrap();
        let cs = consumer_surplus(&s, &dist, &v, 0.0).unwrap();
        assert_abs_diff_eq!(ws, cs, epsilon = 1e-9);
    }

    #[test]
    fn optimal_exclusion_uniform() {
        let dist = uniform();
        let opt = optimal_exclusion(&dist, &ValueFunction::zero());
        assert_abs_diff_eq!(opt.cutoff, 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(opt.revenue, 5.0 / 24.0, epsilon = 1e-8);
        // linear v keeps the cutoff at 1/2
        let opt2 = optimal_exclusion(&dist, &ValueFunction::linear(0.7));
        assert_abs_diff_eq!(opt2.cutoff, 0.5, epsilon = 1e-6);
        // large constant v makes exclusion unprofitable
        let opt3 = optimal_exclusion(&dist, &ValueFunction::constant(2.0));
        assert_abs_diff_eq!(opt3.cutoff, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn payment_schedule_uniform_exclusion() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let s = StatusAllocation::full_separation(&dist, 0.5);
        let m = Mechanism::from_alloc(s, 0.0);
        for &t in &[0.5, 0.7, 0.9, 1.0] {
            assert_abs_diff_eq!(
                m.payment(&dist, &v, t),
                t * t / 2.0 + 1.0 / 8.0,
                epsilon = 1e-9
            );
        }
        assert_abs_diff_eq!(m.payment(&dist, &v, 0.3), 0.0);
    }

    #[test]
    fn two_level_price_gap_matches_indifference() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let theta_star = 0.4;
        let menu = PartitionMenu::new(vec![0.0, theta_star, 1.0]).unwrap();
        let s = StatusAllocation::induced(&menu, &dist, StatusMode::Quantile, 0.5).unwrap();
        let m = Mechanism::from_alloc(s, 0.0);
        let p_l = m.payment(&dist, &v, theta_star / 2.0);
        let p_h = m.payment(&dist, &v, 0.9);
        // jump at theta*: p_H - p_L = theta* (s_H - s_L) = theta*/2
        assert_abs_diff_eq!(p_h - p_l, theta_star / 2.0, epsilon = 1e-9);
        // total pooling charges a constant price
        let pool = StatusAllocation::total_pooling(&dist, 0.25);
        let mp = Mechanism::from_alloc(pool, 0.0);
        let expect = 0.25 * (1.0 + 0.25) / 2.0;
        assert_abs_diff_eq!(mp.payment(&dist, &v, 0.5), expect, epsilon = 1e-9);
        assert_abs_diff_eq!(mp.payment(&dist, &v, 0.99), expect, epsilon = 1e-9);
    }

    #[test]
    fn single_good_uniform_and_power() {
        let dist = uniform();
        let sg = single_good_optimum(&dist, &ValueFunction::zero());
        assert_abs_diff_eq!(sg.cutoff, 1.0 / 3.0_f64.sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(sg.revenue, 1.0 / (3.0 * 3.0_f64.sqrt()), epsilon = 1e-8);
        assert_abs_diff_eq!(sg.ratio, 0.9238, epsilon = 1e-3);
        assert!(sg.ratio >= 0.5);

        for beta in [0.5, 2.0] {
            let d = TypeDistribution::power(beta).unwrap();
            let sg = single_good_optimum(&d, &ValueFunction::zero());
            let closed = (1.0 + beta) * (1.0 / (1.0 + 2.0 * beta)).powf(1.0 / (2.0 * beta))
                / (beta + (1.0 + beta).powf(-1.0 - 1.0 / beta));
            assert_abs_diff_eq!(sg.ratio, closed, epsilon = 1e-3);
            assert!(sg.ratio > 0.914);
        }
    }

    #[test]
    fn budget_balanced_mechanism_uniform() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let m = cs_max_budget_balanced(&dist);
        for &t in &[0.0, 0.4, 1.0] {
            assert_abs_diff_eq!(
                m.payment(&dist, &v, t),
                t * t / 2.0 - 1.0 / 6.0,
                epsilon = 1e-9
            );
        }
        assert_abs_diff_eq!(m.expected_payment(&dist, &v), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.utility(&dist, &v, 0.0), 1.0 / 6.0, epsilon = 1e-9);
    }

    #[test]
    fn nonneg_price_surplus_mechanisms() {
        let v = ValueFunction::zero();
        let dist = uniform();
        let m = cs_max_nonneg_price(&dist, &v).unwrap();
        let rep = evaluate(&m, &dist, &v, 0.0).unwrap();
        assert_abs_diff_eq!(rep.consumer_surplus, 0.25, epsilon = 1e-6);

        let pareto = TypeDistribution::pareto(2.0, 1.0).unwrap();
        let mp = cs_max_nonneg_price(&pareto, &v).unwrap();
        // DFR: full separation at partial-mean prices
        assert!(mp.payment_override.is_some());
        assert_abs_diff_eq!(mp.alloc.eval(&pareto, 2.0), pareto.cdf(2.0), epsilon = 1e-12);

        // exponential: constant hazard makes pooling and separation equal
        let e = TypeDistribution::exponential(1.0).unwrap();
        let pool = StatusAllocation::total_pooling(&e, 0.0);
        let sep = StatusAllocation::full_separation(&e, 0.0);
        let w_pool = consumer_surplus(&pool, &e, &v, 0.0).unwrap();
        let w_sep = consumer_surplus(&sep, &e, &v, 0.0).unwrap();
        assert_abs_diff_eq!(w_pool, w_sep, epsilon = 1e-6);
    }

    #[test]
    fn social_optimum_cases() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let m1 = social_optimum(&dist, &v, 1.0, false).unwrap();
        assert_abs_diff_eq!(m1.alloc.exclusion_cutoff, 0.0);
        // heavy revenue weight drives the cutoff toward the revenue cutoff
        let m_inf = social_optimum(&dist, &v, 200.0, false).unwrap();
        assert_abs_diff_eq!(m_inf.alloc.exclusion_cutoff, 0.5, epsilon = 0.01);
        assert!(social_optimum(&dist, &v, 0.5, false).is_err());
    }

    #[test]
    fn random_menus_are_feasible_and_dominated() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let opt = optimal_exclusion(&dist, &v);
        for _ in 0..50 {
            let s = random_menu_alloc(&dist, &mut rng, 5, 0.5);
            let rep = feasibility::check_weak_majorization(&s, &dist, 1e-8).unwrap();
            assert!(rep.feasible);
            let r = revenue_unchecked(&s, &dist, &v, 0.0);
            assert!(r <= opt.revenue + 1e-8, "menu revenue {r} beats optimum {}", opt.revenue);
        }
    }

    #[test]
    fn infeasible_allocation_is_rejected() {
        let dist = uniform();
        let v = ValueFunction::zero();
        let mut s = StatusAllocation::total_pooling(&dist, 0.0);
        if let crate::alloc::Segment::Pool { level, .. } = &mut s.segments[0] {
            *level = 0.8; // above the feasible pooled level 1/2
        }
        assert!(matches!(
            revenue(&s, &dist, &v, 0.0),
            Err(Error::InfeasibleAllocation { .. })
        ));
    }
}
