//! Feasibility of status allocations: upper-tail integral dominance in
//! quantile space (weak majorization), and the mean-preserving-spread
//! strengthening used when exclusion is impossible.

use crate::alloc::{StatusAllocation, StatusMode};
use crate::dist::{TypeDistribution, DEFAULT_GRID, TAIL_CUT};
use crate::error::{Error, Result};
use crate::num;

/// Tolerance for flagging a tail constraint as binding (equality).
pub const BINDING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, serde::Serialize)]
pub struct MajorizationReport {
    pub feasible: bool,
    /// Largest positive excess of the s-tail over the reference tail
    /// (0 when feasible with slack everywhere).
    pub worst_violation: f64,
    /// Type values at which the tail constraint holds with equality
    /// (within BINDING_TOL).
    pub binding_points: Vec<f64>,
}

/// Tail gaps D(tau_k) = int_{tau_k}^1 (s - r) dtau over a quantile grid with
/// cuts at every supplied knot. Returns ascending (tau_k, gap) pairs,
/// including tau = 0.
fn tail_gaps(
    s: impl Fn(f64) -> f64,
    r: impl Fn(f64) -> f64,
    knot_taus: &[f64],
    n: usize,
) -> Vec<(f64, f64)> {
    let top = 1.0 - TAIL_CUT;
    let mut cuts: Vec<f64> = (0..=n).map(|i| top * i as f64 / n as f64).collect();
    for &k in knot_taus {
        if k > 0.0 && k < top {
            cuts.push(k);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    // per-cell integrals of (s - r), then suffix sums
    let cells: Vec<f64> = cuts
        .windows(2)
        .map(|w| num::gauss5(|t| s(t) - r(t), w[0], w[1]))
        .collect();
    let mut out = vec![0.0; cuts.len()];
    for i in (0..cells.len()).rev() {
        out[i] = out[i + 1] + cells[i];
    }
    cuts.into_iter().zip(out).collect()
}

/// Checks the tail-dominance feasibility condition of a status allocation:
/// for every x, the integral of s above x (in quantile space) must not
/// exceed the same integral of the reference (F for quantile-mode statuses,
/// the identity type map for signaling-mode statuses).
pub fn check_weak_majorization(
    s: &StatusAllocation,
    dist: &TypeDistribution,
    tol: f64,
) -> Result<MajorizationReport> {
    if !s.is_monotone(dist, DEFAULT_GRID) {
        return Err(Error::InfeasibleAllocation { violation: f64::NAN });
    }
    let knot_taus: Vec<f64> = s.knots().iter().map(|&t| dist.cdf(t)).collect();
    let mode = s.mode;
    let gaps = tail_gaps(
        |tau| s.eval(dist, dist.quantile(tau)),
        |tau| match mode {
            StatusMode::Quantile => tau,
            StatusMode::Signaling => dist.quantile(tau),
        },
        &knot_taus,
        DEFAULT_GRID,
    );
    report_from_gaps(&gaps, dist, tol)
}

/// Same test with an arbitrary reference allocation in place of F: checks
/// that `s` is weakly majorized by `reference`. Used for refinement
/// monotonicity (a coarser menu's status against a finer one's).
pub fn check_weak_majorization_against(
    s: &StatusAllocation,
    reference: &StatusAllocation,
    dist: &TypeDistribution,
    tol: f64,
) -> Result<MajorizationReport> {
    if !s.is_monotone(dist, DEFAULT_GRID) {
        return Err(Error::InfeasibleAllocation { violation: f64::NAN });
    }
    let mut knot_taus: Vec<f64> = s.knots().iter().map(|&t| dist.cdf(t)).collect();
    knot_taus.extend(reference.knots().iter().map(|&t| dist.cdf(t)));
    let gaps = tail_gaps(
        |tau| s.eval(dist, dist.quantile(tau)),
        |tau| reference.eval(dist, dist.quantile(tau)),
        &knot_taus,
        DEFAULT_GRID,
    );
    report_from_gaps(&gaps, dist, tol)
}

fn report_from_gaps(
    gaps: &[(f64, f64)],
    dist: &TypeDistribution,
    tol: f64,
) -> Result<MajorizationReport> {
    let worst = gaps.iter().fold(0.0_f64, |m, &(_, g)| m.max(g));
    let binding_points = gaps
        .iter()
        .filter(|&&(_, g)| g.abs() <= BINDING_TOL)
        .map(|&(tau, _)| dist.quantile(tau))
        .collect();
    Ok(MajorizationReport {
        feasible: worst <= tol,
        worst_violation: worst,
        binding_points,
    })
}

/// Mean-preserving-spread feasibility: weak majorization plus equality of
/// means (E[s] = 1/2 for quantile-mode statuses, E[s] = E[theta] for
/// signaling mode). This is the feasible set when exclusion is impossible.
pub fn check_mps(s: &StatusAllocation, dist: &TypeDistribution, tol: f64) -> Result<bool> {
    let rep = check_weak_majorization(s, dist, tol)?;
    if !rep.feasible {
        return Ok(false);
    }
    let target = match s.mode {
        StatusMode::Quantile => 0.5,
        StatusMode::Signaling => dist.mean(),
    };
    Ok((s.expected_status(dist, DEFAULT_GRID) - target).abs() <= tol.max(1e-7))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::{PartitionMenu, Segment};
    use approx::assert_abs_diff_eq;

    fn uniform() -> TypeDistribution {
        TypeDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn full_separation_binds_everywhere() {
        let dist = uniform();
        let s = StatusAllocation::full_separation(&dist, 0.0);
        let rep = check_weak_majorization(&s, &dist, 1e-8).unwrap();
        assert!(rep.feasible);
        assert!(rep.worst_violation <= 1e-9);
        // equality everywhere: every grid point binds
        assert!(rep.binding_points.len() > DEFAULT_GRID / 2);
        assert!(check_mps(&s, &dist, 1e-7).unwrap());
    }

    #[test]
    fn two_level_menu_binds_at_breakpoints_only() {
        let dist = uniform();
        let theta_star = 0.4;
        let menu = PartitionMenu::new(vec![0.0, theta_star, 1.0]).unwrap();
        let s = StatusAllocation::induced(&menu, &dist, StatusMode::Quantile, 0.5).unwrap();
        let rep = check_weak_majorization(&s, &dist, 1e-8).unwrap();
        assert!(rep.feasible);
        for target in [0.0, theta_star, 1.0] {
            assert!(
                rep.binding_points.iter().any(|&x| (x - target).abs() < 1e-3),
                "expected binding near {target}: {:?}",
                &rep.binding_points
            );
        }
        // interior of a pool must have slack
        assert!(!rep.binding_points.iter().any(|&x| (x - 0.2).abs() < 0.05));
        assert!(check_mps(&s, &dist, 1e-7).unwrap());
    }

    #[test]
    fn inflated_status_is_infeasible() {
        let dist = uniform();
        let mut s = StatusAllocation::full_separation(&dist, 0.0);
        // s = min(F + 0.05, 1): sampled curve
        let pts: Vec<(f64, f64)> = (0..=400)
            .map(|i| {
                let t = i as f64 / 400.0;
                (t, (dist.cdf(t) + 0.05).min(1.0))
            })
            .collect();
        s.segments = vec![Segment::Curve { lo: 0.0, hi: 1.0, points: pts }];
        let rep = check_weak_majorization(&s, &dist, 1e-8).unwrap();
        assert!(!rep.feasible);
        // excess integrates to about 0.05 * (1 - F(x)) for small x
        assert_abs_diff_eq!(rep.worst_violation, 0.05, epsilon = 0.005);
    }

    #[test]
    fn exclusion_breaks_mps() {
        let dist = uniform();
        let s = StatusAllocation::full_separation(&dist, 0.3);
        assert!(check_weak_majorization(&s, &dist, 1e-8).unwrap().feasible);
        assert!(!check_mps(&s, &dist, 1e-7).unwrap());
    }

    #[test]
    fn mixtures_stay_feasible() {
        let dist = uniform();
        let m = StatusAllocation::mix(vec![
            (0.5, StatusAllocation::full_separation(&dist, 0.0)),
            (0.5, StatusAllocation::total_pooling(&dist, 0.0)),
        ])
        .unwrap();
        let rep = check_weak_majorization(&m, &dist, 1e-8).unwrap();
        assert!(rep.feasible);
        assert!(check_mps(&m, &dist, 1e-7).unwrap());
    }

    #[test]
    fn refinement_majorizes_coarser_menu() {
        let dist = uniform();
        let coarse = PartitionMenu::new(vec![0.1, 0.6, 1.0]).unwrap();
        let fine = PartitionMenu::new(vec![0.1, 0.35, 0.6, 1.0]).unwrap();
        let s_a = StatusAllocation::induced(&coarse, &dist, StatusMode::Quantile, 0.5).unwrap();
        let s_b = StatusAllocation::induced(&fine, &dist, StatusMode::Quantile, 0.5).unwrap();
        let rep = check_weak_majorization_against(&s_a, &s_b, &dist, 1e-8).unwrap();
        assert!(rep.feasible, "coarser status must be majorized by finer: {rep:?}");
        // and not vice versa: the finer one has strictly larger tails
        let back = check_weak_majorization_against(&s_b, &s_a, &dist, 1e-8).unwrap();
        assert!(!back.feasible);
    }

    #[test]
    fn signaling_mode_compares_against_identity() {
        let dist = uniform();
        let menu = PartitionMenu::new(vec![0.0, 0.5, 1.0]).unwrap();
        let s = StatusAllocation::induced(&menu, &dist, StatusMode::Signaling, 0.5).unwrap();
        let rep = check_weak_majorization(&s, &dist, 1e-8).unwrap();
        assert!(rep.feasible);
        assert!(check_mps(&s, &dist, 1e-6).unwrap());
    }

    #[test]
    fn low_gamma_shrinks_expected_status() {
        let dist = uniform();
        let menu = PartitionMenu::new(vec![0.0, 0.5, 1.0]).unwrap();
        let half = StatusAllocation::induced(&menu, &dist, StatusMode::Quantile, 0.5).unwrap();
        let low = StatusAllocation::induced(&menu, &dist, StatusMode::Quantile, 0.25).unwrap();
        assert!(
            low.expected_status(&dist, 1024) < half.expected_status(&dist, 1024) - 1e-4
        );
    }
}
