//! Integrated virtual values, their lower convex hulls in quantile space,
//! and the resulting pooled ("ironed") allocations for non-regular
//! distributions.

use crate::alloc::{Segment, StatusAllocation, StatusMode};
use crate::dist::{TypeDistribution, TAIL_CUT};
use crate::num;

/// Default quantile grid size for hull computation.
pub const HULL_GRID: usize = 4096;

/// Relative slack below which a hull-vs-samples gap is treated as contact
/// rather than pooling.
const POOL_TOL: f64 = 1e-9;

/// Revenue curve R(tau) = (1 - tau) * quantile(tau).
pub fn revenue_curve(dist: &TypeDistribution, tau: f64) -> f64 {
    if tau >= 1.0 {
        return 0.0;
    }
    (1.0 - tau) * dist.quantile(tau)
}

/// Samples the integrated virtual value Jtilde(tau) = int_0^tau J(Q(t)) dt
/// on an even quantile grid of `grid_size` cells (so grid_size + 1 points
/// from 0 to 1). Jtilde(0) = 0 by construction.
pub fn integrated_virtual(dist: &TypeDistribution, grid_size: usize) -> (Vec<f64>, Vec<f64>) {
    let n = grid_size.max(16);
    let top = 1.0 - TAIL_CUT;
    let mut taus: Vec<f64> = (0..=n).map(|i| top * i as f64 / n as f64).collect();
    // geometric refinement toward both endpoints, where J(Q(t)) may be
    // singular (its integral still converges)
    let mut g = 0.5 / n as f64;
    while g > 2.0 * TAIL_CUT {
        taus.push(g);
        taus.push(1.0 - g);
        g *= 0.5;
    }
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    taus.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let j = |t: f64| {
        let theta = dist.quantile(t);
        dist.virtual_value(theta).unwrap_or_else(|_| {
            // density gap inside the support: J behaves as -inf there, but
            // the revenue-curve identity stays exact, so fall back to it
            // via a symmetric difference of R
            let h = 1e-7;
            (revenue_curve(dist, t - h) - revenue_curve(dist, t + h)) / (2.0 * h)
        })
    };
    let jtilde = num::cumulative(j, &taus, 2);
    (taus, jtilde)
}

#[derive(Debug, Clone)]
pub struct IroningResult {
    /// Quantile abscissae.
    pub grid: Vec<f64>,
    /// Sampled integrated virtual value.
    pub jtilde: Vec<f64>,
    /// Lower convex hull of (grid, jtilde), sampled on the same grid.
    pub hull: Vec<f64>,
    /// Indices into `grid` of the hull vertices.
    pub hull_vertices: Vec<usize>,
    /// Maximal quantile intervals where the hull is affine and strictly
    /// below jtilde (pooled regions).
    pub pooled_intervals: Vec<(f64, f64)>,
}

impl IroningResult {
    /// Derivative of the hull (the ironed virtual value), constant on each
    /// hull edge and nondecreasing in tau.
    pub fn ironed_j(&self, tau: f64) -> f64 {
        let vs = &self.hull_vertices;
        for w in vs.windows(2) {
            let (i, k) = (w[0], w[1]);
            if tau <= self.grid[k] || k == *vs.last().unwrap() {
                return (self.jtilde[k] - self.jtilde[i]) / (self.grid[k] - self.grid[i]);
            }
        }
        f64::NAN
    }
}

/// Lower convex hull of samples on increasing abscissae via a monotone
/// chain scan; reports the hull values, vertex indices, and the maximal
/// affine stretches lying strictly below the samples.
pub fn convex_minorant(grid: &[f64], samples: &[f64]) -> IroningResult {
    assert_eq!(grid.len(), samples.len());
    assert!(grid.len() >= 2);
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..grid.len() {
        while stack.len() >= 2 {
            let a = stack[stack.len() - 2];
            let b = stack[stack.len() - 1];
            // drop b when it lies on or above the chord a -> i
            let cross = (grid[b] - grid[a]) * (samples[i] - samples[a])
                - (grid[i] - grid[a]) * (samples[b] - samples[a]);
            if cross <= 0.0 {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(i);
    }
    let mut hull = vec![0.0; grid.len()];
    for w in stack.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (samples[b] - samples[a]) / (grid[b] - grid[a]);
        for i in a..=b {
            hull[i] = samples[a] + slope * (grid[i] - grid[a]);
        }
    }
    if stack.len() == 1 {
        hull[stack[0]] = samples[stack[0]];
    }
    let range = samples
        .iter()
        .fold(0.0_f64, |m, &x| m.max(x.abs()))
        .max(1.0);
    let tol = POOL_TOL * range;
    let mut pooled = Vec::new();
    for w in stack.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a + 1 && (a + 1..b).any(|i| samples[i] - hull[i] > tol) {
            pooled.push((grid[a], grid[b]));
        }
    }
    // merge adjacent pooled stretches sharing an endpoint
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in pooled {
        match merged.last_mut() {
            Some(last) if (last.1 - a).abs() < 1e-12 => last.1 = b,
            _ => merged.push((a, b)),
        }
    }
    IroningResult {
        grid: grid.to_vec(),
        jtilde: samples.to_vec(),
        hull,
        hull_vertices: stack,
        pooled_intervals: merged,
    }
}

/// Irons the integrated virtual value over the participating quantile range
/// [F(theta0), 1].
pub fn iron(dist: &TypeDistribution, theta0: f64, grid_size: usize) -> IroningResult {
    let (taus, jt) = integrated_virtual(dist, grid_size);
    let tau0 = dist.cdf(theta0);
    let start = taus
        .partition_point(|&t| t < tau0 - 1e-12)
        .min(taus.len() - 2);
    convex_minorant(&taus[start..], &jt[start..])
}

/// The revenue-optimal allocation for a fixed exclusion cutoff: separation
/// where the hull touches Jtilde, pools over the affine stretches, zero
/// status below the cutoff.
pub fn ironed_allocation(dist: &TypeDistribution, theta0: f64) -> StatusAllocation {
    let res = iron(dist, theta0, HULL_GRID);
    let hi = dist.upper();
    let mut segments = Vec::new();
    let mut cur = theta0;
    for &(a, b) in &res.pooled_intervals {
        let (ta, tb) = (dist.quantile(a), dist.quantile(b));
        if ta > cur + 1e-12 {
            segments.push(Segment::Separation { lo: cur, hi: ta });
        }
        segments.push(Segment::Pool { lo: ta, hi: tb, level: 0.5 * (a + b) });
        cur = tb;
    }
    if cur < hi {
        segments.push(Segment::Separation { lo: cur, hi });
    }
    StatusAllocation {
        exclusion_cutoff: theta0,
        segments,
        mixture: Vec::new(),
        gamma: 0.5,
        phi: None,
        mode: StatusMode::Quantile,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::check_weak_majorization;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_integrated_virtual_closed_form() {
        let dist = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let (taus, jt) = integrated_virtual(&dist, 1024);
        // Jtilde(tau) = tau^2 - tau; min -1/4 at tau = 1/2; 0 at both ends
        assert_abs_diff_eq!(jt[0], 0.0);
        assert_abs_diff_eq!(*jt.last().unwrap(), 0.0, epsilon = 1e-7);
        for (t, v) in taus.iter().zip(&jt) {
            assert_abs_diff_eq!(*v, t * t - t, epsilon = 1e-9);
        }
    }

    #[test]
    fn integrated_virtual_matches_revenue_curve_identity() {
        // Jtilde(tau) = Q(0) - R(tau) for any distribution
        for dist in [
            TypeDistribution::uniform(0.0, 1.0).unwrap(),
            TypeDistribution::power(2.0).unwrap(),
            TypeDistribution::pareto(2.0, 1.0).unwrap(),
            TypeDistribution::exponential(1.0).unwrap(),
        ] {
            let (taus, jt) = integrated_virtual(&dist, 2048);
            let r0 = dist.quantile(0.0);
            for (t, v) in taus.iter().zip(&jt).step_by(37) {
                assert_abs_diff_eq!(*v, r0 - revenue_curve(&dist, *t), epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn regular_distributions_need_no_pooling() {
        for dist in [
            TypeDistribution::uniform(0.0, 1.0).unwrap(),
            TypeDistribution::power(2.0).unwrap(),
            TypeDistribution::exponential(1.0).unwrap(),
            TypeDistribution::pareto(2.0, 1.0).unwrap(),
        ] {
            let res = iron(&dist, dist.support_lo(), 2048);
            assert!(
                res.pooled_intervals.is_empty(),
                "{dist:?}: {:?}",
                res.pooled_intervals
            );
        }
    }

    #[test]
    fn low_exponent_power_pools_at_the_bottom() {
        // power(1/2): Jtilde(tau) = tau^(3/2)(tau... ) has a concave start;
        // the hull chord from 0 is tangent exactly at tau = 1/2
        let dist = TypeDistribution::power(0.5).unwrap();
        let res = iron(&dist, 0.0, 4096);
        assert_eq!(res.pooled_intervals.len(), 1);
        let (a, b) = res.pooled_intervals[0];
        assert_abs_diff_eq!(a, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(b, 0.5, epsilon = 1e-3);
    }

    #[test]
    fn tent_function_pools_across_the_peak() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let samples: Vec<f64> = grid.iter().map(|&t| -(t - 0.5).abs() + 0.5).collect();
        let res = convex_minorant(&grid, &samples);
        assert_eq!(res.pooled_intervals.len(), 1);
        let (a, b) = res.pooled_intervals[0];
        assert_abs_diff_eq!(a, 0.0);
        assert_abs_diff_eq!(b, 1.0);
        // hull is the chord of the endpoints
        for (t, h) in res.grid.iter().zip(&res.hull) {
            assert_abs_diff_eq!(*h, t * 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hull_is_idempotent() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let samples: Vec<f64> = grid.iter().map(|&t| (6.0 * t).sin() * 0.2 + t * t).collect();
        let once = convex_minorant(&grid, &samples);
        let twice = convex_minorant(&grid, &once.hull);
        for (a, b) in once.hull.iter().zip(&twice.hull) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        assert!(twice.pooled_intervals.is_empty());
    }

    #[test]
    fn ironed_j_is_nondecreasing() {
        let samples = crate::dist::tests::bimodal_samples();
        let dist = TypeDistribution::empirical(&samples, None).unwrap();
        let res = iron(&dist, 0.0, 2048);
        assert!(
            !res.pooled_intervals.is_empty(),
            "bimodal mixture should need ironing"
        );
        let vals: Vec<f64> = (1..100)
            .map(|i| res.ironed_j(i as f64 / 100.0))
            .collect();
        assert!(num::is_nondecreasing(&vals, 1e-9));
    }

    #[test]
    fn ironed_allocation_is_feasible() {
        let dist = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let s = ironed_allocation(&dist, 0.5);
        assert_abs_diff_eq!(s.eval(&dist, 0.75), 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(s.eval(&dist, 0.25), 0.0);
        assert!(check_weak_majorization(&s, &dist, 1e-8).unwrap().feasible);

        let samples = crate::dist::tests::bimodal_samples();
        let bim = TypeDistribution::empirical(&samples, None).unwrap();
        let s2 = ironed_allocation(&bim, 0.0);
        assert!(s2.is_monotone(&bim, 1024));
        assert!(check_weak_majorization(&s2, &bim, 1e-6).unwrap().feasible);
    }

    #[test]
    fn revenue_curve_points() {
        let dist = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(revenue_curve(&dist, 0.5), 0.25);
        assert_abs_diff_eq!(revenue_curve(&dist, 1.0), 0.0);
        // area identity at tau0 = 1/2: tau0 R(tau0) + int_{tau0}^1 R = 5/24
        let tail = num::integrate(|t| revenue_curve(&dist, t), 0.5, 1.0, 256);
        assert_abs_diff_eq!(0.5 * 0.25 + tail, 5.0 / 24.0, epsilon = 1e-9);
    }

    #[test]
    fn revenue_curve_slope_is_minus_virtual_value() {
        let dist = TypeDistribution::power(2.0).unwrap();
        let h = 1e-6;
        for i in 1..20 {
            let tau = i as f64 / 20.0;
            let slope = (revenue_curve(&dist, tau + h) - revenue_curve(&dist, tau - h)) / (2.0 * h);
            let j = dist.virtual_value(dist.quantile(tau)).unwrap();
            assert_abs_diff_eq!(-slope, j, epsilon = 1e-5);
        }
    }
}
