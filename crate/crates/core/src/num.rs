//! Shared numerical routines: quadrature, scalar optimization, root finding,
//! and grid monotonicity checks.

/// 5-point Gauss-Legendre nodes/weights on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.538469310105683,
    0.0,
    0.538469310105683,
    0.906179845938664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236926885056189,
    0.478628670499366,
    0.568888888888889,
    0.478628670499366,
    0.236926885056189,
];

/// Gauss-Legendre 5-point rule on a single interval.
pub fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..5 {
        acc += GL5_WEIGHTS[i] * f(mid + half * GL5_NODES[i]);
    }
    acc * half
}

/// Composite Gauss-Legendrte quadrature with `panels` equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let lo = a + i as f64 * h;
        acc += gauss5(&f, lo, lo + h);
    }
    acc
}

/// Composite quadrature over [a, b] that places panel boundaries at every
/// interior knot, so the integrand only needs to be smooth between knots.
/// All evaluation points are interior to their panel.
pub fn integrate_knotted(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    knots: &[f64],
    panels: usize,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = vec![a, b];
    for &k in knots {
        if k > a && k < b {
            cuts.push(k);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let total = b - a;
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // proportional panel budget, at least one panel per piece
        let n = ((hi - lo) / total * panels as f64).ceil().max(1.0) as usize;
        acc += integrate(&f, lo, hi, n);
    }
    acc
}

/// Cumulative integral of `f` evaluated at each point of the ascending grid
/// `xs`; result[i] = integral from xs[0] to xs[i].
pub fn cumulative(f: impl Fn(f64) -> f64, xs: &[f64], panels_per_cell: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in xs.windows(2) {
        acc += integrate(&f, w[0], w[1], panels_per_cell);
        out.push(acc);
    }
    out
}

/// Golden-section maximization on [lo, hi]; assumes unimodality on the
/// bracket. Returns (argmax, max).
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Coarse scan over `n` points followed by golden-section refinement around
/// the best scan cell. Endpoints are included in the scan.
pub fn scan_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, tol: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let n = n.max(3);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    let vals: Vec<f64> = (0..n).map(|i| f(lo + i as f64 * h)).collect();
    for (i, &v) in vals.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = if best_i == 0 { lo } else { lo + (best_i - 1) as f64 * h };
    let b = if best_i == n - 1 { hi } else { lo + (best_i + 1) as f64 * h };
    let (x, v) = golden_max(&f, a, b, tol);
    // keep a scanned endpoint if golden refinement did not beat it
    if best_v > v {
        (lo + best_i as f64 * h, best_v)
    } else {
        (x, v)
    }
}

/// Bisection for a root of `f` on a bracket with a sign change.
/// Returns the midpoint of the final bracket.
pub fn bisect_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    debug_assert!(fa * fb <= 0.0, "bisect_root needs a sign change");
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Checks whether a sampled sequence is nondecreasing up to `tol` per step.
/// Returns the worst (most negative) increment observed, 0.0 if none.
pub fn worst_decrease(vals: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for w in vals.windows(2) {
        let inc = w[1] - w[0];
        if inc < worst {
            worst = inc;
        }
    }
    worst
}

/// True when the sequence never decreases by more than `tol`.
pub fn is_nondecreasing(vals: &[f64], tol: f64) -> bool {
    worst_decrease(vals) >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        // GL5 is exact for degree <= 9
        let f = |x: f64| x.powi(9) - 3.0 * x.powi(4) + 2.0;
        let exact = |x: f64| x.powi(10) / 10.0 - 3.0 * x.powi(5) / 5.0 + 2.0 * x;
        assert_abs_diff_eq!(gauss5(f, -1.0, 2.0), exact(2.0) - exact(-1.0), epsilon = 1e-12);
    }

    #[test]
    fn knotted_handles_step_discontinuity() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 2.0 };
        let v = integrate_knotted(f, 0.0, 1.0, &[0.3], 16);
        assert_abs_diff_eq!(v, 0.3 + 1.4, epsilon = 1e-12);
    }

    #[test]
    fn golden_finds_quadratic_peak() {
        let (x, v) = scan_then_golden(|x| -(x - 0.37).powi(2), 0.0, 1.0, 64, 1e-10);
        assert_abs_diff_eq!(x, 0.37, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-10);
    }

    #[test]
    fn monotonicity_helpers() {
        assert!(is_nondecreasing(&[0.0, 0.5, 0.5, 1.0], 0.0));
        assert_abs_diff_eq!(worst_decrease(&[0.0, 0.4, 0.3]), -0.1, epsilon = 1e-15);
    }
}
