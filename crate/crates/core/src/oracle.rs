//! Independent discrete verifier: grid economies, direct status
//! computation from assignments, incentive checks, exhaustive / dynamic
//! programming search over step-allocation menus, and an all-pay
//! implementation check.

use crate::dist::TypeDistribution;
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::value::ValueFunction;

/// A finite-type economy with masses summing to one.
#[derive(Debug, Clone)]
pub struct DiscreteEconomy {
    pub types: Vec<f64>,
    pub masses: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
}

impl DiscreteEconomy {
    pub fn new(types: Vec<f64>, masses: Vec<f64>, v: Vec<f64>, dv: Vec<f64>) -> Result<Self> {
        if types.len() < 2 {
            return Err(Error::InvalidParameter("economy needs at least 2 types".into()));
        }
        if types.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("types must be strictly ascending".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 || masses.iter().any(|&m| m < 0.0) {
            return Err(Error::WeightSum { sum: total });
        }
        if v.len() != types.len() || dv.len() != types.len() || masses.len() != types.len() {
            return Err(Error::InvalidParameter("field length mismatch".into()));
        }
        Ok(Self { types, masses, v, dv })
    }

    /// Discretizes a continuous economy at quantile midpoints with equal
    /// masses 1/K.
    pub fn discretize(dist: &TypeDistribution, v: &ValueFunction, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("K must be at least 2".into()));
        }
        let types: Vec<f64> = (0..k)
            .map(|i| dist.quantile((i as f64 + 0.5) / k as f64))
            .collect();
        let masses = vec![1.0 / k as f64; k];
        let vs = types.iter().map(|&t| v.v(t)).collect();
        let dvs = types.iter().map(|&t| v.dv(t)).collect();
        Self::new(types, masses, vs, dvs)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.types.iter().zip(&self.masses).map(|(t, m)| t * m).sum()
    }

    /// Writes rows `type,mass,v,dv`.
    pub fn to_csv(&self, w: impl std::io::Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(w);
        use std::io::Write as _;
        writeln!(w, "type,mass,v,dv")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.types[i], self.masses[i], self.v[i], self.dv[i]
            )?;
        }
        Ok(())
    }

    pub fn from_csv(r: impl std::io::Read) -> Result<Self> {
        let mut text = String::new();
        let mut r = std::io::BufReader::new(r);
        use std::io::Read as _;
        r.read_to_string(&mut text)
            .map_err(|e| Error::Parse(format!("economy csv: {e}")))?;
        let mut cols: [Vec<f64>; 4] = Default::default();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with("type")) {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("economy csv line {}: need 4 fields", ln + 1)));
            }
            for (c, p) in cols.iter_mut().zip(&parts) {
                c.push(p.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("economy csv line {}: bad number '{p}'", ln + 1))
                })?);
            }
        }
        let [types, masses, v, dv] = cols;
        Self::new(types, masses, v, dv)
    }
}

/// Status of each type given per-type level labels (None = excluded):
/// the mass with strictly lower levels (excluded mass counts as strictly
/// below every participant) plus gamma times the mass sharing the level.
pub fn status_from_assignment(
    econ: &DiscreteEconomy,
    levels: &[Option<u32>],
    gamma: f64,
) -> Vec<f64> {
    assert_eq!(levels.len(), econ.len());
    let excluded_mass: f64 = levels
        .iter()
        .zip(&econ.masses)
        .filter(|(l, _)| l.is_none())
        .map(|(_, m)| m)
        .sum();
    // mass per level
    let mut level_mass = std::collections::BTreeMap::<u32, f64>::new();
    for (l, m) in levels.iter().zip(&econ.masses) {
        if let Some(l) = l {
            *level_mass.entry(*l).or_insert(0.0) += m;
        }
    }
    // cumulative mass strictly below each level
    let mut below = std::collections::BTreeMap::<u32, f64>::new();
    let mut acc = excluded_mass;
    for (&l, &m) in &level_mass {
        below.insert(l, acc);
        acc += m;
    }
    levels
        .iter()
        .map(|l| match l {
            None => 0.0,
            Some(l) => below[l] + gamma * level_mass[l],
        })
        .collect()
}

/// A discrete direct mechanism.
#[derive(Debug, Clone)]
pub struct DiscreteMechanism {
    pub status: Vec<f64>,
    pub payment: Vec<f64>,
    pub participates: Vec<bool>,
}

impl DiscreteMechanism {
    /// Samples a continuous mechanism at the economy's type grid. Statuses
    /// and payments of excluded types are zero.
    pub fn from_mechanism(
        mech: &Mechanism,
        dist: &TypeDistribution,
        v: &ValueFunction,
        econ: &DiscreteEconomy,
    ) -> Self {
        let cutoff = mech.alloc.exclusion_cutoff;
        let mut status = Vec::with_capacity(econ.len());
        let mut payment = Vec::with_capacity(econ.len());
        let mut participates = Vec::with_capacity(econ.len());
        for &t in &econ.types {
            if t < cutoff {
                status.push(0.0);
                payment.push(0.0);
                participates.push(false);
            } else {
                status.push(mech.alloc.eval(dist, t));
                payment.push(mech.payment(dist, v, t));
                participates.push(true);
            }
        }
        Self { status, payment, participates }
    }

    pub fn utility(&self, econ: &DiscreteEconomy, i: usize) -> f64 {
        if self.participates[i] {
            econ.types[i] * self.status[i] - self.payment[i] + econ.v[i]
        } else {
            0.0
        }
    }

    pub fn revenue(&self, econ: &DiscreteEconomy) -> f64 {
        (0..econ.len())
            .filter(|&i| self.participates[i])
            .map(|i| econ.masses[i] * self.payment[i])
            .sum()
    }

    pub fn consumer_surplus(&self, econ: &DiscreteEconomy) -> f64 {
        (0..econ.len())
            .map(|i| econ.masses[i] * self.utility(econ, i))
            .sum()
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct IcReport {
    pub ok: bool,
    /// Largest gain from any misreport or opt-out (0 when IC and IR hold).
    pub worst_deviation: f64,
    /// Index of the type with the worst deviation.
    pub worst_type: usize,
}

/// Checks incentive compatibility and individual rationality: no type
/// gains by taking another type's bundle or by opting out.
pub fn ic_check(mech: &DiscreteMechanism, econ: &DiscreteEconomy, tol: f64) -> IcReport {
    let k = econ.len();
    let mut worst = 0.0_f64;
    let mut worst_type = 0;
    for i in 0..k {
        let truth = mech.utility(econ, i);
        // opting out yields 0
        let mut best_dev = -truth;
        for j in 0..k {
            if !mech.participates[j] {
                continue;
            }
            let dev = econ.types[i] * mech.status[j] - mech.payment[j] + econ.v[i] - truth;
            best_dev = best_dev.max(dev);
        }
        if best_dev > worst {
            worst = best_dev;
            worst_type = i;
        }
    }
    IcReport { ok: worst <= tol, worst_deviation: worst, worst_type }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Revenue,
    /// Consumer surplus with a free lowest level (the cutoff type pays 0).
    ConsumerSurplus,
    /// lambda * revenue + consumer surplus, with envelope pricing pinned by
    /// a zero cutoff utility.
    Social(f64),
}

/// Builds the discrete mechanism induced by a cutoff and contiguous level
/// blocks: statuses from the assignment, payments from the adjacent
/// incentive constraints binding downward.
fn menu_mechanism(
    econ: &DiscreteEconomy,
    cutoff: usize,
    breaks: &[usize],
    free_bottom: bool,
    gamma: f64,
) -> DiscreteMechanism {
    let k = econ.len();
    let mut levels: Vec<Option<u32>> = vec![None; k];
    let mut level = 0u32;
    let mut next_break = 0usize;
    for i in cutoff..k {
        while next_break < breaks.len() && breaks[next_break] == i {
            level += 1;
            next_break += 1;
        }
        levels[i] = Some(level);
    }
    let status = status_from_assignment(econ, &levels, gamma);
    let mut payment = vec![0.0; k];
    let mut u = vec![0.0; k];
    if cutoff < k {
        u[cutoff] = if free_bottom {
            econ.types[cutoff] * status[cutoff] + econ.v[cutoff]
        } else {
            0.0
        };
        payment[cutoff] = econ.types[cutoff] * status[cutoff] + econ.v[cutoff] - u[cutoff];
        for i in cutoff + 1..k {
            u[i] = u[i - 1]
                + status[i - 1] * (econ.types[i] - econ.types[i - 1])
                + (econ.v[i] - econ.v[i - 1]);
            payment[i] = econ.types[i] * status[i] + econ.v[i] - u[i];
        }
    }
    let participates = (0..k).map(|i| i >= cutoff).collect();
    DiscreteMechanism { status, payment, participates }
}

fn objective_value(mech: &DiscreteMechanism, econ: &DiscreteEconomy, obj: Objective) -> f64 {
    match obj {
        Objective::Revenue => mech.revenue(econ),
        Objective::ConsumerSurplus => mech.consumer_surplus(econ),
        Objective::Social(l) => l * mech.revenue(econ) + mech.consumer_surplus(econ),
    }
}

#[derive(Debug, Clone)]
pub struct MenuSearchResult {
    pub mech: DiscreteMechanism,
    pub value: f64,
    pub cutoff: usize,
    /// Indices where a new level starts (excluding the cutoff itself).
    pub breaks: Vec<usize>,
}

/// Finds the best menu of at most `max_levels` contiguous status levels
/// above a cutoff, by exact dynamic programming over breakpoints. The
/// objectives are additive across levels given the cutoff, so the program
/// returns the true optimum over all step allocations. Ties prefer fewer
/// levels, then a lower cutoff.
pub fn best_menu_search(
    econ: &DiscreteEconomy,
    obj: Objective,
    max_levels: usize,
    allow_exclusion: bool,
) -> Result<MenuSearchResult> {
    let k = econ.len();
    let m = max_levels.max(1).min(k);
    if k > 5000 {
        return Err(Error::SizeGuard(format!("K = {k} exceeds the search limit")));
    }
    let free_bottom = matches!(obj, Objective::ConsumerSurplus);
    let gamma = 0.5;

    // prefix sums
    let mut cumw = vec![0.0; k + 1];
    for i in 0..k {
        cumw[i + 1] = cumw[i] + econ.masses[i];
    }
    let tailw = |i: usize| 1.0 - cumw[i];
    // revenue coefficients: jhat_i = w_i t_i - TailW_{i+1} (t_{i+1} - t_i)
    // surplus coefficients: hhat_i = TailW_{i+1} (t_{i+1} - t_i)
    let mut jhat = vec![0.0; k];
    let mut hhat = vec![0.0; k];
    for i in 0..k {
        let step = if i + 1 < k {
            tailw(i + 1) * (econ.types[i + 1] - econ.types[i])
        } else {
            0.0
        };
        jhat[i] = econ.masses[i] * econ.types[i] - step;
        hhat[i] = step;
    }
    let coeff: Vec<f64> = match obj {
        Objective::Revenue => jhat,
        Objective::ConsumerSurplus => hhat,
        Objective::Social(l) => jhat
            .iter()
            .zip(&hhat)
            .map(|(a, b)| l * a + b)
            .collect(),
    };
    let mut cumc = vec![0.0; k + 1];
    for i in 0..k {
        cumc[i + 1] = cumc[i] + coeff[i];
    }
    // status of block [a, b): mass below a (incl. excluded) + gamma * block mass
    let block_status = |a: usize, b: usize| cumw[a] + gamma * (cumw[b] - cumw[a]);
    let block_val = |a: usize, b: usize| block_status(a, b) * (cumc[b] - cumc[a]);

    // The block values do not depend on the cutoff (excluded mass counts
    // as strictly below regardless of where the cutoff sits), so one
    // suffix dynamic program serves every cutoff: dp[a][l] is the best
    // block value covering [a, k) with at most l blocks.
    let lmax = m;
    let mut dp = vec![vec![f64::NEG_INFINITY; lmax + 1]; k + 1];
    let mut choice = vec![vec![0usize; lmax + 1]; k + 1];
    for l in 0..=lmax {
        dp[k][l] = 0.0;
    }
    for a in (0..k).rev() {
        for l in 1..=lmax {
            let mut bv = f64::NEG_INFINITY;
            let mut bc = a + 1;
            for b in a + 1..=k {
                if dp[b][l - 1] == f64::NEG_INFINITY {
                    continue;
                }
                let val = block_val(a, b) + dp[b][l - 1];
                if val > bv + 1e-15 {
                    bv = val;
                    bc = b;
                }
            }
            // allowing fewer blocks: carry the (l-1) solution if better
            if dp[a][l - 1] > bv {
                dp[a][l] = dp[a][l - 1];
                choice[a][l] = choice[a][l - 1];
            } else {
                dp[a][l] = bv;
                choice[a][l] = bc;
            }
        }
    }

    // Reconstruct the best block partition of [start, k), optionally
    // forcing the first block end (used for the free-bottom bonus).
    let reconstruct = |start: usize, forced_first: Option<usize>| -> Vec<usize> {
        let mut breaks = Vec::new();
        let (mut a, mut l) = (start, lmax);
        if let Some(b1) = forced_first {
            if b1 < k {
                breaks.push(b1);
            }
            a = b1;
            l = (lmax - 1).max(1);
        }
        while a < k {
            while l > 1 && dp[a][l - 1] >= dp[a][l] {
                l -= 1;
            }
            let b = choice[a][l].max(a + 1);
            if b < k {
                breaks.push(b);
            }
            a = b;
            l = (l - 1).max(1);
        }
        breaks
    };

    let cutoffs: Vec<usize> = if allow_exclusion { (0..k).collect() } else { vec![0] };
    let mut best: Option<MenuSearchResult> = None;
    for &c in &cutoffs {
        // With the free-bottom normalization the bottom level is given
        // away at utility theta_c * s_c + v_c, which adds a bonus of
        // TailW_c * theta_c * s_first depending on the first block only;
        // rescan the first break against the shared dp tail.
        let breaks = if free_bottom {
            let mut bv = f64::NEG_INFINITY;
            let mut bb = c + 1;
            for b in c + 1..=k {
                let tail = if b == k { 0.0 } else { dp[b][lmax - 1] };
                if tail == f64::NEG_INFINITY {
                    continue;
                }
                let val = block_val(c, b)
                    + tailw(c) * econ.types[c] * block_status(c, b)
                    + tail;
                if val > bv + 1e-15 {
                    bv = val;
                    bb = b;
                }
            }
            reconstruct(c, Some(bb))
        } else {
            reconstruct(c, None)
        };
        let mech = menu_mechanism(econ, c, &breaks, free_bottom, gamma);
        // the DP value and the reconstructed-menu value agree up to
        // rounding; use the directly evaluated one
        let value = objective_value(&mech, econ, obj);
        let candidate = MenuSearchResult { mech, value, cutoff: c, breaks };
        let replace = match &best {
            None => true,
            Some(b) => {
                candidate.value > b.value + 1e-12
                    || ((candidate.value - b.value).abs() <= 1e-12
                        && candidate.breaks.len() < b.breaks.len())
            }
        };
        if replace {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::SizeGuard("empty search space".into()))
}

/// Exhaustive enumeration of all cutoffs and block partitions with at most
/// `max_levels` levels. Ground truth for small economies; guarded by a
/// combination count.
pub fn best_menu_exhaustive(
    econ: &DiscreteEconomy,
    obj: Objective,
    max_levels: usize,
    allow_exclusion: bool,
) -> Result<MenuSearchResult> {
    let k = econ.len();
    let m = max_levels.max(1).min(k);
    // combinations: per cutoff c, sum_{l<=m} C(k-c-1, l-1)
    let mut total: f64 = 0.0;
    let choose = |n: usize, r: usize| -> f64 {
        if r > n {
            return 0.0;
        }
        let mut acc = 1.0;
        for i in 0..r {
            acc *= (n - i) as f64 / (i + 1) as f64;
        }
        acc
    };
    let cutoffs: Vec<usize> = if allow_exclusion { (0..k).collect() } else { vec![0] };
    for &c in &cutoffs {
        for l in 1..=m.min(k - c) {
            total += choose(k - c - 1, l - 1);
        }
    }
    if total > 2e6 {
        return Err(Error::SizeGuard(format!(
            "{total:.0} menus exceed the exhaustive limit"
        )));
    }
    let free_bottom = matches!(obj, Objective::ConsumerSurplus);
    let mut best: Option<MenuSearchResult> = None;
    for &c in &cutoffs {
        let n = k - c;
        if n == 0 {
            continue;
        }
        let interior: Vec<usize> = (c + 1..k).collect();
        for l in 1..=m.min(n) {
            // choose l - 1 interior breakpoints in ascending order
            let r = l - 1;
            if r > interior.len() {
                continue;
            }
            let mut combo: Vec<usize> = (0..r).collect();
            loop {
                let breaks: Vec<usize> = combo.iter().map(|&i| interior[i]).collect();
                let mech = menu_mechanism(econ, c, &breaks, free_bottom, 0.5);
                let value = objective_value(&mech, econ, obj);
                let replace = match &best {
                    None => true,
                    Some(b) => {
                        value > b.value + 1e-12
                            || ((value - b.value).abs() <= 1e-12
                                && breaks.len() < b.breaks.len())
                    }
                };
                if replace {
                    best = Some(MenuSearchResult { mech, value, cutoff: c, breaks });
                }
                // advance to the next combination, rightmost index first
                let mut i = r;
                while i > 0 && combo[i - 1] == interior.len() - (r - i) - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                combo[i - 1] += 1;
                for j in i..r {
                    combo[j] = combo[j - 1] + 1;
                }
            }
        }
    }
    best.ok_or_else(|| Error::SizeGuard("empty search space".into()))
}

#[derive(Debug, Clone)]
pub struct AllPayResult {
    pub statuses: Vec<f64>,
    pub revenue: f64,
    /// Largest absolute gap between the ranked-bid statuses and the
    /// mechanism's own statuses.
    pub worst_status_gap: f64,
}

/// All-pay implementation: every participant bids their payment; equal
/// bids pool, higher bids rank higher, and the resulting statuses must
/// reproduce the mechanism's.
pub fn all_pay_simulation(
    mech: &DiscreteMechanism,
    econ: &DiscreteEconomy,
    gamma: f64,
) -> AllPayResult {
    let k = econ.len();
    // rank bids: map each participant's bid to a level index by sorted order
    let mut bids: Vec<(usize, f64)> = (0..k)
        .filter(|&i| mech.participates[i])
        .map(|i| (i, mech.payment[i]))
        .collect();
    bids.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut levels: Vec<Option<u32>> = vec![None; k];
    let mut level = 0u32;
    let mut prev_bid = f64::NEG_INFINITY;
    for &(i, b) in &bids {
        if (b - prev_bid).abs() > 1e-12 && prev_bid > f64::NEG_INFINITY {
            level += 1;
        }
        levels[i] = Some(level);
        prev_bid = b;
    }
    let statuses = status_from_assignment(econ, &levels, gamma);
    let worst_gap = statuses
        .iter()
        .zip(&mech.status)
        .zip(&mech.participates)
        .filter(|(_, p)| **p)
        .map(|((a, b), _)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    AllPayResult {
        statuses,
        revenue: mech.revenue(econ),
        worst_status_gap: worst_gap,
    }
}
