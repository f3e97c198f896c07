//! Numerical certificates that few samples cannot distinguish a distribution
//! from a matched uniform one.
//!
//! For a sample budget `k`, the `k`-based moments of a distribution are
//! `m(j) = k^j * sum_i p_i^j`. Two distributions are indistinguishable by any
//! relabeling-invariant test using `k` samples provided both sup norms are at
//! most `1/(500k)` and the moment discrepancy
//!
//! ```text
//! sum_{j >= 2} |m_yes(j) - m_no(j)| / sqrt(1 + max(m_yes(j), m_no(j))) < 1/24
//! ```
//!
//! is small. The class of uniform distributions is relabeling-invariant, so a
//! pair (matched uniform, q) passing both conditions certifies that `k`
//! samples cannot test uniformity on instances like `q`: an empirical lower
//! bound witness. The infinite sum is truncated with a certified geometric
//! tail bound that is *added* to the partial sum, so a reported pass can only
//! be conservative.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::accum::Sum;
use crate::dist::{norms, uniformity_gap, Distribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowerBoundError {
    #[error(
        "moment tail diverges: k * l3_norm = {product} >= 1, the geometric tail \
         bound is meaningless at k = {k}"
    )]
    TailDiverges { k: u64, product: f64 },
    #[error("no k passes the indistinguishability conditions, even k = 1")]
    NoPassingK,
}

/// The `k`-based moments of a distribution up to `j_max`, with a certified
/// bound on everything omitted.
#[derive(Clone, Debug)]
pub struct MomentProfile {
    pub k: u64,
    /// `moments[j] = k^j * sum_i p_i^j` for `j in 2..=j_max`.
    pub moments: BTreeMap<u32, f64>,
    pub linf: f64,
    pub j_max: u32,
    /// `sum_{j > j_max} (k * l3)^j`, valid (Some) only when `k * l3 < 1`;
    /// norm monotonicity makes this dominate the omitted moments.
    pub tail_bound: Option<f64>,
}

/// Exact `k`-based moments for `j <= j_max`.
pub fn k_moments(p: &Distribution, k: u64, j_max: u32) -> MomentProfile {
    assert!(k >= 1, "k_moments requires k >= 1");
    assert!(j_max >= 3, "k_moments requires j_max >= 3");
    let order = p.descending_order();
    let scaled: Vec<f64> = order.iter().map(|&i| k as f64 * p.probs()[i]).collect();

    let mut moments = BTreeMap::new();
    for j in 2..=j_max {
        // k^j * sum p^j == sum (k p)^j, which avoids overflowing k^j.
        let mut acc = Sum::new();
        for &v in &scaled {
            acc.add(v.powi(j as i32));
        }
        moments.insert(j, acc.value());
    }

    let summary = norms(p, 3);
    let r = k as f64 * summary.l3_cubed.cbrt();
    let tail_bound = if r < 1.0 {
        Some(r.powi(j_max as i32 + 1) / (1.0 - r))
    } else {
        None
    };
    MomentProfile {
        k,
        moments,
        linf: summary.linf,
        j_max,
        tail_bound,
    }
}

/// A certified upper bound on the moment discrepancy: the exact partial sum
/// over `j in 2..=j_max` plus the geometric tail bounds of both inputs.
#[derive(Clone, Copy, Debug)]
pub struct DiscrepancyBound {
    pub partial: f64,
    pub tail: f64,
    pub j_max: u32,
}

impl DiscrepancyBound {
    pub fn total(&self) -> f64 {
        self.partial + self.tail
    }
}

/// Threshold the total discrepancy must stay below.
pub const DISCREPANCY_THRESHOLD: f64 = 1.0 / 24.0;

/// How small the combined tail is driven when `j_max` is chosen adaptively.
pub const TAIL_TARGET: f64 = 1e-6;

const J_FLOOR: u32 = 8;
const J_CAP: u32 = 4096;

/// Computes the moment discrepancy between two distributions at sample
/// budget `k`.
///
/// `j_max` defaults to the smallest cutoff that drives the combined tail
/// bound below [`TAIL_TARGET`] (clamped to `[8, 4096]`). Fails closed with
/// [`LowerBoundError::TailDiverges`] when `k * l3 >= 1` for either input,
/// since the tail is then unbounded.
pub fn moment_discrepancy(
    yes: &Distribution,
    no: &Distribution,
    k: u64,
    j_max: Option<u32>,
) -> Result<DiscrepancyBound, LowerBoundError> {
    assert!(k >= 1, "moment_discrepancy requires k >= 1");
    let r_yes = k as f64 * norms(yes, 3).l3_cubed.cbrt();
    let r_no = k as f64 * norms(no, 3).l3_cubed.cbrt();
    let r = r_yes.max(r_no);
    if r >= 1.0 {
        return Err(LowerBoundError::TailDiverges { k, product: r });
    }

    let j_max = j_max.unwrap_or_else(|| adaptive_j_max(r));
    let tail = geometric_tail(r_yes, j_max) + geometric_tail(r_no, j_max);

    let scaled_yes = scaled_descending(yes, k);
    let scaled_no = scaled_descending(no, k);
    let mut partial = Sum::new();
    for j in 2..=j_max {
        let m_yes = power_sum(&scaled_yes, j);
        let m_no = power_sum(&scaled_no, j);
        partial.add((m_yes - m_no).abs() / (1.0 + m_yes.max(m_no)).sqrt());
    }
    Ok(DiscrepancyBound {
        partial: partial.value(),
        tail,
        j_max,
    })
}

fn scaled_descending(p: &Distribution, k: u64) -> Vec<f64> {
    p.descending_order()
        .iter()
        .map(|&i| k as f64 * p.probs()[i])
        .collect()
}

fn power_sum(scaled: &[f64], j: u32) -> f64 {
    let mut acc = Sum::new();
    for &v in scaled {
        acc.add(v.powi(j as i32));
    }
    acc.value()
}

fn geometric_tail(r: f64, j_max: u32) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        r.powi(j_max as i32 + 1) / (1.0 - r)
    }
}

/// Smallest cutoff with `geometric_tail(r, j) <= TAIL_TARGET / 2` per side,
/// clamped to `[J_FLOOR, J_CAP]`. Near `r = 1` the cap wins and the
/// (conservative) leftover tail simply stays in the reported bound.
fn adaptive_j_max(r: f64) -> u32 {
    if r <= 0.0 {
        return J_FLOOR;
    }
    let needed = ((TAIL_TARGET / 2.0) * (1.0 - r)).ln() / r.ln() - 1.0;
    (needed.ceil().max(J_FLOOR as f64) as u32).min(J_CAP)
}

/// The uniform distribution whose second moment matches `q`'s.
#[derive(Clone, Debug)]
pub struct MatchedUniform {
    pub distribution: Distribution,
    /// Chosen support size: `round(1 / sum q_i^2)`, at least 1.
    pub support_size: usize,
    /// The unrounded target `1 / sum q_i^2`.
    pub target: f64,
    /// `|support_size - target| / target`; propagate this when asserting
    /// moment identities against the unrounded formula.
    pub rounding_error: f64,
}

/// Builds the matched uniform distribution on fresh labels. If `q` is
/// already uniform on its positive support the result is `q`'s own
/// uniformization (same labels), since no matching is needed.
pub fn build_matched_uniform(q: &Distribution) -> MatchedUniform {
    let l2_sq = norms(q, 3).l2_sq;
    let target = 1.0 / l2_sq;

    if uniformity_gap(q).abs() <= 1e-12 {
        let support: Vec<(String, f64)> = q
            .iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(l, _)| (l.to_string(), 1.0))
            .collect();
        let count = support.len().max(1) as f64;
        let entries = support.into_iter().map(|(l, _)| (l, 1.0 / count));
        let distribution = Distribution::new(entries).expect("uniformization sums to 1");
        let support_size = distribution.len();
        return MatchedUniform {
            distribution,
            support_size,
            target,
            rounding_error: (support_size as f64 - target).abs() / target,
        };
    }

    let support_size = (target.round() as usize).max(1);
    let mut prefix = String::from("u");
    while q.labels().iter().any(|l| l.starts_with(&prefix)) {
        prefix.push('_');
    }
    let prob = 1.0 / support_size as f64;
    let distribution = Distribution::new((0..support_size).map(|i| (format!("{prefix}{i}"), prob)))
        .expect("matched uniform sums to 1");
    MatchedUniform {
        distribution,
        support_size,
        target,
        rounding_error: (support_size as f64 - target).abs() / target,
    }
}

/// One evaluated sample budget `k` against the indistinguishability
/// conditions.
#[derive(Clone, Copy, Debug)]
pub struct IndistinguishabilityReport {
    pub k: u64,
    /// Both sup norms at most `1/(500k)`, checked directly.
    pub linf_ok: bool,
    /// Exact partial discrepancy sum.
    pub discrepancy: f64,
    /// Certified bound on the omitted tail (infinite when it diverges; the
    /// check then fails closed).
    pub tail: f64,
    /// `discrepancy + tail < 1/24`.
    pub discrepancy_ok: bool,
    pub passes: bool,
}

/// Evaluates both conditions for a yes/no pair at sample budget `k`.
pub fn check_indistinguishable(
    yes: &Distribution,
    no: &Distribution,
    k: u64,
    j_max: Option<u32>,
) -> IndistinguishabilityReport {
    let linf_bound = 1.0 / (500.0 * k as f64);
    let linf_ok = norms(yes, 3).linf <= linf_bound && norms(no, 3).linf <= linf_bound;
    let (discrepancy, tail) = match moment_discrepancy(yes, no, k, j_max) {
        Ok(bound) => (bound.partial, bound.tail),
        // Divergent tail: fail closed.
        Err(LowerBoundError::TailDiverges { .. }) => (f64::INFINITY, f64::INFINITY),
        Err(LowerBoundError::NoPassingK) => unreachable!("not produced here"),
    };
    let discrepancy_ok = discrepancy + tail < DISCREPANCY_THRESHOLD;
    IndistinguishabilityReport {
        k,
        linf_ok,
        discrepancy,
        tail,
        discrepancy_ok,
        passes: linf_ok && discrepancy_ok,
    }
}

/// Result of searching for the largest certifiable sample budget.
#[derive(Clone, Debug)]
pub struct KSearch {
    /// Every evaluated budget, ascending in `k`.
    pub evaluated: Vec<IndistinguishabilityReport>,
    /// The largest passing budget found, if any.
    pub best: Option<IndistinguishabilityReport>,
    /// Whether `passes` was a prefix of the evaluated grid (all passes below
    /// some k, all failures above). The search does not assume this; it is
    /// recorded as an observation.
    pub monotone: bool,
}

impl KSearch {
    pub fn require_best(&self) -> Result<&IndistinguishabilityReport, LowerBoundError> {
        self.best.as_ref().ok_or(LowerBoundError::NoPassingK)
    }
}

/// Searches `k <= k_cap` for the largest budget passing both conditions for
/// `yes = build_matched_uniform(q)` against `q` itself.
///
/// Scans a geometric grid first (the conditions are not assumed monotone in
/// `k`), then refines between the largest passing and the smallest failing
/// evaluated budgets.
pub fn max_indistinguishable_k(q: &Distribution, k_cap: u64, j_max: Option<u32>) -> KSearch {
    assert!(k_cap >= 1, "k_cap must be at least 1");
    let matched = build_matched_uniform(q);
    let yes = &matched.distribution;

    let mut grid: Vec<u64> = Vec::new();
    let mut k = 1u64;
    while k <= k_cap {
        grid.push(k);
        k = k.saturating_mul(2);
    }
    if *grid.last().unwrap() != k_cap {
        grid.push(k_cap);
    }

    let mut evaluated: BTreeMap<u64, IndistinguishabilityReport> = grid
        .iter()
        .map(|&k| (k, check_indistinguishable(yes, q, k, j_max)))
        .collect();

    // Refine between the largest passing and the next failing budget.
    loop {
        let best_pass = evaluated.values().rev().find(|r| r.passes).map(|r| r.k);
        let Some(lo) = best_pass else { break };
        let hi = evaluated
            .range(lo + 1..)
            .find(|(_, r)| !r.passes)
            .map(|(&k, _)| k);
        let hi = match hi {
            Some(h) => h,
            None => break, // k_cap itself passes
        };
        if hi - lo <= 1 {
            break;
        }
        let mid = lo + (hi - lo) / 2;
        evaluated
            .entry(mid)
            .or_insert_with(|| check_indistinguishable(yes, q, mid, j_max));
    }

    let reports: Vec<IndistinguishabilityReport> = evaluated.into_values().collect();
    let best = reports.iter().rev().find(|r| r.passes).copied();
    let monotone = reports.windows(2).all(|w| w[0].passes || !w[1].passes);
    KSearch {
        evaluated: reports,
        best,
        monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_moments_of_uniform_four() {
        let profile = k_moments(&Distribution::uniform(4), 2, 4);
        assert!((profile.moments[&2] - 1.0).abs() < 1e-12); // k^2/n = 4/4
        assert!((profile.moments[&3] - 0.5).abs() < 1e-12); // k^3/n^2 = 8/16
        assert!((profile.linf - 0.25).abs() < 1e-15);
        assert!(profile.tail_bound.is_some());
    }

    #[test]
    fn k_moments_k_one_second_moment_is_collision_probability() {
        let p = Distribution::from_probs(&[0.6, 0.4]).unwrap();
        let profile = k_moments(&p, 1, 3);
        assert!((profile.moments[&2] - 0.52).abs() < 1e-12);
        assert!(profile.moments[&2] <= 1.0);
    }

    #[test]
    fn k_moments_point_mass_tail_unavailable() {
        let p = Distribution::from_probs(&[1.0]).unwrap();
        let profile = k_moments(&p, 3, 4);
        assert!((profile.moments[&2] - 9.0).abs() < 1e-9); // k^2
        assert!(profile.tail_bound.is_none()); // k * l3 = 3 >= 1
    }

    #[test]
    fn discrepancy_of_identical_inputs_is_zero() {
        let p = Distribution::uniform(100);
        let bound = moment_discrepancy(&p, &p, 3, None).unwrap();
        assert_eq!(bound.partial, 0.0);
        assert!(bound.tail < TAIL_TARGET);
    }

    #[test]
    fn discrepancy_matches_direct_summation_to_64() {
        // Independent check: direct summation of the defining series.
        let q = FamilyEx::bilevel(100, 0.1, 0.9);
        let yes = build_matched_uniform(&q).distribution;
        for k in [1u64, 3, 7] {
            let bound = moment_discrepancy(&yes, &q, k, Some(64)).unwrap();
            let mut direct = 0.0f64;
            for j in 2..=64u32 {
                let m_yes: f64 = yes
                    .probs()
                    .iter()
                    .map(|&p| (k as f64 * p).powi(j as i32))
                    .sum();
                let m_no: f64 = q
                    .probs()
                    .iter()
                    .map(|&p| (k as f64 * p).powi(j as i32))
                    .sum();
                direct += (m_yes - m_no).abs() / (1.0 + m_yes.max(m_no)).sqrt();
            }
            assert!(
                (bound.partial - direct).abs() <= 1e-12 * direct.max(1.0),
                "k={k}: {} vs {direct}",
                bound.partial
            );
        }
    }

    #[test]
    fn discrepancy_fails_closed_when_tail_diverges() {
        let p = Distribution::from_probs(&[1.0]).unwrap();
        assert!(matches!(
            moment_discrepancy(&p, &p, 2, None),
            Err(LowerBoundError::TailDiverges { .. })
        ));
        let report = check_indistinguishable(&p, &p, 2, None);
        assert!(!report.passes);
        assert!(report.discrepancy.is_infinite());
    }

    #[test]
    fn matched_uniform_inverts_second_moment() {
        let q = FamilyEx::bilevel(200, 0.5, 0.6); // sum q^2 = 0.0068 -> 147 labels
        let summary = norms(&q, 3);
        let matched = build_matched_uniform(&q);
        assert_eq!(matched.support_size, (1.0 / summary.l2_sq).round() as usize);
        let yes_l2 = norms(&matched.distribution, 3).l2_sq;
        assert!((yes_l2 - 1.0 / matched.support_size as f64).abs() < 1e-15);
    }

    #[test]
    fn matched_uniform_of_60_40() {
        let q = Distribution::from_probs(&[0.6, 0.4]).unwrap();
        let matched = build_matched_uniform(&q);
        assert_eq!(matched.support_size, 2); // round(1/0.52) = round(1.923)
        let expected = (2.0f64 - 1.0 / 0.52).abs() / (1.0 / 0.52);
        assert!((matched.rounding_error - expected).abs() < 1e-12);
        assert!(matched.rounding_error > 0.03 && matched.rounding_error < 0.05);
    }

    #[test]
    fn matched_uniform_of_uniform_reuses_labels() {
        let q = Distribution::uniform(10);
        let matched = build_matched_uniform(&q);
        assert_eq!(matched.support_size, 10);
        assert_eq!(matched.distribution.labels(), q.labels());
        assert!(matched.rounding_error < 1e-12);
    }

    #[test]
    fn matched_uniform_second_moments_align() {
        // The j = 2 discrepancy term vanishes up to rounding error.
        let q = FamilyEx::bilevel(1000, 0.1, 0.9);
        let matched = build_matched_uniform(&q);
        let k = 5u64;
        let m_yes = k_moments(&matched.distribution, k, 3).moments[&2];
        let m_no = k_moments(&q, k, 3).moments[&2];
        let rel = (m_yes - m_no).abs() / m_no;
        assert!(rel <= 2.0 * matched.rounding_error + 1e-12, "rel {rel}");
    }

    #[test]
    fn uniform_q_limited_only_by_sup_norm() {
        let q = Distribution::uniform(4000);
        let search = max_indistinguishable_k(&q, 100, None);
        let best = search.require_best().unwrap();
        assert_eq!(best.k, 4000 / 500); // floor(1/(500 * linf))
        assert!(search.monotone);
        assert!(best.discrepancy + best.tail < 1e-9);
    }

    #[test]
    fn small_support_has_no_passing_k() {
        // Any distribution on <= 100 points has sup norm >= 0.01 > 1/500,
        // so even k = 1 fails the sup-norm gate.
        let q = FamilyEx::bilevel(100, 0.1, 0.9);
        let search = max_indistinguishable_k(&q, 50, None);
        assert!(search.best.is_none());
        assert!(matches!(
            search.require_best(),
            Err(LowerBoundError::NoPassingK)
        ));
    }

    #[test]
    fn bilevel_10k_band() {
        let q = FamilyEx::bilevel(10_000, 0.1, 0.9);
        let search = max_indistinguishable_k(&q, 100_000, None);
        let best = search.require_best().unwrap();
        let l3 = norms(&q, 3).l3_cubed.cbrt();
        let product = best.k as f64 * l3;
        assert!(
            (0.005..=0.25).contains(&product),
            "k* * l3 = {product} (k* = {})",
            best.k
        );
        // A budget of floor(0.01 / l3) samples is safely certifiable.
        let small_k = (0.01 / l3).floor() as u64;
        let bound =
            moment_discrepancy(&build_matched_uniform(&q).distribution, &q, small_k, None).unwrap();
        assert!(bound.total() < DISCREPANCY_THRESHOLD);
    }

    #[test]
    fn matched_discrepancy_dominated_by_geometric_chain() {
        // For matched pairs the discrepancy is bounded by
        // (k*l3)^3 / (1 - k*l3) whenever k*l3 < 1.
        for (n, f, t) in [(300usize, 0.2, 1.5), (1000, 0.1, 0.9), (5000, 0.05, 3.0)] {
            let q = FamilyEx::bilevel(n, f, t);
            let yes = build_matched_uniform(&q).distribution;
            let l3 = norms(&q, 3).l3_cubed.cbrt();
            for k in [1u64, 2, 5, 13] {
                let r = k as f64 * l3;
                if r >= 1.0 {
                    continue;
                }
                let bound = moment_discrepancy(&yes, &q, k, None).unwrap();
                let chain = r.powi(3) / (1.0 - r);
                assert!(
                    bound.total() <= chain + 1e-12,
                    "n={n}, k={k}: {} > {chain}",
                    bound.total()
                );
            }
        }
    }

    #[test]
    fn matched_moments_follow_closed_form() {
        // m_yes(j) = (k * sum q^2)^j / sum q^2, up to the support rounding.
        let q = FamilyEx::bilevel(2000, 0.1, 0.9);
        let matched = build_matched_uniform(&q);
        let l2_sq = norms(&q, 3).l2_sq;
        let k = 7u64;
        let profile = k_moments(&matched.distribution, k, 6);
        for j in 2..=6u32 {
            let closed = (k as f64 * l2_sq).powi(j as i32) / l2_sq;
            let rel = (profile.moments[&j] - closed).abs() / closed;
            // Rounding the support size perturbs m(j) by ~(j-1) * rounding_error.
            let allowed = (j as f64) * matched.rounding_error + 1e-9;
            assert!(rel <= allowed, "j={j}: rel {rel} > {allowed}");
        }
    }

    /// Tiny local family helper so tests read compactly.
    struct FamilyEx;
    impl FamilyEx {
        fn bilevel(n: usize, f: f64, t: f64) -> Distribution {
            crate::sampling::FamilySpec::Bilevel {
                n,
                heavy_fraction: f,
                tilt: t,
            }
            .realize()
            .unwrap()
        }
    }
}
