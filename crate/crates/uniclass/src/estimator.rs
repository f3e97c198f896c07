//! Adaptive estimation of the squared 2-norm (collision probability).
//!
//! The estimator pulls samples until a fixed number `k` of pairwise
//! collisions has been observed and returns `k / C(m, 2)` for the stopping
//! sample count `m`. With the default constant `C = 6500` and
//! `k = ceil(C / eps^4)`, the estimate lands within a `(1 ± eps)` factor of
//! the true collision probability with probability at least 3/4, and on
//! success `m = Θ(sqrt(k) / ||p||_2)`.
//!
//! [`build_l2_adversary`] constructs, for any base distribution, a second
//! distribution whose squared 2-norm differs by a `(1 ± 3 eps)` factor while
//! the total variation distance between the two stays small, the standard
//! witness that this sample complexity cannot be improved.

use serde::Serialize;
use thiserror::Error;

use crate::collision::{binom2, CollisionTracker};
use crate::dist::{norms, Distribution};
use crate::sampling::{SampleError, SampleOracle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("accuracy parameter eps={eps} out of range")]
    EpsOutOfRange { eps: f64 },
    #[error(
        "sample budget of {budget} exhausted after {drawn} samples \
         (pair collisions: {s2}, 3-way: {t3})"
    )]
    BudgetExceeded {
        budget: u64,
        drawn: u64,
        s2: u128,
        t3: u128,
    },
    #[error(
        "insufficient samples: stream ended after {drawn} samples \
         (pair collisions: {s2}, 3-way: {t3})"
    )]
    InsufficientSamples { drawn: u64, s2: u128, t3: u128 },
    #[error("sample stream error: {0}")]
    Stream(String),
    #[error("collision tracker capacity exceeded after {drawn} samples")]
    CapacityExceeded { drawn: u64 },
}

impl RunError {
    pub(crate) fn from_sample_error(err: SampleError, s2: u128, t3: u128) -> Self {
        match err {
            SampleError::StreamExhausted { drawn } => {
                RunError::InsufficientSamples { drawn, s2, t3 }
            }
            other => RunError::Stream(other.to_string()),
        }
    }
}

/// Default collision-target constant; `k = ceil(c_constant / eps^4)`.
pub const DEFAULT_C_CONSTANT: f64 = 6500.0;

/// Default pull budget. The analysis assumes an endless i.i.d. source; the
/// budget guarantees termination on anything else.
pub const DEFAULT_SAMPLE_BUDGET: u64 = 1_000_000_000;

#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    /// Constant in `k = ceil(c_constant / eps^4)`.
    pub c_constant: f64,
    /// Replaces the computed `k` entirely when set.
    pub k_override: Option<u128>,
    /// Maximum pulls before giving up; `None` means unlimited.
    pub sample_budget: Option<u64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            c_constant: DEFAULT_C_CONSTANT,
            k_override: None,
            sample_budget: Some(DEFAULT_SAMPLE_BUDGET),
        }
    }
}

impl EstimatorConfig {
    /// Collision target for accuracy `eps`.
    pub fn collision_target(&self, eps: f64) -> u128 {
        match self.k_override {
            Some(k) => k.max(1),
            None => {
                let k = (self.c_constant / eps.powi(4)).ceil();
                // f64 -> u128 saturates; an absurd target just means the
                // budget gives out first.
                (k as u128).max(1)
            }
        }
    }
}

/// Outcome of one estimator run.
#[derive(Clone, Debug, Serialize)]
pub struct L2Estimate {
    /// The estimate `k / C(m, 2)` of `sum p_i^2`.
    pub gamma: f64,
    /// Samples consumed.
    pub m: u64,
    /// Collision target used.
    pub k: u128,
    /// Pair collisions at stopping; exceeds `k` when one draw closes several
    /// pairs at once. The returned `gamma` still uses `k`, per the stopping
    /// rule; `s2_final` is the diagnostic for the overshoot.
    pub s2_final: u128,
}

/// Pulls samples until `k` pairwise collisions, then estimates
/// `sum p_i^2 = k / C(m, 2)`. The accuracy parameter must lie in (0, 1/2).
pub fn estimate_l2_squared<O: SampleOracle>(
    mut oracle: O,
    eps: f64,
    config: &EstimatorConfig,
) -> Result<L2Estimate, RunError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(RunError::EpsOutOfRange { eps });
    }
    let k = config.collision_target(eps);
    let budget = config.sample_budget.unwrap_or(u64::MAX);

    let mut tracker = CollisionTracker::new();
    loop {
        if tracker.total() >= budget {
            return Err(RunError::BudgetExceeded {
                budget,
                drawn: tracker.total(),
                s2: tracker.pairs(),
                t3: tracker.triples(),
            });
        }
        let label = oracle
            .pull()
            .map_err(|e| RunError::from_sample_error(e, tracker.pairs(), tracker.triples()))?;
        let (s2, _) = tracker
            .observe(label)
            .map_err(|_| RunError::CapacityExceeded {
                drawn: tracker.total(),
            })?;
        if s2 >= k {
            let m = tracker.total();
            return Ok(L2Estimate {
                gamma: k as f64 / binom2(m) as f64,
                m,
                k,
                s2_final: s2,
            });
        }
    }
}

/// An adversarial companion distribution for 2-norm estimation.
#[derive(Clone, Debug)]
pub struct L2Adversary {
    pub q: Distribution,
    /// Exact total variation distance moved: `gamma * ||p||_2`.
    pub tv_moved: f64,
    /// Number of fresh labels the moved mass was spread over.
    pub fresh_labels: usize,
    /// Target ratio `||q||_2^2 / ||p||_2^2`: `1 + 3 eps` when the mass was
    /// spiked on one fresh label, `1 - 3 eps` when it was spread.
    pub target_ratio: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("eps must lie in (0, 1/3), got {eps}")]
    EpsOutOfRange { eps: f64 },
}

/// Builds `q` close to `p` in total variation whose squared 2-norm differs
/// from `p`'s by a `(1 ± 3 eps)` factor.
///
/// For `eps >= sum p_i^2` the moved mass `gamma * ||p||_2` is spiked on one
/// fresh label with `gamma = (||p||_2 + sqrt(3 eps + (1 + 3 eps) ||p||_2^2))
/// / (1 + ||p||_2^2)`, which raises the squared norm by exactly `1 + 3 eps`.
/// Otherwise `gamma = 3 eps / ||p||_2` and the mass `3 eps` is spread evenly
/// over `m = ceil(3 eps / ((1 - 3 eps) sum p_i^2))` fresh labels, landing
/// within a relative `2/m` of `(1 - 3 eps) sum p_i^2` (the ceiling on `m` is
/// the only slack). In both cases the distance moved is exactly
/// `gamma * ||p||_2`.
pub fn build_l2_adversary(p: &Distribution, eps: f64) -> Result<L2Adversary, AdversaryError> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(AdversaryError::EpsOutOfRange { eps });
    }
    let l2_sq = norms(p, 3).l2_sq;
    let l2 = l2_sq.sqrt();

    if eps >= l2_sq {
        let gamma = (l2 + (3.0 * eps + (1.0 + 3.0 * eps) * l2_sq).sqrt()) / (1.0 + l2_sq);
        let moved = gamma * l2;
        let entries = scaled_entries(p, 1.0 - moved)
            .chain(fresh_entries(p, 1, moved))
            .collect::<Vec<_>>();
        Ok(L2Adversary {
            q: Distribution::new(entries).expect("mixture sums to 1"),
            tv_moved: moved,
            fresh_labels: 1,
            target_ratio: 1.0 + 3.0 * eps,
        })
    } else {
        let moved = 3.0 * eps; // gamma * ||p||_2 with gamma = 3 eps / ||p||_2
        let m = (moved / ((1.0 - moved) * l2_sq)).ceil().max(1.0) as usize;
        let entries = scaled_entries(p, 1.0 - moved)
            .chain(fresh_entries(p, m, moved))
            .collect::<Vec<_>>();
        Ok(L2Adversary {
            q: Distribution::new(entries).expect("mixture sums to 1"),
            tv_moved: moved,
            fresh_labels: m,
            target_ratio: 1.0 - 3.0 * eps,
        })
    }
}

fn scaled_entries<'a>(p: &'a Distribution, scale: f64) -> impl Iterator<Item = (String, f64)> + 'a {
    p.iter()
        .map(move |(label, prob)| (label.to_string(), prob * scale))
}

/// `count` fresh labels sharing `mass` evenly, named to avoid collisions
/// with `p`'s labels.
fn fresh_entries(p: &Distribution, count: usize, mass: f64) -> impl Iterator<Item = (String, f64)> {
    let mut prefix = String::from("fresh");
    while p.labels().iter().any(|l| l.starts_with(&prefix)) {
        prefix.push('_');
    }
    let each = mass / count as f64;
    (0..count).map(move |i| (format!("{prefix}{i}"), each))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::tv_distance;
    use crate::sampling::SyntheticOracle;

    #[test]
    fn point_mass_with_k_one() {
        let p = Distribution::from_probs(&[1.0]).unwrap();
        let oracle = SyntheticOracle::new(&p, 3);
        let cfg = EstimatorConfig {
            k_override: Some(1),
            ..Default::default()
        };
        let est = estimate_l2_squared(oracle, 0.25, &cfg).unwrap();
        assert_eq!(est.m, 2);
        assert_eq!(est.gamma, 1.0);
    }

    #[test]
    fn point_mass_with_k_ten_stops_at_five() {
        // Every pair collides: first m with C(m,2) >= 10 is 5.
        let p = Distribution::from_probs(&[1.0]).unwrap();
        let oracle = SyntheticOracle::new(&p, 3);
        let cfg = EstimatorConfig {
            k_override: Some(10),
            ..Default::default()
        };
        let est = estimate_l2_squared(oracle, 0.25, &cfg).unwrap();
        assert_eq!(est.m, 5);
        assert_eq!(est.gamma, 1.0);
        assert_eq!(est.s2_final, 10);
    }

    #[test]
    fn eps_out_of_range_rejected() {
        let p = Distribution::uniform(4);
        let oracle = SyntheticOracle::new(&p, 1);
        let err = estimate_l2_squared(oracle, 0.5, &EstimatorConfig::default()).unwrap_err();
        assert_eq!(err, RunError::EpsOutOfRange { eps: 0.5 });
    }

    #[test]
    fn budget_exhaustion_reports_partial_state() {
        let p = Distribution::uniform(1000);
        let oracle = SyntheticOracle::new(&p, 8);
        let cfg = EstimatorConfig {
            k_override: Some(u128::MAX),
            sample_budget: Some(500),
            ..Default::default()
        };
        match estimate_l2_squared(oracle, 0.25, &cfg).unwrap_err() {
            RunError::BudgetExceeded { budget, drawn, .. } => {
                assert_eq!(budget, 500);
                assert_eq!(drawn, 500);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stream_exhaustion_reports_partial_state() {
        use crate::sampling::StreamOracle;
        let oracle = StreamOracle::new("a\nb\na\n".as_bytes());
        let cfg = EstimatorConfig {
            k_override: Some(100),
            ..Default::default()
        };
        match estimate_l2_squared(oracle, 0.25, &cfg).unwrap_err() {
            RunError::InsufficientSamples { drawn, s2, .. } => {
                assert_eq!(drawn, 3);
                assert_eq!(s2, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gamma_times_binom_recovers_k() {
        let p = Distribution::uniform(50);
        for seed in 0..20 {
            let oracle = SyntheticOracle::new(&p, seed);
            let cfg = EstimatorConfig {
                k_override: Some(200),
                ..Default::default()
            };
            let est = estimate_l2_squared(oracle, 0.25, &cfg).unwrap();
            assert_eq!(est.gamma, est.k as f64 / binom2(est.m) as f64);
            assert!(est.s2_final >= est.k);
            assert!(est.m >= 2);
        }
    }

    #[test]
    fn adversary_case_one_uniform4() {
        let p = Distribution::uniform(4);
        let adv = build_l2_adversary(&p, 0.3).unwrap();
        let ratio = norms(&adv.q, 3).l2_sq / 0.25;
        assert!((ratio - 1.9).abs() < 1e-9, "ratio {ratio}");
        assert!((tv_distance(&p, &adv.q) - adv.tv_moved).abs() < 1e-12);
        assert_eq!(adv.fresh_labels, 1);
    }

    #[test]
    fn adversary_case_two_small_m() {
        // eps < sum p^2 forces the spread construction; here m = 1.
        let p = Distribution::uniform(4);
        let adv = build_l2_adversary(&p, 0.05).unwrap();
        assert_eq!(adv.fresh_labels, 1);
        let got = norms(&adv.q, 3).l2_sq;
        let target = 0.85 * 0.25;
        assert!((got - target).abs() / target <= 2.0 / adv.fresh_labels as f64);
        assert!((tv_distance(&p, &adv.q) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn adversary_case_two_large_m() {
        // A concentrated base with eps near 1/3 drives the spread count up.
        let p = Distribution::from_probs(&[0.58, 0.42]).unwrap();
        let l2_sq = norms(&p, 3).l2_sq;
        let eps = 0.33;
        assert!(eps < l2_sq);
        let adv = build_l2_adversary(&p, eps).unwrap();
        assert!(adv.fresh_labels > 100, "m = {}", adv.fresh_labels);
        let got = norms(&adv.q, 3).l2_sq;
        let target = (1.0 - 3.0 * eps) * l2_sq;
        let tol = 2.0 / adv.fresh_labels as f64;
        assert!(
            (got - target).abs() / target <= tol,
            "{got} vs {target} (tol {tol})"
        );
        assert!((tv_distance(&p, &adv.q) - adv.tv_moved).abs() < 1e-12);
    }

    #[test]
    fn adversary_rejects_eps_out_of_range() {
        let p = Distribution::uniform(4);
        assert!(build_l2_adversary(&p, 0.34).is_err());
        assert!(build_l2_adversary(&p, 0.0).is_err());
    }
}
