//! The two-stage uniformity tester.
//!
//! Stage one estimates the collision probability to accuracy
//! `delta = eps^3 / 5832` and inverts it into a surrogate support size `N`.
//! Stage two draws a fresh batch of at most
//! `M = floor((3 (1 - 4 delta) k)^(1/3) * N^(2/3))` samples and counts 3-way
//! collisions: if they ever exceed `k` the input is rejected, otherwise it is
//! accepted. A distribution uniform on any label set produces about `k/2`
//! 3-way collisions in that budget; one whose third moment is out of
//! proportion to its second produces proportionally more, and crossing `k`
//! is the evidence of non-uniformity.
//!
//! With the literal constants (`C = 6500`, `k = ceil(eps^-18)`,
//! `delta = eps^3 / 5832`) the guarantee is: accept uniform, reject anything
//! at total-variation distance at least `eps` from every uniform
//! distribution, each with probability at least 3/4, using
//! `Θ(eps^-6 / ||p||_3)` samples. Those constants come from worst-case
//! analysis and are astronomically conservative (stage one alone would need
//! `ceil(C / delta^4)` collisions), so [`TesterConfig`] exposes overrides,
//! and every verdict records the constants it actually used.

use serde::Serialize;

use crate::collision::CollisionTracker;
use crate::estimator::{estimate_l2_squared, EstimatorConfig, RunError};
use crate::sampling::{RecordingOracle, SampleOracle};

#[derive(Clone, Debug)]
pub struct TesterConfig {
    /// Stage-one estimator configuration. The tester invokes it with
    /// accuracy `delta = eps^3 / 5832`; set `k_override` to make desk-scale
    /// runs feasible.
    pub estimator: EstimatorConfig,
    /// Replaces the stage-two collision budget `ceil(eps^-18)`.
    pub k3_override: Option<u128>,
    /// Draw fresh samples for stage two (the analysis assumes independence
    /// between the stages). Disable only for ablation; stage-one samples are
    /// then replayed into stage two before new ones are pulled.
    pub fresh_stage2: bool,
    /// Cap on total pulls across both stages; `None` means uncapped (stage
    /// one still honors its own budget).
    pub sample_budget: Option<u64>,
}

impl Default for TesterConfig {
    fn default() -> Self {
        Self {
            estimator: EstimatorConfig::default(),
            k3_override: None,
            fresh_stage2: true,
            sample_budget: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

/// Full diagnostics of one tester run.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub decision: Decision,
    /// Surrogate support size `N = 1 / gamma` (kept as a real; rounding it
    /// would perturb the stage-two budget for no reason).
    pub n_estimate: f64,
    pub delta_used: f64,
    /// Stage-two collision budget `k`.
    pub k3_used: u128,
    /// Stage-two sample budget `M`, floored to an integer.
    pub m_budget: u64,
    pub stage1_samples: u64,
    pub stage2_samples: u64,
    pub t3_final: u128,
}

/// Stage-two sample budget `floor((3 (1 - 4 delta) k3)^(1/3) * N^(2/3))`
/// for planning and reporting; `delta` is derived from `eps`.
pub fn expected_stage2_budget(n_estimate: f64, eps: f64, k3: u128) -> u64 {
    assert!(n_estimate > 0.0, "n_estimate must be positive");
    let delta = stage1_delta(eps);
    let scale = (3.0 * (1.0 - 4.0 * delta) * k3 as f64).cbrt();
    // N^(2/3) via cbrt(N^2): stays exact on perfect cubes.
    (scale * (n_estimate * n_estimate).cbrt()).floor() as u64
}

/// Stage-one accuracy `delta = eps^3 / 5832`.
pub fn stage1_delta(eps: f64) -> f64 {
    eps.powi(3) / 5832.0
}

/// Stage-two collision budget: the override if set, else `ceil(eps^-18)`
/// (saturating; at that point the sample budget runs out first anyway).
pub fn stage2_collision_budget(eps: f64, config: &TesterConfig) -> u128 {
    match config.k3_override {
        Some(k) => k.max(1),
        None => (eps.powi(-18).ceil() as u128).max(1),
    }
}

/// Runs the two-stage tester against a sample oracle.
///
/// Accepts any proximity parameter in `(0, 1]`; the probability guarantees
/// are proven for `eps < 1/2` at the default constants.
pub fn test_uniformity<O: SampleOracle>(
    mut oracle: O,
    eps: f64,
    config: &TesterConfig,
) -> Result<Verdict, RunError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(RunError::EpsOutOfRange { eps });
    }
    let delta = stage1_delta(eps);

    // Stage one.
    let (estimate, replay) = if config.fresh_stage2 {
        (
            estimate_l2_squared(&mut oracle, delta, &config.estimator)?,
            Vec::new(),
        )
    } else {
        let mut recording = RecordingOracle::new(&mut oracle);
        let estimate = estimate_l2_squared(&mut recording, delta, &config.estimator)?;
        let (_, log) = recording.into_parts();
        (estimate, log)
    };
    let n_estimate = 1.0 / estimate.gamma;

    // Stage two.
    let k3 = stage2_collision_budget(eps, config);
    let m_budget = expected_stage2_budget(n_estimate, eps, k3);
    let total_budget = config.sample_budget.unwrap_or(u64::MAX);

    let mut tracker = CollisionTracker::new();
    let mut replayed = replay.into_iter();
    let mut decision = Decision::Accept;
    let mut stage2_samples = 0u64;
    while stage2_samples < m_budget {
        if estimate.m + stage2_samples >= total_budget {
            return Err(RunError::BudgetExceeded {
                budget: total_budget,
                drawn: estimate.m + stage2_samples,
                s2: tracker.pairs(),
                t3: tracker.triples(),
            });
        }
        let label = match replayed.next() {
            Some(label) => label,
            None => oracle
                .pull()
                .map_err(|e| RunError::from_sample_error(e, tracker.pairs(), tracker.triples()))?,
        };
        let (_, t3) = tracker
            .observe(label)
            .map_err(|_| RunError::CapacityExceeded {
                drawn: tracker.total(),
            })?;
        stage2_samples += 1;
        if t3 > k3 {
            decision = Decision::Reject;
            break;
        }
    }

    Ok(Verdict {
        decision,
        n_estimate,
        delta_used: delta,
        k3_used: k3,
        m_budget,
        stage1_samples: estimate.m,
        stage2_samples,
        t3_final: tracker.triples(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::sampling::SyntheticOracle;

    fn desk_config(k1: u128, k3: u128) -> TesterConfig {
        TesterConfig {
            estimator: EstimatorConfig {
                k_override: Some(k1),
                ..Default::default()
            },
            k3_override: Some(k3),
            ..Default::default()
        }
    }

    #[test]
    fn point_mass_accepts_deterministically() {
        // N ~ 1, so M <= 2 and no 3-way collision can exceed 5: accept, which
        // is correct since a point mass is uniform on one label.
        let p = Distribution::from_probs(&[1.0]).unwrap();
        for eps in [0.1, 0.25, 0.4] {
            let oracle = SyntheticOracle::new(&p, 77);
            let verdict = test_uniformity(oracle, eps, &desk_config(10, 5)).unwrap();
            assert_eq!(verdict.decision, Decision::Accept);
            assert_eq!(verdict.stage1_samples, 5); // C(5,2) = 10 = k1
            assert!((verdict.n_estimate - 1.0).abs() < 1e-12);
            assert!(verdict.m_budget <= 2);
            assert_eq!(verdict.t3_final, 0);
        }
    }

    #[test]
    fn budget_formula_examples() {
        // (3 * 9)^(1/3) = 3 exactly, so M = 3 * 1000^(2/3) = 300 as eps -> 0.
        assert_eq!(expected_stage2_budget(1000.0, 1e-9, 9), 300);
        // N = 1, k3 = 5, delta ~ 1e-3 scale: floor((15 * (1-4d))^(1/3)) = 2.
        let eps = (0.001f64 * 5832.0).cbrt();
        assert!((stage1_delta(eps) - 0.001).abs() < 1e-12);
        assert_eq!(expected_stage2_budget(1.0, eps, 5), 2);
    }

    #[test]
    fn budget_follows_two_thirds_law() {
        let m1 = expected_stage2_budget(1000.0, 1e-9, 9);
        let m8 = expected_stage2_budget(8000.0, 1e-9, 9);
        assert_eq!(m8, 4 * m1);
    }

    #[test]
    fn rejects_eps_out_of_range() {
        let p = Distribution::uniform(4);
        for eps in [0.0, -0.1, 1.5] {
            let oracle = SyntheticOracle::new(&p, 1);
            assert!(matches!(
                test_uniformity(oracle, eps, &TesterConfig::default()),
                Err(RunError::EpsOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn reject_decision_matches_t3_threshold() {
        // A heavily non-uniform input at desk constants; whatever the
        // verdict per seed, the reject rule must match t3 > k3 exactly.
        let p = Distribution::from_probs(&[0.5, 0.3, 0.1, 0.05, 0.05]).unwrap();
        for seed in 0..30 {
            let oracle = SyntheticOracle::new(&p, seed);
            let verdict = test_uniformity(oracle, 0.4, &desk_config(50, 8)).unwrap();
            assert_eq!(
                verdict.decision == Decision::Reject,
                verdict.t3_final > verdict.k3_used,
                "verdict {verdict:?}"
            );
            assert!(verdict.stage2_samples <= verdict.m_budget);
        }
    }

    #[test]
    fn stage2_reuse_replays_stage1_samples() {
        let p = Distribution::uniform(10);
        let mut config = desk_config(100, 20);
        config.fresh_stage2 = false;
        let mut oracle = SyntheticOracle::new(&p, 5);
        let verdict = test_uniformity(&mut oracle, 0.3, &config).unwrap();
        // With reuse, total pulls from the underlying oracle are stage-one
        // pulls plus only the stage-two shortfall beyond the replay.
        let expected_new = verdict
            .stage2_samples
            .saturating_sub(verdict.stage1_samples);
        assert_eq!(oracle.drawn(), verdict.stage1_samples + expected_new);
    }
}
