//! Tester invariants that need Monte Carlo or replay machinery.

use uniclass::collision::CollisionTracker;
use uniclass::dist::{norms, Distribution};
use uniclass::estimator::EstimatorConfig;
use uniclass::sampling::{RecordingOracle, SyntheticOracle};
use uniclass::tester::{test_uniformity, Decision, TesterConfig, Verdict};

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

fn run_recorded(
    dist: &Distribution,
    seed: u64,
    eps: f64,
    config: &TesterConfig,
) -> (Verdict, Vec<u32>) {
    let mut recording = RecordingOracle::new(SyntheticOracle::new(dist, seed));
    let verdict = test_uniformity(&mut recording, eps, config).unwrap();
    let (_, log) = recording.into_parts();
    (verdict, log)
}

/// Replaying the recorded stage-two prefix reproduces the final triple count
/// and hence the decision.
#[test]
fn verdict_consistent_with_replayed_stage2() {
    let dists = [
        Distribution::uniform(40),
        Distribution::from_probs(&[0.4, 0.3, 0.2, 0.05, 0.05]).unwrap(),
    ];
    let config = desk_config(150, 12);
    for dist in &dists {
        for seed in 0..25u64 {
            let (verdict, log) = run_recorded(dist, seed, 0.45, &config);
            let stage1 = verdict.stage1_samples as usize;
            let stage2 = &log[stage1..stage1 + verdict.stage2_samples as usize];

            let mut tracker = CollisionTracker::new();
            for &label in stage2 {
                tracker.observe(label).unwrap();
            }
            assert_eq!(tracker.triples(), verdict.t3_final);
            assert_eq!(
                verdict.decision == Decision::Reject,
                verdict.t3_final > verdict.k3_used
            );
        }
    }
}

/// On a rejection, the run stopped at the first sample that pushed the
/// triple count over the budget: one sample earlier it was still within.
#[test]
fn early_exit_is_minimal() {
    // 25 heavy labels carrying mass 0.31: third moment ~3.1x the matched
    // uniform's, so most runs reject.
    let skewed = uniclass::sampling::FamilySpec::Bilevel {
        n: 8000,
        heavy_fraction: 0.0031,
        tilt: 99.0,
    }
    .realize()
    .unwrap();
    let config = desk_config(600, 200);
    let mut rejections = 0;
    for seed in 0..40u64 {
        let (verdict, log) = run_recorded(&skewed, seed, 0.45, &config);
        if verdict.decision != Decision::Reject {
            continue;
        }
        rejections += 1;
        let stage1 = verdict.stage1_samples as usize;
        let before_last = &log[stage1..stage1 + verdict.stage2_samples as usize - 1];
        let mut tracker = CollisionTracker::new();
        for &label in before_last {
            tracker.observe(label).unwrap();
        }
        assert!(
            tracker.triples() <= verdict.k3_used,
            "prefix already over budget: {} > {}",
            tracker.triples(),
            verdict.k3_used
        );
        assert!(verdict.stage2_samples <= verdict.m_budget);
    }
    assert!(
        rejections >= 20,
        "only {rejections}/40 rejections; instance too weak"
    );
}

/// One heavy label over `lights` equal light labels, tuned so the second
/// moment is exactly `target`: a family whose third moment grows while the
/// second stays put.
fn one_heavy_with_matched_l2(lights: usize, target: f64) -> Distribution {
    let l = lights as f64;
    // a^2 + (1-a)^2/l = target  =>  (l+1) a^2 - 2a + 1 - l*target = 0
    let disc = 1.0 - (l + 1.0) * (1.0 - l * target);
    let a = (1.0 + disc.sqrt()) / (l + 1.0);
    let light = (1.0 - a) / l;
    let mut entries = vec![("heavy".to_string(), a)];
    entries.extend((0..lights).map(|i| (format!("x{i}"), light)));
    Distribution::new(entries).unwrap()
}

/// At equal second moment, a larger third moment cannot slow the stage-two
/// stopping time: the median over trials is non-increasing along the sweep.
#[test]
fn stage2_stopping_monotone_in_third_moment() {
    let sweep: Vec<Distribution> = std::iter::once(Distribution::uniform(50))
        .chain(
            [60, 70, 90]
                .iter()
                .map(|&l| one_heavy_with_matched_l2(l, 0.02)),
        )
        .collect();

    // Same second moment everywhere; strictly increasing third moment.
    let mut last_l3 = 0.0;
    for dist in &sweep {
        let summary = norms(dist, 3);
        assert!(
            (summary.l2_sq - 0.02).abs() < 1e-12,
            "l2_sq {}",
            summary.l2_sq
        );
        assert!(summary.l3_cubed > last_l3);
        last_l3 = summary.l3_cubed;
    }

    let config = desk_config(2500, 50);
    let trials = 300u64;
    let medians: Vec<u64> = sweep
        .iter()
        .map(|dist| {
            let mut stops: Vec<u64> = (0..trials)
                .map(|trial| {
                    let oracle = SyntheticOracle::new(dist, 0xBEEF ^ trial);
                    test_uniformity(oracle, 0.5, &config)
                        .unwrap()
                        .stage2_samples
                })
                .collect();
            stops.sort_unstable();
            stops[stops.len() / 2]
        })
        .collect();

    for pair in medians.windows(2) {
        // +1 absorbs the jitter of the stage-one support estimate, which
        // shifts the stage-two budget by one sample either way.
        assert!(
            pair[1] <= pair[0] + 1,
            "medians increased along the sweep: {medians:?}"
        );
    }
    assert!(
        medians.last().unwrap() + 5 <= medians[0],
        "no overall decrease: {medians:?}"
    );
}
