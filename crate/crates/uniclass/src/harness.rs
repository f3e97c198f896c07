//! Reproducible Monte Carlo experiments.
//!
//! A [`Scenario`] pins everything a batch of trials depends on: the target
//! distribution, the procedure and its constants, the trial count, and a
//! base seed. Trial `i` runs against a fresh oracle seeded with
//! `seed_base ^ i`, trials execute in parallel, and results are aggregated
//! in trial order, so a scenario renders to byte-identical reports no
//! matter the thread count.

use std::io::BufRead;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{
    norms, norms_to_distance_bound, tv_to_uniform_class, uniformity_gap, Distribution,
};
use crate::estimator::{estimate_l2_squared, EstimatorConfig, L2Estimate};
use crate::sampling::rng::Xoshiro256StarStar;
use crate::sampling::SyntheticOracle;
use crate::tester::{test_uniformity, Decision, TesterConfig, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("scaling fit needs at least 3 values of n with nonzero variance")]
    DegenerateFit,
    #[error("scenario file line {line}: {message}")]
    ScenarioParse { line: usize, message: String },
}

/// Which sampled procedure a scenario runs.
#[derive(Clone, Debug)]
pub enum Procedure {
    Test { eps: f64, config: TesterConfig },
    EstimateL2 { eps: f64, config: EstimatorConfig },
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub dist: Distribution,
    pub procedure: Procedure,
    pub trials: u32,
    pub seed_base: u64,
}

#[derive(Clone, Debug, Serialize)]
pub enum TrialOutcome {
    Verdict(Verdict),
    Estimate(L2Estimate),
    Failed(String),
}

impl TrialOutcome {
    /// Total samples consumed, when the trial succeeded.
    pub fn total_samples(&self) -> Option<u64> {
        match self {
            TrialOutcome::Verdict(v) => Some(v.stage1_samples + v.stage2_samples),
            TrialOutcome::Estimate(e) => Some(e.m),
            TrialOutcome::Failed(_) => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRow {
    pub trial: u32,
    pub seed: u64,
    pub outcome: TrialOutcome,
}

/// Aggregated results of a scenario. `accept_rate * trials` is exactly the
/// accept count; quantiles are nearest-rank over successful trials.
#[derive(Clone, Debug, Serialize)]
pub struct TrialStats {
    pub trials: u32,
    pub accepts: u32,
    pub accept_rate: f64,
    pub rate_stderr: f64,
    pub sample_p10: u64,
    pub sample_p50: u64,
    pub sample_p90: u64,
    pub failures: u32,
    #[serde(skip)]
    pub per_trial: Vec<TrialRow>,
}

/// Runs every trial of a scenario. Per-trial errors are recorded as
/// failures, never aborting the batch.
pub fn run_trials(scenario: &Scenario) -> TrialStats {
    let rows: Vec<TrialRow> = (0..scenario.trials)
        .into_par_iter()
        .map(|trial| run_one(scenario, trial))
        .collect();
    aggregate(scenario.trials, rows)
}

fn run_one(scenario: &Scenario, trial: u32) -> TrialRow {
    let seed = scenario.seed_base ^ trial as u64;
    let oracle = SyntheticOracle::new(&scenario.dist, seed);
    let outcome = match &scenario.procedure {
        Procedure::Test { eps, config } => match test_uniformity(oracle, *eps, config) {
            Ok(verdict) => TrialOutcome::Verdict(verdict),
            Err(e) => TrialOutcome::Failed(e.to_string()),
        },
        Procedure::EstimateL2 { eps, config } => match estimate_l2_squared(oracle, *eps, config) {
            Ok(estimate) => TrialOutcome::Estimate(estimate),
            Err(e) => TrialOutcome::Failed(e.to_string()),
        },
    };
    TrialRow {
        trial,
        seed,
        outcome,
    }
}

fn aggregate(trials: u32, rows: Vec<TrialRow>) -> TrialStats {
    let mut accepts = 0u32;
    let mut failures = 0u32;
    let mut samples: Vec<u64> = Vec::with_capacity(rows.len());
    for row in &rows {
        match &row.outcome {
            TrialOutcome::Verdict(v) => {
                if v.decision == Decision::Accept {
                    accepts += 1;
                }
            }
            TrialOutcome::Estimate(_) => {}
            TrialOutcome::Failed(_) => failures += 1,
        }
        if let Some(total) = row.outcome.total_samples() {
            samples.push(total);
        }
    }
    samples.sort_unstable();
    let quantile = |q: f64| -> u64 {
        if samples.is_empty() {
            0
        } else {
            samples[((q * (samples.len() - 1) as f64).round()) as usize]
        }
    };
    let rate = if trials == 0 {
        0.0
    } else {
        accepts as f64 / trials as f64
    };
    TrialStats {
        trials,
        accepts,
        accept_rate: rate,
        rate_stderr: if trials == 0 {
            0.0
        } else {
            (rate * (1.0 - rate) / trials as f64).sqrt()
        },
        sample_p10: quantile(0.1),
        sample_p50: quantile(0.5),
        sample_p90: quantile(0.9),
        failures,
        per_trial: rows,
    }
}

/// Renders the per-trial CSV. Tester rows:
/// `trial,seed,decision,stage1_samples,stage2_samples,t3,n_estimate`;
/// estimator rows: `trial,seed,gamma,m,k,s2`.
pub fn render_csv(stats: &TrialStats, procedure: &Procedure) -> String {
    let mut out = String::new();
    match procedure {
        Procedure::Test { .. } => {
            out.push_str("trial,seed,decision,stage1_samples,stage2_samples,t3,n_estimate\n");
            for row in &stats.per_trial {
                match &row.outcome {
                    TrialOutcome::Verdict(v) => {
                        let decision = match v.decision {
                            Decision::Accept => "accept",
                            Decision::Reject => "reject",
                        };
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            row.trial,
                            row.seed,
                            decision,
                            v.stage1_samples,
                            v.stage2_samples,
                            v.t3_final,
                            v.n_estimate
                        ));
                    }
                    TrialOutcome::Failed(msg) => {
                        out.push_str(&format!(
                            "{},{},failed:{},,,,\n",
                            row.trial,
                            row.seed,
                            msg.replace(',', ";")
                        ));
                    }
                    TrialOutcome::Estimate(_) => unreachable!("tester scenario"),
                }
            }
        }
        Procedure::EstimateL2 { .. } => {
            out.push_str("trial,seed,gamma,m,k,s2\n");
            for row in &stats.per_trial {
                match &row.outcome {
                    TrialOutcome::Estimate(e) => {
                        out.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            row.trial, row.seed, e.gamma, e.m, e.k, e.s2_final
                        ));
                    }
                    TrialOutcome::Failed(msg) => {
                        out.push_str(&format!(
                            "{},{},failed:{},,,\n",
                            row.trial,
                            row.seed,
                            msg.replace(',', ";")
                        ));
                    }
                    TrialOutcome::Verdict(_) => unreachable!("estimator scenario"),
                }
            }
        }
    }
    out
}

/// Least-squares fit of `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits a line through `(x, y)` points; errors when the x values carry no
/// variance (or there are fewer than two points).
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<ScalingFit, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::DegenerateFit);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r2,
    })
}

/// Reruns `base` against `uniform(n)` for each `n`, then fits
/// `log(median total samples)` against `log(n)`.
pub fn scaling_fit(
    n_values: &[usize],
    base: &Scenario,
) -> Result<(ScalingFit, Vec<(usize, u64)>), HarnessError> {
    if n_values.len() < 3 {
        return Err(HarnessError::DegenerateFit);
    }
    let mut medians = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let scenario = Scenario {
            dist: Distribution::uniform(n),
            procedure: base.procedure.clone(),
            trials: base.trials,
            seed_base: base.seed_base,
        };
        let stats = run_trials(&scenario);
        medians.push((n, stats.sample_p50));
    }
    let points: Vec<(f64, f64)> = medians
        .iter()
        .map(|&(n, med)| ((n as f64).ln(), (med.max(1) as f64).ln()))
        .collect();
    Ok((fit_log_log(&points)?, medians))
}

/// A violated structural identity found by [`lemma_sweep`], with enough
/// context to reproduce it.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaViolation {
    pub index: u32,
    pub seed: u64,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaSweep {
    pub checked: u32,
    /// How many (distribution, N) pairs satisfied the norm-bracket
    /// hypothesis, i.e. how often the implication check was non-vacuous.
    pub bracket_checks: u32,
    pub violations: Vec<LemmaViolation>,
}

/// Random-instance validation of the structural identities the tester
/// relies on. Generates `count` distributions on at most `max_points`
/// labels (mixing smooth, exactly uniform, two-tier, and zero-padded
/// shapes) and checks, for each:
///
/// 1. the power-mean chain `(sum p^2)^(j-1) <= sum p^j` for `j in 2..=8`
///    (and its unnormalized-vector form with the `l1^(j-2)` factor);
/// 2. `sum p^3 - (sum p^2)^2 = 0` exactly when the exact class distance is 0;
/// 3. whenever some integer `N` brackets the second moment within `1 ± eps`
///    and the third is below `(1 + delta)/N^2` for `eps, delta < 0.04`, the
///    exact class distance is at most `9 (delta + 3 eps)^(1/3)`.
pub fn lemma_sweep(count: u32, max_points: usize, seed: u64) -> LemmaSweep {
    assert!(
        (1..=64).contains(&max_points),
        "max_points must be in 1..=64"
    );
    let mut violations = Vec::new();
    let mut bracket_checks = 0;
    for index in 0..count {
        let dist_seed = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let dist = random_distribution(max_points, dist_seed);
        check_holder_chain(&dist, index, dist_seed, &mut violations);
        check_gap_equivalence(&dist, index, dist_seed, &mut violations);
        bracket_checks +=
            check_norm_bracket_implies_close(&dist, index, dist_seed, &mut violations);
    }
    LemmaSweep {
        checked: count,
        bracket_checks,
        violations,
    }
}

fn random_distribution(max_points: usize, seed: u64) -> Distribution {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let n = 1 + rng.next_below(max_points as u64) as usize;
    let style = rng.next_below(5);
    let mut weights: Vec<f64> = match style {
        // Exactly uniform.
        0 => vec![1.0; n],
        // Two-tier.
        1 => {
            let heavy = 1 + rng.next_below(n as u64) as usize;
            let tilt = 1.0 + 9.0 * rng.next_f64();
            (0..n).map(|i| if i < heavy { tilt } else { 1.0 }).collect()
        }
        // Smooth with a few exact zeros.
        2 => (0..n)
            .map(|_| {
                if rng.next_below(4) == 0 {
                    0.0
                } else {
                    -(1.0 - rng.next_f64()).ln()
                }
            })
            .collect(),
        // Near-uniform jitter.
        3 => (0..n).map(|_| 1.0 + 0.05 * rng.next_f64()).collect(),
        // Exponential weights.
        _ => (0..n).map(|_| -(1.0 - rng.next_f64()).ln()).collect(),
    };
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let total: f64 = weights.iter().sum();
    Distribution::new(
        weights
            .into_iter()
            .enumerate()
            .map(|(i, w)| (format!("x{i}"), w / total)),
    )
    .expect("normalized weights sum to 1")
}

fn check_holder_chain(
    dist: &Distribution,
    index: u32,
    seed: u64,
    violations: &mut Vec<LemmaViolation>,
) {
    let summary = norms(dist, 8);
    for j in 2..=8u32 {
        let lhs = summary.l2_sq.powi(j as i32 - 1);
        let rhs = summary.j_norms[&j];
        if lhs > rhs + 1e-12 {
            violations.push(LemmaViolation {
                index,
                seed,
                check: "power-mean chain",
                detail: format!("j={j}: l2_sq^(j-1)={lhs} > sum p^j={rhs}"),
            });
        }
        if summary.linf > rhs.powf(1.0 / j as f64) + 1e-12 {
            violations.push(LemmaViolation {
                index,
                seed,
                check: "sup-norm monotonicity",
                detail: format!("j={j}: linf above the j-norm"),
            });
        }
    }
    // Unnormalized form: scale the vector and keep the l1 factor.
    let scale = 0.25 + 3.0 * Xoshiro256StarStar::seed_from_u64(seed ^ 0xABCD).next_f64();
    let scaled: Vec<f64> = dist.probs().iter().map(|&p| p * scale).collect();
    let l1: f64 = scaled.iter().sum();
    let l2_sq: f64 = scaled.iter().map(|&v| v * v).sum();
    for j in 2..=8u32 {
        let lj: f64 = scaled.iter().map(|&v| v.powi(j as i32)).sum();
        let lhs = l2_sq.powi(j as i32 - 1);
        let rhs = l1.powi(j as i32 - 2) * lj;
        if lhs > rhs + 1e-12 * l1.powi(j as i32).max(1.0) {
            violations.push(LemmaViolation {
                index,
                seed,
                check: "power-mean chain (vector form)",
                detail: format!("j={j}, scale={scale}: {lhs} > {rhs}"),
            });
        }
    }
}

fn check_gap_equivalence(
    dist: &Distribution,
    index: u32,
    seed: u64,
    violations: &mut Vec<LemmaViolation>,
) {
    let gap = uniformity_gap(dist);
    let class = tv_to_uniform_class(dist, None).expect("default s_max is valid");
    let gap_zero = gap.abs() <= 1e-12;
    let dist_zero = class.distance <= 1e-12;
    if gap_zero != dist_zero {
        violations.push(LemmaViolation {
            index,
            seed,
            check: "moment gap vs class distance",
            detail: format!("gap={gap}, class distance={}", class.distance),
        });
    }
}

fn check_norm_bracket_implies_close(
    dist: &Distribution,
    index: u32,
    seed: u64,
    violations: &mut Vec<LemmaViolation>,
) -> u32 {
    let summary = norms(dist, 3);
    let l2_sq = summary.l2_sq;
    // Any integer N with (1-eps)/N <= l2_sq <= (1+eps)/N for eps < 0.04 lies
    // in this window.
    let lo = (0.96 / l2_sq).floor().max(1.0) as u64;
    let hi = (1.04 / l2_sq).ceil() as u64;
    let mut checked = 0;
    for n in lo..=hi {
        let nf = n as f64;
        let eps = (nf * l2_sq - 1.0).abs();
        let delta = (nf * nf * summary.l3_cubed - 1.0).max(0.0);
        if eps <= 0.0 || eps >= 0.04 || delta >= 0.04 {
            continue;
        }
        checked += 1;
        let delta = delta.max(1e-300); // bound requires delta > 0
        let bound = norms_to_distance_bound(eps, delta).expect("checked range");
        let needed_s = (hi as usize + 2).max(2 * dist.positive_support());
        let class = tv_to_uniform_class(dist, Some(needed_s)).expect("s_max >= 1");
        if class.distance > bound + 1e-12 {
            violations.push(LemmaViolation {
                index,
                seed,
                check: "norm bracket implies small class distance",
                detail: format!(
                    "N={n}, eps={eps}, delta={delta}: distance {} > bound {bound}",
                    class.distance
                ),
            });
        }
    }
    checked
}

/// Parses the `key=value` scenario file format. Recognized keys:
/// `family`, `dist`, `procedure`, `eps`, `trials`, `seed`, `k3`, `c`,
/// `stage1-k`, `k`, `budget`, `reuse-stage1`. Lines starting with `#` and
/// blank lines are ignored.
pub fn parse_scenario<R: BufRead>(reader: R) -> Result<Scenario, HarnessError> {
    let mut family: Option<String> = None;
    let mut dist_path: Option<String> = None;
    let mut procedure_name = String::from("test");
    let mut eps: Option<f64> = None;
    let mut trials: u32 = 100;
    let mut seed_base: u64 = 0;
    let mut k3: Option<u128> = None;
    let mut c: Option<f64> = None;
    let mut stage1_k: Option<u128> = None;
    let mut budget: Option<u64> = None;
    let mut reuse_stage1 = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::ScenarioParse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| HarnessError::ScenarioParse {
            line: lineno + 1,
            message,
        };
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got `{trimmed}`")))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| parse_err(format!("bad {what}: `{value}`"));
        match key {
            "family" => family = Some(value.to_string()),
            "dist" => dist_path = Some(value.to_string()),
            "procedure" => procedure_name = value.to_string(),
            "eps" => eps = Some(value.parse().map_err(|_| bad("eps"))?),
            "trials" => trials = value.parse().map_err(|_| bad("trials"))?,
            "seed" | "seed_base" => seed_base = value.parse().map_err(|_| bad("seed"))?,
            "k3" => k3 = Some(value.parse().map_err(|_| bad("k3"))?),
            "c" => c = Some(value.parse().map_err(|_| bad("c"))?),
            "stage1-k" | "k" => stage1_k = Some(value.parse().map_err(|_| bad("k"))?),
            "budget" => budget = Some(value.parse().map_err(|_| bad("budget"))?),
            "reuse-stage1" => reuse_stage1 = value.parse().map_err(|_| bad("reuse-stage1"))?,
            other => return Err(parse_err(format!("unknown key `{other}`"))),
        }
    }

    let eps = eps.ok_or_else(|| HarnessError::ScenarioParse {
        line: 0,
        message: "missing eps".into(),
    })?;
    if trials < 1 {
        return Err(HarnessError::ScenarioParse {
            line: 0,
            message: "trials must be >= 1".into(),
        });
    }
    let dist = match (family, dist_path) {
        (Some(f), None) => crate::sampling::FamilySpec::parse(&f)
            .and_then(|s| s.realize())
            .map_err(|e| HarnessError::ScenarioParse {
                line: 0,
                message: e.to_string(),
            })?,
        (None, Some(path)) => {
            Distribution::load(&path).map_err(|e| HarnessError::ScenarioParse {
                line: 0,
                message: format!("loading `{path}`: {e}"),
            })?
        }
        _ => {
            return Err(HarnessError::ScenarioParse {
                line: 0,
                message: "need exactly one of `family` or `dist`".into(),
            })
        }
    };

    let procedure = match procedure_name.as_str() {
        "test" => {
            let mut config = TesterConfig {
                k3_override: k3,
                fresh_stage2: !reuse_stage1,
                sample_budget: budget,
                ..Default::default()
            };
            if let Some(k) = stage1_k {
                config.estimator.k_override = Some(k);
            } else if let Some(c) = c {
                // Stage-one collision target scaled by the tester's eps; the
                // literal ceil(c / delta^4) is not runnable at desk scale.
                config.estimator.k_override = Some((c / eps.powi(4)).ceil() as u128);
            }
            Procedure::Test { eps, config }
        }
        "estimate-l2" => {
            let mut config = EstimatorConfig::default();
            if let Some(c) = c {
                config.c_constant = c;
            }
            if let Some(k) = stage1_k {
                config.k_override = Some(k);
            }
            if budget.is_some() {
                config.sample_budget = budget;
            }
            Procedure::EstimateL2 { eps, config }
        }
        other => {
            return Err(HarnessError::ScenarioParse {
                line: 0,
                message: format!("unknown procedure `{other}`"),
            })
        }
    };

    Ok(Scenario {
        dist,
        procedure,
        trials,
        seed_base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_test_scenario(dist: Distribution, trials: u32, seed: u64) -> Scenario {
        Scenario {
            dist,
            procedure: Procedure::Test {
                eps: 0.5,
                config: TesterConfig {
                    estimator: EstimatorConfig {
                        k_override: Some(100),
                        ..Default::default()
                    },
                    k3_override: Some(200),
                    ..Default::default()
                },
            },
            trials,
            seed_base: seed,
        }
    }

    #[test]
    fn identical_scenarios_render_identical_csv() {
        let scenario = desk_test_scenario(Distribution::uniform(50), 40, 99);
        let a = render_csv(&run_trials(&scenario), &scenario.procedure);
        let b = render_csv(&run_trials(&scenario), &scenario.procedure);
        assert_eq!(a, b);
        assert!(a.lines().count() == 41);
    }

    #[test]
    fn accept_rate_times_trials_is_integral() {
        let scenario = desk_test_scenario(Distribution::uniform(30), 25, 3);
        let stats = run_trials(&scenario);
        let product = stats.accept_rate * stats.trials as f64;
        assert!((product - product.round()).abs() < 1e-9);
        assert_eq!(product.round() as u32, stats.accepts);
        assert!(stats.sample_p10 <= stats.sample_p50);
        assert!(stats.sample_p50 <= stats.sample_p90);
    }

    #[test]
    fn point_mass_estimator_trials_are_deterministic() {
        let scenario = Scenario {
            dist: Distribution::from_probs(&[1.0]).unwrap(),
            procedure: Procedure::EstimateL2 {
                eps: 0.25,
                config: EstimatorConfig {
                    k_override: Some(10),
                    ..Default::default()
                },
            },
            trials: 20,
            seed_base: 7,
        };
        let stats = run_trials(&scenario);
        assert_eq!(stats.failures, 0);
        for row in &stats.per_trial {
            match &row.outcome {
                TrialOutcome::Estimate(e) => {
                    assert_eq!(e.m, 5);
                    assert_eq!(e.gamma, 1.0);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let points: Vec<(f64, f64)> = [100.0f64, 1000.0, 10000.0]
            .iter()
            .map(|&n| (n.ln(), (n.powf(2.0 / 3.0)).ln()))
            .collect();
        let fit = fit_log_log(&points).unwrap();
        assert!((fit.slope - 2.0 / 3.0).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_handles_constant_y() {
        let points = vec![(1.0, 3.0), (2.0, 3.0), (3.0, 3.0)];
        let fit = fit_log_log(&points).unwrap();
        assert!(fit.slope.abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_degenerate_x() {
        let points = vec![(2.0, 1.0), (2.0, 5.0)];
        assert_eq!(
            fit_log_log(&points).unwrap_err(),
            HarnessError::DegenerateFit
        );
    }

    #[test]
    fn sweep_of_1000_random_distributions_is_clean() {
        let sweep = lemma_sweep(1000, 64, 0x5EED);
        assert_eq!(sweep.checked, 1000);
        assert!(
            sweep.violations.is_empty(),
            "violations: {:#?}",
            &sweep.violations[..sweep.violations.len().min(5)]
        );
        // The implication check must actually fire, not pass vacuously.
        assert!(
            sweep.bracket_checks > 50,
            "only {} bracket checks",
            sweep.bracket_checks
        );
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let scenario = desk_test_scenario(Distribution::uniform(60), 32, 77);
        let wide = render_csv(&run_trials(&scenario), &scenario.procedure);
        let narrow = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| render_csv(&run_trials(&scenario), &scenario.procedure));
        assert_eq!(wide, narrow);
    }

    #[test]
    fn scenario_file_roundtrip() {
        let text = "\
# tester scenario
family=uniform:n=100
procedure=test
eps=0.5
trials=10
seed=42
k3=200
stage1-k=100
";
        let scenario = parse_scenario(text.as_bytes()).unwrap();
        assert_eq!(scenario.trials, 10);
        assert_eq!(scenario.seed_base, 42);
        match &scenario.procedure {
            Procedure::Test { eps, config } => {
                assert_eq!(*eps, 0.5);
                assert_eq!(config.k3_override, Some(200));
                assert_eq!(config.estimator.k_override, Some(100));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scenario_file_errors_are_located() {
        let err = parse_scenario("family=uniform:n=10\nbogus\n".as_bytes()).unwrap_err();
        assert!(matches!(err, HarnessError::ScenarioParse { line: 2, .. }));
    }
}
