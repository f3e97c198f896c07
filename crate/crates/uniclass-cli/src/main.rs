//! `uniclass`: uniformity testing over unknown supports, from the shell.
//!
//! Exit codes are part of the interface so pipelines can branch on the
//! statistical verdict: 0 accept/success, 1 reject (or a failed
//! certification), 2 usage error, 3 runtime error (budget or stream).

use std::io::Write;
use std::process::ExitCode;

use uniclass::dist::Distribution;
use uniclass::estimator::{estimate_l2_squared, EstimatorConfig, RunError};
use uniclass::harness::{self, Scenario};
use uniclass::lowerbound::{max_indistinguishable_k, IndistinguishabilityReport};
use uniclass::sampling::{FamilySpec, StreamOracle, SyntheticOracle};
use uniclass::tester::{test_uniformity, Decision, TesterConfig};

const EXIT_ACCEPT: u8 = 0;
const EXIT_REJECT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

const USAGE: &str = "\
uniclass — test whether samples come from a distribution uniform on its own
(unknown, arbitrary) support, plus the collision machinery behind the test.

USAGE:
  uniclass <subcommand> [flags]

SUBCOMMANDS:
  test          two-stage uniformity tester (exit 0 accept, 1 reject)
  estimate-l2   adaptive estimate of the collision probability sum p_i^2
  lowerbound    search for the largest certifiably-indistinguishable budget
  gen-dist      realize a distribution family to a `label,prob` file
  experiment    run a scenario file of seeded parallel trials
  lemma-check   validate structural identities on random instances

SAMPLE SOURCES (test, estimate-l2):
  --family SPEC   synthetic sampling from a family, e.g. uniform:n=100,
                  bilevel:n=1000,f=0.1,t=0.9, zipf:n=50,s=1.2,
                  pointmassmix:n=20,h=0.5
  --dist FILE     synthetic sampling from a `label,prob` file
  --stdin         one sample token per line on standard input

FLAGS:
  test:        --eps R [--k3 N] [--c R] [--k1 N] [--budget N] [--seed N]
               [--reuse-stage1] [--json]
  estimate-l2: --eps R [--k N] [--c R] [--budget N] [--seed N] [--json]
  lowerbound:  (--family SPEC | --dist FILE) --kcap N [--jmax N]
  gen-dist:    --family SPEC --out FILE
  experiment:  --scenario FILE --out-csv FILE
  lemma-check: [--count N] [--max-points N] [--seed N]

Synthetic sampling uses a fixed, documented generator; runs are reproducible
given the seed. Randomized subcommands generate and print a seed when --seed
is not passed.

The tester's --c flag sets the stage-one collision target to ceil(c/eps^4)
at the tester's eps; the literal textbook constants are exposed as the
defaults but are not runnable at desk scale (see the guide). --k1 sets that
target directly.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some((subcommand, rest)) = args.split_first() else {
        eprint!("{USAGE}");
        return ExitCode::from(EXIT_USAGE);
    };
    let result = match subcommand.as_str() {
        "test" => cmd_test(rest),
        "estimate-l2" => cmd_estimate(rest),
        "lowerbound" => cmd_lowerbound(rest),
        "gen-dist" => cmd_gen_dist(rest),
        "experiment" => cmd_experiment(rest),
        "lemma-check" => cmd_lemma_check(rest),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            return ExitCode::from(EXIT_ACCEPT);
        }
        other => Err(CliError::Usage(format!("unknown subcommand `{other}`"))),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            eprintln!("run `uniclass --help` for the full flag list");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    fn runtime(message: impl std::fmt::Display) -> Self {
        CliError::Runtime(message.to_string())
    }
}

/// Minimal flag cursor: every flag is `--name` or `--name value`.
struct Flags {
    args: Vec<String>,
    used: Vec<bool>,
}

impl Flags {
    fn new(args: &[String]) -> Self {
        Self {
            args: args.to_vec(),
            used: vec![false; args.len()],
        }
    }

    fn take_flag(&mut self, name: &str) -> bool {
        for (i, arg) in self.args.iter().enumerate() {
            if !self.used[i] && arg == name {
                self.used[i] = true;
                return true;
            }
        }
        false
    }

    fn take_value(&mut self, name: &str) -> Result<Option<String>, CliError> {
        for (i, arg) in self.args.iter().enumerate() {
            if !self.used[i] && arg == name {
                self.used[i] = true;
                let value = self
                    .args
                    .get(i + 1)
                    .ok_or_else(|| CliError::usage(format!("missing value for {name}")))?;
                self.used[i + 1] = true;
                return Ok(Some(value.clone()));
            }
        }
        Ok(None)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, name: &str) -> Result<Option<T>, CliError> {
        match self.take_value(name)? {
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("bad value `{text}` for {name}"))),
            None => Ok(None),
        }
    }

    fn finish(&self) -> Result<(), CliError> {
        for (i, arg) in self.args.iter().enumerate() {
            if !self.used[i] {
                return Err(CliError::usage(format!("unrecognized argument `{arg}`")));
            }
        }
        Ok(())
    }
}

enum Source {
    Family(FamilySpec),
    DistFile(String),
    Stdin,
}

fn take_source(flags: &mut Flags) -> Result<Source, CliError> {
    let family = flags.take_value("--family")?;
    let dist = flags.take_value("--dist")?;
    let stdin = flags.take_flag("--stdin");
    match (family, dist, stdin) {
        (Some(spec), None, false) => Ok(Source::Family(
            FamilySpec::parse(&spec).map_err(|e| CliError::usage(e.to_string()))?,
        )),
        (None, Some(path), false) => Ok(Source::DistFile(path)),
        (None, None, true) => Ok(Source::Stdin),
        _ => Err(CliError::usage(
            "need exactly one of --family SPEC, --dist FILE, --stdin",
        )),
    }
}

fn load_source_dist(source: &Source) -> Result<Distribution, CliError> {
    match source {
        Source::Family(spec) => spec.realize().map_err(|e| CliError::usage(e.to_string())),
        Source::DistFile(path) => Distribution::load(path).map_err(CliError::runtime),
        Source::Stdin => unreachable!("synthetic sources only"),
    }
}

/// Returns the seed to use, generating and announcing one if absent.
fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(seed) => seed,
        None => {
            let nanos = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            let seed = nanos ^ (std::process::id() as u64).rotate_left(32);
            eprintln!("seed: {seed} (generated; pass --seed {seed} to reproduce)");
            seed
        }
    }
}

fn runtime_exit(err: RunError) -> CliError {
    CliError::Runtime(match err {
        RunError::InsufficientSamples { drawn, s2, t3 } => format!(
            "InsufficientSamples: stream ended after {drawn} samples \
             (pair collisions {s2}, 3-way {t3})"
        ),
        other => other.to_string(),
    })
}

fn cmd_test(args: &[String]) -> Result<u8, CliError> {
    let mut flags = Flags::new(args);
    let source = take_source(&mut flags)?;
    let eps: f64 = flags
        .take_parsed("--eps")?
        .ok_or_else(|| CliError::usage("--eps is required (0 < eps < 0.5)"))?;
    let k3: Option<u128> = flags.take_parsed("--k3")?;
    let c: Option<f64> = flags.take_parsed("--c")?;
    let k1: Option<u128> = flags.take_parsed("--k1")?;
    let budget: Option<u64> = flags.take_parsed("--budget")?;
    let seed: Option<u64> = flags.take_parsed("--seed")?;
    let reuse = flags.take_flag("--reuse-stage1");
    let json = flags.take_flag("--json");
    flags.finish()?;

    let mut config = TesterConfig {
        k3_override: k3,
        fresh_stage2: !reuse,
        sample_budget: budget,
        ..Default::default()
    };
    if let Some(k1) = k1 {
        config.estimator.k_override = Some(k1);
    } else if let Some(c) = c {
        if c <= 0.0 {
            return Err(CliError::usage("--c must be positive"));
        }
        config.estimator.k_override = Some((c / eps.powi(4)).ceil() as u128);
    }

    let verdict = match &source {
        Source::Stdin => {
            let stdin = std::io::stdin();
            let oracle = StreamOracle::new(stdin.lock());
            test_uniformity(oracle, eps, &config)
        }
        synthetic => {
            let dist = load_source_dist(synthetic)?;
            let seed = resolve_seed(seed);
            let oracle = SyntheticOracle::new(&dist, seed);
            test_uniformity(oracle, eps, &config)
        }
    }
    .map_err(runtime_exit)?;

    if json {
        println!(
            "{}",
            serde_json::to_string(&verdict).map_err(CliError::runtime)?
        );
    } else {
        let word = match verdict.decision {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        };
        println!(
            "{word}: N≈{:.4}, stage1={} samples, stage2={}/{} samples, t3={} (budget {})",
            verdict.n_estimate,
            verdict.stage1_samples,
            verdict.stage2_samples,
            verdict.m_budget,
            verdict.t3_final,
            verdict.k3_used
        );
    }
    Ok(match verdict.decision {
        Decision::Accept => EXIT_ACCEPT,
        Decision::Reject => EXIT_REJECT,
    })
}

fn cmd_estimate(args: &[String]) -> Result<u8, CliError> {
    let mut flags = Flags::new(args);
    let source = take_source(&mut flags)?;
    let eps: f64 = flags
        .take_parsed("--eps")?
        .ok_or_else(|| CliError::usage("--eps is required (0 < eps < 0.5)"))?;
    let k: Option<u128> = flags.take_parsed("--k")?;
    let c: Option<f64> = flags.take_parsed("--c")?;
    let budget: Option<u64> = flags.take_parsed("--budget")?;
    let seed: Option<u64> = flags.take_parsed("--seed")?;
    let json = flags.take_flag("--json");
    flags.finish()?;

    let mut config = EstimatorConfig {
        k_override: k,
        ..Default::default()
    };
    if let Some(c) = c {
        if c <= 0.0 {
            return Err(CliError::usage("--c must be positive"));
        }
        config.c_constant = c;
    }
    if budget.is_some() {
        config.sample_budget = budget;
    }

    let estimate = match &source {
        Source::Stdin => {
            let stdin = std::io::stdin();
            estimate_l2_squared(StreamOracle::new(stdin.lock()), eps, &config)
        }
        synthetic => {
            let dist = load_source_dist(synthetic)?;
            let seed = resolve_seed(seed);
            estimate_l2_squared(SyntheticOracle::new(&dist, seed), eps, &config)
        }
    }
    .map_err(runtime_exit)?;

    if json {
        println!(
            "{}",
            serde_json::to_string(&estimate).map_err(CliError::runtime)?
        );
    } else {
        println!(
            "gamma={} (m={} samples, k={} collisions, s2={})",
            estimate.gamma, estimate.m, estimate.k, estimate.s2_final
        );
    }
    Ok(EXIT_ACCEPT)
}

fn cmd_lowerbound(args: &[String]) -> Result<u8, CliError> {
    let mut flags = Flags::new(args);
    let source = take_source(&mut flags)?;
    let k_cap: u64 = flags
        .take_parsed("--kcap")?
        .ok_or_else(|| CliError::usage("--kcap is required"))?;
    let j_max: Option<u32> = flags.take_parsed("--jmax")?;
    flags.finish()?;
    if matches!(source, Source::Stdin) {
        return Err(CliError::usage("lowerbound needs --family or --dist"));
    }
    if k_cap < 1 {
        return Err(CliError::usage("--kcap must be at least 1"));
    }

    let q = load_source_dist(&source)?;
    let search = max_indistinguishable_k(&q, k_cap, j_max);

    let mut out = String::from("k,linf_ok,discrepancy,tail,passes\n");
    for report in &search.evaluated {
        out.push_str(&render_report_row(report));
    }
    print!("{out}");
    let _ = std::io::stdout().flush();

    match &search.best {
        Some(best) => {
            eprintln!(
                "largest passing k = {} (discrepancy {} + tail {} < 1/24, monotone grid: {})",
                best.k, best.discrepancy, best.tail, search.monotone
            );
            Ok(EXIT_ACCEPT)
        }
        None => {
            eprintln!("no passing k (even k = 1 fails the certification conditions)");
            Ok(EXIT_REJECT)
        }
    }
}

fn render_report_row(report: &IndistinguishabilityReport) -> String {
    format!(
        "{},{},{},{},{}\n",
        report.k, report.linf_ok, report.discrepancy, report.tail, report.passes
    )
}

fn cmd_gen_dist(args: &[String]) -> Result<u8, CliError> {
    let mut flags = Flags::new(args);
    let spec_text = flags
        .take_value("--family")?
        .ok_or_else(|| CliError::usage("--family SPEC is required"))?;
    let out = flags
        .take_value("--out")?
        .ok_or_else(|| CliError::usage("--out FILE is required"))?;
    flags.finish()?;

    let spec = FamilySpec::parse(&spec_text).map_err(|e| CliError::usage(e.to_string()))?;
    let dist = spec.realize().map_err(|e| CliError::usage(e.to_string()))?;
    dist.save(&out).map_err(CliError::runtime)?;
    eprintln!("wrote {} entries to {out}", dist.len());
    Ok(EXIT_ACCEPT)
}

fn cmd_experiment(args: &[String]) -> Result<u8, CliError> {
    let mut flags = Flags::new(args);
    let scenario_path = flags
        .take_value("--scenario")?
        .ok_or_else(|| CliError::usage("--scenario FILE is required"))?;
    let csv_path = flags
        .take_value("--out-csv")?
        .ok_or_else(|| CliError::usage("--out-csv FILE is required"))?;
    flags.finish()?;

    let file = std::fs::File::open(&scenario_path).map_err(CliError::runtime)?;
    let scenario: Scenario =
        harness::parse_scenario(std::io::BufReader::new(file)).map_err(CliError::runtime)?;
    let stats = harness::run_trials(&scenario);
    let csv = harness::render_csv(&stats, &scenario.procedure);
    std::fs::write(&csv_path, csv).map_err(CliError::runtime)?;
    println!(
        "{}",
        serde_json::to_string(&stats).map_err(CliError::runtime)?
    );
    Ok(EXIT_ACCEPT)
}

fn cmd_lemma_check(args: &[String]) -> Result<u8, CliError> {
    let mut flags = Flags::new(args);
    let count: u32 = flags.take_parsed("--count")?.unwrap_or(1000);
    let max_points: usize = flags.take_parsed("--max-points")?.unwrap_or(64);
    let seed: Option<u64> = flags.take_parsed("--seed")?;
    flags.finish()?;
    if max_points == 0 || max_points > 64 {
        return Err(CliError::usage("--max-points must be in 1..=64"));
    }

    let seed = resolve_seed(seed);
    let sweep = harness::lemma_sweep(count, max_points, seed);
    if sweep.violations.is_empty() {
        println!(
            "checked {} random distributions (max {} points, seed {seed}): no violations \
             ({} non-vacuous norm-bracket instances)",
            sweep.checked, max_points, sweep.bracket_checks
        );
        Ok(EXIT_ACCEPT)
    } else {
        println!(
            "checked {} random distributions (seed {seed}): {} VIOLATIONS",
            sweep.checked,
            sweep.violations.len()
        );
        for v in &sweep.violations {
            println!(
                "  index {} seed {}: {} — {}",
                v.index, v.seed, v.check, v.detail
            );
        }
        Ok(EXIT_REJECT)
    }
}
