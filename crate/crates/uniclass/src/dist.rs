//! Exact arithmetic on explicit finite distributions.
//!
//! A [`Distribution`] is an ordered list of `(label, probability)` pairs over
//! opaque string labels. Nothing in this crate assumes labels are integers or
//! carry any order; the only structure used anywhere is equality. This module
//! provides the exact quantities the sample-based procedures are validated
//! against: power-sum norms, total variation distance, and the exact distance
//! to the class of distributions that are uniform on some label set.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::accum::{self, Sum};

/// Accepted slack on the total mass of raw input; inputs within this are
/// renormalized so stored distributions sum to 1 up to a few ulps.
pub const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("label `{label}` has negative or non-finite probability {prob}")]
    NegativeMass { label: String, prob: f64 },
    #[error("probabilities sum to {sum}, expected 1 within {MASS_TOLERANCE}")]
    MassNotOne { sum: f64 },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("s_max must be at least 1")]
    InvalidSMax,
    #[error("eps and delta must both lie strictly inside (0, 0.04), got eps={eps}, delta={delta}")]
    HypothesisOutOfRange { eps: f64, delta: f64 },
}

#[derive(Debug, Error)]
pub enum DistFileError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected `label,prob` with a decimal prob, got `{content}`")]
    Parse { line: usize, content: String },
    #[error(transparent)]
    Invalid(#[from] DistError),
}

/// An explicit finite distribution over opaque labels.
///
/// Invariants enforced at construction: labels pairwise distinct, all
/// probabilities nonnegative and finite, total mass within [`MASS_TOLERANCE`]
/// of 1 before renormalization. Zero-probability entries are allowed; they
/// matter for constructions that place mass on fresh labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates raw entries and renormalizes the total mass. Entry order is
    /// preserved.
    pub fn new<I, S>(entries: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut labels = Vec::new();
        let mut probs = Vec::new();
        let mut seen = HashSet::new();
        for (label, prob) in entries {
            let label = label.into();
            if !prob.is_finite() || prob < 0.0 {
                return Err(DistError::NegativeMass { label, prob });
            }
            if !seen.insert(label.clone()) {
                return Err(DistError::DuplicateLabel(label));
            }
            labels.push(label);
            probs.push(prob);
        }
        let sum = accum::sum(probs.iter().copied());
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(DistError::MassNotOne { sum });
        }
        // Renormalize only meaningful drift; ulp-level residue is left
        // alone so that write/read round trips are bit-exact.
        if (sum - 1.0).abs() > 1e-12 {
            for p in &mut probs {
                *p /= sum;
            }
        }
        Ok(Self { labels, probs })
    }

    /// Uniform distribution on `n` labels `x0..x{n-1}`.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one label");
        let p = 1.0 / n as f64;
        Self {
            labels: (0..n).map(|i| format!("x{i}")).collect(),
            probs: vec![p; n],
        }
    }

    /// Builds from bare probabilities with synthetic labels `x0..`; intended
    /// for tests and examples.
    pub fn from_probs(probs: &[f64]) -> Result<Self, DistError> {
        Self::new(probs.iter().enumerate().map(|(i, &p)| (format!("x{i}"), p)))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.probs.iter().copied())
    }

    /// Number of labels carrying strictly positive mass.
    pub fn positive_support(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Entry indices sorted by descending probability, ties kept in entry
    /// order. All deterministic summations in this module run in this order.
    pub(crate) fn descending_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.probs.len()).collect();
        idx.sort_by(|&a, &b| {
            self.probs[b]
                .partial_cmp(&self.probs[a])
                .expect("probabilities are finite")
                .then(a.cmp(&b))
        });
        idx
    }

    /// Writes the `label,prob` text format, one entry per line.
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (label, prob) in self.iter() {
            writeln!(w, "{label},{prob}")?;
        }
        Ok(())
    }

    /// Reads the `label,prob` text format. Lines starting with `#` and blank
    /// lines are ignored; the label is everything before the first comma.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self, DistFileError> {
        let mut entries = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (label, prob) = trimmed
                .split_once(',')
                .ok_or_else(|| DistFileError::Parse {
                    line: lineno + 1,
                    content: trimmed.to_string(),
                })?;
            let prob: f64 = prob.trim().parse().map_err(|_| DistFileError::Parse {
                line: lineno + 1,
                content: trimmed.to_string(),
            })?;
            entries.push((label.to_string(), prob));
        }
        Ok(Self::new(entries)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DistFileError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)
    }
}

/// Power-sum norms of a distribution: `j_norms[j]` holds `sum_i p_i^j`, so
/// `l2_sq` is the collision probability and `l3_cubed` the 3-way collision
/// probability.
#[derive(Clone, Debug)]
pub struct NormSummary {
    pub l1: f64,
    pub l2_sq: f64,
    pub l3_cubed: f64,
    pub j_norms: BTreeMap<u32, f64>,
    pub linf: f64,
}

/// Exact power sums `sum p_i^j` for `1 <= j <= j_max` plus the sup norm,
/// accumulated in descending-probability order for reproducibility.
pub fn norms(p: &Distribution, j_max: u32) -> NormSummary {
    assert!(j_max >= 3, "norms requires j_max >= 3");
    let order = p.descending_order();
    let mut j_norms = BTreeMap::new();
    for j in 1..=j_max {
        let mut acc = Sum::new();
        for &i in &order {
            acc.add(p.probs()[i].powi(j as i32));
        }
        j_norms.insert(j, acc.value());
    }
    let linf = order.first().map_or(0.0, |&i| p.probs()[i]);
    NormSummary {
        l1: j_norms[&1],
        l2_sq: j_norms[&2],
        l3_cubed: j_norms[&3],
        j_norms,
        linf,
    }
}

/// `sum p_i^3 - (sum p_i^2)^2`: zero (within 1e-12) exactly when `p` is
/// uniform on its positive-mass labels, strictly positive otherwise.
pub fn uniformity_gap(p: &Distribution) -> f64 {
    let order = p.descending_order();
    let mut sq = Sum::new();
    let mut cu = Sum::new();
    for &i in &order {
        let v = p.probs()[i];
        sq.add(v * v);
        cu.add(v * v * v);
    }
    let l2_sq = sq.value();
    cu.value() - l2_sq * l2_sq
}

/// Total variation distance `0.5 * sum |p(x) - q(x)|` over the label union.
/// Labels missing from one side count with probability zero.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> f64 {
    let q_index: HashMap<&str, usize> = q
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let p_labels: HashSet<&str> = p.labels().iter().map(String::as_str).collect();

    let mut acc = Sum::new();
    for (label, prob) in p.iter() {
        let qp = q_index.get(label).map_or(0.0, |&i| q.probs()[i]);
        acc.add((prob - qp).abs());
    }
    for (label, prob) in q.iter() {
        if !p_labels.contains(label) {
            acc.add(prob);
        }
    }
    0.5 * acc.value()
}

/// Exact distance from `p` to the class of uniform distributions, with the
/// minimizing support.
#[derive(Clone, Debug)]
pub struct UniformClassDistance {
    pub distance: f64,
    pub best_support_size: usize,
    pub best_support: Vec<String>,
}

/// Exact minimum of `tv_distance(p, uniform(S))` over all label sets `S` with
/// `1 <= |S| <= s_max` (default `s_max`: twice the positive support).
///
/// Uses the identity `d_TV(p, u_S) = 1 - sum_{i in S} min(p_i, 1/|S|)`: for a
/// fixed size `s` the sum is maximized by the `s` most probable labels, so
/// only support sizes need scanning. Sizes beyond the positive support pad
/// `S` with fresh zero-mass labels; each `min(p_i, 1/s)` is non-increasing in
/// `s` once every positive label is included, so the padded range can never
/// beat the best unpadded size and is skipped in the scan.
pub fn tv_to_uniform_class(
    p: &Distribution,
    s_max: Option<usize>,
) -> Result<UniformClassDistance, DistError> {
    let positive = p.positive_support().max(1);
    let s_max = s_max.unwrap_or(2 * positive);
    if s_max < 1 {
        return Err(DistError::InvalidSMax);
    }

    let order = p.descending_order();
    let sorted: Vec<f64> = order.iter().map(|&i| p.probs()[i]).collect();

    let scan_to = s_max.min(positive);
    let mut best_d = f64::INFINITY;
    let mut best_s = 1usize;
    for s in 1..=scan_to {
        let inv = 1.0 / s as f64;
        // Entries with p >= 1/s contribute 1/s, the rest contribute p.
        let crossover = sorted[..s].partition_point(|&v| v >= inv);
        let mut acc = Sum::new();
        for _ in 0..crossover {
            acc.add(inv);
        }
        for &v in &sorted[crossover..s] {
            acc.add(v);
        }
        let d = 1.0 - acc.value();
        if d < best_d {
            best_d = d;
            best_s = s;
        }
    }

    let best_support = order[..best_s.min(order.len())]
        .iter()
        .map(|&i| p.labels()[i].clone())
        .collect();
    Ok(UniformClassDistance {
        distance: best_d.clamp(0.0, 1.0),
        best_support_size: best_s,
        best_support,
    })
}

/// Distance bound `9 * (delta + 3*eps)^(1/3)` implied by near-uniform second
/// and third moments. Valid for `0 < eps, delta < 0.04`; the returned value
/// may exceed 1, in which case it is vacuous; callers clamp for display.
pub fn norms_to_distance_bound(eps: f64, delta: f64) -> Result<f64, DistError> {
    if !(eps > 0.0 && eps < 0.04) || !(delta > 0.0 && delta < 0.04) {
        return Err(DistError::HypothesisOutOfRange { eps, delta });
    }
    Ok(9.0 * (delta + 3.0 * eps).cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_accepts_half_half() {
        let d = Distribution::new([("a", 0.5), ("b", 0.5)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.label(0), "a");
    }

    #[test]
    fn validate_rejects_duplicate_label() {
        let err = Distribution::new([("a", 0.5), ("a", 0.5)]).unwrap_err();
        assert_eq!(err, DistError::DuplicateLabel("a".into()));
    }

    #[test]
    fn validate_rejects_bad_mass() {
        let err = Distribution::new([("a", 0.3), ("b", 0.3)]).unwrap_err();
        assert!(matches!(err, DistError::MassNotOne { .. }));
        let err = Distribution::new([("a", -0.1), ("b", 1.1)]).unwrap_err();
        assert!(matches!(err, DistError::NegativeMass { .. }));
    }

    #[test]
    fn validate_renormalizes_within_tolerance() {
        let d = Distribution::new([("a", 0.5000001), ("b", 0.5)]).unwrap();
        let total: f64 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_keeps_zero_entries() {
        let d = Distribution::new([("a", 1.0), ("b", 0.0)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.positive_support(), 1);
    }

    #[test]
    fn norms_of_uniform_four() {
        let n = norms(&Distribution::uniform(4), 4);
        assert!((n.l2_sq - 0.25).abs() < 1e-15);
        assert!((n.l3_cubed - 0.0625).abs() < 1e-15);
        assert!((n.linf - 0.25).abs() < 1e-15);
        assert!((n.l1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norms_of_point_mass() {
        let n = norms(&Distribution::from_probs(&[1.0]).unwrap(), 5);
        assert_eq!(n.l2_sq, 1.0);
        assert_eq!(n.l3_cubed, 1.0);
        assert_eq!(n.linf, 1.0);
    }

    #[test]
    fn norms_against_naive_loop() {
        // Independent naive computation over the entry order.
        let d = Distribution::from_probs(&[0.5, 0.25, 0.25]).unwrap();
        let n = norms(&d, 3);
        let naive2: f64 = d.probs().iter().map(|p| p * p).sum();
        let naive3: f64 = d.probs().iter().map(|p| p * p * p).sum();
        assert!((n.l2_sq - naive2).abs() < 1e-15);
        assert!((n.l3_cubed - naive3).abs() < 1e-15);
        assert!((n.l2_sq - 0.375).abs() < 1e-15);
        assert!((n.l3_cubed - 0.15625).abs() < 1e-15);
    }

    #[test]
    fn gap_zero_on_uniform_and_point_mass() {
        assert!(uniformity_gap(&Distribution::uniform(10)).abs() <= 1e-12);
        assert!(uniformity_gap(&Distribution::from_probs(&[1.0]).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn gap_of_60_40() {
        let d = Distribution::from_probs(&[0.6, 0.4]).unwrap();
        // 0.28 - 0.2704 by hand.
        assert!((uniformity_gap(&d) - 0.0096).abs() < 1e-12);
    }

    #[test]
    fn tv_basics() {
        let p = Distribution::new([("a", 0.6), ("b", 0.4)]).unwrap();
        let q = Distribution::new([("a", 0.5), ("b", 0.5)]).unwrap();
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert!((tv_distance(&p, &q) - 0.1).abs() < 1e-15);

        let disjoint_p = Distribution::new([("a", 1.0)]).unwrap();
        let disjoint_q = Distribution::new([("b", 1.0)]).unwrap();
        assert_eq!(tv_distance(&disjoint_p, &disjoint_q), 1.0);
    }

    #[test]
    fn class_distance_examples() {
        let u7 = tv_to_uniform_class(&Distribution::uniform(7), None).unwrap();
        assert!(u7.distance.abs() <= 1e-12);
        assert_eq!(u7.best_support_size, 7);

        // 0.6/0.4: s=1 gives 0.4, s=2 gives 0.1, s=3 gives 1/3.
        let p = Distribution::from_probs(&[0.6, 0.4]).unwrap();
        let d = tv_to_uniform_class(&p, None).unwrap();
        assert!((d.distance - 0.1).abs() < 1e-15);
        assert_eq!(d.best_support_size, 2);

        // 0.9/0.1: best is the singleton at distance 0.1.
        let p = Distribution::from_probs(&[0.9, 0.1]).unwrap();
        let d = tv_to_uniform_class(&p, None).unwrap();
        assert!((d.distance - 0.1).abs() < 1e-15);
        assert_eq!(d.best_support_size, 1);
    }

    #[test]
    fn class_distance_rejects_zero_smax() {
        let err = tv_to_uniform_class(&Distribution::uniform(3), Some(0)).unwrap_err();
        assert_eq!(err, DistError::InvalidSMax);
    }

    #[test]
    fn distance_bound_values() {
        let b = norms_to_distance_bound(0.001, 0.001).unwrap();
        assert!((b - 9.0 * 0.004f64.cbrt()).abs() < 1e-12);
        assert!((b - 1.4289).abs() < 1e-3);
        // Boundary excluded.
        assert!(norms_to_distance_bound(0.04, 0.001).is_err());
        assert!(norms_to_distance_bound(0.001, 0.0).is_err());
        // Limit case: the bound vanishes with its arguments.
        assert!(norms_to_distance_bound(1e-15, 1e-15).unwrap() < 1e-3);
    }

    #[test]
    fn file_roundtrip_with_comments() {
        let d = Distribution::new([("alpha", 0.25), ("beta:2", 0.75)]).unwrap();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        let text = format!("# comment\n\n{}", String::from_utf8(buf).unwrap());
        let back = Distribution::read_from(text.as_bytes()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn file_parse_error_reports_line() {
        let err = Distribution::read_from("a,0.5\nnocomma\n".as_bytes()).unwrap_err();
        match err {
            DistFileError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
