//! Synthetic distribution families used in experiments.
//!
//! Each family realizes to an explicit [`Distribution`], so every sampled
//! experiment can be cross-checked against exact arithmetic. Bilevel and
//! point-mass-mix additionally expose closed-form second and third power
//! sums for the cross-checks.

use crate::accum::Sum;
use crate::dist::Distribution;

use super::SampleError;

/// A parametric family of explicit distributions.
///
/// Serialized CLI form: `family:param=value,...`, e.g.
/// `bilevel:n=1000,f=0.1,t=0.9`.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    /// `uniform(n)`: probability `1/n` on each of `n` labels.
    Uniform { n: usize },
    /// `bilevel(n, f, t)`: a fraction `f` of the `n` labels are "heavy" with
    /// probability `(1+t)/n` each; the rest share the remaining mass evenly.
    /// Requires `f*(1+t) < 1`.
    Bilevel {
        n: usize,
        heavy_fraction: f64,
        tilt: f64,
    },
    /// `zipf(n, s)`: probability proportional to `1/rank^s`.
    Zipf { n: usize, exponent: f64 },
    /// `pointmassmix(n, h)`: one label with mass `h`, the other `n-1` labels
    /// sharing `1-h` evenly.
    PointMassMix { n: usize, head_mass: f64 },
}

impl FamilySpec {
    /// Parses the `family:param=value,...` CLI form.
    pub fn parse(text: &str) -> Result<Self, SampleError> {
        let bad = |msg: &str| SampleError::BadFamilyParams(format!("{msg} in `{text}`"));
        let (name, params) = match text.split_once(':') {
            Some((name, params)) => (name, params),
            None => (text, ""),
        };
        let mut n: Option<usize> = None;
        let mut f: Option<f64> = None;
        let mut t: Option<f64> = None;
        let mut s: Option<f64> = None;
        let mut h: Option<f64> = None;
        for part in params.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad("expected `key=value`"))?;
            match key.trim() {
                "n" => n = Some(value.trim().parse().map_err(|_| bad("bad n"))?),
                "f" | "heavy_fraction" => f = Some(value.trim().parse().map_err(|_| bad("bad f"))?),
                "t" | "tilt" => t = Some(value.trim().parse().map_err(|_| bad("bad t"))?),
                "s" | "exponent" => s = Some(value.trim().parse().map_err(|_| bad("bad s"))?),
                "h" | "head" | "head_mass" => {
                    h = Some(value.trim().parse().map_err(|_| bad("bad h"))?)
                }
                other => return Err(bad(&format!("unknown parameter `{other}`"))),
            }
        }
        let need_n = n.ok_or_else(|| bad("missing n"));
        match name.trim() {
            "uniform" => Ok(FamilySpec::Uniform { n: need_n? }),
            "bilevel" => Ok(FamilySpec::Bilevel {
                n: need_n?,
                heavy_fraction: f.ok_or_else(|| bad("missing f"))?,
                tilt: t.ok_or_else(|| bad("missing t"))?,
            }),
            "zipf" => Ok(FamilySpec::Zipf {
                n: need_n?,
                exponent: s.ok_or_else(|| bad("missing s"))?,
            }),
            "pointmassmix" => Ok(FamilySpec::PointMassMix {
                n: need_n?,
                head_mass: h.ok_or_else(|| bad("missing h"))?,
            }),
            other => Err(bad(&format!("unknown family `{other}`"))),
        }
    }

    /// Canonical CLI form of the spec.
    pub fn to_cli_string(&self) -> String {
        match self {
            FamilySpec::Uniform { n } => format!("uniform:n={n}"),
            FamilySpec::Bilevel {
                n,
                heavy_fraction,
                tilt,
            } => format!("bilevel:n={n},f={heavy_fraction},t={tilt}"),
            FamilySpec::Zipf { n, exponent } => format!("zipf:n={n},s={exponent}"),
            FamilySpec::PointMassMix { n, head_mass } => {
                format!("pointmassmix:n={n},h={head_mass}")
            }
        }
    }

    /// Number of heavy labels for a bilevel spec: `round(f * n)`.
    pub fn bilevel_heavy_count(n: usize, heavy_fraction: f64) -> usize {
        (heavy_fraction * n as f64).round() as usize
    }

    /// Builds the explicit distribution. Labels are `x0..x{n-1}`, heavy or
    /// head labels first.
    pub fn realize(&self) -> Result<Distribution, SampleError> {
        let bad = |msg: String| SampleError::BadFamilyParams(msg);
        match *self {
            FamilySpec::Uniform { n } => {
                if n == 0 {
                    return Err(bad("uniform needs n >= 1".into()));
                }
                Ok(Distribution::uniform(n))
            }
            FamilySpec::Bilevel {
                n,
                heavy_fraction,
                tilt,
            } => {
                if n < 2 {
                    return Err(bad("bilevel needs n >= 2".into()));
                }
                if !(0.0..1.0).contains(&heavy_fraction) || heavy_fraction <= 0.0 {
                    return Err(bad(format!(
                        "bilevel needs 0 < f < 1, got {heavy_fraction}"
                    )));
                }
                if tilt <= -1.0 {
                    return Err(bad(format!("bilevel needs t > -1, got {tilt}")));
                }
                if heavy_fraction * (1.0 + tilt) >= 1.0 {
                    return Err(bad(format!(
                        "bilevel needs f*(1+t) < 1, got {}",
                        heavy_fraction * (1.0 + tilt)
                    )));
                }
                let heavy = Self::bilevel_heavy_count(n, heavy_fraction);
                if heavy == 0 || heavy >= n {
                    return Err(bad(format!(
                        "bilevel heavy count round(f*n) = {heavy} must be in 1..n"
                    )));
                }
                let heavy_prob = (1.0 + tilt) / n as f64;
                let heavy_mass = heavy as f64 * heavy_prob;
                if heavy_mass >= 1.0 {
                    return Err(bad(format!(
                        "bilevel heavy tier mass {heavy_mass} must be < 1"
                    )));
                }
                let light_prob = (1.0 - heavy_mass) / (n - heavy) as f64;
                let probs = (0..n).map(|i| if i < heavy { heavy_prob } else { light_prob });
                Ok(
                    Distribution::new(probs.enumerate().map(|(i, p)| (format!("x{i}"), p)))
                        .expect("bilevel construction sums to 1"),
                )
            }
            FamilySpec::Zipf { n, exponent } => {
                if n == 0 {
                    return Err(bad("zipf needs n >= 1".into()));
                }
                if !exponent.is_finite() || exponent < 0.0 {
                    return Err(bad(format!(
                        "zipf needs a finite exponent >= 0, got {exponent}"
                    )));
                }
                let mut norm = Sum::new();
                let weights: Vec<f64> = (1..=n).map(|rank| (rank as f64).powf(-exponent)).collect();
                for &w in &weights {
                    norm.add(w);
                }
                let z = norm.value();
                Ok(Distribution::new(
                    weights
                        .iter()
                        .enumerate()
                        .map(|(i, &w)| (format!("x{i}"), w / z)),
                )
                .expect("zipf construction sums to 1"))
            }
            FamilySpec::PointMassMix { n, head_mass } => {
                if n == 0 {
                    return Err(bad("pointmassmix needs n >= 1".into()));
                }
                if !(0.0..=1.0).contains(&head_mass) {
                    return Err(bad(format!(
                        "pointmassmix needs 0 <= h <= 1, got {head_mass}"
                    )));
                }
                if n == 1 {
                    if (head_mass - 1.0).abs() > 1e-12 {
                        return Err(bad("pointmassmix with n=1 needs h=1".into()));
                    }
                    return Ok(Distribution::uniform(1));
                }
                let tail = (1.0 - head_mass) / (n - 1) as f64;
                let probs = (0..n).map(|i| if i == 0 { head_mass } else { tail });
                Ok(
                    Distribution::new(probs.enumerate().map(|(i, p)| (format!("x{i}"), p)))
                        .expect("pointmassmix construction sums to 1"),
                )
            }
        }
    }

    /// Closed-form `(sum p^2, sum p^3)` where the family admits one.
    pub fn closed_form_norms(&self) -> Option<(f64, f64)> {
        match *self {
            FamilySpec::Uniform { n } => {
                let n = n as f64;
                Some((1.0 / n, 1.0 / (n * n)))
            }
            FamilySpec::Bilevel {
                n,
                heavy_fraction,
                tilt,
            } => {
                let heavy = Self::bilevel_heavy_count(n, heavy_fraction) as f64;
                let nf = n as f64;
                let a = (1.0 + tilt) / nf;
                let b = (1.0 - heavy * a) / (nf - heavy);
                Some((
                    heavy * a * a + (nf - heavy) * b * b,
                    heavy * a * a * a + (nf - heavy) * b * b * b,
                ))
            }
            FamilySpec::PointMassMix { n, head_mass } => {
                if n == 1 {
                    return Some((1.0, 1.0));
                }
                let tail = (1.0 - head_mass) / (n - 1) as f64;
                let rest = (n - 1) as f64;
                Some((
                    head_mass * head_mass + rest * tail * tail,
                    head_mass * head_mass * head_mass + rest * tail * tail * tail,
                ))
            }
            FamilySpec::Zipf { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::norms;

    #[test]
    fn uniform_four() {
        let d = FamilySpec::Uniform { n: 4 }.realize().unwrap();
        assert!(d.probs().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn bilevel_boundary_rejected_and_interior_accepted() {
        // f*(1+t) = 1 exactly: rejected.
        let boundary = FamilySpec::Bilevel {
            n: 4,
            heavy_fraction: 0.5,
            tilt: 1.0,
        };
        assert!(boundary.realize().is_err());

        let d = FamilySpec::Bilevel {
            n: 4,
            heavy_fraction: 0.5,
            tilt: 0.9,
        }
        .realize()
        .unwrap();
        assert!((d.probs()[0] - 0.475).abs() < 1e-15);
        assert!((d.probs()[1] - 0.475).abs() < 1e-15);
        assert!((d.probs()[2] - 0.025).abs() < 1e-12);
        assert!((d.probs()[3] - 0.025).abs() < 1e-12);
    }

    #[test]
    fn zipf_harmonic_normalization() {
        let d = FamilySpec::Zipf {
            n: 3,
            exponent: 1.0,
        }
        .realize()
        .unwrap();
        assert!((d.probs()[0] - 6.0 / 11.0).abs() < 1e-12);
        assert!((d.probs()[1] - 3.0 / 11.0).abs() < 1e-12);
        assert!((d.probs()[2] - 2.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_exact_norms() {
        let specs = [
            FamilySpec::Uniform { n: 100 },
            FamilySpec::Bilevel {
                n: 1000,
                heavy_fraction: 0.1,
                tilt: 0.9,
            },
            FamilySpec::PointMassMix {
                n: 50,
                head_mass: 0.35,
            },
        ];
        for spec in specs {
            let d = spec.realize().unwrap();
            let n = norms(&d, 3);
            let (l2, l3) = spec.closed_form_norms().unwrap();
            assert!(
                (n.l2_sq - l2).abs() <= 1e-12 * l2.max(1.0),
                "{spec:?}: {} vs {}",
                n.l2_sq,
                l2
            );
            assert!(
                (n.l3_cubed - l3).abs() <= 1e-12 * l3.max(1.0),
                "{spec:?}: {} vs {}",
                n.l3_cubed,
                l3
            );
        }
    }

    #[test]
    fn parse_roundtrip() {
        for text in [
            "uniform:n=100",
            "bilevel:n=1000,f=0.1,t=0.9",
            "zipf:n=3,s=1",
            "pointmassmix:n=50,h=0.35",
        ] {
            let spec = FamilySpec::parse(text).unwrap();
            let again = FamilySpec::parse(&spec.to_cli_string()).unwrap();
            assert_eq!(spec, again);
        }
        assert!(FamilySpec::parse("nosuch:n=3").is_err());
        assert!(FamilySpec::parse("uniform:m=3").is_err());
        assert!(FamilySpec::parse("bilevel:n=10").is_err());
    }
}
