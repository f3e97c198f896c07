//! Property-based invariants over randomized inputs.

use proptest::prelude::*;

use uniclass::collision::CollisionTracker;
use uniclass::dist::{norms, tv_distance, tv_to_uniform_class, uniformity_gap, Distribution};

fn arb_distribution(max_points: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0f64..1.0, 1..=max_points).prop_filter_map(
        "needs positive total",
        |weights| {
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                return None;
            }
            Distribution::new(
                weights
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| (format!("x{i}"), w / total)),
            )
            .ok()
        },
    )
}

proptest! {
    /// Triangle inequality, symmetry, and range of the distance.
    #[test]
    fn tv_distance_is_a_metric(
        p in arb_distribution(12),
        q in arb_distribution(12),
        r in arb_distribution(12),
    ) {
        let pq = tv_distance(&p, &q);
        let qr = tv_distance(&q, &r);
        let pr = tv_distance(&p, &r);
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert!((tv_distance(&q, &p) - pq).abs() <= 1e-15);
        prop_assert!(pr <= pq + qr + 1e-12);
        prop_assert!(tv_distance(&p, &p) == 0.0);
    }

    /// Relabeling both sides leaves the distance unchanged.
    #[test]
    fn tv_distance_is_label_invariant(
        p in arb_distribution(10),
        q in arb_distribution(10),
    ) {
        let relabel = |d: &Distribution| {
            Distribution::new(
                d.iter().map(|(l, pr)| (format!("tag:{l}"), pr)),
            ).unwrap()
        };
        let before = tv_distance(&p, &q);
        let after = tv_distance(&relabel(&p), &relabel(&q));
        prop_assert!((before - after).abs() <= 1e-15);
    }

    /// The power-mean chain for distributions and the vector form with the
    /// l1 factor for arbitrary nonnegative vectors.
    #[test]
    fn power_mean_chain(
        p in arb_distribution(32),
        scale in 0.1f64..4.0,
    ) {
        let summary = norms(&p, 8);
        for j in 2..=8u32 {
            prop_assert!(
                summary.l2_sq.powi(j as i32 - 1) <= summary.j_norms[&j] + 1e-12,
                "j={j}"
            );
        }
        let scaled: Vec<f64> = p.probs().iter().map(|&v| v * scale).collect();
        let l1: f64 = scaled.iter().sum();
        let l2_sq: f64 = scaled.iter().map(|&v| v * v).sum();
        for j in 2..=8u32 {
            let lj: f64 = scaled.iter().map(|&v| v.powi(j as i32)).sum();
            let slack = 1e-12 * l1.powi(j as i32).max(1.0);
            prop_assert!(
                l2_sq.powi(j as i32 - 1) <= l1.powi(j as i32 - 2) * lj + slack,
                "vector form, j={j}"
            );
        }
    }

    /// The moment gap is nonnegative and vanishes exactly on uniform inputs,
    /// in lockstep with the exact class distance.
    #[test]
    fn gap_matches_class_distance_at_zero(p in arb_distribution(24)) {
        let gap = uniformity_gap(&p);
        prop_assert!(gap >= -1e-12);
        let class = tv_to_uniform_class(&p, None).unwrap();
        prop_assert_eq!(gap.abs() <= 1e-12, class.distance <= 1e-12);
    }

    /// The class-distance oracle really is the minimum over every support
    /// size it scans, including padded sizes past the positive support, and
    /// its reported distance matches a direct evaluation on the reported
    /// support.
    #[test]
    fn class_distance_is_min_over_all_sizes(p in arb_distribution(16)) {
        let class = tv_to_uniform_class(&p, None).unwrap();
        let share = 1.0 / class.best_support_size as f64;
        let best_uniform = Distribution::new(
            class.best_support.iter().map(|l| (l.clone(), share)),
        )
        .unwrap();
        prop_assert!((tv_distance(&p, &best_uniform) - class.distance).abs() <= 1e-12);
        let mut sorted: Vec<f64> =
            p.probs().iter().copied().filter(|&v| v > 0.0).collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let s_max = 2 * sorted.len();
        for s in 1..=s_max {
            let inv = 1.0 / s as f64;
            let mass: f64 = sorted
                .iter()
                .take(s)
                .map(|&v| v.min(inv))
                .sum();
            let d = 1.0 - mass;
            prop_assert!(class.distance <= d + 1e-12, "beaten at s={s}: {d}");
        }
    }

    /// Collision counts match a from-scratch recount of the same stream.
    #[test]
    fn tracker_matches_recount(stream in prop::collection::vec(0u8..10, 1..60)) {
        let mut tracker = CollisionTracker::new();
        for &x in &stream {
            tracker.observe(x).unwrap();
        }
        let mut pairs = 0u128;
        let mut triples = 0u128;
        for label in 0u8..10 {
            let c = stream.iter().filter(|&&x| x == label).count() as u128;
            pairs += c * c.saturating_sub(1) / 2;
            triples += c * c.saturating_sub(1) * c.saturating_sub(2) / 6;
        }
        prop_assert_eq!(tracker.pairs(), pairs);
        prop_assert_eq!(tracker.triples(), triples);
    }

    /// Text round-trip preserves the distribution bit for bit.
    #[test]
    fn file_format_roundtrip(
        weights in prop::collection::vec(1u32..1000, 1..20),
    ) {
        let total: f64 = weights.iter().map(|&w| w as f64).sum();
        let dist = Distribution::new(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (format!("label-{i}"), w as f64 / total)),
        )
        .unwrap();
        let mut buf = Vec::new();
        dist.write_to(&mut buf).unwrap();
        let back = Distribution::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(dist, back);
    }
}
