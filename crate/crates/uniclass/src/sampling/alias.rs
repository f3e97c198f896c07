//! Walker/Vose alias method: O(n) table build, O(1) per sample.
//!
//! The table is built once per oracle; each draw costs one bounded integer
//! draw, one float draw, and one comparison.

use super::rng::Xoshiro256StarStar;

#[derive(Clone, Debug)]
pub struct AliasTable {
    /// Acceptance threshold per slot, in [0, 1].
    threshold: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Builds the table for nonnegative weights with a positive total.
    /// Zero-weight slots are valid and are never returned by `sample`.
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        assert!(n > 0, "alias table needs at least one weight");
        assert!(n <= u32::MAX as usize, "alias table limited to u32 indices");
        let total: f64 = crate::accum::sum(weights.iter().copied());
        assert!(
            total.is_finite() && total > 0.0,
            "alias table needs a positive finite total weight"
        );

        let mut scaled: Vec<f64> = weights
            .iter()
            .map(|&w| {
                debug_assert!(w >= 0.0);
                w * n as f64 / total
            })
            .collect();
        let mut threshold = vec![0.0f64; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();

        let mut small: Vec<u32> = Vec::new();
        let mut large: Vec<u32> = Vec::new();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            threshold[s as usize] = scaled[s as usize];
            alias[s as usize] = l;
            scaled[l as usize] = (scaled[l as usize] + scaled[s as usize]) - 1.0;
            if scaled[l as usize] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers on either list have scaled weight 1 up to rounding.
        for &i in large.iter().chain(small.iter()) {
            threshold[i as usize] = 1.0;
            alias[i as usize] = i;
        }

        Self { threshold, alias }
    }

    pub fn len(&self) -> usize {
        self.threshold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threshold.is_empty()
    }

    #[inline]
    pub fn sample(&self, rng: &mut Xoshiro256StarStar) -> u32 {
        let slot = rng.next_below(self.threshold.len() as u64) as usize;
        if rng.next_f64() < self.threshold[slot] {
            slot as u32
        } else {
            self.alias[slot]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frequencies(weights: &[f64], draws: usize, seed: u64) -> Vec<f64> {
        let table = AliasTable::new(weights);
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
        let mut counts = vec![0u64; weights.len()];
        for _ in 0..draws {
            counts[table.sample(&mut rng) as usize] += 1;
        }
        counts.iter().map(|&c| c as f64 / draws as f64).collect()
    }

    #[test]
    fn single_weight_always_zero() {
        let table = AliasTable::new(&[3.5]);
        let mut rng = Xoshiro256StarStar::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(table.sample(&mut rng), 0);
        }
    }

    #[test]
    fn zero_weights_never_sampled() {
        let freqs = frequencies(&[0.0, 1.0, 0.0, 3.0], 200_000, 11);
        assert_eq!(freqs[0], 0.0);
        assert_eq!(freqs[2], 0.0);
        assert!((freqs[1] - 0.25).abs() < 0.01);
        assert!((freqs[3] - 0.75).abs() < 0.01);
    }

    #[test]
    fn skewed_weights_match_probabilities() {
        let weights = [0.5, 0.25, 0.125, 0.0625, 0.0625];
        let freqs = frequencies(&weights, 400_000, 5);
        for (f, w) in freqs.iter().zip(weights.iter()) {
            // 5 sigma on a binomial proportion of 400k draws.
            let sigma = (w * (1.0 - w) / 400_000.0).sqrt();
            assert!((f - w).abs() < 5.0 * sigma + 1e-9, "{f} vs {w}");
        }
    }
}
