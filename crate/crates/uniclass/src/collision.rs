//! Incremental exact collision counting.
//!
//! For per-label occurrence counts `c_i`, the pairwise collision count is
//! `S_m = sum_i C(c_i, 2)` and the 3-way count is `T_m = sum_i C(c_i, 3)`.
//! Both update in O(1) per observation: a label previously seen `c` times
//! adds `c` new pairs and `C(c, 2)` new triples. The tracker never stores the
//! sample sequence, so memory is proportional to the number of distinct
//! labels seen.

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

/// Hard cap on observations; `C(m, 3)` stays well inside u128 below it.
pub const DEFAULT_CAPACITY: u64 = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CollisionError {
    #[error("collision tracker capacity of {cap} observations exceeded")]
    CapacityExceeded { cap: u64 },
}

#[derive(Clone, Debug)]
pub struct CollisionTracker<L: Eq + Hash> {
    counts: HashMap<L, u64>,
    m: u64,
    s2: u128,
    t3: u128,
    cap: u64,
}

impl<L: Eq + Hash> Default for CollisionTracker<L> {
    fn default() -> Self {
        Self::new()
    }
}

impl<L: Eq + Hash> CollisionTracker<L> {
    pub fn new() -> Self {
        Self::with_capacity_limit(DEFAULT_CAPACITY)
    }

    pub fn with_capacity_limit(cap: u64) -> Self {
        Self {
            counts: HashMap::new(),
            m: 0,
            s2: 0,
            t3: 0,
            cap,
        }
    }

    /// Records one observation and returns the updated `(S_m, T_m)`.
    pub fn observe(&mut self, label: L) -> Result<(u128, u128), CollisionError> {
        if self.m >= self.cap {
            return Err(CollisionError::CapacityExceeded { cap: self.cap });
        }
        let count = self.counts.entry(label).or_insert(0);
        let c = *count as u128;
        self.s2 += c;
        self.t3 += c * (c.saturating_sub(1)) / 2;
        *count += 1;
        self.m += 1;
        Ok((self.s2, self.t3))
    }

    /// Total observations so far.
    pub fn total(&self) -> u64 {
        self.m
    }

    /// Pairwise collision count `S_m`.
    pub fn pairs(&self) -> u128 {
        self.s2
    }

    /// 3-way collision count `T_m`.
    pub fn triples(&self) -> u128 {
        self.t3
    }

    /// Number of distinct labels observed.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

/// `C(m, 2)` in u128.
pub fn binom2(m: u64) -> u128 {
    let m = m as u128;
    m * m.saturating_sub(1) / 2
}

/// `C(m, 3)` in u128.
pub fn binom3(m: u64) -> u128 {
    let m = m as u128;
    if m < 3 {
        0
    } else {
        m * (m - 1) * (m - 2) / 6
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// O(m^2)/O(m^3) enumeration over a recorded stream; the independent
    /// check for the incremental counts.
    pub(crate) fn brute_force_collisions(stream: &[u32]) -> (u128, u128) {
        let m = stream.len();
        let mut s2 = 0u128;
        let mut t3 = 0u128;
        for i in 0..m {
            for j in (i + 1)..m {
                if stream[i] == stream[j] {
                    s2 += 1;
                }
                for k in (j + 1)..m {
                    if stream[i] == stream[j] && stream[j] == stream[k] {
                        t3 += 1;
                    }
                }
            }
        }
        (s2, t3)
    }

    #[test]
    fn small_stream_by_hand() {
        let mut t = CollisionTracker::new();
        for label in ["a", "b", "a", "a"] {
            t.observe(label).unwrap();
        }
        assert_eq!(t.pairs(), 3);
        assert_eq!(t.triples(), 1);
        assert_eq!(t.total(), 4);
        assert_eq!(t.distinct(), 2);
    }

    #[test]
    fn distinct_labels_no_collisions() {
        let mut t = CollisionTracker::new();
        for i in 0..50u32 {
            t.observe(i).unwrap();
        }
        assert_eq!(t.pairs(), 0);
        assert_eq!(t.triples(), 0);
    }

    #[test]
    fn six_copies_of_one_label() {
        let mut t = CollisionTracker::new();
        for _ in 0..6 {
            t.observe("z").unwrap();
        }
        assert_eq!(t.pairs(), 15); // C(6,2)
        assert_eq!(t.triples(), 20); // C(6,3)
        let (s2, t3) = brute_force_collisions(&[7; 6]);
        assert_eq!((s2, t3), (15, 20));
    }

    #[test]
    fn matches_brute_force_on_random_streams() {
        use crate::sampling::rng::Xoshiro256StarStar;
        let mut rng = Xoshiro256StarStar::seed_from_u64(0xC011);
        for _ in 0..200 {
            let len = 1 + rng.next_below(50) as usize;
            let alphabet = 1 + rng.next_below(10);
            let stream: Vec<u32> = (0..len).map(|_| rng.next_below(alphabet) as u32).collect();
            let mut t = CollisionTracker::new();
            let mut last = (0, 0);
            for &x in &stream {
                last = t.observe(x).unwrap();
            }
            assert_eq!(last, brute_force_collisions(&stream));
            assert!(t.pairs() <= binom2(t.total()));
            assert!(t.triples() <= binom3(t.total()));
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let mut t = CollisionTracker::with_capacity_limit(3);
        for _ in 0..3 {
            t.observe(0u32).unwrap();
        }
        assert_eq!(
            t.observe(0u32).unwrap_err(),
            CollisionError::CapacityExceeded { cap: 3 }
        );
    }

    #[test]
    fn binomials() {
        assert_eq!(binom2(500), 124_750);
        assert_eq!(binom3(500), 20_708_500);
        assert_eq!(binom2(1), 0);
        assert_eq!(binom3(2), 0);
    }
}
