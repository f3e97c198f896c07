//! Compensated (Neumaier) summation. Moment sums mix terms spanning many
//! orders of magnitude; plain accumulation loses the small ones.

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Sum {
    total: f64,
    compensation: f64,
}

impl Sum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.total + value;
        if self.total.abs() >= value.abs() {
            self.compensation += (self.total - t) + value;
        } else {
            self.compensation += (value - t) + self.total;
        }
        self.total = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.total + self.compensation
    }
}

pub(crate) fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Sum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        // 1 + 1e100 - 1e100 loses the 1 under naive summation.
        assert_eq!(sum([1.0, 1e100, -1e100]), 1.0);
    }

    #[test]
    fn many_small_terms() {
        let n = 1_000_000;
        let s = sum(std::iter::repeat_n(0.1, n));
        assert!((s - 0.1 * n as f64).abs() < 1e-9);
    }
}
