//! Floating-point helpers shared by the population and ledger code.
//!
//! Head counts are real-valued, so conservation checks need sums that do not
//! depend on the order of the terms. [`ExactSum`] keeps the running total as a
//! list of non-overlapping partials (Shewchuk's algorithm) and rounds once.

/// Order-independent, correctly rounded accumulator.
#[derive(Clone, Debug, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// The exact sum of everything added so far, rounded to nearest-even.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            let y = p[n - 1];
            n -= 1;
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = ExactSum::new();
        acc.extend(iter);
        acc
    }
}

/// Correctly rounded sum of `values`.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<ExactSum>().value()
}

/// Splits `n` into `(kept, lost)` with `kept ≈ n·keep_fraction` and
/// `kept + lost == n` holding exactly in real arithmetic.
///
/// The larger half is formed by one multiplication; the smaller one by a
/// subtraction that Sterbenz's lemma makes exact.
pub fn split_exact(n: f64, keep_fraction: f64) -> (f64, f64) {
    let keep = keep_fraction.clamp(0.0, 1.0);
    if keep >= 0.5 {
        let kept = n * keep;
        (kept, n - kept)
    } else {
        let lost = n * (1.0 - keep);
        (n - lost, lost)
    }
}

/// Adds `amount` to `*total` and returns the increment that was actually
/// applied, so that `old + realized == new` bit for bit.
pub fn book(total: &mut f64, amount: f64) -> f64 {
    let before = *total;
    let after = before + amount;
    let realized = after - before;
    debug_assert_eq!(before + realized, after);
    *total = after;
    realized
}
