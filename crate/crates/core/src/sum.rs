//! Deterministic ascending-order summation.

/// Length from which sums switch to compensated (Neumaier) accumulation.
pub(crate) const COMPENSATED_FROM: usize = 10_000;

/// Sums `len` terms produced by `term(k)` for `k = 0..len` in ascending order.
#[inline]
pub(crate) fn sum_ascending(len: usize, mut term: impl FnMut(usize) -> f64) -> f64 {
    if len < COMPENSATED_FROM {
        let mut acc = 0.0;
        for k in 0..len {
            acc += term(k);
        }
        acc
    } else {
        let mut acc = 0.0f64;
        let mut comp = 0.0f64;
        for k in 0..len {
            let x = term(k);
            let t = acc + x;
            if acc.abs() >= x.abs() {
                comp += (acc - t) + x;
            } else {
                comp += (x - t) + acc;
            }
            acc = t;
        }
        acc + comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_sums_are_plain() {
        assert_eq!(sum_ascending(4, |k| k as f64), 6.0);
        assert_eq!(sum_ascending(0, |_| 1.0), 0.0);
    }

    #[test]
    fn long_sums_are_compensated() {
        // 1 followed by many tiny terms that a naive loop drops entirely
        let n = 20_000;
        let s = sum_ascending(n, |k| if k == 0 { 1.0 } else { 1e-17 });
        let expected = 1.0 + (n as f64 - 1.0) * 1e-17;
        assert!((s - expected).abs() < 1e-18, "{s} vs {expected}");
    }
}
