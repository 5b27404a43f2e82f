//! Small statistical helpers shared by the estimators and the test suites.

use serde::{Deserialize, Serialize};

/// Two-sided 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval95 {
    pub lo: f64,
    pub hi: f64,
}

/// Wilson score interval at 95% for `successes` out of `n` trials.
/// With `n == 0` the interval is the whole of `[0, 1]`.
pub fn wilson95(successes: u64, n: u64) -> Interval95 {
    if n == 0 {
        return Interval95 { lo: 0.0, hi: 1.0 };
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp so that the degenerate cases p = 0, 1 include the point exactly
    Interval95 {
        lo: if successes == 0 {
            0.0
        } else {
            (centre - half).clamp(0.0, p)
        },
        hi: if successes as f64 == n {
            1.0
        } else {
            (centre + half).clamp(p, 1.0)
        },
    }
}

/// Neumaier-compensated sum; the result does not depend on how the input
/// was chunked beyond rounding of the final correction.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level 5%.
pub fn ks_critical_5pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.358_098_8 * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_degenerates_at_the_edges() {
        let ci = wilson95(100, 100);
        assert_eq!(ci.hi, 1.0);
        assert!(ci.lo > 0.96 && ci.lo < 1.0);
        let ci = wilson95(0, 100);
        assert_eq!(ci.lo, 0.0);
        let ci = wilson95(50, 100);
        // textbook value 0.4038..0.5962
        assert!((ci.lo - 0.403_8).abs() < 1e-3);
        assert!((ci.hi - 0.596_2).abs() < 1e-3);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b: Vec<f64> = (200..300).map(f64::from).collect();
        assert_eq!(ks_statistic(&a, &b), 1.0);
        assert!((ks_critical_5pct(10_000, 10_000) - 0.019_206).abs() < 1e-5);
    }
}
