//! Geometric shells, stable capacities and the Wiener summation test.
//!
//! Capacities use the normalization `C(B_1) = Γ(1/2) / (Γ(α/2) Γ((1−α)/2 + 1))`
//! with the scaling law `C(a·B) = a^{1−α} C(B)`. Capacities of multi-interval
//! sets are bracketed: below by the ball of equal Lebesgue measure
//! (isoperimetric inequality), above by subadditivity over components.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_subcritical, Error, Result};
use crate::interval::IntervalSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    pub center: f64,
    pub lambda: f64,
    pub n_min: i32,
    pub n_max: i32,
}

impl ShellSpec {
    pub fn new(center: f64, lambda: f64, n_min: i32, n_max: i32) -> Result<Self> {
        if !(lambda > 1.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("{lambda} must exceed 1")));
        }
        if n_min > n_max {
            return Err(Error::invalid("n_min", "must not exceed n_max"));
        }
        if !center.is_finite() {
            return Err(Error::invalid("center", "must be finite"));
        }
        Ok(Self {
            center,
            lambda,
            n_min,
            n_max,
        })
    }
}

/// `S_n = {x : λ^{n−1} < |x − z| ≤ λ^n}`, stored in half-open form
/// `[z−λ^n, z−λ^{n−1}) ∪ [z+λ^{n−1}, z+λ^n)` (same measure, endpoints differ).
pub fn shell(spec: &ShellSpec, n: i32) -> IntervalSet {
    let outer = spec.lambda.powi(n);
    let inner = spec.lambda.powi(n - 1);
    let z = spec.center;
    IntervalSet::from_pairs([(z - outer, z - inner), (z + inner, z + outer)])
}

/// `C(B_1)` for the symmetric α-stable process.
pub fn unit_ball_capacity(alpha: f64) -> Result<f64> {
    check_subcritical(alpha)?;
    Ok(libm::tgamma(0.5) / (libm::tgamma(alpha / 2.0) * libm::tgamma((1.0 - alpha) / 2.0 + 1.0)))
}

/// `C(B_r) = r^{1−α} C(B_1)`.
pub fn ball_capacity(alpha: f64, r: f64) -> Result<f64> {
    check_positive("r", r)?;
    Ok(r.powf(1.0 - alpha) * unit_ball_capacity(alpha)?)
}

/// Isoperimetric lower bound `C(B_1)·2^{α−1}·|set|^{1−α}`.
pub fn capacity_lower_bound(alpha: f64, set: &IntervalSet) -> Result<f64> {
    let c1 = unit_ball_capacity(alpha)?;
    if set.is_empty() {
        return Ok(0.0);
    }
    Ok(c1 * 2f64.powf(alpha - 1.0) * set.measure().powf(1.0 - alpha))
}

/// Subadditive upper bound: sum of the capacities of the components, each a
/// translated ball of radius half its length. Exact for a single interval.
pub fn interval_capacity_upper(alpha: f64, set: &IntervalSet) -> Result<f64> {
    let c1 = unit_ball_capacity(alpha)?;
    Ok(set
        .components()
        .iter()
        .map(|&(a, b)| c1 * (0.5 * (b - a)).powf(1.0 - alpha))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Decision thresholds for [`wiener_sum_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    /// Lower-bound partial sums above this are declared divergent.
    pub divergence_bound: f64,
    /// Number of consecutive term ratios inspected by the ratio tests.
    pub window: usize,
    /// Convergence needs every ratio in the window below `1 − margin`.
    pub margin: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            divergence_bound: 1e6,
            window: 20,
            margin: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub verdict: Verdict,
    /// Partial sums of the upper-bound terms.
    pub partial_sums: Vec<f64>,
    /// Partial sums of the lower-bound terms.
    pub lower_partial_sums: Vec<f64>,
    pub ratio_estimate: Option<f64>,
    pub terms_used: usize,
}

impl SeriesVerdict {
    pub fn upper_sum(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    pub fn lower_sum(&self) -> f64 {
        self.lower_partial_sums.last().copied().unwrap_or(0.0)
    }

    /// JSON object with the partial sums cut to at most `keep` trailing entries.
    pub fn to_json(&self, keep: Option<usize>) -> serde_json::Value {
        let cut = |v: &[f64]| -> Vec<f64> {
            match keep {
                Some(k) if v.len() > k => v[v.len() - k..].to_vec(),
                _ => v.to_vec(),
            }
        };
        serde_json::json!({
            "verdict": self.verdict,
            "partial_sums": cut(&self.partial_sums),
            "ratio_estimate": self.ratio_estimate,
            "upper_sum": self.upper_sum(),
            "lower_sum": self.lower_sum(),
            "terms_used": self.terms_used,
        })
    }
}

/// Wiener series `Σ_n λ^{n(α−1)} C(set ∩ S_n)` with default thresholds.
pub fn wiener_sum(alpha: f64, spec: &ShellSpec, set: &IntervalSet) -> Result<SeriesVerdict> {
    wiener_sum_with(alpha, spec, set, &SeriesOptions::default())
}

pub fn wiener_sum_with(alpha: f64, spec: &ShellSpec, set: &IntervalSet, opts: &SeriesOptions) -> Result<SeriesVerdict> {
    check_subcritical(alpha)?;
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for n in spec.n_min..=spec.n_max {
        let piece = set.intersection(&shell(spec, n));
        let weight = spec.lambda.powf(n as f64 * (alpha - 1.0));
        upper.push(weight * interval_capacity_upper(alpha, &piece)?);
        lower.push(weight * capacity_lower_bound(alpha, &piece)?);
    }
    Ok(classify_series(&upper, &lower, opts))
}

/// Ratio and tail decision on upper/lower term sequences.
pub(crate) fn classify_series(upper: &[f64], lower: &[f64], opts: &SeriesOptions) -> SeriesVerdict {
    let prefix = |terms: &[f64]| -> Vec<f64> {
        terms
            .iter()
            .scan(0.0, |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect()
    };
    let partial_sums = prefix(upper);
    let lower_partial_sums = prefix(lower);
    let w = opts.window;

    let ratios = |terms: &[f64]| -> Option<Vec<f64>> {
        if terms.len() < w + 1 {
            return None;
        }
        let tail = &terms[terms.len() - w - 1..];
        if tail.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return None;
        }
        Some(tail.windows(2).map(|p| p[1] / p[0]).collect())
    };
    let positive: Vec<f64> = upper.iter().copied().filter(|&t| t > 0.0).collect();
    let ratio_estimate = ratios(&positive).map(|r| {
        let log_mean = r.iter().map(|x| x.ln()).sum::<f64>() / r.len() as f64;
        log_mean.exp()
    });

    let trailing_zeros = upper.iter().rev().take_while(|&&t| t == 0.0).count();
    let verdict = if lower_partial_sums.last().is_some_and(|&s| s > opts.divergence_bound) {
        Verdict::Divergent
    } else if upper.iter().all(|&t| t == 0.0)
        || trailing_zeros >= w
        || ratios(upper).is_some_and(|r| r.iter().all(|&q| q < 1.0 - opts.margin))
    {
        Verdict::Convergent
    } else if ratios(lower).is_some_and(|r| r.iter().all(|&q| q >= 1.0 - 1e-9)) {
        // terms bounded away from zero
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    };

    SeriesVerdict {
        verdict,
        partial_sums,
        lower_partial_sums,
        ratio_estimate,
        terms_used: upper.len(),
    }
}

/// Left endpoint and length of the block `[2^n − 2^{(n−1)/3}, 2^n)`.
fn example_block(n: u32) -> (f64, f64) {
    let right = 2f64.powi(n as i32);
    let width = 2f64.powf((n as f64 - 1.0) / 3.0);
    (right - width, width)
}

/// `A = ∪_{n=1}^{n_max} [2^n − 2^{(n−1)/3}, 2^n)`, an avoidable set of
/// infinite potential for `α > 2/3`.
///
/// For `n ≳ 80` the block width falls below the spacing of doubles near
/// `2^n`; such blocks are rounded (and eventually vanish) in this
/// representation. [`example_potential_series`] works from the exact widths.
pub fn build_example_set(n_max: u32) -> Result<IntervalSet> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    Ok(IntervalSet::from_pairs((1..=n_max).map(|n| {
        let (a, _) = example_block(n);
        (a, 2f64.powi(n as i32))
    })))
}

/// Potential `U(0, A) = Σ_n ∫_{A_n} x^{α−1} dx = Σ_n (b_n^α − a_n^α)/α` of
/// the example set, evaluated from the exact block widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSeries {
    pub partial_sums: Vec<f64>,
    /// Upper bound on the omitted tail `Σ_{n > n_max}`; `None` when the
    /// series diverges (`α ≥ 2/3`).
    pub tail_bound: Option<f64>,
    pub verdict: Verdict,
}

pub fn example_potential_series(alpha: f64, n_max: u32) -> Result<PotentialSeries> {
    check_subcritical(alpha)?;
    let mut partial_sums = Vec::with_capacity(n_max as usize);
    let mut acc = 0.0;
    for n in 1..=n_max {
        let right = 2f64.powi(n as i32);
        let width = 2f64.powf((n as f64 - 1.0) / 3.0);
        // b^α − (b − w)^α without forming b − w
        let term = -right.powf(alpha) * (alpha * (-width / right).ln_1p()).exp_m1() / alpha;
        debug_assert!(term >= 0.0);
        acc += term;
        partial_sums.push(acc);
    }
    // u_n ≤ w_n a_n^{α−1} ≤ 2^{(n−1)(α−2/3)}, a geometric majorant
    let q = 2f64.powf(alpha - 2.0 / 3.0);
    let (tail_bound, verdict) = if q < 1.0 {
        (Some(q.powi(n_max as i32) / (1.0 - q)), Verdict::Convergent)
    } else {
        // u_n ≥ w_n b_n^{α−1} = 2^{−1/3} 2^{n(α−2/3)} ≥ 2^{−1/3}
        (None, Verdict::Divergent)
    };
    Ok(PotentialSeries {
        partial_sums,
        tail_bound,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const C1_HALF: f64 = 0.539_352_601_188_379_1;

    #[test]
    fn shells() {
        let s = ShellSpec::new(0.0, 2.0, 0, 1).unwrap();
        assert_eq!(shell(&s, 1).components(), &[(-2.0, -1.0), (1.0, 2.0)]);
        assert_eq!(shell(&s, 1).measure(), 2.0);
        assert_eq!(shell(&s, 0).components(), &[(-1.0, -0.5), (0.5, 1.0)]);
        assert_eq!(shell(&s, 0).measure(), 1.0);
        let s = ShellSpec::new(5.0, 2.0, 0, 1).unwrap();
        assert_eq!(shell(&s, 1).components(), &[(3.0, 4.0), (6.0, 7.0)]);
        assert!(ShellSpec::new(0.0, 1.0, 0, 1).is_err());
        assert!(ShellSpec::new(0.0, 2.0, 2, 1).is_err());
    }

    #[test]
    fn capacities() {
        assert!((ball_capacity(0.5, 1.0).unwrap() - C1_HALF).abs() < 1e-12);
        assert!((ball_capacity(0.5, 4.0).unwrap() - 2.0 * C1_HALF).abs() < 1e-12);
        assert!(ball_capacity(1.2, 1.0).is_err());
        assert_eq!(capacity_lower_bound(0.5, &IntervalSet::empty()).unwrap(), 0.0);
        assert_eq!(interval_capacity_upper(0.5, &IntervalSet::empty()).unwrap(), 0.0);
        let unit = IntervalSet::interval(0.0, 2.0);
        assert!((capacity_lower_bound(0.5, &unit).unwrap() - C1_HALF).abs() < 1e-12);
        assert!((interval_capacity_upper(0.5, &unit).unwrap() - C1_HALF).abs() < 1e-12);
        let two = IntervalSet::from_pairs([(0.0, 1.0), (10.0, 11.0)]);
        assert!((capacity_lower_bound(0.5, &two).unwrap() - C1_HALF).abs() < 1e-12);
        let up = interval_capacity_upper(0.5, &two).unwrap();
        assert!((up - 2.0 * 0.5f64.sqrt() * C1_HALF).abs() < 1e-12);
        assert!((up - 0.762_76).abs() < 1e-5);
    }

    #[test]
    fn example_set_blocks() {
        assert_eq!(build_example_set(1).unwrap().components(), &[(1.0, 2.0)]);
        let two = build_example_set(2).unwrap();
        assert_eq!(two.len(), 2);
        assert!((two.components()[1].0 - (4.0 - 2f64.cbrt())).abs() < 1e-15);
        let three = build_example_set(3).unwrap();
        assert!((three.components()[2].0 - (8.0 - 2f64.powf(2.0 / 3.0))).abs() < 1e-15);
        assert!(build_example_set(0).is_err());
    }

    #[test]
    fn empty_set_series_converges_to_zero() {
        let spec = ShellSpec::new(0.0, 2.0, 1, 50).unwrap();
        let v = wiener_sum(0.5, &spec, &IntervalSet::empty()).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert_eq!(v.upper_sum(), 0.0);
    }

    #[test]
    fn half_line_series_diverges() {
        let spec = ShellSpec::new(0.0, 2.0, 1, 60).unwrap();
        let set = IntervalSet::interval(1.0, 2f64.powi(60));
        let v = wiener_sum(0.5, &spec, &set).unwrap();
        assert_eq!(v.verdict, Verdict::Divergent);
        // partial sums grow linearly
        let d1 = v.lower_partial_sums[10] - v.lower_partial_sums[9];
        let d2 = v.lower_partial_sums[50] - v.lower_partial_sums[49];
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn series_verdict_json() {
        let spec = ShellSpec::new(0.0, 2.0, 1, 30).unwrap();
        let v = wiener_sum(0.5, &spec, &build_example_set(30).unwrap()).unwrap();
        let j = v.to_json(Some(3));
        assert_eq!(j["verdict"], "convergent");
        assert_eq!(j["partial_sums"].as_array().unwrap().len(), 3);
    }
}
