//! Path functionals on sampled skeletons: integrals `I_t = ∫_0^t f(X_s) ds`,
//! their right-continuous inverses `φ`, hitting and last-exit times, and the
//! freezing/explosion verdict of a single path.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_subcritical, Error, Result};
use crate::function::FunctionSpec;
use crate::integral_tests::{kernel_integral, Finiteness};
use crate::interval::IntervalSet;
use crate::stable::PathSample;

/// A value in `[0, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExtendedReal(#[serde(with = "crate::ext")] f64);

impl ExtendedReal {
    pub const ZERO: Self = Self(0.0);
    pub const INFINITY: Self = Self(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::invalid("value", format!("{value} is not in [0, +inf]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("+inf")
        }
    }
}

/// How `I` grows across one skeleton cell.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Growth {
    /// `f` finite on the cell: `I` grows at this rate.
    Linear(f64),
    /// The cell starts on a point pole behaving like `c|x − p|^e`: the
    /// departure is resolved by self-similarity, `I(t_i + u) − I(t_i) =
    /// amount·(u/len)^power`.
    Departure { amount: f64, power: f64 },
    /// `f = +∞` with positive dwell: `I` jumps to `+∞` immediately.
    Infinite,
}

/// `I` along one skeleton, precomputed at the nodes.
#[derive(Debug, Clone)]
pub struct IntegralSkeleton {
    /// Node times followed by the end time.
    times: Vec<f64>,
    /// `I` at `times` (`+∞` from the first infinite cell on).
    cumulative: Vec<f64>,
    growth: Vec<Growth>,
}

impl IntegralSkeleton {
    /// Integrates `f` along `path`. A cell sitting on a point pole of `f`
    /// (which, for a process that does not hit points, happens only at the
    /// issuing point) is resolved with the self-similar profile
    /// `X_s − p ≈ (s/len)^{1/α}(X_len − p)`, so that `c|x − p|^e` contributes
    /// `c|X_len − p|^e·len/(1 + e/α)` when `1 + e/α > 0` and `+∞` otherwise.
    /// Without a recorded stability index such cells count as `+∞`.
    pub fn new(path: &PathSample, f: &FunctionSpec) -> Self {
        let pole_intervals = f.pole_set().intervals;
        let n = path.len();
        let mut times = Vec::with_capacity(n + 1);
        let mut cumulative = Vec::with_capacity(n + 1);
        let mut growth = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 0..n {
            let (start, end, x) = path.cell(i);
            times.push(start);
            cumulative.push(total);
            let len = end - start;
            let g = cell_growth(
                f,
                &pole_intervals,
                path.alpha,
                x,
                path.values().get(i + 1).copied(),
                len,
            );
            total += match g {
                Growth::Linear(rate) => {
                    if rate == 0.0 {
                        0.0
                    } else {
                        rate * len
                    }
                }
                Growth::Departure { amount, .. } => amount,
                Growth::Infinite => f64::INFINITY,
            };
            growth.push(g);
        }
        times.push(path.end_time());
        cumulative.push(total);
        Self {
            times,
            cumulative,
            growth,
        }
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// `I` at the end time.
    pub fn total(&self) -> ExtendedReal {
        ExtendedReal(*self.cumulative.last().unwrap())
    }

    /// `I` at each node time.
    pub fn at_nodes(&self) -> &[f64] {
        &self.cumulative[..self.growth.len()]
    }

    /// `I_t`; times past the end are clamped to it.
    pub fn value(&self, t: f64) -> ExtendedReal {
        let t = t.min(self.end_time());
        let i = self.times[..self.growth.len()]
            .partition_point(|&s| s <= t)
            .saturating_sub(1);
        let start = self.times[i];
        let base = self.cumulative[i];
        let u = t - start;
        if u <= 0.0 || base.is_infinite() {
            return ExtendedReal(base);
        }
        let len = self.times[i + 1] - start;
        ExtendedReal(match self.growth[i] {
            Growth::Linear(0.0) => base,
            Growth::Linear(rate) => base + rate * u,
            Growth::Departure { amount, power } => base + amount * (u / len).min(1.0).powf(power),
            Growth::Infinite => f64::INFINITY,
        })
    }

    /// `φ_s = inf{t > 0 : I_t > s}`, `+∞` if `I` stays `≤ s` up to the end.
    pub fn inverse(&self, s: f64) -> f64 {
        // first cell whose end value exceeds s
        let k = self.cumulative[1..].partition_point(|&v| v <= s);
        if k >= self.growth.len() {
            return f64::INFINITY;
        }
        let start = self.times[k];
        let len = self.times[k + 1] - start;
        let excess = s - self.cumulative[k];
        if excess < 0.0 {
            return start;
        }
        let t = match self.growth[k] {
            Growth::Linear(rate) => start + excess / rate,
            Growth::Departure { amount, power } => start + len * (excess / amount).powf(1.0 / power),
            Growth::Infinite => start,
        };
        t.clamp(start, self.times[k + 1])
    }

    /// Driver time at which `I` first exceeds `level` (or becomes infinite).
    pub fn crossing_time(&self, level: f64) -> Option<f64> {
        let t = self.inverse(level);
        t.is_finite().then_some(t)
    }
}

fn cell_growth(
    f: &FunctionSpec,
    pole_intervals: &IntervalSet,
    alpha: Option<f64>,
    x: f64,
    next: Option<f64>,
    len: f64,
) -> Growth {
    let v = f.eval(x);
    if v.is_finite() {
        return Growth::Linear(v);
    }
    if pole_intervals.contains(x) {
        return Growth::Infinite;
    }
    let (Some(alpha), Some(next), Some((c, e))) = (alpha, next, f.local_power_at(x)) else {
        return Growth::Infinite;
    };
    let power = 1.0 + e / alpha;
    let d = (next - x).abs();
    if power <= 0.0 || d == 0.0 {
        return Growth::Infinite;
    }
    Growth::Departure {
        amount: c * d.powf(e) * len / power,
        power,
    }
}

/// `I_t = ∫_0^t f(X_s) ds` on the skeleton (left-point values per cell).
/// Past a killing time the integral stays at its value there.
pub fn path_integral(path: &PathSample, f: &FunctionSpec, t: f64) -> Result<ExtendedReal> {
    if !(0.0..=path.horizon).contains(&t) {
        return Err(Error::invalid("t", format!("{t} is outside [0, {}]", path.horizon)));
    }
    Ok(IntegralSkeleton::new(path, f).value(t))
}

/// `φ_s = inf{t > 0 : I_t > s}` on the skeleton; `+∞` if `I` never exceeds
/// `s` within the path's lifetime.
pub fn inverse_time_change(path: &PathSample, f: &FunctionSpec, s: f64) -> f64 {
    IntegralSkeleton::new(path, f).inverse(s)
}

/// First node time with the path inside `target`; `+∞` if none.
pub fn first_hitting_time(path: &PathSample, target: &IntervalSet) -> f64 {
    path.times()
        .iter()
        .zip(path.values())
        .find(|&(_, &x)| target.contains(x))
        .map_or(f64::INFINITY, |(&t, _)| t)
}

/// Last node time with the path inside `target`; `0` if none.
pub fn last_exit_time(path: &PathSample, target: &IntervalSet) -> f64 {
    path.times()
        .iter()
        .zip(path.values())
        .rev()
        .find(|&(_, &x)| target.contains(x))
        .map_or(0.0, |(&t, _)| t)
}

/// Whether the path ends outside `[−r, r]` and left it for the last time
/// before its end.
pub fn escaped(path: &PathSample, r: f64) -> bool {
    let ball = IntervalSet::interval(-r, r.next_up());
    let last = *path.values().last().unwrap();
    !ball.contains(last) && last_exit_time(path, &ball) < path.end_time()
}

/// Finite-horizon stand-ins for the asymptotic notions: `M` is the level
/// treated as numerically infinite, `R` the escape radius that certifies
/// stabilisation of a transient path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(rename = "M", default = "default_m")]
    pub big_m: f64,
    #[serde(rename = "R", default = "default_r")]
    pub escape_radius: f64,
}

fn default_m() -> f64 {
    1e9
}

fn default_r() -> f64 {
    1e3
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            big_m: default_m(),
            escape_radius: default_r(),
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        crate::error::check_positive("M", self.big_m)?;
        crate::error::check_positive("R", self.escape_radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tri {
    Yes,
    No,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathVerdict {
    #[serde(rename = "integral")]
    pub integral_at_horizon: ExtendedReal,
    pub explodes: Tri,
    pub freezes: Tri,
    #[serde(with = "crate::ext::option")]
    pub freeze_time: Option<f64>,
    /// Largest cell length of the skeleton.
    pub step: f64,
    pub horizon: f64,
    #[serde(flatten)]
    pub thresholds: Thresholds,
}

/// Per-path verdicts for a fixed integrand; the analytic part (behaviour of
/// the integrand at infinity) is computed once.
#[derive(Debug, Clone)]
pub struct PathClassifier {
    f: FunctionSpec,
    thresholds: Thresholds,
    /// Finiteness of `∫_{|y|>R} f(y)|y|^{α−1} dy`; `None` if inconclusive.
    tail_finite: Option<bool>,
    /// `f` has no pole intervals. Point poles are polar for `α < 1`, so
    /// away from the issuing point they cannot stop the clock.
    no_pole_intervals: bool,
    /// `f ≡ 0`.
    vanishes: bool,
}

impl PathClassifier {
    /// Classifier for the time change of `dZ = σ(Z₋)dX`, i.e. `f = σ^{−α}`.
    pub fn for_sigma(alpha: f64, sigma: &FunctionSpec, thresholds: Thresholds) -> Result<Self> {
        check_subcritical(alpha)?;
        Self::for_integrand(alpha, sigma.reciprocal_power(alpha)?, thresholds)
    }

    /// Classifier for a general integrand `f`.
    pub fn for_integrand(alpha: f64, f: FunctionSpec, thresholds: Thresholds) -> Result<Self> {
        check_subcritical(alpha)?;
        f.validate()?;
        thresholds.validate()?;
        let r = thresholds.escape_radius;
        let outside = IntervalSet::interval(-r, r).complement();
        let tail = kernel_integral(alpha, 0.0, &f, &outside, 1e-6)?;
        let tail_finite = match tail.finiteness {
            Finiteness::Finite => Some(true),
            Finiteness::Infinite => Some(false),
            Finiteness::Inconclusive => None,
        };
        let poles = f.pole_set();
        let no_pole_intervals = poles.intervals.is_empty();
        let vanishes = poles.is_empty() && f.pieces.iter().all(|p| p.form.is_zero());
        Ok(Self {
            f,
            thresholds,
            tail_finite,
            no_pole_intervals,
            vanishes,
        })
    }

    pub fn integrand(&self) -> &FunctionSpec {
        &self.f
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    /// Whether `∫_0^∞ f(X_s) ds` is finite for paths that have escaped to
    /// infinity; `None` if the tail test was inconclusive.
    pub fn tail_finite(&self) -> Option<bool> {
        self.tail_finite
    }

    pub fn classify(&self, path: &PathSample) -> PathVerdict {
        self.classify_skeleton(path, &IntegralSkeleton::new(path, &self.f))
    }

    pub fn classify_skeleton(&self, path: &PathSample, skeleton: &IntegralSkeleton) -> PathVerdict {
        let m = self.thresholds.big_m;
        let total = skeleton.total();
        let (explodes, freezes, freeze_time) = if total.value() > m {
            (Tri::No, Tri::Yes, skeleton.crossing_time(m))
        } else {
            let explodes = match (escaped(path, self.thresholds.escape_radius), self.tail_finite) {
                _ if self.vanishes => Tri::Yes,
                (_, Some(false)) => Tri::No,
                (true, Some(true)) => Tri::Yes,
                _ => Tri::Undetermined,
            };
            let freezes = if explodes == Tri::Yes || self.no_pole_intervals {
                Tri::No
            } else {
                Tri::Undetermined
            };
            (explodes, freezes, None)
        };
        debug_assert!(!(explodes == Tri::Yes && freezes == Tri::Yes));
        let step = path
            .times()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
            .max(if path.len() == 1 { path.end_time() } else { 0.0 });
        PathVerdict {
            integral_at_horizon: total,
            explodes,
            freezes,
            freeze_time,
            step,
            horizon: path.horizon,
            thresholds: self.thresholds,
        }
    }
}

/// Freezing/explosion verdict for the time change `∫σ(X)^{−α}` along `path`.
///
/// * freezes = yes when the integral exceeds `M` (or is `+∞`) within the
///   horizon; `freeze_time` is the first such driver time.
/// * explodes = yes when the integral stays below `M`, the path has left
///   `[−R, R]` for good, and `∫_{|y|>R} σ(y)^{−α}|y|^{α−1} dy < ∞`;
///   explodes = no when that tail integral is infinite.
/// * freezes = no when explosion is certified or `σ` has no zero intervals
///   (isolated zeros are polar and can only matter at the issuing point,
///   where the integral is resolved exactly).
pub fn classify_path(
    path: &PathSample,
    sigma: &FunctionSpec,
    alpha: f64,
    thresholds: Thresholds,
) -> Result<PathVerdict> {
    Ok(PathClassifier::for_sigma(alpha, sigma, thresholds)?.classify(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Form;
    use crate::rng::stream;
    use crate::stable::{sample_path, GridKind, StableParams};

    fn path(times: &[f64], values: &[f64], horizon: f64) -> PathSample {
        PathSample::new(times.to_vec(), values.to_vec(), horizon, None, GridKind::Uniform).unwrap()
    }

    fn random_path(alpha: f64, seed: u64) -> PathSample {
        let p = StableParams::new(alpha).unwrap();
        sample_path(&p, 0.0, 1.0, 0.01, None, &mut stream(seed, 0)).unwrap()
    }

    #[test]
    fn extended_real() {
        assert!(ExtendedReal::new(-1.0).is_err());
        assert!(ExtendedReal::new(f64::NAN).is_err());
        assert_eq!(ExtendedReal::new(f64::INFINITY).unwrap(), ExtendedReal::INFINITY);
        assert_eq!(serde_json::to_string(&ExtendedReal::INFINITY).unwrap(), "\"inf\"");
        assert_eq!(ExtendedReal::INFINITY.to_string(), "+inf");
    }

    #[test]
    fn trivial_integrals() {
        let x = random_path(0.5, 1);
        let one = FunctionSpec::constant(1.0);
        assert!((path_integral(&x, &one, 0.7).unwrap().value() - 0.7).abs() < 1e-12);
        assert_eq!(
            path_integral(&x, &FunctionSpec::constant(0.0), 0.7).unwrap().value(),
            0.0
        );
        assert!(path_integral(&x, &one, 1.5).is_err());
        assert!((inverse_time_change(&x, &one, 0.3) - 0.3).abs() < 1e-12);
        let c: f64 = 3.0;
        let f = FunctionSpec::constant(c.powf(-0.5));
        assert!((inverse_time_change(&x, &f, 0.2) - c.sqrt() * 0.2).abs() < 1e-12);
        let inf = FunctionSpec::infinite_on(&IntervalSet::real_line());
        assert_eq!(inverse_time_change(&x, &inf, 5.0), 0.0);
        assert_eq!(inverse_time_change(&x, &one, 2.0), f64::INFINITY);
    }

    #[test]
    fn infinite_on_occupied_set() {
        let x = path(&[0.0, 0.5, 0.6], &[0.0, 1.5, 7.0], 1.0);
        let f = FunctionSpec::infinite_on(&IntervalSet::interval(1.0, 2.0));
        assert_eq!(path_integral(&x, &f, 1.0).unwrap(), ExtendedReal::INFINITY);
        assert_eq!(path_integral(&x, &f, 0.5).unwrap().value(), 0.0);
        assert_eq!(inverse_time_change(&x, &f, 0.0), 0.5);
    }

    #[test]
    fn departure_from_a_point_pole() {
        // |x|^{-1/4} with α = 1/2: the first cell contributes |X_τ|^{-1/4}·τ/(1/2)
        let x = path(&[0.0, 0.25], &[0.0, 16.0], 1.0).with_alpha(0.5);
        let f = FunctionSpec::power(1.0, -0.25, 0.0);
        let i = path_integral(&x, &f, 0.25).unwrap().value();
        assert!((i - 0.5 * 0.25 / 0.5).abs() < 1e-15, "{i}");
        // inverse inside the departure cell is consistent
        let t = inverse_time_change(&x, &f, 0.5 * i);
        assert!((path_integral(&x, &f, t).unwrap().value() - 0.5 * i).abs() < 1e-15);
        // |x|^{-3/4}: 1 − 3/2 < 0, infinite immediately
        let f = FunctionSpec::power(1.0, -0.75, 0.0);
        assert_eq!(path_integral(&x, &f, 0.1).unwrap(), ExtendedReal::INFINITY);
        // without a stability index the dwell convention applies
        let bare = path(&[0.0, 0.25], &[0.0, 16.0], 1.0);
        let f = FunctionSpec::power(1.0, -0.25, 0.0);
        assert_eq!(path_integral(&bare, &f, 0.1).unwrap(), ExtendedReal::INFINITY);
    }

    #[test]
    fn hitting_and_exit_times() {
        let x = path(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.5, 10.0, 1.2], 4.0);
        let b = IntervalSet::interval(1.0, 2.0);
        assert_eq!(first_hitting_time(&x, &b), 1.0);
        assert_eq!(last_exit_time(&x, &b), 3.0);
        assert_eq!(first_hitting_time(&x, &IntervalSet::empty()), f64::INFINITY);
        assert_eq!(last_exit_time(&x, &IntervalSet::empty()), 0.0);
        assert_eq!(first_hitting_time(&x, &IntervalSet::interval(-1.0, 1.0)), 0.0);
        assert!(escaped(&path(&[0.0, 1.0], &[0.0, 5.0], 1.0), 2.0));
        assert!(!escaped(&path(&[0.0, 1.0], &[0.0, 2.0], 1.0), 2.0));
    }

    #[test]
    fn constant_sigma_neither_freezes_nor_explodes() {
        let x = random_path(0.5, 3);
        let v = classify_path(&x, &FunctionSpec::constant(1.0), 0.5, Thresholds::default()).unwrap();
        assert_eq!((v.explodes, v.freezes), (Tri::No, Tri::No));
        assert!((v.integral_at_horizon.value() - 1.0).abs() < 1e-12);
        let json = serde_json::to_value(&v).unwrap();
        for key in [
            "integral",
            "explodes",
            "freezes",
            "freeze_time",
            "step",
            "horizon",
            "M",
            "R",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn freezes_on_hitting_a_zero_interval() {
        let a = IntervalSet::interval(1.0, 2.0);
        let sigma = FunctionSpec::indicator_complement(&a);
        let x = path(&[0.0, 0.5, 0.7], &[0.0, 1.5, 8.0], 1.0).with_alpha(0.5);
        let v = classify_path(&x, &sigma, 0.5, Thresholds::default()).unwrap();
        assert_eq!(v.freezes, Tri::Yes);
        assert_eq!(v.explodes, Tri::No);
        assert_eq!(v.freeze_time, Some(0.5));
    }

    #[test]
    fn explosion_certified_after_escape() {
        let sigma = FunctionSpec::on(
            f64::NEG_INFINITY,
            f64::INFINITY,
            Form::SmoothPower { c: 1.0, e: 2.0, p: 0.0 },
        );
        let x = path(&[0.0, 1.0, 2.0], &[0.0, 3.0, 5e4], 2.0).with_alpha(0.5);
        let v = classify_path(&x, &sigma, 0.5, Thresholds::default()).unwrap();
        assert_eq!((v.explodes, v.freezes), (Tri::Yes, Tri::No));
        let x = path(&[0.0, 1.0], &[0.0, 3.0], 2.0).with_alpha(0.5);
        let v = classify_path(&x, &sigma, 0.5, Thresholds::default()).unwrap();
        assert_eq!(v.explodes, Tri::Undetermined);
        assert!(classify_path(&x, &sigma, 1.5, Thresholds::default()).is_err());
    }

    #[test]
    fn skeleton_monotone_and_galois() {
        let f = FunctionSpec::power(1.0, -0.25, 0.0);
        for seed in 0..20 {
            let x = random_path(0.5, seed);
            let sk = IntegralSkeleton::new(&x, &f);
            let mut prev = 0.0;
            for k in 0..=100 {
                let t = k as f64 / 100.0;
                let i = sk.value(t).value();
                assert!(i >= prev);
                prev = i;
                // f > 0, so I is strictly increasing and φ(I_t) = t
                let phi = sk.inverse(i);
                if phi.is_finite() {
                    assert!((phi - t).abs() <= 1e-9, "{phi} vs {t}");
                }
            }
            let mut prev = 0.0;
            for k in 0..100 {
                let s = k as f64 * 0.05;
                let phi = sk.inverse(s);
                assert!(phi >= prev);
                prev = phi;
                if phi.is_finite() {
                    assert!(sk.value(phi).value() >= s * (1.0 - 1e-12));
                }
            }
        }
    }
}
