//! Monte Carlo estimators that put analytic verdicts next to simulated
//! frequencies, with reproducible configs and CSV reporting.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{check_subcritical, Error, Result};
use crate::function::{parse_set, FunctionSpec};
use crate::functionals::{escaped, first_hitting_time, IntegralSkeleton, PathClassifier, Thresholds, Tri};
use crate::interval::{IntervalSet, PointSet};
use crate::rng::stream;
use crate::stable::{sample_path_with, GridSpec, KillingSpec, PathSample, Refinement, StableParams};
use crate::stats::{wilson95, Interval95};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `P_z(∫_0^∞ f(X_s) ds < ∞)`.
    #[serde(alias = "finiteness")]
    FinitenessProb,
    /// `P_z(T_B < ∞)` for the configured target `B`.
    #[serde(alias = "hitting")]
    HittingProb,
    /// Probability that the time-changed solution freezes.
    #[serde(alias = "freeze")]
    FreezeProb,
    /// Probability that the time-changed solution explodes.
    #[serde(alias = "explosion")]
    ExplosionProb,
    /// `P_z(∃t > 0 : ∫_0^t f(X_s) ds < ∞)`.
    #[serde(alias = "smalltime")]
    SmalltimeFiniteness,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::FinitenessProb => "finiteness_prob",
            Self::HittingProb => "hitting_prob",
            Self::FreezeProb => "freeze_prob",
            Self::ExplosionProb => "explosion_prob",
            Self::SmalltimeFiniteness => "smalltime_finiteness",
        }
    }

    fn default_role(self) -> Role {
        match self {
            Self::FreezeProb | Self::ExplosionProb => Role::Sigma,
            _ => Role::F,
        }
    }
}

/// Whether the configured function is the integrand `f` itself or a
/// coefficient `σ` whose time-change integrand is `σ^{−α}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    F,
    Sigma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    /// A JSON function spec or an inline string such as `power:|x|^0.5`.
    #[serde(alias = "f", alias = "sigma", deserialize_with = "function_input")]
    pub f_or_sigma: FunctionSpec,
    /// Defaults to `sigma` for the freeze/explosion estimators and `f`
    /// otherwise.
    #[serde(default)]
    pub role: Option<Role>,
    /// One issuing point or a list of them.
    #[serde(deserialize_with = "one_or_many")]
    pub z: Vec<f64>,
    pub replicates: u64,
    pub horizon: f64,
    pub step: f64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub seed: u64,
    pub estimator: EstimatorKind,
    /// Target set of the hitting estimator: `[a,b)`, a list of pairs, or
    /// `example2.2:<n>`.
    #[serde(default, deserialize_with = "set_input")]
    pub target: Option<IntervalSet>,
    #[serde(default)]
    pub killing: Option<KillingSpec>,
    /// Defaults to a state-adaptive grid focused on the target (hitting) or
    /// on the poles of the integrand, with relative resolution 0.1.
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn function_input<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<FunctionSpec, D::Error> {
    use serde::de::Error as _;
    let v = serde_json::Value::deserialize(d)?;
    match v {
        serde_json::Value::String(s) => FunctionSpec::parse(&s).map_err(D::Error::custom),
        other => serde_json::from_value(other).map_err(D::Error::custom),
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(z) => vec![z],
        OneOrMany::Many(zs) => zs,
    })
}

fn set_input<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<IntervalSet>, D::Error> {
    use serde::de::Error as _;
    let v = Option::<serde_json::Value>::deserialize(d)?;
    match v {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(serde_json::Value::String(s)) => parse_set(&s)
            .map(Some)
            .ok_or_else(|| D::Error::custom(format!("cannot parse set {s:?}"))),
        Some(other) => serde_json::from_value(other).map(Some).map_err(D::Error::custom),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_subcritical(self.alpha)?;
        if self.replicates == 0 || self.replicates >= 1 << 40 {
            return Err(Error::invalid("replicates", "must be in [1, 2^40)"));
        }
        crate::error::check_positive("horizon", self.horizon)?;
        crate::error::check_positive("step", self.step)?;
        if self.z.is_empty() || self.z.len() >= 1 << 24 {
            return Err(Error::invalid("z", "need between 1 and 2^24 issuing points"));
        }
        if self.z.iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid("z", "issuing points must be finite"));
        }
        self.thresholds.validate()?;
        self.f_or_sigma.validate()?;
        if self.estimator == EstimatorKind::HittingProb && self.target.is_none() {
            return Err(Error::Config("the hitting estimator needs a `target`".into()));
        }
        if let Some(g) = &self.grid {
            crate::error::check_positive("grid.step", g.step)?;
        }
        Ok(())
    }

    pub fn role(&self) -> Role {
        self.role.unwrap_or(self.estimator.default_role())
    }

    /// The integrand whose path integral the estimator examines.
    pub fn integrand(&self) -> Result<FunctionSpec> {
        match self.role() {
            Role::F => Ok(self.f_or_sigma.clone()),
            Role::Sigma => self.f_or_sigma.reciprocal_power(self.alpha),
        }
    }

    fn grid(&self, f: &FunctionSpec) -> GridSpec {
        if let Some(g) = &self.grid {
            return g.clone();
        }
        let focus = match (&self.estimator, &self.target) {
            (EstimatorKind::HittingProb, Some(t)) => PointSet::new([], t.clone()),
            _ => f.pole_set(),
        };
        if focus.is_empty() {
            return GridSpec::uniform(self.step);
        }
        GridSpec {
            step: self.step,
            refinement: Refinement::StateAdaptive { focus, rel: 0.1 },
            start_levels: 0,
        }
    }
}

/// Parses a config document: one object, or an array of objects (a sweep).
pub fn parse_configs(json: &str) -> Result<Vec<ExperimentConfig>> {
    let v: serde_json::Value = serde_json::from_str(json)?;
    configs_from_value(v)
}

pub fn configs_from_value(v: serde_json::Value) -> Result<Vec<ExperimentConfig>> {
    let list = match v {
        serde_json::Value::Array(items) => items,
        other => vec![other],
    };
    if list.is_empty() {
        return Err(Error::Empty("experiment sweep"));
    }
    list.into_iter()
        .map(|item| {
            let cfg: ExperimentConfig = serde_json::from_value(item).map_err(|e| Error::Config(e.to_string()))?;
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Fraction of successes among resolved replicates.
    pub point: f64,
    pub ci95: Interval95,
    /// Number of resolved replicates behind `point` and `ci95`.
    pub n: u64,
    pub undetermined_fraction: f64,
    pub seed: u64,
}

impl Estimate {
    fn from_counts(successes: u64, resolved: u64, replicates: u64, seed: u64) -> Self {
        let point = if resolved == 0 {
            0.5
        } else {
            successes as f64 / resolved as f64
        };
        Self {
            point,
            ci95: wilson95(successes, resolved),
            n: resolved,
            undetermined_fraction: (replicates - resolved) as f64 / replicates as f64,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Success,
    Failure,
    Undetermined,
}

fn from_tri(t: Tri) -> Outcome {
    match t {
        Tri::Yes => Outcome::Success,
        Tri::No => Outcome::Failure,
        Tri::Undetermined => Outcome::Undetermined,
    }
}

/// Everything shared by the replicates of one configuration.
struct Prepared {
    cfg: ExperimentConfig,
    params: StableParams,
    grid: GridSpec,
    classifier: PathClassifier,
    target: IntervalSet,
    /// Radius beyond which a path that has not hit the target is taken not
    /// to come back.
    target_radius: f64,
}

impl Prepared {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let f = cfg.integrand()?;
        let grid = cfg.grid(&f);
        let classifier = PathClassifier::for_integrand(cfg.alpha, f, cfg.thresholds)?;
        let target = cfg.target.clone().unwrap_or_else(IntervalSet::empty);
        let extent = target
            .components()
            .iter()
            .flat_map(|&(a, b)| [a.abs(), b.abs()])
            .fold(0.0, f64::max);
        Ok(Self {
            params: StableParams::new(cfg.alpha)?,
            grid,
            classifier,
            target,
            target_radius: cfg.thresholds.escape_radius.max(2.0 * extent),
            cfg: cfg.clone(),
        })
    }

    fn path(&self, z: f64, zi: usize, i: u64) -> Result<PathSample> {
        let mut rng = stream(self.cfg.seed, ((zi as u64) << 40) | i);
        sample_path_with(
            &self.params,
            z,
            self.cfg.horizon,
            &self.grid,
            self.cfg.killing.as_ref(),
            &mut rng,
        )
    }

    fn outcome(&self, path: &PathSample) -> Outcome {
        match self.cfg.estimator {
            EstimatorKind::HittingProb => {
                if first_hitting_time(path, &self.target).is_finite() {
                    Outcome::Success
                } else if self.target.is_empty()
                    || path.killed_at.is_some()
                    || (self.target_radius.is_finite() && escaped(path, self.target_radius))
                {
                    Outcome::Failure
                } else {
                    Outcome::Undetermined
                }
            }
            EstimatorKind::SmalltimeFiniteness => {
                let sk = IntegralSkeleton::new(path, self.classifier.integrand());
                let first = path.times().get(1).copied().unwrap_or_else(|| path.end_time());
                if sk.value(first).value() <= self.cfg.thresholds.big_m {
                    Outcome::Success
                } else {
                    Outcome::Failure
                }
            }
            EstimatorKind::FinitenessProb | EstimatorKind::ExplosionProb => {
                from_tri(self.classifier.classify(path).explodes)
            }
            EstimatorKind::FreezeProb => from_tri(self.classifier.classify(path).freezes),
        }
    }

    fn estimate(&self, z: f64, zi: usize) -> Result<Estimate> {
        let outcomes: Vec<Outcome> = (0..self.cfg.replicates)
            .into_par_iter()
            .map(|i| self.path(z, zi, i).map(|p| self.outcome(&p)))
            .collect::<Result<_>>()?;
        let successes = outcomes.iter().filter(|&&o| o == Outcome::Success).count() as u64;
        let resolved = outcomes.iter().filter(|&&o| o != Outcome::Undetermined).count() as u64;
        Ok(Estimate::from_counts(
            successes,
            resolved,
            self.cfg.replicates,
            self.cfg.seed,
        ))
    }
}

fn in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

fn single(cfg: &ExperimentConfig, kind: EstimatorKind) -> Result<Estimate> {
    if cfg.estimator != kind {
        return Err(Error::Config(format!(
            "estimator is {}, expected {}",
            cfg.estimator.name(),
            kind.name()
        )));
    }
    if cfg.z.len() != 1 {
        return Err(Error::invalid(
            "z",
            "a single issuing point is required; use run_experiment for lists",
        ));
    }
    let prepared = Prepared::new(cfg)?;
    in_pool(0, || prepared.estimate(cfg.z[0], 0))?
}

/// Fraction of replicates whose path integral is certified finite: below
/// `M` at the horizon, escaped beyond `R`, and with a finite integral test
/// at infinity. Unresolved paths count as undetermined.
pub fn estimate_finiteness_probability(cfg: &ExperimentConfig) -> Result<Estimate> {
    single(cfg, EstimatorKind::FinitenessProb)
}

/// Fraction of replicates entering the target within the horizon; a miss is
/// resolved once the path has escaped beyond `max(R, 2·extent of target)`.
pub fn estimate_hitting_probability(cfg: &ExperimentConfig) -> Result<Estimate> {
    single(cfg, EstimatorKind::HittingProb)
}

/// Fraction of replicates whose integral is finite over the first cell.
pub fn estimate_smalltime_finiteness(cfg: &ExperimentConfig) -> Result<Estimate> {
    single(cfg, EstimatorKind::SmalltimeFiniteness)
}

pub fn estimate_freeze_probability(cfg: &ExperimentConfig) -> Result<Estimate> {
    single(cfg, EstimatorKind::FreezeProb)
}

pub fn estimate_explosion_probability(cfg: &ExperimentConfig) -> Result<Estimate> {
    single(cfg, EstimatorKind::ExplosionProb)
}

/// One output row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub estimator: EstimatorKind,
    pub alpha: f64,
    pub z: f64,
    pub estimate: Estimate,
}

pub const CSV_HEADER: &str = "estimator,alpha,z,point,ci_lo,ci_hi,n,undetermined,seed";

impl Row {
    pub fn csv_line(&self) -> String {
        let e = &self.estimate;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.estimator.name(),
            self.alpha,
            self.z,
            e.point,
            e.ci95.lo,
            e.ci95.hi,
            e.n,
            e.undetermined_fraction,
            e.seed
        )
    }
}

/// Runs every configuration (each over its list of issuing points) on a
/// pool of `threads` workers (`0` = one per core) and writes the CSV. The
/// output depends only on the configs, never on the worker count.
pub fn run_experiment<W: Write>(cfgs: &[ExperimentConfig], sink: &mut W, threads: usize) -> Result<Vec<Row>> {
    if cfgs.is_empty() {
        return Err(Error::Empty("experiment sweep"));
    }
    let prepared: Vec<Prepared> = cfgs.iter().map(Prepared::new).collect::<Result<_>>()?;
    let rows = in_pool(threads, || -> Result<Vec<Row>> {
        let mut rows = Vec::new();
        for p in &prepared {
            for (zi, &z) in p.cfg.z.iter().enumerate() {
                rows.push(Row {
                    estimator: p.cfg.estimator,
                    alpha: p.cfg.alpha,
                    z,
                    estimate: p.estimate(z, zi)?,
                });
            }
        }
        Ok(rows)
    })??;
    let ctx = |e| Error::io("writing experiment csv", e);
    writeln!(sink, "{CSV_HEADER}").map_err(ctx)?;
    for row in &rows {
        writeln!(sink, "{}", row.csv_line()).map_err(ctx)?;
    }
    sink.flush().map_err(ctx)?;
    Ok(rows)
}

/// Cross-check for hitting rows over several issuing points: the estimate
/// should not increase with the distance to the target beyond sampling
/// error. Returns the pairs `(z_near, z_far)` that violate it with disjoint
/// confidence intervals.
pub fn hitting_monotonicity_violations(rows: &[Row], target: &IntervalSet) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for a in rows {
        for b in rows {
            if target.distance(a.z) < target.distance(b.z) && b.estimate.ci95.lo > a.estimate.ci95.hi {
                out.push((a.z, b.z));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        parse_configs(json).unwrap().remove(0)
    }

    #[test]
    fn config_parsing() {
        let c = cfg(
            r#"{"alpha":0.5,"f":"const:0","z":0,"replicates":3,"horizon":1,"step":0.1,
                        "estimator":"finiteness"}"#,
        );
        assert_eq!(c.z, vec![0.0]);
        assert_eq!(c.thresholds, Thresholds::default());
        assert_eq!(c.role(), Role::F);
        let c = cfg(
            r#"{"alpha":0.5,"sigma":"power:|x|^1.5","z":[0,1],"replicates":3,"horizon":1,
                        "step":0.1,"estimator":"freeze_prob","thresholds":{"M":100}}"#,
        );
        assert_eq!(c.z, vec![0.0, 1.0]);
        assert_eq!(c.role(), Role::Sigma);
        assert_eq!(c.thresholds.big_m, 100.0);
        assert_eq!(c.thresholds.escape_radius, 1e3);
        let c = cfg(
            r#"{"alpha":0.5,"f":"const:1","z":0,"replicates":3,"horizon":1,"step":0.1,
                        "estimator":"hitting","target":"[1,2]"}"#,
        );
        assert_eq!(c.target, Some(IntervalSet::interval(1.0, 2.0)));
        assert!(parse_configs(
            r#"{"alpha":0.5,"f":"const:1","z":0,"replicates":3,"horizon":1,"step":0.1,
                        "estimator":"hitting"}"#
        )
        .is_err());
        assert!(parse_configs(
            r#"{"alpha":0.5,"f":"const:1","z":0,"replicates":0,"horizon":1,"step":0.1,
                        "estimator":"smalltime"}"#
        )
        .is_err());
        assert!(parse_configs(
            r#"{"alpha":0.5,"f":"const:1","z":0,"replicates":1,"horizon":1,"step":0.1,
                        "estimator":"smalltime","bogus":1}"#
        )
        .is_err());
        assert_eq!(parse_configs("[]").unwrap_err().kind(), "empty_input");
    }

    #[test]
    fn vanishing_integrand_is_finite_with_degenerate_interval() {
        let c = cfg(
            r#"{"alpha":0.5,"f":"const:0","z":0,"replicates":50,"horizon":1,"step":0.1,
                        "estimator":"finiteness_prob","seed":7}"#,
        );
        let e = estimate_finiteness_probability(&c).unwrap();
        assert_eq!(e.point, 1.0);
        assert_eq!(e.undetermined_fraction, 0.0);
        assert_eq!(e.n, 50);
        assert_eq!(e.seed, 7);
        assert!(e.ci95.lo < 1.0 && e.ci95.hi == 1.0);
        assert!(estimate_hitting_probability(&c).is_err());
    }

    #[test]
    fn trivial_hitting_cases() {
        let c = cfg(
            r#"{"alpha":0.5,"f":"const:1","z":1.5,"replicates":20,"horizon":1,"step":0.1,
                        "estimator":"hitting","target":"[1,2)"}"#,
        );
        assert_eq!(estimate_hitting_probability(&c).unwrap().point, 1.0);
        let c = cfg(
            r#"{"alpha":0.5,"f":"const:1","z":1.5,"replicates":20,"horizon":1,"step":0.1,
                        "estimator":"hitting","target":"empty"}"#,
        );
        let e = estimate_hitting_probability(&c).unwrap();
        assert_eq!((e.point, e.undetermined_fraction), (0.0, 0.0));
    }

    #[test]
    fn smalltime_constant() {
        let c = cfg(
            r#"{"alpha":0.5,"f":"const:1","z":3,"replicates":20,"horizon":1,"step":0.1,
                        "estimator":"smalltime"}"#,
        );
        assert_eq!(estimate_smalltime_finiteness(&c).unwrap().point, 1.0);
    }

    #[test]
    fn one_row_per_z_and_deterministic() {
        let cfgs = parse_configs(
            r#"{"alpha":0.5,"sigma":"power:|x|^0.5","z":[0,1,2],"replicates":1,"horizon":1,"step":0.1,
                "estimator":"freeze_prob","seed":3}"#,
        )
        .unwrap();
        let mut a = Vec::new();
        let rows = run_experiment(&cfgs, &mut a, 1).unwrap();
        assert_eq!(rows.len(), 3);
        let mut b = Vec::new();
        run_experiment(&cfgs, &mut b, 2).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 4);
    }
}
