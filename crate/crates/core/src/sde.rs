//! Weak solutions of `dZ = σ(Z₋) dX` by time change, `Z_s = X(φ_s)` with
//! `φ` the right-continuous inverse of `I_t = ∫_0^t σ(X_u)^{−α} du`, and the
//! existence/uniqueness classification from the sets `O(σ, α)` and `N(σ)`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_subcritical, Error, Result};
use crate::function::FunctionSpec;
use crate::functionals::{IntegralSkeleton, PathClassifier, PathVerdict, Thresholds, Tri};
use crate::integral_tests::{irregular_set, zero_set};
use crate::interval::PointSet;
use crate::stable::{sample_path_with, GridSpec, KillingSpec, PathSample, StableParams};
use crate::stats::{wilson95, Interval95};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionStatus {
    /// The driver was killed before the horizon with nothing certified.
    Running,
    /// `φ_∞ < ∞`: the clock stopped and the solution is constant afterwards.
    Frozen,
    /// `ζ = I_∞ < ∞`: the solution's lifetime is finite.
    Exploded,
    /// Neither freezing nor explosion certified by the horizon.
    HorizonReached,
}

/// A solution sampled on the grid `s_i = I(t_i)` induced by the driver nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPath {
    pub z: f64,
    pub driver: PathSample,
    s: Vec<f64>,
    phi: Vec<f64>,
    z_values: Vec<f64>,
    pub status: SolutionStatus,
    /// Solution time from which `Z` is constant.
    pub frozen_at: Option<f64>,
    /// The lifetime `ζ`.
    pub exploded_at: Option<f64>,
    pub verdict: PathVerdict,
}

impl SolutionPath {
    /// Builds the time-changed solution on a given driver path.
    pub fn on_driver(driver: PathSample, classifier: &PathClassifier) -> Self {
        let skeleton = IntegralSkeleton::new(&driver, classifier.integrand());
        let verdict = classifier.classify_skeleton(&driver, &skeleton);
        let at_nodes = skeleton.at_nodes();
        let mut s = Vec::with_capacity(driver.len());
        let mut phi = Vec::with_capacity(driver.len());
        let mut z_values = Vec::with_capacity(driver.len());
        let (status, frozen_at, exploded_at) = match verdict.freeze_time {
            Some(tau) if verdict.freezes == Tri::Yes => {
                for ((&si, &t), &x) in at_nodes.iter().zip(driver.times()).zip(driver.values()) {
                    if t >= tau {
                        break;
                    }
                    s.push(si);
                    phi.push(t);
                    z_values.push(x);
                }
                let s_tau = skeleton.value(tau).value().min(verdict.thresholds.big_m);
                let x_tau = driver.values()[driver.cell_index(tau)];
                s.push(s_tau);
                phi.push(tau);
                z_values.push(x_tau);
                (SolutionStatus::Frozen, Some(s_tau), None)
            }
            _ => {
                s.extend_from_slice(at_nodes);
                phi.extend_from_slice(driver.times());
                z_values.extend_from_slice(driver.values());
                if verdict.explodes == Tri::Yes {
                    (SolutionStatus::Exploded, None, Some(skeleton.total().value()))
                } else if driver.killed_at.is_some() {
                    (SolutionStatus::Running, None, None)
                } else {
                    (SolutionStatus::HorizonReached, None, None)
                }
            }
        };
        Self {
            z: driver.origin,
            driver,
            s,
            phi,
            z_values,
            status,
            frozen_at,
            exploded_at,
            verdict,
        }
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    /// `Z_s`, or `None` past the end of what the driver determines (beyond
    /// the lifetime, or beyond `I` at the horizon when not frozen).
    pub fn value_at(&self, s: f64) -> Option<f64> {
        if s < 0.0 {
            return None;
        }
        let i = self.s.partition_point(|&v| v <= s).saturating_sub(1);
        if self.status == SolutionStatus::Frozen {
            return Some(self.z_values[i]);
        }
        let end = self.verdict.integral_at_horizon.value();
        (s < end || (s == 0.0 && end == 0.0)).then(|| self.z_values[i])
    }

    /// CSV with header `s,phi,z_value` and a trailing `# status=<status>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s,phi,z_value")?;
        for ((s, phi), z) in self.s.iter().zip(&self.phi).zip(&self.z_values) {
            writeln!(w, "{s},{phi},{z}")?;
        }
        let status = serde_json::to_value(self.status).expect("status serializes");
        writeln!(w, "# status={}", status.as_str().unwrap_or_default())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Simulates the driver from `z` on a uniform grid and time-changes it.
pub fn solve_time_change<R: Rng + ?Sized>(
    alpha: f64,
    sigma: &FunctionSpec,
    z: f64,
    horizon: f64,
    step: f64,
    rng: &mut R,
) -> Result<SolutionPath> {
    solve_with(
        alpha,
        sigma,
        z,
        horizon,
        &GridSpec::uniform(step),
        Thresholds::default(),
        None,
        rng,
    )
}

/// [`solve_time_change`] with an explicit grid, thresholds and killing.
#[allow(clippy::too_many_arguments)]
pub fn solve_with<R: Rng + ?Sized>(
    alpha: f64,
    sigma: &FunctionSpec,
    z: f64,
    horizon: f64,
    grid: &GridSpec,
    thresholds: Thresholds,
    killing: Option<&KillingSpec>,
    rng: &mut R,
) -> Result<SolutionPath> {
    let classifier = PathClassifier::for_sigma(alpha, sigma, thresholds)?;
    let driver = sample_path_with(&StableParams::new(alpha)?, z, horizon, grid, killing, rng)?;
    Ok(SolutionPath::on_driver(driver, &classifier))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalVerdict {
    pub z: f64,
    /// A non-trivial local weak solution exists from `z`.
    pub nontrivial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    #[serde(rename = "O")]
    pub irregular: PointSet,
    #[serde(rename = "N")]
    pub zeros: PointSet,
    #[serde(rename = "local_at")]
    pub local_nontrivial_at: Vec<LocalVerdict>,
    /// A global weak solution exists from every `z` (`O ⊆ N`).
    #[serde(rename = "global_all")]
    pub global_all_z: bool,
    /// A non-trivial global weak solution exists from every `z` (`O = ∅`).
    #[serde(rename = "nontrivial_global_all")]
    pub nontrivial_global_all_z: bool,
    /// The solution is unique in law from every `z` (`O = N`).
    #[serde(rename = "unique_all")]
    pub unique_global_all_z: bool,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    /// Whether a non-trivial local weak solution exists from `z` (`z ∉ O`).
    pub fn local_nontrivial(&self, z: f64) -> bool {
        !self.irregular.contains(z)
    }
}

/// Classification of `dZ = σ(Z₋)dX`, reporting the local predicate at the
/// isolated points and interval endpoints of `O ∪ N`.
pub fn classify_sde(alpha: f64, sigma: &FunctionSpec) -> Result<ClassificationReport> {
    classify_sde_at(alpha, sigma, &[])
}

/// [`classify_sde`] with the local predicate also evaluated at `points`.
pub fn classify_sde_at(alpha: f64, sigma: &FunctionSpec, points: &[f64]) -> Result<ClassificationReport> {
    check_subcritical(alpha)?;
    sigma.validate()?;
    let o = irregular_set(alpha, sigma)?;
    let n = zero_set(sigma);
    let global = o.is_subset(&n);
    let nontrivial = o.is_empty();
    let unique = global && n.is_subset(&o);

    let mut at: Vec<f64> = points.to_vec();
    for set in [&o, &n] {
        at.extend(&set.points);
        for &(a, b) in set.intervals.components() {
            at.extend([a, b].into_iter().filter(|v| v.is_finite()));
        }
    }
    at.sort_by(f64::total_cmp);
    at.dedup();
    let local: Vec<LocalVerdict> = at
        .into_iter()
        .map(|z| LocalVerdict {
            z,
            nontrivial: !o.contains(z),
        })
        .collect();

    let mut notes = Vec::new();
    if !global {
        notes.push("O is not contained in N: from points of O outside N only the frozen path remains, and it is not a solution there".into());
    }
    if global && !unique {
        notes.push(
            "O is a proper subset of N: at zeros outside O the trivial solution and the time-changed one coexist"
                .into(),
        );
    }
    if nontrivial && n.is_empty() {
        notes.push("no zeros: the time change of the driver is the unique solution from every point".into());
    }
    let report = ClassificationReport {
        irregular: o,
        zeros: n,
        local_nontrivial_at: local,
        global_all_z: global,
        nontrivial_global_all_z: nontrivial,
        unique_global_all_z: unique,
        notes,
    };
    debug_assert!(!report.unique_global_all_z || report.global_all_z);
    debug_assert!(!report.nontrivial_global_all_z || report.global_all_z);
    debug_assert!(!report.nontrivial_global_all_z || report.local_nontrivial_at.iter().all(|v| v.nontrivial));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub count: u64,
    pub point: f64,
    pub ci95: Interval95,
}

impl Proportion {
    fn new(count: u64, n: u64) -> Self {
        Self {
            count,
            point: count as f64 / n as f64,
            ci95: wilson95(count, n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatusSummary {
    pub n: u64,
    pub frozen: Proportion,
    pub exploded: Proportion,
    pub neither: Proportion,
}

/// Frozen/exploded/neither fractions with Wilson 95% intervals.
pub fn solution_status_summary(paths: &[SolutionPath]) -> Result<StatusSummary> {
    if paths.is_empty() {
        return Err(Error::Empty("solution paths"));
    }
    let (mut frozen, mut exploded) = (0u64, 0u64);
    for p in paths {
        if p.verdict.freezes == Tri::Yes && p.verdict.explodes == Tri::Yes {
            return Err(Error::invalid("paths", "a path is both frozen and exploded"));
        }
        match p.status {
            SolutionStatus::Frozen => frozen += 1,
            SolutionStatus::Exploded => exploded += 1,
            _ => {}
        }
    }
    let n = paths.len() as u64;
    Ok(StatusSummary {
        n,
        frozen: Proportion::new(frozen, n),
        exploded: Proportion::new(exploded, n),
        neither: Proportion::new(n - frozen - exploded, n),
    })
}
