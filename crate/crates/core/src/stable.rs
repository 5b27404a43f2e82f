//! Symmetric α-stable driving process: exact increment sampling, path
//! skeletons on several grid types, exponential killing, and the potential
//! kernel of the subcritical (`α < 1`) case.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{check_positive, check_subcritical, Error, Result};
use crate::interval::PointSet;

/// Law of the driving process: characteristic function `exp(-t |scale·u|^α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl StableParams {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_scale(alpha, 1.0)
    }

    pub fn with_scale(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::invalid("alpha", format!("{alpha} is outside (0,2]")));
        }
        check_positive("scale", scale)?;
        Ok(Self { alpha, scale })
    }

    pub fn validate(&self) -> Result<()> {
        Self::with_scale(self.alpha, self.scale).map(|_| ())
    }

    /// Spatial scale of an increment over a time `dt`.
    pub fn spread(&self, dt: f64) -> f64 {
        self.scale * dt.powf(1.0 / self.alpha)
    }
}

/// Independent exponential killing at rate `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KillingSpec {
    pub q: f64,
}

impl KillingSpec {
    pub fn new(q: f64) -> Result<Self> {
        check_positive("q", q)?;
        Ok(Self { q })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        -u.ln() / self.q
    }
}

/// One draw from the unit-time symmetric stable law (Chambers–Mallows–Stuck).
pub fn sample_unit<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v = PI * (u - 0.5);
    let w = -rng.sample::<f64, _>(Open01).ln();
    if alpha == 1.0 {
        return v.tan();
    }
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * v).cos() / w;
    a * b.powf((1.0 - alpha) / alpha)
}

/// Increment `X_dt − X_0` of the driving process.
pub fn sample_increment<R: Rng + ?Sized>(params: &StableParams, dt: f64, rng: &mut R) -> Result<f64> {
    check_positive("dt", dt)?;
    Ok(params.spread(dt) * sample_unit(params.alpha, rng))
}

/// `|z − x|^{α−1}`, the potential density with its normalizing constant set to 1.
pub fn potential_kernel(alpha: f64, z: f64, x: f64) -> Result<f64> {
    check_subcritical(alpha)?;
    let d = (z - x).abs();
    Ok(if d == 0.0 { f64::INFINITY } else { d.powf(alpha - 1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Uniform,
    JumpAdapted,
    StateAdaptive,
}

/// How the sampling grid is laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Refinement {
    /// Fixed mesh `step`.
    Uniform,
    /// Each cell is drawn as two half-cell increments; the midpoint node is
    /// kept when the cell increment exceeds `threshold`
    /// (default `10·spread(step)`).
    JumpAdapted {
        #[serde(default, with = "crate::ext::option")]
        threshold: Option<f64>,
    },
    /// Cell length `max(step, (rel·d)^α)` where `d` is the distance of the
    /// current position to `focus`: relative spatial resolution `rel`
    /// around the region of interest, coarse steps far from it. The step is
    /// chosen from the current state only, so node marginals stay exact.
    StateAdaptive { focus: PointSet, rel: f64 },
}

/// Grid layout for [`sample_path_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    #[serde(default = "uniform")]
    pub refinement: Refinement,
    /// Number of dyadic levels inserted into the first cell, so that the
    /// skeleton resolves the departure from the issuing point.
    #[serde(default)]
    pub start_levels: u32,
}

fn uniform() -> Refinement {
    Refinement::Uniform
}

impl GridSpec {
    pub fn uniform(step: f64) -> Self {
        Self {
            step,
            refinement: Refinement::Uniform,
            start_levels: 0,
        }
    }

    pub fn kind(&self) -> GridKind {
        match self.refinement {
            Refinement::Uniform => GridKind::Uniform,
            Refinement::JumpAdapted { .. } => GridKind::JumpAdapted,
            Refinement::StateAdaptive { .. } => GridKind::StateAdaptive,
        }
    }

    fn validate(&self) -> Result<()> {
        check_positive("step", self.step)?;
        match &self.refinement {
            Refinement::JumpAdapted { threshold: Some(t) } => check_positive("threshold", *t),
            Refinement::StateAdaptive { rel, .. } => check_positive("rel", *rel),
            _ => Ok(()),
        }?;
        if self.start_levels > 60 {
            return Err(Error::invalid("start_levels", "at most 60 dyadic levels"));
        }
        Ok(())
    }
}

/// A right-continuous piecewise-constant path skeleton: `values[i]` holds on
/// `[times[i], times[i+1])`, and the last value holds until the end time
/// ([`killed_at`](Self::killed_at) if killed, otherwise the horizon).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub origin: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    pub horizon: f64,
    pub killed_at: Option<f64>,
    pub grid_kind: GridKind,
    /// Stability index of the sampled process, when known. Integrals of
    /// functions with point poles use it to resolve departures from a pole.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl PathSample {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        horizon: f64,
        killed_at: Option<f64>,
        grid_kind: GridKind,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid(
                "path",
                "times and values must be nonempty and of equal length",
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("path", "times must start at 0"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("path", "times must be strictly increasing"));
        }
        check_positive("horizon", horizon)?;
        let last = *times.last().unwrap();
        if last > horizon {
            return Err(Error::invalid("path", "last time exceeds the horizon"));
        }
        if let Some(k) = killed_at {
            if !(k > last && k <= horizon) {
                return Err(Error::invalid(
                    "killed_at",
                    "must lie after the last node and within the horizon",
                ));
            }
        }
        Ok(Self {
            origin: values[0],
            times,
            values,
            horizon,
            killed_at,
            grid_kind,
            alpha: None,
        })
    }

    /// Records the stability index of the process the skeleton samples.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// End of the last cell: the killing time or the horizon.
    pub fn end_time(&self) -> f64 {
        self.killed_at.unwrap_or(self.horizon)
    }

    /// Cell `i` as `(start, end, value)`.
    pub fn cell(&self, i: usize) -> (f64, f64, f64) {
        let end = self.times.get(i + 1).copied().unwrap_or_else(|| self.end_time());
        (self.times[i], end, self.values[i])
    }

    /// Index of the cell containing `t` (the last node `≤ t`).
    pub fn cell_index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// `X_t` on the skeleton; `None` beyond the killing time.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if self.killed_at.is_some_and(|k| t >= k) || t > self.horizon || t < 0.0 {
            return None;
        }
        Some(self.values[self.cell_index(t)])
    }

    /// Reflected path `−X`.
    pub fn negated(&self) -> Self {
        Self {
            origin: -self.origin,
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    /// CSV with header `t,x`; a trailing `# killed_at=<v>` line when killed.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x")?;
        for (t, x) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t},{x}")?;
        }
        if let Some(k) = self.killed_at {
            writeln!(w, "# killed_at={k}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    /// Parses the CSV form. The horizon is not stored in the file and must be
    /// supplied.
    pub fn read_csv<R: BufRead>(r: R, horizon: f64, grid_kind: GridKind) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut killed_at = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("reading path csv", e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("killed_at=") {
                    killed_at = Some(
                        v.parse()
                            .map_err(|_| Error::invalid("csv", format!("bad killed_at {v:?}")))?,
                    );
                }
                continue;
            }
            if lineno == 0 {
                if line != "t,x" {
                    return Err(Error::invalid("csv", "expected header `t,x`"));
                }
                continue;
            }
            let (t, x) = line
                .split_once(',')
                .ok_or_else(|| Error::invalid("csv", format!("line {}: expected `t,x`", lineno + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid("csv", format!("line {}: bad number {s:?}", lineno + 1)))
            };
            times.push(parse(t)?);
            values.push(parse(x)?);
        }
        Self::new(times, values, horizon, killed_at, grid_kind)
    }
}

/// Samples a path on a uniform grid of mesh `step`.
pub fn sample_path<R: Rng + ?Sized>(
    params: &StableParams,
    z: f64,
    horizon: f64,
    step: f64,
    killing: Option<&KillingSpec>,
    rng: &mut R,
) -> Result<PathSample> {
    sample_path_with(params, z, horizon, &GridSpec::uniform(step), killing, rng)
}

/// Samples a path skeleton from `z` up to `horizon` (or the killing time).
///
/// Node values are exact draws of the process at the node times; a node is
/// placed at the horizon itself unless the path is killed first.
pub fn sample_path_with<R: Rng + ?Sized>(
    params: &StableParams,
    z: f64,
    horizon: f64,
    grid: &GridSpec,
    killing: Option<&KillingSpec>,
    rng: &mut R,
) -> Result<PathSample> {
    params.validate()?;
    check_positive("horizon", horizon)?;
    if !z.is_finite() {
        return Err(Error::invalid("z", "issuing point must be finite"));
    }
    grid.validate()?;

    let kill = killing.map(|k| k.sample(rng)).filter(|&k| k <= horizon);
    let end = kill.unwrap_or(horizon);
    let alpha = params.alpha;
    let step = grid.step;
    let jump_threshold = match grid.refinement {
        Refinement::JumpAdapted { threshold } => threshold.unwrap_or(10.0 * params.spread(step)),
        _ => f64::INFINITY,
    };

    let mut times = vec![0.0];
    let mut values = vec![z];
    let mut x = z;
    let mut t = 0.0;

    // Appends a node at `t_next` (which must be < end unless it is the horizon).
    let advance = |t0: f64, t1: f64, x0: f64, rng: &mut R, times: &mut Vec<f64>, values: &mut Vec<f64>| -> f64 {
        let dt = t1 - t0;
        if jump_threshold.is_finite() {
            let half = 0.5 * dt;
            let a = params.spread(half) * sample_unit(alpha, rng);
            let b = params.spread(half) * sample_unit(alpha, rng);
            let tm = t0 + half;
            if (a + b).abs() > jump_threshold && tm > t0 && tm < t1 {
                times.push(tm);
                values.push(x0 + a);
            }
            times.push(t1);
            values.push(x0 + a + b);
            x0 + a + b
        } else {
            let x1 = x0 + params.spread(dt) * sample_unit(alpha, rng);
            times.push(t1);
            values.push(x1);
            x1
        }
    };

    let next_len = |x: f64| -> f64 {
        match &grid.refinement {
            Refinement::StateAdaptive { focus, rel } => {
                let d = focus.distance(x);
                let d = if d.is_finite() { d } else { 0.0 };
                step.max((rel * d / params.scale).powf(alpha))
            }
            _ => step,
        }
    };

    // dyadic refinement of the first cell
    if grid.start_levels > 0 {
        let first = next_len(x).min(end);
        let mut node = first * 0.5_f64.powi(grid.start_levels as i32);
        while node < first && node < end {
            if node > t {
                x = advance(t, node, x, rng, &mut times, &mut values);
                t = node;
            }
            node *= 2.0;
        }
    }

    let uniform = matches!(grid.refinement, Refinement::Uniform | Refinement::JumpAdapted { .. });
    let mut i: u64 = (t / step).floor() as u64;
    loop {
        let t_next = if uniform {
            i += 1;
            // avoid drift from repeated addition
            (i as f64 * step).min(horizon)
        } else {
            (t + next_len(x)).min(horizon)
        };
        let t_next = t_next.max(t.next_up());
        if t_next >= end && kill.is_some() {
            break;
        }
        x = advance(t, t_next, x, rng, &mut times, &mut values);
        t = t_next;
        if t >= horizon {
            break;
        }
    }

    Ok(PathSample::new(times, values, horizon, kill, grid.kind())?.with_alpha(alpha))
}
