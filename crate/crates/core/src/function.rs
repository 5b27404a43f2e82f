//! Structured descriptions of the coefficient `σ` and of integrands `f`
//! with values in `[0, +∞]`: piecewise power laws, tables, and marked
//! poles/zeros.
//!
//! The JSON form is
//!
//! ```json
//! {"pieces":[{"interval":[-1,1],"form":{"power":{"c":1,"e":0.5,"p":0}}}],
//!  "poles":[2.0],
//!  "zeros":[{"at":0,"isolated_monotone":true,"delta":1}]}
//! ```
//!
//! and an inline mini-language covers the common cases (see [`FunctionSpec::parse`]).
//!
//! Evaluation order at a point: marked poles (`+∞`), then marked zeros,
//! then the piece containing the point, and `0` outside every piece.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::interval::{IntervalSet, PointSet};
use crate::wiener::build_example_set;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `c·|x − p|^e`
    Power {
        #[serde(default = "one")]
        c: f64,
        e: f64,
        #[serde(default)]
        p: f64,
    },
    /// `c·(1 + (x − p)²)^{e/2}`
    SmoothPower {
        #[serde(default = "one")]
        c: f64,
        e: f64,
        #[serde(default)]
        p: f64,
    },
    /// Piecewise-linear interpolation of `(x, y)`; constant beyond the
    /// first/last node.
    Table { x: Vec<f64>, y: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl Form {
    pub fn constant(c: f64) -> Self {
        Form::Power { c, e: 0.0, p: 0.0 }
    }

    /// Whether the form vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self {
            Form::Power { c, .. } | Form::SmoothPower { c, .. } => *c == 0.0,
            Form::Table { y, .. } => y.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Form::Power { c, e, p } => {
                if c == 0.0 {
                    return 0.0;
                }
                if e == 0.0 {
                    return c;
                }
                let d = (x - p).abs();
                if d == 0.0 {
                    if e < 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    c * d.powf(e)
                }
            }
            Form::SmoothPower { c, e, p } => {
                let d = x - p;
                c * (1.0 + d * d).powf(0.5 * e)
            }
            Form::Table { x: ref xs, ref y } => table_eval(xs, y, x),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Form::Power { c, e, p } | Form::SmoothPower { c, e, p } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::MalformedFunction(format!(
                        "coefficient c = {c} must be finite and ≥ 0"
                    )));
                }
                if !e.is_finite() || !p.is_finite() {
                    return Err(Error::MalformedFunction("exponent and anchor must be finite".into()));
                }
            }
            Form::Table { x, y } => {
                if x.is_empty() || x.len() != y.len() {
                    return Err(Error::MalformedFunction(
                        "table needs equally many x and y values".into(),
                    ));
                }
                if x.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::MalformedFunction(
                        "table x values must be strictly increasing".into(),
                    ));
                }
                if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::MalformedFunction("table values must be finite and y ≥ 0".into()));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn table_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v <= x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    /// Half-open `[a, b)`; endpoints may be `"inf"`/`"-inf"`.
    #[serde(with = "pair")]
    pub interval: (f64, f64),
    pub form: Form,
}

/// A point or a half-open interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Locus {
    Point(f64),
    Interval(f64, f64),
}

impl Locus {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Locus::Point(p) => p == x,
            Locus::Interval(a, b) => a <= x && x < b,
        }
    }
}

/// A marked pole or zero. `isolated_monotone` asserts that the function is
/// monotone on each side of the point within radius `delta` (increasing
/// towards a pole, decreasing towards a zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mark {
    pub at: Locus,
    pub isolated_monotone: bool,
    pub delta: Option<f64>,
}

impl Mark {
    pub fn point(at: f64) -> Self {
        Self {
            at: Locus::Point(at),
            isolated_monotone: false,
            delta: None,
        }
    }

    pub fn monotone(at: f64, delta: Option<f64>) -> Self {
        Self {
            at: Locus::Point(at),
            isolated_monotone: true,
            delta,
        }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Self {
            at: Locus::Interval(a, b),
            isolated_monotone: false,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    #[serde(default)]
    pub pieces: Vec<Piece>,
    #[serde(default)]
    pub poles: Vec<Mark>,
    #[serde(default)]
    pub zeros: Vec<Mark>,
}

impl FunctionSpec {
    /// Validates piece geometry and coefficients.
    pub fn new(pieces: Vec<Piece>, poles: Vec<Mark>, zeros: Vec<Mark>) -> Result<Self> {
        let spec = Self { pieces, poles, zeros };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut spans: Vec<(f64, f64)> = Vec::with_capacity(self.pieces.len());
        for piece in &self.pieces {
            let (a, b) = piece.interval;
            if a.is_nan() || b.is_nan() || !(a < b) {
                return Err(Error::MalformedFunction(format!(
                    "piece interval [{a}, {b}) is empty or invalid"
                )));
            }
            piece.form.validate()?;
            spans.push((a, b));
        }
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        if spans.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::MalformedFunction("pieces overlap".into()));
        }
        for m in self.poles.iter().chain(&self.zeros) {
            match m.at {
                Locus::Point(p) if !p.is_finite() => {
                    return Err(Error::MalformedFunction("marked points must be finite".into()))
                }
                Locus::Interval(a, b) if a.is_nan() || b.is_nan() || !(a < b) => {
                    return Err(Error::MalformedFunction(format!("marked interval [{a}, {b}) is empty")))
                }
                _ => {}
            }
            if let Some(d) = m.delta {
                if !(d > 0.0) {
                    return Err(Error::MalformedFunction("delta must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// `c` on the whole line.
    pub fn constant(c: f64) -> Self {
        Self::on(f64::NEG_INFINITY, f64::INFINITY, Form::constant(c))
    }

    /// `c·|x − p|^e` on the whole line.
    pub fn power(c: f64, e: f64, p: f64) -> Self {
        Self::on(f64::NEG_INFINITY, f64::INFINITY, Form::Power { c, e, p })
    }

    /// A single piece on `[a, b)`, zero elsewhere.
    pub fn on(a: f64, b: f64, form: Form) -> Self {
        Self {
            pieces: vec![Piece { interval: (a, b), form }],
            ..Self::default()
        }
    }

    /// `+∞` on `set`, `0` elsewhere.
    pub fn infinite_on(set: &IntervalSet) -> Self {
        Self {
            poles: set.components().iter().map(|&(a, b)| Mark::interval(a, b)).collect(),
            ..Self::default()
        }
    }

    /// `1` off `set`, `0` on it (the coefficient that freezes on `set`).
    pub fn indicator_complement(set: &IntervalSet) -> Self {
        Self {
            pieces: set
                .complement()
                .components()
                .iter()
                .map(|&(a, b)| Piece {
                    interval: (a, b),
                    form: Form::constant(1.0),
                })
                .collect(),
            zeros: set.components().iter().map(|&(a, b)| Mark::interval(a, b)).collect(),
            ..Self::default()
        }
    }

    /// `1` on `set`, `0` elsewhere.
    pub fn indicator(set: &IntervalSet) -> Self {
        Self {
            pieces: set
                .components()
                .iter()
                .map(|&(a, b)| Piece {
                    interval: (a, b),
                    form: Form::constant(1.0),
                })
                .collect(),
            ..Self::default()
        }
    }

    pub fn with_zero(mut self, mark: Mark) -> Self {
        self.zeros.push(mark);
        self
    }

    pub fn with_pole(mut self, mark: Mark) -> Self {
        self.poles.push(mark);
        self
    }

    fn piece_at(&self, x: f64) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.interval.0 <= x && x < p.interval.1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.poles.iter().any(|m| m.at.contains(x)) {
            return f64::INFINITY;
        }
        if self.zeros.iter().any(|m| m.at.contains(x)) {
            return 0.0;
        }
        self.piece_at(x).map_or(0.0, |p| p.form.eval(x))
    }

    /// Parts of the line not covered by any piece (where the value is 0).
    pub fn uncovered(&self) -> IntervalSet {
        IntervalSet::from_pairs(self.pieces.iter().map(|p| p.interval)).complement()
    }

    /// `σ ↦ σ^{−power}` with the conventions `0^{−a} = +∞`, `(+∞)^{−a} = 0`:
    /// zeros become poles (keeping their monotone flags), poles become
    /// zeros, and uncovered gaps become pole intervals.
    pub fn reciprocal_power(&self, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::invalid("power", format!("{power} must be positive")));
        }
        self.validate()?;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        let mut poles: Vec<Mark> = self.zeros.clone();
        for piece in &self.pieces {
            let form = match &piece.form {
                Form::Power { c, .. } | Form::SmoothPower { c, .. } if *c == 0.0 => {
                    poles.push(Mark::interval(piece.interval.0, piece.interval.1));
                    continue;
                }
                Form::Power { c, e, p } => Form::Power {
                    c: c.powf(-power),
                    e: -power * e,
                    p: *p,
                },
                Form::SmoothPower { c, e, p } => Form::SmoothPower {
                    c: c.powf(-power),
                    e: -power * e,
                    p: *p,
                },
                Form::Table { x, y } => {
                    if y.iter().any(|&v| v <= 0.0) {
                        return Err(Error::MalformedFunction(
                            "tabulated coefficient vanishes; mark its zeros explicitly".into(),
                        ));
                    }
                    // pointwise reciprocal power on the nodes
                    Form::Table {
                        x: x.clone(),
                        y: y.iter().map(|v| v.powf(-power)).collect(),
                    }
                }
            };
            pieces.push(Piece {
                interval: piece.interval,
                form,
            });
        }
        poles.extend(self.uncovered().components().iter().map(|&(a, b)| Mark::interval(a, b)));
        Ok(Self {
            pieces,
            poles,
            zeros: self.poles.clone(),
        })
    }

    /// Points where some power piece anchored at `p` meets `p` with the
    /// given sign of exponent (`want_positive` selects zeros, otherwise poles).
    fn anchor_candidates(&self, want_positive: bool) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .pieces
            .iter()
            .filter_map(|piece| match piece.form {
                Form::Power { c, e, p }
                    if c > 0.0
                        && ((want_positive && e > 0.0) || (!want_positive && e < 0.0))
                        && piece.interval.0 <= p
                        && p <= piece.interval.1 =>
                {
                    Some(p)
                }
                _ => None,
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Monotone structure of the pieces on one side of `p`: `Some(len)` when
    /// the piece there is a power law anchored at `p` (or a constant) whose
    /// exponent has the sign selected by `zero_like`, `len` being how far
    /// that piece extends from `p`.
    fn side_monotone(&self, p: f64, left: bool, zero_like: bool) -> Option<f64> {
        let piece = self.pieces.iter().find(|pc| {
            let (a, b) = pc.interval;
            if left {
                a < p && p <= b
            } else {
                a <= p && p < b
            }
        })?;
        let ok = match piece.form {
            Form::Power { c, e, .. } if c > 0.0 && e == 0.0 => true,
            Form::Power { c, e, p: anchor } if c > 0.0 && anchor == p => (e > 0.0) == zero_like,
            _ => false,
        };
        ok.then_some(if left {
            p - piece.interval.0
        } else {
            piece.interval.1 - p
        })
    }

    /// Radius of the isolated-monotone neighbourhood at `z`, if the flag is
    /// set explicitly on a mark at `z` or follows from power pieces
    /// anchored at `z`.
    pub fn monotone_flag_at(&self, z: f64) -> Option<f64> {
        if let Some(m) = self
            .poles
            .iter()
            .chain(&self.zeros)
            .find(|m| m.isolated_monotone && m.at == Locus::Point(z))
        {
            return Some(m.delta.unwrap_or(f64::INFINITY));
        }
        for zero_like in [true, false] {
            let l = self.side_monotone(z, true, zero_like);
            let r = self.side_monotone(z, false, zero_like);
            if let (Some(l), Some(r)) = (l, r) {
                if self.anchor_candidates(zero_like).contains(&z) {
                    return Some(l.min(r));
                }
            }
        }
        None
    }

    /// Zero set: marked zeros, uncovered gaps, pieces with `c = 0`, and
    /// anchors of power pieces with positive exponent.
    pub fn zero_set(&self) -> PointSet {
        let mut points = Vec::new();
        let mut intervals = vec![];
        for m in &self.zeros {
            match m.at {
                Locus::Point(p) => points.push(p),
                Locus::Interval(a, b) => intervals.push((a, b)),
            }
        }
        intervals.extend(self.uncovered().components().iter().copied());
        for piece in &self.pieces {
            match piece.form {
                Form::Power { c, .. } | Form::SmoothPower { c, .. } if c == 0.0 => intervals.push(piece.interval),
                _ => {}
            }
        }
        points.extend(
            self.anchor_candidates(true)
                .into_iter()
                .filter(|&p| self.eval(p) == 0.0),
        );
        let intervals = IntervalSet::from_pairs(intervals);
        // a marked pole overrides, so drop points where the value is +∞
        PointSet::new(points.into_iter().filter(|&p| self.eval(p) == 0.0), intervals)
    }

    /// Points and intervals where the value is `+∞`.
    pub fn pole_set(&self) -> PointSet {
        let mut points = Vec::new();
        let mut intervals = vec![];
        for m in &self.poles {
            match m.at {
                Locus::Point(p) => points.push(p),
                Locus::Interval(a, b) => intervals.push((a, b)),
            }
        }
        points.extend(self.anchor_candidates(false));
        PointSet::new(points, IntervalSet::from_pairs(intervals))
    }

    /// Local power-law behaviour `c·|x − p|^e` around a point pole `p`, using
    /// the most singular of the two sides. `None` if the pieces around `p`
    /// are not power laws anchored at `p` (or constants).
    pub fn local_power_at(&self, p: f64) -> Option<(f64, f64)> {
        let side = |left: bool| -> Option<(f64, f64)> {
            let piece = self.pieces.iter().find(|pc| {
                let (a, b) = pc.interval;
                if left {
                    a < p && p <= b
                } else {
                    a <= p && p < b
                }
            });
            match piece.map(|pc| &pc.form) {
                None => Some((0.0, 0.0)),
                Some(&Form::Power { c, e: 0.0, .. }) => Some((c, 0.0)),
                Some(&Form::Power { c, e, p: anchor }) if anchor == p => Some((c, e)),
                Some(&Form::SmoothPower { c, e, p: anchor }) => {
                    let d = p - anchor;
                    Some((c * (1.0 + d * d).powf(0.5 * e), 0.0))
                }
                Some(Form::Table { x, y }) => Some((table_eval(x, y, p), 0.0)),
                _ => None,
            }
        };
        let (cl, el) = side(true)?;
        let (cr, er) = side(false)?;
        // pick the dominant singularity; ties keep the larger constant
        Some(if el < er {
            (cl, el)
        } else if er < el {
            (cr, er)
        } else {
            (cl.max(cr), el)
        })
    }

    /// Parses either a JSON document (leading `{`) or the inline
    /// mini-language:
    ///
    /// * `const:c`
    /// * `power:|x-p|^e*c` (also `|x|^e`, `|x+p|^e`), optionally followed by
    ///   ` on [a,b)` to restrict the support
    /// * `smooth:|x-p|^e*c` for `c·(1+(x−p)²)^{e/2}`, same options
    /// * `indicator:<set>`, `indicator:complement:<set>`, `infinite_on:<set>`
    ///
    /// where `<set>` is `[a,b)`, a JSON list of pairs, or `example2.2:<n>`
    /// for the union of the first `n` blocks `[2^k − 2^{(k−1)/3}, 2^k)`.
    pub fn parse(src: &str) -> Result<Self> {
        let s = src.trim();
        if s.starts_with('{') {
            let spec: FunctionSpec = serde_json::from_str(s)?;
            spec.validate()?;
            return Ok(spec);
        }
        let bad = |why: &str| Error::MalformedFunction(format!("{why} in {src:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("missing `kind:`"))?;
        let spec = match kind.trim() {
            "const" => Self::constant(parse_num(rest).ok_or_else(|| bad("bad constant"))?),
            "power" | "smooth" => {
                let (expr, support) = match rest.split_once(" on ") {
                    Some((e, sup)) => (e, Some(parse_set(sup).ok_or_else(|| bad("bad support set"))?)),
                    None => (rest, None),
                };
                let (c, e, p) = parse_power(expr).ok_or_else(|| bad("expected |x-p|^e*c"))?;
                let form = if kind.trim() == "power" {
                    Form::Power { c, e, p }
                } else {
                    Form::SmoothPower { c, e, p }
                };
                match support {
                    None => Self::on(f64::NEG_INFINITY, f64::INFINITY, form),
                    Some(set) => Self {
                        pieces: set
                            .components()
                            .iter()
                            .map(|&iv| Piece {
                                interval: iv,
                                form: form.clone(),
                            })
                            .collect(),
                        ..Self::default()
                    },
                }
            }
            "indicator" => match rest.trim().strip_prefix("complement:") {
                Some(set) => Self::indicator_complement(&parse_set(set).ok_or_else(|| bad("bad set"))?),
                None => Self::indicator(&parse_set(rest).ok_or_else(|| bad("bad set"))?),
            },
            "infinite_on" => Self::infinite_on(&parse_set(rest).ok_or_else(|| bad("bad set"))?),
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_num(s: &str) -> Option<f64> {
    crate::ext::parse_ext(s)
}

/// `|x-p|^e*c` → `(c, e, p)`.
fn parse_power(s: &str) -> Option<(f64, f64, f64)> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = s.strip_prefix('|')?;
    let (abs, tail) = inner.split_once('|')?;
    let arg = abs.strip_prefix('x')?;
    let p = if arg.is_empty() {
        0.0
    } else if let Some(v) = arg.strip_prefix('-') {
        v.parse().ok()?
    } else {
        -arg.strip_prefix('+')?.parse::<f64>().ok()?
    };
    let tail = tail.strip_prefix('^')?;
    let (e, c) = match tail.split_once('*') {
        Some((e, c)) => (e.parse().ok()?, c.parse().ok()?),
        None => (tail.parse().ok()?, 1.0),
    };
    Some((c, e, p))
}

/// Parses a set: `[a,b)`, a JSON list of pairs, `example2.2:<n>`, or `empty`.
pub fn parse_set(s: &str) -> Option<IntervalSet> {
    let s = s.trim();
    if let Some(n) = s.strip_prefix("example2.2") {
        let n = n.strip_prefix(':').map_or(Some(200), |v| v.trim().parse().ok())?;
        return build_example_set(n).ok();
    }
    if s == "empty" || s == "∅" {
        return Some(IntervalSet::empty());
    }
    if s.starts_with("[[") {
        return serde_json::from_str(s).ok();
    }
    let body = s.strip_prefix('[')?;
    let body = body.strip_suffix(')').or_else(|| body.strip_suffix(']'))?;
    let (a, b) = body.split_once(',')?;
    IntervalSet::try_from_pairs([(parse_num(a)?, parse_num(b)?)]).ok()
}

mod pair {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct P(#[serde(with = "crate::ext")] f64, #[serde(with = "crate::ext")] f64);

    pub fn serialize<S: serde::Serializer>(v: &(f64, f64), s: S) -> std::result::Result<S::Ok, S::Error> {
        P(v.0, v.1).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<(f64, f64), D::Error> {
        let P(a, b) = P::deserialize(d)?;
        Ok((a, b))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LocusRepr {
    Point(#[serde(with = "crate::ext")] f64),
    Interval(#[serde(with = "pair")] (f64, f64)),
}

impl From<LocusRepr> for Locus {
    fn from(r: LocusRepr) -> Self {
        match r {
            LocusRepr::Point(p) => Locus::Point(p),
            LocusRepr::Interval((a, b)) => Locus::Interval(a, b),
        }
    }
}

impl From<Locus> for LocusRepr {
    fn from(l: Locus) -> Self {
        match l {
            Locus::Point(p) => LocusRepr::Point(p),
            Locus::Interval(a, b) => LocusRepr::Interval((a, b)),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MarkRepr {
    at: LocusRepr,
    #[serde(default)]
    isolated_monotone: bool,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::ext::option")]
    delta: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MarkInput {
    Full(MarkRepr),
    Bare(LocusRepr),
}

impl Serialize for Mark {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MarkRepr {
            at: self.at.into(),
            isolated_monotone: self.isolated_monotone,
            delta: self.delta,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mark {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = match MarkInput::deserialize(d).map_err(|_| {
            de::Error::custom(
                "a mark is a number, an [a, b] pair, or {\"at\":..,\"isolated_monotone\":..,\"delta\":..}",
            )
        })? {
            MarkInput::Full(r) => Mark {
                at: r.at.into(),
                isolated_monotone: r.isolated_monotone,
                delta: r.delta,
            },
            MarkInput::Bare(l) => Mark {
                at: l.into(),
                isolated_monotone: false,
                delta: None,
            },
        };
        Ok(m)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}
