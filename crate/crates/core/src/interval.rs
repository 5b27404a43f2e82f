//! Finite disjoint unions of half-open intervals `[a, b)` on the extended
//! real line.

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// A finite union of pairwise disjoint half-open intervals, kept sorted and
/// merged. Endpoints may be infinite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn real_line() -> Self {
        Self {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    /// `[a, b)`; empty when `b <= a`.
    pub fn interval(a: f64, b: f64) -> Self {
        Self::from_pairs([(a, b)])
    }

    /// Builds a normalized set from arbitrary (possibly overlapping, unsorted,
    /// or empty) pairs. NaN endpoints are dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut v: Vec<(f64, f64)> = pairs.into_iter().filter(|&(a, b)| a < b).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { intervals: out }
    }

    /// Like [`from_pairs`](Self::from_pairs) but rejects NaN and reversed pairs.
    pub fn try_from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        for &(a, b) in &pairs {
            if a.is_nan() || b.is_nan() || b < a {
                return Err(Error::invalid(
                    "interval",
                    format!("[{a}, {b}) is not a valid interval"),
                ));
            }
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        // first component whose right end exceeds x
        let i = self.intervals.partition_point(|&(_, b)| b <= x);
        self.intervals.get(i).is_some_and(|&(a, _)| a <= x)
    }

    /// Lebesgue measure (may be `+∞`).
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|&(a, b)| b - a).sum()
    }

    /// Euclidean distance from `x` to the closure of the set; `+∞` if empty.
    pub fn distance(&self, x: f64) -> f64 {
        let i = self.intervals.partition_point(|&(_, b)| b <= x);
        let mut d = f64::INFINITY;
        if let Some(&(a, _)) = self.intervals.get(i) {
            d = d.min((a - x).max(0.0));
        }
        if i > 0 {
            d = d.min(x - self.intervals[i - 1].1);
        }
        d
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_pairs(self.intervals.iter().chain(&other.intervals).copied())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a1, b1) = self.intervals[i];
            let (a2, b2) = other.intervals[j];
            let (a, b) = (a1.max(a2), b1.min(b2));
            if a < b {
                out.push((a, b));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_pairs(out)
    }

    /// Complement with respect to the whole line.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut left = f64::NEG_INFINITY;
        for &(a, b) in &self.intervals {
            out.push((left, a));
            left = b;
        }
        out.push((left, f64::INFINITY));
        Self::from_pairs(out)
    }

    /// Complement inside `[lo, hi)`.
    pub fn complement_within(&self, lo: f64, hi: f64) -> Self {
        self.complement().intersection(&Self::interval(lo, hi))
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersection(&other.complement())
    }

    pub fn translate(&self, by: f64) -> Self {
        Self::from_pairs(self.intervals.iter().map(|&(a, b)| (a + by, b + by)))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        for (k, (a, b)) in self.intervals.iter().enumerate() {
            if k > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "[{a}, {b})")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Pair(#[serde(with = "crate::ext")] f64, #[serde(with = "crate::ext")] f64);

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.intervals.len()))?;
        for &(a, b) in &self.intervals {
            seq.serialize_element(&Pair(a, b))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = IntervalSet;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of [a, b) pairs")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<IntervalSet, A::Error> {
                let mut pairs = Vec::new();
                while let Some(Pair(a, b)) = seq.next_element()? {
                    pairs.push((a, b));
                }
                IntervalSet::try_from_pairs(pairs).map_err(de::Error::custom)
            }
        }
        d.deserialize_seq(V)
    }
}

/// A half-open interval set together with isolated points, used for zero
/// sets and irregular sets which mix marked points with whole intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<f64>,
    pub intervals: IntervalSet,
}

impl PointSet {
    pub fn new(points: impl IntoIterator<Item = f64>, intervals: IntervalSet) -> Self {
        let mut points: Vec<f64> = points
            .into_iter()
            .filter(|p| !p.is_nan() && !intervals.contains(*p))
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        Self { points, intervals }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.contains(x) || self.points.contains(&x)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(
            self.points.iter().chain(&other.points).copied(),
            self.intervals.union(&other.intervals),
        )
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.intervals.is_subset(&other.intervals) && self.points.iter().all(|&p| other.contains(p))
    }

    /// Distance from `x` to the closure of the set.
    pub fn distance(&self, x: f64) -> f64 {
        self.points
            .iter()
            .map(|p| (p - x).abs())
            .fold(self.intervals.distance(x), f64::min)
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        let mut first = true;
        if !self.points.is_empty() {
            let pts: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
            write!(f, "{{{}}}", pts.join(", "))?;
            first = false;
        }
        if !self.intervals.is_empty() {
            if !first {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{}", self.intervals)?;
        }
        Ok(())
    }
}
