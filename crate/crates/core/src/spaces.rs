//! Metric spaces of real coordinate vectors.
//!
//! Every point is a finite vector of `f64`. A circle's points live in the
//! plane; products concatenate the coordinates of their factors.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rng;

/// Slack allowed when deciding membership, absorbing drift from repeated
/// evaluation of means.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(SmallVec<[f64; 4]>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let coords: Vec<f64> = coords.into();
        if coords.is_empty() {
            return Err(Error::argument("a point needs at least one coordinate"));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::argument(format!("coordinate {c} is not finite")));
        }
        Ok(Point(SmallVec::from_vec(coords)))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Plain Euclidean distance of the coordinate vectors.
    pub fn euclidean(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Coordinates packed into a hashable key (bit patterns, `-0.0` folded to `0.0`).
    pub fn key(&self) -> SmallVec<[u64; 4]> {
        self.0.iter().map(|c| (c + 0.0).to_bits()).collect()
    }

    pub(crate) fn from_coords(coords: SmallVec<[f64; 4]>) -> Self {
        Point(coords)
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point(smallvec::smallvec![x])
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(xs: [f64; N]) -> Self {
        Point(SmallVec::from_slice(&xs))
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.0.into_vec()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CircleMetric {
    /// Chord length in the plane.
    #[default]
    Euclidean,
    /// Arc length, `radius * angle`.
    Geodesic,
}

/// Space description as it appears in JSON: `{"kind": ..., "params": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SpaceKind {
    Interval {
        a: f64,
        b: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Circle {
        radius: f64,
        #[serde(default)]
        metric: CircleMetric,
    },
    Product(Vec<MetricSpace>),
    FinitePoints(Vec<Point>),
}

/// A validated metric space. Centered at the origin in the case of a circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceKind", into = "SpaceKind")]
pub struct MetricSpace {
    kind: SpaceKind,
    dim: usize,
}

impl TryFrom<SpaceKind> for MetricSpace {
    type Error = Error;

    fn try_from(kind: SpaceKind) -> Result<Self> {
        MetricSpace::from_kind(kind)
    }
}

impl From<MetricSpace> for SpaceKind {
    fn from(s: MetricSpace) -> SpaceKind {
        s.kind
    }
}

impl MetricSpace {
    pub fn from_kind(kind: SpaceKind) -> Result<Self> {
        let dim = match &kind {
            SpaceKind::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::argument(format!("interval needs a < b, got [{a}, {b}]")));
                }
                1
            }
            SpaceKind::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::argument("box bounds must be nonempty and of equal length"));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h)) {
                    return Err(Error::argument("box needs lo < hi on every axis"));
                }
                lo.len()
            }
            SpaceKind::Circle { radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::argument(format!("circle radius {radius} must be positive")));
                }
                2
            }
            SpaceKind::Product(factors) => {
                if factors.is_empty() {
                    return Err(Error::argument("product needs at least one factor"));
                }
                factors.iter().map(|f| f.dim).sum()
            }
            SpaceKind::FinitePoints(points) => {
                let Some(first) = points.first() else {
                    return Err(Error::argument("finite space needs at least one point"));
                };
                if points.iter().any(|p| p.dim() != first.dim() || !p.is_finite()) {
                    return Err(Error::argument("finite space points must share one dimension"));
                }
                first.dim()
            }
        };
        Ok(MetricSpace { kind, dim })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::from_kind(SpaceKind::Interval { a, b })
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::from_kind(SpaceKind::Box { lo, hi })
    }

    pub fn circle(radius: f64, metric: CircleMetric) -> Result<Self> {
        Self::from_kind(SpaceKind::Circle { radius, metric })
    }

    pub fn product(factors: Vec<MetricSpace>) -> Result<Self> {
        Self::from_kind(SpaceKind::Product(factors))
    }

    pub fn finite(points: Vec<Point>) -> Result<Self> {
        Self::from_kind(SpaceKind::FinitePoints(points))
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Closed under straight-line combinations: intervals, boxes and their products.
    pub fn is_convex(&self) -> bool {
        match &self.kind {
            SpaceKind::Interval { .. } | SpaceKind::Box { .. } => true,
            SpaceKind::Product(fs) => fs.iter().all(MetricSpace::is_convex),
            SpaceKind::Circle { .. } => false,
            SpaceKind::FinitePoints(ps) => ps.len() == 1,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dim || !p.is_finite() {
            return false;
        }
        let c = p.coords();
        let tol = MEMBERSHIP_TOL;
        match &self.kind {
            SpaceKind::Interval { a, b } => c[0] >= a - tol && c[0] <= b + tol,
            SpaceKind::Box { lo, hi } => c
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| *x >= l - tol && *x <= h + tol),
            SpaceKind::Circle { radius, .. } => (c[0].hypot(c[1]) - radius).abs() <= tol,
            SpaceKind::Product(fs) => self
                .split(p)
                .iter()
                .zip(fs)
                .all(|(part, f)| f.contains(part)),
            SpaceKind::FinitePoints(ps) => ps.iter().any(|q| q.euclidean(p) <= tol),
        }
    }

    pub fn check_member(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::Domain {
                point: p.clone(),
                space: self.to_string(),
            })
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check_member(a)?;
        self.check_member(b)?;
        Ok(self.dist(a, b))
    }

    /// Distance without membership checks; both points must have the right dimension.
    pub(crate) fn dist(&self, a: &Point, b: &Point) -> f64 {
        match &self.kind {
            SpaceKind::Interval { .. } => (a.coords()[0] - b.coords()[0]).abs(),
            SpaceKind::Box { .. } | SpaceKind::FinitePoints(_) => a.euclidean(b),
            SpaceKind::Circle { radius, metric } => match metric {
                CircleMetric::Euclidean => a.euclidean(b),
                CircleMetric::Geodesic => {
                    let (u, v) = (a.coords(), b.coords());
                    let cross = u[0] * v[1] - u[1] * v[0];
                    let dot = u[0] * v[0] + u[1] * v[1];
                    radius * cross.abs().atan2(dot)
                }
            },
            SpaceKind::Product(fs) => self
                .split(a)
                .iter()
                .zip(self.split(b).iter())
                .zip(fs)
                .map(|((x, y), f)| {
                    let d = f.dist(x, y);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Largest pairwise distance within a tuple.
    pub fn tuple_diameter(&self, points: &[Point]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::argument("tuple diameter of an empty list"));
        }
        for p in points {
            self.check_member(p)?;
        }
        Ok(self.diameter_of(points))
    }

    pub(crate) fn diameter_of(&self, points: &[Point]) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                best = best.max(self.dist(a, b));
            }
        }
        best
    }

    /// Nearest member of the space (nearest in the coordinate sense for a circle).
    pub fn project(&self, p: &Point) -> Result<Point> {
        if p.dim() != self.dim || !p.is_finite() {
            return Err(Error::argument(format!(
                "cannot project {p} into a space of dimension {}",
                self.dim
            )));
        }
        Ok(self.project_unchecked(p))
    }

    fn project_unchecked(&self, p: &Point) -> Point {
        let c = p.coords();
        match &self.kind {
            SpaceKind::Interval { a, b } => Point::from(c[0].clamp(*a, *b)),
            SpaceKind::Box { lo, hi } => Point::from_coords(
                c.iter().zip(lo.iter().zip(hi)).map(|(x, (l, h))| x.clamp(*l, *h)).collect(),
            ),
            SpaceKind::Circle { radius, .. } => {
                let norm = c[0].hypot(c[1]);
                if norm == 0.0 {
                    Point::from([*radius, 0.0])
                } else {
                    Point::from([radius * c[0] / norm, radius * c[1] / norm])
                }
            }
            SpaceKind::Product(fs) => {
                let parts = self.split(p);
                let coords = parts
                    .iter()
                    .zip(fs)
                    .flat_map(|(part, f)| f.project_unchecked(part).0)
                    .collect();
                Point::from_coords(coords)
            }
            SpaceKind::FinitePoints(ps) => ps
                .iter()
                .min_by(|x, y| x.euclidean(p).total_cmp(&y.euclidean(p)))
                .cloned()
                .expect("finite space is nonempty"),
        }
    }

    fn split(&self, p: &Point) -> Vec<Point> {
        let SpaceKind::Product(fs) = &self.kind else {
            return vec![p.clone()];
        };
        let mut offset = 0;
        fs.iter()
            .map(|f| {
                let part = Point::from_coords(SmallVec::from_slice(&p.coords()[offset..offset + f.dim]));
                offset += f.dim;
                part
            })
            .collect()
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            SpaceKind::Interval { a, b } => Point::from(rng.gen_range(*a..=*b)),
            SpaceKind::Box { lo, hi } => Point::from_coords(
                lo.iter().zip(hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect(),
            ),
            SpaceKind::Circle { radius, .. } => {
                let angle = rng.gen_range(0.0..TAU);
                Point::from([radius * angle.cos(), radius * angle.sin()])
            }
            SpaceKind::Product(fs) => {
                Point::from_coords(fs.iter().flat_map(|f| f.sample_one(rng).0).collect())
            }
            SpaceKind::FinitePoints(ps) => ps[rng.gen_range(0..ps.len())].clone(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Point> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }

    /// `count` members drawn from the generator seeded with `seed`.
    pub fn sample_seeded(&self, seed: u64, count: usize) -> Vec<Point> {
        self.sample(&mut rng::seeded(seed), count)
    }

    /// Random `n`-tuples of members.
    pub fn sample_tuples<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, count: usize) -> Vec<Vec<Point>> {
        (0..count).map(|_| self.sample(rng, n)).collect()
    }

    /// Regular grid with spacing at most `step`. Halving `step` refines the
    /// grid of an interval or box so that the coarse points are kept exactly.
    pub fn grid(&self, step: f64) -> Result<Vec<Point>> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::argument(format!("grid step {step} must be positive")));
        }
        let axis = |a: f64, b: f64| -> Vec<f64> {
            let n = (((b - a) / step) - 1e-9).ceil().max(1.0) as usize;
            (0..=n)
                .map(|k| if k == n { b } else { a + (b - a) * (k as f64 / n as f64) })
                .collect()
        };
        let cartesian = |axes: Vec<Vec<f64>>| -> Vec<Point> {
            let mut out: Vec<SmallVec<[f64; 4]>> = vec![SmallVec::new()];
            for ax in axes {
                out = out
                    .iter()
                    .flat_map(|prefix| {
                        ax.iter().map(move |x| {
                            let mut v = prefix.clone();
                            v.push(*x);
                            v
                        })
                    })
                    .collect();
            }
            out.into_iter().map(Point::from_coords).collect()
        };
        let grid = match &self.kind {
            SpaceKind::Interval { a, b } => axis(*a, *b).into_iter().map(Point::from).collect(),
            SpaceKind::Box { lo, hi } => {
                cartesian(lo.iter().zip(hi).map(|(l, h)| axis(*l, *h)).collect())
            }
            SpaceKind::Circle { radius, .. } => {
                let n = ((TAU * radius / step).ceil() as usize).max(4);
                (0..n)
                    .map(|k| {
                        let angle = TAU * k as f64 / n as f64;
                        Point::from([radius * angle.cos(), radius * angle.sin()])
                    })
                    .collect()
            }
            SpaceKind::Product(fs) => {
                let mut out: Vec<SmallVec<[f64; 4]>> = vec![SmallVec::new()];
                for f in fs {
                    let g = f.grid(step)?;
                    out = out
                        .iter()
                        .flat_map(|prefix| {
                            g.iter().map(move |p| {
                                let mut v = prefix.clone();
                                v.extend_from_slice(p.coords());
                                v
                            })
                        })
                        .collect();
                }
                out.into_iter().map(Point::from_coords).collect()
            }
            SpaceKind::FinitePoints(ps) => ps.clone(),
        };
        Ok(grid)
    }
}

impl fmt::Display for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SpaceKind::Interval { a, b } => write!(f, "Interval[{a}, {b}]"),
            SpaceKind::Box { lo, hi } => write!(f, "Box({lo:?}, {hi:?})"),
            SpaceKind::Circle { radius, metric } => write!(f, "Circle(r={radius}, {metric:?})"),
            SpaceKind::Product(fs) => {
                f.write_str("Product(")?;
                for (i, s) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" x ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
            SpaceKind::FinitePoints(ps) => write!(f, "FinitePoints({} points)", ps.len()),
        }
    }
}

/// Distance between two members of `space`.
pub fn distance(space: &MetricSpace, a: &Point, b: &Point) -> Result<f64> {
    space.distance(a, b)
}

pub fn tuple_diameter(space: &MetricSpace, points: &[Point]) -> Result<f64> {
    space.tuple_diameter(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box() -> MetricSpace {
        MetricSpace::cube(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn distance_examples() {
        let i = MetricSpace::interval(0.0, 1.0).unwrap();
        assert_eq!(distance(&i, &0.25.into(), &0.75.into()).unwrap(), 0.5);

        let c = MetricSpace::circle(1.0, CircleMetric::Euclidean).unwrap();
        assert_eq!(distance(&c, &[1.0, 0.0].into(), &[-1.0, 0.0].into()).unwrap(), 2.0);

        let g = MetricSpace::circle(2.0, CircleMetric::Geodesic).unwrap();
        let d = distance(&g, &[2.0, 0.0].into(), &[0.0, 2.0].into()).unwrap();
        assert!((d - std::f64::consts::PI).abs() < 1e-15);

        let d = distance(&unit_box(), &[0.0, 0.0].into(), &[1.0, 1.0].into()).unwrap();
        assert_eq!(d, 2f64.sqrt());
    }

    #[test]
    fn non_member_is_domain_error() {
        let i = MetricSpace::interval(0.0, 1.0).unwrap();
        assert!(matches!(i.distance(&1.5.into(), &0.0.into()), Err(Error::Domain { .. })));
        assert!(i.contains(&(1.0 + 1e-10).into()));
        assert!(!i.contains(&[0.5, 0.5].into()));
    }

    #[test]
    fn tuple_diameter_examples() {
        let i = MetricSpace::interval(0.0, 1.0).unwrap();
        let pts: Vec<Point> = [0.1, 0.5, 0.9].map(Point::from).to_vec();
        assert!((tuple_diameter(&i, &pts).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(tuple_diameter(&i, &[0.3.into(), 0.3.into(), 0.3.into()]).unwrap(), 0.0);
        let corners: Vec<Point> = vec![[0.0, 0.0].into(), [1.0, 0.0].into(), [0.0, 1.0].into(), [1.0, 1.0].into()];
        assert_eq!(tuple_diameter(&unit_box(), &corners).unwrap(), 2f64.sqrt());
        assert!(matches!(tuple_diameter(&i, &[]), Err(Error::Argument(_))));
    }

    #[test]
    fn invalid_spaces() {
        assert!(MetricSpace::interval(1.0, 1.0).is_err());
        assert!(MetricSpace::finite(vec![]).is_err());
        assert!(MetricSpace::cube(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(MetricSpace::circle(0.0, CircleMetric::Geodesic).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(Vec::<f64>::new()).is_err());
    }

    #[test]
    fn json_schema() {
        let s: MetricSpace = serde_json::from_str(r#"{"kind":"interval","params":{"a":0,"b":1}}"#).unwrap();
        assert_eq!(s, MetricSpace::interval(0.0, 1.0).unwrap());
        let c: MetricSpace = serde_json::from_str(r#"{"kind":"circle","params":{"radius":1}}"#).unwrap();
        assert_eq!(c, MetricSpace::circle(1.0, CircleMetric::Euclidean).unwrap());
        let p: MetricSpace = serde_json::from_str(
            r#"{"kind":"product","params":[{"kind":"interval","params":{"a":0,"b":1}},
               {"kind":"finite_points","params":[[0,0],[1,1]]}]}"#,
        )
        .unwrap();
        assert_eq!(p.dim(), 3);
        let bad = serde_json::from_str::<MetricSpace>(r#"{"kind":"interval","params":{"a":2,"b":1}}"#);
        assert!(bad.is_err());
        let round: MetricSpace = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(round, p);
    }

    #[test]
    fn projection_lands_in_space() {
        let c = MetricSpace::circle(1.0, CircleMetric::Geodesic).unwrap();
        let p = c.project(&[3.0, 4.0].into()).unwrap();
        assert!(c.contains(&p));
        assert!(c.contains(&c.project(&[0.0, 0.0].into()).unwrap()));
        let b = unit_box();
        assert_eq!(b.project(&[2.0, -1.0].into()).unwrap(), Point::from([1.0, 0.0]));
    }

    #[test]
    fn grids_are_nested_under_halving() {
        let i = MetricSpace::interval(1.0, 4.0).unwrap();
        let coarse = i.grid(1e-2).unwrap();
        let fine = i.grid(5e-3).unwrap();
        assert_eq!(fine.len(), 2 * coarse.len() - 1);
        for (k, p) in coarse.iter().enumerate() {
            assert_eq!(p, &fine[2 * k]);
        }
        assert_eq!(unit_box().grid(0.5).unwrap().len(), 9);
    }

    fn spaces() -> Vec<MetricSpace> {
        vec![
            MetricSpace::interval(-1.0, 2.0).unwrap(),
            unit_box(),
            MetricSpace::circle(1.5, CircleMetric::Euclidean).unwrap(),
            MetricSpace::circle(1.0, CircleMetric::Geodesic).unwrap(),
            MetricSpace::product(vec![
                MetricSpace::interval(0.0, 1.0).unwrap(),
                MetricSpace::circle(1.0, CircleMetric::Geodesic).unwrap(),
            ])
            .unwrap(),
            MetricSpace::finite(vec![[0.0, 0.0].into(), [3.0, 4.0].into(), [1.0, -1.0].into()]).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn metric_axioms(seed in any::<u64>()) {
            for s in spaces() {
                let pts = s.sample_seeded(seed, 3);
                for p in &pts {
                    prop_assert!(s.contains(p));
                }
                let (x, y, z) = (&pts[0], &pts[1], &pts[2]);
                prop_assert_eq!(s.dist(x, x), 0.0);
                prop_assert_eq!(s.dist(x, y), s.dist(y, x));
                prop_assert!(s.dist(x, z) <= s.dist(x, y) + s.dist(y, z) + 1e-12);
                prop_assert!(s.dist(x, y) >= 0.0);
            }
        }

        #[test]
        fn diameter_is_symmetric_and_monotone(seed in any::<u64>(), n in 1usize..7) {
            for s in spaces() {
                let mut rng = rng::seeded(seed);
                let mut pts = s.sample(&mut rng, n);
                let d = s.tuple_diameter(&pts).unwrap();
                let mut rev = pts.clone();
                rev.reverse();
                prop_assert_eq!(s.tuple_diameter(&rev).unwrap(), d);
                pts.push(s.sample_one(&mut rng));
                prop_assert!(s.tuple_diameter(&pts).unwrap() >= d);
            }
        }
    }
}
