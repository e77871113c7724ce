//! Contractions built from a contractive quasi-mean by dyadic refinement, and
//! their symmetrization under a finite group.
//!
//! Given a binary quasi-mean `p` with constant `λ < 1` and a basepoint `θ`,
//! the path from `x` to `θ` is defined on dyadic times by
//!
//! ```text
//! φ(x, 0) = x,   φ(x, 1) = θ,
//! φ(x, j/2^n) = p(φ(x, (j-1)/2^n), φ(x, (j+1)/2^n))   for odd j.
//! ```
//!
//! Adjacent values at level `n` differ by at most `λ^n d(x, θ)`, which gives
//! the Hölder bound `d(φ(x,s), φ(x,t)) <= C |s-t|^α` with
//! `C = 2 d(x,θ) / (1-λ)` and `α = -ln λ / ln 2`. The bound is what
//! [`ContractionBuilder::phi_at_time`] uses to certify its error.
//!
//! A homotopy `Φ` on a `G`-space becomes equivariant after averaging its
//! conjugates with an `|G|`-ary mean:
//!
//! ```text
//! Ψ(x, t) = p(g_1⁻¹ Φ(g_1 x, t), ..., g_n⁻¹ Φ(g_n x, t)).
//! ```

use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use lru::LruCache;
use rand::Rng;
use serde::Serialize;
use smallvec::SmallVec;

use crate::dyadics::Dyadic;
use crate::error::{Error, Result};
use crate::groups::{is_fixed_by, GroupAction, Subgroup};
use crate::means::{check_anonymity, check_equivariance, orbit_average_point, QuasiMeanMap};
use crate::rng;
use crate::spaces::{MetricSpace, Point};

/// Deepest dyadic level the builder evaluates.
pub const MAX_PHI_LEVEL: u32 = 40;
/// Deepest level for which [`ContractionBuilder::level_table`] builds a full table.
pub const MAX_TABLE_LEVEL: u32 = 20;
pub const MEMO_CAPACITY: usize = 1 << 20;
/// Slack allowed on the adjacent-difference and Hölder bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// A map `X × [0, 1] -> X`.
pub trait Homotopy: Send + Sync {
    fn space(&self) -> &MetricSpace;
    fn eval(&self, x: &Point, t: f64) -> Result<Point>;
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::argument(format!("time {t} is outside [0, 1]")))
    }
}

type HomotopyFn = dyn Fn(&Point, f64) -> Point + Send + Sync;

/// A homotopy given by a closure; inputs and outputs are membership-checked.
#[derive(Clone)]
pub struct FnHomotopy {
    space: MetricSpace,
    f: Arc<HomotopyFn>,
}

impl FnHomotopy {
    pub fn new(space: MetricSpace, f: impl Fn(&Point, f64) -> Point + Send + Sync + 'static) -> Self {
        FnHomotopy { space, f: Arc::new(f) }
    }

    /// `(1 - t) x + t r(x)` on a convex space.
    pub fn straight_line(space: MetricSpace, r: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Result<Self> {
        if !space.is_convex() {
            return Err(Error::argument(format!("straight-line homotopy needs a convex space, not {space}")));
        }
        Ok(Self::new(space, move |x, t| {
            let target = r(x);
            let mut out = x.clone();
            for (o, (a, b)) in out.coords_mut().iter_mut().zip(x.coords().iter().zip(target.coords())) {
                *o = (1.0 - t) * a + t * b;
            }
            out
        }))
    }
}

impl Homotopy for FnHomotopy {
    fn space(&self) -> &MetricSpace {
        &self.space
    }

    fn eval(&self, x: &Point, t: f64) -> Result<Point> {
        self.space.check_member(x)?;
        check_time(t)?;
        let y = (self.f)(x, t);
        self.space.check_member(&y)?;
        Ok(y)
    }
}

type MemoKey = (SmallVec<[u64; 4]>, Dyadic);

/// The dyadic contraction of a space onto the basepoint `θ`.
pub struct ContractionBuilder {
    p: QuasiMeanMap,
    lambda: f64,
    alpha: f64,
    theta: Point,
    eval_level: u32,
    warnings: Vec<String>,
    memo: Mutex<LruCache<MemoKey, Point>>,
}

impl std::fmt::Debug for ContractionBuilder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContractionBuilder")
            .field("p", &self.p)
            .field("lambda", &self.lambda)
            .field("alpha", &self.alpha)
            .field("theta", &self.theta)
            .finish()
    }
}

/// Ratio samples drawn when cross-checking the supplied `λ`.
const LAMBDA_CHECK_SAMPLES: usize = 2000;

impl ContractionBuilder {
    /// Builds the contraction. `p` must be binary (collapse wider quasi-means
    /// first), `λ` in `(0, 1)`, and `θ` a member of the space.
    ///
    /// `λ` is cross-checked against sampled ratios; a sample exceeding it is
    /// recorded in [`warnings`](Self::warnings) and logged, since the
    /// certified errors then no longer hold.
    pub fn new(p: QuasiMeanMap, lambda: f64, theta: Point) -> Result<Self> {
        if p.arity() != 2 {
            return Err(Error::argument(format!(
                "the dyadic contraction needs a binary quasi-mean, {} has arity {}",
                p.label(),
                p.arity()
            )));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::argument(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        p.space().check_member(&theta)?;
        let mut b = ContractionBuilder {
            alpha: -lambda.ln() / std::f64::consts::LN_2,
            p,
            lambda,
            theta,
            eval_level: 16,
            warnings: Vec::new(),
            memo: Mutex::new(LruCache::new(NonZeroUsize::new(MEMO_CAPACITY).unwrap())),
        };
        b.cross_check_lambda();
        Ok(b)
    }

    fn cross_check_lambda(&mut self) {
        let mut r = rng::seeded(0);
        let mut worst: Option<(f64, Vec<Point>)> = None;
        for _ in 0..LAMBDA_CHECK_SAMPLES {
            let xs = self.p.space().sample(&mut r, 2);
            if let Some(ratio) = self.p.ratio(&xs, 1e-6) {
                if ratio > self.lambda + BOUND_SLACK && worst.as_ref().is_none_or(|w| ratio > w.0) {
                    worst = Some((ratio, xs));
                }
            }
        }
        if let Some((ratio, xs)) = worst {
            let msg = format!(
                "lambda {} is below the sampled ratio {ratio} at ({}, {}); certified errors are unreliable",
                self.lambda, xs[0], xs[1]
            );
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
    }

    /// Level used when evaluated as a [`Homotopy`] at real times.
    pub fn with_eval_level(mut self, level: u32) -> Result<Self> {
        if level > MAX_PHI_LEVEL {
            return Err(Error::Capacity(format!("level {level} exceeds {MAX_PHI_LEVEL}")));
        }
        self.eval_level = level;
        Ok(self)
    }

    pub fn space(&self) -> &MetricSpace {
        self.p.space()
    }

    pub fn mean(&self) -> &QuasiMeanMap {
        &self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> &Point {
        &self.theta
    }

    pub fn eval_level(&self) -> u32 {
        self.eval_level
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `C = 2 d(x, θ) / (1 - λ)`.
    pub fn holder_constant(&self, x: &Point) -> f64 {
        2.0 * self.space().dist(x, &self.theta) / (1.0 - self.lambda)
    }

    fn check_level(d: Dyadic) -> Result<()> {
        if d.level() > MAX_PHI_LEVEL {
            return Err(Error::Capacity(format!(
                "dyadic {d} has level {} above {MAX_PHI_LEVEL}",
                d.level()
            )));
        }
        Ok(())
    }

    /// `φ(x, d)`, memoized per `(x, d)`.
    pub fn phi_at_dyadic(&self, x: &Point, d: Dyadic) -> Result<Point> {
        self.space().check_member(x)?;
        Self::check_level(d)?;
        Ok(self.walk(x, d, true))
    }

    /// `φ(x, d)` without touching the memo table. Bit-identical to [`phi_at_dyadic`](Self::phi_at_dyadic).
    pub fn phi_at_dyadic_uncached(&self, x: &Point, d: Dyadic) -> Result<Point> {
        self.space().check_member(x)?;
        Self::check_level(d)?;
        Ok(self.walk(x, d, false))
    }

    /// Bisects `[0, 1]` towards `d`; each midpoint is `p` of the current endpoints,
    /// which are exactly its two neighbours one level up.
    fn walk(&self, x: &Point, d: Dyadic, memo: bool) -> Point {
        if d == Dyadic::ZERO {
            return x.clone();
        }
        if d == Dyadic::ONE {
            return self.theta.clone();
        }
        let key = x.key();
        if memo {
            if let Some(v) = self.memo.lock().unwrap().get(&(key.clone(), d)) {
                return v.clone();
            }
        }
        let n = d.level();
        let target = d.numerator();
        // Endpoints as numerators over 2^n.
        let (mut lo, mut hi) = (0u64, 1u64 << n);
        let (mut lo_val, mut hi_val) = (x.clone(), self.theta.clone());
        let mut buf = [x.clone(), self.theta.clone()];
        loop {
            let mid = (lo + hi) / 2;
            let mid_d = Dyadic::new(mid, n).expect("midpoint lies in [0, 1]");
            let cached = if memo { self.memo.lock().unwrap().get(&(key.clone(), mid_d)).cloned() } else { None };
            let val = cached.unwrap_or_else(|| {
                buf[0].clone_from(&lo_val);
                buf[1].clone_from(&hi_val);
                let v = self.p.eval_raw(&buf);
                if memo {
                    self.memo.lock().unwrap().put((key.clone(), mid_d), v.clone());
                }
                v
            });
            if mid == target {
                return val;
            }
            if target < mid {
                hi = mid;
                hi_val = val;
            } else {
                lo = mid;
                lo_val = val;
            }
        }
    }

    pub fn memo_len(&self) -> usize {
        self.memo.lock().unwrap().len()
    }

    pub fn clear_memo(&self) {
        self.memo.lock().unwrap().clear();
    }

    /// `φ(x, j / 2^level)` for `j = 0..=2^level`, built level by level.
    pub fn level_table(&self, x: &Point, level: u32) -> Result<Vec<Point>> {
        self.space().check_member(x)?;
        if level > MAX_TABLE_LEVEL {
            return Err(Error::Capacity(format!("table level {level} exceeds {MAX_TABLE_LEVEL}")));
        }
        let mut table = vec![x.clone(), self.theta.clone()];
        let mut buf = [x.clone(), x.clone()];
        for _ in 0..level {
            table = self.refine(table, &mut buf);
        }
        Ok(table)
    }

    fn refine(&self, prev: Vec<Point>, buf: &mut [Point; 2]) -> Vec<Point> {
        let mut next = Vec::with_capacity(2 * prev.len() - 1);
        for w in prev.windows(2) {
            buf[0].clone_from(&w[0]);
            buf[1].clone_from(&w[1]);
            next.push(w[0].clone());
            next.push(self.p.eval_raw(buf));
        }
        next.push(prev.last().unwrap().clone());
        next
    }

    /// Smallest level `N` with `C 2^{-Nα} <= eps`, or an error when that exceeds the maximum level.
    pub fn level_for(&self, x: &Point, eps: f64) -> Result<u32> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::argument(format!("eps must be positive and finite, got {eps}")));
        }
        let c = self.holder_constant(x);
        if c == 0.0 {
            return Ok(0);
        }
        let raw = ((c.ln() - eps.ln()) / (self.alpha * std::f64::consts::LN_2)).ceil();
        let mut level = raw.max(0.0);
        // Guard the ceiling against rounding in the logarithms.
        while level > 0.0 && c * 2f64.powf(-(level - 1.0) * self.alpha) <= eps {
            level -= 1.0;
        }
        while c * 2f64.powf(-level * self.alpha) > eps && level <= MAX_PHI_LEVEL as f64 {
            level += 1.0;
        }
        if level > MAX_PHI_LEVEL as f64 {
            return Err(Error::EpsTooSmall {
                requested: eps,
                level: level.min(u32::MAX as f64) as u32,
                achievable: c * 2f64.powf(-(MAX_PHI_LEVEL as f64) * self.alpha),
            });
        }
        Ok(level as u32)
    }

    /// `Φ(x, t)` to within `eps`: `t` is snapped to the nearest dyadic `r` at
    /// level [`level_for`](Self::level_for), and `C |t - r|^α` is returned as the certified error.
    pub fn phi_at_time(&self, x: &Point, t: f64, eps: f64) -> Result<TimedPoint> {
        self.space().check_member(x)?;
        check_time(t)?;
        let level = self.level_for(x, eps)?;
        let r = Dyadic::nearest(t, level)?;
        let c = self.holder_constant(x);
        let gap = (t - r.to_f64()).abs();
        let certified_error = if c == 0.0 || gap == 0.0 { 0.0 } else { c * gap.powf(self.alpha) };
        Ok(TimedPoint { t, dyadic: r, level, point: self.walk(x, r, true), certified_error })
    }

    /// `steps + 1` evenly spaced times from `0` to `1`.
    pub fn trajectory(&self, x: &Point, steps: usize, eps: f64) -> Result<Vec<TimedPoint>> {
        if steps == 0 {
            return Err(Error::argument("a trajectory needs at least one step"));
        }
        (0..=steps).map(|i| self.phi_at_time(x, i as f64 / steps as f64, eps)).collect()
    }

    /// Checks `d(φ(x, j/2^n), φ(x, (j+1)/2^n)) <= λ^n d(x, θ)` for all adjacent pairs at levels `0..=depth`.
    pub fn verify_claim1(&self, x: &Point, depth: u32) -> Result<Claim1Report> {
        self.space().check_member(x)?;
        if depth > MAX_TABLE_LEVEL {
            return Err(Error::Capacity(format!("claim sweep depth {depth} exceeds {MAX_TABLE_LEVEL}")));
        }
        let d0 = self.space().dist(x, &self.theta);
        let mut table = vec![x.clone(), self.theta.clone()];
        let mut buf = [x.clone(), x.clone()];
        let mut levels = Vec::with_capacity(depth as usize + 1);
        let mut pairs_checked = 0;
        let mut passed = true;
        for n in 0..=depth {
            if n > 0 {
                table = self.refine(table, &mut buf);
            }
            let bound = self.lambda.powi(n as i32) * d0;
            let mut worst = LevelWorst { level: n, bound, max_difference: 0.0, ratio: 0.0, index: 0 };
            for (j, w) in table.windows(2).enumerate() {
                let diff = self.space().dist(&w[0], &w[1]);
                pairs_checked += 1;
                if diff > worst.max_difference {
                    worst.max_difference = diff;
                    worst.index = j as u64;
                }
            }
            worst.ratio = ratio_or_inf(worst.max_difference, bound);
            passed &= worst.max_difference <= bound * (1.0 + BOUND_SLACK);
            levels.push(worst);
        }
        let worst_ratio = levels.iter().map(|l| l.ratio).fold(0.0, f64::max);
        Ok(Claim1Report { depth, lambda: self.lambda, distance_to_theta: d0, pairs_checked, worst_ratio, levels, passed })
    }

    /// Checks `d(φ(x,s), φ(x,t)) <= C |s-t|^α` on the given pairs.
    pub fn verify_holder(&self, x: &Point, pairs: &[(Dyadic, Dyadic)]) -> Result<HolderReport> {
        self.space().check_member(x)?;
        let c = self.holder_constant(x);
        let max_level = pairs.iter().map(|(s, t)| s.level().max(t.level())).max().unwrap_or(0);
        let table = if max_level <= MAX_TABLE_LEVEL { Some(self.level_table(x, max_level)?) } else { None };
        let value = |d: Dyadic| -> Result<Point> {
            match &table {
                Some(tb) => Ok(tb[d.numerator_at(max_level).expect("pair level within table") as usize].clone()),
                None => self.phi_at_dyadic(x, d),
            }
        };
        let mut worst_ratio = 0.0;
        let mut worst_pair = None;
        let mut violations = 0;
        for &(s, t) in pairs {
            let gap = s.distance(t);
            let diff = self.space().dist(&value(s)?, &value(t)?);
            let ratio = if gap == 0.0 { ratio_or_inf(diff, 0.0) } else { ratio_or_inf(diff, c * gap.powf(self.alpha)) };
            if ratio > 1.0 + BOUND_SLACK {
                violations += 1;
            }
            if ratio > worst_ratio || worst_pair.is_none() {
                worst_ratio = ratio;
                worst_pair = Some((s, t));
            }
        }
        Ok(HolderReport {
            holder_constant: c,
            alpha: self.alpha,
            pairs_checked: pairs.len(),
            worst_ratio,
            worst_pair,
            violations,
            passed: violations == 0,
        })
    }
}

fn ratio_or_inf(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

impl Homotopy for ContractionBuilder {
    fn space(&self) -> &MetricSpace {
        self.p.space()
    }

    /// `φ(x, r)` at the dyadic `r` nearest `t` at [`eval_level`](ContractionBuilder::eval_level).
    fn eval(&self, x: &Point, t: f64) -> Result<Point> {
        check_time(t)?;
        self.phi_at_dyadic(x, Dyadic::nearest(t, self.eval_level)?)
    }
}

/// A point on the contraction path with its certified distance to `Φ(x, t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimedPoint {
    pub t: f64,
    pub dyadic: Dyadic,
    pub level: u32,
    pub point: Point,
    pub certified_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelWorst {
    pub level: u32,
    pub bound: f64,
    pub max_difference: f64,
    /// `max_difference / bound`; `0` when both vanish.
    pub ratio: f64,
    /// `j` of the worst pair `(j, j+1)` at this level.
    pub index: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim1Report {
    pub depth: u32,
    pub lambda: f64,
    pub distance_to_theta: f64,
    pub pairs_checked: usize,
    pub worst_ratio: f64,
    pub levels: Vec<LevelWorst>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderReport {
    pub holder_constant: f64,
    pub alpha: f64,
    pub pairs_checked: usize,
    /// Largest `d(φ(x,s), φ(x,t)) / (C |s-t|^α)`.
    pub worst_ratio: f64,
    pub worst_pair: Option<(Dyadic, Dyadic)>,
    pub violations: usize,
    pub passed: bool,
}

/// `count` uniformly random pairs from `D_depth`, canonicalized.
pub fn random_dyadic_pairs(seed: u64, count: usize, depth: u32) -> Result<Vec<(Dyadic, Dyadic)>> {
    if depth > MAX_PHI_LEVEL {
        return Err(Error::Capacity(format!("depth {depth} exceeds {MAX_PHI_LEVEL}")));
    }
    let mut r = rng::seeded(seed);
    let top = 1u64 << depth;
    (0..count)
        .map(|_| Ok((Dyadic::new(r.gen_range(0..=top), depth)?, Dyadic::new(r.gen_range(0..=top), depth)?)))
        .collect()
}

/// Whether the hypotheses on the mean are sampled or taken on trust.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrizeOptions {
    pub verify_hypotheses: bool,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SymmetrizeOptions {
    fn default() -> Self {
        SymmetrizeOptions { verify_hypotheses: true, samples: 200, seed: 0, tol: 1e-9 }
    }
}

/// Times at which homotopy checks are sampled besides random ones.
const CHECK_TIMES: [f64; 7] = [0.0, 0.125, 0.25, 1.0 / 3.0, 0.5, 0.75, 1.0];

fn check_times(r: &mut impl Rng, extra: usize) -> Vec<f64> {
    let mut ts = CHECK_TIMES.to_vec();
    ts.extend((0..extra).map(|_| r.gen::<f64>()));
    ts
}

/// Sampled measurements of a symmetrized homotopy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub samples: usize,
    /// `max d(Φ(x, 0), x)`.
    pub base_start_defect: f64,
    /// `max d(Ψ(x, 0), x)`.
    pub start_defect: f64,
    /// `max d(Φ(x_1, 1), Φ(x, 1))` over the samples `x`.
    pub base_end_spread: f64,
    /// `max d(Ψ(x_1, 1), Ψ(x, 1))` over the samples `x`.
    pub end_spread: f64,
    /// `max d(Ψ(gx, t), g Ψ(x, t))`.
    pub equivariance_defect: f64,
    pub worst_equivariance: Option<EquivarianceWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivarianceWitness {
    pub g: usize,
    pub x: Point,
    pub t: f64,
}

/// A homotopy equivariant under a group action, evaluated through the
/// averaging formula (or directly when no averaging is needed).
#[derive(Clone)]
pub struct GHomotopy {
    base: Arc<dyn Homotopy>,
    action: GroupAction,
    mean: Option<QuasiMeanMap>,
    order: Vec<usize>,
    report: Option<SymmetryReport>,
}

impl std::fmt::Debug for GHomotopy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GHomotopy")
            .field("action", &self.action.label())
            .field("mean", &self.mean.as_ref().map(|m| m.label().to_string()))
            .field("order", &self.order)
            .finish()
    }
}

impl GHomotopy {
    pub fn action(&self) -> &GroupAction {
        &self.action
    }

    pub fn mean(&self) -> Option<&QuasiMeanMap> {
        self.mean.as_ref()
    }

    /// Enumeration `g_1, ..., g_n` feeding the arguments of the mean.
    pub fn enumeration(&self) -> &[usize] {
        &self.order
    }

    pub fn report(&self) -> Option<&SymmetryReport> {
        self.report.as_ref()
    }

    /// The same homotopy with the group elements fed to the mean in another order.
    pub fn with_enumeration(&self, order: Vec<usize>) -> Result<Self> {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != self.action.group().elements().collect::<Vec<_>>() {
            return Err(Error::argument(format!("{order:?} is not an enumeration of the group")));
        }
        Ok(GHomotopy { order, report: None, ..self.clone() })
    }

    pub fn base(&self) -> &dyn Homotopy {
        self.base.as_ref()
    }

    /// `Ψ(x, t)`.
    pub fn psi(&self, x: &Point, t: f64) -> Result<Point> {
        let Some(mean) = &self.mean else {
            return self.base.eval(x, t);
        };
        let group = self.action.group();
        let args = self
            .order
            .iter()
            .map(|&g| {
                let moved = self.base.eval(&self.action.act(g, x)?, t)?;
                self.action.act(group.inverse(g), &moved)
            })
            .collect::<Result<Vec<_>>>()?;
        mean.eval(&args)
    }

    /// Measures endpoint behaviour and equivariance on `samples` seeded points.
    pub fn measure(&self, samples: usize, seed: u64) -> Result<SymmetryReport> {
        let space = self.base.space();
        let mut r = rng::seeded(seed);
        let xs = space.sample(&mut r, samples);
        let times = check_times(&mut r, 3);
        let mut rep = SymmetryReport {
            samples,
            base_start_defect: 0.0,
            start_defect: 0.0,
            base_end_spread: 0.0,
            end_spread: 0.0,
            equivariance_defect: 0.0,
            worst_equivariance: None,
        };
        let (mut base_end, mut psi_end): (Option<Point>, Option<Point>) = (None, None);
        for x in &xs {
            rep.base_start_defect = rep.base_start_defect.max(space.dist(&self.base.eval(x, 0.0)?, x));
            rep.start_defect = rep.start_defect.max(space.dist(&self.psi(x, 0.0)?, x));
            let b1 = self.base.eval(x, 1.0)?;
            let p1 = self.psi(x, 1.0)?;
            let first_b = base_end.get_or_insert_with(|| b1.clone());
            rep.base_end_spread = rep.base_end_spread.max(space.dist(first_b, &b1));
            let first_p = psi_end.get_or_insert_with(|| p1.clone());
            rep.end_spread = rep.end_spread.max(space.dist(first_p, &p1));
            for &t in &times {
                let y = self.psi(x, t)?;
                for g in self.action.group().elements() {
                    let lhs = self.psi(&self.action.act(g, x)?, t)?;
                    let rhs = self.action.act(g, &y)?;
                    let defect = space.dist(&lhs, &rhs);
                    if defect > rep.equivariance_defect || rep.worst_equivariance.is_none() {
                        rep.equivariance_defect = defect;
                        rep.worst_equivariance = Some(EquivarianceWitness { g, x: x.clone(), t });
                    }
                }
            }
        }
        Ok(rep)
    }
}

impl Homotopy for GHomotopy {
    fn space(&self) -> &MetricSpace {
        self.base.space()
    }

    fn eval(&self, x: &Point, t: f64) -> Result<Point> {
        self.psi(x, t)
    }
}

fn verify_mean_laws(p: &QuasiMeanMap, action: &GroupAction, opts: &SymmetrizeOptions) -> Result<()> {
    let tuples = p.space().sample_tuples(&mut rng::seeded(opts.seed ^ 0x6d65_616e), p.arity(), opts.samples);
    let m2 = check_anonymity(p, &tuples, opts.tol)?;
    if !m2.passed {
        return Err(Error::hypothesis(
            "M2",
            format!("{} is not anonymous: violation {:e}", p.label(), m2.max_violation),
        ));
    }
    verify_equivariance(p, action, &tuples, opts.tol)
}

fn verify_equivariance(p: &QuasiMeanMap, action: &GroupAction, tuples: &[Vec<Point>], tol: f64) -> Result<()> {
    let eq = check_equivariance(p, action, tuples, tol)?;
    if !eq.passed {
        return Err(Error::hypothesis(
            "equivariance",
            format!("{} is not {}-equivariant: violation {:e}", p.label(), action.label(), eq.max_violation),
        ));
    }
    Ok(())
}

fn check_arity(mean: &Option<QuasiMeanMap>, order: usize) -> Result<()> {
    match mean {
        None if order == 1 => Ok(()),
        None => Err(Error::argument(format!("a group of order {order} needs a mean of arity {order}"))),
        Some(p) if p.arity() == order => Ok(()),
        Some(p) => Err(Error::argument(format!(
            "mean arity {} differs from group order {order}",
            p.arity()
        ))),
    }
}

/// Averages the conjugates of `base` over the group. A mean of arity `|G|` is
/// required unless the group is trivial, in which case `Ψ = Φ`.
pub fn symmetrize(
    base: Arc<dyn Homotopy>,
    action: &GroupAction,
    p: Option<QuasiMeanMap>,
    opts: &SymmetrizeOptions,
) -> Result<GHomotopy> {
    let order = action.group().order();
    check_arity(&p, order)?;
    if opts.verify_hypotheses {
        if let Some(p) = &p {
            verify_mean_laws(p, action, opts)?;
        }
    }
    let mut h = GHomotopy {
        base,
        action: action.clone(),
        mean: if order == 1 { None } else { p },
        order: action.group().elements().collect(),
        report: None,
    };
    h.report = Some(h.measure(opts.samples.min(100), opts.seed)?);
    Ok(h)
}

/// Largest `d(φ(gx, d), g φ(x, d))` over seeded `(g, x, d)` with `d` at level at most `depth`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DyadicEquivarianceReport {
    pub samples: usize,
    pub depth: u32,
    pub max_defect: f64,
    pub witness: Option<(usize, Point, Dyadic)>,
}

/// The dyadic contraction viewed as a `G`-homotopy: with `θ` fixed and `p`
/// equivariant, every stage `φ(·, d)` is already equivariant.
pub fn equivariant_contraction(
    builder: Arc<ContractionBuilder>,
    action: &GroupAction,
    opts: &SymmetrizeOptions,
) -> Result<(GHomotopy, DyadicEquivarianceReport)> {
    if !is_fixed_by(action, &action.group().whole(), builder.theta(), opts.tol)? {
        return Err(Error::Precondition(format!(
            "basepoint {} is not fixed by {}",
            builder.theta(),
            action.label()
        )));
    }
    if opts.verify_hypotheses {
        let tuples = builder.space().sample_tuples(&mut rng::seeded(opts.seed), 2, opts.samples);
        verify_equivariance(builder.mean(), action, &tuples, opts.tol)?;
    }
    let report = dyadic_equivariance(&builder, action, opts.samples, builder.eval_level().min(10), opts.seed)?;
    let h = GHomotopy {
        base: builder,
        action: action.clone(),
        mean: None,
        order: action.group().elements().collect(),
        report: None,
    };
    Ok((h, report))
}

/// Samples `d(φ(gx, d), g φ(x, d))` at random `(g, x, d)` with `d` in `D_depth`.
pub fn dyadic_equivariance(
    builder: &ContractionBuilder,
    action: &GroupAction,
    samples: usize,
    depth: u32,
    seed: u64,
) -> Result<DyadicEquivarianceReport> {
    let mut r = rng::seeded(seed);
    let top = 1u64 << depth.min(MAX_PHI_LEVEL);
    let mut rep = DyadicEquivarianceReport { samples, depth, max_defect: 0.0, witness: None };
    for _ in 0..samples {
        let g = r.gen_range(0..action.group().order());
        let x = builder.space().sample_one(&mut r);
        let d = Dyadic::new(r.gen_range(0..=top), depth)?;
        let lhs = builder.phi_at_dyadic(&action.act(g, &x)?, d)?;
        let rhs = action.act(g, &builder.phi_at_dyadic(&x, d)?)?;
        let defect = builder.space().dist(&lhs, &rhs);
        if defect > rep.max_defect || rep.witness.is_none() {
            rep.max_defect = defect;
            rep.witness = Some((g, x, d));
        }
    }
    Ok(rep)
}

type PointMap = dyn Fn(&Point) -> Point + Send + Sync;

/// A retraction of the space onto the fixed set of a subgroup.
#[derive(Clone)]
pub enum Retraction {
    /// `r(x) = p(h_1 x, ..., h_n x)`.
    OrbitAverage,
    /// Sets one coordinate to zero.
    CoordinateZero(usize),
    Custom(Arc<PointMap>),
}

/// The homotopy from the identity to the retraction that the deformation averages.
#[derive(Clone)]
pub enum Extension {
    /// `(1 - t) x + t r(x)`; needs a convex space.
    StraightLine,
    Custom(Arc<dyn Homotopy>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeformationReport {
    pub samples: usize,
    pub tol: f64,
    /// `max d(r(x), h r(x))`.
    pub retraction_defect: f64,
    /// Worst mismatch of the extension against the data `x` at `t=0`, `r(x)` at `t=1`, and `y` for fixed `y`.
    pub boundary_defect: f64,
    /// `max d(Ψ(x, 0), x)`.
    pub start_defect: f64,
    /// `max d(Ψ(y, t), y)` over fixed `y`.
    pub stationary_defect: f64,
    /// `max d(h Ψ(x, 1), Ψ(x, 1))`.
    pub end_fixed_defect: f64,
    pub passed: bool,
}

/// Deforms the space onto the fixed set `X^H`: `Ψ` starts at the identity,
/// keeps `X^H` still, and ends in `X^H`.
#[allow(clippy::too_many_arguments)]
pub fn fixed_set_deformation(
    action: &GroupAction,
    h_sub: &Subgroup,
    retraction: Retraction,
    p: Option<QuasiMeanMap>,
    extension: Extension,
    opts: &SymmetrizeOptions,
) -> Result<(GHomotopy, DeformationReport)> {
    let space = action.space().clone();
    let h_action = action.restrict(h_sub)?;
    check_arity(&p, h_sub.order())?;
    let r: Arc<PointMap> = match retraction {
        Retraction::OrbitAverage => {
            let p = p.clone().ok_or_else(|| Error::argument("orbit-average retraction needs a mean"))?;
            let (action, h) = (action.clone(), h_sub.clone());
            Arc::new(move |x: &Point| orbit_average_point(&p, &action, &h, x, f64::INFINITY).unwrap_or_else(|_| x.clone()))
        }
        Retraction::CoordinateZero(axis) => {
            if axis >= space.dim() {
                return Err(Error::argument(format!("axis {axis} out of range for {space}")));
            }
            Arc::new(move |x: &Point| {
                let mut y = x.clone();
                y.coords_mut()[axis] = 0.0;
                y
            })
        }
        Retraction::Custom(f) => f,
    };
    if opts.verify_hypotheses {
        if let Some(p) = &p {
            verify_mean_laws(p, &h_action, opts)?;
        }
    }

    let mut rng_ = rng::seeded(opts.seed);
    let xs = space.sample(&mut rng_, opts.samples);
    let times = check_times(&mut rng_, 3);
    let fixed_defect = |y: &Point| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for h in h_action.group().elements() {
            worst = worst.max(space.dist(&h_action.act(h, y)?, y));
        }
        Ok(worst)
    };

    let mut retraction_defect: f64 = 0.0;
    let mut fixed_points = Vec::with_capacity(xs.len());
    for x in &xs {
        let y = r(x);
        space.check_member(&y)?;
        let defect = fixed_defect(&y)?;
        if defect > opts.tol {
            return Err(Error::Precondition(format!("retraction sends {x} to {y}, which is not fixed (defect {defect:e})")));
        }
        retraction_defect = retraction_defect.max(defect);
        fixed_points.push(y);
    }

    let base: Arc<dyn Homotopy> = match extension {
        Extension::StraightLine => {
            let r = r.clone();
            Arc::new(FnHomotopy::straight_line(space.clone(), move |x| r(x))?)
        }
        Extension::Custom(h) => h,
    };
    let mut boundary_defect: f64 = 0.0;
    let mut boundary_witness = None;
    let mut offer = |d: f64, what: String| {
        if d > boundary_defect || boundary_witness.is_none() {
            boundary_defect = d;
            boundary_witness = Some(what);
        }
    };
    for (x, rx) in xs.iter().zip(&fixed_points) {
        offer(space.dist(&base.eval(x, 0.0)?, x), format!("t=0 at {x}"));
        offer(space.dist(&base.eval(x, 1.0)?, rx), format!("t=1 at {x}"));
        for &t in &times {
            offer(space.dist(&base.eval(rx, t)?, rx), format!("fixed point {rx} at t={t}"));
        }
    }
    if boundary_defect > opts.tol {
        return Err(Error::Precondition(format!(
            "extension misses its boundary data by {boundary_defect:e} ({})",
            boundary_witness.unwrap_or_default()
        )));
    }

    let mean = if h_sub.order() == 1 { None } else { p };
    let psi = GHomotopy { base, action: h_action.clone(), mean, order: h_action.group().elements().collect(), report: None };
    let mut start_defect: f64 = 0.0;
    let mut stationary_defect: f64 = 0.0;
    let mut end_fixed_defect: f64 = 0.0;
    for (x, y) in xs.iter().zip(&fixed_points) {
        start_defect = start_defect.max(space.dist(&psi.psi(x, 0.0)?, x));
        end_fixed_defect = end_fixed_defect.max(fixed_defect(&psi.psi(x, 1.0)?)?);
        for &t in &times {
            stationary_defect = stationary_defect.max(space.dist(&psi.psi(y, t)?, y));
        }
    }
    let passed = start_defect <= opts.tol && stationary_defect <= opts.tol && end_fixed_defect <= opts.tol;
    let report = DeformationReport {
        samples: xs.len(),
        tol: opts.tol,
        retraction_defect,
        boundary_defect,
        start_defect,
        stationary_defect,
        end_fixed_defect,
        passed,
    };
    Ok((psi, report))
}
