//! Quasi-mean maps `X^n -> X`, checkers for their laws, and constructions on them.
//!
//! A quasi-mean fixes the diagonal (`p(x, ..., x) = x`); a mean is also
//! invariant under permuting its arguments. A quasi-mean is contractive with
//! constant `λ < 1` when its output sits within `λ · diam` of every input,
//! `diam` being the largest pairwise distance in the tuple.
//!
//! The checkers sample; they can refute a law but never certify it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use itertools::Itertools;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{is_fixed_by, GroupAction, Subgroup};
use crate::rng;
use crate::spaces::{MetricSpace, Point, SpaceKind};

type EvalFn = dyn Fn(&[Point]) -> Point + Send + Sync;

/// An `n`-ary map on a metric space. Construction does not check any law;
/// use the `check_*` functions or [`QuasiMeanMap::validated`].
#[derive(Clone)]
pub struct QuasiMeanMap {
    arity: usize,
    space: MetricSpace,
    eval: Arc<EvalFn>,
    label: String,
}

impl fmt::Debug for QuasiMeanMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuasiMeanMap")
            .field("label", &self.label)
            .field("arity", &self.arity)
            .field("space", &self.space.to_string())
            .finish()
    }
}

impl QuasiMeanMap {
    pub fn new(
        label: impl Into<String>,
        arity: usize,
        space: MetricSpace,
        eval: impl Fn(&[Point]) -> Point + Send + Sync + 'static,
    ) -> Result<Self> {
        if arity < 2 {
            return Err(Error::argument(format!("arity must be at least 2, got {arity}")));
        }
        Ok(QuasiMeanMap { arity, space, eval: Arc::new(eval), label: label.into() })
    }

    /// Rejects the map unless unanimity holds within `tol` on `samples` points.
    pub fn validated(self, samples: usize, seed: u64, tol: f64) -> Result<Self> {
        let pts = self.space.sample_seeded(seed, samples);
        let report = check_unanimity(&self, &pts, tol)?;
        if !report.passed {
            return Err(Error::hypothesis(
                "M1",
                format!("{} moves a diagonal point by {:e}", self.label, report.max_violation),
            ));
        }
        Ok(self)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluates on a tuple of members; the result must be a member as well.
    pub fn eval(&self, xs: &[Point]) -> Result<Point> {
        if xs.len() != self.arity {
            return Err(Error::argument(format!(
                "{} takes {} arguments, got {}",
                self.label,
                self.arity,
                xs.len()
            )));
        }
        for x in xs {
            self.space.check_member(x)?;
        }
        let y = (self.eval)(xs);
        self.space.check_member(&y)?;
        Ok(y)
    }

    pub(crate) fn eval_raw(&self, xs: &[Point]) -> Point {
        (self.eval)(xs)
    }

    /// Coordinatewise average. Needs a convex space.
    pub fn arithmetic(space: MetricSpace, n: usize) -> Result<Self> {
        if !space.is_convex() {
            return Err(Error::argument(format!("the arithmetic mean needs a convex space, not {space}")));
        }
        Self::new(format!("arithmetic:{n}"), n, space, move |xs| {
            let mut out = xs[0].clone();
            for (k, c) in out.coords_mut().iter_mut().enumerate() {
                *c = xs.iter().map(|x| x.coords()[k]).sum::<f64>() / n as f64;
            }
            out
        })
    }

    /// `(x_1 ⋯ x_n)^(1/n)` on an interval of positive reals.
    pub fn geometric(space: MetricSpace, n: usize) -> Result<Self> {
        match space.kind() {
            SpaceKind::Interval { a, .. } if *a > 0.0 => {}
            _ => return Err(Error::argument(format!("the geometric mean needs an interval in (0, ∞), not {space}"))),
        }
        let label = if n == 2 { "geometric".to_string() } else { format!("geometric:{n}") };
        Self::new(label, n, space, move |xs| {
            if n == 2 {
                Point::from((xs[0].coords()[0] * xs[1].coords()[0]).sqrt())
            } else {
                let log_mean = xs.iter().map(|x| x.coords()[0].ln()).sum::<f64>() / n as f64;
                Point::from(log_mean.exp())
            }
        })
    }

    /// Projection onto argument `index` (1-based).
    pub fn dictator(space: MetricSpace, index: usize, n: usize) -> Result<Self> {
        if index == 0 || index > n {
            return Err(Error::argument(format!("dictator index {index} out of range 1..={n}")));
        }
        Self::new(format!("dictator:{index}"), n, space, move |xs| xs[index - 1].clone())
    }

    pub fn constant(space: MetricSpace, value: Point, n: usize) -> Result<Self> {
        space.check_member(&value)?;
        Self::new(format!("constant:{value}"), n, space, move |_| value.clone())
    }

    /// `min(x, y) + |x - y|^2 / 2` on an interval.
    pub fn minsq(space: MetricSpace) -> Result<Self> {
        if !matches!(space.kind(), SpaceKind::Interval { .. }) {
            return Err(Error::argument(format!("minsq is defined on intervals, not {space}")));
        }
        Self::new("minsq", 2, space, |xs| {
            let (x, y) = (xs[0].coords()[0], xs[1].coords()[0]);
            Point::from(x.min(y) + (x - y) * (x - y) / 2.0)
        })
    }

    /// `max_i d(x_i, p(x)) / diam(x)`, or `None` when `diam(x) <= excluded`.
    pub fn ratio(&self, xs: &[Point], excluded: f64) -> Option<f64> {
        let diam = self.space.diameter_of(xs);
        if diam <= excluded {
            return None;
        }
        let y = self.eval_raw(xs);
        Some(self.spread(xs, &y) / diam)
    }

    fn spread(&self, xs: &[Point], y: &Point) -> f64 {
        xs.iter().map(|x| self.space.dist(x, y)).fold(0.0, f64::max)
    }
}

/// Names accepted by the registry: `arithmetic:n`, `geometric[:n]`,
/// `dictator:i[:n]`, `constant:c1,c2,..[:n]`, `minsq`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MeanSpec {
    Arithmetic(usize),
    Geometric(usize),
    Dictator { index: usize, arity: usize },
    Constant { value: Vec<f64>, arity: usize },
    MinSq,
}

impl MeanSpec {
    pub fn arity(&self) -> usize {
        match self {
            MeanSpec::Arithmetic(n) | MeanSpec::Geometric(n) => *n,
            MeanSpec::Dictator { arity, .. } | MeanSpec::Constant { arity, .. } => *arity,
            MeanSpec::MinSq => 2,
        }
    }

    pub fn build(&self, space: &MetricSpace) -> Result<QuasiMeanMap> {
        let space = space.clone();
        match self {
            MeanSpec::Arithmetic(n) => QuasiMeanMap::arithmetic(space, *n),
            MeanSpec::Geometric(n) => QuasiMeanMap::geometric(space, *n),
            MeanSpec::Dictator { index, arity } => QuasiMeanMap::dictator(space, *index, *arity),
            MeanSpec::Constant { value, arity } => QuasiMeanMap::constant(space, Point::new(value.clone())?, *arity),
            MeanSpec::MinSq => QuasiMeanMap::minsq(space),
        }
    }
}

impl FromStr for MeanSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("mean `{s}`: {why}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let int = |p: &str| p.trim().parse::<usize>().map_err(|_| bad("expected an integer"));
        let arity_at = |i: usize| parts.get(i).map(|p| int(p)).transpose().map(|a| a.unwrap_or(2));
        let spec = match parts[0] {
            "arithmetic" => MeanSpec::Arithmetic(int(parts.get(1).ok_or_else(|| bad("missing arity"))?)?),
            "geometric" => MeanSpec::Geometric(arity_at(1)?),
            "dictator" => MeanSpec::Dictator {
                index: int(parts.get(1).ok_or_else(|| bad("missing index"))?)?,
                arity: arity_at(2)?,
            },
            "constant" => {
                let coords = parts.get(1).ok_or_else(|| bad("missing point"))?;
                let value = coords
                    .split(',')
                    .map(|c| c.trim().parse::<f64>().map_err(|_| bad("bad coordinate")))
                    .collect::<Result<Vec<_>>>()?;
                MeanSpec::Constant { value, arity: arity_at(2)? }
            }
            "minsq" if parts.len() == 1 => MeanSpec::MinSq,
            _ => return Err(bad("unknown mean")),
        };
        if spec.arity() < 2 {
            return Err(bad("arity must be at least 2"));
        }
        Ok(spec)
    }
}

impl fmt::Display for MeanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanSpec::Arithmetic(n) => write!(f, "arithmetic:{n}"),
            MeanSpec::Geometric(2) => write!(f, "geometric"),
            MeanSpec::Geometric(n) => write!(f, "geometric:{n}"),
            MeanSpec::Dictator { index, arity: 2 } => write!(f, "dictator:{index}"),
            MeanSpec::Dictator { index, arity } => write!(f, "dictator:{index}:{arity}"),
            MeanSpec::Constant { value, arity } => {
                write!(f, "constant:{}", value.iter().join(","))?;
                if *arity != 2 {
                    write!(f, ":{arity}")?;
                }
                Ok(())
            }
            MeanSpec::MinSq => write!(f, "minsq"),
        }
    }
}

impl TryFrom<String> for MeanSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MeanSpec> for String {
    fn from(m: MeanSpec) -> String {
        m.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Law {
    M1,
    M2,
    #[serde(rename = "equivariance")]
    Equivariance,
    #[serde(rename = "contractive")]
    Contractive,
    #[serde(rename = "strict-betweenness")]
    StrictBetweenness,
}

/// Outcome of sampling one law.
///
/// For [`Law::StrictBetweenness`] the law holds when every tuple keeps a
/// positive margin `diam - max_i d(x_i, p(x))`; `worst_margin` is the smallest
/// margin seen and the check passes iff it exceeds the tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawReport {
    pub law: Law,
    pub samples_checked: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub witness: Option<Vec<Point>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
}

struct Worst {
    value: f64,
    tuple: Option<Vec<Point>>,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, tuple: None }
    }

    fn offer(&mut self, value: f64, tuple: &[Point]) {
        if value > self.value || self.tuple.is_none() {
            self.value = self.value.max(value);
            self.tuple = Some(tuple.to_vec());
        }
    }

    fn report(self, law: Law, samples_checked: usize, tolerance: f64) -> LawReport {
        let passed = self.value <= tolerance;
        LawReport {
            law,
            samples_checked,
            max_violation: self.value,
            tolerance,
            passed,
            witness: if passed { None } else { self.tuple },
            worst_margin: None,
        }
    }
}

/// Unanimity: worst `d(p(x, ..., x), x)` over `samples`.
pub fn check_unanimity(p: &QuasiMeanMap, samples: &[Point], tol: f64) -> Result<LawReport> {
    let mut worst = Worst::new();
    for x in samples {
        let diag = vec![x.clone(); p.arity()];
        let y = p.eval(&diag)?;
        worst.offer(p.space().dist(&y, x), &diag);
    }
    Ok(worst.report(Law::M1, samples.len(), tol))
}

/// Anonymity: worst `d(p(x_σ), p(x))`. Every permutation up to arity 5,
/// `n^2` chained random transpositions beyond.
pub fn check_anonymity(p: &QuasiMeanMap, tuples: &[Vec<Point>], tol: f64) -> Result<LawReport> {
    let n = p.arity();
    let mut worst = Worst::new();
    for (idx, xs) in tuples.iter().enumerate() {
        let base = p.eval(xs)?;
        let test = |perm: &[Point], worst: &mut Worst| -> Result<()> {
            let y = p.eval(perm)?;
            worst.offer(p.space().dist(&y, &base), perm);
            Ok(())
        };
        if n <= 5 {
            for sigma in (0..n).permutations(n) {
                let perm: Vec<Point> = sigma.iter().map(|&i| xs[i].clone()).collect();
                test(&perm, &mut worst)?;
            }
        } else {
            let mut r = rng::seeded(idx as u64);
            let mut perm = xs.clone();
            for _ in 0..n * n {
                let (i, j) = (r.gen_range(0..n), r.gen_range(0..n));
                perm.swap(i, j);
                test(&perm, &mut worst)?;
            }
        }
    }
    Ok(worst.report(Law::M2, tuples.len(), tol))
}

/// Equivariance: worst `d(p(g x_1, ..., g x_n), g p(x))` over tuples and group elements.
pub fn check_equivariance(
    p: &QuasiMeanMap,
    action: &GroupAction,
    tuples: &[Vec<Point>],
    tol: f64,
) -> Result<LawReport> {
    let mut worst = Worst::new();
    for xs in tuples {
        let y = p.eval(xs)?;
        for g in action.group().elements() {
            let moved = xs.iter().map(|x| action.act(g, x)).collect::<Result<Vec<_>>>()?;
            let lhs = p.eval(&moved)?;
            let rhs = action.act(g, &y)?;
            worst.offer(p.space().dist(&lhs, &rhs), xs);
        }
    }
    Ok(worst.report(Law::Equivariance, tuples.len(), tol))
}

/// Contractivity with constant `lambda`: worst `max_i d(x_i, p(x)) - λ diam(x)`.
pub fn check_contractive(p: &QuasiMeanMap, tuples: &[Vec<Point>], lambda: f64, tol: f64) -> Result<LawReport> {
    let mut worst = Worst::new();
    for xs in tuples {
        let y = p.eval(xs)?;
        let excess = p.spread(xs, &y) - lambda * p.space().diameter_of(xs);
        worst.offer(excess.max(0.0), xs);
    }
    Ok(worst.report(Law::Contractive, tuples.len(), tol))
}

/// Strict betweenness: `max_i d(x_i, p(x)) < diam(x)` on every tuple of positive diameter.
pub fn check_strict_betweenness(p: &QuasiMeanMap, tuples: &[Vec<Point>], tol: f64) -> Result<LawReport> {
    let mut worst_margin = f64::INFINITY;
    let mut witness = None;
    let mut checked = 0;
    for xs in tuples {
        let diam = p.space().tuple_diameter(xs)?;
        if diam == 0.0 {
            continue;
        }
        checked += 1;
        let y = p.eval(xs)?;
        let margin = diam - p.spread(xs, &y);
        if margin < worst_margin {
            worst_margin = margin;
            witness = Some(xs.clone());
        }
    }
    let passed = worst_margin > tol;
    Ok(LawReport {
        law: Law::StrictBetweenness,
        samples_checked: checked,
        max_violation: if worst_margin.is_finite() { (tol - worst_margin).max(0.0) } else { 0.0 },
        tolerance: tol,
        passed,
        witness: if passed { None } else { witness },
        worst_margin: worst_margin.is_finite().then_some(worst_margin),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaConfig {
    /// Grid spacing per axis when the tuple space has dimension at most 2.
    pub grid_step: f64,
    /// Random tuples drawn before hill-climbing (higher dimensions only).
    pub random_samples: usize,
    pub restarts: usize,
    pub hill_steps: usize,
    /// Tuples with diameter at or below this are skipped.
    pub excluded_radius: f64,
    pub seed: u64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig {
            grid_step: 1e-3,
            random_samples: 10_000,
            restarts: 100,
            hill_steps: 200,
            excluded_radius: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMethod {
    Grid,
    RandomHillClimb,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub lambda_hat: f64,
    pub argmax_tuple: Vec<Point>,
    pub samples: usize,
    pub excluded_diagonal_radius: f64,
    pub method: LambdaMethod,
}

impl LambdaEstimate {
    pub const CSV_HEADER: [&'static str; 5] =
        ["lambda_hat", "samples", "excluded_diagonal_radius", "method", "argmax_tuple"];

    /// One CSV record; the argmax tuple as points separated by `;`, coordinates by spaces.
    pub fn csv_record(&self) -> [String; 5] {
        let tuple = self
            .argmax_tuple
            .iter()
            .map(|p| p.coords().iter().join(" "))
            .join(";");
        let method = match self.method {
            LambdaMethod::Grid => "grid",
            LambdaMethod::RandomHillClimb => "random-hill-climb",
        };
        [
            self.lambda_hat.to_string(),
            self.samples.to_string(),
            self.excluded_diagonal_radius.to_string(),
            method.to_string(),
            tuple,
        ]
    }
}

/// Largest tuple grid the grid method will walk.
const MAX_GRID_TUPLES: usize = 400_000_000;

/// Estimates the smallest `λ` with `max_i d(x_i, p(x)) <= λ diam(x)` by maximizing
/// the ratio over sampled tuples.
///
/// A dense grid is used when the tuple space has dimension at most 2 (or the
/// space is finite and small), random sampling plus hill-climbing otherwise.
/// The result is a lower bound on the true supremum, reported with its argmax.
pub fn estimate_lambda(p: &QuasiMeanMap, cfg: &LambdaConfig) -> Result<LambdaEstimate> {
    let n = p.arity();
    let tuple_dim = n * p.space().dim();
    let finite = matches!(p.space().kind(), SpaceKind::FinitePoints(_));
    let grid = if tuple_dim <= 2 || finite { Some(p.space().grid(cfg.grid_step)?) } else { None };
    let grid = grid.filter(|g| (g.len() as f64).powi(n as i32) <= MAX_GRID_TUPLES as f64);

    let mut best = f64::NEG_INFINITY;
    let mut argmax: Vec<Point> = Vec::new();
    let mut samples = 0usize;
    let consider = |xs: &[Point], best: &mut f64, argmax: &mut Vec<Point>, samples: &mut usize| -> Option<f64> {
        let r = p.ratio(xs, cfg.excluded_radius)?;
        *samples += 1;
        if r > *best {
            *best = r;
            *argmax = xs.to_vec();
        }
        Some(r)
    };

    let method = if let Some(grid) = grid {
        let gl = grid.len();
        let mut idx = vec![0usize; n];
        let mut buf: Vec<Point> = vec![grid[0].clone(); n];
        'outer: loop {
            consider(&buf, &mut best, &mut argmax, &mut samples);
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < gl {
                    for j in k..n {
                        buf[j].coords_mut().copy_from_slice(grid[idx[j]].coords());
                    }
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        LambdaMethod::Grid
    } else {
        let mut r = rng::seeded(cfg.seed);
        let mut pool: Vec<(f64, Vec<Point>)> = Vec::new();
        for _ in 0..cfg.random_samples {
            let xs = p.space().sample(&mut r, n);
            if let Some(v) = consider(&xs, &mut best, &mut argmax, &mut samples) {
                pool.push((v, xs));
            }
        }
        pool.sort_by(|a, b| b.0.total_cmp(&a.0));
        for restart in 0..cfg.restarts {
            let start = match pool.get(restart) {
                Some((_, xs)) if restart % 2 == 0 => xs.clone(),
                _ => p.space().sample(&mut r, n),
            };
            let (v, xs, evals) = hill_climb(p, start, cfg.hill_steps, &mut r, |xs| p.ratio(xs, cfg.excluded_radius));
            samples += evals;
            if v > best {
                best = v;
                argmax = xs;
            }
        }
        LambdaMethod::RandomHillClimb
    };

    if samples == 0 || !best.is_finite() {
        return Err(Error::Sampling(format!(
            "every sampled tuple has diameter <= {:e}",
            cfg.excluded_radius
        )));
    }
    Ok(LambdaEstimate {
        lambda_hat: best,
        argmax_tuple: argmax,
        samples,
        excluded_diagonal_radius: cfg.excluded_radius,
        method,
    })
}

/// Coordinate-wise random search with a shrinking step, maximizing `score`.
/// Returns the best score, its tuple and the number of evaluations.
fn hill_climb<R: Rng>(
    p: &QuasiMeanMap,
    start: Vec<Point>,
    steps: usize,
    r: &mut R,
    score: impl Fn(&[Point]) -> Option<f64>,
) -> (f64, Vec<Point>, usize) {
    let mut cur = start;
    let mut cur_score = score(&cur).unwrap_or(f64::NEG_INFINITY);
    let mut evals = 1;
    let mut step = space_scale(p.space()) * 0.25;
    for _ in 0..steps {
        let mut cand = cur.clone();
        let i = r.gen_range(0..cand.len());
        let k = r.gen_range(0..cand[i].dim());
        cand[i].coords_mut()[k] += r.gen_range(-step..=step);
        let Ok(projected) = p.space().project(&cand[i]) else { continue };
        cand[i] = projected;
        evals += 1;
        match score(&cand) {
            Some(s) if s > cur_score => {
                cur = cand;
                cur_score = s;
            }
            _ => step *= 0.97,
        }
    }
    (cur_score, cur, evals)
}

fn space_scale(space: &MetricSpace) -> f64 {
    match space.kind() {
        SpaceKind::Interval { a, b } => b - a,
        SpaceKind::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).fold(0.0, f64::max),
        SpaceKind::Circle { radius, .. } => 2.0 * radius,
        SpaceKind::Product(fs) => fs.iter().map(space_scale).fold(0.0, f64::max),
        SpaceKind::FinitePoints(ps) => space.diameter_of(ps).max(1.0),
    }
}

/// `q(x_1, ..., x_k) = p(x_1, ..., x_k, x_1, ..., x_k, ...)`, the block repeated `n / k` times.
pub fn derive_divisor_mean(p: &QuasiMeanMap, k: usize) -> Result<QuasiMeanMap> {
    let n = p.arity();
    if k < 2 {
        return Err(Error::argument(format!("divisor arity must be at least 2, got {k}")));
    }
    if !n.is_multiple_of(k) {
        return Err(Error::argument(format!("{k} does not divide {n}")));
    }
    if k == n {
        return Ok(p.clone());
    }
    let inner = p.clone();
    QuasiMeanMap::new(format!("{}/{k}", p.label()), k, p.space().clone(), move |xs| {
        let repeated: Vec<Point> = xs.iter().cycle().take(n).cloned().collect();
        inner.eval_raw(&repeated)
    })
}

/// `p'(x, y) = p(x, y, ..., y)`.
pub fn collapse_to_quasi_mean(p: &QuasiMeanMap) -> QuasiMeanMap {
    let n = p.arity();
    if n == 2 {
        return p.clone();
    }
    let inner = p.clone();
    QuasiMeanMap::new(format!("{}'", p.label()), 2, p.space().clone(), move |xs| {
        let mut args = vec![xs[1].clone(); n];
        args[0] = xs[0].clone();
        inner.eval_raw(&args)
    })
    .expect("arity 2 is valid")
}

/// `x_0 = p(h_1 x, ..., h_n x)` over the members of `h_sub`, which should be
/// fixed by all of `h_sub` when `p` is anonymous and equivariant.
pub fn orbit_average_point(
    p: &QuasiMeanMap,
    action: &GroupAction,
    h_sub: &Subgroup,
    x: &Point,
    tol: f64,
) -> Result<Point> {
    if p.arity() != h_sub.order() {
        return Err(Error::argument(format!(
            "mean arity {} differs from subgroup order {}",
            p.arity(),
            h_sub.order()
        )));
    }
    let images = h_sub.members().iter().map(|&h| action.act(h, x)).collect::<Result<Vec<_>>>()?;
    let x0 = p.eval(&images)?;
    if !is_fixed_by(action, h_sub, &x0, tol)? {
        return Err(Error::hypothesis(
            "equivariance/M2",
            format!("{} sends the orbit of {x} to {x0}, which is not fixed by {h_sub}", p.label()),
        ));
    }
    Ok(x0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { restarts: 50, steps: 300, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolomonicSearch {
    pub threshold: f64,
    /// A tuple whose image is farther than the threshold from every input.
    pub witness: Option<Vec<Point>>,
    /// Largest `min_i d(p(x), x_i)` reached.
    pub best_margin: f64,
    pub best_tuple: Vec<Point>,
    pub evaluations: usize,
}

/// Searches for a tuple with `min_i d(p(x), x_i) > k` by restarted hill-climbing.
pub fn solomonic_witness_search(p: &QuasiMeanMap, k: f64, budget: &SearchBudget) -> Result<SolomonicSearch> {
    if k.is_nan() || k <= 0.0 {
        return Err(Error::argument(format!("threshold must be positive, got {k}")));
    }
    let margin = |xs: &[Point]| {
        let y = p.eval_raw(xs);
        Some(xs.iter().map(|x| p.space().dist(x, &y)).fold(f64::INFINITY, f64::min))
    };
    let mut r = rng::seeded(budget.seed);
    let mut best = f64::NEG_INFINITY;
    let mut best_tuple = Vec::new();
    let mut evaluations = 0;
    for _ in 0..budget.restarts.max(1) {
        let start = p.space().sample(&mut r, p.arity());
        let (v, xs, evals) = hill_climb(p, start, budget.steps, &mut r, margin);
        evaluations += evals;
        if v > best {
            best = v;
            best_tuple = xs;
        }
        if best > k {
            break;
        }
    }
    Ok(SolomonicSearch {
        threshold: k,
        witness: (best > k).then(|| best_tuple.clone()),
        best_margin: best,
        best_tuple,
        evaluations,
    })
}
