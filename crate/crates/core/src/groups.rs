//! Finite groups given by Cayley tables, and their actions on metric spaces.
//!
//! Elements are ids `0..order` with `0` the identity; `compose(a, b)` is the
//! table entry `a * b`. An action satisfies `act(a, act(b, x)) = act(a * b, x)`.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::spaces::{MetricSpace, Point, SpaceKind};

/// Default tolerance for deciding that two points coincide.
pub const POINT_TOL: f64 = 1e-9;

/// Groups up to this order get a full associativity check.
const FULL_ASSOCIATIVITY_ORDER: usize = 24;

/// Largest group handled by [`enumerate_subgroups`].
pub const MAX_SUBGROUP_SEARCH_ORDER: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteGroup {
    cayley: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Validates a Cayley table. Errors name the first violated axiom.
    pub fn from_table(cayley: Vec<Vec<usize>>) -> Result<Self> {
        let m = cayley.len();
        if m == 0 {
            return Err(Error::Group("empty table".into()));
        }
        if let Some(row) = cayley.iter().position(|r| r.len() != m) {
            return Err(Error::Group(format!("row {row} has the wrong length, table is not square")));
        }
        for (a, row) in cayley.iter().enumerate() {
            if let Some(b) = row.iter().position(|&c| c >= m) {
                return Err(Error::Group(format!("not closed: {a} * {b} = {} is out of range", row[b])));
            }
        }
        for (a, row) in cayley.iter().enumerate() {
            if cayley[0][a] != a || row[0] != a {
                return Err(Error::Group(format!("0 is not an identity: fails for element {a}")));
            }
        }
        let mut inverse = Vec::with_capacity(m);
        for (a, row) in cayley.iter().enumerate() {
            match (0..m).find(|&b| row[b] == 0 && cayley[b][a] == 0) {
                Some(b) => inverse.push(b),
                None => return Err(Error::Group(format!("no inverse for element {a}"))),
            }
        }
        let assoc = |a: usize, b: usize, c: usize| cayley[cayley[a][b]][c] == cayley[a][cayley[b][c]];
        let witness = if m <= FULL_ASSOCIATIVITY_ORDER {
            (0..m)
                .cartesian_product(0..m)
                .cartesian_product(0..m)
                .map(|((a, b), c)| (a, b, c))
                .find(|&(a, b, c)| !assoc(a, b, c))
        } else {
            let mut r = rng::seeded(m as u64);
            (0..20_000)
                .map(|_| (r.gen_range(0..m), r.gen_range(0..m), r.gen_range(0..m)))
                .find(|&(a, b, c)| !assoc(a, b, c))
        };
        if let Some((a, b, c)) = witness {
            return Err(Error::Group(format!("not associative: ({a} * {b}) * {c} != {a} * ({b} * {c})")));
        }
        Ok(FiniteGroup { cayley, inverse })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let table: Vec<Vec<usize>> = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_table(table)
    }

    pub fn order(&self) -> usize {
        self.cayley.len()
    }

    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.cayley[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.cayley
    }

    /// Integers mod `n` under addition.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("cyclic group of order 0"));
        }
        Self::from_table((0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect())
    }

    /// Symmetries of the regular `n`-gon, order `2n`.
    ///
    /// Element `k < n` is the rotation `r^k`; element `n + k` is `s r^k`,
    /// with `s` a reflection and `r s = s r^-1`.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("dihedral group of a 0-gon"));
        }
        let split = |e: usize| (e / n, e % n);
        let table = (0..2 * n)
            .map(|a| {
                (0..2 * n)
                    .map(|b| {
                        let ((fa, ka), (fb, kb)) = (split(a), split(b));
                        // s^fa r^ka s^fb r^kb = s^(fa+fb) r^(±ka + kb)
                        let k = if fb == 0 { ka + kb } else { n - ka + kb };
                        ((fa + fb) % 2) * n + k % n
                    })
                    .collect()
            })
            .collect();
        Self::from_table(table)
    }

    /// Permutations of `0..n` in lexicographic order, composed as functions:
    /// `(a * b)(i) = a(b(i))`.
    pub fn symmetric(n: usize) -> Result<Self> {
        if n == 0 || n > 5 {
            return Err(Error::argument(format!("symmetric group on {n} letters is not supported")));
        }
        let perms = symmetric_permutations(n);
        let index = |p: &Vec<usize>| perms.iter().position(|q| q == p).expect("closed");
        let table = perms
            .iter()
            .map(|a| perms.iter().map(|b| index(&b.iter().map(|&i| a[i]).collect())).collect())
            .collect();
        Self::from_table(table)
    }

    pub fn klein_four() -> Self {
        Self::from_table(vec![vec![0, 1, 2, 3], vec![1, 0, 3, 2], vec![2, 3, 0, 1], vec![3, 2, 1, 0]])
            .expect("klein four table is a group")
    }

    pub fn trivial() -> Self {
        Self::from_table(vec![vec![0]]).expect("trivial group")
    }

    /// Product group; pair `(a, b)` has id `a * other.order() + b`.
    pub fn direct_product(&self, other: &FiniteGroup) -> Result<Self> {
        let n = other.order();
        let m = self.order() * n;
        Self::from_table(
            (0..m)
                .map(|x| {
                    (0..m)
                        .map(|y| self.compose(x / n, y / n) * n + other.compose(x % n, y % n))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn whole(&self) -> Subgroup {
        Subgroup { members: self.elements().collect(), parent_order: self.order() }
    }

    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup { members: vec![0], parent_order: self.order() }
    }

    /// Smallest subgroup containing `generators`.
    pub fn generated_by(&self, generators: impl IntoIterator<Item = usize>) -> Result<Subgroup> {
        let mut members: BTreeSet<usize> = BTreeSet::from([0]);
        let mut frontier: Vec<usize> = Vec::new();
        for g in generators {
            if g >= self.order() {
                return Err(Error::argument(format!("element {g} is not in a group of order {}", self.order())));
            }
            if members.insert(g) {
                frontier.push(g);
            }
        }
        let gens: Vec<usize> = members.iter().copied().collect();
        while let Some(x) = frontier.pop() {
            for &g in &gens {
                let y = self.compose(x, g);
                if members.insert(y) {
                    frontier.push(y);
                }
            }
        }
        Ok(Subgroup { members: members.into_iter().collect(), parent_order: self.order() })
    }
}

fn symmetric_permutations(n: usize) -> Vec<Vec<usize>> {
    (0..n).permutations(n).collect()
}

/// Validates a Cayley table into a group.
pub fn make_group(cayley: Vec<Vec<usize>>) -> Result<FiniteGroup> {
    FiniteGroup::from_table(cayley)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Subgroup {
    members: Vec<usize>,
    parent_order: usize,
}

impl Subgroup {
    /// Checks identity, closure and inverses of `members` inside `group`.
    pub fn new(group: &FiniteGroup, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&e| e >= group.order()) {
            return Err(Error::argument(format!("element {bad} is not in the group")));
        }
        if !set.contains(&0) {
            return Err(Error::argument("subgroup must contain the identity"));
        }
        for &a in &set {
            if !set.contains(&group.inverse(a)) {
                return Err(Error::argument(format!("subgroup lacks the inverse of {a}")));
            }
            for &b in &set {
                if !set.contains(&group.compose(a, b)) {
                    return Err(Error::argument(format!("subgroup is not closed: {a} * {b}")));
                }
            }
        }
        assert_eq!(group.order() % set.len(), 0, "Lagrange: subgroup order divides group order");
        Ok(Subgroup { members: set.into_iter().collect(), parent_order: group.order() })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn parent_order(&self) -> usize {
        self.parent_order
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.binary_search(&g).is_ok()
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.members.iter().join(", "))
    }
}

/// All subgroups of `group`, sorted by order and then by members.
///
/// Starts from the cyclic subgroups and closes the collection under joins,
/// so groups that need more than two generators are covered too.
pub fn enumerate_subgroups(group: &FiniteGroup) -> Result<Vec<Subgroup>> {
    if group.order() > MAX_SUBGROUP_SEARCH_ORDER {
        return Err(Error::Capacity(format!(
            "subgroup enumeration supports order <= {MAX_SUBGROUP_SEARCH_ORDER}, got {}",
            group.order()
        )));
    }
    let mut found: BTreeSet<Subgroup> = BTreeSet::new();
    found.insert(group.trivial_subgroup());
    for g in group.elements() {
        found.insert(group.generated_by([g])?);
    }
    let cyclic: Vec<Subgroup> = found.iter().cloned().collect();
    let mut frontier: Vec<Subgroup> = cyclic.clone();
    while let Some(h) = frontier.pop() {
        for c in &cyclic {
            if c.members.iter().all(|g| h.contains(*g)) {
                continue;
            }
            let joined = group.generated_by(h.members.iter().chain(&c.members).copied())?;
            if found.insert(joined.clone()) {
                frontier.push(joined);
            }
        }
    }
    let mut out: Vec<Subgroup> = found.into_iter().collect();
    out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.members.cmp(&b.members)));
    Ok(out)
}

type ActFn = dyn Fn(usize, &Point) -> Point + Send + Sync;

/// A group acting on a metric space through a user-supplied point map.
#[derive(Clone)]
pub struct GroupAction {
    group: FiniteGroup,
    space: MetricSpace,
    apply: Arc<ActFn>,
    label: String,
}

impl fmt::Debug for GroupAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupAction")
            .field("label", &self.label)
            .field("order", &self.group.order())
            .field("space", &self.space.to_string())
            .finish()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ActionReport {
    pub samples_checked: usize,
    /// Worst `d(e x, x)`.
    pub identity_violation: f64,
    /// Worst `d(g (h x), (g h) x)`.
    pub compatibility_violation: f64,
    /// Worst `|d(g x, g y) - d(x, y)|`.
    pub isometry_defect: f64,
    pub preserves_space: bool,
    pub passed: bool,
}

impl GroupAction {
    pub fn new(
        label: impl Into<String>,
        group: FiniteGroup,
        space: MetricSpace,
        apply: impl Fn(usize, &Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        GroupAction { group, space, apply: Arc::new(apply), label: label.into() }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `g · x`, checking both the argument and the image against the space.
    pub fn act(&self, g: usize, x: &Point) -> Result<Point> {
        if g >= self.group.order() {
            return Err(Error::argument(format!("element {g} is not in a group of order {}", self.group.order())));
        }
        self.space.check_member(x)?;
        let y = (self.apply)(g, x);
        self.space.check_member(&y)?;
        Ok(y)
    }

    pub(crate) fn act_unchecked(&self, g: usize, x: &Point) -> Point {
        (self.apply)(g, x)
    }

    /// Same map restricted to a subgroup, with the subgroup's members renumbered `0..|H|`.
    pub fn restrict(&self, h: &Subgroup) -> Result<GroupAction> {
        let members = h.members().to_vec();
        let pos = |g: usize| members.binary_search(&g).expect("subgroup is closed");
        let table = members
            .iter()
            .map(|&a| members.iter().map(|&b| pos(self.group.compose(a, b))).collect())
            .collect();
        let sub = FiniteGroup::from_table(table)?;
        let apply = Arc::clone(&self.apply);
        let label = format!("{} restricted to {h}", self.label);
        Ok(GroupAction {
            group: sub,
            space: self.space.clone(),
            apply: Arc::new(move |g, x| apply(members[g], x)),
            label,
        })
    }

    /// Samples the action laws: identity, compatibility with the table,
    /// membership of images, and (reported only) isometry.
    pub fn check_laws(&self, samples: &[Point], tol: f64) -> Result<ActionReport> {
        let d = |a: &Point, b: &Point| self.space.dist(a, b);
        let mut report = ActionReport {
            samples_checked: samples.len(),
            identity_violation: 0.0,
            compatibility_violation: 0.0,
            isometry_defect: 0.0,
            preserves_space: true,
            passed: true,
        };
        for (i, x) in samples.iter().enumerate() {
            self.space.check_member(x)?;
            let y = &samples[(i + 1) % samples.len()];
            report.identity_violation = report.identity_violation.max(d(&self.act_unchecked(0, x), x));
            for g in self.group.elements() {
                let gx = self.act_unchecked(g, x);
                if !self.space.contains(&gx) {
                    report.preserves_space = false;
                    continue;
                }
                let gy = self.act_unchecked(g, y);
                if self.space.contains(&gy) {
                    report.isometry_defect = report.isometry_defect.max((d(&gx, &gy) - d(x, y)).abs());
                }
                for h in self.group.elements() {
                    let hx = self.act_unchecked(h, x);
                    let lhs = self.act_unchecked(g, &hx);
                    let rhs = self.act_unchecked(self.group.compose(g, h), x);
                    report.compatibility_violation = report.compatibility_violation.max(d(&lhs, &rhs));
                }
            }
        }
        report.passed = report.preserves_space
            && report.identity_violation <= tol
            && report.compatibility_violation <= tol;
        Ok(report)
    }

    /// `x ↦ -x` by `Z_2`. The space must be symmetric about the origin.
    pub fn negation(space: MetricSpace) -> Result<Self> {
        let symmetric = match space.kind() {
            SpaceKind::Interval { a, b } => a == &-b,
            SpaceKind::Box { lo, hi } => lo.iter().zip(hi).all(|(l, h)| *l == -h),
            SpaceKind::Circle { .. } => true,
            SpaceKind::Product(_) | SpaceKind::FinitePoints(_) => {
                let probe = space.sample_seeded(0, 64);
                probe.iter().all(|p| space.contains(&negate(p)))
            }
        };
        if !symmetric {
            return Err(Error::argument(format!("{space} is not symmetric about the origin")));
        }
        Ok(Self::new("negation", FiniteGroup::cyclic(2)?, space, |g, x| {
            if g == 0 { x.clone() } else { negate(x) }
        }))
    }

    /// `Z_2` flipping the sign of coordinate `axis`. Flipping coordinate 1 of
    /// a planar box reflects across the x-axis.
    pub fn reflection(space: MetricSpace, axis: usize) -> Result<Self> {
        if axis >= space.dim() {
            return Err(Error::argument(format!("axis {axis} out of range for {space}")));
        }
        if let SpaceKind::Box { lo, hi } = space.kind() {
            if lo[axis] != -hi[axis] {
                return Err(Error::argument(format!("{space} is not symmetric in axis {axis}")));
            }
        }
        Ok(Self::new(format!("reflection of axis {axis}"), FiniteGroup::cyclic(2)?, space, move |g, x| {
            let mut y = x.clone();
            if g == 1 {
                y.coords_mut()[axis] = -y.coords()[axis];
            }
            y
        }))
    }

    /// `Z_n` rotating the plane about the origin; element `k` turns by `k/n` of a full turn.
    pub fn rotation(space: MetricSpace, n: usize) -> Result<Self> {
        if space.dim() != 2 {
            return Err(Error::argument("rotations act on planar spaces"));
        }
        match space.kind() {
            SpaceKind::Circle { .. } => {}
            SpaceKind::Box { lo, hi } => {
                let centered = lo[0] == -hi[0] && lo[1] == -hi[1];
                let invariant = match n {
                    1 | 2 => centered,
                    4 => centered && hi[0] == hi[1],
                    _ => false,
                };
                if !invariant {
                    return Err(Error::argument(format!("{space} is not invariant under rotation by 1/{n} turn")));
                }
            }
            _ => return Err(Error::argument(format!("rotation of {space} is not supported"))),
        }
        let group = FiniteGroup::cyclic(n)?;
        Ok(Self::new(format!("rotation by 1/{n} turn"), group, space, move |g, x| {
            let (s, c) = rotation_sin_cos(g, n);
            let (u, v) = (x.coords()[0], x.coords()[1]);
            Point::from([c * u - s * v, s * u + c * v])
        }))
    }

    /// `Z_2` swapping coordinates `i` and `j`.
    pub fn coordinate_swap(space: MetricSpace, i: usize, j: usize) -> Result<Self> {
        if i >= space.dim() || j >= space.dim() || i == j {
            return Err(Error::argument(format!("cannot swap coordinates {i} and {j}")));
        }
        Ok(Self::new(format!("swap of coordinates {i},{j}"), FiniteGroup::cyclic(2)?, space, move |g, x| {
            let mut y = x.clone();
            if g == 1 {
                y.coords_mut().swap(i, j);
            }
            y
        }))
    }

    /// The full symmetric group on the coordinates, `(σ x)_{σ(i)} = x_i`.
    pub fn coordinate_permutation(space: MetricSpace) -> Result<Self> {
        let n = space.dim();
        let perms = symmetric_permutations(n);
        let group = FiniteGroup::symmetric(n)?;
        Ok(Self::new("coordinate permutation", group, space, move |g, x| {
            let sigma = &perms[g];
            let mut y = x.clone();
            for (i, &si) in sigma.iter().enumerate() {
                y.coords_mut()[si] = x.coords()[i];
            }
            y
        }))
    }
}

fn rotation_sin_cos(k: usize, n: usize) -> (f64, f64) {
    // Exact values on the quarter turns keep the square's corners in place.
    let k = k % n;
    if (4 * k).is_multiple_of(n) {
        match 4 * k / n {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        (TAU * k as f64 / n as f64).sin_cos()
    }
}

fn negate(p: &Point) -> Point {
    let mut y = p.clone();
    for c in y.coords_mut() {
        *c = -*c;
    }
    y
}

/// Dedupes points that lie within `tol` of an earlier one.
fn dedupe(space: &MetricSpace, points: Vec<Point>, tol: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for p in points {
        if !out.iter().any(|q| space.dist(q, &p) <= tol) {
            out.push(p);
        }
    }
    out
}

/// The orbit `G(x)`, with points closer than [`POINT_TOL`] merged.
pub fn orbit(action: &GroupAction, x: &Point) -> Result<Vec<Point>> {
    let images = action
        .group()
        .elements()
        .map(|g| action.act(g, x))
        .collect::<Result<Vec<_>>>()?;
    let pts = dedupe(action.space(), images, POINT_TOL);
    if !action.group().order().is_multiple_of(pts.len()) {
        return Err(Error::NumericalInstability(format!(
            "orbit of {x} has {} points, which does not divide |G| = {}",
            pts.len(),
            action.group().order()
        )));
    }
    Ok(pts)
}

/// Whether `d(h x, x) <= tol` for every `h` in `h_sub`.
pub fn is_fixed_by(action: &GroupAction, h_sub: &Subgroup, x: &Point, tol: f64) -> Result<bool> {
    for &h in h_sub.members() {
        let hx = action.act(h, x)?;
        if action.space().dist(&hx, x) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Elements moving `x` by at most `tol`.
pub fn stabilizer(action: &GroupAction, x: &Point, tol: f64) -> Result<Subgroup> {
    let mut members = Vec::new();
    for g in action.group().elements() {
        if action.space().dist(&action.act(g, x)?, x) <= tol {
            members.push(g);
        }
    }
    Subgroup::new(action.group(), members.iter().copied()).map_err(|_| {
        Error::NumericalInstability(format!(
            "elements fixing {x} within {tol:e} are not closed under composition; try a smaller tolerance"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::CircleMetric;
    use proptest::prelude::*;

    fn s3() -> FiniteGroup {
        FiniteGroup::symmetric(3).unwrap()
    }

    /// Brute force: every subset that contains 0 and is closed.
    fn subgroups_by_subsets(g: &FiniteGroup) -> Vec<Vec<usize>> {
        let m = g.order();
        (0u32..1 << m)
            .filter(|mask| mask & 1 == 1)
            .map(|mask| (0..m).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|set| set.iter().all(|&a| set.iter().all(|&b| set.contains(&g.compose(a, b)))))
            .collect()
    }

    #[test]
    fn make_group_examples() {
        let z2 = make_group(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(z2.order(), 2);
        let err = make_group(vec![vec![0, 1], vec![1, 1]]).unwrap_err();
        assert_eq!(err, Error::Group("no inverse for element 1".into()));
        let z4 = FiniteGroup::cyclic(4).unwrap();
        assert_eq!(z4.inverse(2), 2);
        assert_eq!(z4.inverse(1), 3);
    }

    #[test]
    fn make_group_names_violations() {
        assert!(matches!(make_group(vec![vec![0, 1]]), Err(Error::Group(m)) if m.contains("square")));
        assert!(matches!(make_group(vec![vec![1, 0], vec![0, 1]]), Err(Error::Group(m)) if m.contains("identity")));
        assert!(matches!(make_group(vec![vec![0, 2], vec![1, 0]]), Err(Error::Group(m)) if m.contains("closed")));
        // A loop of order 5 with inverses that is not associative.
        let loop5 = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(make_group(loop5), Err(Error::Group(m)) if m.contains("associative")));
    }

    #[test]
    fn builtin_groups_are_valid() {
        assert_eq!(FiniteGroup::dihedral(4).unwrap().order(), 8);
        assert_eq!(FiniteGroup::symmetric(4).unwrap().order(), 24);
        assert_eq!(FiniteGroup::klein_four().order(), 4);
        let z2 = FiniteGroup::cyclic(2).unwrap();
        assert_eq!(z2.direct_product(&z2).unwrap().direct_product(&z2).unwrap().order(), 8);
        assert_eq!(FiniteGroup::from_json("[[0,1],[1,0]]").unwrap(), z2);
        // Dihedral relation r s = s r^-1.
        let d5 = FiniteGroup::dihedral(5).unwrap();
        assert_eq!(d5.compose(1, 5), d5.compose(5, d5.inverse(1)));
    }

    #[test]
    fn subgroup_examples() {
        let sizes = |g: &FiniteGroup| enumerate_subgroups(g).unwrap().iter().map(Subgroup::order).collect::<Vec<_>>();
        assert_eq!(sizes(&FiniteGroup::cyclic(2).unwrap()), vec![1, 2]);
        let z4 = enumerate_subgroups(&FiniteGroup::cyclic(4).unwrap()).unwrap();
        assert_eq!(z4.iter().map(|h| h.members().to_vec()).collect::<Vec<_>>(), vec![vec![0], vec![0, 2], vec![0, 1, 2, 3]]);
        assert_eq!(sizes(&s3()), vec![1, 2, 2, 2, 3, 6]);
    }

    #[test]
    fn subgroup_enumeration_matches_brute_force() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let groups = vec![
            FiniteGroup::trivial(),
            z2.clone(),
            FiniteGroup::cyclic(6).unwrap(),
            FiniteGroup::cyclic(8).unwrap(),
            FiniteGroup::klein_four(),
            s3(),
            FiniteGroup::dihedral(4).unwrap(),
            z2.direct_product(&FiniteGroup::cyclic(4).unwrap()).unwrap(),
            z2.direct_product(&z2).unwrap().direct_product(&z2).unwrap(),
        ];
        for g in groups {
            let mut expected = subgroups_by_subsets(&g);
            let mut got: Vec<Vec<usize>> = enumerate_subgroups(&g).unwrap().iter().map(|h| h.members().to_vec()).collect();
            expected.sort();
            got.sort();
            assert_eq!(got, expected, "order {}", g.order());
            for h in enumerate_subgroups(&g).unwrap() {
                assert!(Subgroup::new(&g, h.members().iter().copied()).is_ok());
            }
        }
    }

    #[test]
    fn subgroup_enumeration_capacity() {
        let big = FiniteGroup::cyclic(65).unwrap();
        assert!(matches!(enumerate_subgroups(&big), Err(Error::Capacity(_))));
        assert_eq!(enumerate_subgroups(&FiniteGroup::cyclic(64).unwrap()).unwrap().len(), 7);
    }

    fn neg() -> GroupAction {
        GroupAction::negation(MetricSpace::interval(-1.0, 1.0).unwrap()).unwrap()
    }

    fn rot4() -> GroupAction {
        GroupAction::rotation(MetricSpace::circle(1.0, CircleMetric::Euclidean).unwrap(), 4).unwrap()
    }

    #[test]
    fn orbit_examples() {
        let o = orbit(&neg(), &0.5.into()).unwrap();
        assert_eq!(o, vec![Point::from(0.5), Point::from(-0.5)]);
        assert_eq!(orbit(&neg(), &0.0.into()).unwrap().len(), 1);
        assert_eq!(orbit(&rot4(), &[1.0, 0.0].into()).unwrap().len(), 4);
        assert!(matches!(orbit(&neg(), &2.0.into()), Err(Error::Domain { .. })));
    }

    #[test]
    fn fixed_and_stabilizer_examples() {
        let b = MetricSpace::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let refl = GroupAction::reflection(b, 1).unwrap();
        let whole = refl.group().whole();
        assert!(is_fixed_by(&refl, &whole, &[0.3, 0.0].into(), 1e-9).unwrap());
        assert!(!is_fixed_by(&refl, &whole, &[0.3, 0.2].into(), 1e-9).unwrap());
        let trivial = refl.group().trivial_subgroup();
        assert!(is_fixed_by(&refl, &trivial, &[0.3, 0.2].into(), 0.0).unwrap());

        assert_eq!(stabilizer(&neg(), &0.0.into(), 1e-9).unwrap().order(), 2);
        assert!(stabilizer(&neg(), &0.5.into(), 1e-9).unwrap().is_trivial());
        assert!(stabilizer(&rot4(), &[1.0, 0.0].into(), 1e-9).unwrap().is_trivial());
    }

    #[test]
    fn stabilizer_reports_tolerance_instability() {
        // Rotation by a quarter turn moves (1, 0) by √2 but a half turn by 2,
        // so a tolerance of 1.5 keeps {0, 1, 3} which is not closed.
        let err = stabilizer(&rot4(), &[1.0, 0.0].into(), 1.5).unwrap_err();
        assert!(matches!(err, Error::NumericalInstability(_)));
    }

    #[test]
    fn builtin_actions_obey_laws() {
        let square = MetricSpace::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let cube3 = MetricSpace::cube(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let actions = vec![
            neg(),
            rot4(),
            GroupAction::rotation(MetricSpace::circle(2.0, CircleMetric::Geodesic).unwrap(), 5).unwrap(),
            GroupAction::rotation(square.clone(), 4).unwrap(),
            GroupAction::reflection(square.clone(), 1).unwrap(),
            GroupAction::coordinate_swap(square.clone(), 0, 1).unwrap(),
            GroupAction::coordinate_permutation(cube3.clone()).unwrap(),
        ];
        for a in actions {
            let samples = a.space().sample_seeded(7, 50);
            let r = a.check_laws(&samples, 1e-9).unwrap();
            assert!(r.passed, "{}: {r:?}", a.label());
            assert!(r.isometry_defect <= 1e-12, "{}: {r:?}", a.label());
        }
    }

    #[test]
    fn non_actions_are_caught() {
        let i = MetricSpace::interval(-1.0, 1.0).unwrap();
        let shift = GroupAction::new("shift", FiniteGroup::cyclic(2).unwrap(), i.clone(), |g, x| {
            Point::from(x.coords()[0] + 0.1 * g as f64)
        });
        let r = shift.check_laws(&i.sample_seeded(1, 20), 1e-9).unwrap();
        assert!(!r.passed);
        assert!(GroupAction::negation(MetricSpace::interval(0.0, 1.0).unwrap()).is_err());
        assert!(GroupAction::rotation(MetricSpace::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(), 3).is_err());
    }

    #[test]
    fn restriction_keeps_the_map() {
        let sq = MetricSpace::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let r4 = GroupAction::rotation(sq, 4).unwrap();
        let half = r4.group().generated_by([2]).unwrap();
        let r2 = r4.restrict(&half).unwrap();
        assert_eq!(r2.group().order(), 2);
        let x = Point::from([0.3, 0.7]);
        assert_eq!(r2.act(1, &x).unwrap(), r4.act(2, &x).unwrap());
    }

    proptest! {
        #[test]
        fn orbit_stabilizer(seed in any::<u64>()) {
            let sq = MetricSpace::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
            let actions = vec![neg(), rot4(), GroupAction::rotation(sq.clone(), 4).unwrap(),
                               GroupAction::coordinate_swap(sq, 0, 1).unwrap()];
            for a in actions {
                let mut pts = a.space().sample_seeded(seed, 4);
                // Include points with nontrivial stabilizers.
                pts.push(a.space().project(&Point::new(vec![0.0; a.space().dim()]).unwrap()).unwrap());
                if a.space().dim() == 2 {
                    pts.push(a.space().project(&Point::from([0.5, 0.5])).unwrap());
                }
                for x in pts {
                    let o = orbit(&a, &x).unwrap();
                    let s = stabilizer(&a, &x, 1e-9).unwrap();
                    prop_assert_eq!(o.len() * s.order(), a.group().order());
                }
            }
        }
    }
}
