//! Exact dyadic rationals in `[0, 1]` and monotone chains between them.
//!
//! A [`Dyadic`] is stored in canonical form `j / 2^n` with `j` odd (or
//! `n = 0`), so its level is also its height: the smallest `n` for which
//! the value lies on the grid `D_n = { j / 2^n : 0 <= j <= 2^n }`.
//!
//! [`chain_decompose`] connects `s < t` by two chains that meet in the
//! middle. Walking inward, every step has length `2^-h` where `h` is the
//! height of the point the step leaves, and heights strictly drop along each
//! chain. Bounds that are controlled per level can therefore be summed along
//! the chains as geometric series.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest level a [`Dyadic`] may carry; keeps `2^level` inside `u64`.
pub const MAX_LEVEL: u32 = 62;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Dyadic {
    num: u64,
    level: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, level: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, level: 0 };

    /// Builds `num / 2^level`, reducing to canonical form.
    pub fn new(num: u64, level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Capacity(format!(
                "dyadic level {level} exceeds {MAX_LEVEL}"
            )));
        }
        if num > 1u64 << level {
            return Err(Error::argument(format!(
                "{num}/2^{level} lies outside [0, 1]"
            )));
        }
        Ok(Self::canonical(num, level))
    }

    fn canonical(num: u64, level: u32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let shift = num.trailing_zeros().min(level);
        Dyadic {
            num: num >> shift,
            level: level - shift,
        }
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn level(self) -> u32 {
        self.level
    }

    /// Minimal `n` with `self` in `D_n`. Equal to the canonical level.
    pub fn height(self) -> u32 {
        self.level
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (1u64 << self.level) as f64
    }

    /// Numerator of `self` written over `2^level`, if `self` lies in `D_level`.
    pub fn numerator_at(self, level: u32) -> Option<u64> {
        if level < self.level || level > MAX_LEVEL {
            return None;
        }
        Some(self.num << (level - self.level))
    }

    /// Nearest point of `D_level` to `t`, with `t` clamped into `[0, 1]`.
    pub fn nearest(t: f64, level: u32) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::argument(format!("time {t} is not finite")));
        }
        if level > MAX_LEVEL {
            return Err(Error::Capacity(format!(
                "dyadic level {level} exceeds {MAX_LEVEL}"
            )));
        }
        let scale = (1u64 << level) as f64;
        let j = (t.clamp(0.0, 1.0) * scale).round() as u64;
        Self::new(j.min(1u64 << level), level)
    }

    /// `|self - other|` as a numerator over `2^level`, `level` being the larger height.
    pub fn abs_diff(self, other: Dyadic) -> (u64, u32) {
        let level = self.level.max(other.level);
        let a = self.num << (level - self.level);
        let b = other.num << (level - other.level);
        (a.abs_diff(b), level)
    }

    /// `|self - other|` as an `f64`; exact whenever both levels are at most 52.
    pub fn distance(self, other: Dyadic) -> f64 {
        let (num, level) = self.abs_diff(other);
        num as f64 / (1u64 << level) as f64
    }

    /// `self + 2^-height(self)`, the next point of `D_height` above `self`.
    fn step_up(self) -> Dyadic {
        Self::canonical(self.num + 1, self.level)
    }

    /// `self - 2^-height(self)`.
    fn step_down(self) -> Dyadic {
        Self::canonical(self.num - 1, self.level)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let level = self.level.max(other.level);
        let a = self.num << (level - self.level);
        let b = other.num << (level - other.level);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.level)
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `j/2^n`, `a/b` with `b` a power of two, or a bare `0` / `1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("`{s}` is not a dyadic rational in [0, 1]"));
        let s = s.trim();
        let Some((num, den)) = s.split_once('/') else {
            let num: u64 = s.parse().map_err(|_| bad())?;
            return Dyadic::new(num, 0).map_err(|_| bad());
        };
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den = den.trim();
        let level = if let Some(exp) = den.strip_prefix("2^") {
            exp.parse::<u32>().map_err(|_| bad())?
        } else {
            let den: u64 = den.parse().map_err(|_| bad())?;
            if !den.is_power_of_two() {
                return Err(bad());
            }
            den.trailing_zeros()
        };
        Dyadic::new(num, level)
    }
}

impl TryFrom<String> for Dyadic {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Dyadic> for String {
    fn from(d: Dyadic) -> String {
        d.to_string()
    }
}

/// Height of `x`.
pub fn height(x: Dyadic) -> u32 {
    x.height()
}

/// The integer `i` with `|s - t| = i / 2^max(h(s), h(t))`.
pub fn rho(s: Dyadic, t: Dyadic) -> u64 {
    s.abs_diff(t).0
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDecomposition {
    pub s_chain: Vec<Dyadic>,
    pub t_chain: Vec<Dyadic>,
}

/// Connects `s < t` by an ascending chain from `s` and a descending chain
/// from `t` that end at the same point.
///
/// The side with the larger height moves one step of its own grid; ties move
/// the `s` side. The pair `(0, 1)`, where both heights are zero, is handled
/// by the fixed convention `s_chain = [0]`, `t_chain = [1, 0]`.
pub fn chain_decompose(s: Dyadic, t: Dyadic) -> Result<ChainDecomposition> {
    if s >= t {
        return Err(Error::argument(format!(
            "chain decomposition needs s < t, got s = {s}, t = {t}"
        )));
    }
    if s == Dyadic::ZERO && t == Dyadic::ONE {
        return Ok(ChainDecomposition {
            s_chain: vec![Dyadic::ZERO],
            t_chain: vec![Dyadic::ONE, Dyadic::ZERO],
        });
    }

    let mut s_chain = vec![s];
    let mut t_chain = vec![t];
    let (mut lo, mut hi) = (s, t);
    while lo != hi {
        let before = rho(lo, hi);
        if lo.height() >= hi.height() {
            lo = lo.step_up();
            s_chain.push(lo);
        } else {
            hi = hi.step_down();
            t_chain.push(hi);
        }
        debug_assert!(lo <= hi, "chains crossed");
        debug_assert!(rho(lo, hi) < before || lo == hi, "rho did not decrease");
    }
    Ok(ChainDecomposition { s_chain, t_chain })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    S,
    T,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::S => f.write_str("s"),
            Side::T => f.write_str("t"),
        }
    }
}

/// One violated clause of a chain decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ChainViolation {
    EmptyChain { side: Side },
    WrongEndpoint { side: Side, expected: Dyadic, found: Dyadic },
    ChainsDoNotMeet { s_end: Dyadic, t_end: Dyadic },
    NotMonotone { side: Side, index: usize },
    HeightNotDecreasing { side: Side, index: usize, before: u32, after: u32 },
    OffGrid { side: Side, index: usize },
    WrongGap { side: Side, index: usize },
}

impl fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ChainViolation::*;
        match self {
            EmptyChain { side } => write!(f, "{side}-chain is empty"),
            WrongEndpoint { side, expected, found } => {
                write!(f, "{side}-chain starts at {found}, expected {expected}")
            }
            ChainsDoNotMeet { s_end, t_end } => {
                write!(f, "chains end at {s_end} and {t_end}")
            }
            NotMonotone { side, index } => {
                write!(f, "{side}-chain is not monotone at step {index}")
            }
            HeightNotDecreasing { side, index, before, after } => write!(
                f,
                "{side}-chain height does not drop at step {index} ({before} -> {after})"
            ),
            OffGrid { side, index } => write!(
                f,
                "{side}-chain step {index} leaves the grid of its starting height"
            ),
            WrongGap { side, index } => write!(
                f,
                "{side}-chain step {index} is not one grid unit of its starting height"
            ),
        }
    }
}

/// Checks every clause of the decomposition contract and returns all violations.
///
/// `s == t` with both chains equal to `[s]` is the degenerate valid case.
pub fn validate_chain(s: Dyadic, t: Dyadic, c: &ChainDecomposition) -> Vec<ChainViolation> {
    let mut out = Vec::new();
    let (Some(&s_first), Some(&t_first)) = (c.s_chain.first(), c.t_chain.first()) else {
        if c.s_chain.is_empty() {
            out.push(ChainViolation::EmptyChain { side: Side::S });
        }
        if c.t_chain.is_empty() {
            out.push(ChainViolation::EmptyChain { side: Side::T });
        }
        return out;
    };
    if s_first != s {
        out.push(ChainViolation::WrongEndpoint { side: Side::S, expected: s, found: s_first });
    }
    if t_first != t {
        out.push(ChainViolation::WrongEndpoint { side: Side::T, expected: t, found: t_first });
    }
    let s_end = *c.s_chain.last().unwrap();
    let t_end = *c.t_chain.last().unwrap();
    if s_end != t_end {
        out.push(ChainViolation::ChainsDoNotMeet { s_end, t_end });
    }

    // The (0, 1) convention is the one place where a step leaves height 0.
    let unit_convention = s == Dyadic::ZERO
        && t == Dyadic::ONE
        && c.s_chain == [Dyadic::ZERO]
        && c.t_chain == [Dyadic::ONE, Dyadic::ZERO];

    for (side, chain) in [(Side::S, &c.s_chain), (Side::T, &c.t_chain)] {
        for (index, pair) in chain.windows(2).enumerate() {
            let (from, to) = (pair[0], pair[1]);
            let monotone = match side {
                Side::S => from <= to,
                Side::T => from >= to,
            };
            if !monotone {
                out.push(ChainViolation::NotMonotone { side, index });
            }
            if from.height() <= to.height() && !unit_convention {
                out.push(ChainViolation::HeightNotDecreasing {
                    side,
                    index,
                    before: from.height(),
                    after: to.height(),
                });
            }
            let h = from.height();
            match to.numerator_at(h) {
                None => out.push(ChainViolation::OffGrid { side, index }),
                Some(to_num) => {
                    if from.num.abs_diff(to_num) != 1 {
                        out.push(ChainViolation::WrongGap { side, index });
                    }
                }
            }
        }
    }
    out
}

/// Sum of the step lengths of both chains, as a numerator over `2^MAX_LEVEL`.
pub fn total_gap(c: &ChainDecomposition) -> u128 {
    let at_max = |d: Dyadic| (d.num as u128) << (MAX_LEVEL - d.level);
    c.s_chain
        .windows(2)
        .chain(c.t_chain.windows(2))
        .map(|w| at_max(w[0]).abs_diff(at_max(w[1])))
        .sum()
}

/// Every point of `D_level`, in increasing order.
pub fn grid(level: u32) -> Result<Vec<Dyadic>> {
    if level > MAX_LEVEL || level > 30 {
        return Err(Error::Capacity(format!("grid of level {level} is too large")));
    }
    (0..=(1u64 << level)).map(|j| Dyadic::new(j, level)).collect()
}
