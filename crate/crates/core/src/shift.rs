//! The full shift on eventually periodic bi-infinite sequences.
//!
//! An [`EpPoint`] is a sequence that repeats a word to the left of some
//! position, reads a finite center word, then repeats another word to the
//! right. The set of such points is shift-invariant and dense, and every
//! distance, orbit and separation supremum on it is computable exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::systems::{Closure, DynamicalSystem};

/// Maximum distance from the origin at which descriptions may place
/// structure; keeps every distance inside the exact `2^-m` range.
pub const MAX_EXTENT: i64 = 48;

/// An eventually periodic point in canonical form.
///
/// Positions `n < offset` read `left[(n - offset) mod |left|]`, positions
/// `offset <= n < offset + |center|` read the center, and later positions
/// read `right[(n - end) mod |right|]`. Canonical form uses primitive period
/// words, the latest possible start of the center and the shortest center;
/// a periodic point is stored with empty center, `offset = 0` and
/// `left == right` phased at position 0.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EpPoint {
    left: Vec<u8>,
    center: Vec<u8>,
    right: Vec<u8>,
    offset: i64,
}

fn primitive(word: &[u8]) -> Vec<u8> {
    let n = word.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| word[i] == word[i - p]) {
            return word[..p].to_vec();
        }
    }
    word.to_vec()
}

impl EpPoint {
    /// Builds and canonicalizes a point from raw parts.
    pub fn new(left: Vec<u8>, center: Vec<u8>, right: Vec<u8>, offset: i64) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::construction("period words must be nonempty"));
        }
        let end = offset + center.len() as i64;
        if offset.abs() > MAX_EXTENT || end.abs() > MAX_EXTENT || left.len() > 32 || right.len() > 32 {
            return Err(Error::construction(format!(
                "point description exceeds the exact range (|position| <= {MAX_EXTENT}, periods <= 32)"
            )));
        }
        let raw = EpPoint { left: primitive(&left), center, right: primitive(&right), offset };
        Ok(raw.canonical())
    }

    /// The periodic point repeating `word` with `word[0]` at position 0.
    pub fn periodic(word: &[u8]) -> Self {
        EpPoint::new(word.to_vec(), vec![], word.to_vec(), 0).expect("nonempty word")
    }

    /// `a^inf` left of 0, `center` from position 0, `b^inf` after it.
    pub fn defect(left: &[u8], center: &[u8], right: &[u8]) -> Self {
        EpPoint::new(left.to_vec(), center.to_vec(), right.to_vec(), 0).expect("nonempty words")
    }

    fn end(&self) -> i64 {
        self.offset + self.center.len() as i64
    }

    fn left_pattern(&self, n: i64) -> u8 {
        self.left[(n - self.offset).rem_euclid(self.left.len() as i64) as usize]
    }

    fn right_pattern(&self, n: i64) -> u8 {
        self.right[(n - self.end()).rem_euclid(self.right.len() as i64) as usize]
    }

    /// Symbol at position `n`.
    pub fn symbol(&self, n: i64) -> u8 {
        if n < self.offset {
            self.left_pattern(n)
        } else if n < self.end() {
            self.center[(n - self.offset) as usize]
        } else {
            self.right_pattern(n)
        }
    }

    fn canonical(self) -> Self {
        let pl = self.left.len() as i64;
        let pr = self.right.len() as i64;
        let horizon = self.end() + pl.lcm(&pr);
        let first_dev = (self.offset..horizon).find(|&n| self.symbol(n) != self.left_pattern(n));
        match first_dev {
            None => {
                let word: Vec<u8> = (0..pl).map(|k| self.left_pattern(k)).collect();
                EpPoint { left: word.clone(), center: vec![], right: word, offset: 0 }
            }
            Some(b) => {
                let mut e = self.end().max(b);
                while e > b && self.symbol(e - 1) == self.right_pattern(e - 1) {
                    e -= 1;
                }
                EpPoint {
                    left: (0..pl).map(|k| self.left_pattern(b + k)).collect(),
                    center: (b..e).map(|n| self.symbol(n)).collect(),
                    right: (0..pr).map(|k| self.right_pattern(e + k)).collect(),
                    offset: b,
                }
            }
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.center.is_empty() && self.offset == 0 && self.left == self.right
    }

    /// Least period when periodic.
    pub fn period(&self) -> Option<usize> {
        self.is_periodic().then(|| self.left.len())
    }

    pub fn left_word(&self) -> &[u8] {
        &self.left
    }

    pub fn center_word(&self) -> &[u8] {
        &self.center
    }

    pub fn right_word(&self) -> &[u8] {
        &self.right
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Positions `[start, end)` outside which the point is periodic on each side.
    pub fn extent(&self) -> (i64, i64) {
        if self.is_periodic() {
            (0, 0)
        } else {
            (self.offset, self.end())
        }
    }

    pub fn max_symbol(&self) -> u8 {
        self.left.iter().chain(&self.center).chain(&self.right).copied().max().unwrap_or(0)
    }

    /// `sigma^k`: `(sigma^k x)_n = x_{n+k}`.
    pub fn shifted(&self, k: i64) -> EpPoint {
        if self.is_periodic() {
            let p = self.left.len() as i64;
            let word: Vec<u8> = (0..p).map(|i| self.left[(i + k).rem_euclid(p) as usize]).collect();
            return EpPoint { left: word.clone(), center: vec![], right: word, offset: 0 };
        }
        EpPoint {
            left: self.left.clone(),
            center: self.center.clone(),
            right: self.right.clone(),
            offset: self.offset - k,
        }
        .canonical()
    }

    /// The periodic limit of `sigma^n x` as `n -> -inf`.
    pub fn left_limit(&self) -> EpPoint {
        let p = self.left.len() as i64;
        EpPoint::periodic(&(0..p).map(|k| self.left_pattern(k)).collect::<Vec<_>>())
    }

    /// The periodic limit of `sigma^n x` as `n -> +inf`.
    pub fn right_limit(&self) -> EpPoint {
        let p = self.right.len() as i64;
        EpPoint::periodic(&(0..p).map(|k| self.right_pattern(k)).collect::<Vec<_>>())
    }

    /// Every canonical point whose period words have length `<= max_period`,
    /// center length `<= max_center`, placed at the given offsets.
    pub fn enumerate(alphabet: u8, max_period: usize, max_center: usize, offsets: &[i64]) -> Vec<EpPoint> {
        let words = |max_len: usize| -> Vec<Vec<u8>> {
            let mut out = vec![vec![]];
            let mut all = Vec::new();
            for _ in 0..max_len {
                let mut next = Vec::new();
                for w in &out {
                    for s in 0..alphabet {
                        let mut v = w.clone();
                        v.push(s);
                        next.push(v);
                    }
                }
                all.extend(next.iter().cloned());
                out = next;
            }
            all
        };
        let periods = words(max_period);
        let mut centers = vec![vec![]];
        centers.extend(words(max_center));
        let mut set = BTreeSet::new();
        for l in &periods {
            for r in &periods {
                for c in &centers {
                    for &o in offsets {
                        set.insert(EpPoint::new(l.clone(), c.clone(), r.clone(), o).unwrap());
                    }
                }
            }
        }
        set.into_iter().collect()
    }
}

fn word_str(w: &[u8]) -> String {
    w.iter().map(|s| char::from_digit(*s as u32, 36).unwrap()).collect()
}

impl fmt::Display for EpPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}~{}~{}@{}",
            word_str(&self.left),
            word_str(&self.center),
            word_str(&self.right),
            self.offset
        )
    }
}

impl fmt::Debug for EpPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for EpPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for EpPoint {
    type Err = Error;

    /// `left~center~right@offset`; `@offset` defaults to 0.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse { line: 0, message: format!("bad sequence `{s}`: {m}") };
        let (body, offset) = match s.trim().split_once('@') {
            Some((b, o)) => (b, o.trim().parse::<i64>().map_err(|_| bad("offset is not an integer"))?),
            None => (s.trim(), 0),
        };
        let parts: Vec<&str> = body.split('~').collect();
        if parts.len() != 3 {
            return Err(bad("expected three `~`-separated words"));
        }
        let word = |w: &str| -> Result<Vec<u8>> {
            w.chars()
                .map(|c| c.to_digit(36).map(|d| d as u8).ok_or_else(|| bad("symbols must be digits")))
                .collect()
        };
        EpPoint::new(word(parts[0])?, word(parts[1])?, word(parts[2])?, offset)
            .map_err(|e| bad(&e.to_string()))
    }
}

/// `d(x, y) = 2^-m` with `m = min{|n| : x_n != y_n}`; zero when equal.
pub fn shift_metric(x: &EpPoint, y: &EpPoint) -> Rational {
    match first_disagreement(x, y) {
        None => Rational::ZERO,
        Some(m) => Rational::pow2_neg(m as u32),
    }
}

/// Smallest `|n|` with `x_n != y_n`.
pub fn first_disagreement(x: &EpPoint, y: &EpPoint) -> Option<u64> {
    if x == y {
        return None;
    }
    let (xs, xe) = x.extent();
    let (ys, ye) = y.extent();
    let lp = (x.left.len() as i64).lcm(&(y.left.len() as i64));
    let rp = (x.right.len() as i64).lcm(&(y.right.len() as i64));
    let bound = (xs.min(ys) - lp).abs().max((xe.max(ye) + rp).abs());
    for m in 0..=bound {
        if x.symbol(m) != y.symbol(m) || x.symbol(-m) != y.symbol(-m) {
            return Some(m as u64);
        }
    }
    unreachable!("distinct canonical points disagree inside the periodic bound")
}

/// The full shift on `alphabet` symbols with a declared probe set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftSystem {
    alphabet: u8,
    probes: Vec<EpPoint>,
}

impl ShiftSystem {
    pub fn new(alphabet: u8, probes: Vec<EpPoint>) -> Result<Self> {
        if !(2..=10).contains(&alphabet) {
            return Err(Error::construction("alphabet size must be between 2 and 10"));
        }
        if let Some(p) = probes.iter().find(|p| p.max_symbol() >= alphabet) {
            return Err(Error::construction(format!("probe {p} uses a symbol outside the alphabet")));
        }
        Ok(ShiftSystem { alphabet, probes })
    }

    /// Default probes: periodic points of period <= 3 and single-defect
    /// points `a^inf c b^inf` with constant tails at offset 0.
    pub fn with_default_probes(alphabet: u8) -> Result<Self> {
        let mut set: BTreeSet<EpPoint> = EpPoint::enumerate(alphabet, 1, 1, &[0]).into_iter().collect();
        for p in EpPoint::enumerate(alphabet, 3, 0, &[0]) {
            if p.is_periodic() {
                set.insert(p);
            }
        }
        Self::new(alphabet, set.into_iter().collect())
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn probes(&self) -> &[EpPoint] {
        &self.probes
    }

    /// `B(x, r)` (or `B[x, r]`) as a cylinder around `x`.
    pub fn ball_set(&self, x: &EpPoint, r: Rational, closed: bool) -> ShiftSet {
        ball_cylinder(x, r, closed)
    }
}

/// A measurable subset of the shift carrier described exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftSet {
    Empty,
    Point { point: EpPoint },
    /// All sequences with the given symbols at the given positions; no
    /// constraints means the whole space.
    Cylinder { fixed: BTreeMap<i64, u8> },
}

impl ShiftSet {
    pub fn contains(&self, y: &EpPoint) -> bool {
        match self {
            ShiftSet::Empty => false,
            ShiftSet::Point { point } => point == y,
            ShiftSet::Cylinder { fixed } => fixed.iter().all(|(&n, &s)| y.symbol(n) == s),
        }
    }

    pub fn intersect(&self, other: &ShiftSet) -> ShiftSet {
        match (self, other) {
            (ShiftSet::Empty, _) | (_, ShiftSet::Empty) => ShiftSet::Empty,
            (ShiftSet::Point { point }, s) | (s, ShiftSet::Point { point }) => {
                if s.contains(point) {
                    ShiftSet::Point { point: point.clone() }
                } else {
                    ShiftSet::Empty
                }
            }
            (ShiftSet::Cylinder { fixed: a }, ShiftSet::Cylinder { fixed: b }) => {
                let mut merged = a.clone();
                for (&n, &s) in b {
                    if let Some(&t) = merged.get(&n) {
                        if t != s {
                            return ShiftSet::Empty;
                        }
                    }
                    merged.insert(n, s);
                }
                ShiftSet::Cylinder { fixed: merged }
            }
        }
    }
}

/// Smallest `m >= 0` with `2^-m < r` (strict) or `2^-m <= r` (closed).
fn agreement_radius(r: Rational, closed: bool) -> Option<u32> {
    (0..126).find(|&m| {
        let v = Rational::pow2_neg(m);
        if closed {
            v <= r
        } else {
            v < r
        }
    })
}

pub fn ball_cylinder(x: &EpPoint, r: Rational, closed: bool) -> ShiftSet {
    if !r.is_positive() {
        return if closed { ShiftSet::Point { point: x.clone() } } else { ShiftSet::Empty };
    }
    match agreement_radius(r, closed) {
        None => ShiftSet::Point { point: x.clone() },
        Some(m0) => {
            // d(x, y) = 2^-m with m the first disagreement; y is inside iff m >= m0.
            let reach = m0 as i64 - 1;
            let fixed = (-reach..=reach).map(|n| (n, x.symbol(n))).collect();
            ShiftSet::Cylinder { fixed }
        }
    }
}

impl DynamicalSystem for ShiftSystem {
    type Point = EpPoint;

    fn forward(&self, x: &EpPoint) -> EpPoint {
        x.shifted(1)
    }

    fn backward(&self, x: &EpPoint) -> EpPoint {
        x.shifted(-1)
    }

    fn distance(&self, a: &EpPoint, b: &EpPoint) -> Rational {
        shift_metric(a, b)
    }

    fn separation_window(&self, x: &EpPoint, y: &EpPoint) -> usize {
        // Some disagreement (if any) lies in [start - lp, end + rp); shifting it
        // to position 0 realizes distance 1, the diameter.
        let (xs, xe) = x.extent();
        let (ys, ye) = y.extent();
        let lp = (x.left.len() as i64).lcm(&(y.left.len() as i64));
        let rp = (x.right.len() as i64).lcm(&(y.right.len() as i64));
        (xs.min(ys) - lp).abs().max((xe.max(ye) + rp).abs()) as usize
    }

    fn joint_period(&self, x: &EpPoint, y: &EpPoint) -> Option<usize> {
        Some(x.period()?.lcm(&y.period()?))
    }

    fn period(&self, x: &EpPoint) -> Option<usize> {
        x.period()
    }

    fn probe_points(&self) -> Vec<EpPoint> {
        self.probes.clone()
    }

    fn is_finite_carrier(&self) -> bool {
        false
    }

    fn orbit_closure(&self, x: &EpPoint) -> Closure<EpPoint> {
        if let Some(p) = x.period() {
            let mut points: Vec<EpPoint> = (0..p as i64).map(|k| x.shifted(k)).collect();
            points.sort();
            return Closure { points, exact: true };
        }
        let (s, e) = x.extent();
        let reach = s.abs().max(e.abs()) + (x.left.len() + x.right.len()) as i64;
        let mut set: BTreeSet<EpPoint> = (-reach..=reach).map(|k| x.shifted(k)).collect();
        for limit in [x.left_limit(), x.right_limit()] {
            let p = limit.period().unwrap() as i64;
            set.extend((0..p).map(|k| limit.shifted(k)));
        }
        Closure { points: set.into_iter().collect(), exact: false }
    }

    fn same_carrier(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
    }

    fn contains(&self, x: &EpPoint) -> bool {
        x.max_symbol() < self.alphabet
    }

    fn label(&self, x: &EpPoint) -> String {
        x.to_string()
    }
}

/// Builds a tracer for a finite window `x_{-N}..x_N` of a pseudo-orbit by
/// reading the center symbol of each entry and continuing with the two end
/// entries beyond the window.
pub fn splice_trace_shift(window: &[EpPoint], m: u32) -> Result<EpPoint> {
    if window.is_empty() || window.len() % 2 == 0 {
        return Err(Error::precondition("window must have odd length 2N+1"));
    }
    let delta = Rational::pow2_neg(m);
    for (k, pair) in window.windows(2).enumerate() {
        let gap = shift_metric(&pair[0].shifted(1), &pair[1]);
        if gap >= delta {
            return Err(Error::precondition(format!(
                "step {k} has gap {gap}, not below 2^-{m}"
            )));
        }
    }
    let n = (window.len() / 2) as i64;
    let first = &window[0];
    let last = &window[window.len() - 1];
    // z_j = (x_{-N})_{j+N} for j < -N, (x_j)_0 inside, (x_N)_{j-N} for j >= N.
    let left_src = first.shifted(-n);
    let right_src = last.shifted(-n);
    let (ls, _) = left_src.extent();
    let (_, re) = right_src.extent();
    let start = ls.min(-n) - left_src.left.len() as i64;
    let end = re.max(n + 1) + right_src.right.len() as i64;
    let symbol = |j: i64| -> u8 {
        if j < -n {
            left_src.symbol(j)
        } else if j >= n {
            right_src.symbol(j)
        } else {
            window[(j + n) as usize].symbol(0)
        }
    };
    let left_word: Vec<u8> =
        (0..left_src.left.len() as i64).map(|k| left_src.left_pattern(start + k)).collect();
    let right_word: Vec<u8> =
        (0..right_src.right.len() as i64).map(|k| right_src.right_pattern(end + k)).collect();
    let center: Vec<u8> = (start..end).map(symbol).collect();
    EpPoint::new(left_word, center, right_word, start)
}
