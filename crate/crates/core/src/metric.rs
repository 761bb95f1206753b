//! Finite metric spaces and the set-level distances built on them.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A finite metric space given by its full distance table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<Rational>,
}

impl fmt::Debug for FiniteMetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteMetricSpace").field("n", &self.n).finish()
    }
}

impl FiniteMetricSpace {
    /// Builds a space from rows of a square table. Only the shape is checked
    /// here; use [`validate_metric`] for the axioms.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Structural("empty distance table".into()));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Structural(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            dist.extend(row);
        }
        Ok(FiniteMetricSpace { n, dist })
    }

    pub fn from_fn(n: usize, mut d: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut dist = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                dist.push(d(i, j));
            }
        }
        FiniteMetricSpace { n, dist }
    }

    /// All off-diagonal distances equal to one.
    pub fn discrete(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { Rational::ZERO } else { Rational::ONE })
    }

    /// `n` equally spaced points on the unit-length circle:
    /// `d(i, j) = min(|i - j|, n - |i - j|) / n`.
    pub fn circle(n: usize) -> Self {
        Self::from_fn(n, |i, j| circle_distance(i, j, n))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> Rational {
        self.dist[i * self.n + j]
    }

    pub fn points(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn diameter(&self) -> Rational {
        self.dist.iter().copied().fold(Rational::ZERO, Rational::max)
    }

    /// Smallest positive distance.
    pub fn min_spacing(&self) -> Option<Rational> {
        self.dist.iter().copied().filter(|d| d.is_positive()).min()
    }

    /// The space with every point `i` renamed to `relabel[i]`, so that
    /// `relabel` becomes an isometry onto the result.
    pub fn relabeled(&self, relabel: &[usize]) -> Self {
        let mut inv = vec![0; self.n];
        for (i, &r) in relabel.iter().enumerate() {
            inv[r] = i;
        }
        Self::from_fn(self.n, |a, b| self.d(inv[a], inv[b]))
    }

    /// Product with the maximum metric; point `(a, b)` has index `a * other.len() + b`.
    pub fn product_max(&self, other: &FiniteMetricSpace) -> Self {
        let m = other.n;
        Self::from_fn(self.n * m, |i, j| {
            self.d(i / m, j / m).max(other.d(i % m, j % m))
        })
    }

    /// Parses the `metric n` text format: a header line followed by one
    /// `i j p/q` line per unordered pair. Blank lines and `#` comments are
    /// ignored. `first_line` offsets reported line numbers.
    pub fn parse_text(text: &str, first_line: usize) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + first_line, strip_comment(l).trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: first_line,
            message: "missing `metric n` header".into(),
        })?;
        let n: usize = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["metric", n] => n.parse().map_err(|_| Error::Parse {
                line: hline,
                message: format!("bad point count `{n}`"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    message: format!("expected `metric n`, found `{header}`"),
                })
            }
        };
        if n == 0 {
            return Err(Error::Parse { line: hline, message: "metric with zero points".into() });
        }
        let mut table: Vec<Option<Rational>> = vec![None; n * n];
        for i in 0..n {
            table[i * n + i] = Some(Rational::ZERO);
        }
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let bad = |message: String| Error::Parse { line, message };
            if parts.len() != 3 {
                return Err(bad(format!("expected `i j p/q`, found `{l}`")));
            }
            let i: usize = parts[0].parse().map_err(|_| bad(format!("bad index `{}`", parts[0])))?;
            let j: usize = parts[1].parse().map_err(|_| bad(format!("bad index `{}`", parts[1])))?;
            let v: Rational = parts[2].parse().map_err(|e| bad(format!("{e}")))?;
            if i >= n || j >= n {
                return Err(bad(format!("index out of range for {n} points")));
            }
            if i == j {
                return Err(bad("diagonal entries are implicit".into()));
            }
            if table[i * n + j].is_some() {
                return Err(bad(format!("pair ({i}, {j}) given twice")));
            }
            table[i * n + j] = Some(v);
            table[j * n + i] = Some(v);
        }
        if let Some(k) = table.iter().position(Option::is_none) {
            return Err(Error::Parse {
                line: hline,
                message: format!("missing distance for pair ({}, {})", k / n, k % n),
            });
        }
        Ok(FiniteMetricSpace { n, dist: table.into_iter().map(Option::unwrap).collect() })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("metric {}\n", self.n);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push_str(&format!("{i} {j} {}\n", self.d(i, j)));
            }
        }
        out
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

pub fn circle_distance(i: usize, j: usize, n: usize) -> Rational {
    let diff = i.abs_diff(j) % n;
    let steps = diff.min(n - diff);
    Rational::new(steps as i128, n as i128)
}

/// An ordered, duplicate-free set of point indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct PointSet(Vec<usize>);

impl PointSet {
    /// Sorts and deduplicates; every index must be `< n`.
    pub fn new(mut points: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&p) = points.iter().find(|&&p| p >= n) {
            return Err(Error::domain(format!("point {p} outside a carrier of {n} points")));
        }
        points.sort_unstable();
        points.dedup();
        Ok(PointSet(points))
    }

    pub(crate) fn from_sorted(points: Vec<usize>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        PointSet(points)
    }

    pub fn from_iter_unchecked(points: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = points.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        PointSet(v)
    }

    pub fn singleton(p: usize) -> Self {
        PointSet(vec![p])
    }

    pub fn full(n: usize) -> Self {
        PointSet((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.0.iter().all(|&p| other.contains(p))
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        PointSet(self.0.iter().copied().filter(|&p| other.contains(p)).collect())
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        PointSet(self.0.iter().copied().filter(|&p| !other.contains(p)).collect())
    }

    /// Image under a point map.
    pub fn image(&self, map: &[usize]) -> PointSet {
        PointSet::from_iter_unchecked(self.0.iter().map(|&p| map[p]))
    }
}

impl FromIterator<usize> for PointSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        PointSet::from_iter_unchecked(iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    ZeroDiagonal,
    Symmetry,
    Positivity,
    Triangle,
}

/// One failed metric axiom with the indices that witness it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Vec<usize>,
}

/// Checks all four metric axioms on `n` points for an arbitrary exact
/// distance function. Returns every violation found.
pub fn validate_with(n: usize, d: impl Fn(usize, usize) -> Rational) -> Vec<Violation> {
    let mut out = Vec::new();
    // Cache the table; the triangle check reads each entry n times.
    let table: Vec<Rational> = (0..n * n).map(|k| d(k / n, k % n)).collect();
    let at = |i: usize, j: usize| table[i * n + j];
    for i in 0..n {
        if !at(i, i).is_zero() {
            out.push(Violation { axiom: Axiom::ZeroDiagonal, witness: vec![i] });
        }
        for j in i + 1..n {
            if at(i, j) != at(j, i) {
                out.push(Violation { axiom: Axiom::Symmetry, witness: vec![i, j] });
            }
            if !at(i, j).is_positive() || !at(j, i).is_positive() {
                out.push(Violation { axiom: Axiom::Positivity, witness: vec![i, j] });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                if at(i, k) > at(i, j) + at(j, k) {
                    out.push(Violation { axiom: Axiom::Triangle, witness: vec![i, j, k] });
                }
            }
        }
    }
    out
}

pub fn validate_metric(space: &FiniteMetricSpace) -> Vec<Violation> {
    validate_with(space.len(), |i, j| space.d(i, j))
}

/// `B(x, r)` (strict) or `B[x, r]` (closed).
pub fn ball(space: &FiniteMetricSpace, x: usize, r: Rational, closed: bool) -> PointSet {
    PointSet::from_sorted(
        space
            .points()
            .filter(|&y| {
                let d = space.d(x, y);
                if closed {
                    d <= r
                } else {
                    d < r
                }
            })
            .collect(),
    )
}

fn check_nonempty(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        Err(Error::domain("set distances need nonempty operands"))
    } else {
        Ok(())
    }
}

pub(crate) fn point_to_set(space: &FiniteMetricSpace, x: usize, b: &PointSet) -> Rational {
    b.iter().map(|y| space.d(x, y)).min().expect("nonempty set")
}

/// Minimum pairwise distance between two nonempty sets.
pub fn set_distance(space: &FiniteMetricSpace, a: &PointSet, b: &PointSet) -> Result<Rational> {
    check_nonempty(a, b)?;
    Ok(a.iter().map(|x| point_to_set(space, x, b)).min().unwrap())
}

fn directed_hausdorff(space: &FiniteMetricSpace, a: &PointSet, b: &PointSet) -> Rational {
    a.iter().map(|x| point_to_set(space, x, b)).max().unwrap()
}

pub fn hausdorff_distance(space: &FiniteMetricSpace, a: &PointSet, b: &PointSet) -> Result<Rational> {
    check_nonempty(a, b)?;
    Ok(directed_hausdorff(space, a, b).max(directed_hausdorff(space, b, a)))
}

/// `sup |d_Y(i x, i x') - d_X(x, x')|` over all pairs.
pub fn distortion(map: &[usize], src: &FiniteMetricSpace, dst: &FiniteMetricSpace) -> Rational {
    assert_eq!(map.len(), src.len(), "map must be total on the source carrier");
    let mut worst = Rational::ZERO;
    for a in 0..map.len() {
        for b in a + 1..map.len() {
            worst = worst.max((dst.d(map[a], map[b]) - src.d(a, b)).abs());
        }
    }
    worst
}

/// `d_H(i(X), Y)`: how far the image is from covering the target.
pub fn image_density(map: &[usize], dst: &FiniteMetricSpace) -> Rational {
    let image = PointSet::from_iter_unchecked(map.iter().copied());
    hausdorff_distance(dst, &image, &PointSet::full(dst.len())).expect("nonempty image")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsometryClause {
    Density,
    Distortion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsometryCheck {
    pub holds: bool,
    pub density: Rational,
    pub distortion: Rational,
    /// First failing clause, if any.
    pub violated: Option<IsometryClause>,
}

/// `max(d_H(i(X), Y), dis(i)) < delta`.
pub fn is_delta_isometry(
    map: &[usize],
    src: &FiniteMetricSpace,
    dst: &FiniteMetricSpace,
    delta: Rational,
) -> IsometryCheck {
    let density = image_density(map, dst);
    let dist = distortion(map, src, dst);
    let violated = if density >= delta {
        Some(IsometryClause::Density)
    } else if dist >= delta {
        Some(IsometryClause::Distortion)
    } else {
        None
    };
    IsometryCheck { holds: violated.is_none(), density, distortion: dist, violated }
}
