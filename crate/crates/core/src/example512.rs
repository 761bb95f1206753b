//! A shift-with-isolated-cycles space: the full 2-shift `Y` together with a
//! truncated family of isolated periodic points `q(i, k, j)` shadowing the
//! orbit of a periodic point `p`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::shift::{shift_metric, EpPoint, ShiftSystem};
use crate::systems::{Closure, DynamicalSystem};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum E512Point {
    Y(EpPoint),
    /// `q(i, k, j)` with `i in 1..=3`, `1 <= k <= K`, `0 <= j < t`.
    E { i: u8, k: u32, j: u32 },
}

impl E512Point {
    pub fn q(i: u8, k: u32, j: u32) -> Self {
        E512Point::E { i, k, j }
    }

    pub fn y(x: EpPoint) -> Self {
        E512Point::Y(x)
    }
}

impl fmt::Display for E512Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            E512Point::Y(x) => write!(f, "{x}"),
            E512Point::E { i, k, j } => write!(f, "q({i},{k},{j})"),
        }
    }
}

impl fmt::Debug for E512Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for E512Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for E512Point {
    type Err = Error;

    /// `q(i,k,j)` or an eventually periodic sequence.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("q(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            let bad = || Error::Parse { line: 0, message: format!("bad point `{s}`") };
            if parts.len() != 3 {
                return Err(bad());
            }
            return Ok(E512Point::E {
                i: parts[0].parse().map_err(|_| bad())?,
                k: parts[1].parse().map_err(|_| bad())?,
                j: parts[2].parse().map_err(|_| bad())?,
            });
        }
        Ok(E512Point::Y(s.parse()?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example512System {
    k_max: u32,
    t: u32,
    p: EpPoint,
    /// `g^j(p)` for `j < t`.
    p_orbit: Vec<EpPoint>,
    y_probes: Vec<EpPoint>,
}

pub const MAX_K: u32 = 64;

/// Builds the system with `E` truncated at `k <= k_max`.
pub fn build_example512(k_max: u32, t: u32, p: EpPoint) -> Result<Example512System> {
    if t < 2 {
        return Err(Error::construction("the period t of p must be at least 2"));
    }
    if k_max == 0 || k_max > MAX_K {
        return Err(Error::construction(format!("K must lie in 1..={MAX_K}")));
    }
    if p.max_symbol() > 1 {
        return Err(Error::construction("p must be a binary sequence"));
    }
    match p.period() {
        Some(per) if per == t as usize => {}
        Some(per) => {
            return Err(Error::construction(format!("p has prime period {per}, not {t}")));
        }
        None => return Err(Error::construction("p is not periodic")),
    }
    let p_orbit = (0..t as i64).map(|j| p.shifted(j)).collect();
    let mut probes: BTreeSet<EpPoint> = EpPoint::enumerate(2, 2, 1, &[0]).into_iter().collect();
    probes.extend(EpPoint::enumerate(2, 3, 0, &[0]).into_iter().filter(EpPoint::is_periodic));
    let sys = Example512System { k_max, t, p, p_orbit, y_probes: probes.into_iter().collect() };
    Ok(sys)
}

impl Example512System {
    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn p(&self) -> &EpPoint {
        &self.p
    }

    pub fn p_orbit(&self) -> &[EpPoint] {
        &self.p_orbit
    }

    pub fn y_probes(&self) -> &[EpPoint] {
        &self.y_probes
    }

    pub fn with_y_probes(mut self, probes: Vec<EpPoint>) -> Result<Self> {
        if let Some(x) = probes.iter().find(|x| x.max_symbol() > 1) {
            return Err(Error::construction(format!("probe {x} is not binary")));
        }
        self.y_probes = probes;
        Ok(self)
    }

    pub fn e_points(&self) -> Vec<E512Point> {
        let mut out = Vec::new();
        for i in 1..=3 {
            for k in 1..=self.k_max {
                for j in 0..self.t {
                    out.push(E512Point::q(i, k, j));
                }
            }
        }
        out
    }

    /// The underlying shift `(Y, g)`.
    pub fn base(&self) -> ShiftSystem {
        ShiftSystem::new(2, self.y_probes.clone()).expect("binary probes")
    }

    fn check(&self, x: &E512Point) -> bool {
        match x {
            E512Point::Y(y) => y.max_symbol() <= 1,
            E512Point::E { i, k, j } => (1..=3).contains(i) && (1..=self.k_max).contains(k) && *j < self.t,
        }
    }

    /// A constant `d` with every point of `B(x, d)` expansive for `f` on its
    /// orbit closure: isolation radius for `q` points, otherwise half the
    /// smaller of the distance to the cycle of `p` (excluding `x` itself) and
    /// the expansivity constant `c` of the shift.
    pub fn minimal_expansivity_bound(&self, x: &E512Point, c: Rational) -> Rational {
        let half = Rational::new(1, 2);
        match x {
            E512Point::E { .. } => Rational::new(1, self.k_max as i128 + 1),
            E512Point::Y(y) => {
                let m = self
                    .p_orbit
                    .iter()
                    .filter(|g| *g != y)
                    .map(|g| shift_metric(g, y))
                    .fold(c, Rational::min);
                m * half
            }
        }
    }
}

impl DynamicalSystem for Example512System {
    type Point = E512Point;

    fn forward(&self, x: &E512Point) -> E512Point {
        match x {
            E512Point::Y(y) => E512Point::Y(y.shifted(1)),
            E512Point::E { i, k, j } => E512Point::E { i: *i, k: *k, j: (j + 1) % self.t },
        }
    }

    fn backward(&self, x: &E512Point) -> E512Point {
        match x {
            E512Point::Y(y) => E512Point::Y(y.shifted(-1)),
            E512Point::E { i, k, j } => E512Point::E { i: *i, k: *k, j: (j + self.t - 1) % self.t },
        }
    }

    fn distance(&self, a: &E512Point, b: &E512Point) -> Rational {
        use E512Point::*;
        if a == b {
            return Rational::ZERO;
        }
        let inv = |k: u32| Rational::new(1, k as i128);
        match (a, b) {
            (Y(x), Y(y)) => shift_metric(x, y),
            (E { k, j, .. }, Y(y)) | (Y(y), E { k, j, .. }) => inv(*k) + shift_metric(&self.p_orbit[*j as usize], y),
            (E { k, j, .. }, E { k: m, j: r, .. }) => {
                if k == m && j == r {
                    inv(*k)
                } else {
                    // Also used when the first indices differ, a pairing the
                    // six-case formula leaves open.
                    inv(*k)
                        + inv(*m)
                        + shift_metric(&self.p_orbit[*j as usize], &self.p_orbit[*r as usize])
                }
            }
        }
    }

    fn separation_window(&self, a: &E512Point, b: &E512Point) -> usize {
        use E512Point::*;
        let base = self.base();
        match (a, b) {
            (Y(x), Y(y)) => base.separation_window(x, y),
            (E { j, .. }, Y(y)) | (Y(y), E { j, .. }) => {
                base.separation_window(&self.p_orbit[*j as usize], y).max(self.t as usize)
            }
            (E { .. }, E { .. }) => self.t as usize - 1,
        }
    }

    fn joint_period(&self, a: &E512Point, b: &E512Point) -> Option<usize> {
        Some(self.period(a)?.lcm(&self.period(b)?))
    }

    fn period(&self, x: &E512Point) -> Option<usize> {
        match x {
            E512Point::Y(y) => y.period(),
            E512Point::E { .. } => Some(self.t as usize),
        }
    }

    fn probe_points(&self) -> Vec<E512Point> {
        let mut out: Vec<E512Point> = self.y_probes.iter().cloned().map(E512Point::Y).collect();
        out.extend(self.e_points());
        out
    }

    fn is_finite_carrier(&self) -> bool {
        false
    }

    fn orbit_closure(&self, x: &E512Point) -> Closure<E512Point> {
        match x {
            E512Point::Y(y) => {
                let c = self.base().orbit_closure(y);
                Closure { points: c.points.into_iter().map(E512Point::Y).collect(), exact: c.exact }
            }
            E512Point::E { i, k, .. } => Closure {
                points: (0..self.t).map(|j| E512Point::q(*i, *k, j)).collect(),
                exact: true,
            },
        }
    }

    fn same_carrier(&self, other: &Self) -> bool {
        self.k_max == other.k_max && self.t == other.t && self.p == other.p
    }

    fn contains(&self, x: &E512Point) -> bool {
        self.check(x)
    }

    fn label(&self, x: &E512Point) -> String {
        x.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::validate_with;
    use crate::rational::q;
    use crate::systems::pair_sup_separation;

    fn sys() -> Example512System {
        build_example512(3, 2, EpPoint::periodic(&[0, 1])).unwrap()
    }

    #[test]
    fn metric_cases() {
        let s = sys();
        let e = E512Point::q;
        assert_eq!(s.distance(&e(1, 2, 0), &e(3, 2, 0)), q(1, 2));
        assert_eq!(s.distance(&e(1, 2, 0), &e(1, 3, 0)), q(5, 6));
        // j != r adds d0(p, g p) = 1.
        assert_eq!(s.distance(&e(1, 2, 0), &e(1, 2, 1)), q(2, 1));
        let y = E512Point::Y(EpPoint::periodic(&[0, 1]));
        assert_eq!(s.distance(&e(2, 3, 0), &y), q(1, 3));
        assert_eq!(s.distance(&y, &e(2, 3, 1)), q(4, 3));
    }

    #[test]
    fn map_cycles_e_points() {
        let s = sys();
        assert_eq!(s.forward(&E512Point::q(2, 3, 1)), E512Point::q(2, 3, 0));
        assert_eq!(s.backward(&E512Point::q(2, 3, 0)), E512Point::q(2, 3, 1));
    }

    #[test]
    fn construction_errors() {
        let p = EpPoint::periodic(&[0, 1]);
        assert!(build_example512(3, 1, p.clone()).is_err());
        assert!(build_example512(3, 3, p.clone()).is_err());
        assert!(build_example512(0, 2, p).is_err());
        assert!(build_example512(3, 2, "0~1~0@0".parse().unwrap()).is_err());
        assert!(build_example512(3, 3, EpPoint::periodic(&[0, 0, 1])).is_ok());
    }

    #[test]
    fn mixed_sample_is_a_metric() {
        for (t, p) in [(2, EpPoint::periodic(&[0, 1])), (3, EpPoint::periodic(&[0, 1, 1]))] {
            let s = build_example512(3, t, p).unwrap();
            let pts = s.probe_points();
            assert!(pts.len() >= 40, "{}", pts.len());
            let violations = validate_with(pts.len(), |a, b| s.distance(&pts[a], &pts[b]));
            assert!(violations.is_empty(), "{:?}", violations.first());
        }
    }

    #[test]
    fn q_points_are_isolated() {
        let s = sys();
        for a in s.e_points() {
            for b in s.probe_points() {
                if a != b {
                    assert!(s.distance(&a, &b) >= q(1, 3));
                }
            }
        }
    }

    #[test]
    fn separation_of_mixed_pairs_uses_window() {
        let s = sys();
        let a = E512Point::q(1, 2, 0);
        let b = E512Point::Y(EpPoint::periodic(&[0, 1]));
        // q(i,k,j) moves in step with g^j(p), so the distance to p stays 1/2.
        assert_eq!(pair_sup_separation(&s, &a, &b), q(1, 2));
        let gp = E512Point::Y(EpPoint::periodic(&[1, 0]));
        assert_eq!(pair_sup_separation(&s, &a, &gp), q(3, 2));
        assert_eq!(pair_sup_separation(&s, &a, &E512Point::q(3, 2, 0)), q(1, 2));
    }

    #[test]
    fn parse_points() {
        assert_eq!("q(1,2,0)".parse::<E512Point>().unwrap(), E512Point::q(1, 2, 0));
        assert_eq!("01~~01@0".parse::<E512Point>().unwrap(), E512Point::Y(EpPoint::periodic(&[0, 1])));
        assert!("q(1,2)".parse::<E512Point>().is_err());
    }
}
