//! Dynamical-system backends and exact orbit machinery.
//!
//! A backend supplies a carrier, a bijection, its inverse and an exact metric.
//! Finite backends ([`FiniteSystem`], built explicitly or from a lattice)
//! enumerate their carrier; the shift and example-512 backends live on
//! eventually periodic sequences and expose a declared finite probe set for
//! quantifiers over the carrier.

mod lattice;

use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{validate_metric, FiniteMetricSpace, PointSet};
use crate::rational::Rational;

pub use lattice::{build_lattice, LatticeMap, LatticeSpec};

/// A bijection on a metric carrier with exact distance evaluation.
pub trait DynamicalSystem: Sync {
    type Point: Clone + Eq + Ord + Hash + Debug + Send + Sync + Serialize;

    fn forward(&self, x: &Self::Point) -> Self::Point;
    fn backward(&self, x: &Self::Point) -> Self::Point;
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> Rational;

    /// A window `W` such that `sup_{n in Z} d(f^n x, f^n y)` is attained at
    /// some `|n| <= W`.
    fn separation_window(&self, x: &Self::Point, y: &Self::Point) -> usize;

    /// Period of the pair sequence `n -> (f^n x, f^n y)` when it is purely periodic.
    fn joint_period(&self, x: &Self::Point, y: &Self::Point) -> Option<usize>;

    /// Least period of `x`, or `None` when `x` is not periodic.
    fn period(&self, x: &Self::Point) -> Option<usize>;

    /// The whole carrier (finite backends) or the declared probe set.
    fn probe_points(&self) -> Vec<Self::Point>;

    /// Whether [`probe_points`](Self::probe_points) is the entire carrier.
    fn is_finite_carrier(&self) -> bool;

    /// Orbit closure of `x`; `exact` is false when only a finite sample of an
    /// infinite closure is returned.
    fn orbit_closure(&self, x: &Self::Point) -> Closure<Self::Point>;

    fn same_carrier(&self, other: &Self) -> bool;

    fn contains(&self, x: &Self::Point) -> bool;

    fn label(&self, x: &Self::Point) -> String;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure<P> {
    pub points: Vec<P>,
    pub exact: bool,
}

/// `f^n(x)` for any integer `n`.
pub fn iterate<S: DynamicalSystem>(sys: &S, x: &S::Point, n: i64) -> S::Point {
    let mut p = x.clone();
    if n >= 0 {
        for _ in 0..n {
            p = sys.forward(&p);
        }
    } else {
        for _ in 0..(-n) {
            p = sys.backward(&p);
        }
    }
    p
}

/// `max_{|n| <= window} d(f^n x, f^n y)`.
pub fn pair_sup_with_window<S: DynamicalSystem>(
    sys: &S,
    x: &S::Point,
    y: &S::Point,
    window: usize,
) -> Rational {
    let mut best = sys.distance(x, y);
    let (mut a, mut b) = (x.clone(), y.clone());
    for _ in 0..window {
        a = sys.forward(&a);
        b = sys.forward(&b);
        best = best.max(sys.distance(&a, &b));
    }
    let (mut a, mut b) = (x.clone(), y.clone());
    for _ in 0..window {
        a = sys.backward(&a);
        b = sys.backward(&b);
        best = best.max(sys.distance(&a, &b));
    }
    best
}

/// Exact `sup_{n in Z} d(f^n x, f^n y)`.
pub fn pair_sup_separation<S: DynamicalSystem>(sys: &S, x: &S::Point, y: &S::Point) -> Rational {
    if x == y {
        return Rational::ZERO;
    }
    pair_sup_with_window(sys, x, y, sys.separation_window(x, y))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit<P> {
    /// `x, f(x), ...` for one period, or a two-sided sample when aperiodic.
    pub points: Vec<P>,
    pub period: Option<usize>,
    /// Always zero: bijections have no transient.
    pub preperiod: usize,
}

pub fn orbit<S: DynamicalSystem>(sys: &S, x: &S::Point) -> Orbit<S::Point> {
    match sys.period(x) {
        Some(p) => {
            let mut points = Vec::with_capacity(p);
            let mut cur = x.clone();
            for _ in 0..p {
                points.push(cur.clone());
                cur = sys.forward(&cur);
            }
            Orbit { points, period: Some(p), preperiod: 0 }
        }
        None => {
            let closure = sys.orbit_closure(x);
            Orbit { points: closure.points, period: None, preperiod: 0 }
        }
    }
}

pub fn orbit_closure<S: DynamicalSystem>(sys: &S, x: &S::Point) -> Closure<S::Point> {
    sys.orbit_closure(x)
}

/// `sup_x d(f(x), g(x))`, exact on finite carriers and a lower bound over the
/// probe set otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct C0Distance {
    pub value: Rational,
    pub exhaustive: bool,
}

pub fn c0_distance<S: DynamicalSystem>(f: &S, g: &S) -> Result<C0Distance> {
    if !f.same_carrier(g) {
        return Err(Error::domain("C0 distance needs identical carriers and metrics"));
    }
    let value = f
        .probe_points()
        .iter()
        .map(|x| f.distance(&f.forward(x), &g.forward(x)))
        .fold(Rational::ZERO, Rational::max);
    Ok(C0Distance { value, exhaustive: f.is_finite_carrier() })
}

/// A bijection of a finite metric space (explicit or lattice backend).
#[derive(Clone, Debug)]
pub struct FiniteSystem {
    name: String,
    space: Arc<FiniteMetricSpace>,
    forward: Vec<usize>,
    backward: Vec<usize>,
    periods: Vec<usize>,
    labels: Option<Arc<Vec<String>>>,
}

impl PartialEq for FiniteSystem {
    fn eq(&self, other: &Self) -> bool {
        self.forward == other.forward && self.space == other.space
    }
}

impl Eq for FiniteSystem {}

fn invert(perm: &[usize]) -> Result<Vec<usize>> {
    let n = perm.len();
    let mut inv = vec![usize::MAX; n];
    for (i, &p) in perm.iter().enumerate() {
        if p >= n {
            return Err(Error::construction(format!("map sends {i} to {p}, outside 0..{n}")));
        }
        if inv[p] != usize::MAX {
            return Err(Error::construction(format!("map is not injective: {p} is hit twice")));
        }
        inv[p] = i;
    }
    Ok(inv)
}

fn cycle_periods(perm: &[usize]) -> Vec<usize> {
    let mut periods = vec![0; perm.len()];
    for start in 0..perm.len() {
        if periods[start] != 0 {
            continue;
        }
        let mut cycle = vec![start];
        let mut cur = perm[start];
        while cur != start {
            cycle.push(cur);
            cur = perm[cur];
        }
        for &p in &cycle {
            periods[p] = cycle.len();
        }
    }
    periods
}

/// Wraps a validated finite metric space and a permutation.
pub fn build_explicit(space: FiniteMetricSpace, perm: Vec<usize>) -> Result<FiniteSystem> {
    let violations = validate_metric(&space);
    if let Some(v) = violations.first() {
        return Err(Error::construction(format!(
            "metric invalid: {:?} fails at {:?} ({} violations)",
            v.axiom,
            v.witness,
            violations.len()
        )));
    }
    FiniteSystem::new("explicit", Arc::new(space), perm)
}

impl FiniteSystem {
    /// Builds a system over an already-validated space.
    pub fn new(name: impl Into<String>, space: Arc<FiniteMetricSpace>, perm: Vec<usize>) -> Result<Self> {
        if perm.len() != space.len() {
            return Err(Error::construction(format!(
                "map has {} entries for a carrier of {} points",
                perm.len(),
                space.len()
            )));
        }
        let backward = invert(&perm)?;
        let periods = cycle_periods(&perm);
        Ok(FiniteSystem { name: name.into(), space, forward: perm, backward, periods, labels: None })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.len());
        self.labels = Some(Arc::new(labels));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn shared_space(&self) -> Arc<FiniteMetricSpace> {
        Arc::clone(&self.space)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse_map(&self) -> &[usize] {
        &self.backward
    }

    #[inline]
    pub fn f(&self, x: usize) -> usize {
        self.forward[x]
    }

    #[inline]
    pub fn f_inv(&self, x: usize) -> usize {
        self.backward[x]
    }

    #[inline]
    pub fn d(&self, a: usize, b: usize) -> Rational {
        self.space.d(a, b)
    }

    pub fn point_period(&self, x: usize) -> usize {
        self.periods[x]
    }

    /// Order of the permutation (lcm of its cycle lengths).
    pub fn order(&self) -> usize {
        self.periods.iter().fold(1, |acc, &p| acc.lcm(&p))
    }

    pub fn iterate(&self, mut x: usize, n: i64) -> usize {
        let p = self.periods[x] as i64;
        let steps = n.rem_euclid(p);
        for _ in 0..steps {
            x = self.forward[x];
        }
        x
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(&i)).collect()
    }

    /// Same carrier, different map.
    pub fn with_map(&self, perm: Vec<usize>) -> Result<FiniteSystem> {
        let mut sys = FiniteSystem::new(format!("{}'", self.name), self.shared_space(), perm)?;
        sys.labels = self.labels.clone();
        Ok(sys)
    }

    pub fn inverse_system(&self) -> FiniteSystem {
        let mut sys = self.with_map(self.backward.clone()).expect("inverse is a bijection");
        sys.name = format!("{}^-1", self.name);
        sys
    }

    /// `h o f o h^-1` on the relabeled space that makes `h` an isometry.
    pub fn conjugate_isometric(&self, h: &[usize]) -> Result<FiniteSystem> {
        let target = self.space.relabeled(h);
        self.conjugate_onto(h, Arc::new(target))
    }

    /// `h o f o h^-1` on a given target space (h need not be an isometry).
    pub fn conjugate_onto(&self, h: &[usize], target: Arc<FiniteMetricSpace>) -> Result<FiniteSystem> {
        let h_inv = invert(h)?;
        if target.len() != self.len() {
            return Err(Error::construction("conjugacy target has a different size"));
        }
        let perm: Vec<usize> = (0..self.len()).map(|y| h[self.forward[h_inv[y]]]).collect();
        let mut sys = FiniteSystem::new(format!("h.{}.h^-1", self.name), target, perm)?;
        if let Some(labels) = &self.labels {
            let relabeled: Vec<String> = (0..self.len()).map(|y| labels[h_inv[y]].clone()).collect();
            sys.labels = Some(Arc::new(relabeled));
        }
        Ok(sys)
    }

    /// `f x g` with the maximum metric; `(a, b)` has index `a * g.len() + b`.
    pub fn product(&self, other: &FiniteSystem) -> FiniteSystem {
        let m = other.len();
        let space = self.space.product_max(&other.space);
        let perm = (0..self.len() * m)
            .map(|i| self.forward[i / m] * m + other.forward[i % m])
            .collect();
        FiniteSystem::new(format!("{}x{}", self.name, other.name), Arc::new(space), perm)
            .expect("product of bijections")
    }
}

impl DynamicalSystem for FiniteSystem {
    type Point = usize;

    fn forward(&self, x: &usize) -> usize {
        self.forward[*x]
    }

    fn backward(&self, x: &usize) -> usize {
        self.backward[*x]
    }

    fn distance(&self, a: &usize, b: &usize) -> Rational {
        self.space.d(*a, *b)
    }

    fn separation_window(&self, x: &usize, y: &usize) -> usize {
        // One joint period, read forward from n = 0, covers every residue.
        self.joint_period(x, y).unwrap() - 1
    }

    fn joint_period(&self, x: &usize, y: &usize) -> Option<usize> {
        Some(self.periods[*x].lcm(&self.periods[*y]))
    }

    fn period(&self, x: &usize) -> Option<usize> {
        Some(self.periods[*x])
    }

    fn probe_points(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    fn is_finite_carrier(&self) -> bool {
        true
    }

    fn orbit_closure(&self, x: &usize) -> Closure<usize> {
        let mut points = vec![*x];
        let mut cur = self.forward[*x];
        while cur != *x {
            points.push(cur);
            cur = self.forward[cur];
        }
        points.sort_unstable();
        Closure { points, exact: true }
    }

    fn same_carrier(&self, other: &Self) -> bool {
        self.space == other.space
    }

    fn contains(&self, x: &usize) -> bool {
        *x < self.len()
    }

    fn label(&self, x: &usize) -> String {
        match &self.labels {
            Some(l) => l[*x].clone(),
            None => x.to_string(),
        }
    }
}

/// Orbit closure of a finite-system point as a [`PointSet`].
pub fn closure_set(sys: &FiniteSystem, x: usize) -> PointSet {
    PointSet::from_sorted(sys.orbit_closure(&x).points)
}

/// All permutations `g` of the carrier with `c0_distance(f, g) <= delta`,
/// in lexicographic order of the map table.
pub fn perturbations_within(f: &FiniteSystem, delta: Rational, limit: usize) -> Result<Vec<FiniteSystem>> {
    let n = f.len();
    let options: Vec<Vec<usize>> = (0..n)
        .map(|x| (0..n).filter(|&y| f.d(f.f(x), y) <= delta).collect())
        .collect();
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    let mut used = vec![false; n];
    fn rec(
        x: usize,
        options: &[Vec<usize>],
        current: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> bool {
        if x == options.len() {
            out.push(current.clone());
            return out.len() <= limit;
        }
        for &y in &options[x] {
            if !used[y] {
                used[y] = true;
                current[x] = y;
                let ok = rec(x + 1, options, current, used, out, limit);
                used[y] = false;
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    let mut tables = Vec::new();
    if !rec(0, &options, &mut current, &mut used, &mut tables, limit) {
        return Err(Error::Budget {
            what: "perturbation enumeration".into(),
            needed: tables.len() as u128,
            limit: limit as u128,
        });
    }
    out.extend(tables.into_iter().map(|t| f.with_map(t).expect("bijection")));
    Ok(out)
}

/// Named desk-scale systems used across tests, the CLI and the acceptance suite.
pub mod catalog {
    use super::*;

    /// Identity on the discrete 3-point space.
    pub fn id3() -> FiniteSystem {
        build_explicit(FiniteMetricSpace::discrete(3), vec![0, 1, 2]).unwrap().named("ID3")
    }

    /// Rotation by `k` on the 12-point circle lattice.
    pub fn rotation12(k: i64) -> FiniteSystem {
        build_lattice(&LatticeSpec { modulus: 12, map: LatticeMap::Rotation(k) }).unwrap()
    }

    /// `R12k3`.
    pub fn r12k3() -> FiniteSystem {
        rotation12(3)
    }

    /// The cat-type automorphism `[[2,1],[1,1]]` on the 5x5 torus.
    pub fn cat5() -> FiniteSystem {
        build_lattice(&LatticeSpec { modulus: 5, map: LatticeMap::Matrix([2, 1, 1, 1]) }).unwrap()
    }

    /// Identity on two points at distance 1/100 plus two far fixed points.
    pub fn twin4() -> FiniteSystem {
        let space = FiniteMetricSpace::from_fn(4, |i, j| match (i.min(j), i.max(j)) {
            (a, b) if a == b => Rational::ZERO,
            (0, 1) => Rational::new(1, 100),
            _ => Rational::ONE,
        });
        build_explicit(space, vec![0, 1, 2, 3]).unwrap().named("TWIN4")
    }

    /// Every bundled finite system.
    pub fn bundled() -> Vec<FiniteSystem> {
        vec![
            id3(),
            r12k3(),
            rotation12(1),
            rotation12(5),
            cat5(),
            build_lattice(&LatticeSpec { modulus: 8, map: LatticeMap::Rotation(1) }).unwrap(),
            build_lattice(&LatticeSpec { modulus: 3, map: LatticeMap::Matrix([1, 1, 0, 1]) }).unwrap(),
            twin4(),
        ]
    }
}
