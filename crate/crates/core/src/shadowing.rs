//! Pseudo-orbits and shadowable points on finite carriers.
//!
//! A δ-pseudo-orbit steps along edges `u -> v` with `d(f(u), v) < δ`; it is
//! ε-traced by `z` when `d(f^n z, x_n) < ε` at every time. Both inequalities
//! are strict.
//!
//! The exact decider walks the two halves of a pseudo-orbit separately. A
//! forward state is `(x_k, Z, k mod ord f)` where `Z` is the set of tracer
//! candidates (as time-0 positions) that survive times `0..=k`; `Z` only
//! shrinks, so every infinite walk settles on a limit set. The backward half
//! is the same under `f^-1`. Since the halves only share `x_0`, a bi-infinite
//! pseudo-orbit through `x` is traceable iff its forward and backward limit
//! sets meet, and `x` is shadowable iff every achievable pair meets.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::WeightedMeasure;
use crate::metric::PointSet;
use crate::rational::Rational;
use crate::systems::FiniteSystem;

pub use crate::shift::splice_trace_shift;

/// Windowed enumeration refuses beyond this many windows.
pub const WINDOW_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PseudoOrbitGraph {
    pub delta: Rational,
    /// `succ[u]` lists every `v` with `d(f(u), v) < delta`, ascending.
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl PseudoOrbitGraph {
    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.succ[u].binary_search(&v).is_ok()
    }
}

pub fn pseudo_orbit_graph(sys: &FiniteSystem, delta: Rational) -> Result<PseudoOrbitGraph> {
    if !delta.is_positive() {
        return Err(Error::precondition("delta must be positive"));
    }
    let n = sys.len();
    let succ: Vec<Vec<usize>> = (0..n).map(|u| (0..n).filter(|&v| sys.d(sys.f(u), v) < delta).collect()).collect();
    let mut pred = vec![Vec::new(); n];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }
    Ok(PseudoOrbitGraph { delta, succ, pred })
}

/// `x_{-N} .. x_N` with `x_0 = entries[N]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PseudoOrbitWindow {
    pub entries: Vec<usize>,
    pub delta: Rational,
}

impl PseudoOrbitWindow {
    pub fn half_width(&self) -> usize {
        self.entries.len() / 2
    }

    pub fn center(&self) -> usize {
        self.entries[self.half_width()]
    }

    /// `x_n` for `|n| <= N`.
    pub fn at(&self, n: i64) -> usize {
        self.entries[(n + self.half_width() as i64) as usize]
    }

    pub fn is_pseudo_orbit(&self, sys: &FiniteSystem) -> bool {
        self.entries.windows(2).all(|w| sys.d(sys.f(w[0]), w[1]) < self.delta)
    }
}

fn walk_counts(adj: &[Vec<usize>], start: usize, len: usize) -> u128 {
    let mut counts = vec![0u128; adj.len()];
    counts[start] = 1;
    for _ in 0..len {
        let mut next = vec![0u128; adj.len()];
        for (u, &c) in counts.iter().enumerate() {
            if c > 0 {
                for &v in &adj[u] {
                    next[v] = next[v].saturating_add(c);
                }
            }
        }
        counts = next;
    }
    counts.iter().fold(0u128, |a, &c| a.saturating_add(c))
}

/// Number of windows of half-width `n` centred at `x`.
pub fn count_pseudo_orbits(graph: &PseudoOrbitGraph, x: usize, n: usize) -> u128 {
    walk_counts(&graph.pred, x, n).saturating_mul(walk_counts(&graph.succ, x, n))
}

fn walks(adj: &[Vec<usize>], start: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![start]];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &out {
            for &v in &adj[*w.last().unwrap()] {
                let mut e = w.clone();
                e.push(v);
                next.push(e);
            }
        }
        out = next;
    }
    out
}

/// Every window of half-width `n` through `x`, refusing beyond `limit`.
pub fn enumerate_pseudo_orbits(
    sys: &FiniteSystem,
    x: usize,
    delta: Rational,
    n: usize,
    limit: u64,
) -> Result<Vec<PseudoOrbitWindow>> {
    let graph = pseudo_orbit_graph(sys, delta)?;
    let count = count_pseudo_orbits(&graph, x, n);
    if count > limit as u128 {
        return Err(Error::Budget { what: "pseudo-orbit windows".into(), needed: count, limit: limit as u128 });
    }
    let back = walks(&graph.pred, x, n);
    let fwd = walks(&graph.succ, x, n);
    let mut out = Vec::with_capacity(count as usize);
    for b in &back {
        for f in &fwd {
            let mut entries: Vec<usize> = b.iter().rev().copied().collect();
            entries.extend_from_slice(&f[1..]);
            out.push(PseudoOrbitWindow { entries, delta });
        }
    }
    Ok(out)
}

/// `{z : d(f^n z, x_n) < eps for every represented n}`.
pub fn trace(sys: &FiniteSystem, window: &PseudoOrbitWindow, eps: Rational) -> PointSet {
    let n = window.half_width() as i64;
    (0..sys.len())
        .filter(|&z| (-n..=n).all(|k| sys.d(sys.iterate(z, k), window.at(k)) < eps))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowedVerdict {
    pub holds: bool,
    pub windows_checked: u64,
    /// The first untraceable window, or a window with the fewest tracers.
    pub worst_window: Option<Vec<usize>>,
    pub worst_tracers: Option<PointSet>,
}

/// Every window of half-width `n` through `x` has a tracer at `eps`.
pub fn shadowable_windowed(
    sys: &FiniteSystem,
    x: usize,
    eps: Rational,
    delta: Rational,
    n: usize,
    limit: u64,
) -> Result<WindowedVerdict> {
    let windows = enumerate_pseudo_orbits(sys, x, delta, n, limit)?;
    let mut worst: Option<(Vec<usize>, PointSet)> = None;
    let mut checked = 0;
    for w in windows {
        checked += 1;
        let t = trace(sys, &w, eps);
        let empty = t.is_empty();
        if worst.as_ref().is_none_or(|(_, best)| t.len() < best.len()) {
            worst = Some((w.entries, t));
        }
        if empty {
            break;
        }
    }
    let holds = worst.as_ref().is_none_or(|(_, t)| !t.is_empty());
    let (worst_window, worst_tracers) = match worst {
        Some((w, t)) => (Some(w), Some(t)),
        None => (None, None),
    };
    Ok(WindowedVerdict { holds, windows_checked: checked, worst_window, worst_tracers })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactVerdict {
    pub point: usize,
    pub holds: bool,
    /// When false: the least half-width `N` at which some window fails, so
    /// [`shadowable_windowed`] agrees for every half-width `>= horizon`.
    /// When true: the depth after which no new state appears.
    pub horizon: usize,
    /// Tracer sets on which forward walks settle; empty when a short failing
    /// window decided the point before the full exploration.
    pub forward_limits: Vec<PointSet>,
    pub backward_limits: Vec<PointSet>,
    /// An untraceable window of half-width `horizon` when false.
    pub witness: Option<Vec<usize>>,
}

type Mask = u64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct State {
    v: usize,
    z: Mask,
    phase: usize,
}

fn mask_to_set(m: Mask) -> PointSet {
    (0..64).filter(|i| m >> i & 1 == 1).collect()
}

/// One half of the decider: `dir = 1` walks successors under `f`, `dir = -1`
/// walks predecessors under `f^-1`.
struct Half<'a> {
    adj: &'a [Vec<usize>],
    /// `allowed[phase][v]`: the `z` with `d(f^{dir * phase} z, v) < eps`.
    allowed: Vec<Vec<Mask>>,
    order: usize,
}

impl<'a> Half<'a> {
    fn new(sys: &'a FiniteSystem, adj: &'a [Vec<usize>], dir: i64, eps: Rational) -> Self {
        let order = sys.order();
        let n = sys.len();
        let allowed = (0..order)
            .map(|ph| {
                (0..n)
                    .map(|v| {
                        (0..n)
                            .filter(|&z| sys.d(sys.iterate(z, dir * ph as i64), v) < eps)
                            .fold(0, |m, z| m | 1 << z)
                    })
                    .collect()
            })
            .collect();
        Half { adj, allowed, order }
    }

    fn start(&self, x: usize) -> State {
        State { v: x, z: self.allowed[0][x], phase: 0 }
    }

    fn next(&self, s: State) -> impl Iterator<Item = State> + '_ {
        let phase = (s.phase + 1) % self.order;
        self.adj[s.v].iter().map(move |&v| State { v, z: s.z & self.allowed[phase][v], phase })
    }

    /// Reachable states with their BFS depth.
    fn explore(&self, x: usize) -> (Vec<State>, HashMap<State, usize>) {
        let start = self.start(x);
        let mut depth = HashMap::from([(start, 0usize)]);
        let mut order = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            let d = depth[&s];
            for t in self.next(s) {
                if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(t) {
                    e.insert(d + 1);
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        (order, depth)
    }

    /// Candidate sets `A` on which some infinite walk settles.
    fn limits(&self, states: &[State]) -> Vec<Mask> {
        // Keep states with an infinite walk inside their own Z-class by
        // peeling off states whose same-Z successors are all gone.
        let index: HashMap<State, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut out_deg = vec![0usize; states.len()];
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
        for (i, s) in states.iter().enumerate() {
            for t in self.next(*s) {
                if t.z == s.z {
                    let j = index[&t];
                    out_deg[i] += 1;
                    rev[j].push(i);
                }
            }
        }
        let mut alive = vec![true; states.len()];
        let mut stack: Vec<usize> = (0..states.len()).filter(|&i| out_deg[i] == 0).collect();
        while let Some(i) = stack.pop() {
            if !alive[i] {
                continue;
            }
            alive[i] = false;
            for &p in &rev[i] {
                if alive[p] {
                    out_deg[p] -= 1;
                    if out_deg[p] == 0 {
                        stack.push(p);
                    }
                }
            }
        }
        let mut limits: Vec<Mask> =
            states.iter().zip(&alive).filter(|(_, &a)| a).map(|(s, _)| s.z).collect::<HashSet<_>>().into_iter().collect();
        limits.sort_unstable();
        limits
    }
}

fn check_size(sys: &FiniteSystem) -> Result<()> {
    if sys.len() > 64 {
        return Err(Error::Unsupported("the exact shadowing decider handles at most 64 points".into()));
    }
    Ok(())
}

/// Decides whether every bi-infinite δ-pseudo-orbit through `x` is ε-traced.
pub fn shadowable_exact(sys: &FiniteSystem, x: usize, eps: Rational, delta: Rational) -> Result<ExactVerdict> {
    check_size(sys)?;
    let graph = pseudo_orbit_graph(sys, delta)?;
    let fwd = Half::new(sys, &graph.succ, 1, eps);
    let bwd = Half::new(sys, &graph.pred, -1, eps);
    // A short failing window settles the question without the full state space.
    if let Some((horizon, w)) = first_failure(&fwd, &bwd, x, QUICK_DEPTH, QUICK_WORK) {
        return Ok(ExactVerdict {
            point: x,
            holds: false,
            horizon,
            forward_limits: vec![],
            backward_limits: vec![],
            witness: Some(w),
        });
    }
    let (f_states, f_depth) = fwd.explore(x);
    let (b_states, b_depth) = bwd.explore(x);
    let a_limits = fwd.limits(&f_states);
    let b_limits = bwd.limits(&b_states);
    let holds = a_limits.iter().all(|&a| b_limits.iter().all(|&b| a & b != 0));
    let max_depth = f_depth.values().chain(b_depth.values()).copied().max().unwrap_or(0);
    let (horizon, witness) = if holds {
        (max_depth, None)
    } else {
        let (n, w) = first_failure(&fwd, &bwd, x, max_depth, usize::MAX)
            .expect("a disjoint pair of limit sets is reached within the exploration depth");
        (n, Some(w))
    };
    Ok(ExactVerdict {
        point: x,
        holds,
        horizon,
        forward_limits: a_limits.into_iter().map(mask_to_set).collect(),
        backward_limits: b_limits.into_iter().map(mask_to_set).collect(),
        witness,
    })
}

/// Depth and state budgets for the early-exit pass of [`shadowable_exact`].
const QUICK_DEPTH: usize = 64;
const QUICK_WORK: usize = 200_000;

/// Level-synchronous search for the shortest failing window, giving up past
/// `max_depth` or once `work` states have been expanded.
fn first_failure(fwd: &Half, bwd: &Half, x: usize, max_depth: usize, work: usize) -> Option<(usize, Vec<usize>)> {
    let mut spent = 0usize;
    // Each level maps a state to one walk reaching it at exactly that depth;
    // ordered maps keep the reported witness independent of hashing.
    let mut f_level: BTreeMap<State, Vec<usize>> = BTreeMap::from([(fwd.start(x), vec![x])]);
    let mut b_level: BTreeMap<State, Vec<usize>> = BTreeMap::from([(bwd.start(x), vec![x])]);
    let by_mask = |level: &BTreeMap<State, Vec<usize>>| {
        let mut m: BTreeMap<Mask, usize> = BTreeMap::new();
        for (i, s) in level.keys().enumerate() {
            m.entry(s.z).or_insert(i);
        }
        m
    };
    for n in 0..=max_depth {
        spent += f_level.len() + b_level.len();
        if spent > work {
            return None;
        }
        let (fm, bm) = (by_mask(&f_level), by_mask(&b_level));
        let hit = fm.iter().find_map(|(a, &i)| bm.iter().find(|(b, _)| a & *b == 0).map(|(_, &j)| (i, j)));
        if let Some((i, j)) = hit {
            let fw = f_level.values().nth(i).unwrap();
            let bw = b_level.values().nth(j).unwrap();
            let mut entries: Vec<usize> = bw.iter().rev().copied().collect();
            entries.extend_from_slice(&fw[1..]);
            return Some((n, entries));
        }
        let step = |half: &Half, level: &BTreeMap<State, Vec<usize>>| {
            let mut next: BTreeMap<State, Vec<usize>> = BTreeMap::new();
            for (s, w) in level {
                for t in half.next(*s) {
                    next.entry(t).or_insert_with(|| {
                        let mut w = w.clone();
                        w.push(t.v);
                        w
                    });
                }
            }
            next
        };
        f_level = step(fwd, &f_level);
        b_level = step(bwd, &b_level);
    }
    None
}

/// Every pseudo-orbit through any point of `through` is traceable.
pub fn shadowable_through(
    sys: &FiniteSystem,
    through: &PointSet,
    eps: Rational,
    delta: Rational,
) -> Result<Option<ExactVerdict>> {
    for x in through.iter() {
        let v = shadowable_exact(sys, x, eps, delta)?;
        if !v.holds {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Neighbourhood variant: pseudo-orbits through `B(x, delta)` are traced.
pub fn shadowable_neighborhood(sys: &FiniteSystem, x: usize, eps: Rational, delta: Rational) -> Result<bool> {
    let ball = crate::metric::ball(sys.space(), x, delta, false);
    Ok(shadowable_through(sys, &ball, eps, delta)?.is_none())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MuShadowVerdict {
    pub holds: bool,
    pub through_points: PointSet,
    /// A through-point with an untraceable pseudo-orbit.
    pub failing: Option<ExactVerdict>,
}

/// Pseudo-orbits through `B ∩ B(x, delta)` are ε-traced, for a μ-full `B`.
pub fn mu_shadowable_at(
    sys: &FiniteSystem,
    mu: &WeightedMeasure,
    x: usize,
    eps: Rational,
    delta: Rational,
    full: &PointSet,
) -> Result<MuShadowVerdict> {
    let rest = PointSet::full(sys.len()).difference(full);
    if !mu.measure_of_points(&rest)?.is_zero() {
        return Err(Error::precondition("the set B is not of full measure"));
    }
    let through = full.intersection(&crate::metric::ball(sys.space(), x, delta, false));
    let failing = shadowable_through(sys, &through, eps, delta)?;
    Ok(MuShadowVerdict { holds: failing.is_none(), through_points: through, failing })
}

/// The set of shadowable points at `(eps, delta)`.
pub fn shadowable_points(sys: &FiniteSystem, eps: Rational, delta: Rational) -> Result<PointSet> {
    use rayon::prelude::*;
    let verdicts: Result<Vec<(usize, bool)>> =
        (0..sys.len()).into_par_iter().map(|x| Ok((x, shadowable_exact(sys, x, eps, delta)?.holds))).collect();
    Ok(verdicts?.into_iter().filter(|v| v.1).map(|v| v.0).collect())
}
