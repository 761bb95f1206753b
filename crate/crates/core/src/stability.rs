//! Semiconjugacies onto perturbed orbits, δ-isometry search and
//! Gromov-Hausdorff-type distances between finite systems.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::PointSet;
use crate::rational::Rational;
use crate::systems::{c0_distance, pair_sup_separation, FiniteSystem};

/// Default search budget (visited nodes) for δ-isometry searches.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// The tracing scale used by the stability construction: `min(eps, c) / 16`
/// when an expansivity constant is known, `eps` otherwise.
pub fn default_eta(eps: Rational, c: Option<Rational>) -> Rational {
    match c {
        Some(c) => eps.min(c) * Rational::new(1, 16),
        None => eps,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum FailureStep {
    /// `c0_distance(f, g)` exceeds the allowed radius.
    Perturbation { c0: Rational },
    /// No point traces the pseudo-orbit at `eta`.
    Untraceable,
    /// `g^k y = g^m y` but `f^k z != f^m z`.
    WellDefinedness { k: usize, m: usize, separation: Rational },
    Commutation { at: usize },
    Residual { at: usize, distance: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjugacyResult {
    pub holds: bool,
    pub eta: Rational,
    /// `g^n y` for one period of `y` under `g`.
    pub domain: Vec<usize>,
    /// `h(domain[n])`.
    pub images: Vec<usize>,
    /// Every point tracing the pseudo-orbit at `eta`; `images` uses the first.
    pub tracers: PointSet,
    /// `max d(h(u), ref(u))` over the domain, with `ref` the identity or `j`.
    pub residual: Rational,
    pub commutes: bool,
    pub failure: Option<FailureStep>,
}

impl ConjugacyResult {
    pub fn h(&self, u: usize) -> Option<usize> {
        self.domain.iter().position(|&v| v == u).map(|i| self.images[i])
    }
}

/// Builds `h` on the `g`-orbit of `y` from the pseudo-orbit `x_n = r(g^n y)`
/// traced by `f`; `r` is the identity for C0 perturbations and `j` for the
/// GH variant. The residual is compared with `eps` non-strictly when
/// `strict` is false.
fn conjugate_orbit(
    f: &FiniteSystem,
    g: &FiniteSystem,
    r: &[usize],
    y: usize,
    eps: Rational,
    eta: Rational,
    strict: bool,
) -> ConjugacyResult {
    let p = g.point_period(y);
    let domain: Vec<usize> = (0..p as i64).map(|n| g.iterate(y, n)).collect();
    // d(f^n z, r(g^n y)) is periodic with period lcm(per z, p); one period decides all n.
    let tracers: PointSet = (0..f.len())
        .filter(|&z| {
            let period = num_integer::lcm(f.point_period(z), p) as i64;
            (0..period).all(|n| f.d(f.iterate(z, n), r[g.iterate(y, n)]) < eta)
        })
        .collect();
    let mut out = ConjugacyResult {
        holds: false,
        eta,
        domain,
        images: Vec::new(),
        tracers: tracers.clone(),
        residual: Rational::ZERO,
        commutes: false,
        failure: None,
    };
    let Some(z) = tracers.iter().next() else {
        out.failure = Some(FailureStep::Untraceable);
        return out;
    };
    if f.iterate(z, p as i64) != z {
        let separation = pair_sup_separation(f, &z, &f.iterate(z, p as i64));
        out.failure = Some(FailureStep::WellDefinedness { k: 0, m: p, separation });
        return out;
    }
    out.images = (0..p as i64).map(|n| f.iterate(z, n)).collect();
    // Independent re-verification of the constructed table.
    let table = out.clone();
    let h = |u: usize| table.h(u).expect("domain is g-invariant");
    if let Some(&at) = out.domain.iter().find(|&&u| f.f(h(u)) != h(g.f(u))) {
        out.failure = Some(FailureStep::Commutation { at });
        return out;
    }
    out.commutes = true;
    let (mut worst, mut at) = (Rational::ZERO, y);
    for &u in &out.domain {
        let d = f.d(h(u), r[u]);
        if d > worst {
            worst = d;
            at = u;
        }
    }
    out.residual = worst;
    let ok = if strict { worst < eps } else { worst <= eps };
    if !ok {
        out.failure = Some(FailureStep::Residual { at, distance: worst });
        return out;
    }
    out.holds = true;
    out
}

/// Semiconjugacy `h` on the `g`-orbit closure of `x` with `f h = h g` and
/// `d(h(z), z) <= eps`, tracing `{g^n x}` at `eta` (default schedule via
/// [`default_eta`]).
pub fn build_conjugacy(
    f: &FiniteSystem,
    g: &FiniteSystem,
    x: usize,
    eps: Rational,
    delta: Rational,
    eta: Rational,
) -> Result<ConjugacyResult> {
    let c0 = c0_distance(f, g)?.value;
    if c0 > delta {
        return Ok(ConjugacyResult {
            holds: false,
            eta,
            domain: vec![],
            images: vec![],
            tracers: PointSet::default(),
            residual: Rational::ZERO,
            commutes: false,
            failure: Some(FailureStep::Perturbation { c0 }),
        });
    }
    let identity: Vec<usize> = (0..f.len()).collect();
    Ok(conjugate_orbit(f, g, &identity, x, eps, eta, false))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerturbationOutcome {
    pub index: usize,
    pub map: Vec<usize>,
    pub skipped: Option<String>,
    pub result: Option<ConjugacyResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StablePointReport {
    pub holds: bool,
    pub eta: Rational,
    pub outcomes: Vec<PerturbationOutcome>,
}

pub fn verify_topologically_stable_point(
    f: &FiniteSystem,
    x: usize,
    eps: Rational,
    delta: Rational,
    eta: Rational,
    perturbations: &[FiniteSystem],
) -> Result<StablePointReport> {
    let outcomes: Result<Vec<PerturbationOutcome>> = perturbations
        .par_iter()
        .enumerate()
        .map(|(index, g)| {
            let c0 = c0_distance(f, g)?.value;
            let map = g.map().to_vec();
            if c0 > delta {
                return Ok(PerturbationOutcome {
                    index,
                    map,
                    skipped: Some(format!("c0 distance {c0} exceeds {delta}")),
                    result: None,
                });
            }
            Ok(PerturbationOutcome { index, map, skipped: None, result: Some(build_conjugacy(f, g, x, eps, delta, eta)?) })
        })
        .collect();
    let outcomes = outcomes?;
    let holds = outcomes.iter().all(|o| o.result.as_ref().is_none_or(|r| r.holds));
    Ok(StablePointReport { holds, eta, outcomes })
}

/// Clause values of a map `i: X -> Y` intertwining `f` on `X` with `g` on `Y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MapClauses {
    pub map: Vec<usize>,
    /// `d_H(i(X), Y)`.
    pub density: Rational,
    /// `sup |d(i a, i b) - d(a, b)|`.
    pub distortion: Rational,
    /// `sup d(g(i(a)), i(f(a)))`.
    pub commutation: Rational,
    /// The largest of the three; the map qualifies at every `delta > value`.
    pub value: Rational,
}

pub fn map_clauses(f: &FiniteSystem, g: &FiniteSystem, i: &[usize]) -> MapClauses {
    let n = f.len();
    let mut distortion = Rational::ZERO;
    for a in 0..n {
        for b in a + 1..n {
            distortion = distortion.max((g.d(i[a], i[b]) - f.d(a, b)).abs());
        }
    }
    let density = (0..g.len())
        .map(|y| i.iter().map(|&v| g.d(y, v)).min().unwrap_or(Rational::ZERO))
        .max()
        .unwrap_or(Rational::ZERO);
    let commutation = (0..n).map(|a| g.d(g.f(i[a]), i[f.f(a)])).max().unwrap_or(Rational::ZERO);
    let value = density.max(distortion).max(commutation);
    MapClauses { map: i.to_vec(), density, distortion, commutation, value }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsometryPair {
    pub delta: Rational,
    pub i: MapClauses,
    pub j: MapClauses,
}

/// Sorted distinct values any clause can take; incumbents are indices into it.
fn value_grid(f: &FiniteSystem, g: &FiniteSystem) -> Vec<Rational> {
    let dx: std::collections::BTreeSet<Rational> =
        (0..f.len()).flat_map(|a| (0..f.len()).map(move |b| (a, b))).map(|(a, b)| f.d(a, b)).collect();
    let dy: std::collections::BTreeSet<Rational> =
        (0..g.len()).flat_map(|a| (0..g.len()).map(move |b| (a, b))).map(|(a, b)| g.d(a, b)).collect();
    let mut v: std::collections::BTreeSet<Rational> = dy.clone();
    for a in &dx {
        for b in &dy {
            v.insert((*a - *b).abs());
        }
    }
    v.into_iter().collect()
}

/// Assignment order following `f`-orbits so commutation prunes early.
fn orbit_order(f: &FiniteSystem) -> Vec<usize> {
    let mut seen = vec![false; f.len()];
    let mut order = Vec::with_capacity(f.len());
    for s in 0..f.len() {
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            order.push(x);
            x = f.f(x);
        }
    }
    order
}

struct Search<'a> {
    f: &'a FiniteSystem,
    g: &'a FiniteSystem,
    order: Vec<usize>,
    grid: Vec<Rational>,
    budget: u64,
    nodes: AtomicU64,
    exhausted: AtomicBool,
}

impl<'a> Search<'a> {
    fn new(f: &'a FiniteSystem, g: &'a FiniteSystem, budget: u64) -> Self {
        Search {
            f,
            g,
            order: orbit_order(f),
            grid: value_grid(f, g),
            budget,
            nodes: AtomicU64::new(0),
            exhausted: AtomicBool::new(false),
        }
    }

    fn index_of(&self, v: Rational) -> usize {
        self.grid.binary_search(&v).expect("clause values lie on the grid")
    }

    /// Candidate images for `order[k]` with their running bound, cheapest first.
    fn children(&self, map: &mut [usize], k: usize, bound: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.g.len())
            .map(|y| {
                map[self.order[k]] = y;
                (self.index_of(self.step_cost(map, k)).max(bound), y)
            })
            .collect();
        out.sort();
        out
    }

    /// Largest distortion/commutation value created by placing `order[k]`.
    fn step_cost(&self, map: &[usize], k: usize) -> Rational {
        let (f, g) = (self.f, self.g);
        let a = self.order[k];
        let mut cost = Rational::ZERO;
        for &b in &self.order[..k] {
            cost = cost.max((g.d(map[a], map[b]) - f.d(a, b)).abs());
        }
        let placed = |p: usize| self.order[..=k].contains(&p);
        if placed(f.f(a)) {
            cost = cost.max(g.d(g.f(map[a]), map[f.f(a)]));
        }
        let pre = f.f_inv(a);
        if pre != a && placed(pre) {
            cost = cost.max(g.d(g.f(map[pre]), map[a]));
        }
        cost
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OneSided {
    /// Proven: no map has clause value below this.
    pub lower: Rational,
    /// Best clause value found.
    pub upper: Rational,
    pub best: Option<MapClauses>,
    pub complete: bool,
    pub nodes: u64,
}

/// Branch and bound for `min_i value(i)` over all maps `X -> Y`.
fn minimize_one_side(f: &FiniteSystem, g: &FiniteSystem, budget: u64) -> OneSided {
    let s = Search::new(f, g, budget);
    let n = f.len();
    if n == 0 || g.is_empty() {
        return OneSided { lower: Rational::ZERO, upper: Rational::ZERO, best: None, complete: true, nodes: 0 };
    }
    // Seeds: the identity when sizes agree, and a greedy assignment.
    let mut seed = greedy_map(&s);
    if n == g.len() {
        let id: Vec<usize> = (0..n).collect();
        if map_clauses(f, g, &id).value < map_clauses(f, g, &seed).value {
            seed = id;
        }
    }
    let seed_value = s.index_of(map_clauses(f, g, &seed).value);
    let incumbent = AtomicUsize::new(seed_value);
    let abandoned = AtomicUsize::new(usize::MAX);

    fn dfs(s: &Search, map: &mut Vec<usize>, k: usize, bound: usize, incumbent: &AtomicUsize, abandoned: &AtomicUsize) {
        if s.nodes.fetch_add(1, Ordering::Relaxed) >= s.budget {
            s.exhausted.store(true, Ordering::Relaxed);
            abandoned.fetch_min(bound, Ordering::Relaxed);
            return;
        }
        if k == s.order.len() {
            let idx = s.index_of(map_clauses(s.f, s.g, map).value);
            incumbent.fetch_min(idx, Ordering::AcqRel);
            return;
        }
        for (cost, y) in s.children(map, k, bound) {
            // Only strict improvements matter for the value.
            if cost < incumbent.load(Ordering::Acquire) {
                map[s.order[k]] = y;
                dfs(s, map, k + 1, cost, incumbent, abandoned);
            }
        }
    }

    let roots = s.children(&mut vec![0; n], 0, 0);
    roots.into_par_iter().for_each(|(cost, y)| {
        if cost < incumbent.load(Ordering::Acquire) {
            let mut map = vec![0usize; n];
            map[s.order[0]] = y;
            dfs(&s, &mut map, 1, cost, &incumbent, &abandoned);
        }
    });
    let inc = incumbent.load(Ordering::Acquire);
    let complete = !s.exhausted.load(Ordering::Relaxed);
    let upper = s.grid[inc];
    let lower = match abandoned.load(Ordering::Acquire) {
        ab if ab == usize::MAX || complete => upper,
        ab => s.grid[ab.min(inc)],
    };
    // The parallel search finds the value; a sequential pass fixes the witness
    // so reports do not depend on scheduling.
    let best = first_map_at(&s, inc, budget).unwrap_or(seed);
    let best = map_clauses(f, g, &best);
    OneSided { lower, upper, best: Some(best), complete, nodes: s.nodes.load(Ordering::Relaxed) }
}

fn greedy_map(s: &Search) -> Vec<usize> {
    let mut map = vec![0; s.f.len()];
    for k in 0..s.order.len() {
        let (_, y) = s.children(&mut map, k, 0)[0];
        map[s.order[k]] = y;
    }
    map
}

/// First map in search order whose value index is at most `target`.
fn first_map_at(s: &Search, target: usize, budget: u64) -> Option<Vec<usize>> {
    fn dfs(s: &Search, map: &mut Vec<usize>, k: usize, target: usize, left: &mut u64) -> bool {
        if *left == 0 {
            return false;
        }
        *left -= 1;
        if k == s.order.len() {
            return s.index_of(map_clauses(s.f, s.g, map).value) <= target;
        }
        for (cost, y) in s.children(map, k, 0) {
            if cost <= target {
                map[s.order[k]] = y;
                if dfs(s, map, k + 1, target, left) {
                    return true;
                }
            }
        }
        false
    }
    let mut map = vec![0; s.f.len()];
    let mut left = budget;
    dfs(s, &mut map, 0, target, &mut left).then_some(map)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GhBounds {
    pub lower: Rational,
    pub upper: Rational,
    /// True when both searches finished, in which case `lower == upper` is
    /// the exact distance.
    pub complete: bool,
    pub witness: Option<IsometryPair>,
    pub forward: OneSided,
    pub backward: OneSided,
}

/// Bounds on the C0-Gromov-Hausdorff distance between `f` on `X` and `g` on
/// `Y`. The two maps `i: X -> Y` and `j: Y -> X` are constrained separately,
/// so the distance is `max(min_i value(i), min_j value(j))`.
pub fn gh_distance_bounds(f: &FiniteSystem, g: &FiniteSystem, budget: u64) -> GhBounds {
    let forward = minimize_one_side(f, g, budget);
    let backward = minimize_one_side(g, f, budget);
    let lower = forward.lower.max(backward.lower);
    let upper = forward.upper.max(backward.upper);
    let witness = match (&forward.best, &backward.best) {
        (Some(i), Some(j)) => Some(IsometryPair { delta: upper, i: i.clone(), j: j.clone() }),
        _ => None,
    };
    GhBounds { lower, upper, complete: forward.complete && backward.complete, witness, forward, backward }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsometrySearch {
    /// Maps `X -> Y` meeting every clause strictly below `delta`.
    pub i_maps: Vec<MapClauses>,
    /// Maps `Y -> X` likewise.
    pub j_maps: Vec<MapClauses>,
    pub complete: bool,
}

impl IsometrySearch {
    /// Every combination is a valid pair since the clauses decouple.
    pub fn pairs(&self, delta: Rational) -> impl Iterator<Item = IsometryPair> + '_ {
        self.i_maps
            .iter()
            .flat_map(move |i| self.j_maps.iter().map(move |j| IsometryPair { delta, i: i.clone(), j: j.clone() }))
    }

    pub fn is_empty(&self) -> bool {
        self.i_maps.is_empty() || self.j_maps.is_empty()
    }
}

fn collect_maps(f: &FiniteSystem, g: &FiniteSystem, delta: Rational, budget: u64) -> (Vec<MapClauses>, bool) {
    let s = Search::new(f, g, budget);
    let mut out = Vec::new();
    fn dfs(s: &Search, map: &mut Vec<usize>, k: usize, delta: Rational, out: &mut Vec<MapClauses>) {
        if s.nodes.fetch_add(1, Ordering::Relaxed) >= s.budget {
            s.exhausted.store(true, Ordering::Relaxed);
            return;
        }
        if k == s.order.len() {
            let c = map_clauses(s.f, s.g, map);
            if c.value < delta {
                out.push(c);
            }
            return;
        }
        let a = s.order[k];
        for y in 0..s.g.len() {
            map[a] = y;
            if s.step_cost(map, k) < delta {
                dfs(s, map, k + 1, delta, out);
            }
        }
    }
    if !f.is_empty() {
        dfs(&s, &mut vec![0; f.len()], 0, delta, &mut out);
    }
    out.sort_by(|a, b| a.map.cmp(&b.map));
    (out, !s.exhausted.load(Ordering::Relaxed))
}

/// All δ-isometries both ways that also intertwine the maps within `delta`.
pub fn search_delta_isometries(f: &FiniteSystem, g: &FiniteSystem, delta: Rational, budget: u64) -> IsometrySearch {
    let (i_maps, ci) = collect_maps(f, g, delta, budget);
    let (j_maps, cj) = collect_maps(g, f, delta, budget);
    IsometrySearch { i_maps, j_maps, complete: ci && cj }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GhCandidateOutcome {
    pub index: usize,
    pub name: String,
    pub skipped: Option<String>,
    pub pair: Option<IsometryPair>,
    pub preimage: Vec<usize>,
    /// True when `j` misses `x`, which passes vacuously.
    pub vacuous: bool,
    pub conjugacies: Vec<ConjugacyResult>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GhStableReport {
    pub holds: bool,
    pub eta: Rational,
    pub candidates: Vec<GhCandidateOutcome>,
}

/// For each candidate `(Y, g)` certified within `delta` by an isometry pair,
/// uses that pair's `j` for every `y in j^-1(x)`: traces `j(g^n y)` at `eta`
/// and checks `f h = h g` and `d(h(z), j(z)) < eps`.
pub fn gh_stable_point_check(
    f: &FiniteSystem,
    x: usize,
    eps: Rational,
    delta: Rational,
    eta: Rational,
    candidates: &[FiniteSystem],
    budget: u64,
) -> Result<GhStableReport> {
    if x >= f.len() {
        return Err(Error::domain(format!("point {x} outside the carrier")));
    }
    let mut out = Vec::new();
    for (index, g) in candidates.iter().enumerate() {
        let bounds = gh_distance_bounds(g, f, budget);
        // bounds.forward maps Y -> X (this is j); backward maps X -> Y (i).
        let certified = bounds.upper < delta;
        let mut outcome = GhCandidateOutcome {
            index,
            name: g.name().to_string(),
            skipped: None,
            pair: None,
            preimage: vec![],
            vacuous: false,
            conjugacies: vec![],
            holds: true,
        };
        let (Some(j), Some(i)) = (bounds.forward.best.clone(), bounds.backward.best.clone()) else {
            outcome.skipped = Some("no isometry pair found".into());
            out.push(outcome);
            continue;
        };
        if !certified {
            outcome.skipped = Some(format!("best pair has clause value {} which is not below {delta}", bounds.upper));
            out.push(outcome);
            continue;
        }
        outcome.pair = Some(IsometryPair { delta: bounds.upper, i, j: j.clone() });
        outcome.preimage = (0..g.len()).filter(|&y| j.map[y] == x).collect();
        outcome.vacuous = outcome.preimage.is_empty();
        for &y in &outcome.preimage {
            let r = conjugate_orbit(f, g, &j.map, y, eps, eta, true);
            outcome.holds &= r.holds;
            outcome.conjugacies.push(r);
        }
        out.push(outcome);
    }
    let holds = out.iter().all(|o| o.holds);
    Ok(GhStableReport { holds, eta, candidates: out })
}

/// `h(set)` for a bijection `h`.
pub fn transport_under_conjugacy(h: &[usize], set: &PointSet) -> Result<PointSet> {
    let mut seen = vec![false; h.len()];
    for &y in h {
        if y >= h.len() || seen[y] {
            return Err(Error::domain("transport needs a bijection"));
        }
        seen[y] = true;
    }
    Ok(set.image(h))
}
