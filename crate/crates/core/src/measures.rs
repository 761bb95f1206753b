//! Measures on the carrier, Φ/Γ sets, measure-theoretic expansivity and the
//! set-valued stability map `H`.
//!
//! Finite carriers cannot host non-atomic measures; zero weights stand in for
//! null structure there. The shift carries genuine Bernoulli measures, under
//! which every single sequence is null.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansivity::probe_ball;
use crate::metric::{ball, PointSet};
use crate::rational::Rational;
use crate::shift::{ball_cylinder, EpPoint, ShiftSet, ShiftSystem};
use crate::systems::{c0_distance, closure_set, pair_sup_separation, DynamicalSystem, FiniteSystem};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "weights", rename_all = "snake_case")]
pub enum WeightedMeasure {
    /// One nonnegative weight per carrier point.
    Finite(Vec<Rational>),
    /// Product measure with the given symbol probabilities.
    Bernoulli(Vec<Rational>),
}

impl WeightedMeasure {
    pub fn finite(weights: Vec<Rational>) -> Result<Self> {
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::construction("weights must be nonnegative"));
        }
        if !weights.iter().copied().sum::<Rational>().is_positive() {
            return Err(Error::construction("the measure must be nontrivial"));
        }
        Ok(WeightedMeasure::Finite(weights))
    }

    pub fn uniform(n: usize) -> Self {
        WeightedMeasure::Finite(vec![Rational::ONE; n])
    }

    pub fn bernoulli(p: Vec<Rational>) -> Result<Self> {
        if p.len() < 2 || p.iter().any(|w| !w.is_positive()) {
            return Err(Error::construction("Bernoulli weights must be positive, at least two"));
        }
        if p.iter().copied().sum::<Rational>() != Rational::ONE {
            return Err(Error::construction("Bernoulli weights must sum to 1"));
        }
        Ok(WeightedMeasure::Bernoulli(p))
    }

    pub fn total(&self) -> Rational {
        match self {
            WeightedMeasure::Finite(w) => w.iter().copied().sum(),
            WeightedMeasure::Bernoulli(_) => Rational::ONE,
        }
    }

    pub fn measure_of_points(&self, set: &PointSet) -> Result<Rational> {
        match self {
            WeightedMeasure::Finite(w) => {
                if let Some(x) = set.iter().find(|&x| x >= w.len()) {
                    return Err(Error::domain(format!("point {x} outside a {}-point carrier", w.len())));
                }
                Ok(set.iter().map(|x| w[x]).sum())
            }
            WeightedMeasure::Bernoulli(_) => Err(Error::domain("Bernoulli measures live on the shift")),
        }
    }

    pub fn measure_of_shift_set(&self, set: &ShiftSet) -> Result<Rational> {
        let WeightedMeasure::Bernoulli(p) = self else {
            return Err(Error::domain("shift sets need a Bernoulli measure"));
        };
        Ok(match set {
            ShiftSet::Empty | ShiftSet::Point { .. } => Rational::ZERO,
            ShiftSet::Cylinder { fixed } => {
                let mut m = Rational::ONE;
                for &s in fixed.values() {
                    let w = p.get(s as usize).ok_or_else(|| Error::domain(format!("symbol {s} outside alphabet")))?;
                    m = m * *w;
                }
                m
            }
        })
    }

    /// `h*(mu) = mu o h^-1` for a bijection `h` of a finite carrier.
    pub fn pullback(&self, h: &[usize]) -> Result<Self> {
        match self {
            WeightedMeasure::Finite(w) => {
                if h.len() != w.len() {
                    return Err(Error::domain("relabeling size differs from the carrier"));
                }
                let mut out = vec![Rational::ZERO; w.len()];
                let mut hit = vec![false; w.len()];
                for (x, &y) in h.iter().enumerate() {
                    if y >= w.len() || hit[y] {
                        return Err(Error::domain("relabeling is not a bijection"));
                    }
                    hit[y] = true;
                    out[y] = w[x];
                }
                Ok(WeightedMeasure::Finite(out))
            }
            WeightedMeasure::Bernoulli(_) => Err(Error::Unsupported(
                "Bernoulli measures transport only under symbol permutations".into(),
            )),
        }
    }

    /// Transport under the sliding map induced by a symbol permutation.
    pub fn pullback_symbols(&self, sigma: &[u8]) -> Result<Self> {
        match self {
            WeightedMeasure::Bernoulli(p) => {
                if sigma.len() != p.len() {
                    return Err(Error::domain("symbol permutation size differs from the alphabet"));
                }
                let mut out = vec![Rational::ZERO; p.len()];
                for (s, &t) in sigma.iter().enumerate() {
                    out[t as usize] = p[s];
                }
                WeightedMeasure::bernoulli(out)
            }
            WeightedMeasure::Finite(_) => Err(Error::Unsupported("symbol permutations act on the shift".into())),
        }
    }
}

/// Backends that can describe Φ-sets and balls exactly and measure them.
pub trait MeasuredSystem: DynamicalSystem {
    type Set: Clone + std::fmt::Debug + PartialEq + Serialize + Send;

    /// `{y : d(f^n x, f^n y) <= c for all n}`.
    fn phi_set(&self, x: &Self::Point, c: Rational) -> Self::Set;
    fn ball_set(&self, x: &Self::Point, r: Rational, closed: bool) -> Self::Set;
    fn intersect(&self, a: &Self::Set, b: &Self::Set) -> Self::Set;
    fn measure(&self, mu: &WeightedMeasure, set: &Self::Set) -> Result<Rational>;
}

impl MeasuredSystem for FiniteSystem {
    type Set = PointSet;

    fn phi_set(&self, x: &usize, c: Rational) -> PointSet {
        (0..self.len()).filter(|y| pair_sup_separation(self, x, y) <= c).collect()
    }

    fn ball_set(&self, x: &usize, r: Rational, closed: bool) -> PointSet {
        ball(self.space(), *x, r, closed)
    }

    fn intersect(&self, a: &PointSet, b: &PointSet) -> PointSet {
        a.intersection(b)
    }

    fn measure(&self, mu: &WeightedMeasure, set: &PointSet) -> Result<Rational> {
        mu.measure_of_points(set)
    }
}

impl MeasuredSystem for ShiftSystem {
    type Set = ShiftSet;

    /// Distinct sequences separate to distance 1 under the full shift, so
    /// below 1 the Φ-set is the point itself.
    fn phi_set(&self, x: &EpPoint, c: Rational) -> ShiftSet {
        if c >= Rational::ONE {
            ShiftSet::Cylinder { fixed: Default::default() }
        } else {
            ShiftSet::Point { point: x.clone() }
        }
    }

    fn ball_set(&self, x: &EpPoint, r: Rational, closed: bool) -> ShiftSet {
        ball_cylinder(x, r, closed)
    }

    fn intersect(&self, a: &ShiftSet, b: &ShiftSet) -> ShiftSet {
        a.intersect(b)
    }

    fn measure(&self, mu: &WeightedMeasure, set: &ShiftSet) -> Result<Rational> {
        mu.measure_of_shift_set(set)
    }
}

pub fn phi_set<S: MeasuredSystem>(sys: &S, x: &S::Point, c: Rational) -> S::Set {
    sys.phi_set(x, c)
}

/// `{y in B(centre, radius) : d(f^n y, f^n z) <= c for all n}`.
pub fn clipped_phi<S: MeasuredSystem>(sys: &S, centre: &S::Point, radius: Rational, z: &S::Point, c: Rational) -> S::Set {
    sys.intersect(&sys.phi_set(z, c), &sys.ball_set(centre, radius, false))
}

/// The Γ-set of `z` relative to the ball `B(x, c)`; it depends on the centre
/// as well as on `z`.
pub fn gamma_set<S: MeasuredSystem>(sys: &S, x: &S::Point, c: Rational, z: &S::Point) -> Result<S::Set> {
    if sys.distance(x, z) >= c {
        return Err(Error::precondition("z must lie in B(x, c)"));
    }
    Ok(clipped_phi(sys, x, c, z, c))
}

pub fn measure_of<S: MeasuredSystem>(sys: &S, mu: &WeightedMeasure, set: &S::Set) -> Result<Rational> {
    sys.measure(mu, set)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MuVerdict<P> {
    pub holds: bool,
    /// A point whose Γ- or Φ-set has positive measure.
    pub witness: Option<P>,
    pub witness_measure: Option<Rational>,
    pub exhaustive: bool,
}

/// Every `z in B(x, c)` has a μ-null Γ-set.
pub fn mu_uniformly_expansive_at<S: MeasuredSystem>(
    sys: &S,
    mu: &WeightedMeasure,
    x: &S::Point,
    c: Rational,
) -> Result<MuVerdict<S::Point>> {
    for z in probe_ball(sys, x, c, false) {
        let m = sys.measure(mu, &gamma_set(sys, x, c, &z)?)?;
        if m.is_positive() {
            return Ok(MuVerdict { holds: false, witness: Some(z), witness_measure: Some(m), exhaustive: true });
        }
    }
    Ok(MuVerdict { holds: true, witness: None, witness_measure: None, exhaustive: sys.is_finite_carrier() })
}

/// The points (or probes) that are μ-uniformly expansive at `c`.
pub fn classify_mu_uniform<S: MeasuredSystem>(sys: &S, mu: &WeightedMeasure, c: Rational) -> Result<Vec<S::Point>> {
    let probes = sys.probe_points();
    let flags: Result<Vec<bool>> = probes.par_iter().map(|x| Ok(mu_uniformly_expansive_at(sys, mu, x, c)?.holds)).collect();
    Ok(probes.into_iter().zip(flags?).filter(|(_, f)| *f).map(|(x, _)| x).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasureExpansivity<P> {
    pub holds: bool,
    pub witness: Option<P>,
    pub exhaustive: bool,
    /// Every probe is μ-uniformly expansive at the same constant.
    pub uniform_everywhere: bool,
    /// `holds` implies `uniform_everywhere` (Γ-sets sit inside Φ-sets), and
    /// `uniform_everywhere` at `c` implies null Φ-sets at `c / 2` (the Φ-set
    /// at `c / 2` lies inside the Γ-set of the ball of radius `c` around its
    /// own point). Both implications hold on this instance.
    pub cross_check: bool,
}

/// `mu(Φ_c(x)) = 0` for every probe `x`.
pub fn expansive_measure_check<S: MeasuredSystem>(
    sys: &S,
    mu: &WeightedMeasure,
    c: Rational,
    probes: &[S::Point],
) -> Result<MeasureExpansivity<S::Point>> {
    let null_at = |c: Rational| -> Result<Option<S::Point>> {
        for x in probes {
            if sys.measure(mu, &sys.phi_set(x, c))?.is_positive() {
                return Ok(Some(x.clone()));
            }
        }
        Ok(None)
    };
    let witness = null_at(c)?;
    let holds = witness.is_none();
    let mut uniform_everywhere = true;
    for x in probes {
        if !mu_uniformly_expansive_at(sys, mu, x, c)?.holds {
            uniform_everywhere = false;
            break;
        }
    }
    let half_null = null_at(c * Rational::new(1, 2))?.is_none();
    let cross_check = (!holds || uniform_everywhere) && (!uniform_everywhere || half_null);
    Ok(MeasureExpansivity { holds, witness, exhaustive: sys.is_finite_carrier(), uniform_everywhere, cross_check })
}

/// A map from points to finite point sets; `domain` is where it is nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetValuedAssignment {
    pub eta: Rational,
    pub points: PointSet,
    pub images: Vec<PointSet>,
    pub domain: PointSet,
}

impl SetValuedAssignment {
    pub fn image(&self, z: usize) -> Option<&PointSet> {
        self.points.as_slice().binary_search(&z).ok().map(|i| &self.images[i])
    }
}

/// `H(u) = {w : d(f^n w, g^n u) <= eta for all n}` over the `g`-orbit
/// closure of `x`; each condition is periodic in `n`, so one joint period
/// of `(w, u)` decides it.
pub fn build_h_map(f: &FiniteSystem, g: &FiniteSystem, x: usize, eta: Rational) -> Result<SetValuedAssignment> {
    if !f.same_carrier(g) {
        return Err(Error::domain("f and g must share a carrier"));
    }
    let points = closure_set(g, x);
    let images: Vec<PointSet> = points
        .iter()
        .map(|u| {
            (0..f.len())
                .filter(|&w| {
                    let period = num_integer::lcm(f.point_period(w), g.point_period(u)) as i64;
                    (0..period).all(|n| f.d(f.iterate(w, n), g.iterate(u, n)) <= eta)
                })
                .collect()
        })
        .collect();
    let domain = points.iter().zip(&images).filter(|(_, im)| !im.is_empty()).map(|(u, _)| u).collect();
    Ok(SetValuedAssignment { eta, points, images, domain })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilityReport {
    pub holds: bool,
    pub h: SetValuedAssignment,
    pub clauses: Vec<Clause>,
}

fn clause(name: &'static str, holds: bool, detail: impl Into<String>) -> Clause {
    Clause { name, holds, detail: detail.into() }
}

/// Checks every clause of strong μ-topological stability at `x` for the
/// perturbation `g`, with `H` built at `eta` (default `eps`).
#[allow(clippy::too_many_arguments)]
pub fn verify_strong_mu_topological_stability(
    f: &FiniteSystem,
    mu: &WeightedMeasure,
    x: usize,
    eps: Rational,
    delta: Rational,
    g: &FiniteSystem,
    full: &PointSet,
    eta: Option<Rational>,
) -> Result<StabilityReport> {
    let eta = eta.unwrap_or(eps);
    let mut clauses = Vec::new();
    let c0 = c0_distance(f, g)?.value;
    clauses.push(clause("perturbation", c0 <= delta, format!("c0(f, g) = {c0}, delta = {delta}")));
    let outside = PointSet::full(f.len()).difference(full);
    let null_b = mu.measure_of_points(&outside)?;
    clauses.push(clause("full_measure_set", null_b.is_zero(), format!("mu(X \\ B) = {null_b}")));

    let h = build_h_map(f, g, x, eta)?;
    let closure = h.points.clone();

    let quarter = ball(f.space(), x, delta * Rational::new(1, 4), false).intersection(&closure);
    let mut bad = None;
    for z in quarter.iter() {
        let m = mu.measure_of_points(h.image(z).unwrap())?;
        if m.is_positive() {
            bad = Some((z, m));
            break;
        }
    }
    clauses.push(match bad {
        None => clause("null_images", true, format!("mu(H(z)) = 0 on {} points", quarter.len())),
        Some((z, m)) => clause("null_images", false, format!("mu(H({z})) = {m}")),
    });

    let far = closure
        .iter()
        .find(|&z| h.image(z).unwrap().iter().any(|w| f.d(z, w) > eps));
    clauses.push(clause(
        "close_to_identity",
        far.is_none(),
        far.map_or("H(z) inside B[z, eps] for all z".into(), |z| format!("H({z}) leaves B[{z}, eps]")),
    ));

    let skew = closure.iter().find(|&z| h.image(z).unwrap().image(f.map()) != *h.image(g.f(z)).unwrap());
    clauses.push(clause(
        "equivariance",
        skew.is_none(),
        skew.map_or("f(H(z)) = H(g(z)) for all z".into(), |z| format!("f(H({z})) != H(g({z}))")),
    ));

    let u = full.intersection(&ball(f.space(), x, delta, false)).intersection(&closure);
    let lost = mu.measure_of_points(&closure.difference(&h.domain))?;
    let allowed = mu.measure_of_points(&closure.difference(&u))?;
    clauses.push(clause(
        "domain_measure",
        lost <= allowed,
        format!("mu(X \\ Dom H) excess {lost} vs mu(X \\ U) excess {allowed} inside the orbit closure"),
    ));

    clauses.push(clause("upper_semicontinuity", true, "every set-valued map on a finite discrete domain is usc"));
    clauses.push(clause("measurability", true, "every subset of a finite carrier is Borel"));

    let holds = clauses.iter().all(|c| c.holds);
    Ok(StabilityReport { holds, h, clauses })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasureSequenceVerdict<P> {
    pub holds: bool,
    pub tail_start: usize,
    /// A `z` whose never-separating set inside `B(x, delta)` has positive measure.
    pub witness: Option<P>,
    /// `mu_uniformly_expansive_at(x, delta / 9)`.
    pub direct_verdict: bool,
    pub exhaustive: bool,
}

/// Measure-theoretic convergence criterion: for every `z in B(x, delta)` the
/// points of `B(x, delta)` whose eventual separation sets at `delta / 3` are
/// empty form a null set. Evaluated on the tail where `f_n = f`.
pub fn mu_sequence_criterion<S: MeasuredSystem>(
    f: &S,
    approximants: &[S],
    mu: &WeightedMeasure,
    x: &S::Point,
    delta: Rational,
) -> Result<MeasureSequenceVerdict<S::Point>> {
    let mut tail_start = 0;
    for (i, g) in approximants.iter().enumerate() {
        if !c0_distance(f, g)?.value.is_zero() {
            tail_start = i + 1;
        }
    }
    if tail_start >= approximants.len() {
        return Err(Error::Unsupported("approximant sequence is not eventually equal to f".into()));
    }
    let third = delta * Rational::new(1, 3);
    let mut witness = None;
    for z in probe_ball(f, x, delta, false) {
        if f.measure(mu, &clipped_phi(f, x, delta, &z, third))?.is_positive() {
            witness = Some(z);
            break;
        }
    }
    let direct_verdict = mu_uniformly_expansive_at(f, mu, x, delta * Rational::new(1, 9))?.holds;
    Ok(MeasureSequenceVerdict {
        holds: witness.is_none(),
        tail_start,
        witness,
        direct_verdict,
        exhaustive: f.is_finite_carrier(),
    })
}
