//! Expansive, uniformly expansive and minimally expansive points.
//!
//! Every classifier takes its constant `c` explicitly: on a finite carrier
//! every variant holds vacuously below the minimum spacing, so the scale is
//! the meaningful parameter. Separation is strict (`> c`) and balls are open.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::rational::Rational;
use crate::systems::{c0_distance, iterate, DynamicalSystem, FiniteSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Expansive,
    Uniform,
    Minimal,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expansive" => Ok(Variant::Expansive),
            "uniform" => Ok(Variant::Uniform),
            "minimal" => Ok(Variant::Minimal),
            _ => Err(Error::domain(format!("unknown variant `{s}` (expansive, uniform, minimal)"))),
        }
    }
}

/// A time `n` with `d(f^n x, f^n y) = distance > c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeparationCertificate {
    pub n: i64,
    pub distance: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairCertificate<P> {
    pub y: P,
    pub z: P,
    pub certificate: SeparationCertificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansivityVerdict<P> {
    /// `None` for set-level queries.
    pub point: Option<P>,
    pub constant: Rational,
    pub variant: Variant,
    pub holds: bool,
    /// A pair `(y, z)` whose separation never exceeds the constant.
    pub counterexample: Option<(P, P)>,
    pub certificates: Vec<PairCertificate<P>>,
    /// False when quantifiers ran over a probe set or a sampled closure.
    pub exhaustive: bool,
}

/// Earliest (by `|n|`, non-negative first) time with `d(f^n x, f^n y) > c`.
pub fn separation_certificate<S: DynamicalSystem>(
    sys: &S,
    x: &S::Point,
    y: &S::Point,
    c: Rational,
) -> Option<SeparationCertificate> {
    if x == y {
        return None;
    }
    let window = sys.separation_window(x, y) as i64;
    let d = sys.distance(x, y);
    if d > c {
        return Some(SeparationCertificate { n: 0, distance: d });
    }
    let (mut fa, mut fb) = (x.clone(), y.clone());
    let (mut ba, mut bb) = (x.clone(), y.clone());
    for n in 1..=window {
        fa = sys.forward(&fa);
        fb = sys.forward(&fb);
        let d = sys.distance(&fa, &fb);
        if d > c {
            return Some(SeparationCertificate { n, distance: d });
        }
        ba = sys.backward(&ba);
        bb = sys.backward(&bb);
        let d = sys.distance(&ba, &bb);
        if d > c {
            return Some(SeparationCertificate { n: -n, distance: d });
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparationSet {
    pub times: Vec<i64>,
    /// The window spans a full joint period of the pair, so membership of
    /// every `n in Z` follows by periodic extension.
    pub covers_period: bool,
}

/// `{n : |n| <= window, d(f^n x, f^n y) > eps}`.
pub fn separation_set<S: DynamicalSystem>(
    sys: &S,
    x: &S::Point,
    y: &S::Point,
    eps: Rational,
    window: usize,
) -> SeparationSet {
    let w = window as i64;
    let times = (-w..=w)
        .filter(|&n| sys.distance(&iterate(sys, x, n), &iterate(sys, y, n)) > eps)
        .collect();
    let covers_period = sys.joint_period(x, y).is_some_and(|p| 2 * window + 1 >= p);
    SeparationSet { times, covers_period }
}

/// Points of the carrier (or probe set) in `B(x, r)`, with `x` itself.
pub fn probe_ball<S: DynamicalSystem>(sys: &S, x: &S::Point, r: Rational, closed: bool) -> Vec<S::Point> {
    let mut out: Vec<S::Point> = sys
        .probe_points()
        .into_iter()
        .filter(|y| {
            let d = sys.distance(x, y);
            if closed {
                d <= r
            } else {
                d < r
            }
        })
        .collect();
    if !out.contains(x) {
        out.push(x.clone());
        out.sort();
    }
    out
}

fn expansive_pairs<S: DynamicalSystem>(
    sys: &S,
    set: &[S::Point],
    c: Rational,
) -> (Option<(S::Point, S::Point)>, Vec<PairCertificate<S::Point>>) {
    let mut certs = Vec::new();
    for (i, y) in set.iter().enumerate() {
        for z in &set[i + 1..] {
            match separation_certificate(sys, y, z, c) {
                Some(certificate) => certs.push(PairCertificate { y: y.clone(), z: z.clone(), certificate }),
                None => return (Some((y.clone(), z.clone())), certs),
            }
        }
    }
    (None, certs)
}

/// Whether every distinct pair of `set` separates beyond `c` at some time.
pub fn is_expansive_on<S: DynamicalSystem>(sys: &S, set: &[S::Point], c: Rational) -> ExpansivityVerdict<S::Point> {
    let (counterexample, certificates) = expansive_pairs(sys, set, c);
    ExpansivityVerdict {
        point: None,
        constant: c,
        variant: Variant::Expansive,
        holds: counterexample.is_none(),
        counterexample,
        certificates,
        exhaustive: true,
    }
}

/// Every `y != x` separates from `x` beyond `c`.
pub fn expansive_point_at<S: DynamicalSystem>(sys: &S, x: &S::Point, c: Rational) -> ExpansivityVerdict<S::Point> {
    let mut certificates = Vec::new();
    let mut counterexample = None;
    for y in sys.probe_points() {
        if &y == x {
            continue;
        }
        match separation_certificate(sys, x, &y, c) {
            Some(certificate) => certificates.push(PairCertificate { y: x.clone(), z: y, certificate }),
            None => {
                counterexample = Some((x.clone(), y));
                break;
            }
        }
    }
    ExpansivityVerdict {
        point: Some(x.clone()),
        constant: c,
        variant: Variant::Expansive,
        holds: counterexample.is_none(),
        counterexample,
        certificates,
        exhaustive: sys.is_finite_carrier(),
    }
}

/// `f` is expansive on `B(x, c)` with constant `c`.
pub fn uniformly_expansive_at<S: DynamicalSystem>(sys: &S, x: &S::Point, c: Rational) -> ExpansivityVerdict<S::Point> {
    let ball = probe_ball(sys, x, c, false);
    let mut v = is_expansive_on(sys, &ball, c);
    v.point = Some(x.clone());
    v.variant = Variant::Uniform;
    v.exhaustive = sys.is_finite_carrier();
    v
}

/// For every `y in B(x, c)`, `f` is expansive on the orbit closure of `y`.
pub fn minimally_expansive_at<S: DynamicalSystem>(sys: &S, x: &S::Point, c: Rational) -> ExpansivityVerdict<S::Point> {
    let mut exhaustive = sys.is_finite_carrier();
    let mut certificates = Vec::new();
    let mut counterexample = None;
    let mut seen = std::collections::BTreeSet::new();
    for y in probe_ball(sys, x, c, false) {
        let closure = sys.orbit_closure(&y);
        exhaustive &= closure.exact;
        // Points on one orbit share a closure.
        if !seen.insert(closure.points.clone()) {
            continue;
        }
        let (bad, certs) = expansive_pairs(sys, &closure.points, c);
        certificates.extend(certs);
        if bad.is_some() {
            counterexample = bad;
            break;
        }
    }
    ExpansivityVerdict {
        point: Some(x.clone()),
        constant: c,
        variant: Variant::Minimal,
        holds: counterexample.is_none(),
        counterexample,
        certificates,
        exhaustive,
    }
}

pub fn verdict_at<S: DynamicalSystem>(sys: &S, variant: Variant, x: &S::Point, c: Rational) -> ExpansivityVerdict<S::Point> {
    match variant {
        Variant::Expansive => expansive_point_at(sys, x, c),
        Variant::Uniform => uniformly_expansive_at(sys, x, c),
        Variant::Minimal => minimally_expansive_at(sys, x, c),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification<P> {
    pub variant: Variant,
    pub constant: Rational,
    pub points: Vec<P>,
    pub exhaustive: bool,
}

/// The carrier points (or probes) whose verdict holds at constant `c`.
pub fn classify_points<S: DynamicalSystem>(sys: &S, variant: Variant, c: Rational) -> Classification<S::Point> {
    let probes = sys.probe_points();
    let verdicts: Vec<(S::Point, bool, bool)> = probes
        .par_iter()
        .map(|x| {
            let v = verdict_at(sys, variant, x, c);
            (x.clone(), v.holds, v.exhaustive)
        })
        .collect();
    let exhaustive = verdicts.iter().all(|v| v.2);
    let mut points: Vec<S::Point> = verdicts.into_iter().filter(|v| v.1).map(|v| v.0).collect();
    points.sort();
    Classification { variant, constant: c, points, exhaustive }
}

/// Smallest `N` such that any two points `u, v` of the orbit of `y` that stay
/// within `c` of each other for `|n| <= N` are already within `eps`.
pub fn lemma54_horizon<S: DynamicalSystem>(
    sys: &S,
    x: &S::Point,
    c: Rational,
    y: &S::Point,
    eps: Rational,
) -> Result<usize> {
    if !(eps.is_positive() && eps < c) {
        return Err(Error::precondition("need 0 < eps < c"));
    }
    if sys.distance(x, y) >= c {
        return Err(Error::precondition("y must lie in B(x, c)"));
    }
    if !minimally_expansive_at(sys, x, c).holds {
        return Err(Error::precondition("x is not minimally expansive at c"));
    }
    let Some(p) = sys.period(y) else {
        return Err(Error::Unsupported("horizon scan needs a periodic orbit".into()));
    };
    let orbit: Vec<S::Point> = (0..p as i64).map(|k| iterate(sys, y, k)).collect();
    let mut horizon = 0usize;
    for (i, u) in orbit.iter().enumerate() {
        for v in &orbit[i + 1..] {
            if sys.distance(u, v) < eps {
                continue;
            }
            // First |n| with d >= c; minimal expansivity guarantees one exists.
            let window = sys.separation_window(u, v) as i64;
            let first = (0..=window)
                .find(|&n| {
                    sys.distance(&iterate(sys, u, n), &iterate(sys, v, n)) >= c
                        || sys.distance(&iterate(sys, u, -n), &iterate(sys, v, -n)) >= c
                })
                .ok_or_else(|| Error::precondition("orbit pair never separates to c"))?;
            horizon = horizon.max(first as usize);
        }
    }
    Ok(horizon)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequenceVerdict {
    pub holds: bool,
    pub variant: Variant,
    /// First index (0-based) from which every approximant equals `f`.
    pub tail_start: usize,
    /// `c0_distance(f_n, f)` for each approximant.
    pub c0_gaps: Vec<Rational>,
    /// Largest `d(f_n^k u, f^k u)` over the tail, `|k|` up to the order of `f`;
    /// zero confirms iterate convergence.
    pub tail_iterate_gap: Rational,
    /// The constant at which the criterion certifies the pointwise property:
    /// `delta / 3` for the uniform variant, `delta` for the minimal one.
    pub transported_constant: Rational,
    /// Direct classifier verdict at the transported constant.
    pub direct_verdict: bool,
}

/// Convergence criterion for uniformly / minimally expansive points under a
/// sequence `f_1, ..., f_m` that is eventually equal to `f`.
///
/// Uniform: every distinct pair of `B(x, delta)` has a time that separates it
/// beyond `delta` for all large `n`. Minimal: the same for distinct pairs of
/// every orbit closure of a point of `B(x, delta)`. Only the tail matters, and
/// there the separation sets are those of `f`.
pub fn sequence_criterion(
    f: &FiniteSystem,
    approximants: &[FiniteSystem],
    x: usize,
    delta: Rational,
    variant: Variant,
) -> Result<SequenceVerdict> {
    let mut c0_gaps = Vec::with_capacity(approximants.len());
    for g in approximants {
        c0_gaps.push(c0_distance(f, g)?.value);
    }
    let tail_start = c0_gaps.iter().rposition(|g| !g.is_zero()).map_or(0, |i| i + 1);
    if tail_start >= approximants.len() {
        return Err(Error::Unsupported("approximant sequence is not eventually equal to f".into()));
    }
    let order = f.order() as i64;
    let mut tail_iterate_gap = Rational::ZERO;
    for g in &approximants[tail_start..] {
        for u in 0..f.len() {
            for k in -order..=order {
                tail_iterate_gap = tail_iterate_gap.max(f.d(g.iterate(u, k), f.iterate(u, k)));
            }
        }
    }
    let holds = match variant {
        Variant::Uniform | Variant::Expansive => {
            let ball = probe_ball(f, &x, delta, false);
            expansive_pairs(f, &ball, delta).0.is_none()
        }
        Variant::Minimal => minimally_expansive_at(f, &x, delta).holds,
    };
    let (transported_constant, direct_verdict) = match variant {
        Variant::Minimal => (delta, minimally_expansive_at(f, &x, delta).holds),
        Variant::Uniform | Variant::Expansive => {
            let c = delta * Rational::new(1, 3);
            (c, uniformly_expansive_at(f, &x, c).holds)
        }
    };
    Ok(SequenceVerdict {
        holds,
        variant,
        tail_start,
        c0_gaps,
        tail_iterate_gap,
        transported_constant,
        direct_verdict,
    })
}

/// A constant `c'` on the target side of a bijection `h: X -> Y` such that a
/// property at constant `c` for `f` transfers to `h f h^-1` at `c'`: half the
/// least target distance among pairs at source distance `>= c`.
pub fn transported_constant(source: &FiniteMetricSpace, target: &FiniteMetricSpace, h: &[usize], c: Rational) -> Rational {
    let n = source.len();
    let mut m: Option<Rational> = None;
    for a in 0..n {
        for b in a + 1..n {
            if source.d(a, b) >= c {
                let d = target.d(h[a], h[b]);
                m = Some(m.map_or(d, |m| m.min(d)));
            }
        }
    }
    let m = m.unwrap_or_else(|| target.min_spacing().unwrap_or(Rational::ONE));
    m * Rational::new(1, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;
    use crate::rational::q;
    use crate::systems::catalog::{cat5, id3, r12k3};
    use crate::systems::pair_sup_with_window;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn separation_sets() {
        let r = r12k3();
        let s = separation_set(&r, &0, &1, q(1, 6), 4);
        assert!(s.times.is_empty() && s.covers_period);
        let s = separation_set(&r, &0, &6, q(1, 3), 4);
        assert_eq!(s.times, (-4..=4).collect::<Vec<_>>());
        assert!(s.covers_period);
        assert!(separation_set(&id3(), &0, &1, q(2, 1), 1).times.is_empty());
    }

    #[test]
    fn expansive_on_sets() {
        let r = r12k3();
        assert!(is_expansive_on(&r, &[5], q(7, 1)).holds);
        let all: Vec<usize> = (0..12).collect();
        let v = is_expansive_on(&r, &all, q(1, 8));
        assert!(!v.holds);
        assert_eq!(v.counterexample, Some((0, 1)));
        assert!(is_expansive_on(&r, &[0, 3, 6, 9], q(1, 6)).holds);
    }

    #[test]
    fn expansive_points() {
        assert!(expansive_point_at(&id3(), &0, q(1, 2)).holds);
        let v = expansive_point_at(&id3(), &0, q(1, 1));
        assert_eq!(v.counterexample, Some((0, 1)));
        let v = expansive_point_at(&r12k3(), &0, q(1, 12));
        assert_eq!(v.counterexample, Some((0, 1)));
    }

    #[test]
    fn uniform_points() {
        let v = uniformly_expansive_at(&r12k3(), &0, q(1, 6));
        assert!(!v.holds);
        assert_eq!(v.counterexample, Some((0, 1)));
        assert!(uniformly_expansive_at(&r12k3(), &0, q(1, 24)).holds);
    }

    /// Brute-force oracle: all pairs in the ball, sup over a full joint period.
    fn uniform_oracle(sys: &FiniteSystem, x: usize, c: Rational) -> bool {
        let ball: Vec<usize> = (0..sys.len()).filter(|&y| sys.d(x, y) < c).collect();
        let order = sys.order();
        ball.iter().all(|&a| {
            ball.iter().all(|&b| {
                a == b || (0..order as i64).any(|n| sys.d(sys.iterate(a, n), sys.iterate(b, n)) > c)
            })
        })
    }

    #[test]
    fn cat5_uniform_matches_oracle() {
        let cat = cat5();
        let mut largest = None;
        for c in [q(1, 10), q(1, 5), q(3, 10), q(2, 5), q(1, 2)] {
            let v = uniformly_expansive_at(&cat, &0, c);
            assert_eq!(v.holds, uniform_oracle(&cat, 0, c), "c = {c}");
            if v.holds {
                largest = Some(c);
            }
        }
        assert!(largest.is_some());
    }

    #[test]
    fn minimal_points() {
        assert!(minimally_expansive_at(&r12k3(), &0, q(1, 6)).holds);
        assert!(minimally_expansive_at(&id3(), &0, q(1, 2)).holds);
    }

    #[test]
    fn classification() {
        assert_eq!(classify_points(&id3(), Variant::Minimal, q(1, 2)).points, vec![0, 1, 2]);
        assert!(classify_points(&r12k3(), Variant::Uniform, q(1, 6)).points.is_empty());
        assert_eq!(classify_points(&r12k3(), Variant::Minimal, q(1, 6)).points, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn horizons() {
        assert_eq!(lemma54_horizon(&r12k3(), &0, q(1, 6), &0, q(1, 8)).unwrap(), 0);
        assert_eq!(lemma54_horizon(&id3(), &0, q(1, 2), &0, q(1, 4)).unwrap(), 0);
        assert!(matches!(lemma54_horizon(&r12k3(), &0, q(1, 6), &0, q(1, 5)), Err(Error::Precondition(_))));
    }

    #[test]
    fn cat5_horizon_matches_scan() {
        let cat = cat5();
        // Every point of CAT5 other than the origin has period dividing 10.
        let c = q(2, 5);
        let x = 0;
        if !minimally_expansive_at(&cat, &x, c).holds {
            return;
        }
        for y in (0..cat.len()).filter(|&y| cat.d(x, y) < c) {
            let eps = q(1, 5);
            let n = lemma54_horizon(&cat, &x, c, &y, eps).unwrap();
            let orbit: Vec<usize> = (0..cat.point_period(y) as i64).map(|k| cat.iterate(y, k)).collect();
            let stays = |u: usize, v: usize, m: i64| (-m..=m).all(|k| cat.d(cat.iterate(u, k), cat.iterate(v, k)) < c);
            for &u in &orbit {
                for &v in &orbit {
                    if stays(u, v, n as i64) {
                        assert!(cat.d(u, v) < eps);
                    }
                }
            }
            if n > 0 {
                let m = n as i64 - 1;
                assert!(orbit.iter().any(|&u| orbit.iter().any(|&v| stays(u, v, m) && cat.d(u, v) >= eps)));
            }
        }
    }

    #[test]
    fn sequences() {
        let f = r12k3();
        let constant = vec![f.clone(); 4];
        let v = sequence_criterion(&f, &constant, 0, q(1, 6), Variant::Minimal).unwrap();
        assert!(v.holds && v.direct_verdict);
        assert_eq!(v.tail_start, 0);
        assert!(v.tail_iterate_gap.is_zero());

        let v = sequence_criterion(&f, &constant, 0, q(1, 2), Variant::Uniform).unwrap();
        assert!(!v.holds);
        assert_eq!(v.transported_constant, q(1, 6));
        assert!(!v.direct_verdict);

        let mut swapped = f.map().to_vec();
        swapped.swap(0, 1);
        let g = f.with_map(swapped).unwrap();
        let seq = vec![g.clone(), g.clone(), g.clone(), f.clone(), f.clone()];
        let v = sequence_criterion(&f, &seq, 0, q(1, 6), Variant::Minimal).unwrap();
        assert_eq!(v.tail_start, 3);
        assert!(v.holds);
        assert!(matches!(
            sequence_criterion(&f, &[f.clone(), g], 0, q(1, 6), Variant::Minimal),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn certificates_are_genuine() {
        let cat = cat5();
        let v = minimally_expansive_at(&cat, &7, q(1, 5));
        for pc in &v.certificates {
            let d = cat.d(cat.iterate(pc.y, pc.certificate.n), cat.iterate(pc.z, pc.certificate.n));
            assert_eq!(d, pc.certificate.distance);
            assert!(d > q(1, 5));
        }
    }

    #[test]
    fn product_law_for_uniform_points() {
        let a = id3();
        let small = build_small();
        for (f, g) in [(a.clone(), small.clone()), (small.clone(), small)] {
            let prod = f.product(&g);
            for c in [q(1, 6), q(1, 3), q(1, 2)] {
                let uf = classify_points(&f, Variant::Uniform, c).points;
                let ug = classify_points(&g, Variant::Uniform, c).points;
                let up = classify_points(&prod, Variant::Uniform, c).points;
                let m = g.len();
                let expected: Vec<usize> =
                    uf.iter().flat_map(|&x| ug.iter().map(move |&y| x * m + y)).collect();
                assert_eq!(up, expected, "c = {c}");
            }
        }
    }

    fn build_small() -> FiniteSystem {
        crate::systems::build_lattice(&crate::systems::LatticeSpec {
            modulus: 6,
            map: crate::systems::LatticeMap::Rotation(2),
        })
        .unwrap()
    }

    #[test]
    fn inverse_invariance() {
        for sys in crate::systems::catalog::bundled() {
            let inv = sys.inverse_system();
            for variant in [Variant::Expansive, Variant::Uniform, Variant::Minimal] {
                for c in [q(1, 12), q(1, 6), q(1, 3)] {
                    assert_eq!(
                        classify_points(&sys, variant, c).points,
                        classify_points(&inv, variant, c).points
                    );
                }
            }
        }
    }

    #[test]
    fn uniform_implies_expansive() {
        for sys in crate::systems::catalog::bundled() {
            for c in [q(1, 12), q(1, 6), q(1, 3), q(1, 2)] {
                let u = classify_points(&sys, Variant::Uniform, c).points;
                // On a finite carrier a ball reaching the whole space makes the two coincide.
                if sys.space().diameter() < c {
                    assert_eq!(u, classify_points(&sys, Variant::Expansive, c).points);
                }
                for x in u {
                    let ball: Vec<usize> = (0..sys.len()).filter(|&y| sys.d(x, y) < c).collect();
                    for y in ball {
                        if y != x {
                            assert!(pair_sup_with_window(&sys, &x, &y, sys.order()) > c);
                        }
                    }
                }
            }
        }
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
        Just((0..n).collect::<Vec<_>>()).prop_shuffle()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn isometric_relabeling_transports_classes(h in arb_perm(12), k in 0usize..4) {
            let sys = [r12k3(), crate::systems::catalog::rotation12(1), crate::systems::catalog::rotation12(5), build_small_12()][k].clone();
            let conj = sys.conjugate_isometric(&h).unwrap();
            for variant in [Variant::Expansive, Variant::Uniform, Variant::Minimal] {
                for c in [q(1, 12), q(1, 6), q(1, 4)] {
                    let mut mapped: Vec<usize> = classify_points(&sys, variant, c).points.iter().map(|&x| h[x]).collect();
                    mapped.sort();
                    prop_assert_eq!(classify_points(&conj, variant, c).points, mapped);
                }
            }
        }

        #[test]
        fn non_isometric_relabeling_keeps_classes_at_transported_constant(h in arb_perm(12)) {
            let sys = r12k3();
            let target = Arc::new(FiniteMetricSpace::circle(12));
            let conj = sys.conjugate_onto(&h, Arc::clone(&target)).unwrap();
            for variant in [Variant::Expansive, Variant::Uniform, Variant::Minimal] {
                let c = q(1, 6);
                let c2 = transported_constant(sys.space(), &target, &h, c);
                let got = classify_points(&conj, variant, c2).points;
                for x in classify_points(&sys, variant, c).points {
                    prop_assert!(got.contains(&h[x]), "{:?} lost {} at {}", variant, x, c2);
                }
            }
        }
    }

    fn build_small_12() -> FiniteSystem {
        let mut perm: Vec<usize> = (0..12).collect();
        perm.swap(0, 6);
        FiniteSystem::new("swap", Arc::new(FiniteMetricSpace::circle(12)), perm).unwrap()
    }
}
