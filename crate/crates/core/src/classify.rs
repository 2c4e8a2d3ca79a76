//! Three-valued, falsification-style membership tests for contraction classes.
//!
//! The pairwise classes (Banach, nonlinear contraction, Ćirić linear and
//! strong quasicontraction) compare exactly computable quantities, so each
//! verdict is either `Satisfied` or `Falsified` on the pairs given. The weak
//! class is controlled by an orbit diameter that is only ever seen truncated.
//! A truncated diameter underestimates the true one, so a pass is conclusive
//! and a failure is not, unless the truncation has visibly stabilized.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparison::{check_axioms, iterate_n, uniform_grid, ComparisonFunction};
use crate::error::{Error, Result};
use crate::exec;
use crate::metric::MetricSpace;
use crate::orbit::{boundedness_probe, double_orbit_prefix, union_diam, SelfMap};

/// A pair falsifies only if `lhs − rhs > INEQUALITY_TOLERANCE · (1 + rhs)`.
pub const INEQUALITY_TOLERANCE: f64 = 1e-10;

/// Truncated weak-quasi diameters count as stable when `D_n − D_{n/2}` is below this.
pub const STABILIZATION_TOLERANCE: f64 = 1e-12;

/// Number of random pairs drawn when the caller does not say.
pub const DEFAULT_PAIR_COUNT: usize = 256;

fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > INEQUALITY_TOLERANCE * (1.0 + rhs)
}

#[derive(Debug, Clone)]
pub enum ContractionClass {
    /// `d(Tx,Ty) ≤ q·d(x,y)`.
    Banach(f64),
    /// `d(Tx,Ty) ≤ φ(d(x,y))`.
    NonlinearContraction(ComparisonFunction),
    /// `d(Tx,Ty) ≤ q·diam{x,y,Tx,Ty}`.
    CiricLinear(f64),
    /// `d(Tx,Ty) ≤ φ(diam{x,y,Tx,Ty})`.
    StrongQuasi(ComparisonFunction),
    /// `d(Tx,Ty) ≤ φ(diam O(x,y))` with bounded orbits.
    WeakQuasi(ComparisonFunction),
}

impl ContractionClass {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Banach(_) => "banach",
            Self::NonlinearContraction(_) => "nonlinear_contraction",
            Self::CiricLinear(_) => "ciric_linear",
            Self::StrongQuasi(_) => "strong_quasi",
            Self::WeakQuasi(_) => "weak_quasi",
        }
    }

    /// Checks `0 < q < 1`, or the comparison axioms on `[0, 10]`.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Banach(q) | Self::CiricLinear(q) => {
                if q > &0.0 && q < &1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "{}: q={q} not in (0,1)",
                        self.kind()
                    )))
                }
            }
            Self::NonlinearContraction(phi) | Self::StrongQuasi(phi) | Self::WeakQuasi(phi) => {
                let violations = check_axioms(phi, &uniform_grid(0.0, 10.0, 1001))?;
                match violations.first() {
                    None => Ok(()),
                    Some(v) => Err(Error::InvalidParameter(format!("{}: {v}", phi.label()))),
                }
            }
        }
    }

    pub fn descriptor(&self) -> ClassDescriptor {
        let (q, phi) = match self {
            Self::Banach(q) | Self::CiricLinear(q) => (Some(*q), None),
            Self::NonlinearContraction(p) | Self::StrongQuasi(p) | Self::WeakQuasi(p) => {
                (None, Some(p.label().to_string()))
            }
        };
        ClassDescriptor {
            kind: self.kind(),
            q,
            phi,
        }
    }
}

impl fmt::Display for ContractionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Banach(q) => write!(f, "Banach(q={q})"),
            Self::NonlinearContraction(p) => write!(f, "NonlinearContraction({p})"),
            Self::CiricLinear(q) => write!(f, "CiricLinear(q={q})"),
            Self::StrongQuasi(p) => write!(f, "StrongQuasi({p})"),
            Self::WeakQuasi(p) => write!(f, "WeakQuasi({p})"),
        }
    }
}

/// Serializable name of a class and its parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDescriptor {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Satisfied,
    Falsified,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Satisfied => "satisfied",
            Self::Falsified => "falsified",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// The pair that decided a verdict and the two sides of its inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness<P> {
    pub x: P,
    pub y: P,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationVerdict<P> {
    pub outcome: Outcome,
    pub witness: Option<Witness<P>>,
    pub depth_used: usize,
    pub pairs_tested: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl<P: Clone> ClassificationVerdict<P> {
    pub fn report(&self, class: &ContractionClass, seed: Option<u64>) -> ClassificationReport<P> {
        ClassificationReport {
            class: class.descriptor(),
            outcome: self.outcome,
            witness: self.witness.clone(),
            depth_used: self.depth_used,
            pairs_tested: self.pairs_tested,
            seed,
            note: self.note.clone(),
        }
    }
}

/// JSON shape of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport<P> {
    pub class: ClassDescriptor,
    pub outcome: Outcome,
    pub witness: Option<Witness<P>>,
    pub depth_used: usize,
    pub pairs_tested: usize,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `count` seeded random pairs from the space's sampler followed by the
/// caller's witness pairs.
pub fn sample_pairs<S: MetricSpace>(
    space: &S,
    count: usize,
    seed: u64,
    witnesses: &[(S::Point, S::Point)],
) -> Result<Vec<(S::Point, S::Point)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count + witnesses.len());
    for _ in 0..count {
        let missing = || Error::Unsupported(format!("{} has no sampler", space.label()));
        let x = space.sample(&mut rng).ok_or_else(missing)?;
        let y = space.sample(&mut rng).ok_or_else(missing)?;
        pairs.push((x, y));
    }
    pairs.extend(witnesses.iter().cloned());
    Ok(pairs)
}

/// Per-pair result; the verdict takes the lowest-index pair of the worst kind.
enum PairCheck<P> {
    Pass,
    Inconclusive(Witness<P>, &'static str),
    Fail(Witness<P>),
}

fn aggregate<P: Clone>(
    checks: Vec<Result<PairCheck<P>>>,
    depth_used: usize,
) -> Result<ClassificationVerdict<P>> {
    let pairs_tested = checks.len();
    let mut first_fail = None;
    let mut first_open = None;
    for check in checks {
        match check? {
            PairCheck::Pass => {}
            PairCheck::Fail(w) => {
                first_fail.get_or_insert(w);
            }
            PairCheck::Inconclusive(w, why) => {
                first_open.get_or_insert((w, why));
            }
        }
    }
    let (outcome, witness, note) = match (first_fail, first_open) {
        (Some(w), _) => (Outcome::Falsified, Some(w), None),
        (None, Some((w, why))) => (Outcome::Inconclusive, Some(w), Some(why.to_string())),
        (None, None) => (Outcome::Satisfied, None, None),
    };
    Ok(ClassificationVerdict {
        outcome,
        witness,
        depth_used,
        pairs_tested,
        note,
    })
}

/// Tests one of the four pairwise classes on every pair.
pub fn classify_pairwise<S: MetricSpace>(
    t: &SelfMap<S>,
    class: &ContractionClass,
    pairs: &[(S::Point, S::Point)],
) -> Result<ClassificationVerdict<S::Point>> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to classify".into()));
    }
    if matches!(class, ContractionClass::WeakQuasi(_)) {
        return Err(Error::InvalidInput(
            "weak quasicontraction needs orbit diameters; use classify_weak_quasi".into(),
        ));
    }
    class.validate()?;
    let space = t.space();

    let checks = exec::map(pairs, |(x, y)| -> Result<PairCheck<S::Point>> {
        space.validate(x)?;
        space.validate(y)?;
        let tx = t.apply(x)?;
        let ty = t.apply(y)?;
        let lhs = space.dist(&tx, &ty);
        let rhs = match class {
            ContractionClass::Banach(q) => q * space.dist(x, y),
            ContractionClass::NonlinearContraction(phi) => phi.eval(space.dist(x, y)),
            ContractionClass::CiricLinear(q) => q * quad_diam(space, x, y, &tx, &ty),
            ContractionClass::StrongQuasi(phi) => phi.eval(quad_diam(space, x, y, &tx, &ty)),
            ContractionClass::WeakQuasi(_) => unreachable!("rejected above"),
        };
        Ok(if exceeds(lhs, rhs) {
            PairCheck::Fail(Witness {
                x: x.clone(),
                y: y.clone(),
                lhs,
                rhs,
            })
        } else {
            PairCheck::Pass
        })
    });
    aggregate(checks, 1)
}

/// `diam{x, y, Tx, Ty}`.
fn quad_diam<S: MetricSpace>(
    s: &S,
    x: &S::Point,
    y: &S::Point,
    tx: &S::Point,
    ty: &S::Point,
) -> f64 {
    let pts = [x, y, tx, ty];
    let mut d = 0.0f64;
    for i in 0..4 {
        for j in i + 1..4 {
            d = d.max(s.dist(pts[i], pts[j]));
        }
    }
    d
}

/// Tests `d(Tx,Ty) ≤ φ(diam O(x,y))` with orbits truncated at `depth`.
///
/// A pair passes when the inequality holds against the truncated diameter
/// and the orbits show no sign of growth: neither walk reaches the default
/// blow-up threshold, and the image double orbit `{Tx, Ty, …}` keeps within
/// `φ` of the source double orbit. A pair that violates the inequality is
/// reported `Falsified` only if its truncated diameter has stabilized and the
/// orbits look bounded; otherwise the verdict is `Inconclusive`.
pub fn classify_weak_quasi<S: MetricSpace>(
    t: &SelfMap<S>,
    phi: &ComparisonFunction,
    pairs: &[(S::Point, S::Point)],
    depth: usize,
) -> Result<ClassificationVerdict<S::Point>> {
    ContractionClass::WeakQuasi(phi.clone()).validate()?;
    weak_quasi_core(t, &|s| phi.eval(s), pairs, depth)
}

fn weak_quasi_core<S: MetricSpace>(
    t: &SelfMap<S>,
    control: &(dyn Fn(f64) -> f64 + Sync),
    pairs: &[(S::Point, S::Point)],
    depth: usize,
) -> Result<ClassificationVerdict<S::Point>> {
    if depth == 0 {
        return Err(Error::InvalidInput(
            "weak quasicontraction depth must be ≥ 1".into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to classify".into()));
    }
    let space = t.space();

    let checks = exec::map(pairs, |(x, y)| -> Result<PairCheck<S::Point>> {
        let orbits = double_orbit_prefix(t, x, y, depth)?;
        let d_full = orbits.diam_trunc;
        let lhs = space.dist(&orbits.first.points[1], &orbits.second.points[1]);
        let rhs = control(d_full);
        let witness = || Witness {
            x: x.clone(),
            y: y.clone(),
            lhs,
            rhs,
        };

        let bounded = probe_looks_bounded(t, x, depth)? && probe_looks_bounded(t, y, depth)?;
        if !exceeds(lhs, rhs) {
            let image = union_diam(space, &orbits.first.points[1..], &orbits.second.points[1..]);
            let consistent = !exceeds(image, control(d_full));
            return Ok(match (bounded, consistent) {
                (true, true) => PairCheck::Pass,
                (false, _) => PairCheck::Inconclusive(witness(), "orbit reached blow-up threshold"),
                (true, false) => PairCheck::Inconclusive(
                    witness(),
                    "image double orbit not controlled; orbit may be unbounded",
                ),
            });
        }
        let d_half = orbits.diam_at(space, depth / 2);
        Ok(if bounded && d_full - d_half < STABILIZATION_TOLERANCE {
            PairCheck::Fail(witness())
        } else {
            PairCheck::Inconclusive(witness(), "truncated diameter not stabilized")
        })
    });
    aggregate(checks, depth)
}

fn probe_looks_bounded<S: MetricSpace>(t: &SelfMap<S>, x: &S::Point, depth: usize) -> Result<bool> {
    let threshold = crate::orbit::default_blowup_threshold(t, x)?;
    Ok(boundedness_probe(t, x, depth, threshold)?.is_bounded())
}

/// Runs the weak-quasi test for `Tⁿ` against `φⁿ`, after confirming that
/// `T` itself passes against `φ`. Iterates of a weak φ-quasicontraction are
/// weak φⁿ-quasicontractions, so a `Falsified` result here is an error.
pub fn iterated_map_check<S: MetricSpace>(
    t: &SelfMap<S>,
    phi: &ComparisonFunction,
    n: usize,
    pairs: &[(S::Point, S::Point)],
    depth: usize,
) -> Result<ClassificationVerdict<S::Point>> {
    let base = classify_weak_quasi(t, phi, pairs, depth)?;
    if base.outcome != Outcome::Satisfied {
        return Err(Error::InvalidInput(format!(
            "{} is not a verified weak {}-quasicontraction on these pairs ({:?})",
            t.label(),
            phi.label(),
            base.outcome
        )));
    }
    if n == 1 {
        return Ok(base);
    }
    let composite = t.iterate(n);
    let control = |s: f64| iterate_n(phi, s, n).unwrap_or(f64::NAN);
    let verdict = weak_quasi_core(&composite, &control, pairs, depth)?;
    if verdict.outcome == Outcome::Falsified {
        let w = verdict
            .witness
            .as_ref()
            .expect("falsified verdicts carry a witness");
        return Err(Error::InvariantViolation(format!(
            "{} falsified against {}^{n}: {} > {}",
            composite.label(),
            phi.label(),
            w.lhs,
            w.rhs
        )));
    }
    Ok(verdict)
}

/// Smallest `q` for which every pair satisfies `d(Tx,Ty) ≤ q·diam{x,y,Tx,Ty}`,
/// i.e. the largest observed ratio. Pairs with zero diameter are skipped.
pub fn measured_strong_factor<S: MetricSpace>(
    t: &SelfMap<S>,
    pairs: &[(S::Point, S::Point)],
) -> Result<f64> {
    let ratios = exec::map(pairs, |(x, y)| -> Result<f64> {
        let tx = t.apply(x)?;
        let ty = t.apply(y)?;
        let d = quad_diam(t.space(), x, y, &tx, &ty);
        Ok(if d > 0.0 {
            t.space().dist(&tx, &ty) / d
        } else {
            0.0
        })
    });
    ratios.into_iter().try_fold(0.0f64, |m, r| Ok(m.max(r?)))
}

/// Verdicts for `Banach(q)`, `NonlinearContraction(qt)`, `CiricLinear(q)`
/// and `StrongQuasi(qt)` on one pair set, strongest class first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyReport {
    pub q: f64,
    pub outcomes: [Outcome; 4],
    /// No stronger class is satisfied while a weaker one is falsified.
    pub consistent: bool,
}

pub fn class_hierarchy<S: MetricSpace>(
    t: &SelfMap<S>,
    q: f64,
    pairs: &[(S::Point, S::Point)],
) -> Result<HierarchyReport> {
    let phi = ComparisonFunction::affine(q)?;
    let classes = [
        ContractionClass::Banach(q),
        ContractionClass::NonlinearContraction(phi.clone()),
        ContractionClass::CiricLinear(q),
        ContractionClass::StrongQuasi(phi),
    ];
    let mut outcomes = [Outcome::Inconclusive; 4];
    for (slot, class) in outcomes.iter_mut().zip(&classes) {
        *slot = classify_pairwise(t, class, pairs)?.outcome;
    }
    let consistent = (0..4).all(|i| {
        outcomes[i] != Outcome::Satisfied
            || outcomes[i + 1..].iter().all(|o| *o != Outcome::Falsified)
    });
    Ok(HierarchyReport {
        q,
        outcomes,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Euclidean;

    fn line(lo: f64, hi: f64) -> Euclidean {
        Euclidean::line().with_sample_box(lo, hi)
    }

    fn halving() -> SelfMap<Euclidean> {
        SelfMap::scalar("halving", line(-10.0, 10.0), |t| t / 2.0)
    }

    fn p(v: f64) -> Vec<f64> {
        vec![v]
    }

    #[test]
    fn banach_examples() {
        let t = halving();
        let pairs = sample_pairs(t.space(), 100, 0, &[]).unwrap();
        let v = classify_pairwise(&t, &ContractionClass::Banach(0.6), &pairs).unwrap();
        assert_eq!(v.outcome, Outcome::Satisfied);
        assert!(v.witness.is_none());

        let v = classify_pairwise(&t, &ContractionClass::Banach(0.4), &[(p(0.0), p(1.0))]).unwrap();
        assert_eq!(v.outcome, Outcome::Falsified);
        let w = v.witness.unwrap();
        assert_eq!((w.lhs, w.rhs), (0.5, 0.4));
    }

    #[test]
    fn cosine_nonlinear_contraction() {
        let cos = SelfMap::scalar("cos", line(0.0, 1.0), f64::cos);
        let phi = ComparisonFunction::tapered_table();
        let pairs = sample_pairs(cos.space(), 256, 3, &[]).unwrap();
        let v =
            classify_pairwise(&cos, &ContractionClass::NonlinearContraction(phi), &pairs).unwrap();
        assert_eq!(v.outcome, Outcome::Satisfied);
    }

    #[test]
    fn kannan_like_is_strong_but_not_nonlinear() {
        let k = SelfMap::scalar("kannan", line(0.0, 1.0), |x| {
            if x < 1.0 {
                x / 4.0
            } else {
                0.125
            }
        });
        let half = ComparisonFunction::affine(0.5).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let pairs: Vec<_> = grid
            .iter()
            .flat_map(|&a| grid.iter().map(move |&b| (p(a), p(b))))
            .collect();
        let strong =
            classify_pairwise(&k, &ContractionClass::StrongQuasi(half.clone()), &pairs).unwrap();
        assert_eq!(strong.outcome, Outcome::Satisfied);
        let nl =
            classify_pairwise(&k, &ContractionClass::NonlinearContraction(half), &pairs).unwrap();
        assert_eq!(nl.outcome, Outcome::Falsified);
        let w = nl.witness.unwrap();
        assert!(w.x[0] < 1.0 && w.y[0] == 1.0 || w.y[0] < 1.0 && w.x[0] == 1.0);
    }

    #[test]
    fn pairwise_rejects_bad_input() {
        let t = halving();
        assert!(classify_pairwise(&t, &ContractionClass::Banach(0.5), &[]).is_err());
        assert!(
            classify_pairwise(&t, &ContractionClass::Banach(1.5), &[(p(0.0), p(1.0))]).is_err()
        );
        let weak = ContractionClass::WeakQuasi(ComparisonFunction::harmonic());
        assert!(classify_pairwise(&t, &weak, &[(p(0.0), p(1.0))]).is_err());
        let bad = ContractionClass::StrongQuasi(ComparisonFunction::custom("id", |t| t));
        assert!(matches!(
            classify_pairwise(&t, &bad, &[(p(0.0), p(1.0))]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn weak_quasi_examples() {
        let t = halving();
        let phi = ComparisonFunction::affine(0.75).unwrap();
        let pairs = sample_pairs(t.space(), 64, 1, &[]).unwrap();
        let v = classify_weak_quasi(&t, &phi, &pairs, 8).unwrap();
        assert_eq!(v.outcome, Outcome::Satisfied);
        assert_eq!(v.depth_used, 8);

        let id = SelfMap::scalar("id", Euclidean::line(), |t| t);
        let v = classify_weak_quasi(&id, &ComparisonFunction::harmonic(), &[(p(2.0), p(2.0))], 4)
            .unwrap();
        assert_eq!(v.outcome, Outcome::Satisfied);

        let walk = SelfMap::scalar("walk", Euclidean::line(), |t| t + 1.0);
        let half = ComparisonFunction::affine(0.5).unwrap();
        let v = classify_weak_quasi(&walk, &half, &[(p(0.0), p(0.0))], 64).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert!(v.witness.is_some() && v.note.is_some());
    }

    #[test]
    fn weak_quasi_falsified_when_stable() {
        // identity on distinct points: diameters never move, inequality fails
        let id = SelfMap::scalar("id", Euclidean::line(), |t| t);
        let half = ComparisonFunction::affine(0.5).unwrap();
        let v = classify_weak_quasi(&id, &half, &[(p(0.0), p(1.0))], 16).unwrap();
        assert_eq!(v.outcome, Outcome::Falsified);
        let w = v.witness.unwrap();
        assert!(w.lhs - w.rhs > INEQUALITY_TOLERANCE * (1.0 + w.rhs));
    }

    #[test]
    fn iterated_examples() {
        let t = halving();
        let phi = ComparisonFunction::affine(0.75).unwrap();
        let pairs = sample_pairs(t.space(), 32, 2, &[]).unwrap();
        let base = classify_weak_quasi(&t, &phi, &pairs, 16).unwrap();
        for n in [0, 1, 2, 3] {
            let v = iterated_map_check(&t, &phi, n, &pairs, 16).unwrap();
            assert_eq!(v.outcome, Outcome::Satisfied, "n={n}");
            if n == 1 {
                assert_eq!(v, base);
            }
        }
        let id = SelfMap::scalar("id", Euclidean::line(), |t| t);
        assert!(matches!(
            iterated_map_check(&id, &phi, 2, &[(p(0.0), p(1.0))], 8),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn hierarchy_and_measured_factor() {
        let t = halving();
        let pairs = sample_pairs(t.space(), 64, 5, &[]).unwrap();
        let h = class_hierarchy(&t, 0.5, &pairs).unwrap();
        assert!(h.consistent);
        assert_eq!(h.outcomes, [Outcome::Satisfied; 4]);
        let q = measured_strong_factor(&t, &pairs).unwrap();
        assert!(q <= 0.5 + 1e-15);
    }

    #[test]
    fn report_serializes() {
        let t = halving();
        let class = ContractionClass::Banach(0.4);
        let v = classify_pairwise(&t, &class, &[(p(0.0), p(1.0))]).unwrap();
        let json = serde_json::to_string(&v.report(&class, Some(0))).unwrap();
        assert_eq!(
            json,
            r#"{"class":{"kind":"banach","q":0.4},"outcome":"falsified","witness":{"x":[0.0],"y":[1.0],"lhs":0.5,"rhs":0.4},"depth_used":1,"pairs_tested":1,"seed":0}"#
        );
    }
}
