//! Self-maps, finite orbit prefixes and the quantities read off them.
//!
//! A prefix `{x, Tx, …, Tⁿx}` only sees part of an orbit, so its diameter is
//! a lower bound on the orbit diameter. Everything here is exact for the
//! prefix and says nothing beyond it.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::metric::{diam_unchecked, MetricSpace};

/// Depth used for classification orbits.
pub const DEFAULT_CLASSIFY_DEPTH: usize = 64;

/// Depth used for boundedness probes.
pub const DEFAULT_PROBE_DEPTH: usize = 4096;

/// Slack on the closed-form orbit bound.
pub const ORBIT_BOUND_TOLERANCE: f64 = 1e-12;

type MapFn<P> = dyn Fn(&P) -> P + Send + Sync;

/// A map `T: X → X` bound to its space.
pub struct SelfMap<S: MetricSpace> {
    space: Arc<S>,
    apply: Arc<MapFn<S::Point>>,
    label: String,
}

impl<S: MetricSpace> Clone for SelfMap<S> {
    fn clone(&self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            apply: Arc::clone(&self.apply),
            label: self.label.clone(),
        }
    }
}

impl<S: MetricSpace> fmt::Debug for SelfMap<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelfMap")
            .field("label", &self.label)
            .field("space", &self.space.label())
            .finish()
    }
}

impl<S: MetricSpace> SelfMap<S> {
    pub fn new<F>(label: impl Into<String>, space: S, f: F) -> Self
    where
        F: Fn(&S::Point) -> S::Point + Send + Sync + 'static,
    {
        Self::with_shared_space(label, Arc::new(space), f)
    }

    pub fn with_shared_space<F>(label: impl Into<String>, space: Arc<S>, f: F) -> Self
    where
        F: Fn(&S::Point) -> S::Point + Send + Sync + 'static,
    {
        Self {
            space,
            apply: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn space(&self) -> &S {
        &self.space
    }

    pub fn shared_space(&self) -> Arc<S> {
        Arc::clone(&self.space)
    }

    /// `T(x)` without checking that the image lies in the space.
    pub fn eval(&self, x: &S::Point) -> S::Point {
        (self.apply)(x)
    }

    /// `T(x)`, rejecting images of the wrong shape or with non-finite parts.
    pub fn apply(&self, x: &S::Point) -> Result<S::Point> {
        let image = self.eval(x);
        self.space.validate(&image)?;
        Ok(image)
    }

    /// `Tⁿ`; `T⁰` is the identity.
    pub fn iterate(&self, n: usize) -> Self {
        let inner = Arc::clone(&self.apply);
        Self {
            space: Arc::clone(&self.space),
            apply: Arc::new(move |x: &S::Point| {
                let mut y = x.clone();
                for _ in 0..n {
                    y = inner(&y);
                }
                y
            }),
            label: format!("{}^{n}", self.label),
        }
    }
}

impl<S> SelfMap<S>
where
    S: MetricSpace<Point = Vec<f64>>,
{
    /// Lifts a scalar function to a map on a one-dimensional vector space.
    pub fn scalar<F>(label: impl Into<String>, space: S, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(label, space, move |x: &Vec<f64>| vec![f(x[0])])
    }
}

fn map_step<S: MetricSpace>(t: &SelfMap<S>, x: &S::Point, index: usize) -> Result<S::Point> {
    t.apply(x).map_err(|e| match e {
        Error::NonFinite(_) => Error::Divergence { index },
        other => other,
    })
}

fn check_base<S: MetricSpace>(t: &SelfMap<S>, x: &S::Point) -> Result<()> {
    t.space().validate(x).map_err(|e| match e {
        Error::NonFinite(_) => Error::Divergence { index: 0 },
        other => other,
    })
}

/// Diameters of `points[..=k]` for every `k`.
fn running_diameters<S: MetricSpace>(space: &S, points: &[S::Point]) -> Vec<f64> {
    let rows = exec::map_range(points.len(), |k| {
        points[..k]
            .iter()
            .map(|p| space.dist(p, &points[k]))
            .fold(0.0, f64::max)
    });
    let mut running = 0.0f64;
    rows.into_iter()
        .map(|r| {
            running = running.max(r);
            running
        })
        .collect()
}

/// Largest distance between a point of `a` and a point of `b`.
fn cross_diam<S: MetricSpace>(space: &S, a: &[S::Point], b: &[S::Point]) -> f64 {
    exec::max_range(a.len(), |i| {
        b.iter().map(|q| space.dist(&a[i], q)).fold(0.0, f64::max)
    })
}

/// Diameter of `a ∪ b`.
pub(crate) fn union_diam<S: MetricSpace>(space: &S, a: &[S::Point], b: &[S::Point]) -> f64 {
    diam_unchecked(space, a)
        .max(diam_unchecked(space, b))
        .max(cross_diam(space, a, b))
}

/// `x, Tx, …, Tⁿx` with the diameter of every leading segment cached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitPrefix<P> {
    pub depth: usize,
    pub points: Vec<P>,
    /// `running_diam[k]` is the diameter of `points[..=k]`.
    pub running_diam: Vec<f64>,
    pub diam_trunc: f64,
}

impl<P> OrbitPrefix<P> {
    pub fn base(&self) -> &P {
        &self.points[0]
    }

    pub fn last(&self) -> &P {
        self.points.last().expect("orbit prefix is never empty")
    }
}

impl OrbitPrefix<Vec<f64>> {
    /// CSV rows `step, x0, …, distance_from_base, diam_trunc`.
    pub fn write_csv<S>(&self, space: &S, mut out: impl Write) -> io::Result<()>
    where
        S: MetricSpace<Point = Vec<f64>>,
    {
        let dim = self.points[0].len();
        let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        writeln!(
            out,
            "step,{},distance_from_base,diam_trunc",
            coords.join(",")
        )?;
        for (k, p) in self.points.iter().enumerate() {
            let c: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(
                out,
                "{k},{},{},{}",
                c.join(","),
                space.dist(&self.points[0], p),
                self.running_diam[k]
            )?;
        }
        Ok(())
    }
}

/// Computes `{Tᵏx : 0 ≤ k ≤ depth}`.
pub fn orbit_prefix<S: MetricSpace>(
    t: &SelfMap<S>,
    x: &S::Point,
    depth: usize,
) -> Result<OrbitPrefix<S::Point>> {
    check_base(t, x)?;
    let mut points = Vec::with_capacity(depth + 1);
    points.push(x.clone());
    for k in 1..=depth {
        let next = map_step(t, &points[k - 1], k)?;
        points.push(next);
    }
    let running_diam = running_diameters(t.space(), &points);
    let diam_trunc = *running_diam.last().expect("non-empty");
    Ok(OrbitPrefix {
        depth,
        points,
        running_diam,
        diam_trunc,
    })
}

/// Prefixes of `O(x)` and `O(y)` and the diameter of their union.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleOrbitPrefix<P> {
    pub first: OrbitPrefix<P>,
    pub second: OrbitPrefix<P>,
    pub diam_trunc: f64,
}

impl<P> DoubleOrbitPrefix<P> {
    pub fn depth(&self) -> usize {
        self.first.depth
    }
}

impl<P: Clone + fmt::Debug + PartialEq + Send + Sync + Serialize> DoubleOrbitPrefix<P> {
    /// Union diameter of the two orbits cut at `k ≤ depth`.
    pub fn diam_at<S: MetricSpace<Point = P>>(&self, space: &S, k: usize) -> f64 {
        assert!(k <= self.depth(), "cut beyond prefix depth");
        let a = &self.first.points[..=k];
        let b = &self.second.points[..=k];
        self.first.running_diam[k]
            .max(self.second.running_diam[k])
            .max(cross_diam(space, a, b))
    }

    /// Union diameter of `{Tx, …, Tᵏx} ∪ {Ty, …, Tᵏy}` for `1 ≤ k ≤ depth`,
    /// i.e. the image double orbit of `(Tx, Ty)` cut at depth `k − 1`.
    pub fn image_diam_at<S: MetricSpace<Point = P>>(&self, space: &S, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.depth(), "image cut out of range");
        union_diam(space, &self.first.points[1..=k], &self.second.points[1..=k])
    }
}

pub fn double_orbit_prefix<S: MetricSpace>(
    t: &SelfMap<S>,
    x: &S::Point,
    y: &S::Point,
    depth: usize,
) -> Result<DoubleOrbitPrefix<S::Point>> {
    let first = orbit_prefix(t, x, depth)?;
    let second = if x == y {
        first.clone()
    } else {
        orbit_prefix(t, y, depth)?
    };
    let diam_trunc = first.diam_trunc.max(second.diam_trunc).max(cross_diam(
        t.space(),
        &first.points,
        &second.points,
    ));
    Ok(DoubleOrbitPrefix {
        first,
        second,
        diam_trunc,
    })
}

/// Outcome of walking an orbit against a distance threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ProbeVerdict {
    /// No iterate reached the threshold; carries the truncated diameter.
    /// Evidence of boundedness, not a proof.
    BoundedSoFar { diam: f64, depth: usize },
    /// `d(x, Tᵏx)` reached the threshold at step `step`.
    ThresholdExceeded { step: usize, distance: f64 },
}

impl ProbeVerdict {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Self::BoundedSoFar { .. })
    }
}

/// `1e6 · (1 + d(x, Tx))`.
pub fn default_blowup_threshold<S: MetricSpace>(t: &SelfMap<S>, x: &S::Point) -> Result<f64> {
    check_base(t, x)?;
    let tx = map_step(t, x, 1)?;
    Ok(1e6 * (1.0 + t.space().dist(x, &tx)))
}

/// Walks `depth` steps of the orbit of `x`, stopping at the first iterate
/// whose distance from `x` reaches `blowup_threshold`.
pub fn boundedness_probe<S: MetricSpace>(
    t: &SelfMap<S>,
    x: &S::Point,
    depth: usize,
    blowup_threshold: f64,
) -> Result<ProbeVerdict> {
    if depth == 0 {
        return Err(Error::InvalidInput("probe depth must be at least 1".into()));
    }
    if !(blowup_threshold > 0.0) {
        return Err(Error::InvalidInput(
            "blowup threshold must be positive".into(),
        ));
    }
    check_base(t, x)?;
    let space = t.space();
    let mut points = Vec::with_capacity(depth + 1);
    points.push(x.clone());
    for step in 1..=depth {
        let next = map_step(t, &points[step - 1], step)?;
        let distance = space.dist(x, &next);
        if distance >= blowup_threshold {
            return Ok(ProbeVerdict::ThresholdExceeded { step, distance });
        }
        points.push(next);
    }
    Ok(ProbeVerdict::BoundedSoFar {
        diam: diam_unchecked(space, &points),
        depth,
    })
}

/// A-priori orbit bound for linear quasicontractions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiricReport {
    /// `d(x, Tx) / (1 − q)`.
    pub bound: f64,
    /// Diameter of the orbit prefix at the requested depth.
    pub observed: f64,
    pub holds: bool,
}

/// Compares the truncated orbit diameter against `d(x,Tx)/(1−q)`, the
/// bound obtained by rearranging `diam Oₙ(x) ≤ d(x,Tx) + q·diam Oₙ(x)`.
pub fn ciric_orbit_bound<S: MetricSpace>(
    t: &SelfMap<S>,
    x: &S::Point,
    q: f64,
    depth: usize,
) -> Result<CiricReport> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "q must lie in (0,1), got {q}"
        )));
    }
    let orbit = orbit_prefix(t, x, depth.max(1))?;
    let step = t.space().dist(&orbit.points[0], &orbit.points[1]);
    let bound = step / (1.0 - q);
    let observed = orbit.running_diam[depth];
    Ok(CiricReport {
        bound,
        observed,
        holds: observed <= bound + ORBIT_BOUND_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Euclidean;

    fn scalar(label: &str, f: fn(f64) -> f64) -> SelfMap<Euclidean> {
        SelfMap::scalar(label, Euclidean::line(), f)
    }

    fn flat(o: &OrbitPrefix<Vec<f64>>) -> Vec<f64> {
        o.points.iter().map(|p| p[0]).collect()
    }

    #[test]
    fn identity_orbit() {
        let id = scalar("id", |t| t);
        let o = orbit_prefix(&id, &vec![3.0], 5).unwrap();
        assert_eq!(o.points.len(), 6);
        assert!(o.points.iter().all(|p| p == &vec![3.0]));
        assert_eq!(o.diam_trunc, 0.0);
    }

    #[test]
    fn halving_orbit() {
        let o = orbit_prefix(&scalar("half", |t| t / 2.0), &vec![1.0], 3).unwrap();
        assert_eq!(flat(&o), vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(o.diam_trunc, 0.875);
        assert_eq!(o.running_diam, vec![0.0, 0.5, 0.75, 0.875]);
    }

    #[test]
    fn cosine_orbit() {
        let o = orbit_prefix(&scalar("cos", f64::cos), &vec![0.0], 2).unwrap();
        assert_eq!(flat(&o), vec![0.0, 1.0, 1f64.cos()]);
        assert_eq!(o.diam_trunc, 1.0);
    }

    #[test]
    fn divergence_carries_index() {
        let blow = scalar("blow", |t| if t > 2.0 { f64::INFINITY } else { t + 1.0 });
        let err = orbit_prefix(&blow, &vec![0.0], 10).unwrap_err();
        assert_eq!(err, Error::Divergence { index: 4 });
        assert_eq!(
            orbit_prefix(&blow, &vec![f64::NAN], 1).unwrap_err(),
            Error::Divergence { index: 0 }
        );
    }

    #[test]
    fn wrong_dimension_is_input_error() {
        let m = SelfMap::new("grow", Euclidean::line(), |x: &Vec<f64>| vec![x[0], x[0]]);
        assert!(matches!(
            orbit_prefix(&m, &vec![0.0], 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn double_orbit_examples() {
        let half = scalar("half", |t| t / 2.0);
        let single = orbit_prefix(&half, &vec![1.0], 4).unwrap();
        let same = double_orbit_prefix(&half, &vec![1.0], &vec![1.0], 4).unwrap();
        assert_eq!(same.diam_trunc, single.diam_trunc);

        let d = double_orbit_prefix(&half, &vec![0.0], &vec![1.0], 1).unwrap();
        assert_eq!(d.diam_trunc, 1.0);

        let cos = scalar("cos", f64::cos);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let d = double_orbit_prefix(&cos, &vec![0.0], &vec![half_pi], 3).unwrap();
        // oracle: exhaustive scan of the 8 iterates
        let mut pts = vec![];
        for start in [0.0, half_pi] {
            let mut v = start;
            for _ in 0..=3 {
                pts.push(v);
                v = v.cos();
            }
        }
        let mut oracle = 0.0f64;
        for a in &pts {
            for b in &pts {
                oracle = oracle.max((a - b).abs());
            }
        }
        assert_eq!(d.diam_trunc, oracle);
        assert!(d.diam_trunc >= d.first.diam_trunc && d.diam_trunc >= d.second.diam_trunc);
        assert_eq!(d.diam_at(cos.space(), 3), d.diam_trunc);
    }

    #[test]
    fn probe_examples() {
        let half = scalar("half", |t| t / 2.0);
        match boundedness_probe(&half, &vec![1.0], 100, 10.0).unwrap() {
            ProbeVerdict::BoundedSoFar { diam, .. } => assert!(diam <= 1.0),
            v => panic!("{v:?}"),
        }
        let walk = scalar("walk", |t| t + 1.0);
        assert_eq!(
            boundedness_probe(&walk, &vec![0.0], 100, 50.0).unwrap(),
            ProbeVerdict::ThresholdExceeded {
                step: 50,
                distance: 50.0
            }
        );
        let cos = scalar("cos", f64::cos);
        match boundedness_probe(&cos, &vec![0.0], DEFAULT_PROBE_DEPTH, 10.0).unwrap() {
            ProbeVerdict::BoundedSoFar { diam, .. } => assert!(diam <= 1.0 + 1e-12),
            v => panic!("{v:?}"),
        }
        assert!(boundedness_probe(&cos, &vec![0.0], 0, 10.0).is_err());
        assert_eq!(default_blowup_threshold(&walk, &vec![0.0]).unwrap(), 2e6);
    }

    #[test]
    fn ciric_examples() {
        let r = ciric_orbit_bound(&scalar("half", |t| t / 2.0), &vec![1.0], 0.5, 3).unwrap();
        assert_eq!((r.bound, r.observed, r.holds), (1.0, 0.875, true));

        let r = ciric_orbit_bound(&scalar("id", |t| t), &vec![2.0], 0.5, 10).unwrap();
        assert_eq!((r.bound, r.observed, r.holds), (0.0, 0.0, true));

        let r = ciric_orbit_bound(&scalar("flip", |t| -t / 2.0), &vec![1.0], 0.5, 20).unwrap();
        assert_eq!((r.bound, r.observed, r.holds), (3.0, 1.5, true));

        assert!(ciric_orbit_bound(&scalar("id", |t| t), &vec![0.0], 1.0, 3).is_err());
    }

    #[test]
    fn composite_map() {
        let half = scalar("half", |t| t / 2.0);
        assert_eq!(half.iterate(3).eval(&vec![8.0]), vec![1.0]);
        assert_eq!(half.iterate(0).eval(&vec![8.0]), vec![8.0]);
        assert_eq!(half.iterate(2).label(), "half^2");
    }

    #[test]
    fn csv_export() {
        let line = Euclidean::line();
        let o = orbit_prefix(&scalar("half", |t| t / 2.0), &vec![1.0], 2).unwrap();
        let mut buf = Vec::new();
        o.write_csv(&line, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,x0,distance_from_base,diam_trunc\n0,1,0,0\n1,0.5,0.5,0.5\n2,0.25,0.75,0.75\n"
        );
    }
}
