//! Metric spaces and the three concrete instances used by the toolkit:
//! Euclidean `ℝᵈ`, grid-sampled functions under the sup metric, and
//! non-empty finite point sets under the Hausdorff metric.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec;

/// Coordinates closer than this are treated as the same point.
pub const POINT_TOLERANCE: f64 = 1e-12;

/// Slack used when sampling the metric axioms.
pub const AXIOM_TOLERANCE: f64 = 1e-12;

/// A distance structure over an owned point type.
///
/// `dist` may assume both arguments passed [`MetricSpace::validate`]; the
/// checked entry point is [`MetricSpace::distance`].
pub trait MetricSpace: Send + Sync {
    type Point: Clone + fmt::Debug + PartialEq + Send + Sync + Serialize + 'static;

    fn label(&self) -> &str;

    /// Rejects points of the wrong shape (`DimensionMismatch`) and points
    /// with non-finite coordinates (`NonFinite`).
    fn validate(&self, p: &Self::Point) -> Result<()>;

    fn dist(&self, x: &Self::Point, y: &Self::Point) -> f64;

    /// Draws a random point, if the space knows how to.
    fn sample(&self, _rng: &mut dyn RngCore) -> Option<Self::Point> {
        None
    }

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> Result<f64> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.dist(x, y))
    }

    fn coincide(&self, x: &Self::Point, y: &Self::Point) -> bool {
        self.dist(x, y) <= POINT_TOLERANCE
    }
}

fn check_vector(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("point coordinates".into()));
    }
    Ok(())
}

fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn sample_box(rng: &mut dyn RngCore, (lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// `ℝᵈ` with the Euclidean norm. Samples uniformly from a cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Euclidean {
    dim: usize,
    sample_box: (f64, f64),
    label: String,
}

impl Euclidean {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "euclidean dimension must be ≥ 1".into(),
            ));
        }
        Ok(Self {
            dim,
            sample_box: (-1.0, 1.0),
            label: format!("euclidean({dim})"),
        })
    }

    /// The real line.
    pub fn line() -> Self {
        Self::new(1).expect("dimension 1")
    }

    /// Sample uniformly from `[lo, hi]ᵈ`.
    pub fn with_sample_box(mut self, lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty sample box");
        self.sample_box = (lo, hi);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_box(&self) -> (f64, f64) {
        self.sample_box
    }
}

impl MetricSpace for Euclidean {
    type Point = Vec<f64>;

    fn label(&self) -> &str {
        &self.label
    }

    fn validate(&self, p: &Vec<f64>) -> Result<()> {
        check_vector(self.dim, p)
    }

    fn dist(&self, x: &Vec<f64>, y: &Vec<f64>) -> f64 {
        if self.dim == 1 {
            (x[0] - y[0]).abs()
        } else {
            euclid(x, y)
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        Some(sample_box(rng, self.sample_box, self.dim))
    }
}

/// Real functions on `[a, b]` represented by their values at `nodes` equally
/// spaced grid points, with the sup metric taken over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    a: f64,
    b: f64,
    nodes: usize,
    sample_box: (f64, f64),
    label: String,
}

impl GridFunction {
    pub fn new(a: f64, b: f64, nodes: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid interval [{a}, {b}] is empty"
            )));
        }
        if nodes < 2 {
            return Err(Error::InvalidInput("grid needs at least 2 nodes".into()));
        }
        Ok(Self {
            a,
            b,
            nodes,
            sample_box: (-1.0, 1.0),
            label: format!("grid_function([{a}, {b}], {nodes})"),
        })
    }

    pub fn with_sample_box(mut self, lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty sample box");
        self.sample_box = (lo, hi);
        self
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.nodes - 1) as f64
    }

    /// Abscissae `t₀ = a, …, t_{n−1} = b`.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.nodes)
            .map(|i| {
                if i == self.nodes - 1 {
                    self.b
                } else {
                    self.a + h * i as f64
                }
            })
            .collect()
    }

    /// Samples `f` on the grid.
    pub fn tabulate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.grid().into_iter().map(f).collect()
    }
}

impl MetricSpace for GridFunction {
    type Point = Vec<f64>;

    fn label(&self) -> &str {
        &self.label
    }

    fn validate(&self, p: &Vec<f64>) -> Result<()> {
        check_vector(self.nodes, p)
    }

    fn dist(&self, x: &Vec<f64>, y: &Vec<f64>) -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        Some(sample_box(rng, self.sample_box, self.nodes))
    }
}

/// A non-empty finite set of vectors of common dimension, stored flat.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>")]
pub struct FinitePointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl FinitePointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("point set must be non-empty".into()))?;
        if dim == 0 {
            return Err(Error::InvalidInput("points must have dimension ≥ 1".into()));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    pub fn singleton(point: Vec<f64>) -> Result<Self> {
        Self::new(vec![point])
    }

    /// `coords.len()` must be a positive multiple of `dim`.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl TryFrom<Vec<Vec<f64>>> for FinitePointSet {
    type Error = Error;
    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(points)
    }
}

impl Serialize for FinitePointSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for p in self.iter() {
            seq.serialize_element(p)?;
        }
        seq.end()
    }
}

fn directed_hausdorff(a: &FinitePointSet, b: &FinitePointSet) -> f64 {
    exec::max_range(a.len(), |i| {
        let p = a.point(i);
        b.iter().map(|q| euclid(p, q)).fold(f64::INFINITY, f64::min)
    })
}

/// `max(max_{a∈A} min_{b∈B} ‖a−b‖, max_{b∈B} min_{a∈A} ‖a−b‖)`.
pub fn hausdorff_distance(a: &FinitePointSet, b: &FinitePointSet) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// Non-empty finite subsets of `ℝᵈ` under the Hausdorff metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Hausdorff {
    ambient_dim: usize,
    sample_box: (f64, f64),
    max_sample_size: usize,
    label: String,
}

impl Hausdorff {
    pub fn new(ambient_dim: usize) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidInput("ambient dimension must be ≥ 1".into()));
        }
        Ok(Self {
            ambient_dim,
            sample_box: (-1.0, 1.0),
            max_sample_size: 8,
            label: format!("hausdorff({ambient_dim})"),
        })
    }

    pub fn with_sample_box(mut self, lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty sample box");
        self.sample_box = (lo, hi);
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }
}

impl MetricSpace for Hausdorff {
    type Point = FinitePointSet;

    fn label(&self) -> &str {
        &self.label
    }

    fn validate(&self, p: &FinitePointSet) -> Result<()> {
        if p.dim != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: p.dim,
            });
        }
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point set coordinates".into()));
        }
        Ok(())
    }

    fn dist(&self, x: &FinitePointSet, y: &FinitePointSet) -> f64 {
        directed_hausdorff(x, y).max(directed_hausdorff(y, x))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<FinitePointSet> {
        let n = rng.gen_range(1..=self.max_sample_size);
        let coords = sample_box(rng, self.sample_box, n * self.ambient_dim);
        Some(FinitePointSet {
            dim: self.ambient_dim,
            coords,
        })
    }
}

/// Largest pairwise distance; 0 for a singleton.
pub fn diam<S: MetricSpace>(space: &S, points: &[S::Point]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "diameter of an empty collection".into(),
        ));
    }
    for p in points {
        space.validate(p)?;
    }
    Ok(diam_unchecked(space, points))
}

pub(crate) fn diam_unchecked<S: MetricSpace>(space: &S, points: &[S::Point]) -> f64 {
    exec::max_range(points.len(), |i| {
        points[i + 1..]
            .iter()
            .map(|q| space.dist(&points[i], q))
            .fold(0.0, f64::max)
    })
}

/// A metric axiom that failed on a sampled triple.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum MetricViolation {
    Identity {
        trial: usize,
        value: f64,
    },
    Negative {
        trial: usize,
        value: f64,
    },
    Symmetry {
        trial: usize,
        forward: f64,
        backward: f64,
    },
    Triangle {
        trial: usize,
        direct: f64,
        detour: f64,
    },
}

/// Samples `sample_count` triples with a seeded generator and tests
/// identity, nonnegativity, symmetry and the triangle inequality.
pub fn check_metric_axioms<S: MetricSpace>(
    space: &S,
    sample_count: usize,
    seed: u64,
) -> Result<Vec<MetricViolation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let mut draw = || {
            space
                .sample(&mut rng)
                .ok_or_else(|| Error::Unsupported(format!("{} has no sampler", space.label())))
        };
        triples.push((draw()?, draw()?, draw()?));
    }

    let per_trial = exec::map_range(triples.len(), |trial| {
        let (x, y, z) = &triples[trial];
        let mut found = Vec::new();
        let xx = space.dist(x, x);
        if xx.abs() > AXIOM_TOLERANCE {
            found.push(MetricViolation::Identity { trial, value: xx });
        }
        let xy = space.dist(x, y);
        let yx = space.dist(y, x);
        if xy < -AXIOM_TOLERANCE {
            found.push(MetricViolation::Negative { trial, value: xy });
        }
        if (xy - yx).abs() > AXIOM_TOLERANCE {
            found.push(MetricViolation::Symmetry {
                trial,
                forward: xy,
                backward: yx,
            });
        }
        let xz = space.dist(x, z);
        let detour = xy + space.dist(y, z);
        if xz > detour + AXIOM_TOLERANCE {
            found.push(MetricViolation::Triangle {
                trial,
                direct: xz,
                detour,
            });
        }
        found
    });
    Ok(per_trial.into_iter().flatten().collect())
}
