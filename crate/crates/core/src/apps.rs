//! Two applications of fixed-point iteration: Picard iteration for scalar
//! initial-value problems, and attractors of iterated function systems
//! under the Hutchinson operator.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::metric::{hausdorff_distance, FinitePointSet, GridFunction, Hausdorff};
use crate::orbit::SelfMap;

type Rhs = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// `y' = rhs(t, y)`, `y(t0) = y0` on `[t0, t1]`.
#[derive(Clone)]
pub struct IvpProblem {
    rhs: Arc<Rhs>,
    pub t0: f64,
    pub t1: f64,
    pub y0: f64,
    /// Lipschitz constant of `rhs` in `y`.
    pub lipschitz: f64,
    pub grid_nodes: usize,
}

impl fmt::Debug for IvpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpProblem")
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("y0", &self.y0)
            .field("lipschitz", &self.lipschitz)
            .field("grid_nodes", &self.grid_nodes)
            .finish()
    }
}

impl IvpProblem {
    /// Requires `L·(t1 − t0) < 1` so the integral operator contracts in the
    /// sup metric.
    pub fn new<F>(
        rhs: F,
        t0: f64,
        t1: f64,
        y0: f64,
        lipschitz: f64,
        grid_nodes: usize,
    ) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(t0 < t1) {
            return Err(Error::InvalidInput(format!(
                "need t0 < t1, got [{t0}, {t1}]"
            )));
        }
        if !(lipschitz > 0.0) {
            return Err(Error::InvalidParameter(
                "Lipschitz bound must be positive".into(),
            ));
        }
        let factor = lipschitz * (t1 - t0);
        if !(factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "L·(t1−t0) = {factor} must be below 1 for a contraction"
            )));
        }
        if grid_nodes < 2 {
            return Err(Error::InvalidInput("need at least 2 grid nodes".into()));
        }
        if !y0.is_finite() {
            return Err(Error::InvalidInput("y0 must be finite".into()));
        }
        Ok(Self {
            rhs: Arc::new(rhs),
            t0,
            t1,
            y0,
            lipschitz,
            grid_nodes,
        })
    }

    /// `L·(t1 − t0)`, the sup-metric contraction factor.
    pub fn contraction_factor(&self) -> f64 {
        self.lipschitz * (self.t1 - self.t0)
    }

    pub fn space(&self) -> GridFunction {
        GridFunction::new(self.t0, self.t1, self.grid_nodes).expect("validated at construction")
    }

    pub fn rhs(&self, t: f64, y: f64) -> f64 {
        (self.rhs)(t, y)
    }
}

/// `T(y)(t) = y0 + ∫_{t0}^{t} rhs(s, y(s)) ds`, with the integral taken by the
/// composite trapezoid rule on the grid.
pub fn picard_operator(problem: &IvpProblem) -> Result<SelfMap<GridFunction>> {
    let space = problem.space();
    let grid = space.grid();
    if grid
        .iter()
        .any(|&t| !problem.rhs(t, problem.y0).is_finite())
    {
        return Err(Error::NonFinite("rhs on the grid".into()));
    }
    let h = space.step();
    let p = problem.clone();
    Ok(SelfMap::new("picard", space, move |y: &Vec<f64>| {
        let f: Vec<f64> = grid.iter().zip(y).map(|(&t, &v)| p.rhs(t, v)).collect();
        let mut out = Vec::with_capacity(f.len());
        let mut acc = p.y0;
        out.push(acc);
        for w in f.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }))
}

/// CSV rows `t,y`.
pub fn write_ivp_csv(space: &GridFunction, y: &[f64], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "t,y")?;
    for (t, v) in space.grid().iter().zip(y) {
        writeln!(out, "{t},{v}")?;
    }
    Ok(())
}

/// `x ↦ A·x + b` with a caller-supplied Lipschitz ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMap {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub ratio: f64,
}

impl AffineMap {
    /// `x ↦ s·x + offset`.
    pub fn similarity(scale: f64, offset: Vec<f64>) -> Self {
        let d = offset.len();
        let matrix = (0..d)
            .map(|i| (0..d).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect();
        Self {
            matrix,
            offset,
            ratio: scale.abs(),
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        for (row, b) in self.matrix.iter().zip(&self.offset) {
            out.push(row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b);
        }
    }
}

/// A finite family of affine contractions on `ℝᵈ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IfsSystem {
    maps: Vec<AffineMap>,
    dim: usize,
    ratio: f64,
}

impl IfsSystem {
    pub fn new(maps: Vec<AffineMap>) -> Result<Self> {
        let dim = maps
            .first()
            .map(AffineMap::dim)
            .ok_or_else(|| Error::InvalidInput("IFS needs at least one map".into()))?;
        if dim == 0 {
            return Err(Error::InvalidInput("IFS maps need dimension ≥ 1".into()));
        }
        for (i, m) in maps.iter().enumerate() {
            if m.dim() != dim || m.matrix.len() != dim || m.matrix.iter().any(|r| r.len() != dim) {
                return Err(Error::InvalidInput(format!(
                    "IFS map {i} is not {dim}×{dim} affine"
                )));
            }
            if !(m.ratio > 0.0 && m.ratio < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "IFS map {i} ratio {} not in (0,1)",
                    m.ratio
                )));
            }
        }
        let ratio = maps.iter().map(|m| m.ratio).fold(0.0, f64::max);
        Ok(Self { maps, dim, ratio })
    }

    /// Three half-scale copies towards the vertices of the unit triangle.
    pub fn sierpinski() -> Self {
        let h = 3f64.sqrt() / 2.0;
        Self::new(vec![
            AffineMap::similarity(0.5, vec![0.0, 0.0]),
            AffineMap::similarity(0.5, vec![0.5, 0.0]),
            AffineMap::similarity(0.5, vec![0.25, 0.5 * h]),
        ])
        .expect("static system")
    }

    /// `x/3` and `x/3 + 2/3` on the line.
    pub fn cantor() -> Self {
        Self::new(vec![
            AffineMap::similarity(1.0 / 3.0, vec![0.0]),
            AffineMap::similarity(1.0 / 3.0, vec![2.0 / 3.0]),
        ])
        .expect("static system")
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest map ratio; the Hutchinson operator's contraction factor.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Sorts points lexicographically and drops exact duplicates. With a pitch,
/// also keeps only the first point of each lattice cell. The flag reports
/// whether any distinct point was dropped.
fn canonicalize(dim: usize, coords: Vec<f64>, pitch: Option<f64>) -> (FinitePointSet, bool) {
    let mut pts: Vec<&[f64]> = coords.chunks_exact(dim).collect();
    pts.sort_by(|a, b| lex_cmp(a, b));
    pts.dedup_by(|a, b| a == b);
    let before = pts.len();
    if let Some(pitch) = pitch {
        let mut cells = HashSet::with_capacity(pts.len());
        pts.retain(|p| {
            let cell: Vec<i64> = p.iter().map(|c| (c / pitch).floor() as i64).collect();
            cells.insert(cell)
        });
    }
    let merged = pts.len() < before;
    let flat = pts.concat();
    (
        FinitePointSet::from_flat(dim, flat).expect("non-empty input"),
        merged,
    )
}

fn hutchinson_raw(sys: &IfsSystem, s: &FinitePointSet) -> Vec<f64> {
    let n = s.len();
    let chunks = exec::map_range(sys.maps.len() * n, |k| {
        let mut out = Vec::with_capacity(sys.dim);
        sys.maps[k / n].apply_into(s.point(k % n), &mut out);
        out
    });
    chunks.concat()
}

/// `⋃ᵢ wᵢ(S)` as a lexicographically sorted set.
pub fn hutchinson_step(sys: &IfsSystem, s: &FinitePointSet) -> Result<FinitePointSet> {
    if s.dim() != sys.dim {
        return Err(Error::DimensionMismatch {
            expected: sys.dim,
            found: s.dim(),
        });
    }
    Ok(canonicalize(sys.dim, hutchinson_raw(sys, s), None).0)
}

/// The Hutchinson operator as a self-map of the Hausdorff space.
pub fn hutchinson_map(sys: &IfsSystem) -> SelfMap<Hausdorff> {
    let space = Hausdorff::new(sys.dim).expect("dimension ≥ 1");
    let sys = sys.clone();
    SelfMap::new("hutchinson", space, move |s: &FinitePointSet| {
        canonicalize(sys.dim, hutchinson_raw(&sys, s), None).0
    })
}

/// Smallest `n` with `qⁿ·d01/(1−q) < eps`.
pub fn a_priori_horizon(q: f64, d01: f64, eps: f64) -> usize {
    let mut n = 0;
    let mut bound = d01 / (1.0 - q);
    while bound >= eps {
        bound *= q;
        n += 1;
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorCertificate {
    pub depth: usize,
    pub q: f64,
    /// Upper bound on the Hausdorff distance to the true attractor.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorResult {
    pub points: FinitePointSet,
    pub certificate: AttractorCertificate,
    /// `d(S₀, S₁)`.
    pub initial_step: f64,
    /// `hₖ = d(Sₖ, Sₖ₊₁)` for `k ≤ depth`.
    pub step_distances: Vec<f64>,
    /// Steps where lattice deduplication merged distinct points.
    pub merged_steps: usize,
}

impl AttractorResult {
    /// CSV of point coordinates.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let names: Vec<String> = (0..self.points.dim()).map(|i| format!("x{i}")).collect();
        writeln!(out, "{}", names.join(","))?;
        for p in self.points.iter() {
            let c: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", c.join(","))?;
        }
        Ok(())
    }
}

/// Iterates the Hutchinson operator from `{seed_point}` until the certified
/// distance to the attractor drops below `eps`.
///
/// Each step keeps one point per lattice cell of pitch `eps/10`. Dropping the
/// others moves the set by at most the cell diameter `δ`, and the bound
/// `eₖ₊₁ = q·eₖ + δₖ` (with `δₖ = 0` when nothing merged) absorbs that, starting
/// from `e₀ = (d(S₀,S₁) + δ₀)/(1−q)`. Without merges this is `qⁿ·d(S₀,S₁)/(1−q)`.
pub fn attractor(
    sys: &IfsSystem,
    seed_point: &[f64],
    eps: f64,
    max_depth: usize,
) -> Result<AttractorResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if seed_point.len() != sys.dim {
        return Err(Error::DimensionMismatch {
            expected: sys.dim,
            found: seed_point.len(),
        });
    }
    if seed_point.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("seed point must be finite".into()));
    }
    let q = sys.ratio;
    let pitch = eps / 10.0;
    let cell_diam = pitch * (sys.dim as f64).sqrt();
    let step = |s: &FinitePointSet| -> (FinitePointSet, f64) {
        let (next, merged) = canonicalize(sys.dim, hutchinson_raw(sys, s), Some(pitch));
        (next, if merged { cell_diam } else { 0.0 })
    };

    let mut current = FinitePointSet::singleton(seed_point.to_vec())?;
    let (mut next, mut delta_next) = step(&current);
    let initial_step = hausdorff_distance(&current, &next)?;
    let mut bound = (initial_step + delta_next) / (1.0 - q);
    let mut step_distances = vec![initial_step];
    let mut merged_steps = 0;
    let mut depth = 0;

    while bound >= eps {
        if depth == max_depth {
            return Err(Error::NotConverged {
                iterations: depth,
                bound,
            });
        }
        bound = q * bound + delta_next;
        if delta_next > 0.0 {
            merged_steps += 1;
        }
        current = next;
        (next, delta_next) = step(&current);
        step_distances.push(hausdorff_distance(&current, &next)?);
        depth += 1;
    }
    Ok(AttractorResult {
        points: current,
        certificate: AttractorCertificate { depth, q, bound },
        initial_step,
        step_distances,
        merged_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolveConfig};

    fn set(points: &[&[f64]]) -> FinitePointSet {
        FinitePointSet::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn zero_rhs_gives_constant() {
        let p = IvpProblem::new(|_, _| 0.0, 0.0, 1.0, 1.0, 0.5, 9).unwrap();
        let t = picard_operator(&p).unwrap();
        let y = t.eval(&vec![3.0; 9]);
        assert_eq!(y, vec![1.0; 9]);
        let r = solve(&t, &vec![0.0; 9], &SolveConfig::new(1e-12)).unwrap();
        assert_eq!(r.fixed_point, vec![1.0; 9]);
    }

    #[test]
    fn exponential_matches_trapezoid_recurrence() {
        let p = IvpProblem::new(|_, y| y, 0.0, 0.5, 1.0, 1.0, 65).unwrap();
        let t = picard_operator(&p).unwrap();
        let r = solve(&t, &vec![1.0; 65], &SolveConfig::new(1e-12)).unwrap();
        // the discrete fixed point solves y_{i+1} = y_i (1 + h/2)/(1 − h/2)
        let h: f64 = 0.5 / 64.0;
        let growth = (1.0 + h / 2.0) / (1.0 - h / 2.0);
        for (i, y) in r.fixed_point.iter().enumerate() {
            assert!((y - growth.powi(i as i32)).abs() < 1e-10);
        }
    }

    #[test]
    fn ivp_validation() {
        assert!(IvpProblem::new(|_, y| y, 0.0, 1.0, 1.0, 1.0, 9).is_err());
        assert!(IvpProblem::new(|_, y| y, 1.0, 0.0, 1.0, 0.5, 9).is_err());
        assert!(IvpProblem::new(|_, y| y, 0.0, 1.0, 1.0, 0.5, 1).is_err());
        let p = IvpProblem::new(|t, _| 1.0 / t, 0.0, 0.5, 1.0, 1.0, 9).unwrap();
        assert!(matches!(picard_operator(&p), Err(Error::NonFinite(_))));
    }

    #[test]
    fn single_map_step() {
        let sys = IfsSystem::new(vec![AffineMap::similarity(0.5, vec![0.0])]).unwrap();
        assert_eq!(
            hutchinson_step(&sys, &set(&[&[1.0]])).unwrap(),
            set(&[&[0.5]])
        );
        assert!(hutchinson_step(&sys, &set(&[&[1.0, 2.0]])).is_err());
    }

    #[test]
    fn sierpinski_triples() {
        let sys = IfsSystem::sierpinski();
        let mut s = set(&[&[0.0, 0.0]]);
        for n in 1..=5 {
            s = hutchinson_step(&sys, &s).unwrap();
            assert_eq!(s.len(), 3usize.pow(n));
        }
        let sorted = s.iter().collect::<Vec<_>>();
        assert!(sorted.windows(2).all(|w| lex_cmp(w[0], w[1]).is_lt()));
    }

    #[test]
    fn ifs_validation() {
        assert!(IfsSystem::new(vec![]).is_err());
        assert!(IfsSystem::new(vec![AffineMap::similarity(1.0, vec![0.0])]).is_err());
        let bad = AffineMap {
            matrix: vec![vec![0.5]],
            offset: vec![0.0, 0.0],
            ratio: 0.5,
        };
        assert!(IfsSystem::new(vec![bad]).is_err());
    }

    #[test]
    fn single_contraction_attractor() {
        let sys = IfsSystem::new(vec![AffineMap::similarity(0.5, vec![0.0])]).unwrap();
        let a = attractor(&sys, &[1.0], 1e-3, 64).unwrap();
        assert!(a.certificate.bound < 1e-3);
        assert_eq!(a.points.len(), 1);
        assert!(a.points.point(0)[0].abs() <= a.certificate.bound);
        assert_eq!(a.certificate.depth, a_priori_horizon(0.5, 0.5, 1e-3));
    }

    #[test]
    fn attractor_errors() {
        let sys = IfsSystem::cantor();
        assert!(matches!(
            attractor(&sys, &[0.5], 1e-9, 3),
            Err(Error::NotConverged { iterations: 3, .. })
        ));
        assert!(attractor(&sys, &[0.5, 0.0], 1e-3, 10).is_err());
        assert!(attractor(&sys, &[0.5], 0.0, 10).is_err());
    }

    #[test]
    fn coarse_eps_merges_and_widens_bound() {
        // pitch 0.05 forces distinct Cantor points into shared cells
        let sys = IfsSystem::cantor();
        let a = attractor(&sys, &[0.5], 0.5, 64).unwrap();
        let fine = attractor(&sys, &[0.5], 1e-3, 64).unwrap();
        assert_eq!(fine.merged_steps, 0);
        assert!(a.certificate.bound < 0.5);
        assert!(a.points.len() <= 1usize << a.certificate.depth);
    }

    #[test]
    fn csv_exports() {
        let sys = IfsSystem::cantor();
        let a = attractor(&sys, &[0.5], 0.1, 64).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0\n"));
        assert_eq!(text.lines().count(), a.points.len() + 1);

        let space = GridFunction::new(0.0, 1.0, 3).unwrap();
        let mut buf = Vec::new();
        write_ivp_csv(&space, &[1.0, 2.0, 3.0], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,y\n0,1\n0.5,2\n1,3\n");
    }
}
