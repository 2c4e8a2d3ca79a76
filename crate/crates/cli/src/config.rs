//! Problem configuration files.

use std::path::Path;

use serde::Deserialize;

use quasifix::apps::{picard_operator, AffineMap, IfsSystem, IvpProblem};
use quasifix::classify::ContractionClass;
use quasifix::comparison::{ComparisonFunction, PhiSpec};
use quasifix::gallery::line_function;
use quasifix::metric::{Euclidean, FinitePointSet, GridFunction, Hausdorff};
use quasifix::orbit::SelfMap;
use quasifix::{Error, Result};

/// Schema version written into every report.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub space: SpaceSpec,
    pub map: MapSpec,
    #[serde(default)]
    pub phi: Option<PhiSpec>,
    pub task: TaskSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Euclidean {
        #[serde(default = "one")]
        dim: usize,
        #[serde(default)]
        sample_box: Option<[f64; 2]>,
    },
    GridFunction {
        a: f64,
        b: f64,
        nodes: usize,
        #[serde(default)]
        sample_box: Option<[f64; 2]>,
    },
    Hausdorff {
        #[serde(default = "one", rename = "ambient_dim", alias = "dim")]
        dim: usize,
        #[serde(default)]
        sample_box: Option<[f64; 2]>,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// A gallery map: `halving`, `cos`, `identity`, `arith_walk`,
    /// `kannan_like`, `harmonic` on the line; `sierpinski`, `cantor` on sets.
    Builtin { name: String },
    /// `x ↦ A·x + b` on `ℝᵈ`.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// `Σ cᵢ xⁱ`, optionally clamped to `[lo, hi]`.
    Polynomial {
        coefficients: Vec<f64>,
        #[serde(default)]
        clamp: Option<[f64; 2]>,
    },
    /// Linear interpolation through sorted `[x, y]` nodes, constant outside.
    Table { nodes: Vec<[f64; 2]> },
    /// `pieces[i]` applies on `[breakpoints[i-1], breakpoints[i])`.
    Piecewise {
        breakpoints: Vec<f64>,
        pieces: Vec<MapSpec>,
    },
    /// Hutchinson operator of affine maps.
    Ifs { maps: Vec<AffineMap> },
    /// Picard operator of `y' = rhs(t, y)`, `y(a) = y0` on the grid space.
    Picard {
        rhs: RhsSpec,
        y0: f64,
        lipschitz: f64,
    },
}

/// `rhs(t, y) = Σ cᵢ yⁱ + Σ dⱼ tʲ`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsSpec {
    #[serde(default)]
    pub y_coefficients: Vec<f64>,
    #[serde(default)]
    pub t_coefficients: Vec<f64>,
}

/// A point: a number (line or constant function), a vector, or a finite set.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Vector(Vec<f64>),
    Set(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    Banach,
    NonlinearContraction,
    CiricLinear,
    StrongQuasi,
    WeakQuasi,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Classify {
        class: ClassKind,
        #[serde(default)]
        q: Option<f64>,
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_depth")]
        depth: usize,
        #[serde(default)]
        witnesses: Vec<[PointSpec; 2]>,
    },
    Solve {
        start: PointSpec,
        eps: f64,
        #[serde(default)]
        max_iter: Option<usize>,
        /// Extra starts for a uniqueness check.
        #[serde(default)]
        starts: Vec<PointSpec>,
    },
    Probe {
        start: PointSpec,
        #[serde(default = "default_probe_depth")]
        depth: usize,
        #[serde(default)]
        threshold: Option<f64>,
        /// Also check the linear quasicontraction orbit bound with this `q`.
        #[serde(default)]
        q: Option<f64>,
    },
    Attractor {
        seed_point: Vec<f64>,
        eps: f64,
        #[serde(default = "default_max_depth")]
        max_depth: usize,
    },
    Picard {
        eps: f64,
        #[serde(default)]
        max_iter: Option<usize>,
    },
}

fn default_pairs() -> usize {
    quasifix::classify::DEFAULT_PAIR_COUNT
}

fn default_depth() -> usize {
    quasifix::orbit::DEFAULT_CLASSIFY_DEPTH
}

fn default_probe_depth() -> usize {
    quasifix::orbit::DEFAULT_PROBE_DEPTH
}

fn default_max_depth() -> usize {
    64
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Classify { .. } => "classify",
            Self::Solve { .. } => "solve",
            Self::Probe { .. } => "probe",
            Self::Attractor { .. } => "attractor",
            Self::Picard { .. } => "picard",
        }
    }
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_points")]
    pub points: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            report: default_report(),
            trace: default_trace(),
            points: default_points(),
        }
    }
}

fn default_report() -> String {
    "report.json".into()
}

fn default_trace() -> String {
    "trace.csv".into()
}

fn default_points() -> String {
    "points.csv".into()
}

/// Reads and parses a config; errors carry the path and the parser's
/// line/column diagnostic.
pub fn load(path: &Path) -> std::result::Result<ProblemConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

type Scalar = Box<dyn Fn(f64) -> f64 + Send + Sync>;

fn scalar_fn(spec: &MapSpec) -> Result<Scalar> {
    match spec {
        MapSpec::Builtin { name } => {
            let f = line_function(name).ok_or_else(|| {
                Error::InvalidInput(format!("unknown scalar builtin map '{name}'"))
            })?;
            Ok(Box::new(f))
        }
        MapSpec::Polynomial {
            coefficients,
            clamp,
        } => {
            if coefficients.is_empty() {
                return Err(Error::InvalidInput("polynomial needs coefficients".into()));
            }
            if let Some([lo, hi]) = clamp {
                if !(lo <= hi) {
                    return Err(Error::InvalidInput(format!("clamp [{lo}, {hi}] is empty")));
                }
            }
            let c = coefficients.clone();
            let clamp = *clamp;
            Ok(Box::new(move |x| {
                let v = c.iter().rev().fold(0.0, |acc, a| acc * x + a);
                match clamp {
                    Some([lo, hi]) => v.clamp(lo, hi),
                    None => v,
                }
            }))
        }
        MapSpec::Table { nodes } => {
            if nodes.is_empty() {
                return Err(Error::InvalidInput("table needs at least one node".into()));
            }
            if nodes.windows(2).any(|w| !(w[0][0] < w[1][0])) {
                return Err(Error::InvalidInput(
                    "table nodes must be strictly increasing in x".into(),
                ));
            }
            let nodes = nodes.clone();
            Ok(Box::new(move |x| interpolate(&nodes, x)))
        }
        MapSpec::Piecewise {
            breakpoints,
            pieces,
        } => {
            if pieces.len() != breakpoints.len() + 1 {
                return Err(Error::InvalidInput(format!(
                    "piecewise map needs {} pieces for {} breakpoints, got {}",
                    breakpoints.len() + 1,
                    breakpoints.len(),
                    pieces.len()
                )));
            }
            if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidInput(
                    "breakpoints must be strictly increasing".into(),
                ));
            }
            let parts = pieces.iter().map(scalar_fn).collect::<Result<Vec<_>>>()?;
            let breaks = breakpoints.clone();
            Ok(Box::new(move |x| {
                parts[breaks.partition_point(|b| *b <= x)](x)
            }))
        }
        MapSpec::Affine { matrix, offset } if matrix.len() == 1 && offset.len() == 1 => {
            let (a, b) = (matrix[0].first().copied().unwrap_or(f64::NAN), offset[0]);
            Ok(Box::new(move |x| a * x + b))
        }
        other => Err(Error::InvalidInput(format!(
            "{} is not a scalar map",
            family(other)
        ))),
    }
}

fn interpolate(nodes: &[[f64; 2]], x: f64) -> f64 {
    let i = nodes.partition_point(|n| n[0] <= x);
    if i == 0 {
        return nodes[0][1];
    }
    if i == nodes.len() {
        return nodes[i - 1][1];
    }
    let ([x0, y0], [x1, y1]) = (nodes[i - 1], nodes[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

pub fn family(spec: &MapSpec) -> &'static str {
    match spec {
        MapSpec::Builtin { .. } => "builtin",
        MapSpec::Affine { .. } => "affine",
        MapSpec::Polynomial { .. } => "polynomial",
        MapSpec::Table { .. } => "table",
        MapSpec::Piecewise { .. } => "piecewise",
        MapSpec::Ifs { .. } => "ifs",
        MapSpec::Picard { .. } => "picard",
    }
}

fn label(spec: &MapSpec) -> String {
    match spec {
        MapSpec::Builtin { name } => name.clone(),
        other => family(other).to_string(),
    }
}

pub fn euclidean(dim: usize, sample_box: Option<[f64; 2]>) -> Result<Euclidean> {
    let space = Euclidean::new(dim)?;
    Ok(match sample_box {
        Some([lo, hi]) => space.with_sample_box(lo, hi),
        None => space,
    })
}

pub fn euclidean_map(spec: &MapSpec, space: Euclidean) -> Result<SelfMap<Euclidean>> {
    let dim = space.dim();
    if let MapSpec::Affine { matrix, offset } = spec {
        if offset.len() != dim || matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: offset.len(),
            });
        }
        if dim > 1 {
            let (a, b) = (matrix.clone(), offset.clone());
            return Ok(SelfMap::new("affine", space, move |x: &Vec<f64>| {
                a.iter()
                    .zip(&b)
                    .map(|(row, bi)| row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() + bi)
                    .collect()
            }));
        }
    }
    if dim != 1 {
        return Err(Error::InvalidInput(format!(
            "{} maps act on the line; space has dimension {dim}",
            family(spec)
        )));
    }
    let f = scalar_fn(spec)?;
    Ok(SelfMap::scalar(label(spec), space, f))
}

pub fn ifs_system(spec: &MapSpec) -> Result<IfsSystem> {
    match spec {
        MapSpec::Builtin { name } if name == "sierpinski" => Ok(IfsSystem::sierpinski()),
        MapSpec::Builtin { name } if name == "cantor" => Ok(IfsSystem::cantor()),
        MapSpec::Ifs { maps } => IfsSystem::new(maps.clone()),
        other => Err(Error::InvalidInput(format!(
            "the hausdorff space needs an 'ifs' map or builtin sierpinski/cantor, got {}",
            label(other)
        ))),
    }
}

pub fn hausdorff(dim: usize, sample_box: Option<[f64; 2]>) -> Result<Hausdorff> {
    let space = Hausdorff::new(dim)?;
    Ok(match sample_box {
        Some([lo, hi]) => space.with_sample_box(lo, hi),
        None => space,
    })
}

pub fn ivp_problem(spec: &MapSpec, a: f64, b: f64, nodes: usize) -> Result<IvpProblem> {
    match spec {
        MapSpec::Picard { rhs, y0, lipschitz } => {
            let (cy, ct) = (rhs.y_coefficients.clone(), rhs.t_coefficients.clone());
            let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
            IvpProblem::new(
                move |t, y| poly(&cy, y) + poly(&ct, t),
                a,
                b,
                *y0,
                *lipschitz,
                nodes,
            )
        }
        other => Err(Error::InvalidInput(format!(
            "the grid_function space needs a 'picard' map, got {}",
            label(other)
        ))),
    }
}

pub fn grid_map(
    spec: &MapSpec,
    a: f64,
    b: f64,
    nodes: usize,
    sample_box: Option<[f64; 2]>,
) -> Result<(IvpProblem, SelfMap<GridFunction>)> {
    let problem = ivp_problem(spec, a, b, nodes)?;
    let op = picard_operator(&problem)?;
    let space = match sample_box {
        Some([lo, hi]) => problem.space().with_sample_box(lo, hi),
        None => problem.space(),
    };
    let inner = op.clone();
    let map = SelfMap::new(op.label().to_string(), space, move |y: &Vec<f64>| {
        inner.eval(y)
    });
    Ok((problem, map))
}

pub fn vector_point(spec: &PointSpec, dim: usize, broadcast: bool) -> Result<Vec<f64>> {
    match spec {
        PointSpec::Scalar(x) if dim == 1 || broadcast => Ok(vec![*x; dim]),
        PointSpec::Scalar(_) => Err(Error::DimensionMismatch {
            expected: dim,
            found: 1,
        }),
        PointSpec::Vector(v) => Ok(v.clone()),
        PointSpec::Set(_) => Err(Error::InvalidInput(
            "expected a vector, got a point set".into(),
        )),
    }
}

pub fn set_point(spec: &PointSpec, dim: usize) -> Result<FinitePointSet> {
    match spec {
        PointSpec::Set(points) => FinitePointSet::new(points.clone()),
        PointSpec::Vector(v) if v.len() == dim => FinitePointSet::singleton(v.clone()),
        PointSpec::Scalar(x) if dim == 1 => FinitePointSet::singleton(vec![*x]),
        _ => Err(Error::InvalidInput(
            "expected a point set such as [[0.0, 0.0]]".into(),
        )),
    }
}

pub fn phi(config: &ProblemConfig) -> Result<Option<ComparisonFunction>> {
    config
        .phi
        .as_ref()
        .map(ComparisonFunction::try_from)
        .transpose()
}

pub fn contraction_class(
    kind: ClassKind,
    q: Option<f64>,
    phi: Option<&ComparisonFunction>,
) -> Result<ContractionClass> {
    let need_q =
        || q.ok_or_else(|| Error::InvalidInput("this class needs \"q\" in the task".into()));
    let need_phi = || {
        phi.cloned()
            .ok_or_else(|| Error::InvalidInput("this class needs a top-level \"phi\"".into()))
    };
    Ok(match kind {
        ClassKind::Banach => ContractionClass::Banach(need_q()?),
        ClassKind::CiricLinear => ContractionClass::CiricLinear(need_q()?),
        ClassKind::NonlinearContraction => ContractionClass::NonlinearContraction(need_phi()?),
        ClassKind::StrongQuasi => ContractionClass::StrongQuasi(need_phi()?),
        ClassKind::WeakQuasi => ContractionClass::WeakQuasi(need_phi()?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> std::result::Result<ProblemConfig, serde_json::Error> {
        serde_json::from_str(json)
    }

    #[test]
    fn minimal_solve_config() {
        let c = parse(
            r#"{"space":{"kind":"euclidean"},"map":{"family":"builtin","name":"cos"},
                "task":{"kind":"solve","start":0,"eps":1e-9}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.output.report, "report.json");
        assert!(matches!(c.task, TaskSpec::Solve { .. }));
    }

    #[test]
    fn missing_space_is_named() {
        let err = parse(r#"{"map":{"family":"builtin","name":"cos"},"task":{"kind":"solve","start":0,"eps":1}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("missing field `space`"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = parse(
            r#"{"space":{"kind":"euclidean"},"map":{"family":"builtin","name":"cos"},
                "task":{"kind":"solve","start":0,"eps":1},"colour":"red"}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown field `colour`"), "{err}");
    }

    #[test]
    fn polynomial_clamp_and_table() {
        let p = scalar_fn(&MapSpec::Polynomial {
            coefficients: vec![1.0, 0.0, -1.0],
            clamp: Some([0.0, 0.5]),
        })
        .unwrap();
        assert_eq!(p(0.0), 0.5);
        assert_eq!(p(0.9), 1.0 - 0.81);
        assert_eq!(p(2.0), 0.0);

        let t = scalar_fn(&MapSpec::Table {
            nodes: vec![[0.0, 0.0], [1.0, 0.5], [2.0, 0.5]],
        })
        .unwrap();
        assert_eq!(t(-1.0), 0.0);
        assert_eq!(t(0.5), 0.25);
        assert_eq!(t(3.0), 0.5);
    }

    #[test]
    fn piecewise_selects_pieces() {
        let spec = MapSpec::Piecewise {
            breakpoints: vec![1.0],
            pieces: vec![
                MapSpec::Polynomial {
                    coefficients: vec![0.0, 0.25],
                    clamp: None,
                },
                MapSpec::Polynomial {
                    coefficients: vec![0.125],
                    clamp: None,
                },
            ],
        };
        let f = scalar_fn(&spec).unwrap();
        assert_eq!(f(0.5), 0.125);
        assert_eq!(f(1.0), 0.125);
        assert_eq!(f(0.999), 0.24975);

        let bad = MapSpec::Piecewise {
            breakpoints: vec![1.0],
            pieces: vec![],
        };
        assert!(scalar_fn(&bad).is_err());
    }

    #[test]
    fn multi_dimensional_affine() {
        let space = euclidean(2, None).unwrap();
        let spec = MapSpec::Affine {
            matrix: vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            offset: vec![1.0, 0.0],
        };
        let t = euclidean_map(&spec, space).unwrap();
        assert_eq!(t.eval(&vec![2.0, 4.0]), vec![3.0, 1.0]);
    }

    #[test]
    fn class_parameters_are_required() {
        assert!(contraction_class(ClassKind::Banach, None, None).is_err());
        assert!(contraction_class(ClassKind::StrongQuasi, Some(0.5), None).is_err());
        assert!(contraction_class(ClassKind::CiricLinear, Some(0.5), None).is_ok());
    }

    #[test]
    fn points_by_space() {
        assert_eq!(
            vector_point(&PointSpec::Scalar(2.0), 3, true).unwrap(),
            vec![2.0; 3]
        );
        assert!(vector_point(&PointSpec::Scalar(2.0), 3, false).is_err());
        assert_eq!(
            set_point(&PointSpec::Set(vec![vec![0.0, 1.0]]), 2)
                .unwrap()
                .len(),
            1
        );
        assert!(set_point(&PointSpec::Scalar(0.0), 2).is_err());
    }
}
