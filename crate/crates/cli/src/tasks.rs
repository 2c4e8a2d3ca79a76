//! Executes a parsed [`ProblemConfig`].

use serde::Serialize;
use serde_json::{json, Value};

use quasifix::apps::{attractor, hutchinson_map, write_ivp_csv};
use quasifix::classify::{
    classify_pairwise, classify_weak_quasi, sample_pairs, ContractionClass, Outcome,
};
use quasifix::comparison::ComparisonFunction;
use quasifix::metric::{Euclidean, GridFunction, Hausdorff, MetricSpace};
use quasifix::orbit::{
    boundedness_probe, ciric_orbit_bound, default_blowup_threshold, orbit_prefix, SelfMap,
};
use quasifix::solver::{multi_start_uniqueness, solve, write_trace_csv, SolveConfig, SolveError};
use quasifix::{Error, Result};

use crate::config::{
    self, ClassKind, PointSpec, ProblemConfig, SpaceSpec, TaskSpec, REPORT_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    /// A falsified inequality, an escaping orbit, or a failed convergence.
    Negative,
}

pub struct TaskOutput {
    pub status: Status,
    pub summary: String,
    pub result: Value,
    pub trace_csv: Option<Vec<u8>>,
    pub points_csv: Option<Vec<u8>>,
}

impl TaskOutput {
    fn new(status: Status, summary: String, result: Value) -> Self {
        Self {
            status,
            summary,
            result,
            trace_csv: None,
            points_csv: None,
        }
    }
}

#[derive(Serialize)]
pub struct RunReport<'a> {
    pub version: u32,
    pub task: &'static str,
    pub seed: u64,
    pub space: &'static str,
    pub map: &'static str,
    pub status: Status,
    pub summary: &'a str,
    pub result: &'a Value,
}

pub fn report<'a>(config: &ProblemConfig, seed: u64, out: &'a TaskOutput) -> RunReport<'a> {
    RunReport {
        version: REPORT_VERSION,
        task: config.task.name(),
        seed,
        space: match config.space {
            SpaceSpec::Euclidean { .. } => "euclidean",
            SpaceSpec::GridFunction { .. } => "grid_function",
            SpaceSpec::Hausdorff { .. } => "hausdorff",
        },
        map: config::family(&config.map),
        status: out.status,
        summary: &out.summary,
        result: &out.result,
    }
}

/// Errors that describe the mathematics rather than the input.
fn is_negative(e: &Error) -> bool {
    matches!(
        e,
        Error::Divergence { .. } | Error::NotConverged { .. } | Error::HorizonNotReached { .. }
    )
}

fn negative_from(e: Error) -> Result<TaskOutput> {
    if is_negative(&e) {
        let msg = e.to_string();
        Ok(TaskOutput::new(
            Status::Negative,
            msg.clone(),
            json!({ "error": msg }),
        ))
    } else {
        Err(e)
    }
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

fn csv(fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    fill(&mut buf).expect("writing to memory");
    buf
}

pub fn run(config: &ProblemConfig, seed: u64, trace: bool) -> Result<TaskOutput> {
    let phi = config::phi(config)?;
    let task = &config.task;
    match &config.space {
        SpaceSpec::Euclidean { dim, sample_box } => {
            let space = config::euclidean(*dim, *sample_box)?;
            let t = config::euclidean_map(&config.map, space)?;
            let dim = *dim;
            generic(&t, task, phi.as_ref(), seed, trace, &|p| {
                config::vector_point(p, dim, false)
            })
        }
        SpaceSpec::GridFunction {
            a,
            b,
            nodes,
            sample_box,
        } => {
            let (problem, t) = config::grid_map(&config.map, *a, *b, *nodes, *sample_box)?;
            let nodes = *nodes;
            match task {
                TaskSpec::Picard { eps, max_iter } => {
                    let mut cfg = SolveConfig::new(*eps);
                    if let Some(m) = max_iter {
                        cfg = cfg.with_max_iter(*m);
                    }
                    if trace {
                        cfg = cfg.with_trace();
                    }
                    let mut out = solve_with(&t, vec![problem.y0; nodes], &cfg)?;
                    if let Some(y) = out.result["solve"]["fixed_point"].as_array() {
                        let y: Vec<f64> = y.iter().filter_map(Value::as_f64).collect();
                        out.points_csv = Some(csv(|w| write_ivp_csv(t.space(), &y, w)));
                    }
                    out.result["contraction_factor"] = json!(problem.contraction_factor());
                    Ok(out)
                }
                _ => generic(&t, task, phi.as_ref(), seed, trace, &|p| {
                    config::vector_point(p, nodes, true)
                }),
            }
        }
        SpaceSpec::Hausdorff { dim, sample_box } => {
            let sys = config::ifs_system(&config.map)?;
            if sys.dim() != *dim {
                return Err(Error::DimensionMismatch {
                    expected: *dim,
                    found: sys.dim(),
                });
            }
            match task {
                TaskSpec::Attractor { seed_point, eps, max_depth } => {
                    let a = match attractor(&sys, seed_point, *eps, *max_depth) {
                        Ok(a) => a,
                        Err(e) => return negative_from(e),
                    };
                    let summary = format!(
                        "{} points at depth {}, Hausdorff distance to the attractor ≤ {:e}",
                        a.points.len(),
                        a.certificate.depth,
                        a.certificate.bound
                    );
                    let result = json!({
                        "certificate": to_value(&a.certificate),
                        "points": a.points.len(),
                        "initial_step": a.initial_step,
                        "step_distances": a.step_distances,
                        "merged_steps": a.merged_steps,
                    });
                    let mut out = TaskOutput::new(Status::Success, summary, result);
                    out.points_csv = Some(csv(|w| a.write_csv(w)));
                    Ok(out)
                }
                TaskSpec::Classify { .. } => {
                    let space = config::hausdorff(*dim, *sample_box)?;
                    let inner = hutchinson_map(&sys);
                    let t = SelfMap::new("hutchinson", space, move |s| inner.eval(s));
                    let dim = *dim;
                    generic(&t, task, phi.as_ref(), seed, trace, &|p| config::set_point(p, dim))
                }
                other => Err(Error::Unsupported(format!(
                    "task '{}' on the hausdorff space (point sets grow geometrically); use 'attractor'",
                    other.name()
                ))),
            }
        }
    }
}

/// Orbit export for `--trace` on the probe task.
trait OrbitCsv: MetricSpace + Sized {
    fn orbit_csv(t: &SelfMap<Self>, x: &Self::Point, steps: usize) -> Result<Option<Vec<u8>>>;
}

fn vector_orbit_csv<S: MetricSpace<Point = Vec<f64>>>(
    t: &SelfMap<S>,
    x: &Vec<f64>,
    steps: usize,
) -> Result<Option<Vec<u8>>> {
    let orbit = orbit_prefix(t, x, steps)?;
    Ok(Some(csv(|w| orbit.write_csv(t.space(), w))))
}

impl OrbitCsv for Euclidean {
    fn orbit_csv(t: &SelfMap<Self>, x: &Vec<f64>, steps: usize) -> Result<Option<Vec<u8>>> {
        vector_orbit_csv(t, x, steps)
    }
}

impl OrbitCsv for GridFunction {
    fn orbit_csv(t: &SelfMap<Self>, x: &Vec<f64>, steps: usize) -> Result<Option<Vec<u8>>> {
        vector_orbit_csv(t, x, steps)
    }
}

impl OrbitCsv for Hausdorff {
    fn orbit_csv(_: &SelfMap<Self>, _: &Self::Point, _: usize) -> Result<Option<Vec<u8>>> {
        Ok(None)
    }
}

fn generic<S: OrbitCsv>(
    t: &SelfMap<S>,
    task: &TaskSpec,
    phi: Option<&ComparisonFunction>,
    seed: u64,
    trace: bool,
    parse: &dyn Fn(&PointSpec) -> Result<S::Point>,
) -> Result<TaskOutput> {
    match task {
        TaskSpec::Classify {
            class,
            q,
            pairs,
            depth,
            witnesses,
        } => {
            let class_def = config::contraction_class(*class, *q, phi)?;
            let w = witnesses
                .iter()
                .map(|[a, b]| Ok((parse(a)?, parse(b)?)))
                .collect::<Result<Vec<_>>>()?;
            let pairs = sample_pairs(t.space(), *pairs, seed, &w)?;
            let verdict = match (&class_def, class) {
                (ContractionClass::WeakQuasi(p), ClassKind::WeakQuasi) => {
                    classify_weak_quasi(t, p, &pairs, *depth)?
                }
                _ => classify_pairwise(t, &class_def, &pairs)?,
            };
            let status = match verdict.outcome {
                Outcome::Falsified => Status::Negative,
                Outcome::Satisfied | Outcome::Inconclusive => Status::Success,
            };
            let summary = format!(
                "{class_def}: {} on {} pairs",
                verdict.outcome, verdict.pairs_tested
            );
            Ok(TaskOutput::new(
                status,
                summary,
                to_value(&verdict.report(&class_def, Some(seed))),
            ))
        }
        TaskSpec::Solve {
            start,
            eps,
            max_iter,
            starts,
        } => {
            let mut cfg = SolveConfig::new(*eps);
            if let Some(p) = phi {
                cfg = cfg.with_phi(p.clone());
            }
            if let Some(m) = max_iter {
                cfg = cfg.with_max_iter(*m);
            }
            if trace {
                cfg = cfg.with_trace();
            }
            let x0 = parse(start)?;
            let mut out = solve_with(t, x0.clone(), &cfg)?;
            if !starts.is_empty() {
                let mut all = vec![x0];
                for s in starts {
                    all.push(parse(s)?);
                }
                let u = multi_start_uniqueness(t, &all, &cfg)?;
                if !u.unique_within {
                    out.status = Status::Negative;
                }
                out.summary.push_str(&format!(
                    "; {} starts, spread {:e}, unique_within = {}",
                    all.len(),
                    u.max_mutual_distance,
                    u.unique_within
                ));
                out.result["uniqueness"] = to_value(&u);
            }
            Ok(out)
        }
        TaskSpec::Probe {
            start,
            depth,
            threshold,
            q,
        } => {
            let x = parse(start)?;
            let threshold = match threshold {
                Some(v) => *v,
                None => default_blowup_threshold(t, &x)?,
            };
            let verdict = match boundedness_probe(t, &x, *depth, threshold) {
                Ok(v) => v,
                Err(e) => return negative_from(e),
            };
            let mut status = if verdict.is_bounded() {
                Status::Success
            } else {
                Status::Negative
            };
            let mut summary = match &verdict {
                quasifix::orbit::ProbeVerdict::BoundedSoFar { diam, depth } => {
                    format!("bounded so far: diameter {diam:e} after {depth} steps")
                }
                quasifix::orbit::ProbeVerdict::ThresholdExceeded { step, distance } => {
                    format!("threshold {threshold} exceeded at step {step} (distance {distance})")
                }
            };
            let mut result = json!({ "probe": to_value(&verdict), "threshold": threshold });
            if let Some(q) = q {
                let c = ciric_orbit_bound(t, &x, *q, *depth).or_else(|e| {
                    if is_negative(&e) {
                        Ok(quasifix::orbit::CiricReport {
                            bound: f64::NAN,
                            observed: f64::NAN,
                            holds: false,
                        })
                    } else {
                        Err(e)
                    }
                })?;
                if !c.holds {
                    status = Status::Negative;
                }
                summary.push_str(&format!("; orbit bound holds = {}", c.holds));
                result["orbit_bound"] = to_value(&c);
            }
            let mut out = TaskOutput::new(status, summary, result);
            if trace {
                let steps = match verdict {
                    quasifix::orbit::ProbeVerdict::ThresholdExceeded { step, .. } => step,
                    _ => *depth,
                };
                out.trace_csv = S::orbit_csv(t, &x, steps)?;
            }
            Ok(out)
        }
        TaskSpec::Attractor { .. } => Err(Error::Unsupported(
            "the attractor task needs a hausdorff space with an IFS map".into(),
        )),
        TaskSpec::Picard { .. } => Err(Error::Unsupported(
            "the picard task needs a grid_function space with a picard map".into(),
        )),
    }
}

fn solve_with<S: MetricSpace>(
    t: &SelfMap<S>,
    x0: S::Point,
    cfg: &SolveConfig,
) -> Result<TaskOutput> {
    match solve(t, &x0, cfg) {
        Ok(r) => {
            let summary = format!(
                "converged in {} iterations, residual {:e}",
                r.iterations, r.residual
            );
            let mut out = TaskOutput::new(
                Status::Success,
                summary,
                json!({ "solve": to_value(&r.summary()) }),
            );
            if let Some(rows) = &r.trace {
                out.trace_csv = Some(csv(|w| write_trace_csv(rows, w)));
            }
            Ok(out)
        }
        Err(SolveError::NotConverged {
            best,
            iterations,
            residual,
        }) => Ok(TaskOutput::new(
            Status::Negative,
            format!("not converged after {iterations} iterations, residual {residual:e}"),
            json!({ "solve": { "status": "not_converged", "best": to_value(&best), "iterations": iterations, "residual": residual } }),
        )),
        Err(SolveError::Failed(e)) => negative_from(e),
    }
}
