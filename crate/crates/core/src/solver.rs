//! Fixed-point iteration with residual certification.
//!
//! With a comparison function the iteration count is bounded below by the
//! decay horizon `n₀` of `φ` started at the diameter of a warm-up orbit
//! prefix: for a weak φ-quasicontraction, `d(T^{n₀}x, Tⁿx) ≤ φ^{n₀}(diam O(x))`
//! for every `n > n₀`. The warm-up prefix only underestimates `diam O(x)`, so
//! the returned point is always re-certified by its residual `d(x*, Tx*)`.
//!
//! Any map is accepted. Whether it belongs to a contraction class is a
//! question for [`crate::classify`].

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::comparison::{decay_horizon, ComparisonFunction, DecayCertificate, DEFAULT_HORIZON_CAP};
use crate::error::{Error, Result};
use crate::exec;
use crate::metric::{diam_unchecked, MetricSpace};
use crate::orbit::{orbit_prefix, SelfMap, DEFAULT_CLASSIFY_DEPTH};

pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Consecutive small steps required when no comparison function is given.
pub const SMALL_STEP_RUN: usize = 3;

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub eps: f64,
    pub max_iter: usize,
    pub phi: Option<ComparisonFunction>,
    pub record_trace: bool,
    pub warmup_depth: usize,
}

impl SolveConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            max_iter: DEFAULT_MAX_ITER,
            phi: None,
            record_trace: false,
            warmup_depth: DEFAULT_CLASSIFY_DEPTH,
        }
    }

    pub fn with_phi(mut self, phi: ComparisonFunction) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One iteration step as recorded in a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub dist_prev: f64,
    pub dist_base: f64,
    pub diam_trunc: f64,
}

pub fn write_trace_csv(rows: &[TraceRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "step,dist_prev,dist_base,diam_trunc")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.step, r.dist_prev, r.dist_base, r.diam_trunc
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult<P> {
    pub fixed_point: P,
    pub iterations: usize,
    /// `d(x*, Tx*)`, recomputed at the returned point.
    pub residual: f64,
    #[serde(skip)]
    pub trace: Option<Vec<TraceRow>>,
    #[serde(skip)]
    pub certificate: Option<DecayCertificate>,
}

impl<P: Clone> SolveResult<P> {
    pub fn horizon_used(&self) -> Option<usize> {
        self.certificate.as_ref().map(|c| c.horizon)
    }

    pub fn summary(&self) -> SolveSummary<P> {
        SolveSummary {
            fixed_point: self.fixed_point.clone(),
            iterations: self.iterations,
            residual: self.residual,
            horizon_used: self.horizon_used(),
        }
    }
}

/// JSON shape of a solve result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary<P> {
    pub fixed_point: P,
    pub iterations: usize,
    pub residual: f64,
    pub horizon_used: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError<P: std::fmt::Debug> {
    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        best: P,
        iterations: usize,
        residual: f64,
    },
    #[error(transparent)]
    Failed(#[from] Error),
}

fn step<S: MetricSpace>(t: &SelfMap<S>, x: &S::Point, index: usize) -> Result<S::Point> {
    t.apply(x).map_err(|e| match e {
        Error::NonFinite(_) => Error::Divergence { index },
        other => other,
    })
}

/// Iterates `T` from `start` until the stopping rule fires and the residual
/// is within `cfg.eps`.
///
/// Stopping rule: with `cfg.phi`, at least `n₀` steps and a last step below
/// `eps/2`; without it, [`SMALL_STEP_RUN`] consecutive steps below `eps/2`.
/// If the residual at that point exceeds `eps`, iteration continues.
pub fn solve<S: MetricSpace>(
    t: &SelfMap<S>,
    start: &S::Point,
    cfg: &SolveConfig,
) -> Result<SolveResult<S::Point>, SolveError<S::Point>> {
    cfg.validate()?;
    let space = t.space();
    space.validate(start).map_err(|e| match e {
        Error::NonFinite(_) => Error::Divergence { index: 0 },
        other => other,
    })?;

    let mut x = start.clone();
    let mut fx = step(t, &x, 1)?;
    let residual0 = space.dist(&x, &fx);
    let mut trace = cfg.record_trace.then(Vec::new);
    if residual0 == 0.0 {
        return Ok(SolveResult {
            fixed_point: x,
            iterations: 0,
            residual: 0.0,
            trace,
            certificate: None,
        });
    }

    let certificate = match &cfg.phi {
        Some(phi) => {
            let warm = orbit_prefix(t, start, cfg.warmup_depth)?;
            Some(decay_horizon(
                phi,
                warm.diam_trunc,
                cfg.eps / 2.0,
                DEFAULT_HORIZON_CAP,
            )?)
        }
        None => None,
    };
    let horizon = certificate.as_ref().map(|c| c.horizon);

    let mut history = cfg.record_trace.then(|| vec![start.clone()]);
    let mut running_diam = 0.0f64;
    let mut small_run = 0;
    let half_eps = cfg.eps / 2.0;

    for k in 1..=cfg.max_iter {
        let next = fx;
        let dist_prev = space.dist(&x, &next);
        x = next;
        fx = step(t, &x, k + 1)?;

        if let (Some(rows), Some(seen)) = (trace.as_mut(), history.as_mut()) {
            let row_max = exec::max_range(seen.len(), |j| space.dist(&seen[j], &x));
            running_diam = running_diam.max(row_max);
            rows.push(TraceRow {
                step: k,
                dist_prev,
                dist_base: space.dist(start, &x),
                diam_trunc: running_diam,
            });
            seen.push(x.clone());
        }

        small_run = if dist_prev < half_eps {
            small_run + 1
        } else {
            0
        };
        let stop = match horizon {
            Some(n0) => k >= n0 && dist_prev < half_eps,
            None => small_run >= SMALL_STEP_RUN,
        };
        if stop {
            let residual = space.dist(&x, &fx);
            if residual <= cfg.eps {
                return Ok(SolveResult {
                    fixed_point: x,
                    iterations: k,
                    residual,
                    trace,
                    certificate,
                });
            }
        }
    }
    let residual = space.dist(&x, &fx);
    Err(SolveError::NotConverged {
        best: x,
        iterations: cfg.max_iter,
        residual,
    })
}

/// Per-start outcome in a multi-start run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StartOutcome<P> {
    Converged(SolveSummary<P>),
    NotConverged {
        best: P,
        iterations: usize,
        residual: f64,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport<P> {
    pub points: Vec<StartOutcome<P>>,
    /// Diameter of the converged fixed points.
    pub max_mutual_distance: f64,
    /// Every start converged and the fixed points lie within `10·eps`.
    pub unique_within: bool,
}

/// Solves from every start (concurrently, results in start order) and
/// measures how far apart the returned fixed points are.
pub fn multi_start_uniqueness<S: MetricSpace>(
    t: &SelfMap<S>,
    starts: &[S::Point],
    cfg: &SolveConfig,
) -> Result<UniquenessReport<S::Point>> {
    if starts.len() < 2 {
        return Err(Error::InvalidInput(
            "uniqueness check needs at least 2 starts".into(),
        ));
    }
    cfg.validate()?;
    let results = exec::map(starts, |s| solve(t, s, cfg));

    let mut fixed = Vec::new();
    let mut points = Vec::with_capacity(results.len());
    for r in results {
        points.push(match r {
            Ok(res) => {
                fixed.push(res.fixed_point.clone());
                StartOutcome::Converged(res.summary())
            }
            Err(SolveError::NotConverged {
                best,
                iterations,
                residual,
            }) => StartOutcome::NotConverged {
                best,
                iterations,
                residual,
            },
            Err(SolveError::Failed(e)) => StartOutcome::Failed {
                error: e.to_string(),
            },
        });
    }
    let max_mutual_distance = if fixed.is_empty() {
        0.0
    } else {
        diam_unchecked(t.space(), &fixed)
    };
    let all_converged = fixed.len() == starts.len();
    Ok(UniquenessReport {
        points,
        max_mutual_distance,
        unique_within: all_converged && max_mutual_distance <= 10.0 * cfg.eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallReport {
    /// `d(p, Tp) < r − φ(r)`.
    pub hypothesis_holds: bool,
    pub center_displacement: f64,
    pub margin: f64,
    /// Whether every walked iterate stayed in the closed ball; `None` when
    /// the hypothesis failed and no walk was made.
    pub orbit_inside: Option<bool>,
    /// First iterate found outside the ball.
    pub exit_step: Option<usize>,
}

/// Checks the small-displacement hypothesis `d(p,Tp) < r − φ(r)` and, if it
/// holds, walks `steps` iterates from `p` to confirm they stay in `B(p, r)`.
pub fn ball_invariance_check<S: MetricSpace>(
    t: &SelfMap<S>,
    phi: &ComparisonFunction,
    p: &S::Point,
    r: f64,
    steps: usize,
) -> Result<BallReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {r}"
        )));
    }
    let space = t.space();
    space.validate(p)?;
    let tp = step(t, p, 1)?;
    let center_displacement = space.dist(p, &tp);
    let margin = r - phi.eval(r);
    let hypothesis_holds = center_displacement < margin;
    if !hypothesis_holds {
        return Ok(BallReport {
            hypothesis_holds,
            center_displacement,
            margin,
            orbit_inside: None,
            exit_step: None,
        });
    }
    let mut x = p.clone();
    let mut exit_step = None;
    for m in 1..=steps {
        x = step(t, &x, m)?;
        if space.dist(p, &x) > r {
            exit_step = Some(m);
            break;
        }
    }
    Ok(BallReport {
        hypothesis_holds,
        center_displacement,
        margin,
        orbit_inside: Some(exit_step.is_none()),
        exit_step,
    })
}
