//! Comparison functions: increasing, upper semicontinuous `φ: ℝ₊ → ℝ₊` with
//! `φ(0) = 0` and `φ(t) < t` for `t > 0`.
//!
//! Upper semicontinuity is not checked numerically. The built-in families are
//! continuous. Table functions interpolate linearly between nodes; a repeated
//! abscissa encodes a jump, and the function takes the later (upper) value at
//! the jump point, which keeps an increasing table upper semicontinuous.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default iteration cap for [`decay_horizon`].
pub const DEFAULT_HORIZON_CAP: usize = 1_000_000;

/// Absolute slack allowed on `φ(0) = 0`.
pub const ORIGIN_SLACK: f64 = 1e-12;

/// Relative slack used by [`series_condition`]; matches the classifier tolerance.
pub const SERIES_TOLERANCE: f64 = 1e-10;

#[derive(Clone)]
enum Family {
    Affine { q: f64 },
    Harmonic,
    Quadratic,
    Table(Arc<[(f64, f64)]>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A scalar control function for contraction inequalities.
#[derive(Clone)]
pub struct ComparisonFunction {
    family: Family,
    label: String,
}

impl fmt::Debug for ComparisonFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ComparisonFunction")
            .field(&self.label)
            .finish()
    }
}

impl fmt::Display for ComparisonFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl ComparisonFunction {
    /// `φ(t) = q·t` with `0 < q < 1`.
    pub fn affine(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "affine comparison factor must lie in (0,1), got {q}"
            )));
        }
        Ok(Self {
            family: Family::Affine { q },
            label: format!("affine(q={q})"),
        })
    }

    /// `φ(t) = t / (1 + t)`.
    pub fn harmonic() -> Self {
        Self {
            family: Family::Harmonic,
            label: "harmonic".into(),
        }
    }

    /// `φ(t) = s − s²/2` with `s = min(t, 1)`.
    pub fn quadratic() -> Self {
        Self {
            family: Family::Quadratic,
            label: "quadratic".into(),
        }
    }

    /// Piecewise-linear interpolation through `nodes`, constant beyond the
    /// first and last node. Nodes must be sorted by abscissa.
    pub fn table(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidInput("table needs at least one node".into()));
        }
        if nodes
            .iter()
            .any(|&(t, v)| !t.is_finite() || !v.is_finite() || t < 0.0)
        {
            return Err(Error::InvalidInput(
                "table nodes must be finite with nonnegative abscissae".into(),
            ));
        }
        if nodes.windows(2).any(|w| w[0].0 > w[1].0) {
            return Err(Error::InvalidInput(
                "table nodes must be sorted by t".into(),
            ));
        }
        let label = format!("table({} nodes)", nodes.len());
        Ok(Self {
            family: Family::Table(nodes.into()),
            label,
        })
    }

    /// Table of `t − t²/8` sampled on `[0, 4]` at 65 nodes, flat at 2 beyond.
    /// Dominates `sin(1)·t` on `[0, 1]`, so it controls `cos` there.
    pub fn tapered_table() -> Self {
        let nodes = (0..=64)
            .map(|i| {
                let t = 4.0 * i as f64 / 64.0;
                (t, t - t * t / 8.0)
            })
            .collect();
        let mut phi = Self::table(nodes).expect("static nodes are valid");
        phi.label = "tapered_table".into();
        phi
    }

    /// Arbitrary user function. Nothing about it is checked here; run
    /// [`check_axioms`] before relying on it.
    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            family: Family::Custom(Arc::new(f)),
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Linear factor `q` when the function is `φ(t) = q·t`.
    pub fn linear_factor(&self) -> Option<f64> {
        match self.family {
            Family::Affine { q } => Some(q),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.family {
            Family::Affine { q } => q * t,
            Family::Harmonic => t / (1.0 + t),
            Family::Quadratic => {
                let s = t.clamp(0.0, 1.0);
                s - s * s / 2.0
            }
            Family::Table(nodes) => eval_table(nodes, t),
            Family::Custom(f) => f(t),
        }
    }
}

fn eval_table(nodes: &[(f64, f64)], t: f64) -> f64 {
    // index of the first node strictly to the right of t
    let i = nodes.partition_point(|&(x, _)| x <= t);
    if i == 0 {
        return nodes[0].1;
    }
    if i == nodes.len() {
        return nodes[i - 1].1;
    }
    let (x0, v0) = nodes[i - 1];
    let (x1, v1) = nodes[i];
    if t == x0 {
        return v0;
    }
    v0 + (v1 - v0) * (t - x0) / (x1 - x0)
}

/// Config-file description of a comparison function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Affine { q: f64 },
    Harmonic,
    Quadratic,
    TaperedTable,
    Table { nodes: Vec<[f64; 2]> },
}

impl TryFrom<&PhiSpec> for ComparisonFunction {
    type Error = Error;

    fn try_from(spec: &PhiSpec) -> Result<Self> {
        match spec {
            PhiSpec::Affine { q } => Self::affine(*q),
            PhiSpec::Harmonic => Ok(Self::harmonic()),
            PhiSpec::Quadratic => Ok(Self::quadratic()),
            PhiSpec::TaperedTable => Ok(Self::tapered_table()),
            PhiSpec::Table { nodes } => Self::table(nodes.iter().map(|n| (n[0], n[1])).collect()),
        }
    }
}

/// The four bundled families: affine, harmonic, quadratic and a table.
pub fn builtin_families() -> Vec<ComparisonFunction> {
    vec![
        ComparisonFunction::affine(0.5).expect("valid factor"),
        ComparisonFunction::harmonic(),
        ComparisonFunction::quadratic(),
        ComparisonFunction::tapered_table(),
    ]
}

/// A defining property of comparison functions that failed on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum AxiomViolation {
    /// `φ(0) ≠ 0`.
    NonzeroAtOrigin { value: f64 },
    /// `φ(t) < 0` or non-finite.
    OutOfRange { t: f64, value: f64 },
    /// `φ(t) ≥ t` for some `t > 0`.
    NotBelowIdentity { t: f64, value: f64 },
    /// `t₁ ≤ t₂` but `φ(t₁) > φ(t₂)`.
    NotIncreasing { t1: f64, v1: f64, t2: f64, v2: f64 },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonzeroAtOrigin { value } => write!(f, "φ(0)=0 fails: φ(0)={value}"),
            Self::OutOfRange { t, value } => write!(f, "φ(t)≥0 fails at t={t}: φ(t)={value}"),
            Self::NotBelowIdentity { t, value } => {
                write!(f, "φ(t)<t fails at t={t}: φ(t)={value}")
            }
            Self::NotIncreasing { t1, v1, t2, v2 } => write!(
                f,
                "monotonicity fails between t={t1} (φ={v1}) and t={t2} (φ={v2})"
            ),
        }
    }
}

/// Evenly spaced grid of `n ≥ 2` points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Tests `φ(0) = 0`, `φ(t) < t` and monotonicity on `grid`.
///
/// An empty result means the axioms were not falsified on this grid.
pub fn check_axioms(phi: &ComparisonFunction, grid: &[f64]) -> Result<Vec<AxiomViolation>> {
    if grid.len() < 2 {
        return Err(Error::InvalidInput(
            "axiom grid needs at least 2 points".into(),
        ));
    }
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidInput(
            "axiom grid must be finite and nonnegative".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput(
            "axiom grid must be sorted ascending".into(),
        ));
    }
    if grid[0] != 0.0 {
        return Err(Error::InvalidInput("axiom grid must contain 0".into()));
    }

    let values: Vec<f64> = grid.iter().map(|&t| phi.eval(t)).collect();
    let mut violations = Vec::new();
    for (&t, &value) in grid.iter().zip(&values) {
        if !value.is_finite() || value < 0.0 {
            violations.push(AxiomViolation::OutOfRange { t, value });
        } else if t == 0.0 {
            if value.abs() > ORIGIN_SLACK {
                violations.push(AxiomViolation::NonzeroAtOrigin { value });
            }
        } else if value >= t {
            violations.push(AxiomViolation::NotBelowIdentity { t, value });
        }
    }
    for (i, w) in values.windows(2).enumerate() {
        if w[0] > w[1] {
            violations.push(AxiomViolation::NotIncreasing {
                t1: grid[i],
                v1: w[0],
                t2: grid[i + 1],
                v2: w[1],
            });
        }
    }
    Ok(violations)
}

/// `φⁿ(t)` by n-fold composition; `φ⁰(t) = t`.
pub fn iterate_n(phi: &ComparisonFunction, t: f64, n: usize) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "iterate_n needs finite t ≥ 0, got {t}"
        )));
    }
    let mut value = t;
    for _ in 0..n {
        value = phi.eval(value);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("iterating {}", phi.label())));
        }
    }
    Ok(value)
}

/// Witness that `φⁿ(start)` fell below a threshold after `horizon` steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub start_value: f64,
    pub horizon: usize,
    pub terminal_value: f64,
    /// `φ⁰(start), φ¹(start), …, φ^horizon(start)`.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Smallest `n₀ ≤ cap` with `φ^{n₀}(start) < eps`.
pub fn decay_horizon(
    phi: &ComparisonFunction,
    start: f64,
    eps: f64,
    cap: usize,
) -> Result<DecayCertificate> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if cap == 0 {
        return Err(Error::InvalidInput("horizon cap must be at least 1".into()));
    }
    if !(start >= 0.0) || !start.is_finite() {
        return Err(Error::InvalidInput(format!(
            "start must be finite and ≥ 0, got {start}"
        )));
    }

    let mut trace = vec![start];
    let mut value = start;
    let mut n = 0;
    while value >= eps {
        if n == cap {
            return Err(Error::HorizonNotReached {
                cap,
                last_value: value,
            });
        }
        value = phi.eval(value);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("iterating {}", phi.label())));
        }
        trace.push(value);
        n += 1;
    }
    Ok(DecayCertificate {
        start_value: start,
        horizon: n,
        terminal_value: value,
        trace,
    })
}

/// First `(n, t)` where `φⁿ(t) ≤ cₙ·t` failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesWitness {
    pub n: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesVerdict {
    pub depth: usize,
    /// `None` when no violation was found.
    pub violation: Option<SeriesWitness>,
    /// `c₁ + … + c_depth`.
    pub partial_sum: f64,
}

impl SeriesVerdict {
    pub fn falsified(&self) -> bool {
        self.violation.is_some()
    }
}

/// Checks `φⁿ(t) ≤ cₙ·t` for `n = 1..=depth` and every grid point, where
/// `cₙ = coefficients[n − 1]`. Reports the violation with smallest `n`
/// (ties broken by grid order).
pub fn series_condition(
    phi: &ComparisonFunction,
    coefficients: &[f64],
    grid: &[f64],
    depth: usize,
) -> Result<SeriesVerdict> {
    if depth > coefficients.len() {
        return Err(Error::InvalidInput(format!(
            "depth {depth} exceeds {} coefficients",
            coefficients.len()
        )));
    }
    if grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput(
            "series grid must be positive and finite".into(),
        ));
    }

    let mut current: Vec<f64> = grid.to_vec();
    let mut violation = None;
    'outer: for n in 1..=depth {
        let c = coefficients[n - 1];
        for (value, &t) in current.iter_mut().zip(grid) {
            *value = phi.eval(*value);
            let rhs = c * t;
            if *value - rhs > SERIES_TOLERANCE * (1.0 + rhs) {
                violation = Some(SeriesWitness {
                    n,
                    t,
                    lhs: *value,
                    rhs,
                });
                break 'outer;
            }
        }
    }
    Ok(SeriesVerdict {
        depth,
        violation,
        partial_sum: coefficients[..depth].iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halving() -> ComparisonFunction {
        ComparisonFunction::affine(0.5).unwrap()
    }

    /// Closed form of the harmonic iterates: φⁿ(t) = t/(1+nt).
    fn harmonic_closed_form(t: f64, n: usize) -> f64 {
        t / (1.0 + n as f64 * t)
    }

    #[test]
    fn axioms_hold_for_halving() {
        assert!(check_axioms(&halving(), &[0.0, 0.5, 1.0, 2.0])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn identity_fails_strict_inequality() {
        let id = ComparisonFunction::custom("id", |t| t);
        let v = check_axioms(&id, &[0.0, 1.0]).unwrap();
        assert_eq!(
            v,
            vec![AxiomViolation::NotBelowIdentity { t: 1.0, value: 1.0 }]
        );
        assert_eq!(v[0].to_string(), "φ(t)<t fails at t=1: φ(t)=1");
    }

    #[test]
    fn harmonic_passes_dense_grid() {
        let grid = uniform_grid(0.0, 10.0, 100);
        assert!(check_axioms(&ComparisonFunction::harmonic(), &grid)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn builtins_pass_axioms() {
        let grid = uniform_grid(0.0, 10.0, 1001);
        for phi in builtin_families() {
            assert!(check_axioms(&phi, &grid).unwrap().is_empty(), "{phi}");
        }
    }

    #[test]
    fn axiom_grid_errors() {
        let phi = halving();
        assert!(check_axioms(&phi, &[]).is_err());
        assert!(check_axioms(&phi, &[0.0]).is_err());
        assert!(check_axioms(&phi, &[0.0, 2.0, 1.0]).is_err());
        assert!(check_axioms(&phi, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn detects_decreasing_and_offset() {
        let bad = ComparisonFunction::custom("bad", |t| if t == 0.0 { 0.1 } else { 0.5 / t });
        let v = check_axioms(&bad, &[0.0, 1.0, 2.0]).unwrap();
        assert!(v
            .iter()
            .any(|x| matches!(x, AxiomViolation::NonzeroAtOrigin { .. })));
        assert!(v
            .iter()
            .any(|x| matches!(x, AxiomViolation::NotIncreasing { t1, .. } if *t1 == 1.0)));
    }

    #[test]
    fn iterate_examples() {
        assert_eq!(iterate_n(&halving(), 8.0, 3).unwrap(), 1.0);
        assert_eq!(iterate_n(&halving(), 8.0, 0).unwrap(), 8.0);
        for phi in builtin_families() {
            assert_eq!(iterate_n(&phi, 0.0, 5).unwrap(), 0.0);
        }
        let h = iterate_n(&ComparisonFunction::harmonic(), 1.0, 4).unwrap();
        assert!((h - harmonic_closed_form(1.0, 4)).abs() < 1e-15);
        assert!((h - 0.2).abs() < 1e-15);
    }

    #[test]
    fn iterate_reports_nan() {
        let nan = ComparisonFunction::custom("nan", |_| f64::NAN);
        assert!(matches!(iterate_n(&nan, 1.0, 1), Err(Error::NonFinite(_))));
        assert!(iterate_n(&halving(), -1.0, 1).is_err());
    }

    #[test]
    fn horizon_examples() {
        let c = decay_horizon(&halving(), 1.0, 0.1, DEFAULT_HORIZON_CAP).unwrap();
        assert_eq!(c.horizon, 4);
        assert_eq!(c.terminal_value, 1.0 / 16.0);
        assert_eq!(c.trace, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);

        let c = decay_horizon(&halving(), 0.0, 0.1, DEFAULT_HORIZON_CAP).unwrap();
        assert_eq!(c.horizon, 0);
        assert_eq!(c.trace, vec![0.0]);

        let c = decay_horizon(
            &ComparisonFunction::harmonic(),
            1.0,
            0.01,
            DEFAULT_HORIZON_CAP,
        )
        .unwrap();
        // closed form: 1/(1+n) < 0.01 first at n = 100
        let oracle = (0..)
            .find(|&n| harmonic_closed_form(1.0, n) < 0.01)
            .unwrap();
        assert_eq!(oracle, 100);
        assert_eq!(c.horizon, oracle);
        assert_eq!(c.terminal_value, *c.trace.last().unwrap());
    }

    #[test]
    fn horizon_cap_exhaustion() {
        let err = decay_horizon(&ComparisonFunction::harmonic(), 1.0, 1e-6, 10).unwrap_err();
        assert!(matches!(err, Error::HorizonNotReached { cap: 10, .. }));
        assert!(decay_horizon(&halving(), 1.0, 0.0, 10).is_err());
        assert!(decay_horizon(&halving(), 1.0, 0.1, 0).is_err());
    }

    #[test]
    fn series_examples() {
        let geometric: Vec<f64> = (1..=40).map(|n| 0.5f64.powi(n)).collect();
        let v = series_condition(&halving(), &geometric, &[0.3, 1.0, 7.5], 40).unwrap();
        assert!(!v.falsified());
        assert!((v.partial_sum - (1.0 - 0.5f64.powi(40))).abs() < 1e-15);

        let v = series_condition(&ComparisonFunction::harmonic(), &geometric, &[1.0], 3).unwrap();
        let w = v.violation.unwrap();
        assert_eq!((w.n, w.t), (2, 1.0));
        assert!((w.lhs - harmonic_closed_form(1.0, 2)).abs() < 1e-15);
        assert_eq!(w.rhs, 0.25);

        let quarter = [0.25];
        let v = series_condition(&halving(), &quarter, &[1.0], 1).unwrap();
        let w = v.violation.unwrap();
        assert_eq!((w.n, w.lhs, w.rhs), (1, 0.5, 0.25));

        assert!(series_condition(&halving(), &quarter, &[1.0], 2).is_err());
    }

    #[test]
    fn table_interpolates_and_jumps_up() {
        let phi = ComparisonFunction::table(vec![(0.0, 0.0), (1.0, 0.5), (1.0, 0.8), (2.0, 1.0)])
            .unwrap();
        assert_eq!(phi.eval(0.5), 0.25);
        assert_eq!(phi.eval(1.0), 0.8);
        assert!((phi.eval(1.5) - 0.9).abs() < 1e-15);
        assert_eq!(phi.eval(10.0), 1.0);
        assert!(ComparisonFunction::table(vec![(1.0, 0.0), (0.0, 0.0)]).is_err());
        assert!(ComparisonFunction::table(vec![]).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let spec: PhiSpec = serde_json_like(r#"{"family":"affine","q":0.5}"#);
        let phi = ComparisonFunction::try_from(&spec).unwrap();
        assert_eq!(phi.eval(2.0), 1.0);
        let spec: PhiSpec = serde_json_like(r#"{"family":"table","nodes":[[0,0],[2,1]]}"#);
        assert_eq!(ComparisonFunction::try_from(&spec).unwrap().eval(1.0), 0.5);
        assert!(ComparisonFunction::try_from(&PhiSpec::Affine { q: 1.0 }).is_err());
    }

    fn serde_json_like<T: serde::de::DeserializeOwned>(s: &str) -> T {
        serde_json::from_str(s).unwrap()
    }
}
