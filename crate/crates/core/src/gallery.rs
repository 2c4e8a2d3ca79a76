//! Curated example maps with their expected verdicts and fixed points.
//!
//! Each entry knows how to run itself: [`run_entry`] performs every expected
//! check and returns a deterministic [`EntryReport`] (no timings, seeded
//! sampling), so the gallery doubles as a regression suite.

use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;

use crate::apps::{attractor, hutchinson_map, picard_operator, IfsSystem, IvpProblem};
use crate::classify::{
    class_hierarchy, classify_pairwise, classify_weak_quasi, iterated_map_check,
    measured_strong_factor, sample_pairs, ClassificationReport, ContractionClass, HierarchyReport,
    Outcome, Witness, DEFAULT_PAIR_COUNT,
};
use crate::comparison::{builtin_families, ComparisonFunction};
use crate::error::{Error, Result};
use crate::exec;
use crate::metric::{Euclidean, FinitePointSet, GridFunction, Hausdorff, MetricSpace};
use crate::orbit::{
    boundedness_probe, ciric_orbit_bound, ProbeVerdict, SelfMap, DEFAULT_CLASSIFY_DEPTH,
    DEFAULT_PROBE_DEPTH,
};
use crate::solver::{
    ball_invariance_check, multi_start_uniqueness, solve, BallReport, SolveConfig, SolveSummary,
    UniquenessReport,
};

/// Fixed point of `cos`, obtained by bisection of `cos x − x` on `[0, 1]`.
pub const DOTTIE: f64 = 0.739_085_133_215_160_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Closed form or elementary estimate.
    Analytic,
    /// Exhaustive or bisection computation independent of the checked code.
    BruteForce,
    /// A consequence of the fixed-point theorems the toolkit implements.
    Theorem,
}

/// Where an expected value comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub source: Source,
    pub note: String,
}

impl Provenance {
    fn analytic(note: &str) -> Self {
        Self {
            source: Source::Analytic,
            note: note.into(),
        }
    }

    fn brute_force(note: &str) -> Self {
        Self {
            source: Source::BruteForce,
            note: note.into(),
        }
    }

    fn theorem(note: &str) -> Self {
        Self {
            source: Source::Theorem,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpectedVerdict {
    pub class: ContractionClass,
    pub verdict: Outcome,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedPoint {
    pub value: Vec<f64>,
    /// Allowed distance in the entry's metric.
    pub tolerance: f64,
    pub provenance: Provenance,
}

type Runner = fn(&GalleryEntry, u64) -> Result<EntryReport>;

#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub label: &'static str,
    pub space: &'static str,
    pub map: &'static str,
    pub expected_class: Vec<ExpectedVerdict>,
    pub expected_fixed_point: Option<ExpectedPoint>,
    pub notes: &'static str,
    run: Runner,
}

/// A point of any gallery space, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointRepr {
    Vector(Vec<f64>),
    Set(FinitePointSet),
}

/// One expectation and what was observed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub met: bool,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallCase {
    pub p: f64,
    pub r: f64,
    pub phi: String,
    pub report: BallReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorSummary {
    pub depth: usize,
    pub q: f64,
    pub bound: f64,
    pub points: usize,
    pub initial_step: f64,
    pub merged_steps: usize,
}

/// Consolidated, deterministic result of running one entry.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct EntryReport {
    pub label: String,
    pub seed: u64,
    pub all_met: bool,
    pub checks: Vec<CheckResult>,
    pub classifications: Vec<ClassificationReport<PointRepr>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<HierarchyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessReport<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeVerdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ball: Vec<BallCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attractor: Option<AttractorSummary>,
}

impl EntryReport {
    fn new(label: &str, seed: u64) -> Self {
        Self {
            label: label.into(),
            seed,
            ..Self::default()
        }
    }

    fn check(
        &mut self,
        name: impl Into<String>,
        expected: impl fmt::Display,
        observed: impl fmt::Display,
        met: bool,
        provenance: &Provenance,
    ) {
        self.checks.push(CheckResult {
            name: name.into(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            met,
            provenance: provenance.clone(),
        });
    }

    fn finish(mut self) -> Self {
        self.all_met = self.checks.iter().all(|c| c.met);
        self
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.met)
    }
}

/// All entries, ordered by label.
pub fn list_entries() -> Vec<GalleryEntry> {
    let mut entries = vec![
        halving(),
        cos(),
        identity(),
        arith_walk(),
        kannan_like(),
        harmonic(),
        picard_exp(),
        sierpinski(),
        cantor(),
    ];
    entries.sort_by_key(|e| e.label);
    entries
}

pub fn find_entry(label: &str) -> Result<GalleryEntry> {
    list_entries()
        .into_iter()
        .find(|e| e.label == label)
        .ok_or_else(|| Error::InvalidInput(format!("unknown gallery entry '{label}'")))
}

/// Runs `label` with seed 0.
pub fn run_entry(label: &str) -> Result<EntryReport> {
    run_entry_seeded(label, 0)
}

pub fn run_entry_seeded(label: &str, seed: u64) -> Result<EntryReport> {
    let entry = find_entry(label)?;
    (entry.run)(&entry, seed)
}

impl GalleryEntry {
    pub fn run(&self, seed: u64) -> Result<EntryReport> {
        (self.run)(self, seed)
    }
}

/// Runs every entry whose label passes `keep`, concurrently, in label order.
pub fn run_matching(keep: impl Fn(&str) -> bool, seed: u64) -> Vec<Result<EntryReport>> {
    let entries: Vec<_> = list_entries()
        .into_iter()
        .filter(|e| keep(e.label))
        .collect();
    exec::map(&entries, |e| e.run(seed))
}

/// The scalar function behind a gallery entry on the real line.
pub fn line_function(label: &str) -> Option<fn(f64) -> f64> {
    Some(match label {
        "halving" => |x| x / 2.0,
        "cos" => f64::cos,
        "identity" => |x| x,
        "arith_walk" => |x| x + 1.0,
        "kannan_like" => kannan_map,
        "harmonic" => |x| x / (1.0 + x),
        _ => return None,
    })
}

/// The map of a gallery entry on the real line, over its sampling space.
pub fn line_map(label: &str) -> Result<SelfMap<Euclidean>> {
    let f = line_function(label).ok_or_else(|| {
        Error::InvalidInput(format!("'{label}' is not a gallery map on the line"))
    })?;
    let (lo, hi) = match label {
        "halving" => (-10.0, 10.0),
        "identity" | "arith_walk" => (-1.0, 1.0),
        _ => (0.0, 1.0),
    };
    Ok(SelfMap::scalar(
        label,
        Euclidean::line().with_sample_box(lo, hi),
        f,
    ))
}

#[allow(clippy::ptr_arg)]
fn vector(p: &Vec<f64>) -> PointRepr {
    PointRepr::Vector(p.clone())
}

fn set(p: &FinitePointSet) -> PointRepr {
    PointRepr::Set(p.clone())
}

fn erase<P>(
    r: ClassificationReport<P>,
    repr: fn(&P) -> PointRepr,
) -> ClassificationReport<PointRepr> {
    ClassificationReport {
        class: r.class,
        outcome: r.outcome,
        witness: r.witness.map(|w| Witness {
            x: repr(&w.x),
            y: repr(&w.y),
            lhs: w.lhs,
            rhs: w.rhs,
        }),
        depth_used: r.depth_used,
        pairs_tested: r.pairs_tested,
        seed: r.seed,
        note: r.note,
    }
}

fn expect(class: ContractionClass, verdict: Outcome, provenance: Provenance) -> ExpectedVerdict {
    ExpectedVerdict {
        class,
        verdict,
        provenance,
    }
}

fn affine(q: f64) -> ComparisonFunction {
    ComparisonFunction::affine(q).expect("gallery constants lie in (0,1)")
}

fn classify_all<S: MetricSpace>(
    report: &mut EntryReport,
    t: &SelfMap<S>,
    expected: &[ExpectedVerdict],
    pairs: &[(S::Point, S::Point)],
    repr: fn(&S::Point) -> PointRepr,
) -> Result<()> {
    for e in expected {
        let verdict = match &e.class {
            ContractionClass::WeakQuasi(phi) => {
                classify_weak_quasi(t, phi, pairs, DEFAULT_CLASSIFY_DEPTH)?
            }
            class => classify_pairwise(t, class, pairs)?,
        };
        report.check(
            format!("classify {}", e.class),
            e.verdict,
            verdict.outcome,
            verdict.outcome == e.verdict,
            &e.provenance,
        );
        report
            .classifications
            .push(erase(verdict.report(&e.class, Some(report.seed)), repr));
    }
    Ok(())
}

fn hierarchy<S: MetricSpace>(
    report: &mut EntryReport,
    t: &SelfMap<S>,
    q: f64,
    pairs: &[(S::Point, S::Point)],
) -> Result<()> {
    let h = class_hierarchy(t, q, pairs)?;
    report.check(
        format!("class hierarchy at q={q}"),
        "consistent",
        format!("{:?}", h.outcomes),
        h.consistent,
        &Provenance::theorem("each class implies the next weaker one"),
    );
    report.hierarchy = Some(h);
    Ok(())
}

fn solve_to(
    report: &mut EntryReport,
    t: &SelfMap<Euclidean>,
    start: f64,
    cfg: &SolveConfig,
    expected: Option<&ExpectedPoint>,
) -> Result<()> {
    let name = format!("solve from {start}");
    match solve(t, &vec![start], cfg) {
        Ok(r) => {
            report.check(
                format!("{name}: residual"),
                format!("≤ {}", cfg.eps),
                r.residual,
                r.residual <= cfg.eps,
                &Provenance::theorem("the iterates converge to the fixed point"),
            );
            if let Some(e) = expected {
                check_fixed_point(report, t.space(), &r.fixed_point, e);
            }
            report.solve = Some(r.summary());
        }
        Err(e) => report.check(
            name,
            "converged",
            e.to_string(),
            false,
            &Provenance::theorem("the iterates converge to the fixed point"),
        ),
    }
    Ok(())
}

fn check_fixed_point<S: MetricSpace<Point = Vec<f64>>>(
    report: &mut EntryReport,
    space: &S,
    found: &Vec<f64>,
    e: &ExpectedPoint,
) {
    let err = space.dist(found, &e.value);
    report.check(
        "fixed point",
        format!("within {} of expected", e.tolerance),
        err,
        err <= e.tolerance,
        &e.provenance,
    );
}

fn uniqueness<S: MetricSpace<Point = Vec<f64>>>(
    report: &mut EntryReport,
    t: &SelfMap<S>,
    starts: Vec<Vec<f64>>,
    cfg: &SolveConfig,
    expect_unique: bool,
    provenance: Provenance,
) -> Result<()> {
    let u = multi_start_uniqueness(t, &starts, cfg)?;
    report.check(
        format!("multi-start from {} starts: unique_within", starts.len()),
        expect_unique,
        u.unique_within,
        u.unique_within == expect_unique,
        &provenance,
    );
    report.uniqueness = Some(u);
    Ok(())
}

fn ball(
    report: &mut EntryReport,
    t: &SelfMap<Euclidean>,
    phi: &ComparisonFunction,
    p: f64,
    r: f64,
    expect_hypothesis: bool,
) -> Result<()> {
    let b = ball_invariance_check(t, phi, &vec![p], r, 1000)?;
    let name = format!("ball B({p}, {r}) under {}", phi.label());
    let provenance = Provenance::theorem("a small centre displacement keeps the orbit in the ball");
    report.check(
        format!("{name}: hypothesis"),
        expect_hypothesis,
        b.hypothesis_holds,
        b.hypothesis_holds == expect_hypothesis,
        &provenance,
    );
    if expect_hypothesis {
        report.check(
            format!("{name}: 1000-step containment"),
            "true",
            format!("{:?}", b.orbit_inside),
            b.orbit_inside == Some(true),
            &provenance,
        );
    }
    report.ball.push(BallCase {
        p,
        r,
        phi: phi.label().into(),
        report: b,
    });
    Ok(())
}

fn iterated(
    report: &mut EntryReport,
    t: &SelfMap<Euclidean>,
    phi: &ComparisonFunction,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<()> {
    for n in [2, 3] {
        let observed = match iterated_map_check(t, phi, n, pairs, DEFAULT_CLASSIFY_DEPTH) {
            Ok(v) => v.outcome.to_string(),
            Err(e) => e.to_string(),
        };
        report.check(
            format!("iterate T^{n} against {}^{n}", phi.label()),
            Outcome::Satisfied,
            &observed,
            observed == Outcome::Satisfied.to_string(),
            &Provenance::theorem("iterates of a weak quasicontraction are weak quasicontractions"),
        );
    }
    Ok(())
}

fn line_pairs(
    space: &Euclidean,
    count: usize,
    seed: u64,
    witnesses: &[(f64, f64)],
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let w: Vec<_> = witnesses.iter().map(|&(x, y)| (vec![x], vec![y])).collect();
    sample_pairs(space, count, seed, &w)
}

fn halving() -> GalleryEntry {
    let exact = Provenance::analytic("d(Tx,Ty) = d(x,y)/2 exactly");
    GalleryEntry {
        label: "halving",
        space: "real line, pairs sampled from [-10, 10]",
        map: "T(x) = x/2",
        expected_class: vec![
            expect(ContractionClass::Banach(0.5), Outcome::Satisfied, exact.clone()),
            expect(ContractionClass::Banach(0.75), Outcome::Satisfied, exact.clone()),
            expect(ContractionClass::Banach(0.4), Outcome::Falsified, exact.clone()),
            expect(ContractionClass::NonlinearContraction(affine(0.5)), Outcome::Satisfied, exact.clone()),
            expect(ContractionClass::CiricLinear(0.5), Outcome::Satisfied, exact.clone()),
            expect(ContractionClass::StrongQuasi(affine(0.5)), Outcome::Satisfied, exact.clone()),
            expect(
                ContractionClass::WeakQuasi(affine(0.5)),
                Outcome::Satisfied,
                Provenance::analytic("orbits shrink geometrically towards 0"),
            ),
        ],
        expected_fixed_point: Some(ExpectedPoint {
            value: vec![0.0],
            tolerance: 1e-6,
            provenance: Provenance::analytic("x = x/2 only at 0"),
        }),
        notes: "Linear contraction; every class holds at q = 1/2 and the orbit bound d(x,Tx)/(1-q) is attained.",
        run: run_halving,
    }
}

fn run_halving(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let t = line_map(e.label)?;
    let pairs = line_pairs(t.space(), DEFAULT_PAIR_COUNT, seed, &[])?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, vector)?;
    hierarchy(&mut report, &t, 0.5, &pairs)?;
    iterated(&mut report, &t, &affine(0.5), &pairs)?;

    let cfg = SolveConfig::new(1e-6).with_phi(affine(0.5));
    solve_to(&mut report, &t, 1.0, &cfg, e.expected_fixed_point.as_ref())?;
    uniqueness(
        &mut report,
        &t,
        vec![vec![-1.0], vec![1.0]],
        &cfg,
        true,
        Provenance::theorem("a quasicontraction has at most one fixed point"),
    )?;

    for x in [-10.0, 1.0, 7.0] {
        let c = ciric_orbit_bound(&t, &vec![x], 0.5, DEFAULT_PROBE_DEPTH)?;
        report.check(
            format!("orbit bound from {x}"),
            format!("≤ {}", c.bound),
            c.observed,
            c.holds,
            &Provenance::theorem("orbits of a linear quasicontraction lie within d(x,Tx)/(1-q)"),
        );
    }
    ball(&mut report, &t, &affine(0.5), 0.0, 1.0, true)?;
    Ok(report.finish())
}

fn cos() -> GalleryEntry {
    let lipschitz = Provenance::analytic("|cos x - cos y| ≤ sin(1)·|x-y| on [0,1], sin(1) < 0.85");
    GalleryEntry {
        label: "cos",
        space: "real line, pairs sampled from [0, 1]",
        map: "T(x) = cos x",
        expected_class: vec![
            expect(ContractionClass::Banach(0.85), Outcome::Satisfied, lipschitz.clone()),
            expect(
                ContractionClass::Banach(0.8),
                Outcome::Falsified,
                Provenance::analytic("the ratio approaches sin(1) > 0.8 near x = 1"),
            ),
            expect(
                ContractionClass::NonlinearContraction(ComparisonFunction::tapered_table()),
                Outcome::Satisfied,
                Provenance::analytic("t - t²/8 ≥ sin(1)·t on [0,1]"),
            ),
            expect(ContractionClass::CiricLinear(0.85), Outcome::Satisfied, lipschitz.clone()),
            expect(
                ContractionClass::StrongQuasi(ComparisonFunction::tapered_table()),
                Outcome::Satisfied,
                Provenance::analytic("implied by the nonlinear contraction bound"),
            ),
        ],
        expected_fixed_point: Some(ExpectedPoint {
            value: vec![DOTTIE],
            tolerance: 1e-9,
            provenance: Provenance::brute_force("bisection of cos x - x on [0,1] to 1e-14"),
        }),
        notes: "Nonlinear contraction on [0,1]; cos maps the line into [-1,1] and cos² into [cos 1, 1], so every orbit ends up in the contracting region.",
        run: run_cos,
    }
}

fn run_cos(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let t = line_map(e.label)?;
    let pairs = line_pairs(t.space(), DEFAULT_PAIR_COUNT, seed, &[(0.99, 1.0)])?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, vector)?;
    hierarchy(&mut report, &t, 0.85, &pairs)?;

    let cfg = SolveConfig::new(1e-9);
    solve_to(&mut report, &t, 0.0, &cfg, e.expected_fixed_point.as_ref())?;
    uniqueness(
        &mut report,
        &t,
        vec![vec![-5.0], vec![0.0], vec![3.0]],
        &cfg,
        true,
        Provenance::theorem("a quasicontraction has at most one fixed point"),
    )?;
    if let Some(u) = &report.uniqueness {
        let spread = u.max_mutual_distance;
        report.check(
            "multi-start spread",
            "< 1e-8",
            spread,
            spread < 1e-8,
            &Provenance::brute_force("every start converges to the bisection root"),
        );
    }
    ball(&mut report, &t, &affine(0.85), 0.739, 0.1, true)?;
    Ok(report.finish())
}

fn identity() -> GalleryEntry {
    let no_gain = Provenance::analytic("d(Tx,Ty) = d(x,y) = diam{x,y,Tx,Ty} > φ of it");
    GalleryEntry {
        label: "identity",
        space: "real line, pairs sampled from [-1, 1]",
        map: "T(x) = x",
        expected_class: vec![
            expect(ContractionClass::Banach(0.5), Outcome::Falsified, no_gain.clone()),
            expect(ContractionClass::StrongQuasi(affine(0.5)), Outcome::Falsified, no_gain.clone()),
            expect(
                ContractionClass::WeakQuasi(affine(0.5)),
                Outcome::Falsified,
                Provenance::analytic("orbits are constant, so diam O(x,y) = d(x,y)"),
            ),
        ],
        expected_fixed_point: None,
        notes: "Negative control for uniqueness: every point is fixed, so multi-start must report distinct fixed points.",
        run: run_identity,
    }
}

fn run_identity(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let t = line_map(e.label)?;
    let pairs = line_pairs(t.space(), DEFAULT_PAIR_COUNT, seed, &[(0.0, 1.0)])?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, vector)?;
    hierarchy(&mut report, &t, 0.5, &pairs)?;

    let cfg = SolveConfig::new(1e-9);
    match solve(&t, &vec![0.3], &cfg) {
        Ok(r) => {
            report.check(
                "solve returns the start unchanged",
                "0 iterations, residual 0",
                format!("{} iterations, residual {}", r.iterations, r.residual),
                r.iterations == 0 && r.residual == 0.0 && r.fixed_point == vec![0.3],
                &Provenance::analytic("every point is fixed"),
            );
            report.solve = Some(r.summary());
        }
        Err(err) => report.check(
            "solve",
            "converged",
            err,
            false,
            &Provenance::analytic("every point is fixed"),
        ),
    }
    uniqueness(
        &mut report,
        &t,
        vec![vec![0.0], vec![1.0]],
        &cfg,
        false,
        Provenance::analytic("0 and 1 are both fixed"),
    )?;
    if let Some(u) = &report.uniqueness {
        report.check(
            "multi-start spread",
            1,
            u.max_mutual_distance,
            u.max_mutual_distance == 1.0,
            &Provenance::analytic("d(0, 1) = 1"),
        );
    }
    Ok(report.finish())
}

/// Probe settings for the walk: the default threshold `1e6·(1+d)` is never
/// reached by a unit-speed walk in a few thousand steps.
const WALK_PROBE_DEPTH: usize = DEFAULT_PROBE_DEPTH;
const WALK_PROBE_THRESHOLD: f64 = 1000.0;

fn arith_walk() -> GalleryEntry {
    GalleryEntry {
        label: "arith_walk",
        space: "real line, pairs sampled from [-1, 1]",
        map: "T(x) = x + 1",
        expected_class: vec![
            expect(
                ContractionClass::Banach(0.5),
                Outcome::Falsified,
                Provenance::analytic("T is an isometry"),
            ),
            expect(
                ContractionClass::WeakQuasi(affine(0.5)),
                Outcome::Inconclusive,
                Provenance::analytic("orbits are unbounded, so no finite prefix can decide"),
            ),
        ],
        expected_fixed_point: None,
        notes: "Negative control for boundedness: no fixed point, orbits escape linearly; no solve is attempted.",
        run: run_arith_walk,
    }
}

fn run_arith_walk(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let t = line_map(e.label)?;
    let pairs = line_pairs(t.space(), DEFAULT_PAIR_COUNT, seed, &[(0.0, 0.0)])?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, vector)?;
    hierarchy(&mut report, &t, 0.5, &pairs)?;

    let probe = boundedness_probe(&t, &vec![0.0], WALK_PROBE_DEPTH, WALK_PROBE_THRESHOLD)?;
    report.check(
        format!("boundedness probe from 0, threshold {WALK_PROBE_THRESHOLD}"),
        "threshold_exceeded at step 1000",
        format!("{probe:?}"),
        matches!(probe, ProbeVerdict::ThresholdExceeded { step: 1000, .. }),
        &Provenance::analytic("d(0, Tⁿ0) = n"),
    );
    report.probe = Some(probe);

    for phi in builtin_families() {
        for p in [0.0, 2.5] {
            for r in [0.25, 0.5, 1.0] {
                ball(&mut report, &t, &phi, p, r, false)?;
            }
        }
    }
    Ok(report.finish())
}

fn kannan_map(x: f64) -> f64 {
    if x < 1.0 {
        x / 4.0
    } else {
        0.125
    }
}

/// Largest `d(Kx,Ky)/diam{x,y,Kx,Ky}` over the `10⁻³` grid on `[0,1]²`.
fn kannan_factor() -> f64 {
    static Q: OnceLock<f64> = OnceLock::new();
    *Q.get_or_init(|| {
        let space = Euclidean::line();
        let t = SelfMap::scalar("kannan_like", space, kannan_map);
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let pairs: Vec<_> = grid
            .iter()
            .enumerate()
            .flat_map(|(i, &x)| grid[i + 1..].iter().map(move |&y| (vec![x], vec![y])))
            .collect();
        measured_strong_factor(&t, &pairs).expect("grid points are finite")
    })
}

fn kannan_like() -> GalleryEntry {
    let q = kannan_factor();
    let measured = Provenance::brute_force("largest ratio over the 1e-3 grid on [0,1]²");
    GalleryEntry {
        label: "kannan_like",
        space: "real line, pairs sampled from [0, 1] plus pairs at the jump",
        map: "K(x) = x/4 for x < 1, K(1) = 1/8",
        expected_class: vec![
            expect(
                ContractionClass::Banach(0.5),
                Outcome::Falsified,
                Provenance::analytic("K jumps at 1"),
            ),
            expect(
                ContractionClass::NonlinearContraction(affine(0.5)),
                Outcome::Falsified,
                Provenance::analytic("d(Kx,K1) → 1/8 while d(x,1) → 0"),
            ),
            expect(ContractionClass::CiricLinear(q), Outcome::Satisfied, measured.clone()),
            expect(ContractionClass::StrongQuasi(affine(q)), Outcome::Satisfied, measured),
        ],
        expected_fixed_point: Some(ExpectedPoint {
            value: vec![0.0],
            tolerance: 1e-9,
            provenance: Provenance::analytic("K(0) = 0 and K has no other fixed point"),
        }),
        notes: "Discontinuous strong quasicontraction: the diameter of {x,y,Kx,Ky} absorbs the jump that defeats any d(x,y)-based control. The factor is measured, not assumed.",
        run: run_kannan_like,
    }
}

fn run_kannan_like(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let q = kannan_factor();
    report.check(
        "measured strong factor",
        0.25,
        q,
        (q - 0.25).abs() < 1e-12,
        &Provenance::analytic("the ratio y/(4y) at x = 0 is the supremum"),
    );
    let t = line_map(e.label)?;
    let pairs = line_pairs(
        t.space(),
        DEFAULT_PAIR_COUNT,
        seed,
        &[(0.999, 1.0), (0.5, 1.0), (0.0, 1.0)],
    )?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, vector)?;
    let straddles = report
        .classifications
        .iter()
        .find(|c| c.class.kind == "nonlinear_contraction")
        .and_then(|c| c.witness.as_ref())
        .is_some_and(|w| match (&w.x, &w.y) {
            (PointRepr::Vector(x), PointRepr::Vector(y)) => {
                (x[0] < 1.0 && y[0] == 1.0) || (y[0] < 1.0 && x[0] == 1.0)
            }
            _ => false,
        });
    report.check(
        "nonlinear contraction witness straddles the jump",
        true,
        straddles,
        straddles,
        &Provenance::analytic("only pairs containing 1 can fail"),
    );
    hierarchy(&mut report, &t, q, &pairs)?;

    let cfg = SolveConfig::new(1e-9);
    solve_to(&mut report, &t, 1.0, &cfg, e.expected_fixed_point.as_ref())?;
    uniqueness(
        &mut report,
        &t,
        vec![vec![0.2], vec![0.7], vec![1.0]],
        &cfg,
        true,
        Provenance::theorem("a quasicontraction has at most one fixed point"),
    )?;
    Ok(report.finish())
}

const HARMONIC_EPS: f64 = 1e-8;

fn harmonic() -> GalleryEntry {
    let dominance = Provenance::analytic("(1+x)(1+y) ≥ 1 + |x-y| gives d(Tx,Ty) ≤ φ(d(x,y))");
    GalleryEntry {
        label: "harmonic",
        space: "real line, pairs sampled from [0, 1]",
        map: "T(x) = x/(1+x)",
        expected_class: vec![
            expect(
                ContractionClass::NonlinearContraction(ComparisonFunction::harmonic()),
                Outcome::Satisfied,
                dominance.clone(),
            ),
            expect(
                ContractionClass::StrongQuasi(ComparisonFunction::harmonic()),
                Outcome::Satisfied,
                dominance.clone(),
            ),
            expect(
                ContractionClass::WeakQuasi(ComparisonFunction::harmonic()),
                Outcome::Satisfied,
                dominance,
            ),
            expect(
                ContractionClass::Banach(0.9),
                Outcome::Falsified,
                Provenance::analytic("the Lipschitz ratio tends to 1 near 0"),
            ),
        ],
        // the residual x²/(1+x) ≤ eps only pins x to about √eps
        expected_fixed_point: Some(ExpectedPoint {
            value: vec![0.0],
            tolerance: 2.0 * HARMONIC_EPS.sqrt(),
            provenance: Provenance::analytic("x/(1+x) = x only at 0; residual ≤ eps implies x ≤ 2√eps"),
        }),
        notes: "Sublinear convergence with φ(t) = t/(1+t): no linear factor works, the comparison function does.",
        run: run_harmonic,
    }
}

fn run_harmonic(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let t = line_map(e.label)?;
    let pairs = line_pairs(t.space(), DEFAULT_PAIR_COUNT, seed, &[(0.0, 0.01)])?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, vector)?;
    hierarchy(&mut report, &t, 0.9, &pairs)?;
    iterated(&mut report, &t, &ComparisonFunction::harmonic(), &pairs)?;

    let cfg = SolveConfig::new(HARMONIC_EPS);
    solve_to(&mut report, &t, 1.0, &cfg, e.expected_fixed_point.as_ref())?;
    uniqueness(
        &mut report,
        &t,
        vec![vec![0.3], vec![0.6], vec![1.0]],
        &cfg,
        true,
        Provenance::theorem("a quasicontraction has at most one fixed point"),
    )?;
    Ok(report.finish())
}

/// `y' = y`, `y(0) = 1` on `[0, 0.5]` with 65 nodes.
pub fn picard_problem() -> IvpProblem {
    IvpProblem::new(|_, y| y, 0.0, 0.5, 1.0, 1.0, 65).expect("L·(t1-t0) = 0.5")
}

fn picard_exp() -> GalleryEntry {
    let space = picard_problem().space();
    GalleryEntry {
        label: "picard_exp",
        space: "functions on 65 nodes of [0, 0.5], sup metric",
        map: "Picard operator of y' = y, y(0) = 1, trapezoid rule",
        expected_class: vec![expect(
            ContractionClass::Banach(0.5),
            Outcome::Satisfied,
            Provenance::analytic("trapezoid weights sum to t ≤ 0.5 and L = 1"),
        )],
        expected_fixed_point: Some(ExpectedPoint {
            value: space.tabulate(f64::exp),
            tolerance: 5e-4,
            provenance: Provenance::analytic("trapezoid global error h²/12·t·eᵗ is far below 5e-4"),
        }),
        notes: "Integral-equation application: the discretized Picard operator is a Banach contraction with factor L(t1-t0).",
        run: run_picard_exp,
    }
}

fn run_picard_exp(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let problem = picard_problem();
    let t = picard_operator(&problem)?;
    let space: &GridFunction = t.space();
    let pairs = sample_pairs(space, 64, seed, &[])?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, vector)?;
    let wide = sample_pairs(space, DEFAULT_PAIR_COUNT, seed, &[])?;
    hierarchy(&mut report, &t, problem.contraction_factor(), &wide)?;

    let n = space.nodes();
    let cfg = SolveConfig::new(1e-8);
    match solve(&t, &vec![1.0; n], &cfg) {
        Ok(r) => {
            report.check(
                "solve residual",
                "≤ 1e-8",
                r.residual,
                r.residual <= cfg.eps,
                &Provenance::theorem("the iterates converge to the fixed point"),
            );
            if let Some(expected) = &e.expected_fixed_point {
                check_fixed_point(&mut report, space, &r.fixed_point, expected);
            }
            report.solve = Some(r.summary());
        }
        Err(err) => report.check(
            "solve",
            "converged",
            err,
            false,
            &Provenance::theorem("the iterates converge to the fixed point"),
        ),
    }
    uniqueness(
        &mut report,
        &t,
        vec![vec![0.0; n], vec![1.0; n], vec![2.0; n]],
        &cfg,
        true,
        Provenance::theorem("a contraction has exactly one fixed point"),
    )?;
    Ok(report.finish())
}

/// Smallest `n` with `qⁿ·d01/(1−q) < eps`, from logarithms.
fn closed_form_horizon(q: f64, d01: f64, eps: f64) -> usize {
    let x = (eps * (1.0 - q) / d01).ln() / q.ln();
    if x < 0.0 {
        0
    } else {
        x.floor() as usize + 1
    }
}

fn attractor_checks(
    report: &mut EntryReport,
    sys: &IfsSystem,
    seed_point: &[f64],
    eps: f64,
) -> Result<Option<FinitePointSet>> {
    let q = sys.ratio();
    let a = match attractor(sys, seed_point, eps, 64) {
        Ok(a) => a,
        Err(err) => {
            report.check(
                "attractor",
                "converged",
                err,
                false,
                &Provenance::theorem("the Hutchinson operator contracts"),
            );
            return Ok(None);
        }
    };
    let expected = closed_form_horizon(q, a.initial_step, eps);
    report.check(
        "attractor depth",
        format!("{expected} ± 1"),
        a.certificate.depth,
        a.certificate.depth.abs_diff(expected) <= 1,
        &Provenance::analytic("qⁿ·d(S₀,S₁)/(1-q) < eps"),
    );
    report.check(
        "attractor bound",
        format!("< {eps}"),
        a.certificate.bound,
        a.certificate.bound < eps,
        &Provenance::theorem("a-priori estimate for a contraction"),
    );
    let contracting = a.step_distances.windows(2).all(|h| h[1] <= q * h[0] + 1e-9);
    report.check(
        "empirical contraction h(k+1) ≤ q·h(k) + 1e-9",
        true,
        contracting,
        contracting,
        &Provenance::theorem("the Hutchinson operator is a contraction with factor q"),
    );
    report.attractor = Some(AttractorSummary {
        depth: a.certificate.depth,
        q: a.certificate.q,
        bound: a.certificate.bound,
        points: a.points.len(),
        initial_step: a.initial_step,
        merged_steps: a.merged_steps,
    });
    Ok(Some(a.points))
}

fn hausdorff_pairs(
    space: &Hausdorff,
    count: usize,
    seed: u64,
    witnesses: &[(Vec<f64>, Vec<f64>)],
) -> Result<Vec<(FinitePointSet, FinitePointSet)>> {
    let w = witnesses
        .iter()
        .map(|(a, b)| {
            Ok((
                FinitePointSet::singleton(a.clone())?,
                FinitePointSet::singleton(b.clone())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    sample_pairs(space, count, seed, &w)
}

fn sierpinski() -> GalleryEntry {
    let sim = Provenance::analytic("each map is a similarity with ratio 1/2");
    GalleryEntry {
        label: "sierpinski",
        space: "finite subsets of the plane, Hausdorff metric",
        map: "Hutchinson operator of three half-scale maps",
        expected_class: vec![
            expect(ContractionClass::Banach(0.5), Outcome::Satisfied, sim.clone()),
            expect(ContractionClass::StrongQuasi(affine(0.5)), Outcome::Satisfied, sim),
            expect(
                ContractionClass::Banach(0.4),
                Outcome::Falsified,
                Provenance::analytic("nearby singletons move by exactly half their distance"),
            ),
        ],
        expected_fixed_point: None,
        notes: "Fractal application: the attractor is the fixed point in the Hausdorff space and is certified by the a-priori bound.",
        run: run_sierpinski,
    }
}

fn run_sierpinski(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let sys = IfsSystem::sierpinski();
    let t = hutchinson_map(&sys);
    let space = Hausdorff::new(2)?.with_sample_box(0.0, 1.0);
    let pairs = hausdorff_pairs(
        &space,
        DEFAULT_PAIR_COUNT,
        seed,
        &[(vec![0.0, 0.0], vec![0.01, 0.0])],
    )?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, set)?;
    hierarchy(&mut report, &t, 0.5, &pairs)?;
    if let Some(points) = attractor_checks(&mut report, &sys, &[0.0, 0.0], 0.01)? {
        let depth = report.attractor.as_ref().map_or(0, |a| a.depth);
        let expected = 3usize.pow(depth as u32);
        report.check(
            "attractor point count",
            expected,
            points.len(),
            points.len() == expected,
            &Provenance::analytic("images of distinct points stay distinct at this resolution"),
        );
    }
    Ok(report.finish())
}

/// Distance from `x` to the Cantor set, resolved to `3^-depth`.
pub fn cantor_distance(x: f64, depth: usize) -> f64 {
    if depth == 0 || !(0.0..=1.0).contains(&x) {
        return if x < 0.0 {
            -x
        } else if x > 1.0 {
            x - 1.0
        } else {
            0.0
        };
    }
    let third = 1.0 / 3.0;
    if x <= third {
        cantor_distance(3.0 * x, depth - 1) / 3.0
    } else if x >= 2.0 * third {
        cantor_distance(3.0 * x - 2.0, depth - 1) / 3.0
    } else {
        (x - third).min(2.0 * third - x)
    }
}

fn cantor() -> GalleryEntry {
    let sim = Provenance::analytic("each map is a similarity with ratio 1/3");
    GalleryEntry {
        label: "cantor",
        space: "finite subsets of the line, Hausdorff metric",
        map: "Hutchinson operator of x/3 and x/3 + 2/3",
        expected_class: vec![
            expect(
                ContractionClass::Banach(1.0 / 3.0),
                Outcome::Satisfied,
                sim.clone(),
            ),
            expect(
                ContractionClass::CiricLinear(1.0 / 3.0),
                Outcome::Satisfied,
                sim,
            ),
            expect(
                ContractionClass::Banach(0.3),
                Outcome::Falsified,
                Provenance::analytic("nearby singletons move by exactly a third of their distance"),
            ),
        ],
        expected_fixed_point: None,
        notes: "Middle-thirds Cantor set as the attractor of a two-map system.",
        run: run_cantor,
    }
}

fn run_cantor(e: &GalleryEntry, seed: u64) -> Result<EntryReport> {
    let mut report = EntryReport::new(e.label, seed);
    let sys = IfsSystem::cantor();
    let t = hutchinson_map(&sys);
    let space = Hausdorff::new(1)?.with_sample_box(0.0, 1.0);
    let pairs = hausdorff_pairs(&space, DEFAULT_PAIR_COUNT, seed, &[(vec![0.0], vec![0.01])])?;
    classify_all(&mut report, &t, &e.expected_class, &pairs, set)?;
    hierarchy(&mut report, &t, 1.0 / 3.0, &pairs)?;
    if let Some(points) = attractor_checks(&mut report, &sys, &[0.0], 1e-3)? {
        let worst = points
            .iter()
            .map(|p| cantor_distance(p[0], 40))
            .fold(0.0, f64::max);
        report.check(
            "attractor points lie on the Cantor set",
            "distance ≤ 1e-3",
            worst,
            worst <= 1e-3,
            &Provenance::analytic("ternary digits avoid 1"),
        );
    }
    Ok(report.finish())
}
