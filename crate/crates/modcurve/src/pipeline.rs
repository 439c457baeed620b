//! End-to-end runs over a bundle: validation, candidate factors, the certified map to the
//! elliptic curve of least modular degree, and the rational points it pins down.

use std::collections::BTreeSet;
use std::time::Instant;

use log::{log, Level};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bundle::{candidate_factors, BundleError, CandidateFactor, CurveBundle, EllCurveRecord};
use crate::elliptic::{mordell_weil_rank0, EllipticCurveQ, EllipticError, Point};
use crate::exactmath::{format_rat, Rat};
use crate::hecke::{isolate_eigenform, Eigenform, HeckeError};
use crate::mapbuild::{
    certify_map, degree_window, find_map, required_prec, triple_defined_at, working_prec, xy_expansions, CertifiedMap, MapConfig, MapError,
    VanishingCheck,
};
use crate::periods::{
    cusp_constants, match_optimal_curve, modular_degree, recognize_lattice, sample_periods, CuspConstant, FormIntegrals,
    OptimalMatch, PeriodConfig, PeriodError, RecognizedLattice,
};
use crate::ratpoints::{
    base_scheme, evaluate_j, format_point, local_solvability, point_search, primes_dividing, pullback_scheme, solve_zerodim, summarize_j,
    JSummary, JValue, LocalSolvability, PointError, PointReport, SolveConfig,
};

/// Largest numerator or denominator accepted for a ratio of sampled periods.
pub const LATTICE_BOUND: i64 = 100;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no isogeny classes to try")]
    NoClasses,
    #[error("no class gave a map: {}", .0.join("; "))]
    NoUsableClass(Vec<String>),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Hecke(#[from] HeckeError),
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Point(#[from] PointError),
    #[error(transparent)]
    Curve(#[from] EllipticError),
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Multiplies the working precision; at least 1.
    pub precmult: Rat,
    /// Skip the base-point search and the translation that uses it.
    pub ignore_base: bool,
    pub verbose: bool,
    pub num_mats: usize,
    pub precision_bits: usize,
    pub seed: u64,
    /// Bound for the prime ℓ of the point-count upper bound.
    pub prime_bound: u64,
    /// Bound for the primes used to isolate eigenforms and list candidates.
    pub hecke_prime_bound: u64,
    /// Coordinate bound for the base-point search.
    pub height_bound: i64,
    pub enum_budget: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let p = PeriodConfig::default();
        let s = SolveConfig::default();
        PipelineConfig {
            precmult: Rat::one(),
            ignore_base: false,
            verbose: false,
            num_mats: p.num_mats,
            precision_bits: p.bits,
            seed: p.seed,
            prime_bound: s.prime_bound,
            hecke_prime_bound: crate::hecke::DEFAULT_PRIME_BOUND,
            height_bound: 10,
            enum_budget: s.enum_budget,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.precmult < Rat::one() {
            return Err(PipelineError::Config(format!("precmult {} is below 1", format_rat(&self.precmult))));
        }
        if self.num_mats == 0 || self.precision_bits < 64 || self.height_bound < 1 {
            return Err(PipelineError::Config("num_mats, precision_bits ≥ 64 and height_bound must be positive".into()));
        }
        Ok(())
    }

    pub fn period_config(&self) -> PeriodConfig {
        PeriodConfig { bits: self.precision_bits, num_mats: self.num_mats, seed: self.seed, ..PeriodConfig::default() }
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig { prime_bound: self.prime_bound, enum_budget: self.enum_budget }
    }

    fn level(&self) -> Level {
        if self.verbose {
            Level::Info
        } else {
            Level::Debug
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BundleSummary {
    pub label: String,
    pub level: u32,
    pub index: u64,
    pub genus: usize,
    pub cusps: usize,
    pub widths: Vec<u32>,
    pub variables: usize,
    pub equations: usize,
    pub prec: i64,
    pub has_jmap: bool,
}

pub fn summarize_bundle(b: &CurveBundle) -> BundleSummary {
    BundleSummary {
        label: b.label.clone(),
        level: b.level,
        index: b.index,
        genus: b.genus,
        cusps: b.cusps.len(),
        widths: b.widths(),
        variables: b.nvars(),
        equations: b.model.len(),
        prec: b.prec,
        has_jmap: b.jmap.is_some(),
    }
}

/// An isogeny class to try, with its curves in table order.
#[derive(Clone, Debug)]
pub struct ClassInput {
    pub label: String,
    pub curves: Vec<EllipticCurveQ>,
    pub rank: u32,
    pub multiplicity: usize,
}

/// Rank-0 candidate classes with all their curves from the table.
pub fn classes_from_candidates(cands: &[CandidateFactor], table: &[EllCurveRecord]) -> Result<Vec<ClassInput>, PipelineError> {
    let mut out = Vec::new();
    for c in cands.iter().filter(|c| c.representative.rank == 0) {
        let curves = table
            .iter()
            .filter(|r| r.isogeny_class == c.isogeny_class)
            .map(|r| r.curve())
            .collect::<Result<Vec<_>, _>>()?;
        out.push(ClassInput { label: c.isogeny_class.clone(), curves, rank: 0, multiplicity: c.multiplicity });
    }
    Ok(out)
}

/// Per-class analysis: eigenform, periods, optimal curve, Manin constant, degree and cusp
/// constants.
#[derive(Clone, Debug)]
pub struct ClassAnalysis {
    pub label: String,
    pub rank: u32,
    pub eigenform: Eigenform,
    pub periods: Vec<String>,
    pub lattice: RecognizedLattice,
    pub matched: OptimalMatch,
    pub degree: u64,
    pub constants: Vec<CuspConstant>,
}

pub fn analyze_class(bundle: &CurveBundle, class: &ClassInput, cfg: &PipelineConfig) -> Result<ClassAnalysis, PipelineError> {
    let first = class.curves.first().ok_or(PipelineError::NoClasses)?;
    let pcfg = cfg.period_config();
    let eigenform = isolate_eigenform(bundle, &class.label, |p| first.ap(p).unwrap_or(0), class.multiplicity, cfg.hecke_prime_bound)?;
    let ints = FormIntegrals::new(bundle, &eigenform.expansions, &pcfg)?;
    let sample = sample_periods(bundle, &ints, &pcfg)?;
    let lattice = recognize_lattice(&sample.values, LATTICE_BOUND, pcfg.match_tol)?;
    let matched = match_optimal_curve(&lattice, &class.curves, &pcfg)?;
    let degree = modular_degree(&ints, &matched, &pcfg)?;
    let constants = cusp_constants(&ints, &matched, bundle.level, &pcfg)?;
    Ok(ClassAnalysis {
        label: class.label.clone(),
        rank: class.rank,
        eigenform,
        periods: sample.values.iter().map(|z| z.to_string()).collect(),
        lattice,
        matched,
        degree,
        constants,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StepTiming {
    pub step: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassAttempt {
    pub class: String,
    pub modular_degree: Option<u64>,
    pub manin: Option<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub weight: u32,
    pub total: String,
    pub threshold: String,
    pub passes: bool,
}

impl From<&VanishingCheck> for CheckSummary {
    fn from(c: &VanishingCheck) -> Self {
        CheckSummary { weight: c.weight, total: format_rat(&c.total), threshold: format_rat(&c.threshold), passes: c.passes() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MapSummary {
    pub degree: u32,
    pub prec: i64,
    pub triples: Vec<[String; 3]>,
    pub base_image: String,
    pub status: crate::mapbuild::MapStatus,
    pub relations: Vec<CheckSummary>,
    pub compatibility: Vec<(usize, usize, CheckSummary)>,
}

fn summarize_map(m: &CertifiedMap) -> MapSummary {
    let cert = m.certificate.as_ref();
    MapSummary {
        degree: m.degree,
        prec: cert.map_or(0, |c| c.prec),
        triples: m.triples.iter().map(|t| [t.a.to_string(), t.b.to_string(), t.c.to_string()]).collect(),
        base_image: format_cyclo_point(&m.base_image),
        status: m.status,
        relations: cert.map_or_else(Vec::new, |c| c.relations.iter().map(CheckSummary::from).collect()),
        compatibility: cert.map_or_else(Vec::new, |c| c.compatibility.iter().map(|(i, j, v)| (*i, *j, v.into())).collect()),
    }
}

fn format_cyclo_point(p: &Point<crate::exactmath::CyclotomicNumber>) -> String {
    match p {
        Point::Infinity => "O".into(),
        Point::Affine(x, y) => format!("({x}, {y})"),
    }
}

pub fn format_rat_point(p: &Point<Rat>) -> String {
    match p {
        Point::Infinity => "O".into(),
        Point::Affine(x, y) => format!("({}, {})", format_rat(x), format_rat(y)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Obstruction {
    pub p: u64,
    pub k: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetReport {
    pub target: String,
    pub report: Option<PointReport>,
    pub error: Option<String>,
}

/// Everything a run learned, in the order it was learned.
#[derive(Clone, Debug, Serialize, Default)]
pub struct RunReport {
    pub bundle: String,
    pub timings: Vec<StepTiming>,
    pub base_point: Option<String>,
    pub ignore_base: bool,
    pub obstruction: Option<Obstruction>,
    pub classes: Vec<ClassAttempt>,
    pub class: Option<String>,
    pub curve: Option<String>,
    pub manin: Option<String>,
    pub modular_degree: Option<u64>,
    pub periods: Vec<String>,
    pub map: Option<MapSummary>,
    pub targets: Vec<TargetReport>,
    pub points: Vec<String>,
    pub j_values: Vec<JValue>,
    pub j_summary: Option<JSummary>,
    /// The point list is all of X(ℚ).
    pub complete: bool,
    pub success: bool,
}

struct Clock<'a> {
    report: &'a mut RunReport,
    start: Instant,
}

impl Clock<'_> {
    fn lap(&mut self, step: &str) {
        let seconds = self.start.elapsed().as_secs_f64();
        self.report.timings.push(StepTiming { step: step.into(), seconds });
        self.start = Instant::now();
    }
}

/// Result of the map search: the certified map when one exists, with its class.
#[derive(Clone, Debug)]
pub struct MapRun {
    pub map: Option<CertifiedMap>,
    pub analysis: Option<ClassAnalysis>,
    pub report: RunReport,
}

/// The base-point candidates, or a local obstruction proving X(ℚ) = ∅.
pub fn base_points(bundle: &CurveBundle, cfg: &PipelineConfig) -> Result<Vec<Vec<BigInt>>, Obstruction> {
    let pts = point_search(&bundle.model, bundle.nvars(), cfg.height_bound);
    if !pts.is_empty() {
        return Ok(pts);
    }
    for p in primes_dividing(bundle.level) {
        if let LocalSolvability::Empty { k } = local_solvability(&bundle.model, bundle.nvars(), p) {
            return Err(Obstruction { p, k });
        }
    }
    Ok(Vec::new())
}

/// Working precision with precmult applied.
fn scaled_prec(bundle: &CurveBundle, r: u64, precmult: &Rat) -> Option<i64> {
    if precmult.is_one() {
        return None;
    }
    let (_, hi) = degree_window(r, bundle.genus, bundle.graded_deg);
    let need = Rat::from_integer(BigInt::from(required_prec(bundle, hi - 1)));
    (need * precmult).ceil().to_integer().to_i64()
}

/// Base point, class selection by least modular degree, map search and
/// certification.
pub fn run_find_map(bundle: &CurveBundle, classes: &[ClassInput], cfg: &PipelineConfig) -> Result<MapRun, PipelineError> {
    cfg.validate()?;
    if classes.is_empty() {
        return Err(PipelineError::NoClasses);
    }
    let lvl = cfg.level();
    let mut report = RunReport { bundle: bundle.label.clone(), ignore_base: cfg.ignore_base, ..RunReport::default() };
    let mut clock = Clock { report: &mut report, start: Instant::now() };

    let mut bases: Vec<Vec<BigInt>> = Vec::new();
    if !cfg.ignore_base {
        match base_points(bundle, cfg) {
            Err(o) => {
                log!(lvl, "no points modulo {}^{}: X(ℚ) is empty", o.p, o.k);
                clock.report.obstruction = Some(o);
                clock.lap("base point");
                report.complete = true;
                report.success = true;
                return Ok(MapRun { map: None, analysis: None, report });
            }
            Ok(pts) if pts.is_empty() => {
                log!(lvl, "no point of height ≤ {} and no local obstruction; ignoring the base point", cfg.height_bound);
                clock.report.ignore_base = true;
            }
            Ok(pts) => {
                log!(lvl, "{} points of height ≤ {}, first {}", pts.len(), cfg.height_bound, format_point(&pts[0]));
                bases = pts;
            }
        }
        clock.lap("base point");
    }

    // every class is independent up to the map search
    let results: Vec<Result<ClassAnalysis, PipelineError>> =
        classes.par_iter().map(|c| analyze_class(bundle, c, cfg)).collect();
    let mut best: Option<ClassAnalysis> = None;
    let mut errors = Vec::new();
    for (c, r) in classes.iter().zip(results) {
        match r {
            Ok(a) => {
                log!(lvl, "{}: optimal curve {}, c = {}, degree {}", c.label, a.matched.curve, format_rat(&a.matched.manin), a.degree);
                clock.report.classes.push(ClassAttempt {
                    class: c.label.clone(),
                    modular_degree: Some(a.degree),
                    manin: Some(format_rat(&a.matched.manin)),
                    error: None,
                });
                if best.as_ref().is_none_or(|b| a.degree < b.degree) {
                    best = Some(a);
                }
            }
            Err(e) => {
                log!(lvl, "{}: {e}", c.label);
                errors.push(format!("{}: {e}", c.label));
                clock.report.classes.push(ClassAttempt { class: c.label.clone(), modular_degree: None, manin: None, error: Some(e.to_string()) });
            }
        }
    }
    let a = best.ok_or(PipelineError::NoUsableClass(errors))?;
    clock.lap("periods and degree");
    clock.report.class = Some(a.label.clone());
    clock.report.curve = Some(a.matched.curve.to_string());
    clock.report.manin = Some(format_rat(&a.matched.manin));
    clock.report.modular_degree = Some(a.degree);
    clock.report.periods = a.periods.clone();

    let mcfg = MapConfig { prec: scaled_prec(bundle, a.degree, &cfg.precmult), ..MapConfig::default() };
    let prec = working_prec(bundle, a.degree, &mcfg)?;
    log!(lvl, "working precision {prec} coefficients per cusp");
    let xy = xy_expansions(&a.eigenform.expansions, &a.matched.manin, &a.matched.curve, &a.constants, prec)?;
    clock.lap("x and y expansions");

    let mut map = None;
    if bases.is_empty() {
        map = Some(find_map(bundle, &a.matched.curve, a.degree, &xy, None, prec, &mcfg)?);
    } else {
        for q in &bases {
            let qr: Vec<Rat> = q.iter().map(|x| Rat::from_integer(x.clone())).collect();
            match find_map(bundle, &a.matched.curve, a.degree, &xy, Some(&qr), prec, &mcfg) {
                Ok(m) => {
                    clock.report.base_point = Some(format_point(q));
                    map = Some(m);
                    break;
                }
                Err(MapError::BasePointExhausted { .. }) => log!(lvl, "{} is a base point of every solution", format_point(q)),
                Err(e) => return Err(e.into()),
            }
        }
        if map.is_none() {
            // no usable base point among those found
            clock.report.ignore_base = true;
            map = Some(find_map(bundle, &a.matched.curve, a.degree, &xy, None, prec, &mcfg)?);
        }
    }
    let map = map.expect("set above");
    log!(lvl, "degree-{} triples: {}", map.degree, map.triples.len());
    clock.lap("map search");

    let map = certify_map(bundle, &map, prec)?;
    clock.lap("certification");
    report.map = Some(summarize_map(&map));
    report.success = true;
    Ok(MapRun { map: Some(map), analysis: Some(a), report })
}

/// Extra degrees searched above the map's for a triple defined at a common zero.
pub const EXTRA_DEGREES: u32 = 2;

/// Coefficients per cusp for certifying degree-d triples, with precmult applied.
fn prec_for_degree(bundle: &CurveBundle, d: u32, precmult: &Rat) -> Result<i64, MapError> {
    let need = Rat::from_integer(BigInt::from(required_prec(bundle, d)));
    let p = (need * precmult).ceil().to_integer().to_i64().unwrap_or(i64::MAX);
    let have = bundle.stored_prec();
    if p > have {
        let m = (p + have - 1) / have.max(1);
        return Err(MapError::InsufficientPrecision { d, have, need: p, precmult: m as u32 });
    }
    Ok(p)
}

fn solve_targets(bundle: &CurveBundle, map: &CertifiedMap, targets: &[Point<Rat>], scfg: &SolveConfig) -> Vec<(Point<Rat>, Result<PointReport, PointError>)> {
    let nv = bundle.nvars();
    targets
        .par_iter()
        .map(|t| {
            let z = pullback_scheme(&bundle.model, nv, map, t);
            (t.clone(), solve_zerodim(&z, bundle.level, scfg))
        })
        .collect()
}

/// Rational points where every stored triple vanishes, seen on some Z_T or, when a scheme
/// could not be solved, on the base scheme itself.
fn common_zeros(bundle: &CurveBundle, map: &CertifiedMap, solved: &[(Point<Rat>, Result<PointReport, PointError>)], scfg: &SolveConfig) -> BTreeSet<Vec<BigInt>> {
    let rat = |p: &[BigInt]| p.iter().map(|x| Rat::from_integer(x.clone())).collect::<Vec<Rat>>();
    let mut out: BTreeSet<Vec<BigInt>> = solved
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .flat_map(|r| r.points.iter())
        .filter(|p| map.image(&rat(p)).is_none())
        .cloned()
        .collect();
    if solved.iter().any(|(_, r)| r.as_ref().map_or(true, |r| !r.complete)) {
        if let Ok(r) = solve_zerodim(&base_scheme(&bundle.model, bundle.nvars(), map), bundle.level, scfg) {
            out.extend(r.points);
        }
    }
    out
}

/// X(ℚ) as the union of the pullbacks of E(ℚ), with j-invariants.
///
/// A rational point where every stored triple vanishes lies on every Z_T, and on the Z_T of its
/// true image with multiplicity, which defeats the Hensel count there. Such points get a
/// further triple of higher degree that is nonzero at them, the same search used for the
/// base point, and the schemes are solved again.
pub fn run_rat_pts(bundle: &CurveBundle, run: MapRun, cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let MapRun { map, analysis, mut report } = run;
    let (Some(mut map), Some(a)) = (map, analysis) else {
        // obstructed: nothing to pull back
        return Ok(report);
    };
    let lvl = cfg.level();
    let start = Instant::now();
    let targets = mordell_weil_rank0(&map.curve, a.rank, cfg.precision_bits)?;
    log!(lvl, "E(ℚ) has {} points", targets.len());
    let scfg = cfg.solve_config();
    let mut solved = solve_targets(bundle, &map, &targets, &scfg);
    let zeros = common_zeros(bundle, &map, &solved, &scfg);
    if !zeros.is_empty() {
        let mut prec = map.certificate.as_ref().map_or(0, |c| c.prec);
        for q in &zeros {
            log!(lvl, "every triple vanishes at {}", format_point(q));
            let qr: Vec<Rat> = q.iter().map(|x| Rat::from_integer(x.clone())).collect();
            for d in map.degree + 1..=map.degree + EXTRA_DEGREES {
                let p = prec_for_degree(bundle, d, &cfg.precmult)?;
                let xy = xy_expansions(&a.eigenform.expansions, &a.matched.manin, &a.matched.curve, &a.constants, p)?;
                if let Some(t) = triple_defined_at(bundle, &map, &xy, &qr, d, p)? {
                    log!(lvl, "added a degree-{d} triple defined there");
                    map.triples.push(t);
                    prec = prec.max(p);
                    break;
                }
            }
        }
        map = certify_map(bundle, &map, prec)?;
        report.map = Some(summarize_map(&map));
        solved = solve_targets(bundle, &map, &targets, &scfg);
    }
    let mut all = BTreeSet::new();
    let mut complete = true;
    for (t, r) in solved {
        let target = format_rat_point(&t);
        match r {
            Ok(r) => {
                log!(lvl, "Z_{target}: {} points, complete: {}", r.points.len(), r.complete);
                complete &= r.complete;
                all.extend(r.points.iter().cloned());
                report.targets.push(TargetReport { target, report: Some(r), error: None });
            }
            Err(e) => {
                log!(lvl, "Z_{target}: {e}");
                complete = false;
                report.targets.push(TargetReport { target, report: None, error: Some(e.to_string()) });
            }
        }
    }
    report.timings.push(StepTiming { step: "rational points".into(), seconds: start.elapsed().as_secs_f64() });
    let points: Vec<Vec<BigInt>> = all.into_iter().collect();
    report.points = points.iter().map(|p| format_point(p)).collect();
    if bundle.jmap.is_some() {
        let start = Instant::now();
        let js = evaluate_j(bundle.jmap.as_ref(), &points)?;
        report.j_summary = Some(summarize_j(&js, bundle.rational_cusp_count, &bundle.cm_point_counts));
        report.j_values = js;
        report.timings.push(StepTiming { step: "j-invariants".into(), seconds: start.elapsed().as_secs_f64() });
    }
    report.complete = complete && points_map_to_targets(&map, &report);
    report.success = report.complete && report.map.is_some();
    Ok(report)
}

/// Classes for a run: the table's rank-0 candidates, optionally restricted to given labels.
pub fn select_classes(
    bundle: &CurveBundle,
    table: &[EllCurveRecord],
    only: &[String],
    cfg: &PipelineConfig,
) -> Result<Vec<ClassInput>, PipelineError> {
    if only.is_empty() {
        let cands = candidate_factors(bundle, table, cfg.hecke_prime_bound)?;
        return classes_from_candidates(&cands, table);
    }
    // explicit classes skip the candidate filter, so isolation is the check
    let mut out = Vec::new();
    for label in only {
        let recs: Vec<&EllCurveRecord> = table.iter().filter(|r| &r.isogeny_class == label).collect();
        let Some(first) = recs.first() else {
            return Err(PipelineError::Config(format!("class {label} is not in the table")));
        };
        let curves = recs.iter().map(|r| r.curve()).collect::<Result<Vec<_>, _>>()?;
        out.push(ClassInput { label: label.clone(), curves, rank: first.rank, multiplicity: 1 });
    }
    Ok(out)
}

/// Whether every found point is sent to its target by the map.
pub fn points_map_to_targets(map: &CertifiedMap, report: &RunReport) -> bool {
    report.targets.iter().all(|t| {
        t.report.as_ref().is_none_or(|r| {
            r.points.iter().all(|p| {
                let v: Vec<Rat> = p.iter().map(|x| Rat::from_integer(x.clone())).collect();
                map.image(&v).is_some_and(|img| format_rat_point(&img) == t.target)
            })
        })
    })
}
