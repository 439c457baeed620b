//! Curve bundles: the serialized modular-curve data (model, cusps, cusp-form expansions)
//! consumed by the pipeline, plus the elliptic-curve table and candidate-factor search.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::{EllipticCurveQ, EllipticError};
use crate::hecke::{good_primes, hecke_matrix, HeckeError};
use crate::exactmath::{format_rat, parse_rat, CyclotomicNumber, HomogPoly, MathError, Rat};
use crate::qexp::{FracQSeries, MonomialProducts, SeriesError};
use crate::sl2z::{CosetTable, MatZ, Sl2zError};

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed bundle JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Group(#[from] Sl2zError),
    #[error(transparent)]
    Curve(#[from] EllipticError),
    #[error("invalid bundle: {0}")]
    Invalid(String),
    #[error(transparent)]
    Hecke(#[from] HeckeError),
    #[error("table line {line}: {msg}")]
    Table { line: usize, msg: String },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, BundleError> {
    Err(BundleError::Invalid(msg.into()))
}

type RawTerm = (Vec<u32>, String, String);

#[derive(Serialize, Deserialize, Clone, Debug)]
struct RawSeries {
    width: u32,
    valuation: i64,
    coeffs: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct RawCusp {
    matrix: [i64; 4],
    width: u32,
    rational: bool,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct RawJmap {
    num: Vec<RawTerm>,
    den: Vec<RawTerm>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct RawBundle {
    label: String,
    level: u32,
    index: u64,
    genus: usize,
    graded_deg: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vars: Option<Vec<String>>,
    model: Vec<Vec<RawTerm>>,
    cusps: Vec<RawCusp>,
    gamma_gens: Vec<[i64; 4]>,
    forms: Vec<Vec<RawSeries>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Vec<RawSeries>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coord_weight: Option<u32>,
    prec: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rational_cusp_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cm_point_counts: Option<BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jmap: Option<RawJmap>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cusp {
    pub matrix: MatZ,
    pub width: u32,
    pub rational: bool,
}

/// A validated modular-curve bundle.
///
/// `forms[i][j]` is the i-th weight-2 cusp form slashed by the j-th cusp matrix, as a series
/// in q^{1/w_j}. `coords[i][j]` are the modular forms whose ratios give the model's
/// coordinates; they coincide with `forms` in the canonical case.
#[derive(Clone, Debug)]
pub struct CurveBundle {
    pub label: String,
    pub level: u32,
    pub index: u64,
    pub genus: usize,
    pub graded_deg: u32,
    pub vars: Vec<String>,
    pub model: Vec<HomogPoly>,
    pub cusps: Vec<Cusp>,
    pub gamma_gens: Vec<MatZ>,
    pub forms: Vec<Vec<FracQSeries>>,
    pub coords: Vec<Vec<FracQSeries>>,
    pub coords_are_forms: bool,
    pub coord_weight: u32,
    pub prec: i64,
    pub rational_cusp_count: Option<usize>,
    pub cm_point_counts: BTreeMap<String, usize>,
    pub jmap: Option<(HomogPoly, HomogPoly)>,
    pub cosets: CosetTable,
}

impl PartialEq for CurveBundle {
    fn eq(&self, o: &Self) -> bool {
        let series_eq = |a: &Vec<Vec<FracQSeries>>, b: &Vec<Vec<FracQSeries>>| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| {
                    x.len() == y.len() && x.iter().zip(y).all(|(s, t)| s.prec() == t.prec() && s == t)
                })
        };
        self.label == o.label
            && self.level == o.level
            && self.index == o.index
            && self.genus == o.genus
            && self.graded_deg == o.graded_deg
            && self.vars == o.vars
            && self.model == o.model
            && self.cusps == o.cusps
            && self.gamma_gens == o.gamma_gens
            && series_eq(&self.forms, &o.forms)
            && series_eq(&self.coords, &o.coords)
            && self.coord_weight == o.coord_weight
            && self.prec == o.prec
            && self.rational_cusp_count == o.rational_cusp_count
            && self.cm_point_counts == o.cm_point_counts
            && self.jmap == o.jmap
    }
}

fn parse_poly(nvars: usize, terms: &[RawTerm]) -> Result<HomogPoly, BundleError> {
    let mut ts = Vec::with_capacity(terms.len());
    for (e, num, den) in terms {
        let r = parse_rat(&format!("{num}/{den}"))?;
        ts.push((e.clone(), r));
    }
    Ok(HomogPoly::from_terms(nvars, ts)?)
}

fn poly_raw(p: &HomogPoly) -> Vec<RawTerm> {
    p.terms().map(|(e, c)| (e.clone(), c.numer().to_string(), c.denom().to_string())).collect()
}

fn parse_series(level: u32, phi: usize, raw: &RawSeries, what: &str) -> Result<FracQSeries, BundleError> {
    let mut cs = Vec::with_capacity(raw.coeffs.len());
    for (k, row) in raw.coeffs.iter().enumerate() {
        if row.len() != phi {
            return invalid(format!("{what}: coefficient {} has {} entries, expected φ({level}) = {phi}", raw.valuation + k as i64, row.len()));
        }
        let v: Result<Vec<Rat>, MathError> = row.iter().map(|s| parse_rat(s)).collect();
        cs.push(CyclotomicNumber::from_coeffs(level, v?)?);
    }
    let prec = raw.valuation + cs.len() as i64;
    Ok(FracQSeries::from_coeffs(raw.width, raw.valuation, &cs, prec, level))
}

fn series_raw(s: &FracQSeries) -> RawSeries {
    let coeffs = (s.start()..s.prec()).map(|n| s.coeff(n).coeffs().iter().map(format_rat).collect()).collect();
    RawSeries { width: s.width(), valuation: s.start(), coeffs }
}

impl CurveBundle {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BundleError> {
        let p = path.as_ref();
        let text = fs::read_to_string(p).map_err(|e| BundleError::Io { path: p.display().to_string(), source: e })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        let raw: RawBundle = serde_json::from_str(text)?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawBundle) -> Result<Self, BundleError> {
        let level = raw.level;
        if level == 0 {
            return invalid("level must be positive");
        }
        let phi = crate::exactmath::field(level).phi;
        if raw.forms.is_empty() {
            return invalid("no cusp forms given");
        }
        if raw.forms.len() != raw.genus {
            return invalid(format!("{} forms given for genus {}", raw.forms.len(), raw.genus));
        }
        if raw.cusps.is_empty() {
            return invalid("no cusps given");
        }
        let mut cusps = Vec::new();
        for (j, c) in raw.cusps.iter().enumerate() {
            let m = MatZ::from_array(c.matrix).map_err(|e| BundleError::Invalid(format!("cusp {j}: {e}")))?;
            cusps.push(Cusp { matrix: m, width: c.width, rational: c.rational });
        }
        let parse_family = |fam: &[Vec<RawSeries>], name: &str| -> Result<Vec<Vec<FracQSeries>>, BundleError> {
            let mut out = Vec::new();
            for (i, per) in fam.iter().enumerate() {
                if per.len() != cusps.len() {
                    return invalid(format!("{name} {i} has {} expansions for {} cusps", per.len(), cusps.len()));
                }
                let mut row = Vec::new();
                for (j, s) in per.iter().enumerate() {
                    if s.width != cusps[j].width {
                        return invalid(format!("{name} {i} at cusp {j}: width {} but the cusp has width {}", s.width, cusps[j].width));
                    }
                    row.push(parse_series(level, phi, s, &format!("{name} {i} at cusp {j}"))?);
                }
                out.push(row);
            }
            Ok(out)
        };
        let forms = parse_family(&raw.forms, "form")?;
        for (i, per) in forms.iter().enumerate() {
            for (j, s) in per.iter().enumerate() {
                if let Some(v) = s.valuation() {
                    if v < 1 {
                        return invalid(format!("form {i} at cusp {j} does not vanish at the cusp"));
                    }
                }
            }
        }
        let coords_are_forms = raw.coords.is_none();
        let coords = match &raw.coords {
            Some(c) => parse_family(c, "coordinate")?,
            None => forms.clone(),
        };
        let coord_weight = raw.coord_weight.unwrap_or(2);
        let nvars = coords.len();
        let vars = raw.vars.clone().unwrap_or_else(|| (0..nvars).map(|i| format!("x{i}")).collect());
        if vars.len() != nvars {
            return invalid(format!("{} variable names for {nvars} coordinates", vars.len()));
        }
        let stored = forms.iter().chain(coords.iter()).flatten().map(|s| s.prec()).min().unwrap_or(0);
        if raw.prec > stored {
            return invalid(format!("prec {} exceeds the {stored} stored coefficients", raw.prec));
        }
        let mut model = Vec::new();
        for (k, terms) in raw.model.iter().enumerate() {
            let p = parse_poly(nvars, terms).map_err(|e| BundleError::Invalid(format!("model polynomial {k}: {e}")))?;
            model.push(p);
        }
        let gamma_gens: Vec<MatZ> = raw
            .gamma_gens
            .iter()
            .map(|g| MatZ::from_array(*g))
            .collect::<Result<_, _>>()
            .map_err(|e| BundleError::Invalid(format!("group generator: {e}")))?;
        let cusp_data: Vec<(MatZ, u32)> = cusps.iter().map(|c| (c.matrix, c.width)).collect();
        let cosets = CosetTable::new(level, &gamma_gens, &cusp_data)?;
        let width_sum: u64 = cusps.iter().map(|c| c.width as u64).sum();
        let pm_index = if cosets.contains_minus_one() { cosets.index() } else { cosets.index() / 2 };
        if !cosets.covers_all() {
            return invalid(format!("cusp cosets cover only part of SL2(Z/{level}): widths sum to {width_sum}, index of ±Γ is {pm_index}"));
        }
        if width_sum != raw.index || pm_index != raw.index {
            return invalid(format!("index {} disagrees with the cusp widths ({width_sum}) or the group ({pm_index})", raw.index));
        }
        let jmap = match &raw.jmap {
            None => None,
            Some(j) => {
                let num = parse_poly(nvars, &j.num)?;
                let den = parse_poly(nvars, &j.den)?;
                if !num.is_zero() && !den.is_zero() && num.degree() != den.degree() {
                    return invalid("j-map numerator and denominator have different degrees");
                }
                Some((num, den))
            }
        };
        let b = CurveBundle {
            label: raw.label,
            level,
            index: raw.index,
            genus: raw.genus,
            graded_deg: raw.graded_deg,
            vars,
            model,
            cusps,
            gamma_gens,
            forms,
            coords,
            coords_are_forms,
            coord_weight,
            prec: raw.prec,
            rational_cusp_count: raw.rational_cusp_count,
            cm_point_counts: raw.cm_point_counts.unwrap_or_default(),
            jmap,
            cosets,
        };
        b.check_annihilation()?;
        Ok(b)
    }

    /// Every model polynomial must vanish identically on the coordinate expansions, at every
    /// cusp, to the working precision.
    pub fn check_annihilation(&self) -> Result<(), BundleError> {
        for j in 0..self.cusps.len() {
            let vars: Vec<FracQSeries> = self.coords.iter().map(|c| c[j].truncate(self.prec)).collect();
            let mut mp = MonomialProducts::new(&vars);
            for (k, p) in self.model.iter().enumerate() {
                let v = mp.eval(p)?;
                if let Some(n) = v.valuation() {
                    return invalid(format!("model polynomial {k} does not vanish at cusp {j}: coefficient of q^({n}/{}) is nonzero", self.cusps[j].width));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BundleError> {
        let p = path.as_ref();
        fs::write(p, self.to_json()).map_err(|e| BundleError::Io { path: p.display().to_string(), source: e })
    }

    pub fn to_json(&self) -> String {
        let fam = |f: &Vec<Vec<FracQSeries>>| f.iter().map(|per| per.iter().map(series_raw).collect()).collect();
        let raw = RawBundle {
            label: self.label.clone(),
            level: self.level,
            index: self.index,
            genus: self.genus,
            graded_deg: self.graded_deg,
            vars: Some(self.vars.clone()),
            model: self.model.iter().map(poly_raw).collect(),
            cusps: self.cusps.iter().map(|c| RawCusp { matrix: c.matrix.to_array(), width: c.width, rational: c.rational }).collect(),
            gamma_gens: self.gamma_gens.iter().map(|g| g.to_array()).collect(),
            forms: fam(&self.forms),
            coords: if self.coords_are_forms { None } else { Some(fam(&self.coords)) },
            coord_weight: if self.coord_weight == 2 { None } else { Some(self.coord_weight) },
            prec: self.prec,
            rational_cusp_count: self.rational_cusp_count,
            cm_point_counts: if self.cm_point_counts.is_empty() { None } else { Some(self.cm_point_counts.clone()) },
            jmap: self.jmap.as_ref().map(|(n, d)| RawJmap { num: poly_raw(n), den: poly_raw(d) }),
        };
        serde_json::to_string(&raw).expect("bundle serializes")
    }

    pub fn nvars(&self) -> usize {
        self.coords.len()
    }

    /// Form expansions at all cusps, truncated to `prec`.
    pub fn forms_at(&self, prec: i64) -> Vec<Vec<FracQSeries>> {
        self.forms.iter().map(|per| per.iter().map(|s| s.truncate(prec)).collect()).collect()
    }

    /// Number of coefficients actually stored (the largest usable prec).
    pub fn stored_prec(&self) -> i64 {
        self.forms.iter().chain(self.coords.iter()).flatten().map(|s| s.prec()).min().unwrap_or(0)
    }

    pub fn widths(&self) -> Vec<u32> {
        self.cusps.iter().map(|c| c.width).collect()
    }
}

/// One row of the elliptic-curve table.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct EllCurveRecord {
    pub label: String,
    pub ainvs: Vec<String>,
    pub conductor: u64,
    pub rank: u32,
    pub isogeny_class: String,
}

impl EllCurveRecord {
    pub fn curve(&self) -> Result<EllipticCurveQ, BundleError> {
        if self.ainvs.len() != 5 {
            return invalid(format!("{}: expected 5 a-invariants", self.label));
        }
        let a: Vec<Rat> = self.ainvs.iter().map(|s| parse_rat(s)).collect::<Result<_, _>>()?;
        Ok(EllipticCurveQ::new([a[0].clone(), a[1].clone(), a[2].clone(), a[3].clone(), a[4].clone()])?)
    }
}

/// Reads a JSON-lines table; blank lines are skipped and every curve is checked nonsingular.
pub fn load_table(path: impl AsRef<Path>) -> Result<Vec<EllCurveRecord>, BundleError> {
    let p = path.as_ref();
    let text = fs::read_to_string(p).map_err(|e| BundleError::Io { path: p.display().to_string(), source: e })?;
    parse_table(&text)
}

pub fn parse_table(text: &str) -> Result<Vec<EllCurveRecord>, BundleError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: EllCurveRecord =
            serde_json::from_str(line).map_err(|e| BundleError::Table { line: i + 1, msg: e.to_string() })?;
        r.curve().map_err(|e| BundleError::Table { line: i + 1, msg: e.to_string() })?;
        out.push(r);
    }
    Ok(out)
}

/// An isogeny class whose eigenvalues occur in the Hecke action on the bundle's forms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateFactor {
    pub isogeny_class: String,
    /// First curve of the class in the table.
    pub representative: EllCurveRecord,
    /// dim ∩_p ker(T(p) − a_p), an upper bound for the multiplicity in the Jacobian.
    pub multiplicity: usize,
}

/// Classes with conductor dividing N² whose a_p, p ≤ pmax, p ∤ N, are simultaneous eigenvalues.
pub fn candidate_factors(bundle: &CurveBundle, table: &[EllCurveRecord], pmax: u64) -> Result<Vec<CandidateFactor>, BundleError> {
    let g = bundle.forms.len();
    if g == 0 {
        return Ok(Vec::new());
    }
    let n2 = (bundle.level as u64).pow(2);
    let primes = good_primes(bundle.level, pmax);
    let mats = primes.iter().map(|&p| hecke_matrix(bundle, p)).collect::<Result<Vec<_>, _>>()?;
    let mut seen: Vec<&str> = Vec::new();
    let mut out = Vec::new();
    for rec in table {
        if !n2.is_multiple_of(rec.conductor) || seen.contains(&rec.isogeny_class.as_str()) {
            continue;
        }
        seen.push(&rec.isogeny_class);
        let e = rec.curve()?;
        let pairs = mats.iter().map(|m| Ok((m, e.ap(m.p)?))).collect::<Result<Vec<_>, EllipticError>>()?;
        let dim = crate::hecke::common_eigenspace(&pairs, g).len();
        if dim > 0 {
            out.push(CandidateFactor { isogeny_class: rec.isogeny_class.clone(), representative: rec.clone(), multiplicity: dim });
        }
    }
    Ok(out)
}
