//! From the Abel–Jacobi expansions of an eigenform to polynomials (A, B, C) on the model with
//! P ↦ (−A(P) : −B(P) : C(P)) a map X → E, and the valence-formula check that proves it.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::bundle::CurveBundle;
use crate::elliptic::{add_points, wp_series, EllipticCurveQ, EllipticError, Point};
use crate::exactmath::matrix::{nullspace_cyclo, nullspace_rat_tall};
use crate::exactmath::modp::{row_mod, EchelonMod};
use crate::exactmath::matrix::SELECT_PRIME;
use crate::exactmath::poly::{monomials, Exponent};
use crate::exactmath::rational::primitive_integer_vector;
use crate::exactmath::{CyclotomicNumber, HomogPoly, MathError, Rat};
use crate::periods::CuspConstant;
use crate::qexp::{FracQSeries, MonomialProducts, SeriesError};

/// Extra coefficients per cusp beyond the valence threshold, absorbing the precision lost to
/// the poles of x and y.
pub const PREC_MARGIN: i64 = 9;

/// Triples kept from one null space.
pub const MAX_TRIPLES: usize = 5;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("degree-{d} piece has dimension {got}, Riemann–Roch expects {expected}")]
    DimensionShortfall { d: u32, got: usize, expected: usize },
    #[error("x, y fail the Weierstrass relation at cusp {cusp} (index {index})")]
    RelationCheck { cusp: usize, index: i64 },
    #[error("no (a, b, c) with c ≠ 0 in degrees {lo}..={hi}; rerun with precmult ≥ {precmult}")]
    NullSpaceEmpty { lo: u32, hi: u32, precmult: u32 },
    #[error("the base point is a base point of every solution in degrees {lo}..={hi}")]
    BasePointExhausted { lo: u32, hi: u32 },
    #[error("stored precision {have} per cusp is below the {need} needed for degree {d}; rerun with precmult ≥ {precmult}")]
    InsufficientPrecision { d: u32, have: i64, need: i64, precmult: u32 },
    #[error("triple {triple}: vanishing total {total} does not exceed {threshold}{}", if *.nonzero { " (relation is nonzero)" } else { "" })]
    NotCertified { triple: usize, total: Rat, threshold: Rat, nonzero: bool, required_prec: i64 },
    #[error("triples {0} and {1} define different maps")]
    Incompatible(usize, usize),
    #[error("map has no triples")]
    Empty,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Curve(#[from] EllipticError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Basis of the degree-d piece of the graded ring: monomials in the model variables whose
/// expansions are linearly independent.
#[derive(Clone, Debug)]
pub struct GradedPiece {
    pub degree: u32,
    pub monomials: Vec<Exponent>,
    /// `expansions[i][j]`: basis element i at cusp j.
    pub expansions: Vec<Vec<FracQSeries>>,
}

impl GradedPiece {
    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    /// Σ v_i·m_i as a polynomial on the model.
    pub fn poly(&self, nvars: usize, v: &[Rat]) -> HomogPoly {
        let terms = self.monomials.iter().cloned().zip(v.iter().cloned()).collect();
        HomogPoly::new(nvars, self.degree, terms).expect("monomials of one degree")
    }
}

/// One (A, B, C) with P ↦ (−A(P) : −B(P) : C(P)).
#[derive(Clone, Debug, PartialEq)]
pub struct MapTriple {
    pub a: HomogPoly,
    pub b: HomogPoly,
    pub c: HomogPoly,
}

impl MapTriple {
    /// Projective image of a rational point, or `None` when all three vanish there.
    pub fn image(&self, p: &[Rat]) -> Option<[Rat; 3]> {
        let (a, b, c) = (self.a.eval_rat(p), self.b.eval_rat(p), self.c.eval_rat(p));
        if a.is_zero() && b.is_zero() && c.is_zero() {
            return None;
        }
        Some([-a, -b, c])
    }

    pub fn degree(&self) -> u32 {
        self.c.degree()
    }

    fn series(&self, coords: &[FracQSeries]) -> Result<[FracQSeries; 3], SeriesError> {
        let mut mp = MonomialProducts::new(coords);
        Ok([mp.eval(&self.a)?, mp.eval(&self.b)?, mp.eval(&self.c)?])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum MapStatus {
    Certified,
    Uncertified,
}

/// Valence data for one checked form: order lower bounds per cusp (in units of q) and the bound.
#[derive(Clone, Debug, PartialEq)]
pub struct VanishingCheck {
    pub weight: u32,
    pub per_cusp: Vec<Rat>,
    pub total: Rat,
    pub threshold: Rat,
}

impl VanishingCheck {
    pub fn passes(&self) -> bool {
        self.total > self.threshold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// The Weierstrass relation for each triple.
    pub relations: Vec<VanishingCheck>,
    /// Cross-products of each pair of triples.
    pub compatibility: Vec<(usize, usize, VanishingCheck)>,
    pub prec: i64,
}

#[derive(Clone, Debug)]
pub struct CertifiedMap {
    pub curve: EllipticCurveQ,
    pub degree: u32,
    pub triples: Vec<MapTriple>,
    /// ψ(Q) for the base point before translation; the identity when none was applied.
    pub base_image: Point<CyclotomicNumber>,
    pub certificate: Option<Certificate>,
    pub status: MapStatus,
}

impl CertifiedMap {
    /// Image of a rational point of the model, from the first triple not vanishing there.
    pub fn image(&self, p: &[Rat]) -> Option<Point<Rat>> {
        let v = self.triples.iter().find_map(|t| t.image(p))?;
        if v[2].is_zero() {
            return Some(Point::Infinity);
        }
        Some(Point::Affine(&v[0] / &v[2], &v[1] / &v[2]))
    }
}

/// Weight of the Weierstrass relation evaluated on degree-d triples.
pub fn relation_weight(d: u32, coord_weight: u32) -> u32 {
    3 * d * coord_weight
}

/// (k/12)·index.
pub fn valence_threshold(k: u32, index: u64) -> Rat {
    Rat::new(BigInt::from(k as u64 * index), BigInt::from(12))
}

/// Degrees d from ⌊(3r + g − 1)/deg 𝓛⌋ (at least 1) to one past the upper bound
/// (3r + g − 1)/deg 𝓛 + 1.
pub fn degree_window(r: u64, genus: usize, graded_deg: u32) -> (u32, u32) {
    let num = (3 * r + genus as u64).saturating_sub(1);
    let lo = (num / graded_deg as u64).max(1) as u32;
    let hi = (num / graded_deg as u64 + 1) as u32;
    (lo, hi + 1)
}

/// Coefficients per cusp needed so that Σ_j prec > (k/12)·index, plus the margin.
pub fn required_prec(bundle: &CurveBundle, d: u32) -> i64 {
    let t = valence_threshold(relation_weight(d, bundle.coord_weight), bundle.index);
    let n = bundle.cusps.len().max(1) as i64;
    (t.floor().to_integer().to_i64().unwrap_or(i64::MAX / 4)) / n + 1 + PREC_MARGIN
}

/// Smallest integer m with m·have ≥ need.
fn precmult_for(have: i64, need: i64) -> u32 {
    if have <= 0 {
        return 1;
    }
    ((need + have - 1) / have).max(1) as u32
}

/// dim R_d expected from Riemann–Roch: d·deg 𝓛 − g + 1 when that exceeds the canonical
/// degree, g for d = 1 in the canonical case, otherwise unknown.
pub fn expected_dim(bundle: &CurveBundle, d: u32) -> Option<usize> {
    let deg = d as i64 * bundle.graded_deg as i64;
    let g = bundle.genus as i64;
    if deg > 2 * g - 2 {
        Some((deg - g + 1) as usize)
    } else if d == 1 && bundle.graded_deg as i64 == 2 * g - 2 {
        Some(g as usize)
    } else {
        None
    }
}

/// Rational coordinates of coefficients lo..hi of a series, concatenated.
fn flat_coeffs(s: &FracQSeries, lo: i64, hi: i64, out: &mut Vec<Rat>) {
    for n in lo..hi {
        out.extend(s.coeff(n).coeffs().iter().cloned());
    }
}

/// Degree-d piece by q-expansion rank: monomials are taken in order whenever they enlarge the
/// span of the expansions at all cusps, coefficients 0..prec.
pub fn graded_piece(bundle: &CurveBundle, d: u32, prec: i64) -> Result<GradedPiece, MapError> {
    let nv = bundle.nvars();
    let ncusps = bundle.cusps.len();
    let coords: Vec<Vec<FracQSeries>> =
        (0..ncusps).map(|j| bundle.coords.iter().map(|c| c[j].truncate(prec)).collect()).collect();
    let mons = monomials(nv, d);
    let per_cusp: Vec<Vec<FracQSeries>> = coords
        .par_iter()
        .map(|vars| {
            let mut mp = MonomialProducts::new(vars);
            mons.iter().map(|e| mp.get(e)).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let hi: Vec<i64> = (0..ncusps).map(|j| per_cusp[j].iter().map(|s| s.prec()).min().unwrap_or(0).min(prec)).collect();
    let mut ech: Option<EchelonMod> = None;
    let mut chosen = Vec::new();
    for (i, e) in mons.iter().enumerate() {
        let mut v = Vec::new();
        for j in 0..ncusps {
            flat_coeffs(&per_cusp[j][i], 0, hi[j], &mut v);
        }
        let ech = ech.get_or_insert_with(|| EchelonMod::new(v.len(), SELECT_PRIME));
        if ech.insert(&row_mod(&primitive_integer_vector(&v), SELECT_PRIME)) {
            chosen.push((i, e.clone()));
        }
    }
    if let Some(expected) = expected_dim(bundle, d) {
        if chosen.len() < expected {
            return Err(MapError::DimensionShortfall { d, got: chosen.len(), expected });
        }
    }
    let expansions = chosen.iter().map(|(i, _)| (0..ncusps).map(|j| per_cusp[j][*i].clone()).collect()).collect();
    Ok(GradedPiece { degree: d, monomials: chosen.into_iter().map(|(_, e)| e).collect(), expansions })
}

/// dim of the degree-d part of the ideal generated by the model, from the polynomials alone:
/// the rank of all products (monomial)·(equation) landing in degree d.
pub fn ideal_piece_dim(model: &[HomogPoly], nvars: usize, d: u32) -> usize {
    let target = monomials(nvars, d);
    let index: std::collections::HashMap<&Exponent, usize> = target.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut ech = EchelonMod::new(target.len(), SELECT_PRIME);
    for q in model {
        if q.degree() > d {
            continue;
        }
        for m in monomials(nvars, d - q.degree()) {
            let mut v = vec![Rat::zero(); target.len()];
            for (e, c) in q.terms() {
                let s: Exponent = e.iter().zip(&m).map(|(a, b)| a + b).collect();
                v[index[&s]] = c.clone();
            }
            ech.insert(&row_mod(&primitive_integer_vector(&v), SELECT_PRIME));
        }
    }
    ech.rank()
}

/// ℘(z) − b2/12 and (℘′(z) − a1·x − a3)/2 for a series z with positive valuation.
fn xy_of_z(curve: &EllipticCurveQ, z: &FracQSeries) -> Result<(FracQSeries, FracQSeries), MapError> {
    let z = z.trimmed();
    let n0 = z.valuation().ok_or(SeriesError::NotInvertible)?;
    let (level, width) = (z.level(), z.width());
    let prec = z.prec();
    let big = prec + 8 * n0 + 8;
    let cst = |r: &Rat| FracQSeries::constant(&CyclotomicNumber::from_rat(level, r.clone()), width, big);
    // c_k up to u^k reaching the precision, with u = z²
    let kmax = ((prec + n0) / (2 * n0) + 2) as usize;
    let g2 = curve.c4() / Rat::from_integer(BigInt::from(12));
    let g3 = curve.c6() / Rat::from_integer(BigInt::from(216));
    let (wp, _) = wp_series(&g2, &g3, 2 * kmax + 1);
    let ck = |k: usize| wp.coeff(2 * k as i64 - 2).cloned().unwrap_or_else(Rat::zero);
    let u = z.mul(&z)?;
    let mut h = cst(&ck(kmax));
    let mut dh = cst(&(ck(kmax) * Rat::from_integer(BigInt::from(2 * kmax as i64 - 2))));
    for k in (2..kmax).rev() {
        h = h.mul(&u)?.add(&cst(&ck(k)))?.truncate(prec);
        dh = dh.mul(&u)?.add(&cst(&(ck(k) * Rat::from_integer(BigInt::from(2 * k as i64 - 2)))))?.truncate(prec);
    }
    let u2 = u.mul(&u)?;
    let wp_val = cst(&Rat::one()).add(&u2.mul(&h)?)?.div(&u)?;
    let z3 = u.mul(&z)?;
    let dwp_val = cst(&Rat::from_integer(BigInt::from(-2))).add(&u2.mul(&dh)?)?.div(&z3)?;
    let x = wp_val.sub(&cst(&(curve.b2() / Rat::from_integer(BigInt::from(12)))))?;
    let y = dwp_val.sub(&x.scale_rat(curve.a1()))?.sub(&cst(curve.a3()))?.scale_rat(&Rat::new(BigInt::one(), BigInt::from(2)));
    Ok((x, y))
}

fn const_point(p: &Point<CyclotomicNumber>, width: u32, prec: i64) -> Point<FracQSeries> {
    match p {
        Point::Infinity => Point::Infinity,
        Point::Affine(x, y) => Point::Affine(FracQSeries::constant(x, width, prec), FracQSeries::constant(y, width, prec)),
    }
}

/// Index of the first nonzero known coefficient of the Weierstrass relation, if any.
fn relation_failure(curve: &EllipticCurveQ, x: &FracQSeries, y: &FracQSeries) -> Option<i64> {
    curve.equation(x, y).valuation()
}

/// Expansions of x∘φ and y∘φ at every cusp: φ = κ_j + c·F̃_j at cusp j, composed with ℘ and
/// shifted by the exact torsion point of κ_j when that is not the identity.
pub fn xy_expansions(
    expansions: &[FracQSeries],
    c: &Rat,
    curve: &EllipticCurveQ,
    constants: &[CuspConstant],
    prec: i64,
) -> Result<Vec<(FracQSeries, FracQSeries)>, MapError> {
    expansions
        .par_iter()
        .zip(constants.par_iter())
        .enumerate()
        .map(|(j, (f, k))| {
            let z = f.truncate(prec).antiderivative_2pii()?.scale_rat(c);
            let (x, y) = xy_of_z(curve, &z)?;
            let (x, y) = if k.point.is_infinity() {
                (x, y)
            } else {
                let t = const_point(&k.point, x.width(), x.prec() + 16);
                match add_points(curve, &Point::Affine(x, y), &t)? {
                    Point::Affine(x, y) => (x, y),
                    Point::Infinity => unreachable!("a nonconstant series point plus a constant is affine"),
                }
            };
            if let Some(index) = relation_failure(curve, &x, &y) {
                return Err(MapError::RelationCheck { cusp: j, index });
            }
            Ok((x, y))
        })
        .collect()
}

/// (x, y) ⊖ P for a constant point P, at every cusp.
pub fn translate(curve: &EllipticCurveQ, xy: &[(FracQSeries, FracQSeries)], p: &Point<CyclotomicNumber>) -> Result<Vec<(FracQSeries, FracQSeries)>, MapError> {
    if p.is_infinity() {
        return Ok(xy.to_vec());
    }
    let minus = curve.neg(p);
    xy.iter()
        .map(|(x, y)| {
            let t = const_point(&minus, x.width(), x.prec() + 16);
            Ok(match add_points(curve, &Point::Affine(x.clone(), y.clone()), &t)? {
                Point::Affine(x, y) => (x, y),
                Point::Infinity => unreachable!("a nonconstant series point plus a constant is affine"),
            })
        })
        .collect()
}

/// Columns (γ·x + α, γ·y + β) of the linear system c·x + a = 0, c·y + b = 0, as series per
/// cusp: unknowns ordered α (for a), β (for b), γ (for c).
struct System {
    /// `rows[r][col]`: one equation per (cusp, coefficient index, field coordinate).
    rows_cyclo: Vec<Vec<CyclotomicNumber>>,
    ncols: usize,
}

fn build_system(piece: &GradedPiece, xy: &[(FracQSeries, FracQSeries)]) -> Result<System, MapError> {
    let g = piece.dim();
    let ncusps = xy.len();
    let per_cusp: Vec<Vec<Vec<CyclotomicNumber>>> = (0..ncusps)
        .into_par_iter()
        .map(|j| -> Result<Vec<Vec<CyclotomicNumber>>, MapError> {
            let (x, y) = &xy[j];
            let ms: Vec<&FracQSeries> = piece.expansions.iter().map(|e| &e[j]).collect();
            let mx: Vec<FracQSeries> = ms.iter().map(|m| m.mul(x)).collect::<Result<_, _>>()?;
            let my: Vec<FracQSeries> = ms.iter().map(|m| m.mul(y)).collect::<Result<_, _>>()?;
            let all = ms.iter().copied().chain(mx.iter()).chain(my.iter());
            let lo = all.clone().map(|s| s.start()).min().unwrap_or(0);
            let hi = all.map(|s| s.prec()).min().unwrap_or(0);
            let level = x.level();
            let zero = CyclotomicNumber::zero(level);
            let mut rows = Vec::new();
            for n in lo..hi {
                // c·x + a
                let mut r = vec![zero.clone(); 3 * g];
                for i in 0..g {
                    r[i] = ms[i].coeff(n);
                    r[2 * g + i] = mx[i].coeff(n);
                }
                rows.push(r);
                // c·y + b
                let mut r = vec![zero.clone(); 3 * g];
                for i in 0..g {
                    r[g + i] = ms[i].coeff(n);
                    r[2 * g + i] = my[i].coeff(n);
                }
                rows.push(r);
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    Ok(System { rows_cyclo: per_cusp.into_iter().flatten().filter(|r| r.iter().any(|c| !c.is_zero())).collect(), ncols: 3 * g })
}

fn split(v: &[Rat], g: usize) -> (&[Rat], &[Rat], &[Rat]) {
    (&v[..g], &v[g..2 * g], &v[2 * g..])
}

/// Rational null vectors (α, β, γ) with γ ≠ 0.
fn rational_solutions(sys: &System) -> Vec<Vec<Rat>> {
    let mut flat = Vec::new();
    for r in &sys.rows_cyclo {
        let phi = r[0].coeffs().len();
        for k in 0..phi {
            flat.push(r.iter().map(|c| c.coeffs()[k].clone()).collect::<Vec<Rat>>());
        }
    }
    let g = sys.ncols / 3;
    nullspace_rat_tall(&flat, sys.ncols).into_iter().filter(|v| split(v, g).2.iter().any(|x| !x.is_zero())).collect()
}

fn cyclo_solutions(sys: &System, level: u32) -> Vec<Vec<CyclotomicNumber>> {
    let g = sys.ncols / 3;
    nullspace_cyclo(&sys.rows_cyclo, sys.ncols, level)
        .into_iter()
        .filter(|v| v[2 * g..].iter().any(|x| !x.is_zero()))
        .collect()
}

/// (−A(Q) : −B(Q) : C(Q)) as a point of E over ℚ(ζ_N), for coefficient vectors over ℚ(ζ_N).
fn image_cyclo(piece: &GradedPiece, v: &[CyclotomicNumber], q: &[Rat], level: u32) -> Option<Point<CyclotomicNumber>> {
    let g = piece.dim();
    let vals: Vec<Rat> = piece.monomials.iter().map(|e| HomogPoly::monomial(e.clone(), Rat::one()).eval_rat(q)).collect();
    let eval = |coef: &[CyclotomicNumber]| {
        coef.iter().zip(&vals).fold(CyclotomicNumber::zero(level), |acc, (c, m)| &acc + &c.scale(m))
    };
    let (a, b, c) = (eval(&v[..g]), eval(&v[g..2 * g]), eval(&v[2 * g..]));
    if a.is_zero() && b.is_zero() && c.is_zero() {
        return None;
    }
    if c.is_zero() {
        return Some(Point::Infinity);
    }
    let inv = c.inverse().ok()?;
    Some(Point::Affine(-&(&a * &inv), -&(&b * &inv)))
}

#[derive(Clone, Debug)]
pub struct MapConfig {
    /// Coefficients per cusp; `None` derives it from the valence threshold at the upper degree.
    pub prec: Option<i64>,
    pub max_triples: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { prec: None, max_triples: MAX_TRIPLES }
    }
}

/// Working precision for a map of degree r: enough for the valence check at the upper end of
/// the degree window, capped by what the bundle stores.
pub fn working_prec(bundle: &CurveBundle, r: u64, cfg: &MapConfig) -> Result<i64, MapError> {
    let (_, hi) = degree_window(r, bundle.genus, bundle.graded_deg);
    let d = hi - 1;
    let need = required_prec(bundle, d);
    let have = bundle.stored_prec();
    let p = cfg.prec.unwrap_or(need);
    if p > have {
        return Err(MapError::InsufficientPrecision { d, have, need: p, precmult: precmult_for(have, p) });
    }
    Ok(p)
}

/// Find the image of the base point (if any), translate it to the identity, then
/// search d upward for rational triples annihilating the translated expansions.
pub fn find_map(
    bundle: &CurveBundle,
    curve: &EllipticCurveQ,
    r: u64,
    xy: &[(FracQSeries, FracQSeries)],
    base_point: Option<&[Rat]>,
    prec: i64,
    cfg: &MapConfig,
) -> Result<CertifiedMap, MapError> {
    let (lo, hi) = degree_window(r, bundle.genus, bundle.graded_deg);
    let level = bundle.level;
    let mut pieces: Vec<Option<GradedPiece>> = vec![None; (hi + 1) as usize];
    let mut piece = |d: u32| -> Result<GradedPiece, MapError> {
        if pieces[d as usize].is_none() {
            pieces[d as usize] = Some(graded_piece(bundle, d, prec)?);
        }
        Ok(pieces[d as usize].clone().expect("just filled"))
    };
    let mut base_image = Point::Infinity;
    if let Some(q) = base_point {
        // a rational solution is also one over ℚ(ζ_N), so try ℚ first at every degree
        let mut found = None;
        'outer: for over_q in [true, false] {
            for d in lo..=hi {
                let p = piece(d)?;
                let sys = build_system(&p, xy)?;
                let sols: Vec<Vec<CyclotomicNumber>> = if over_q {
                    rational_solutions(&sys)
                        .into_iter()
                        .map(|v| v.into_iter().map(|x| CyclotomicNumber::from_rat(level, x)).collect())
                        .collect()
                } else {
                    cyclo_solutions(&sys, level)
                };
                if let Some(pt) = sols.iter().find_map(|v| image_cyclo(&p, v, q, level)) {
                    found = Some(pt);
                    break 'outer;
                }
            }
        }
        base_image = found.ok_or(MapError::BasePointExhausted { lo, hi })?;
    }
    let xy = translate(curve, xy, &base_image)?;
    for d in lo..=hi {
        let p = piece(d)?;
        let sols = rational_solutions(&build_system(&p, &xy)?);
        if sols.is_empty() {
            continue;
        }
        let g = p.dim();
        let nv = bundle.nvars();
        let triples = sols
            .iter()
            .take(cfg.max_triples)
            .map(|v| {
                let (a, b, c) = split(v, g);
                normalize_triple(MapTriple { a: p.poly(nv, a), b: p.poly(nv, b), c: p.poly(nv, c) })
            })
            .collect();
        return Ok(CertifiedMap { curve: curve.clone(), degree: d, triples, base_image, certificate: None, status: MapStatus::Uncertified });
    }
    let need = required_prec(bundle, hi);
    Err(MapError::NullSpaceEmpty { lo, hi, precmult: precmult_for(prec, 2 * need).max(2) })
}

/// A rational degree-d triple for `map` that does not vanish at `p`. Points where every stored
/// triple vanishes lie on every preimage scheme, so the map needs one more triple there; this
/// is the search used for the base point, run over ℚ on the translated expansions.
pub fn triple_defined_at(
    bundle: &CurveBundle,
    map: &CertifiedMap,
    xy: &[(FracQSeries, FracQSeries)],
    p: &[Rat],
    d: u32,
    prec: i64,
) -> Result<Option<MapTriple>, MapError> {
    let xy = translate(&map.curve, xy, &map.base_image)?;
    let piece = graded_piece(bundle, d, prec)?;
    let g = piece.dim();
    let nv = bundle.nvars();
    // some null vector is nonzero at p as soon as the null space is not inside the kernel
    Ok(rational_solutions(&build_system(&piece, &xy)?)
        .iter()
        .map(|v| {
            let (a, b, c) = split(v, g);
            normalize_triple(MapTriple { a: piece.poly(nv, a), b: piece.poly(nv, b), c: piece.poly(nv, c) })
        })
        .find(|t| t.image(p).is_some()))
}

/// Scales (A, B, C) jointly to coprime integer coefficients.
fn normalize_triple(t: MapTriple) -> MapTriple {
    let all: Vec<Rat> = [&t.a, &t.b, &t.c].iter().flat_map(|p| p.terms().map(|(_, c)| c.clone()).collect::<Vec<_>>()).collect();
    let ints = primitive_integer_vector(&all);
    let Some((k, c0)) = all.iter().zip(&ints).find(|(c, _)| !c.is_zero()) else {
        return t;
    };
    let s = Rat::from_integer(c0.clone()) / k;
    MapTriple { a: t.a.scale(&s), b: t.b.scale(&s), c: t.c.scale(&s) }
}

fn vanishing(series: &[FracQSeries], widths: &[u32], k: u32, index: u64) -> VanishingCheck {
    let per_cusp: Vec<Rat> = series.iter().map(|s| s.order_of_vanishing_lb()).collect();
    let total = per_cusp.iter().zip(widths).map(|(v, &w)| v * Rat::from_integer(BigInt::from(w))).sum();
    VanishingCheck { weight: k, per_cusp, total, threshold: valence_threshold(k, index) }
}

/// The homogenized Weierstrass relation at (X : Y : Z) = (−A : −B : C).
fn weierstrass_form(curve: &EllipticCurveQ, t: &[FracQSeries; 3]) -> Result<FracQSeries, SeriesError> {
    let (x, y, z) = (t[0].neg(), t[1].neg(), t[2].clone());
    let yz = y.mul(&z)?;
    let zz = z.mul(&z)?;
    let xx = x.mul(&x)?;
    let lhs = y.mul(&yz)?.add(&x.mul(&yz)?.scale_rat(curve.a1()))?.add(&y.mul(&zz)?.scale_rat(curve.a3()))?;
    let rhs = xx
        .mul(&x)?
        .add(&xx.mul(&z)?.scale_rat(curve.a2()))?
        .add(&x.mul(&zz)?.scale_rat(curve.a4()))?
        .add(&zz.mul(&z)?.scale_rat(curve.a6()))?;
    lhs.sub(&rhs)
}

/// Every triple satisfies the Weierstrass relation and every pair agrees, each proved
/// by its vanishing at the cusps exceeding the valence bound for its weight.
pub fn certify_map(bundle: &CurveBundle, map: &CertifiedMap, prec: i64) -> Result<CertifiedMap, MapError> {
    if map.triples.is_empty() {
        return Err(MapError::Empty);
    }
    let ncusps = bundle.cusps.len();
    let widths = bundle.widths();
    let coords: Vec<Vec<FracQSeries>> =
        (0..ncusps).map(|j| bundle.coords.iter().map(|c| c[j].truncate(prec)).collect()).collect();
    // series[t][j] = (A, B, C) of triple t at cusp j
    let series: Vec<Vec<[FracQSeries; 3]>> = map
        .triples
        .par_iter()
        .map(|t| coords.iter().map(|c| t.series(c)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let mut relations = Vec::new();
    for (ti, per) in series.iter().enumerate() {
        let d = map.triples[ti].degree();
        let k = relation_weight(d, bundle.coord_weight);
        let forms: Vec<FracQSeries> = per.iter().map(|abc| weierstrass_form(&map.curve, abc)).collect::<Result<_, _>>()?;
        let check = vanishing(&forms, &widths, k, bundle.index);
        if !check.passes() {
            let nonzero = forms.iter().any(|s| !s.is_zero());
            return Err(MapError::NotCertified {
                triple: ti,
                total: check.total,
                threshold: check.threshold,
                nonzero,
                required_prec: required_prec(bundle, d),
            });
        }
        relations.push(check);
    }
    let mut compatibility = Vec::new();
    for s in 0..series.len() {
        for t in s + 1..series.len() {
            let kc = (map.triples[s].degree() + map.triples[t].degree()) * bundle.coord_weight;
            let mut worst: Option<VanishingCheck> = None;
            for (u, v) in [(0usize, 2usize), (1, 2), (0, 1)] {
                let forms: Vec<FracQSeries> = (0..ncusps)
                    .map(|j| series[s][j][u].mul(&series[t][j][v])?.sub(&series[t][j][u].mul(&series[s][j][v])?))
                    .collect::<Result<_, SeriesError>>()?;
                let check = vanishing(&forms, &widths, kc, bundle.index);
                if !check.passes() {
                    return Err(MapError::Incompatible(s, t));
                }
                if worst.as_ref().is_none_or(|w| check.total < w.total) {
                    worst = Some(check);
                }
            }
            compatibility.push((s, t, worst.expect("three cross-products")));
        }
    }
    let mut out = map.clone();
    out.certificate = Some(Certificate { relations, compatibility, prec });
    out.status = MapStatus::Certified;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::{rat, rat_int};
    use crate::hecke::{isolate_eigenform, DEFAULT_PRIME_BOUND};
    use crate::periods::{cusp_constants, match_optimal_curve, modular_degree, recognize_lattice, sample_periods, FormIntegrals, PeriodConfig};
    use std::sync::OnceLock;

    struct Setup {
        bundle: CurveBundle,
        curve: EllipticCurveQ,
        manin: Rat,
        degree: u64,
        form: Vec<FracQSeries>,
        constants: Vec<CuspConstant>,
    }

    fn setup(name: &str, ainvs: [i64; 5]) -> Setup {
        let bundle = CurveBundle::load(format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let curve = EllipticCurveQ::from_ints(ainvs).unwrap();
        let f = isolate_eigenform(&bundle, "class", |p| curve.ap(p).unwrap(), 1, DEFAULT_PRIME_BOUND).unwrap();
        let cfg = PeriodConfig::default();
        let ints = FormIntegrals::new(&bundle, &f.expansions, &cfg).unwrap();
        let sample = sample_periods(&bundle, &ints, &cfg).unwrap();
        let lat = recognize_lattice(&sample.values, 100, cfg.match_tol).unwrap();
        let m = match_optimal_curve(&lat, std::slice::from_ref(&curve), &cfg).unwrap();
        let degree = modular_degree(&ints, &m, &cfg).unwrap();
        let constants = cusp_constants(&ints, &m, bundle.level, &cfg).unwrap();
        Setup { bundle, curve, manin: m.manin, degree, form: f.expansions, constants }
    }

    fn x11() -> &'static Setup {
        static S: OnceLock<Setup> = OnceLock::new();
        S.get_or_init(|| setup("x11.json", [0, -1, 1, -10, -20]))
    }

    fn x36() -> &'static Setup {
        static S: OnceLock<Setup> = OnceLock::new();
        S.get_or_init(|| setup("x36.json", [0, 0, 0, -27, -918]))
    }

    struct Built {
        map: CertifiedMap,
        prec: i64,
    }

    fn x36_map() -> &'static Built {
        static M: OnceLock<Built> = OnceLock::new();
        M.get_or_init(|| {
            let s = x36();
            let cfg = MapConfig::default();
            let prec = working_prec(&s.bundle, s.degree, &cfg).unwrap();
            let xy = xy_expansions(&s.form, &s.manin, &s.curve, &s.constants, prec).unwrap();
            let q: Vec<Rat> = [1, 2, -2, 7, 3, 4].iter().map(|&v| rat_int(v)).collect();
            let map = find_map(&s.bundle, &s.curve, s.degree, &xy, Some(&q), prec, &cfg).unwrap();
            Built { map, prec }
        })
    }

    #[test]
    fn degree_windows() {
        // r = 6, g = 6, deg 𝓛 = 10: 2 ≤ d ≤ 3.3, searched up to 4
        assert_eq!(degree_window(6, 6, 10), (2, 4));
        assert_eq!(degree_window(1, 1, 4), (1, 2));
        assert_eq!(valence_threshold(relation_weight(3, 2), 108), rat_int(162));
        assert_eq!(relation_weight(1, 4), 12);
    }

    #[test]
    fn graded_piece_dimensions() {
        let b = &x36().bundle;
        let p1 = graded_piece(b, 1, 64).unwrap();
        assert_eq!(p1.dim(), 6);
        let p3 = graded_piece(b, 3, 64).unwrap();
        assert_eq!(p3.dim(), 25);
        // monomials minus relations from the model alone
        assert_eq!(monomials(6, 3).len() - ideal_piece_dim(&b.model, 6, 3), 25);
        // too little precision cannot separate 25 forms
        assert!(matches!(graded_piece(b, 3, 4), Err(MapError::DimensionShortfall { d: 3, .. })));
    }

    #[test]
    fn x_has_the_double_pole_of_wp() {
        let s = x36();
        let xy = xy_expansions(&s.form, &s.manin, &s.curve, &s.constants, 24).unwrap();
        for (j, (x, y)) in xy.iter().enumerate() {
            let f = &s.form[j];
            let n0 = f.valuation().unwrap();
            let w = f.width() as i64;
            assert_eq!(x.valuation(), Some(-2 * n0));
            assert_eq!(y.valuation(), Some(-3 * n0));
            // z = c·(w/n0)·a·q^{n0/w} + …, so x = z⁻² + …
            let lead = f.coeff(n0).scale(&(&s.manin * rat(w, n0)));
            let want = (&lead * &lead).inverse().unwrap();
            assert_eq!(x.coeff(-2 * n0), want);
        }
    }

    #[test]
    fn x0_11_identity_map() {
        let s = x11();
        assert_eq!(s.degree, 1);
        let cfg = MapConfig::default();
        let prec = working_prec(&s.bundle, 1, &cfg).unwrap();
        let xy = xy_expansions(&s.form, &s.manin, &s.curve, &s.constants, prec).unwrap();
        // the cusp 0 lands on a 5-torsion point, so x is holomorphic there
        assert_eq!(xy[1].0.valuation(), Some(0));
        let map = find_map(&s.bundle, &s.curve, 1, &xy, None, prec, &cfg).unwrap();
        assert_eq!(map.degree, 1);
        let map = certify_map(&s.bundle, &map, prec).unwrap();
        assert_eq!(map.status, MapStatus::Certified);
        // −A/C and −B/C reproduce x and y
        for (j, (x, y)) in xy.iter().enumerate() {
            let coords: Vec<FracQSeries> = s.bundle.coords.iter().map(|c| c[j].truncate(prec)).collect();
            let [a, b, c] = map.triples[0].series(&coords).unwrap();
            assert!(a.neg().div(&c).unwrap().sub(x).unwrap().is_zero());
            assert!(b.neg().div(&c).unwrap().sub(y).unwrap().is_zero());
        }
    }

    #[test]
    fn level36_map_is_certified() {
        let s = x36();
        let built = x36_map();
        assert_eq!(built.map.degree, 3);
        assert!(built.map.base_image.is_infinity());
        assert!(!built.map.triples.is_empty() && built.map.triples.len() <= MAX_TRIPLES);
        let cert = certify_map(&s.bundle, &built.map, built.prec).unwrap();
        let c = cert.certificate.as_ref().unwrap();
        for r in &c.relations {
            assert_eq!(r.weight, 18);
            assert_eq!(r.threshold, rat_int(162));
            assert!(r.total > rat_int(162));
        }
        // the three listed points go to the identity
        for p in [[0, 1, -1, -2, 0, 1], [1, 2, -2, 7, 3, 4], [2, 1, -1, 2, 6, 5]] {
            let q: Vec<Rat> = p.iter().map(|&v| rat_int(v)).collect();
            assert_eq!(cert.image(&q), Some(Point::Infinity), "{p:?}");
        }
    }

    #[test]
    fn corrupted_coefficient_is_rejected() {
        let s = x36();
        let built = x36_map();
        let mut bad = built.map.clone();
        let t = &mut bad.triples[0];
        let (e, c) = t.a.terms().next().map(|(e, c)| (e.clone(), c.clone())).unwrap();
        t.a = t.a.add(&HomogPoly::monomial(e.clone(), rat_int(1))).unwrap();
        assert_ne!(t.a.coeff(&e), c);
        let r = certify_map(&s.bundle, &bad, built.prec);
        assert!(matches!(r, Err(MapError::NotCertified { nonzero: true, .. }) | Err(MapError::Incompatible(..))), "{r:?}");
    }

    #[test]
    fn zero_relation_certifies_at_any_threshold() {
        let widths = [36, 36, 36];
        let zero: Vec<FracQSeries> = (0..3).map(|_| FracQSeries::zero(36, 36, 60, 60)).collect();
        let v = vanishing(&zero, &widths, 18, 108);
        assert_eq!(v.total, rat_int(180));
        assert!(v.passes());
        assert!(!vanishing(&zero, &widths, 24, 108).passes());
    }
}
