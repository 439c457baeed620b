//! Rational points: height-bounded search and p-adic solvability on the model, preimage schemes
//! of a certified map, the Hensel solver for zero-dimensional schemes, and j-invariants.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::elliptic::Point;
use crate::exactmath::modp::{invmod, is_prime, next_prime, solve_mod, EchelonMod};
use crate::exactmath::poly::Exponent;
use crate::exactmath::rational::{gcd_all, primitive_integer_vector};
use crate::exactmath::{rational_reconstruct, HomogPoly, Rat};
use crate::mapbuild::CertifiedMap;

/// Primes tried for the Hensel prime p before giving up.
pub const HENSEL_PRIME_CAP: u64 = 100;

/// Default bound for the upper-bound prime ℓ.
pub const DEFAULT_PRIME_BOUND: u64 = 400;

/// Largest number of coordinate prefixes enumerated per prime; above it a prime is skipped.
pub const DEFAULT_ENUM_BUDGET: u64 = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointError {
    #[error("k = {k} exceeds the schedule bound {max} for p = {p}")]
    KOutOfSchedule { p: u64, k: u32, max: u32 },
    #[error("no prime below {cap} without singular points on the scheme")]
    NoHenselPrime { cap: u64 },
    #[error("bundle has no j-map")]
    NoJMap,
    #[error("j-map numerator and denominator both vanish at {0:?}")]
    JUndefined(Vec<BigInt>),
}

/// Integer polynomial reduced for fast evaluation modulo m < 2^32.
#[derive(Clone, Debug)]
struct ModPoly {
    terms: Vec<(Exponent, u64)>,
}

fn reduce_poly(p: &HomogPoly, m: u64) -> ModPoly {
    let terms = p
        .terms()
        .map(|(e, c)| {
            debug_assert!(c.is_integer());
            let r = c.numer().mod_floor(&BigInt::from(m)).to_u64().expect("reduced");
            (e.clone(), r)
        })
        .filter(|(_, c)| *c != 0)
        .collect();
    ModPoly { terms }
}

fn eval_modpoly(p: &ModPoly, x: &[u64], m: u64) -> u64 {
    let mut acc = 0u64;
    for (e, c) in &p.terms {
        let mut t = *c;
        for (&xi, &k) in x.iter().zip(e) {
            for _ in 0..k {
                t = t * xi % m;
            }
        }
        acc = (acc + t) % m;
    }
    acc
}

/// Polynomials with coprime integer coefficients.
fn integral(polys: &[HomogPoly]) -> Vec<HomogPoly> {
    polys.iter().filter(|p| !p.is_zero()).map(|p| p.clear_denominators()).collect()
}

/// Primitive vector with its first nonzero entry positive.
pub fn normalize_point(v: &[BigInt]) -> Vec<BigInt> {
    let g = gcd_all(v.iter());
    if g.is_zero() {
        return v.to_vec();
    }
    let s = if v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) { -g } else { g };
    v.iter().map(|x| x / &s).collect()
}

fn vanishes_at(polys: &[HomogPoly], v: &[BigInt]) -> bool {
    polys.iter().all(|p| p.eval_int(v).is_zero())
}

/// All points of the model with coprime integer coordinates |x_i| ≤ h, first nonzero positive.
///
/// The last coordinate is found as an integer root of one equation, specialized at the prefix.
pub fn point_search(model: &[HomogPoly], nvars: usize, h: i64) -> Vec<Vec<BigInt>> {
    let polys = integral(model);
    let mut out = Vec::new();
    if nvars == 0 {
        return out;
    }
    let n = nvars;
    // univariate coefficient lists of each equation in the last variable
    let split: Vec<Vec<(Exponent, u32, i128)>> = polys
        .iter()
        .map(|p| p.terms().map(|(e, c)| (e[..n - 1].to_vec(), e[n - 1], c.numer().to_i128().unwrap_or(i128::MAX))).collect())
        .collect();
    let mut prefix = vec![-h; n - 1];
    loop {
        let first_nz = prefix.iter().position(|&x| x != 0);
        if first_nz.is_none_or(|i| prefix[i] > 0) {
            let lasts: Vec<i64> = if first_nz.is_none() { vec![1] } else { last_candidates(&split, &prefix, h) };
            for last in lasts {
                let v: Vec<BigInt> = prefix.iter().chain(std::iter::once(&last)).map(|&x| BigInt::from(x)).collect();
                if gcd_all(v.iter()).is_one() && vanishes_at(&polys, &v) {
                    out.push(v);
                }
            }
        }
        // odometer over [−h, h]^{n−1}
        let Some(i) = prefix.iter().rposition(|&x| x < h) else {
            return out;
        };
        prefix[i] += 1;
        for x in prefix.iter_mut().skip(i + 1) {
            *x = -h;
        }
    }
}

/// Integer values of the last coordinate in [−h, h] on which every equation with positive degree
/// in it vanishes; all of [−h, h] if no equation constrains it at this prefix.
fn last_candidates(split: &[Vec<(Exponent, u32, i128)>], prefix: &[i64], h: i64) -> Vec<i64> {
    for terms in split {
        let deg = terms.iter().map(|t| t.1).max().unwrap_or(0);
        let mut coeffs = vec![0i128; deg as usize + 1];
        for (e, k, c) in terms {
            let mut t = *c;
            for (&x, &a) in prefix.iter().zip(e) {
                for _ in 0..a {
                    t = t.saturating_mul(x as i128);
                }
            }
            coeffs[*k as usize] = coeffs[*k as usize].saturating_add(t);
        }
        if coeffs.iter().skip(1).all(|&c| c == 0) {
            if coeffs[0] != 0 {
                return vec![];
            }
            continue;
        }
        return (-h..=h)
            .filter(|&t| {
                let mut acc = 0i128;
                for c in coeffs.iter().rev() {
                    acc = acc.saturating_mul(t as i128).saturating_add(*c);
                }
                acc == 0
            })
            .collect();
    }
    (-h..=h).collect()
}

/// The k of the p-adic test: 8 for p = 2, 4 for p = 3, 3 otherwise.
pub fn k_schedule(p: u64) -> u32 {
    match p {
        2 => 8,
        3 => 4,
        _ => 3,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LocalSolvability {
    /// Primitive solutions exist modulo p^k; `count` of them up to units.
    Solvable { k: u32, count: usize },
    /// No primitive solution modulo p^k, so no ℚ_p-point.
    Empty { k: u32 },
}

/// Projective points over 𝔽_p, each scaled so its first nonzero coordinate is 1.
fn projective_points(n: usize, p: u64) -> impl Iterator<Item = Vec<u64>> {
    (0..n).flat_map(move |pivot| {
        let free = n - pivot - 1;
        let total = (p as u128).pow(free as u32);
        (0..total).map(move |mut t| {
            let mut v = vec![0u64; n];
            v[pivot] = 1;
            for x in v.iter_mut().skip(pivot + 1) {
                *x = (t % p as u128) as u64;
                t /= p as u128;
            }
            v
        })
    })
}

/// Primitive solutions modulo p^k, up to units (the first coordinate prime to p is 1).
pub fn points_mod_prime_power(model: &[HomogPoly], nvars: usize, p: u64, k: u32) -> Vec<Vec<u64>> {
    let polys = integral(model);
    let m1 = reduce_all(&polys, p);
    let mut cur: Vec<Vec<u64>> = projective_points(nvars, p).filter(|v| m1.iter().all(|q| eval_modpoly(q, v, p) == 0)).collect();
    let mut pk = p;
    for _ in 1..k {
        if cur.is_empty() {
            break;
        }
        let next_m = pk * p;
        let reduced = reduce_all(&polys, next_m);
        let mut next = BTreeSet::new();
        for v in &cur {
            let pivot = v.iter().position(|&x| x % p != 0).expect("primitive");
            let free: Vec<usize> = (0..nvars).filter(|&i| i != pivot).collect();
            let total = (p as u128).pow(free.len() as u32);
            for mut t in 0..total {
                let mut w = v.clone();
                for &i in &free {
                    w[i] = (w[i] + pk * (t % p as u128) as u64) % next_m;
                    t /= p as u128;
                }
                if reduced.iter().all(|q| eval_modpoly(q, &w, next_m) == 0) {
                    next.insert(w);
                }
            }
        }
        cur = next.into_iter().collect();
        pk = next_m;
    }
    cur
}

fn reduce_all(polys: &[HomogPoly], m: u64) -> Vec<ModPoly> {
    polys.iter().map(|q| reduce_poly(q, m)).collect()
}

/// Local test at p with the scheduled k, stopping at the first empty level.
pub fn local_solvability(model: &[HomogPoly], nvars: usize, p: u64) -> LocalSolvability {
    local_solvability_to(model, nvars, p, k_schedule(p)).expect("scheduled k")
}

pub fn local_solvability_to(model: &[HomogPoly], nvars: usize, p: u64, k: u32) -> Result<LocalSolvability, PointError> {
    let max = k_schedule(p);
    if k > max || k == 0 {
        return Err(PointError::KOutOfSchedule { p, k, max });
    }
    for j in 1..=k {
        let pts = points_mod_prime_power(model, nvars, p, j);
        if pts.is_empty() {
            return Ok(LocalSolvability::Empty { k: j });
        }
        if j == k {
            return Ok(LocalSolvability::Solvable { k, count: pts.len() });
        }
    }
    unreachable!("k ≥ 1")
}

/// Z_T: the model with the 2×2 minors of ((−A, −B, C), (x_T, y_T, z_T)) for every stored
/// triple, cleared to coprime integer coefficients.
#[derive(Clone, Debug)]
pub struct ZeroDimScheme {
    pub nvars: usize,
    pub polys: Vec<HomogPoly>,
    /// T for a preimage scheme, `None` for the base scheme.
    pub target: Option<Point<Rat>>,
}

pub fn pullback_scheme(model: &[HomogPoly], nvars: usize, map: &CertifiedMap, t: &Point<Rat>) -> ZeroDimScheme {
    let (xt, yt, zt) = match t {
        Point::Infinity => (Rat::zero(), Rat::one(), Rat::zero()),
        Point::Affine(x, y) => (x.clone(), y.clone(), Rat::one()),
    };
    let mut polys: Vec<HomogPoly> = model.to_vec();
    for tr in &map.triples {
        let xx = tr.a.scale(&-Rat::one());
        let yy = tr.b.scale(&-Rat::one());
        let zz = tr.c.clone();
        let minors = [
            xx.scale(&yt).sub(&yy.scale(&xt)),
            xx.scale(&zt).sub(&zz.scale(&xt)),
            yy.scale(&zt).sub(&zz.scale(&yt)),
        ];
        polys.extend(minors.into_iter().map(|m| m.expect("equal degrees")));
    }
    let mut seen = BTreeSet::new();
    let polys = integral(&polys)
        .into_iter()
        .filter(|p| seen.insert(p.to_string()))
        .collect();
    ZeroDimScheme { nvars, polys, target: Some(t.clone()) }
}

/// Common zeros on the model of every polynomial of every stored triple. Such points lie on
/// every Z_T.
pub fn base_scheme(model: &[HomogPoly], nvars: usize, map: &CertifiedMap) -> ZeroDimScheme {
    let mut polys: Vec<HomogPoly> = model.to_vec();
    for t in &map.triples {
        polys.extend([t.a.clone(), t.b.clone(), t.c.clone()]);
    }
    let mut seen = BTreeSet::new();
    let polys = integral(&polys).into_iter().filter(|p| seen.insert(p.to_string())).collect();
    ZeroDimScheme { nvars, polys, target: None }
}

/// Points of V(polys) over 𝔽_p with the first nonzero coordinate 1. The last coordinate is a
/// root of the first equation that depends on it at the given prefix.
///
/// Returns `None` if the enumeration would exceed `budget` prefixes.
fn points_mod_prime(polys: &[HomogPoly], n: usize, p: u64, budget: u64) -> Option<Vec<Vec<u64>>> {
    let prefixes = (p as u128).pow(n.saturating_sub(2) as u32);
    if prefixes > budget as u128 {
        return None;
    }
    let reduced = reduce_all(polys, p);
    let split: Vec<Vec<(Exponent, u32, u64)>> = reduced
        .iter()
        .map(|q| q.terms.iter().map(|(e, c)| (e[..n - 1].to_vec(), e[n - 1], *c)).collect())
        .collect();
    let mut out = Vec::new();
    let last_only: Vec<u64> = (0..n).map(|i| u64::from(i == n - 1)).collect();
    if reduced.iter().all(|q| eval_modpoly(q, &last_only, p) == 0) {
        out.push(last_only);
    }
    for pivot in 0..n - 1 {
        let free = n - 2 - pivot;
        let total = (p as u128).pow(free as u32);
        let mut v = vec![0u64; n];
        v[pivot] = 1;
        for mut t in 0..total {
            for x in v.iter_mut().take(n - 1).skip(pivot + 1) {
                *x = (t % p as u128) as u64;
                t /= p as u128;
            }
            for last in roots_of_last(&split, &v[..n - 1], p) {
                v[n - 1] = last;
                if reduced.iter().all(|q| eval_modpoly(q, &v, p) == 0) {
                    out.push(v.clone());
                }
            }
        }
    }
    Some(out)
}

fn roots_of_last(split: &[Vec<(Exponent, u32, u64)>], prefix: &[u64], p: u64) -> Vec<u64> {
    for terms in split {
        let deg = terms.iter().map(|t| t.1).max().unwrap_or(0) as usize;
        let mut c = vec![0u64; deg + 1];
        for (e, k, coef) in terms {
            let mut t = *coef;
            for (&x, &a) in prefix.iter().zip(e) {
                for _ in 0..a {
                    t = t * x % p;
                }
            }
            c[*k as usize] = (c[*k as usize] + t) % p;
        }
        while c.len() > 1 && *c.last().expect("nonempty") == 0 {
            c.pop();
        }
        match c.len() {
            1 if c[0] != 0 => return vec![],
            1 => continue,
            2 => {
                let inv = invmod(c[1], p).expect("prime modulus");
                return vec![(p - c[0]) % p * inv % p];
            }
            3 if p > 2 => return quadratic_roots(c[0], c[1], c[2], p),
            _ => {
                return (0..p)
                    .filter(|&x| c.iter().rev().fold(0u64, |acc, &a| (acc * x + a) % p) == 0)
                    .collect()
            }
        }
    }
    (0..p).collect()
}

/// Roots of a + b·x + c·x² over 𝔽_p, p odd, c ≠ 0.
fn quadratic_roots(a: u64, b: u64, c: u64, p: u64) -> Vec<u64> {
    let disc = (b * b % p + p - 4 * a % p * c % p) % p;
    let Some(s) = sqrt_mod(disc, p) else { return vec![] };
    let inv2c = invmod(2 * c % p, p).expect("prime modulus");
    let r1 = (p - b + s) % p * inv2c % p;
    let r2 = (2 * p - b - s) % p * inv2c % p;
    if r1 == r2 {
        vec![r1]
    } else {
        vec![r1, r2]
    }
}

/// A square root modulo an odd prime (Tonelli–Shanks).
fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    use crate::exactmath::modp::powmod;
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if powmod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let (mut q, mut s) = (p - 1, 0);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| powmod(z, (p - 1) / 2, p) == p - 1).expect("nonresidue exists");
    let (mut m, mut c, mut t, mut r) = (s, powmod(z, q, p), powmod(a, q, p), powmod(a, q.div_ceil(2), p));
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = tt * tt % p;
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = b * b % p;
        t = t * c % p;
        r = r * b % p;
    }
    Some(r)
}

/// Jacobian of the dehomogenized system at a point (pivot coordinate set to 1) has full rank
/// n − 1 over 𝔽_p.
fn nonsingular_at(jac: &[Vec<ModPoly>], v: &[u64], p: u64) -> bool {
    let n = v.len();
    let pivot = v.iter().position(|&x| x % p != 0).expect("projective point");
    let cols: Vec<usize> = (0..n).filter(|&j| j != pivot).collect();
    let mut ech = EchelonMod::new(cols.len(), p);
    for row in jac {
        let r: Vec<u64> = cols.iter().map(|&j| eval_modpoly(&row[j], v, p)).collect();
        ech.insert(&r);
        if ech.rank() == cols.len() {
            return true;
        }
    }
    false
}

fn jacobian(polys: &[HomogPoly], n: usize) -> Vec<Vec<HomogPoly>> {
    polys.iter().map(|q| (0..n).map(|j| q.derivative(j)).collect()).collect()
}

/// 𝔽_p points and whether all of them are nonsingular; `None` if over budget.
fn fp_points(z: &ZeroDimScheme, jac: &[Vec<HomogPoly>], p: u64, budget: u64) -> Option<(Vec<Vec<u64>>, bool)> {
    let pts = points_mod_prime(&z.polys, z.nvars, p, budget)?;
    let jm: Vec<Vec<ModPoly>> = jac.iter().map(|row| row.iter().map(|d| reduce_poly(d, p)).collect()).collect();
    let smooth = pts.iter().all(|v| nonsingular_at(&jm, v, p));
    Some((pts, smooth))
}

/// ⌈12·log_p 10⌉ + 1.
pub fn hensel_k(p: u64) -> u32 {
    let x = 12.0 * 10f64.ln() / (p as f64).ln();
    // guard against x landing a hair above an integer
    let c = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    c as u32 + 1
}

fn eval_big_mod(p: &HomogPoly, x: &[BigInt], m: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for (e, c) in p.terms() {
        let mut t = c.numer().clone();
        for (xi, &k) in x.iter().zip(e) {
            for _ in 0..k {
                t = t * xi % m;
            }
        }
        acc += t;
    }
    acc.mod_floor(m)
}

/// Lifts a nonsingular 𝔽_p point to ℤ/p^k by linear Hensel steps on a square subsystem.
fn hensel_lift(z: &ZeroDimScheme, jac: &[Vec<HomogPoly>], v: &[u64], p: u64, k: u32) -> Option<Vec<BigInt>> {
    let n = z.nvars;
    let pivot = v.iter().position(|&x| x % p != 0)?;
    let cols: Vec<usize> = (0..n).filter(|&j| j != pivot).collect();
    let jm: Vec<Vec<u64>> = jac
        .iter()
        .map(|row| cols.iter().map(|&j| eval_modpoly(&reduce_poly(&row[j], p), v, p)).collect())
        .collect();
    let mut ech = EchelonMod::new(cols.len(), p);
    let mut rows = Vec::new();
    for (i, r) in jm.iter().enumerate() {
        if ech.insert(r) {
            rows.push(i);
        }
    }
    if rows.len() < cols.len() {
        return None;
    }
    let a: Vec<Vec<u64>> = rows.iter().map(|&i| jm[i].clone()).collect();
    let bp = BigInt::from(p);
    let mut x: Vec<BigInt> = v.iter().map(|&c| BigInt::from(c)).collect();
    let mut pj = bp.clone();
    for _ in 1..k {
        let m = &pj * &bp;
        let r: Vec<u64> = rows
            .iter()
            .map(|&i| {
                let f = eval_big_mod(&z.polys[i], &x, &m);
                let q = (f / &pj).mod_floor(&bp).to_u64().expect("< p");
                (p - q) % p
            })
            .collect();
        let t = solve_mod(&a, &r, p)?;
        for (&j, tj) in cols.iter().zip(t) {
            x[j] = (&x[j] + &pj * BigInt::from(tj)).mod_floor(&m);
        }
        pj = m;
    }
    z.polys.iter().all(|q| eval_big_mod(q, &x, &pj).is_zero()).then_some(x)
}

/// Rational point whose coordinates reduce to the p-adic lift, if one exists and is exact.
fn reconstruct(z: &ZeroDimScheme, x: &[BigInt], m: &BigInt) -> Option<Vec<BigInt>> {
    let rs: Vec<Rat> = x.iter().map(|c| rational_reconstruct(c, m)).collect::<Option<_>>()?;
    let v = normalize_point(&primitive_integer_vector(&rs));
    vanishes_at(&z.polys, &v).then_some(v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointReport {
    #[serde(serialize_with = "ser_points")]
    pub points: Vec<Vec<BigInt>>,
    /// Prime used for the Hensel lower bound, with its k.
    pub hensel_prime: u64,
    pub hensel_k: u32,
    /// Prime whose nonsingular 𝔽_ℓ count matched, with the count.
    pub upper_prime: Option<u64>,
    pub upper_bound: Option<usize>,
    /// Bounds met: the list is all of Z(ℚ).
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub prime_bound: u64,
    pub enum_budget: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { prime_bound: DEFAULT_PRIME_BOUND, enum_budget: DEFAULT_ENUM_BUDGET }
    }
}

/// For one scheme: Hensel lifts from the first nonsingular prime give Z(ℚ) from below,
/// a larger nonsingular prime ℓ ∤ level bounds it from above.
pub fn solve_zerodim(z: &ZeroDimScheme, level: u32, cfg: &SolveConfig) -> Result<PointReport, PointError> {
    let jac = jacobian(&z.polys, z.nvars);
    let good = |q: u64| !(level as u64).is_multiple_of(q);
    let mut p = 2;
    let (p, pts) = loop {
        if p > HENSEL_PRIME_CAP {
            return Err(PointError::NoHenselPrime { cap: HENSEL_PRIME_CAP });
        }
        if good(p) {
            if let Some((pts, true)) = fp_points(z, &jac, p, cfg.enum_budget) {
                break (p, pts);
            }
        }
        p = next_prime(p);
    };
    let k = hensel_k(p);
    let m = BigInt::from(p).pow(k);
    let mut found = BTreeSet::new();
    for v in &pts {
        if let Some(x) = hensel_lift(z, &jac, v, p, k) {
            if let Some(q) = reconstruct(z, &x, &m) {
                found.insert(q);
            }
        }
    }
    let points: Vec<Vec<BigInt>> = found.into_iter().collect();
    let mut report = PointReport { points, hensel_prime: p, hensel_k: k, upper_prime: None, upper_bound: None, complete: false };
    let mut l = next_prime(p);
    while l < cfg.prime_bound {
        if good(l) {
            match fp_points(z, &jac, l, cfg.enum_budget) {
                None => break,
                Some((pts, true)) => {
                    if report.upper_bound.is_none_or(|b| pts.len() < b) {
                        report.upper_prime = Some(l);
                        report.upper_bound = Some(pts.len());
                    }
                    if pts.len() == report.points.len() {
                        report.complete = true;
                        break;
                    }
                }
                Some((_, false)) => {}
            }
        }
        l = next_prime(l);
    }
    Ok(report)
}

/// The thirteen rational CM j-invariants, keyed by discriminant.
pub const CM_J: [(i64, i128); 13] = [
    (-3, 0),
    (-4, 1728),
    (-7, -3375),
    (-8, 8000),
    (-11, -32768),
    (-12, 54000),
    (-16, 287496),
    (-19, -884736),
    (-27, -12288000),
    (-28, 16581375),
    (-43, -884736000),
    (-67, -147197952000),
    (-163, -262537412640768000),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum JTag {
    Cusp,
    Cm(i64),
    NonCm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JValue {
    #[serde(serialize_with = "ser_point")]
    pub point: Vec<BigInt>,
    /// `None` at a cusp, where j = (1 : 0).
    #[serde(serialize_with = "ser_opt_rat")]
    pub j: Option<Rat>,
    pub tag: JTag,
}

/// "(a : b : …)".
pub fn format_point(v: &[BigInt]) -> String {
    format!("({})", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" : "))
}

fn ser_point<S: serde::Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_point(v))
}

fn ser_points<S: serde::Serializer>(v: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|p| format_point(p)))
}

fn ser_opt_rat<S: serde::Serializer>(j: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
    match j {
        None => s.serialize_none(),
        Some(r) => s.serialize_str(&crate::exactmath::format_rat(r)),
    }
}

pub fn cm_discriminant(j: &Rat) -> Option<i64> {
    CM_J.iter().find(|(_, v)| *j == Rat::from_integer(BigInt::from(*v))).map(|(d, _)| *d)
}

/// j(P) = num(P)/den(P) for each point, tagged.
pub fn evaluate_j(jmap: Option<&(HomogPoly, HomogPoly)>, points: &[Vec<BigInt>]) -> Result<Vec<JValue>, PointError> {
    let (num, den) = jmap.ok_or(PointError::NoJMap)?;
    points
        .iter()
        .map(|p| {
            let a = num.eval_int(p);
            let b = den.eval_int(p);
            if b.is_zero() {
                if a.is_zero() {
                    return Err(PointError::JUndefined(p.clone()));
                }
                return Ok(JValue { point: p.clone(), j: None, tag: JTag::Cusp });
            }
            let j = a / b;
            let tag = cm_discriminant(&j).map_or(JTag::NonCm, JTag::Cm);
            Ok(JValue { point: p.clone(), j: Some(j), tag })
        })
        .collect()
}

/// Tag counts against the bundle's recorded rational cusps and CM points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JSummary {
    pub cusps: usize,
    pub cm: BTreeMap<String, usize>,
    pub non_cm: usize,
    /// `Some(true)` when the recorded counts are present and agree.
    pub matches_bundle: Option<bool>,
}

pub fn summarize_j(values: &[JValue], rational_cusps: Option<usize>, cm_counts: &BTreeMap<String, usize>) -> JSummary {
    let cusps = values.iter().filter(|v| v.tag == JTag::Cusp).count();
    let non_cm = values.iter().filter(|v| v.tag == JTag::NonCm).count();
    let mut cm = BTreeMap::new();
    for v in values {
        if let JTag::Cm(d) = v.tag {
            *cm.entry(d.to_string()).or_insert(0) += 1;
        }
    }
    let matches_bundle = rational_cusps.map(|c| c == cusps && cm_counts.iter().filter(|(_, &n)| n > 0).all(|(d, n)| cm.get(d) == Some(n)));
    JSummary { cusps, cm, non_cm, matches_bundle }
}

/// Primes dividing n, for the local tests.
pub fn primes_dividing(n: u32) -> Vec<u64> {
    (2..=n as u64).filter(|&p| (n as u64).is_multiple_of(p) && is_prime(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::CurveBundle;
    use crate::elliptic::EllipticCurveQ;
    use crate::exactmath::rational::rat_int;
    use crate::mapbuild::{MapStatus, MapTriple};
    use std::sync::OnceLock;

    fn poly(n: usize, terms: &[(&[u32], i64)]) -> HomogPoly {
        HomogPoly::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), rat_int(*c))).collect()).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn x36() -> &'static CurveBundle {
        static B: OnceLock<CurveBundle> = OnceLock::new();
        B.get_or_init(|| CurveBundle::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/x36.json")).unwrap())
    }

    fn sum_of_squares() -> Vec<HomogPoly> {
        vec![poly(3, &[(&[2, 0, 0], 1), (&[0, 2, 0], 1), (&[0, 0, 2], 1)])]
    }

    #[test]
    fn k_schedule_is_enforced() {
        assert_eq!((k_schedule(2), k_schedule(3), k_schedule(5), k_schedule(37)), (8, 4, 3, 3));
        let m = sum_of_squares();
        assert!(matches!(local_solvability_to(&m, 3, 2, 9), Err(PointError::KOutOfSchedule { p: 2, k: 9, max: 8 })));
        assert!(matches!(local_solvability_to(&m, 3, 3, 5), Err(PointError::KOutOfSchedule { max: 4, .. })));
        assert!(matches!(local_solvability_to(&m, 3, 5, 4), Err(PointError::KOutOfSchedule { max: 3, .. })));
        assert!(local_solvability_to(&m, 3, 5, 3).is_ok());
    }

    #[test]
    fn sum_of_three_squares_has_no_2_adic_point() {
        let m = sum_of_squares();
        // (x + y + z)² mod 2: the line x + y + z = 0, nothing primitive mod 4 or 8
        assert_eq!(points_mod_prime_power(&m, 3, 2, 1).len(), 3);
        assert!(points_mod_prime_power(&m, 3, 2, 3).is_empty());
        assert_eq!(local_solvability(&m, 3, 2), LocalSolvability::Empty { k: 2 });
        // emptiness persists as k grows
        for k in 2..=8 {
            assert!(points_mod_prime_power(&m, 3, 2, k).is_empty(), "k = {k}");
        }
        // odd primes see points
        assert!(matches!(local_solvability(&m, 3, 3), LocalSolvability::Solvable { k: 4, .. }));
        assert!(point_search(&m, 3, 5).is_empty());
    }

    #[test]
    fn model_with_a_rational_point_is_locally_solvable() {
        let b = x36();
        for p in primes_dividing(b.level) {
            assert!(matches!(local_solvability(&b.model, 6, p), LocalSolvability::Solvable { .. }), "p = {p}");
        }
    }

    #[test]
    fn small_points_on_the_level36_model() {
        let b = x36();
        let pts = point_search(&b.model, 6, 7);
        for p in [[0, 1, -1, -2, 0, 1], [1, 2, -2, 7, 3, 4], [2, 1, -1, 2, 6, 5]] {
            assert!(pts.contains(&ints(&p)), "{p:?} missing from {pts:?}");
        }
        for p in &pts {
            assert!(vanishes_at(&b.model, p));
        }
    }

    #[test]
    fn hensel_precision() {
        assert_eq!(hensel_k(5), 19);
        assert_eq!(hensel_k(2), 41);
        assert_eq!(hensel_k(10007), 4);
    }

    #[test]
    fn irrational_points_are_not_reported() {
        // x² − 2y² = 0, z = 0: two points over 𝔽_7, none over ℚ
        let z = ZeroDimScheme {
            nvars: 3,
            polys: vec![poly(3, &[(&[2, 0, 0], 1), (&[0, 2, 0], -2)]), poly(3, &[(&[0, 0, 1], 1)])],
            target: None,
        };
        assert_eq!(points_mod_prime(&z.polys, 3, 7, 1000).unwrap().len(), 2);
        let r = solve_zerodim(&z, 1, &SolveConfig::default()).unwrap();
        assert!(r.points.is_empty());
        assert!(r.complete);
        let l = r.upper_prime.unwrap();
        assert_eq!(crate::exactmath::modp::legendre(2, l), -1);
    }

    #[test]
    fn planted_points_are_recovered() {
        // the conics through (1:0:0), (0:1:0), (1:1:1): xy − yz and xz − yz and …
        let z = ZeroDimScheme {
            nvars: 3,
            polys: vec![
                poly(3, &[(&[1, 1, 0], 1), (&[0, 1, 1], -1)]),
                poly(3, &[(&[1, 0, 1], 1), (&[0, 1, 1], -1)]),
                poly(3, &[(&[0, 0, 2], 1), (&[1, 0, 1], -1)]),
            ],
            target: None,
        };
        let r = solve_zerodim(&z, 6, &SolveConfig::default()).unwrap();
        assert!(r.complete);
        let mut want = vec![ints(&[0, 1, 0]), ints(&[1, 0, 0]), ints(&[1, 1, 1])];
        want.sort();
        assert_eq!(r.points, want);
        assert_eq!(r.hensel_prime, 5);
    }

    #[test]
    fn identity_pullback_is_a_and_c() {
        let n = 2;
        let a = poly(n, &[(&[1, 0], 1)]);
        let b = poly(n, &[(&[0, 1], 1)]);
        let c = poly(n, &[(&[1, 0], 1), (&[0, 1], 1)]);
        let map = CertifiedMap {
            curve: EllipticCurveQ::from_ints([0, 0, 0, -27, -918]).unwrap(),
            degree: 1,
            triples: vec![MapTriple { a: a.clone(), b, c: c.clone() }],
            base_image: Point::Infinity,
            certificate: None,
            status: MapStatus::Uncertified,
        };
        let z = pullback_scheme(&[], n, &map, &Point::Infinity);
        // minors: X = −A and −Z = −C up to sign
        assert_eq!(z.polys.len(), 2);
        assert!(z.polys.contains(&a) || z.polys.contains(&a.scale(&rat_int(-1))));
        assert!(z.polys.contains(&c) || z.polys.contains(&c.scale(&rat_int(-1))));
    }

    #[test]
    fn j_tags() {
        // j = x³/y³ on ℙ¹
        let jm = (poly(2, &[(&[3, 0], 1728)]), poly(2, &[(&[0, 3], 1)]));
        let v = evaluate_j(Some(&jm), &[ints(&[1, 0]), ints(&[1, 1]), ints(&[0, 1]), ints(&[2, 1])]).unwrap();
        assert_eq!(v[0].tag, JTag::Cusp);
        assert_eq!(v[1].tag, JTag::Cm(-4));
        assert_eq!(v[2].tag, JTag::Cm(-3));
        assert_eq!(v[3].tag, JTag::NonCm);
        assert!(matches!(evaluate_j(None, &[]), Err(PointError::NoJMap)));
        let zero = (poly(2, &[(&[1, 2], 1)]), poly(2, &[(&[2, 1], 1)]));
        assert!(matches!(evaluate_j(Some(&zero), &[ints(&[1, 0])]), Err(PointError::JUndefined(_))));
        let s = summarize_j(&v, Some(1), &BTreeMap::from([("-3".to_string(), 1), ("-4".to_string(), 1)]));
        assert_eq!(s.matches_bundle, Some(true));
        // the minimal curve 6.6.1.b.1 lands on j = −2⁹·3³
        assert_eq!(cm_discriminant(&rat_int(-(1 << 9) * 27)), None);
    }
}
