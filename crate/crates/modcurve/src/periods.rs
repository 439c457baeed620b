//! Period integrals of a weight-2 cusp form: the period homomorphism on Γ, recognition of the
//! period lattice, the optimal curve and Manin constant, the analytic degree of the map and
//! the Abel–Jacobi images of the cusps.
//!
//! Every integral runs from the base point i. A matrix h ∈ SL₂(ℤ) is written as a word in
//! S and T; each T^e letter contributes F(i + b + e) − F(i + b), where F is the
//! 2πi-antiderivative of f slashed by the cusp matrix that the prefix normalizes to and b the
//! accompanying translation. S fixes i and contributes nothing.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bundle::CurveBundle;
use crate::elliptic::{curve_periods, torsion_identify_cyclotomic, EllipticCurveQ, EllipticError, LatticeShape, PeriodLattice, Point};
use crate::exactmath::rational::best_rational;
use crate::exactmath::{CyclotomicNumber, Rat};
use crate::mpc::{Complex, Real};
use crate::qexp::{FracQSeries, NumQSeries, SeriesError};
use crate::sl2z::{random_kernel_words, st_decompose, CosetTable, Letter, MatZ, Sl2zError};

#[derive(Debug, Error)]
pub enum PeriodError {
    #[error("{0} is not in Γ")]
    NotInGamma(MatZ),
    #[error("all sampled periods vanish")]
    ZeroLattice,
    #[error("period ratio {value} is not a rational with numerator and denominator ≤ {bound}")]
    Rounding { value: f64, bound: i64 },
    #[error("sampled periods do not span a lattice stable under complex conjugation")]
    NotSymmetric,
    #[error("sampled periods are all imaginary; no real period found")]
    NoRealPeriod,
    #[error("no curve in the class has periods proportional to the form's (best mismatch {0:e})")]
    NoMatch(f64),
    #[error("degree {0} is not within tolerance of a positive integer")]
    NonIntegralDegree(f64),
    #[error("cusp {cusp}: value is not a rational point of the lattice with denominator ≤ {bound}")]
    CuspNotTorsion { cusp: usize, bound: i64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Group(#[from] Sl2zError),
    #[error(transparent)]
    Curve(#[from] EllipticError),
}

#[derive(Clone, Debug)]
pub struct PeriodConfig {
    /// Working precision of all numerics.
    pub bits: usize,
    /// Absolute bound accepted for the truncation error of a single series evaluation.
    pub tail_tol: f64,
    /// Number of sampled matrices (generator lifts first, then random kernel words).
    pub num_mats: usize,
    pub max_word_len: usize,
    pub seed: u64,
    /// Relative tolerance for ratios and the degree.
    pub match_tol: f64,
}

impl Default for PeriodConfig {
    fn default() -> Self {
        PeriodConfig { bits: 128, tail_tol: 1e-6, num_mats: 20, max_word_len: 50, seed: 1, match_tol: 1e-6 }
    }
}

/// Numeric antiderivatives of one form at every cusp, with the coset table to route paths.
#[derive(Clone, Debug)]
pub struct FormIntegrals {
    antiderivs: Vec<NumQSeries>,
    widths: Vec<u32>,
    cusp_mats: Vec<MatZ>,
    table: CosetTable,
    bits: usize,
    tol: f64,
}

impl FormIntegrals {
    /// `expansions[j]` is the form slashed by the j-th cusp matrix.
    pub fn new(bundle: &CurveBundle, expansions: &[FracQSeries], cfg: &PeriodConfig) -> Result<Self, PeriodError> {
        let antiderivs = expansions
            .iter()
            .map(|s| Ok(s.antiderivative_2pii()?.to_numeric(cfg.bits)))
            .collect::<Result<Vec<_>, SeriesError>>()?;
        Ok(FormIntegrals {
            antiderivs,
            widths: bundle.widths(),
            cusp_mats: bundle.cusps.iter().map(|c| c.matrix).collect(),
            table: bundle.cosets.clone(),
            bits: cfg.bits,
            tol: cfg.tail_tol,
        })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn table(&self) -> &CosetTable {
        &self.table
    }

    /// F_j(z + b), with b reduced modulo the cusp width.
    fn antideriv(&self, j: usize, b: i64, z: &Complex) -> Result<Complex, PeriodError> {
        let w = self.widths[j] as i64;
        let shift = Complex::from_i64(b.rem_euclid(w), self.bits);
        Ok(self.antiderivs[j].eval_at(&z.add(&shift), self.tol)?.0)
    }

    fn base(&self) -> Complex {
        Complex::i(self.bits)
    }

    /// 2πi ∫_i^{h(i)} f(s) ds for any h ∈ SL₂(ℤ).
    pub fn integral_from_i(&self, h: &MatZ) -> Result<Complex, PeriodError> {
        let word = st_decompose(h);
        let z0 = self.base();
        let mut prefix = MatZ::IDENTITY;
        let mut total = Complex::zero(self.bits);
        for letter in &word.letters {
            match *letter {
                Letter::S => prefix = prefix.mul(&MatZ::S),
                Letter::T(e) => {
                    let (j, b, _) = self.table.cusp_normalize(&prefix)?;
                    let hi = self.antideriv(j, b as i64 + e, &z0)?;
                    let lo = self.antideriv(j, b as i64, &z0)?;
                    total = total.add(&hi.sub(&lo));
                    prefix = prefix.mul(&MatZ::t(e));
                }
            }
        }
        Ok(total)
    }

    /// φ(g) = 2πi ∫_i^{g(i)} f(s) ds for g ∈ Γ.
    pub fn period(&self, g: &MatZ) -> Result<Complex, PeriodError> {
        if !self.table.in_gamma(g) {
            return Err(PeriodError::NotInGamma(*g));
        }
        self.integral_from_i(g)
    }

    /// 2πi ∫_{i∞}^{α_j(i∞)} f(s) ds for the j-th cusp.
    pub fn cusp_integral(&self, j: usize) -> Result<Complex, PeriodError> {
        let z0 = self.base();
        let (j0, b0, _) = self.table.cusp_normalize(&MatZ::IDENTITY)?;
        let (jj, bj, _) = self.table.cusp_normalize(&self.cusp_mats[j])?;
        // i∞ → i at ∞, i → α_j(i) through the word, α_j(i) → α_j(i∞) at cusp j
        let head = self.antideriv(j0, b0 as i64, &z0)?;
        let mid = self.integral_from_i(&self.cusp_mats[j])?;
        let tail = self.antideriv(jj, bj as i64, &z0)?;
        Ok(head.add(&mid).sub(&tail))
    }
}

/// φ(g) for the form with the given cusp expansions.
pub fn period_of(bundle: &CurveBundle, form: &[FracQSeries], g: &MatZ, cfg: &PeriodConfig) -> Result<Complex, PeriodError> {
    FormIntegrals::new(bundle, form, cfg)?.period(g)
}

#[derive(Clone, Debug)]
pub struct PeriodSample {
    pub matrices: Vec<MatZ>,
    pub values: Vec<Complex>,
}

/// Periods of the generator lifts followed by random elements of Γ(N).
pub fn sample_periods(bundle: &CurveBundle, ints: &FormIntegrals, cfg: &PeriodConfig) -> Result<PeriodSample, PeriodError> {
    let mut matrices: Vec<MatZ> = bundle.gamma_gens.iter().take(cfg.num_mats).copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let extra = cfg.num_mats.saturating_sub(matrices.len());
    matrices.extend(random_kernel_words(bundle.level, extra, cfg.max_word_len, &mut rng));
    let values = matrices.iter().map(|g| ints.period(g)).collect::<Result<_, _>>()?;
    Ok(PeriodSample { matrices, values })
}

/// The ℤ-span of the sampled periods in normalized form.
#[derive(Clone, Debug)]
pub struct RecognizedLattice {
    pub omega1: Complex,
    /// None when every sample is real (a rank-1 span).
    pub omega2: Option<Complex>,
    pub shape: Option<LatticeShape>,
    /// (a, b) with sample = a·ω1 + b·ω2.
    pub coords: Vec<(i64, i64)>,
}

impl RecognizedLattice {
    pub fn is_degenerate(&self) -> bool {
        self.omega2.is_none()
    }

    pub fn to_period_lattice(&self, bits: usize) -> Option<PeriodLattice> {
        PeriodLattice::from_basis(self.omega1.clone(), self.omega2.clone()?, bits)
    }
}

/// x / unit as p/q with |p|, q ≤ bound, or an error when no such fraction is within tolerance.
fn round_ratio(x: &Real, unit: &Real, bound: i64, tol: f64) -> Result<Rat, PeriodError> {
    let v = x.div(unit);
    let r = best_rational(&v.to_rat(), &BigInt::from(bound));
    let err = (v.to_f64() - crate::exactmath::rational::rat_to_f64(&r)).abs();
    if r.numer().abs() > BigInt::from(bound) || err > tol * v.to_f64().abs().max(1.0) {
        return Err(PeriodError::Rounding { value: v.to_f64(), bound });
    }
    Ok(r)
}

/// Divides real and imaginary parts by their smallest nonzero size, rounds the quotients to
/// fractions with numerator and denominator ≤ `bound`, and reduces the resulting integer
/// vectors to a basis of rectangular or triangular shape.
pub fn recognize_lattice(values: &[Complex], bound: i64, tol: f64) -> Result<RecognizedLattice, PeriodError> {
    let scale = values.iter().map(|z| z.abs().to_f64()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(PeriodError::ZeroLattice);
    }
    let small = |x: &Real| x.abs().to_f64() <= tol * scale;
    let min_nonzero = |f: &dyn Fn(&Complex) -> Real| -> Option<Real> {
        values.iter().map(f).filter(|x| !small(x)).map(|x| x.abs()).min_by(|a, b| a.cmp(b))
    };
    let re_unit = min_nonzero(&|z: &Complex| z.re.clone()).ok_or(PeriodError::NoRealPeriod)?;
    let im_unit = min_nonzero(&|z: &Complex| z.im.clone());
    let mut ratios = Vec::with_capacity(values.len());
    for z in values {
        let r = if small(&z.re) { Rat::zero() } else { round_ratio(&z.re, &re_unit, bound, tol)? };
        let s = match &im_unit {
            Some(u) if !small(&z.im) => round_ratio(&z.im, u, bound, tol)?,
            _ => Rat::zero(),
        };
        ratios.push((r, s));
    }
    let dr = ratios.iter().fold(BigInt::one(), |a, (r, _)| a.lcm(r.denom()));
    let di = ratios.iter().fold(BigInt::one(), |a, (_, s)| a.lcm(s.denom()));
    let ints: Vec<(BigInt, BigInt)> = ratios
        .iter()
        .map(|(r, s)| ((r * Rat::from_integer(dr.clone())).to_integer(), (s * Rat::from_integer(di.clone())).to_integer()))
        .collect();
    // Hermite reduction in two dimensions: (a, 0) and (c, d)
    let mut a = BigInt::zero();
    let mut v: Option<(BigInt, BigInt)> = None;
    for (x, y) in &ints {
        if y.is_zero() {
            a = a.gcd(x);
            continue;
        }
        match v.take() {
            None => v = Some((x.clone(), y.clone())),
            Some((vx, vy)) => {
                let eg = vy.extended_gcd(y);
                let g = eg.gcd;
                let nx = &eg.x * &vx + &eg.y * x;
                let other = &(y / &g) * &vx - &(&vy / &g) * x;
                a = a.gcd(&other);
                v = Some((nx, g));
            }
        }
    }
    let bits = values[0].prec();
    let unit_re = |k: &BigInt| Real::from_bigint(k, bits).mul(&re_unit).div(&Real::from_bigint(&dr, bits));
    if a.is_zero() {
        return Err(PeriodError::NoRealPeriod);
    }
    let omega1 = Complex::from_real(unit_re(&a));
    let Some((mut cx, mut d)) = v else {
        let coords = ints.iter().map(|(x, _)| ((x / &a).to_i64().unwrap_or(0), 0)).collect();
        return Ok(RecognizedLattice { omega1, omega2: None, shape: None, coords });
    };
    if d.is_negative() {
        d = -d;
        cx = -cx;
    }
    cx = cx.mod_floor(&a);
    let shape = if cx.is_zero() {
        LatticeShape::Rectangular
    } else if &cx * 2 == a {
        LatticeShape::Triangular
    } else {
        return Err(PeriodError::NotSymmetric);
    };
    let im = Real::from_bigint(&d, bits).mul(im_unit.as_ref().expect("nonzero imaginary part")).div(&Real::from_bigint(&di, bits));
    let omega2 = Complex::new(unit_re(&cx), im);
    let coords = ints
        .iter()
        .map(|(x, y)| {
            let b = y / &d;
            let aa = (x - &b * &cx) / &a;
            (aa.to_i64().unwrap_or(0), b.to_i64().unwrap_or(0))
        })
        .collect();
    Ok(RecognizedLattice { omega1, omega2: Some(omega2), shape: Some(shape), coords })
}

/// The curve of the class whose lattice is a rational multiple c·Λ_f of the form's, with
/// c = 1/k for a positive integer k.
#[derive(Clone, Debug)]
pub struct OptimalMatch {
    pub index: usize,
    pub curve: EllipticCurveQ,
    pub manin: Rat,
    pub curve_lattice: PeriodLattice,
}

pub fn match_optimal_curve(lat: &RecognizedLattice, class: &[EllipticCurveQ], cfg: &PeriodConfig) -> Result<OptimalMatch, PeriodError> {
    let mut best = f64::INFINITY;
    let (Some(om2), Some(shape)) = (&lat.omega2, lat.shape) else {
        return Err(PeriodError::NoMatch(best));
    };
    for (index, e) in class.iter().enumerate() {
        let cl = curve_periods(e, cfg.bits);
        if cl.shape != shape {
            continue;
        }
        let r1 = cl.omega1.re.div(&lat.omega1.re).to_f64();
        let r2 = cl.omega2.im.div(&om2.im).to_f64();
        let mism = ((r1 - r2) / r1).abs();
        best = best.min(mism);
        if mism > cfg.match_tol {
            continue;
        }
        let k = (1.0 / r1).round();
        if k < 1.0 || ((1.0 / r1 - k) / k).abs() > cfg.match_tol {
            best = best.min(((1.0 / r1 - k) / k).abs());
            continue;
        }
        return Ok(OptimalMatch {
            index,
            curve: e.clone(),
            manin: Rat::new(BigInt::one(), BigInt::from(k as i64)),
            curve_lattice: cl,
        });
    }
    Err(PeriodError::NoMatch(best))
}

/// Analytic degree of the map X → E, from one period per coset.
///
/// With G_k = F∘α_k over coset representatives α_k = α_j T^b, the degree is
/// 4π²∫_X |f|² dx dy / covol(Λ_f). Stokes on the standard fundamental domain reduces the
/// integral to its boundary: the vertical edges cancel because parabolic periods vanish, and
/// the arc leaves −(1/2i) Σ_k conj(φ(α_k S α_{k′}⁻¹))·(G_{k′}(i) − G_{k′}(ρ)).
pub fn modular_degree_numeric(ints: &FormIntegrals, form_lattice: &PeriodLattice) -> Result<Complex, PeriodError> {
    let bits = ints.bits();
    let table = ints.table();
    let i = Complex::i(bits);
    let rho = Complex::new(Real::from_f64(-0.5, bits), Real::from_i64(3, bits).sqrt().div_i64(2));
    let mut total = Complex::zero(bits);
    for (j, &w) in table.widths().iter().enumerate() {
        let alpha_j = ints.cusp_mats[j];
        for b in 0..w as i64 {
            let ak = alpha_j.mul(&MatZ::t(b));
            let m = ak.mul(&MatZ::S);
            let (j2, b2, _) = table.cusp_normalize(&m)?;
            let a2 = ints.cusp_mats[j2].mul(&MatZ::t(b2 as i64));
            let gamma = m.mul(&a2.inverse());
            let d = ints.period(&gamma)?;
            let g_i = ints.antideriv(j2, b2 as i64, &i)?;
            let g_rho = ints.antideriv(j2, b2 as i64, &rho)?;
            total = total.add(&d.conj().mul(&g_i.sub(&g_rho)));
        }
    }
    // −(1/2i)·total = (i/2)·total
    let integral = total.mul_i().div_i64(2);
    Ok(integral.scale(&Real::from_i64(1, bits).div(&form_lattice.covolume())))
}

/// The degree as a positive integer, with the form's lattice Λ_E / c.
pub fn modular_degree(ints: &FormIntegrals, m: &OptimalMatch, cfg: &PeriodConfig) -> Result<u64, PeriodError> {
    let inv = m.manin.recip();
    let form_lattice = m.curve_lattice.scaled(&inv);
    let r = modular_degree_numeric(ints, &form_lattice)?;
    let re = r.re.to_f64();
    let k = re.round();
    if k < 1.0 || ((re - k) / k).abs() > cfg.match_tol || r.im.to_f64().abs() > cfg.match_tol * k.max(1.0) {
        return Err(PeriodError::NonIntegralDegree(re));
    }
    Ok(k as u64)
}

/// Abel–Jacobi image c·∫_{i∞}^{cusp} 2πi f of a cusp and the torsion point it names.
#[derive(Clone, Debug)]
pub struct CuspConstant {
    pub cusp: usize,
    pub value: Complex,
    /// Lattice coordinates (s, t) of the value, value = s·ω1′ + t·ω2′.
    pub coords: (Rat, Rat),
    pub point: Point<CyclotomicNumber>,
}

/// Largest denominator accepted for cusp coordinates; rational torsion on E has order ≤ 12
/// and torsion over ℚ(ζ_N) is still small.
pub const CUSP_DENOMINATOR_BOUND: i64 = 120;

pub fn cusp_constants(ints: &FormIntegrals, m: &OptimalMatch, level: u32, cfg: &PeriodConfig) -> Result<Vec<CuspConstant>, PeriodError> {
    let lat = &m.curve_lattice;
    let mut out = Vec::new();
    for j in 0..ints.cusp_mats.len() {
        let value = ints.cusp_integral(j)?.mul_rat(&m.manin);
        let (s, t) = lat.coords(&value);
        let bound = BigInt::from(CUSP_DENOMINATOR_BOUND);
        let sr = best_rational(&s.to_rat(), &bound);
        let tr = best_rational(&t.to_rat(), &bound);
        let close = |x: &Real, r: &Rat| (x.to_f64() - crate::exactmath::rational::rat_to_f64(r)).abs() < cfg.match_tol;
        if !close(&s, &sr) || !close(&t, &tr) {
            return Err(PeriodError::CuspNotTorsion { cusp: j, bound: CUSP_DENOMINATOR_BOUND });
        }
        let z = lat.point(&sr, &tr);
        let point = torsion_identify_cyclotomic(&m.curve, &z, lat, level)?;
        out.push(CuspConstant { cusp: j, value, coords: (sr, tr), point });
    }
    Ok(out)
}
