//! Truncated series in q^{1/w}: exact ones over ℚ(ζ_N), numeric ones for evaluation,
//! and Laurent series in z for the Weierstrass functions.

pub mod kron;

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactmath::{field, CycloField, CyclotomicNumber, HomogPoly, Rat};
use crate::mpc::{Complex, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),
    #[error("series is zero to its precision and cannot be inverted")]
    NotInvertible,
    #[error("antiderivative needs a series without constant or polar terms (found index {0})")]
    NonCuspidal(i64),
    #[error("truncation tail {tail:e} exceeds the requested accuracy {tol:e}")]
    TailTooLarge { tail: f64, tol: f64 },
    #[error("width {0} does not divide the level {1}")]
    BadWidth(u32, u32),
}

/// Σ_{n=val}^{prec−1} a_n q^{n/w} with a_n ∈ ℚ(ζ_N), stored as integer coordinate vectors over
/// one shared positive denominator.
#[derive(Clone, Debug)]
pub struct FracQSeries {
    field: Arc<CycloField>,
    width: u32,
    val: i64,
    prec: i64,
    den: BigInt,
    coeffs: Vec<Vec<BigInt>>,
}

impl PartialEq for FracQSeries {
    /// Equality of the known coefficients on the common range.
    fn eq(&self, other: &Self) -> bool {
        if self.field.n != other.field.n || self.width != other.width {
            return false;
        }
        let hi = self.prec.min(other.prec);
        let lo = self.val.min(other.val);
        (lo..hi).all(|n| {
            let a = self.int_coeff(n);
            let b = other.int_coeff(n);
            a.iter().zip(b.iter()).all(|(x, y)| x * &other.den == y * &self.den)
        })
    }
}

impl FracQSeries {
    pub fn zero(level: u32, width: u32, val: i64, prec: i64) -> Self {
        let f = field(level);
        let len = (prec - val).max(0) as usize;
        let coeffs = vec![vec![BigInt::zero(); f.phi]; len];
        FracQSeries { field: f, width, val, prec: prec.max(val), den: BigInt::one(), coeffs }
    }

    /// Constant series c + O(q^{prec/w}).
    pub fn constant(c: &CyclotomicNumber, width: u32, prec: i64) -> Self {
        let mut s = Self::zero(c.level(), width, 0, prec);
        if prec > 0 {
            s.set_coeff(0, c);
        }
        s
    }

    pub fn one(level: u32, width: u32, prec: i64) -> Self {
        Self::constant(&CyclotomicNumber::one(level), width, prec)
    }

    /// q^{k/w} + O(q^{prec/w}).
    pub fn monomial(level: u32, width: u32, k: i64, prec: i64) -> Self {
        let mut s = Self::zero(level, width, k, prec);
        if prec > k {
            s.set_coeff(k, &CyclotomicNumber::one(level));
        }
        s
    }

    pub fn from_coeffs(width: u32, val: i64, coeffs: &[CyclotomicNumber], prec: i64, level: u32) -> Self {
        let mut s = Self::zero(level, width, val, prec);
        for (i, c) in coeffs.iter().enumerate() {
            let n = val + i as i64;
            if n < prec {
                s.set_coeff(n, c);
            }
        }
        s
    }

    pub fn from_rationals(level: u32, width: u32, val: i64, coeffs: &[Rat], prec: i64) -> Self {
        let cs: Vec<CyclotomicNumber> = coeffs.iter().map(|r| CyclotomicNumber::from_rat(level, r.clone())).collect();
        Self::from_coeffs(width, val, &cs, prec, level)
    }

    /// Builds directly from integer coordinate rows and a denominator.
    pub fn from_int_rows(level: u32, width: u32, val: i64, den: BigInt, rows: Vec<Vec<BigInt>>, prec: i64) -> Self {
        let f = field(level);
        let mut rows = rows;
        rows.truncate((prec - val).max(0) as usize);
        let mut s = FracQSeries { field: f, width, val, prec, den, coeffs: rows };
        s.normalize();
        s
    }

    pub fn level(&self) -> u32 {
        self.field.n
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn start(&self) -> i64 {
        self.val
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn int_rows(&self) -> &[Vec<BigInt>] {
        &self.coeffs
    }

    pub fn phi(&self) -> usize {
        self.field.phi
    }

    fn int_coeff(&self, n: i64) -> Vec<BigInt> {
        if n < self.val || n >= self.prec {
            vec![BigInt::zero(); self.field.phi]
        } else {
            self.coeffs[(n - self.val) as usize].clone()
        }
    }

    /// Coefficient of q^{n/w} (zero below the start; meaningless at or beyond prec).
    pub fn coeff(&self, n: i64) -> CyclotomicNumber {
        let c = self.int_coeff(n);
        let v = c.into_iter().map(|x| Rat::new(x, self.den.clone())).collect();
        CyclotomicNumber::from_coeffs(self.field.n, v).expect("length φ")
    }

    fn set_coeff(&mut self, n: i64, c: &CyclotomicNumber) {
        // bring c to the common denominator
        let l = c.coeffs().iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let new_den = self.den.lcm(&l);
        if new_den != self.den {
            let f = &new_den / &self.den;
            for row in self.coeffs.iter_mut() {
                for x in row.iter_mut() {
                    *x *= &f;
                }
            }
            self.den = new_den;
        }
        let row: Vec<BigInt> = c.coeffs().iter().map(|r| (r * Rat::from_integer(self.den.clone())).to_integer()).collect();
        self.coeffs[(n - self.val) as usize] = row;
    }

    /// Removes the common content of coefficients and denominator.
    fn normalize(&mut self) {
        let mut g = self.den.clone();
        for row in &self.coeffs {
            for x in row {
                if !x.is_zero() {
                    g = g.gcd(x);
                    if g.is_one() {
                        return;
                    }
                }
            }
        }
        if g.is_zero() || g.is_one() {
            return;
        }
        self.den /= &g;
        for row in self.coeffs.iter_mut() {
            for x in row.iter_mut() {
                *x /= &g;
            }
        }
    }

    /// Index of the first nonzero known coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.iter().position(|r| r.iter().any(|x| !x.is_zero())).map(|i| self.val + i as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.valuation().is_none()
    }

    /// Lower bound for the order of vanishing in units of q: v/w, or prec/w when no known
    /// coefficient is nonzero.
    pub fn order_of_vanishing_lb(&self) -> Rat {
        let v = self.valuation().unwrap_or(self.prec);
        Rat::new(BigInt::from(v), BigInt::from(self.width))
    }

    /// Same series with the storage trimmed to start at the valuation.
    pub fn trimmed(&self) -> Self {
        match self.valuation() {
            None => Self::zero(self.field.n, self.width, self.prec, self.prec),
            Some(v) => {
                let mut s = self.clone();
                s.coeffs.drain(..(v - self.val) as usize);
                s.val = v;
                s
            }
        }
    }

    pub fn truncate(&self, prec: i64) -> Self {
        let mut s = self.clone();
        if prec < s.prec {
            s.prec = prec.max(s.val);
            s.coeffs.truncate((s.prec - s.val) as usize);
        }
        s
    }

    fn check(&self, o: &Self) -> Result<(), SeriesError> {
        if self.field.n != o.field.n {
            return Err(SeriesError::LevelMismatch(self.field.n, o.field.n));
        }
        if self.width != o.width {
            return Err(SeriesError::WidthMismatch(self.width, o.width));
        }
        Ok(())
    }

    fn lincomb(&self, o: &Self, sign: i32) -> Result<Self, SeriesError> {
        self.check(o)?;
        let val = self.val.min(o.val);
        let prec = self.prec.min(o.prec);
        let den = self.den.lcm(&o.den);
        let fa = &den / &self.den;
        let fb = &den / &o.den;
        let len = (prec - val).max(0) as usize;
        let mut coeffs = Vec::with_capacity(len);
        for n in val..val + len as i64 {
            let a = self.int_coeff(n);
            let b = o.int_coeff(n);
            coeffs.push(
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| if sign > 0 { x * &fa + y * &fb } else { x * &fa - y * &fb })
                    .collect(),
            );
        }
        let mut s = FracQSeries { field: self.field.clone(), width: self.width, val, prec: prec.max(val), den, coeffs };
        s.normalize();
        Ok(s)
    }

    pub fn add(&self, o: &Self) -> Result<Self, SeriesError> {
        self.lincomb(o, 1)
    }

    pub fn sub(&self, o: &Self) -> Result<Self, SeriesError> {
        self.lincomb(o, -1)
    }

    pub fn neg(&self) -> Self {
        let mut s = self.clone();
        for row in s.coeffs.iter_mut() {
            for x in row.iter_mut() {
                *x = -&*x;
            }
        }
        s
    }

    pub fn scale_rat(&self, r: &Rat) -> Self {
        let mut s = self.clone();
        for row in s.coeffs.iter_mut() {
            for x in row.iter_mut() {
                *x *= r.numer();
            }
        }
        s.den *= r.denom();
        if s.den.is_negative() {
            s.den = -s.den;
            for row in s.coeffs.iter_mut() {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
            }
        }
        s.normalize();
        s
    }

    pub fn scale(&self, c: &CyclotomicNumber) -> Self {
        if let Some(r) = c.as_rational() {
            return self.scale_rat(&r);
        }
        let dc = c.coeffs().iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let ci: Vec<BigInt> = c.coeffs().iter().map(|r| (r * Rat::from_integer(dc.clone())).to_integer()).collect();
        let phi = self.field.phi;
        let mut out = self.clone();
        for row in out.coeffs.iter_mut() {
            if row.iter().all(|x| x.is_zero()) {
                continue;
            }
            let mut poly = vec![BigInt::zero(); 2 * phi - 1];
            for (i, x) in row.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (j, y) in ci.iter().enumerate() {
                    if !y.is_zero() {
                        poly[i + j] += x * y;
                    }
                }
            }
            *row = self.field.reduce_int(&poly);
        }
        out.den = &self.den * dc;
        out.normalize();
        out
    }

    /// Treats the known coefficients as exact and pads with zeros up to `prec`.
    fn padded(&self, prec: i64) -> Self {
        let mut s = self.clone();
        if prec > s.prec {
            s.coeffs.resize((prec - s.val) as usize, vec![BigInt::zero(); self.field.phi]);
            s.prec = prec;
        }
        s
    }

    pub fn mul(&self, o: &Self) -> Result<Self, SeriesError> {
        self.check(o)?;
        let val = self.val + o.val;
        let prec = (self.val + o.prec).min(o.val + self.prec);
        let len = (prec - val).max(0) as usize;
        let phi = self.field.phi;
        let raw = kron::kron_mul(&self.coeffs, &o.coeffs, phi, len);
        let coeffs: Vec<Vec<BigInt>> = raw.into_iter().map(|r| self.field.reduce_int(&r)).collect();
        let mut s = FracQSeries { field: self.field.clone(), width: self.width, val, prec: val + len as i64, den: &self.den * &o.den, coeffs };
        s.normalize();
        Ok(s)
    }

    pub fn pow(&self, e: u32) -> Result<Self, SeriesError> {
        let mut acc: Option<Self> = None;
        let mut base = self.clone();
        let mut e = e;
        if e == 0 {
            return Ok(Self::one(self.field.n, self.width, self.prec - self.val));
        }
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base)?,
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc.expect("e ≥ 1"))
    }

    /// Multiplicative inverse; the leading known coefficient must be nonzero.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let s = self.trimmed();
        let v = s.valuation().ok_or(SeriesError::NotInvertible)?;
        let rel = s.prec - v; // relative precision
        let lead = s.coeff(v);
        let lead_inv = lead.inverse().map_err(|_| SeriesError::NotInvertible)?;
        // unit part u = s / (lead q^v), 1 + O(q)
        let mut unit = s.scale(&lead_inv);
        unit.val -= v;
        unit.prec -= v;
        // Newton: b ← b (2 − u b)
        let level = self.field.n;
        let mut b = Self::one(level, self.width, 1);
        let mut cur = 1i64;
        while cur < rel {
            cur = (2 * cur).min(rel);
            let u = unit.truncate(cur);
            let ub = u.mul(&b.padded(cur))?.truncate(cur);
            let two = Self::constant(&CyclotomicNumber::from_rat(level, Rat::from_integer(BigInt::from(2))), self.width, cur);
            let corr = two.sub(&ub)?;
            b = b.padded(cur).mul(&corr)?.truncate(cur);
        }
        let mut out = b.truncate(rel).scale(&lead_inv);
        out.val -= v;
        out.prec -= v;
        Ok(out)
    }

    pub fn div(&self, o: &Self) -> Result<Self, SeriesError> {
        self.mul(&o.inverse()?)
    }

    /// F with dF/dz = 2πi·f: a(n) q^{n/w} ↦ (w/n)·a(n) q^{n/w}.
    pub fn antiderivative_2pii(&self) -> Result<Self, SeriesError> {
        if let Some(v) = self.valuation() {
            if v <= 0 {
                return Err(SeriesError::NonCuspidal(v));
            }
        }
        let s = self.trimmed();
        if s.is_zero() {
            return Ok(s);
        }
        // common denominator for the factors w/n
        let l = (s.val..s.prec).fold(BigInt::one(), |acc, n| acc.lcm(&BigInt::from(n)));
        let w = BigInt::from(self.width);
        let mut out = s.clone();
        for (i, row) in out.coeffs.iter_mut().enumerate() {
            let n = BigInt::from(s.val + i as i64);
            let f = &l / &n * &w;
            for x in row.iter_mut() {
                *x *= &f;
            }
        }
        out.den = &s.den * &l;
        out.normalize();
        Ok(out)
    }

    /// (1/(2πi)) d/dz: a(n) q^{n/w} ↦ (n/w)·a(n) q^{n/w}.
    pub fn derivative_2pii(&self) -> Self {
        let mut out = self.clone();
        for (i, row) in out.coeffs.iter_mut().enumerate() {
            let n = BigInt::from(self.val + i as i64);
            for x in row.iter_mut() {
                *x *= &n;
            }
        }
        out.den = &self.den * BigInt::from(self.width);
        out.normalize();
        out
    }

    /// Reinterprets the series in q^{1/(m·w)}.
    pub fn rescale_width(&self, m: u32) -> Self {
        let phi = self.field.phi;
        let m64 = m as i64;
        let val = self.val * m64;
        let prec = self.prec * m64;
        let mut coeffs = vec![vec![BigInt::zero(); phi]; (prec - val) as usize];
        for (i, row) in self.coeffs.iter().enumerate() {
            coeffs[i * m as usize] = row.clone();
        }
        FracQSeries { field: self.field.clone(), width: self.width * m, val, prec, den: self.den.clone(), coeffs }
    }

    /// Substitutes τ ↦ τ + b: a(n) ↦ a(n)·ζ_w^{b n}. Needs w | N.
    pub fn shift_tau(&self, b: i64) -> Result<Self, SeriesError> {
        let n = self.field.n;
        if !n.is_multiple_of(self.width) {
            return Err(SeriesError::BadWidth(self.width, n));
        }
        let step = (n / self.width) as i64;
        let mut out = self.clone();
        for (i, row) in out.coeffs.iter_mut().enumerate() {
            let k = (step * b * (self.val + i as i64)).rem_euclid(n as i64) as usize;
            if k == 0 {
                continue;
            }
            let mut poly = vec![BigInt::zero(); k + self.field.phi];
            for (j, x) in row.iter().enumerate() {
                poly[j + k] = x.clone();
            }
            *row = self.field.reduce_int(&poly);
        }
        Ok(out)
    }

    /// Applies ζ_N ↦ ζ_N^k to every coefficient.
    pub fn galois_twist(&self, k: i64) -> Result<Self, crate::exactmath::MathError> {
        let n = self.field.n as i64;
        if k.gcd(&n) != 1 {
            return Err(crate::exactmath::MathError::NotCoprime(k, self.field.n));
        }
        let k = k.rem_euclid(n) as usize;
        let mut out = self.clone();
        for row in out.coeffs.iter_mut() {
            let mut poly = vec![BigInt::zero(); n as usize];
            for (j, x) in row.iter().enumerate() {
                if !x.is_zero() {
                    poly[(j * k) % n as usize] += x;
                }
            }
            *row = self.field.reduce_int(&poly);
        }
        Ok(out)
    }

    /// Numeric copy of the known coefficients at the given precision.
    pub fn to_numeric(&self, bits: usize) -> NumQSeries {
        let zeta = zeta_powers(self.field.n, self.field.phi, bits + 32);
        let den = Real::from_bigint(&self.den, bits + 32);
        let coeffs = self
            .coeffs
            .iter()
            .map(|row| {
                let mut acc = Complex::zero(bits + 32);
                for (x, z) in row.iter().zip(&zeta) {
                    if !x.is_zero() {
                        acc = acc.add(&z.scale(&Real::from_bigint(x, bits + 32)));
                    }
                }
                Complex::new(acc.re.div(&den), acc.im.div(&den)).with_prec(bits)
            })
            .collect();
        NumQSeries { width: self.width, val: self.val, prec: self.prec, coeffs }
    }

    /// Numeric value of the truncated series at z, with the tail estimate.
    pub fn eval_at(&self, z: &Complex, bits: usize, tol: f64) -> Result<(Complex, f64), SeriesError> {
        self.to_numeric(bits).eval_at(z, tol)
    }

    /// Evaluates a ℚ(ζ_N)-polynomial whose coefficients are read off this series' field.
    pub fn field(&self) -> &Arc<CycloField> {
        &self.field
    }
}

/// Products of variable series indexed by exponent vector, memoized so that all monomials of
/// one degree share their lower-degree factors.
pub struct MonomialProducts<'a> {
    vars: &'a [FracQSeries],
    cache: std::collections::HashMap<Vec<u32>, FracQSeries>,
}

impl<'a> MonomialProducts<'a> {
    pub fn new(vars: &'a [FracQSeries]) -> Self {
        MonomialProducts { vars, cache: std::collections::HashMap::new() }
    }

    pub fn get(&mut self, e: &[u32]) -> Result<FracQSeries, SeriesError> {
        if let Some(s) = self.cache.get(e) {
            return Ok(s.clone());
        }
        let first = self.vars.first().expect("at least one variable");
        let out = match e.iter().position(|&k| k > 0) {
            None => FracQSeries::one(first.level(), first.width(), first.prec() - first.start().min(0)),
            Some(i) => {
                let mut lower = e.to_vec();
                lower[i] -= 1;
                if lower.iter().all(|&k| k == 0) {
                    self.vars[i].clone()
                } else {
                    self.get(&lower)?.mul(&self.vars[i])?
                }
            }
        };
        self.cache.insert(e.to_vec(), out.clone());
        Ok(out)
    }

    /// Σ c_e·x^e over the terms of a rational homogeneous polynomial.
    pub fn eval(&mut self, poly: &HomogPoly) -> Result<FracQSeries, SeriesError> {
        let mut acc: Option<FracQSeries> = None;
        for (e, c) in poly.terms() {
            let t = self.get(e)?.scale_rat(c);
            acc = Some(match acc {
                None => t,
                Some(a) => a.add(&t)?,
            });
        }
        Ok(match acc {
            Some(a) => a,
            None => {
                let e = vec![poly.degree(); 1].into_iter().chain(std::iter::repeat_n(0, self.vars.len() - 1)).collect::<Vec<_>>();
                let m = self.get(&e)?;
                FracQSeries::zero(m.level(), m.width(), m.prec(), m.prec())
            }
        })
    }
}

/// Value of a rational homogeneous polynomial on the given series.
pub fn eval_homog(poly: &HomogPoly, vars: &[FracQSeries]) -> Result<FracQSeries, SeriesError> {
    MonomialProducts::new(vars).eval(poly)
}

/// ζ_N^k as complex numbers for k < phi.
pub fn zeta_powers(n: u32, count: usize, bits: usize) -> Vec<Complex> {
    let two_pi = Real::pi(bits).mul_i64(2);
    (0..count)
        .map(|k| {
            let ang = two_pi.mul_i64(k as i64).div_i64(n as i64);
            Complex::new(ang.cos(), ang.sin())
        })
        .collect()
}

/// Complex value of a cyclotomic number under ζ_N ↦ e^{2πi/N}.
pub fn cyclo_to_complex(c: &CyclotomicNumber, bits: usize) -> Complex {
    let z = zeta_powers(c.level(), c.coeffs().len(), bits);
    let mut acc = Complex::zero(bits);
    for (q, zk) in c.coeffs().iter().zip(&z) {
        if !q.is_zero() {
            acc = acc.add(&zk.mul_rat(q));
        }
    }
    acc
}

/// Numeric truncated series Σ a_n q^{n/w}.
#[derive(Clone, Debug)]
pub struct NumQSeries {
    pub width: u32,
    pub val: i64,
    pub prec: i64,
    pub coeffs: Vec<Complex>,
}

impl NumQSeries {
    pub fn zero(width: u32, prec: i64) -> Self {
        NumQSeries { width, val: prec, prec, coeffs: Vec::new() }
    }

    /// Rough size of the coefficients near the truncation point.
    fn tail_coeff_size(&self) -> f64 {
        let k = self.coeffs.len();
        let from = k.saturating_sub(10);
        self.coeffs[from..].iter().map(|c| c.abs().to_f64()).fold(0.0, f64::max)
    }

    /// Σ a_n q_w^n at q_w = e^{2πi z/w}; returns (value, tail estimate). The estimate is
    /// 2·max|a_n| (last ten terms) · |q_w|^{prec} / (1 − |q_w|).
    pub fn eval_at(&self, z: &Complex, tol: f64) -> Result<(Complex, f64), SeriesError> {
        let bits = z.prec();
        if self.coeffs.is_empty() {
            return Ok((Complex::zero(bits), 0.0));
        }
        let qw = z.div_i64(self.width as i64).exp_2pi_i();
        let r = qw.abs().to_f64();
        let tail = if r >= 1.0 {
            f64::INFINITY
        } else {
            2.0 * self.tail_coeff_size() * r.powf(self.prec as f64) / (1.0 - r)
        };
        // Horner from the top
        let mut acc = Complex::zero(bits);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&qw).add(c);
        }
        let lead = if self.val >= 0 { qw.powu(self.val as u64) } else { qw.inv().powu((-self.val) as u64) };
        let value = acc.mul(&lead);
        if tail > tol {
            return Err(SeriesError::TailTooLarge { tail, tol });
        }
        Ok((value, tail))
    }
}

/// Coefficient arithmetic needed by [`LaurentZSeries`].
pub trait Scalar: Clone {
    fn zero_like(&self) -> Self;
    fn from_rat_like(&self, q: &Rat) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn mul_rat(&self, q: &Rat) -> Self;
}

impl Scalar for Rat {
    fn zero_like(&self) -> Self {
        Rat::zero()
    }
    fn from_rat_like(&self, q: &Rat) -> Self {
        q.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn mul_rat(&self, q: &Rat) -> Self {
        self * q
    }
}

impl Scalar for Complex {
    fn zero_like(&self) -> Self {
        Complex::zero(self.prec())
    }
    fn from_rat_like(&self, q: &Rat) -> Self {
        Complex::from_rat(q, self.prec())
    }
    fn add(&self, o: &Self) -> Self {
        Complex::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Complex::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Complex::mul(self, o)
    }
    fn mul_rat(&self, q: &Rat) -> Self {
        Complex::mul_rat(self, q)
    }
}

/// Σ_{k=min_exp}^{min_exp+len−1} c_k z^k + O(z^{min_exp+len}).
#[derive(Clone, Debug)]
pub struct LaurentZSeries<T: Scalar> {
    pub min_exp: i64,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> LaurentZSeries<T> {
    /// Exclusive upper bound of the known exponents.
    pub fn prec(&self) -> i64 {
        self.min_exp + self.coeffs.len() as i64
    }

    pub fn coeff(&self, k: i64) -> Option<&T> {
        if k < self.min_exp {
            return None;
        }
        self.coeffs.get((k - self.min_exp) as usize)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.mul_rat(&Rat::from_integer(BigInt::from(self.min_exp + i as i64))))
            .collect();
        LaurentZSeries { min_exp: self.min_exp - 1, coeffs }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let prec = (self.min_exp + o.prec()).min(o.min_exp + self.prec());
        let min_exp = self.min_exp + o.min_exp;
        let len = (prec - min_exp).max(0) as usize;
        let zero = self.coeffs[0].zero_like();
        let mut coeffs = vec![zero; len];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j < len {
                    coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
                }
            }
        }
        LaurentZSeries { min_exp, coeffs }
    }

    pub fn add(&self, o: &Self) -> Self {
        let min_exp = self.min_exp.min(o.min_exp);
        let prec = self.prec().min(o.prec());
        let zero = self.coeffs[0].zero_like();
        let coeffs = (min_exp..prec)
            .map(|k| {
                let a = self.coeff(k).cloned().unwrap_or_else(|| zero.clone());
                let b = o.coeff(k).cloned().unwrap_or_else(|| zero.clone());
                a.add(&b)
            })
            .collect();
        LaurentZSeries { min_exp, coeffs }
    }

    pub fn scale_rat(&self, q: &Rat) -> Self {
        LaurentZSeries { min_exp: self.min_exp, coeffs: self.coeffs.iter().map(|c| c.mul_rat(q)).collect() }
    }

    /// Value at a numeric point (coefficients converted through `conv`).
    pub fn eval_with(&self, z: &Complex, conv: impl Fn(&T) -> Complex) -> Complex {
        let bits = z.prec();
        let mut acc = Complex::zero(bits);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add(&conv(c));
        }
        let lead = if self.min_exp >= 0 { z.powu(self.min_exp as u64) } else { z.inv().powu((-self.min_exp) as u64) };
        acc.mul(&lead)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::{rat, rat_int};
    use proptest::prelude::*;

    fn rs(width: u32, val: i64, c: &[i64], prec: i64) -> FracQSeries {
        let cs: Vec<Rat> = c.iter().map(|&x| rat_int(x)).collect();
        FracQSeries::from_rationals(1, width, val, &cs, prec)
    }

    #[test]
    fn products_and_geometric_series() {
        let a = rs(3, 1, &[1], 10);
        let b = rs(3, 2, &[1], 10);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.valuation(), Some(3));
        assert_eq!(p.coeff(3), CyclotomicNumber::one(1));
        let one_minus_q = rs(1, 0, &[1, -1], 20);
        let inv = one_minus_q.inverse().unwrap();
        for n in 0..20 {
            assert_eq!(inv.coeff(n), CyclotomicNumber::one(1));
        }
        assert_eq!(inv.prec(), 20);
        let one = FracQSeries::one(1, 1, 30);
        assert_eq!(inv.mul(&one).unwrap(), inv);
    }

    #[test]
    fn inverse_with_valuation() {
        // (2q + q^2)^{-1} = (1/2) q^{-1} (1 - q/2 + q^2/4 - …)
        let s = rs(1, 1, &[2, 1], 12);
        let inv = s.inverse().unwrap();
        assert_eq!(inv.valuation(), Some(-1));
        assert_eq!(inv.coeff(-1).as_rational(), Some(rat(1, 2)));
        assert_eq!(inv.coeff(0).as_rational(), Some(rat(-1, 4)));
        assert_eq!(inv.coeff(1).as_rational(), Some(rat(1, 8)));
        let back = inv.mul(&s).unwrap();
        assert_eq!(back.coeff(0).as_rational(), Some(rat(1, 1)));
        for n in 1..back.prec() {
            assert!(back.coeff(n).is_zero());
        }
    }

    #[test]
    fn antiderivative_examples() {
        let s = rs(7, 1, &[1], 10);
        assert_eq!(s.antiderivative_2pii().unwrap().coeff(1).as_rational(), Some(rat(7, 1)));
        let s = rs(1, 2, &[1], 10);
        assert_eq!(s.antiderivative_2pii().unwrap().coeff(2).as_rational(), Some(rat(1, 2)));
        let s = rs(36, 5, &[3], 10);
        assert_eq!(s.antiderivative_2pii().unwrap().coeff(5).as_rational(), Some(rat(108, 5)));
        let c = rs(1, 0, &[1, 1], 10);
        assert!(matches!(c.antiderivative_2pii(), Err(SeriesError::NonCuspidal(0))));
    }

    #[test]
    fn vanishing_orders() {
        assert_eq!(rs(7, 3, &[1, 2], 10).order_of_vanishing_lb(), rat(3, 7));
        assert_eq!(FracQSeries::zero(1, 4, 0, 64).order_of_vanishing_lb(), rat(16, 1));
        assert_eq!(rs(1, 1, &[1, 0, 1], 10).order_of_vanishing_lb(), rat(1, 1));
    }

    #[test]
    fn evaluation_examples() {
        let bits = 128;
        let i = Complex::i(bits);
        assert!(FracQSeries::zero(1, 1, 1, 10).eval_at(&i, bits, 1e-20).unwrap().0.is_zero());
        let (v, _) = rs(1, 1, &[1], 10).eval_at(&i, bits, 1e-20).unwrap();
        assert!((v.re.to_f64() - 0.0018674427317079893).abs() < 1e-15);
        let (v, _) = rs(2, 1, &[1], 10).eval_at(&i, bits, 1e-10).unwrap();
        assert!((v.re.to_f64() - 0.04321391826377226).abs() < 1e-15);
        // a long series with big coefficients cannot meet a tight tolerance
        let big: Vec<i64> = (1..20).map(|n| n * 1000).collect();
        assert!(matches!(rs(36, 1, &big, 20).eval_at(&i, bits, 1e-20), Err(SeriesError::TailTooLarge { .. })));
    }

    #[test]
    fn cyclotomic_shift_and_twist() {
        // f = q^{1/4} at width 4 over level 4: τ ↦ τ + 1 multiplies by ζ_4
        let s = FracQSeries::monomial(4, 4, 1, 8);
        let t = s.shift_tau(1).unwrap();
        assert_eq!(t.coeff(1), CyclotomicNumber::zeta_pow(4, 1));
        let tw = t.galois_twist(3).unwrap();
        assert_eq!(tw.coeff(1), CyclotomicNumber::zeta_pow(4, 3));
        let s4 = s.shift_tau(4).unwrap();
        assert_eq!(s4, s);
    }

    #[test]
    fn weierstrass_laurent_product() {
        let z = LaurentZSeries { min_exp: -2, coeffs: vec![rat(1, 1), rat(0, 1), rat(3, 1)] };
        let sq = z.mul(&z);
        assert_eq!(sq.min_exp, -4);
        assert_eq!(sq.coeffs, vec![rat(1, 1), rat(0, 1), rat(6, 1)]);
        let d = z.derivative();
        assert_eq!(d.min_exp, -3);
        assert_eq!(d.coeffs[0], rat(-2, 1));
    }

    fn arb_series() -> impl Strategy<Value = FracQSeries> {
        (1i64..3, prop::collection::vec(prop::collection::vec(-9i64..10, 4), 1..8)).prop_map(|(val, rows)| {
            let cs: Vec<CyclotomicNumber> = rows
                .iter()
                .map(|r| CyclotomicNumber::from_coeffs(12, r.iter().map(|&x| rat(x, 1 + (x.abs() % 3))).collect()).unwrap())
                .collect();
            FracQSeries::from_coeffs(12, val, &cs, 10, 12)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn ring_laws(a in arb_series(), b in arb_series(), c in arb_series()) {
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        }

        #[test]
        fn cyclotomic_scale_and_inverse(a in arb_series(), k in 1i64..12) {
            let c = &CyclotomicNumber::zeta_pow(12, k) + &CyclotomicNumber::from_rat(12, rat(1, 3));
            let k_series = FracQSeries::constant(&c, 12, 20);
            prop_assert_eq!(a.scale(&c), a.mul(&k_series).unwrap());
            if a.valuation().is_some() {
                let inv = a.inverse().unwrap();
                let one = a.mul(&inv).unwrap();
                prop_assert_eq!(one.coeff(0), CyclotomicNumber::one(12));
                for n in 1..one.prec() {
                    prop_assert!(one.coeff(n).is_zero());
                }
            }
        }

        #[test]
        fn antiderivative_round_trip(a in arb_series()) {
            let f = a.antiderivative_2pii().unwrap();
            prop_assert_eq!(f.derivative_2pii(), a);
        }

        #[test]
        fn eval_is_multiplicative(a in arb_series(), b in arb_series()) {
            let bits = 128;
            let z = Complex::from_f64(0.31, 1.4, bits);
            let (va, ta) = a.eval_at(&z, bits, 1.0).unwrap();
            let (vb, tb) = b.eval_at(&z, bits, 1.0).unwrap();
            let (vab, tab) = a.mul(&b).unwrap().eval_at(&z, bits, 1.0).unwrap();
            let bound = ta * vb.abs().to_f64() + tb * va.abs().to_f64() + ta * tb + tab + 1e-25;
            prop_assert!(vab.dist(&va.mul(&vb)) <= 4.0 * bound);
        }
    }
}
