//! Arbitrary-precision real and complex numbers on top of `astro-float`.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::exactmath::Rat;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

fn with_cc<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Real number carrying its working precision in bits.
#[derive(Clone, Debug)]
pub struct Real {
    v: BigFloat,
    p: usize,
}

impl Real {
    pub fn prec(&self) -> usize {
        self.p
    }

    pub fn zero(p: usize) -> Self {
        Real { v: BigFloat::from_i64(0, p), p }
    }

    pub fn from_i64(x: i64, p: usize) -> Self {
        Real { v: BigFloat::from_i64(x, p), p }
    }

    pub fn from_f64(x: f64, p: usize) -> Self {
        Real { v: BigFloat::from_f64(x, p), p }
    }

    pub fn from_bigint(x: &BigInt, p: usize) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let (sign, words) = x.to_u64_digits();
        let s = if sign == num_bigint::Sign::Minus { Sign::Neg } else { Sign::Pos };
        let exact = BigFloat::from_words(&words, s, (64 * words.len()) as i32);
        let mut v = exact;
        let _ = v.set_precision(p, RM);
        Real { v, p }
    }

    pub fn from_rat(x: &Rat, p: usize) -> Self {
        let n = Self::from_bigint(x.numer(), p + 64);
        let d = Self::from_bigint(x.denom(), p + 64);
        Real { v: n.v.div(&d.v, p, RM), p }
    }

    pub fn pi(p: usize) -> Self {
        Real { v: with_cc(|cc| cc.pi(p, RM)), p }
    }

    fn wrap(&self, v: BigFloat) -> Self {
        Real { v, p: self.p }
    }

    fn pp(&self, o: &Real) -> usize {
        self.p.max(o.p)
    }

    pub fn add(&self, o: &Real) -> Real {
        let p = self.pp(o);
        Real { v: self.v.add(&o.v, p, RM), p }
    }

    pub fn sub(&self, o: &Real) -> Real {
        let p = self.pp(o);
        Real { v: self.v.sub(&o.v, p, RM), p }
    }

    pub fn mul(&self, o: &Real) -> Real {
        let p = self.pp(o);
        Real { v: self.v.mul(&o.v, p, RM), p }
    }

    pub fn div(&self, o: &Real) -> Real {
        let p = self.pp(o);
        Real { v: self.v.div(&o.v, p, RM), p }
    }

    pub fn mul_i64(&self, k: i64) -> Real {
        self.mul(&Real::from_i64(k, self.p))
    }

    pub fn div_i64(&self, k: i64) -> Real {
        self.div(&Real::from_i64(k, self.p))
    }

    pub fn neg(&self) -> Real {
        self.wrap(self.v.neg())
    }

    pub fn abs(&self) -> Real {
        self.wrap(self.v.abs())
    }

    pub fn sqrt(&self) -> Real {
        self.wrap(self.v.sqrt(self.p, RM))
    }

    pub fn cbrt(&self) -> Real {
        self.wrap(self.v.cbrt(self.p, RM))
    }

    pub fn exp(&self) -> Real {
        self.wrap(with_cc(|cc| self.v.exp(self.p, RM, cc)))
    }

    pub fn ln(&self) -> Real {
        self.wrap(with_cc(|cc| self.v.ln(self.p, RM, cc)))
    }

    pub fn sin(&self) -> Real {
        self.wrap(with_cc(|cc| self.v.sin(self.p, RM, cc)))
    }

    pub fn cos(&self) -> Real {
        self.wrap(with_cc(|cc| self.v.cos(self.p, RM, cc)))
    }

    pub fn atan(&self) -> Real {
        self.wrap(with_cc(|cc| self.v.atan(self.p, RM, cc)))
    }

    /// Angle of the vector (x, y) = (self, y) in (−π, π].
    pub fn atan2(y: &Real, x: &Real) -> Real {
        let p = y.pp(x);
        if x.is_zero() {
            let half = Real::pi(p).div_i64(2);
            return if y.is_negative() { half.neg() } else { half };
        }
        let a = y.div(x).atan();
        if !x.is_negative() {
            a
        } else if y.is_negative() {
            a.sub(&Real::pi(p))
        } else {
            a.add(&Real::pi(p))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.v.is_negative() && !self.v.is_zero()
    }

    pub fn cmp(&self, o: &Real) -> Ordering {
        match self.v.cmp(&o.v) {
            Some(x) if x < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    pub fn max(&self, o: &Real) -> Real {
        if self.cmp(o) == Ordering::Less {
            o.clone()
        } else {
            self.clone()
        }
    }

    /// Binary exponent e with 2^{e−1} ≤ |x| < 2^e; very negative for zero.
    pub fn exponent(&self) -> i64 {
        if self.v.is_zero() {
            return i64::MIN / 4;
        }
        self.v.exponent().map(|e| e as i64).unwrap_or(i64::MAX / 4)
    }

    pub fn to_f64(&self) -> f64 {
        let Some((words, _, sign, e, _)) = self.v.as_raw_parts() else {
            return f64::NAN;
        };
        if self.v.is_zero() || words.is_empty() {
            return 0.0;
        }
        let top = words[words.len() - 1] as f64;
        let sub = if words.len() > 1 { words[words.len() - 2] as f64 / 18446744073709551616.0 } else { 0.0 };
        let m = top + sub;
        let mut r = m * 2f64.powi(e.clamp(-1100, 1100) - 64);
        if sign == Sign::Neg {
            r = -r;
        }
        r
    }

    /// Nearest integer.
    pub fn round(&self) -> BigInt {
        let half = Real::from_f64(0.5, self.p);
        let f = self.add(&half).v.floor();
        let Some((words, _, sign, e, _)) = f.as_raw_parts() else {
            return BigInt::zero();
        };
        if f.is_zero() {
            return BigInt::zero();
        }
        let mut m = BigUint::zero();
        for w in words.iter().rev() {
            m = (m << 64u32) + BigUint::from(*w);
        }
        let shift = e as i64 - 64 * words.len() as i64;
        let mag = if shift >= 0 { m << (shift as u64) } else { m >> ((-shift) as u64) };
        let b = BigInt::from(mag);
        if sign == Sign::Neg {
            -b
        } else {
            b
        }
    }

    /// The exact binary rational this value holds.
    pub fn to_rat(&self) -> Rat {
        let Some((words, _, sign, e, _)) = self.v.as_raw_parts() else {
            return Rat::zero();
        };
        if self.v.is_zero() {
            return Rat::zero();
        }
        let mut m = BigUint::zero();
        for w in words.iter().rev() {
            m = (m << 64u32) + BigUint::from(*w);
        }
        let shift = e as i64 - 64 * words.len() as i64;
        let mag = if shift >= 0 {
            Rat::from_integer(BigInt::from(m << (shift as u64)))
        } else {
            Rat::new(BigInt::from(m), BigInt::from(1) << ((-shift) as u64))
        };
        if sign == Sign::Neg {
            -mag
        } else {
            mag
        }
    }

    pub fn with_prec(&self, p: usize) -> Real {
        let mut v = self.v.clone();
        let _ = v.set_precision(p, RM);
        Real { v, p }
    }

    pub fn inner(&self) -> &BigFloat {
        &self.v
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Complex number at a fixed working precision.
#[derive(Clone, Debug)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Self {
        Complex { re, im }
    }

    pub fn zero(p: usize) -> Self {
        Complex { re: Real::zero(p), im: Real::zero(p) }
    }

    pub fn one(p: usize) -> Self {
        Self::from_i64(1, p)
    }

    pub fn i(p: usize) -> Self {
        Complex { re: Real::zero(p), im: Real::from_i64(1, p) }
    }

    pub fn from_i64(x: i64, p: usize) -> Self {
        Complex { re: Real::from_i64(x, p), im: Real::zero(p) }
    }

    pub fn from_f64(re: f64, im: f64, p: usize) -> Self {
        Complex { re: Real::from_f64(re, p), im: Real::from_f64(im, p) }
    }

    pub fn from_real(re: Real) -> Self {
        let p = re.prec();
        Complex { re, im: Real::zero(p) }
    }

    pub fn from_rat(x: &Rat, p: usize) -> Self {
        Self::from_real(Real::from_rat(x, p))
    }

    pub fn prec(&self) -> usize {
        self.re.prec().max(self.im.prec())
    }

    pub fn add(&self, o: &Complex) -> Complex {
        Complex { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    pub fn sub(&self, o: &Complex) -> Complex {
        Complex { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    pub fn mul(&self, o: &Complex) -> Complex {
        let re = self.re.mul(&o.re).sub(&self.im.mul(&o.im));
        let im = self.re.mul(&o.im).add(&self.im.mul(&o.re));
        Complex { re, im }
    }

    pub fn scale(&self, r: &Real) -> Complex {
        Complex { re: self.re.mul(r), im: self.im.mul(r) }
    }

    pub fn mul_i64(&self, k: i64) -> Complex {
        Complex { re: self.re.mul_i64(k), im: self.im.mul_i64(k) }
    }

    pub fn div_i64(&self, k: i64) -> Complex {
        Complex { re: self.re.div_i64(k), im: self.im.div_i64(k) }
    }

    pub fn mul_rat(&self, q: &Rat) -> Complex {
        self.scale(&Real::from_rat(q, self.prec()))
    }

    pub fn norm_sqr(&self) -> Real {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }

    pub fn abs(&self) -> Real {
        self.norm_sqr().sqrt()
    }

    pub fn conj(&self) -> Complex {
        Complex { re: self.re.clone(), im: self.im.neg() }
    }

    pub fn neg(&self) -> Complex {
        Complex { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn inv(&self) -> Complex {
        let n = self.norm_sqr();
        Complex { re: self.re.div(&n), im: self.im.neg().div(&n) }
    }

    pub fn div(&self, o: &Complex) -> Complex {
        self.mul(&o.inv())
    }

    pub fn mul_i(&self) -> Complex {
        Complex { re: self.im.neg(), im: self.re.clone() }
    }

    pub fn exp(&self) -> Complex {
        let r = self.re.exp();
        Complex { re: r.mul(&self.im.cos()), im: r.mul(&self.im.sin()) }
    }

    /// e^{2πi·self}.
    pub fn exp_2pi_i(&self) -> Complex {
        let two_pi = Real::pi(self.prec()).mul_i64(2);
        self.scale(&two_pi).mul_i().exp()
    }

    pub fn powu(&self, mut e: u64) -> Complex {
        let mut base = self.clone();
        let mut acc = Complex::one(self.prec());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn sqr(&self) -> Complex {
        self.mul(self)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// |self − o| as f64.
    pub fn dist(&self, o: &Complex) -> f64 {
        self.sub(o).abs().to_f64()
    }

    pub fn with_prec(&self, p: usize) -> Complex {
        Complex { re: self.re.with_prec(p), im: self.im.with_prec(p) }
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.to_f64();
        if b < 0.0 {
            write!(f, "{} - {}i", a, -b)
        } else {
            write!(f, "{} + {}i", a, b)
        }
    }
}

/// Bits of relative agreement between two reals; large when they agree.
pub fn agree_bits(a: &Real, b: &Real) -> i64 {
    let d = a.sub(b);
    if d.is_zero() {
        return i64::MAX / 4;
    }
    a.abs().max(&b.abs()).exponent() - d.exponent()
}

pub fn bigint_to_f64(x: &BigInt) -> f64 {
    Real::from_bigint(x, 64).to_f64()
}
