//! Elliptic curves over ℚ: invariants, point counts, AGM periods, the Weierstrass ℘ function
//! (numeric and as a Laurent series), division polynomials, the group law over any field
//! that supports it, rank-0 Mordell–Weil groups and recognition of torsion points over ℚ(ζ_N).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactmath::lattice::lll;
use crate::exactmath::modp::{is_prime, legendre, rat_mod};
use crate::exactmath::rational::{best_rational, lcm_denoms, rat_int};
use crate::exactmath::{CyclotomicNumber, Rat};
use crate::mpc::{Complex, Real};
use crate::qexp::{zeta_powers, FracQSeries, LaurentZSeries, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("singular curve (discriminant 0)")]
    Singular,
    #[error("bad reduction at {0}")]
    BadReduction(u64),
    #[error("point is not on the curve")]
    NotOnCurve,
    #[error("rank {0} given; only rank-0 curves are supported")]
    RankNotZero(u32),
    #[error("{0} is not numerically a torsion point of bounded order")]
    NotTorsion(String),
    #[error("torsion point recognition failed: {0}")]
    Recognition(String),
}

/// y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6 over ℚ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EllipticCurveQ {
    a: [Rat; 5],
}

impl fmt::Display for EllipticCurveQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4, a6] = &self.a;
        write!(f, "[{a1}, {a2}, {a3}, {a4}, {a6}]")
    }
}

impl EllipticCurveQ {
    pub fn new(a: [Rat; 5]) -> Result<Self, EllipticError> {
        let e = EllipticCurveQ { a };
        if e.discriminant().is_zero() {
            return Err(EllipticError::Singular);
        }
        Ok(e)
    }

    pub fn from_ints(a: [i64; 5]) -> Result<Self, EllipticError> {
        Self::new(a.map(rat_int))
    }

    pub fn ainvs(&self) -> &[Rat; 5] {
        &self.a
    }

    pub fn a1(&self) -> &Rat {
        &self.a[0]
    }
    pub fn a2(&self) -> &Rat {
        &self.a[1]
    }
    pub fn a3(&self) -> &Rat {
        &self.a[2]
    }
    pub fn a4(&self) -> &Rat {
        &self.a[3]
    }
    pub fn a6(&self) -> &Rat {
        &self.a[4]
    }

    pub fn b2(&self) -> Rat {
        self.a1() * self.a1() + rat_int(4) * self.a2()
    }
    pub fn b4(&self) -> Rat {
        rat_int(2) * self.a4() + self.a1() * self.a3()
    }
    pub fn b6(&self) -> Rat {
        self.a3() * self.a3() + rat_int(4) * self.a6()
    }
    pub fn b8(&self) -> Rat {
        let [a1, a2, a3, a4, a6] = &self.a;
        a1 * a1 * a6 + rat_int(4) * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    }
    pub fn c4(&self) -> Rat {
        let b2 = self.b2();
        &b2 * &b2 - rat_int(24) * self.b4()
    }
    pub fn c6(&self) -> Rat {
        let b2 = self.b2();
        -(&b2 * &b2 * &b2) + rat_int(36) * &b2 * self.b4() - rat_int(216) * self.b6()
    }
    pub fn discriminant(&self) -> Rat {
        let (b2, b4, b6, b8) = (self.b2(), self.b4(), self.b6(), self.b8());
        -(&b2 * &b2 * &b8) - rat_int(8) * &b4 * &b4 * &b4 - rat_int(27) * &b6 * &b6 + rat_int(9) * &b2 * &b4 * &b6
    }
    pub fn j_invariant(&self) -> Rat {
        let c4 = self.c4();
        &c4 * &c4 * &c4 / self.discriminant()
    }

    /// An integral model (u²x, u³y) with u the LCM of the coefficient denominators.
    pub fn integral_model(&self) -> (BigInt, EllipticCurveQ) {
        let u = lcm_denoms(self.a.iter());
        let ur = Rat::from_integer(u.clone());
        let pows = [1u32, 2, 3, 4, 6];
        let mut a = self.a.clone();
        for (x, k) in a.iter_mut().zip(pows) {
            *x = &*x * num_traits::pow(ur.clone(), k as usize);
        }
        (u, EllipticCurveQ { a })
    }

    /// Left side minus right side of the Weierstrass equation.
    pub fn equation<K: FieldElem>(&self, x: &K, y: &K) -> K {
        let c = |r: &Rat| x.from_rat_like(r);
        let lhs = y.fmul(y).fadd(&c(self.a1()).fmul(x).fmul(y)).fadd(&c(self.a3()).fmul(y));
        let x2 = x.fmul(x);
        let rhs = x2.fmul(x).fadd(&c(self.a2()).fmul(&x2)).fadd(&c(self.a4()).fmul(x)).fadd(&c(self.a6()));
        lhs.fsub(&rhs)
    }

    pub fn contains<K: FieldElem>(&self, p: &Point<K>) -> bool {
        match p {
            Point::Infinity => true,
            Point::Affine(x, y) => self.equation(x, y).f_is_zero(),
        }
    }

    pub fn neg<K: FieldElem>(&self, p: &Point<K>) -> Point<K> {
        match p {
            Point::Infinity => Point::Infinity,
            Point::Affine(x, y) => {
                let t = x.from_rat_like(self.a1()).fmul(x).fadd(&x.from_rat_like(self.a3()));
                Point::Affine(x.clone(), y.fneg().fsub(&t))
            }
        }
    }

    /// #E(𝔽_p) on the integral model; requires good reduction there.
    pub fn count_points(&self, p: u64) -> Result<u64, EllipticError> {
        let (_, e) = self.integral_model();
        let disc = e.discriminant();
        if rat_mod(&disc, p).map(|d| d == 0).unwrap_or(true) {
            return Err(EllipticError::BadReduction(p));
        }
        let a: Vec<u64> = e.a.iter().map(|x| rat_mod(x, p).expect("integral")).collect();
        let (a1, a2, a3, a4, a6) = (a[0], a[1], a[2], a[3], a[4]);
        let mut count = 1u64;
        if p == 2 {
            for x in 0..2u64 {
                for y in 0..2u64 {
                    let l = (y * y + a1 * x * y + a3 * y) % 2;
                    let r = (x * x * x + a2 * x * x + a4 * x + a6) % 2;
                    if l == r {
                        count += 1;
                    }
                }
            }
            return Ok(count);
        }
        // (2y + a1x + a3)² = 4x³ + b2x² + 2b4x + b6
        let m = |u: u64, v: u64| ((u as u128 * v as u128) % p as u128) as u64;
        let b2 = (m(a1, a1) + m(4, a2)) % p;
        let b4 = (m(2, a4) + m(a1, a3)) % p;
        let b6 = (m(a3, a3) + m(4, a6)) % p;
        for x in 0..p {
            let x2 = m(x, x);
            let r = (m(4, m(x2, x)) + m(b2, x2) + m(m(2, b4), x) + b6) % p;
            count += (1 + legendre(r as i64, p)) as u64;
        }
        Ok(count)
    }

    /// a_p = p + 1 − #E(𝔽_p).
    pub fn ap(&self, p: u64) -> Result<i64, EllipticError> {
        Ok(p as i64 + 1 - self.count_points(p)? as i64)
    }

    /// True when p does not divide the discriminant of the integral model.
    pub fn good_at(&self, p: u64) -> bool {
        let (_, e) = self.integral_model();
        rat_mod(&e.discriminant(), p).map(|d| d != 0).unwrap_or(false)
    }
}

/// Operations shared by the coefficient domains that points may live in.
pub trait FieldElem: Clone + fmt::Debug {
    fn from_rat_like(&self, r: &Rat) -> Self;
    fn fadd(&self, o: &Self) -> Self;
    fn fsub(&self, o: &Self) -> Self;
    fn fmul(&self, o: &Self) -> Self;
    fn fneg(&self) -> Self;
    fn finv(&self) -> Option<Self>;
    fn f_is_zero(&self) -> bool;
}

impl FieldElem for Rat {
    fn from_rat_like(&self, r: &Rat) -> Self {
        r.clone()
    }
    fn fadd(&self, o: &Self) -> Self {
        self + o
    }
    fn fsub(&self, o: &Self) -> Self {
        self - o
    }
    fn fmul(&self, o: &Self) -> Self {
        self * o
    }
    fn fneg(&self) -> Self {
        -self
    }
    fn finv(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.recip())
    }
    fn f_is_zero(&self) -> bool {
        self.is_zero()
    }
}

impl FieldElem for CyclotomicNumber {
    fn from_rat_like(&self, r: &Rat) -> Self {
        CyclotomicNumber::from_rat(self.level(), r.clone())
    }
    fn fadd(&self, o: &Self) -> Self {
        self + o
    }
    fn fsub(&self, o: &Self) -> Self {
        self - o
    }
    fn fmul(&self, o: &Self) -> Self {
        self * o
    }
    fn fneg(&self) -> Self {
        -self
    }
    fn finv(&self) -> Option<Self> {
        self.inverse().ok()
    }
    fn f_is_zero(&self) -> bool {
        self.is_zero()
    }
}

/// Truncated Laurent series in q^{1/w}; "zero" means zero to the known precision.
impl FieldElem for FracQSeries {
    fn from_rat_like(&self, r: &Rat) -> Self {
        let c = CyclotomicNumber::from_rat(self.level(), r.clone());
        FracQSeries::constant(&c, self.width(), self.prec() - self.start().min(0))
    }
    fn fadd(&self, o: &Self) -> Self {
        self.add(o).expect("compatible series")
    }
    fn fsub(&self, o: &Self) -> Self {
        self.sub(o).expect("compatible series")
    }
    fn fmul(&self, o: &Self) -> Self {
        self.mul(o).expect("compatible series")
    }
    fn fneg(&self) -> Self {
        self.neg()
    }
    fn finv(&self) -> Option<Self> {
        self.inverse().ok()
    }
    fn f_is_zero(&self) -> bool {
        self.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Point<K> {
    Infinity,
    Affine(K, K),
}

impl<K> Point<K> {
    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

impl Point<Rat> {
    pub fn to_cyclotomic(&self, n: u32) -> Point<CyclotomicNumber> {
        match self {
            Point::Infinity => Point::Infinity,
            Point::Affine(x, y) => Point::Affine(CyclotomicNumber::from_rat(n, x.clone()), CyclotomicNumber::from_rat(n, y.clone())),
        }
    }
}

/// Chord–tangent addition.
pub fn add_points<K: FieldElem>(e: &EllipticCurveQ, p: &Point<K>, q: &Point<K>) -> Result<Point<K>, EllipticError> {
    if !e.contains(p) || !e.contains(q) {
        return Err(EllipticError::NotOnCurve);
    }
    Ok(add_unchecked(e, p, q))
}

fn add_unchecked<K: FieldElem>(e: &EllipticCurveQ, p: &Point<K>, q: &Point<K>) -> Point<K> {
    let (x1, y1, x2, y2) = match (p, q) {
        (Point::Infinity, _) => return q.clone(),
        (_, Point::Infinity) => return p.clone(),
        (Point::Affine(x1, y1), Point::Affine(x2, y2)) => (x1, y1, x2, y2),
    };
    let c = |r: &Rat| x1.from_rat_like(r);
    let (a1, a2, a3, a4, a6) = (c(e.a1()), c(e.a2()), c(e.a3()), c(e.a4()), c(e.a6()));
    let (lambda, nu) = if x1.fsub(x2).f_is_zero() {
        let s = y1.fadd(y2).fadd(&a1.fmul(x2)).fadd(&a3);
        if s.f_is_zero() {
            return Point::Infinity;
        }
        let den = y1.fmul(&c(&rat_int(2))).fadd(&a1.fmul(x1)).fadd(&a3);
        let inv = den.finv().expect("nonzero tangent denominator");
        let x1sq = x1.fmul(x1);
        let num_l = x1sq
            .fmul(&c(&rat_int(3)))
            .fadd(&a2.fmul(x1).fmul(&c(&rat_int(2))))
            .fadd(&a4)
            .fsub(&a1.fmul(y1));
        let num_n = x1sq.fmul(x1).fneg().fadd(&a4.fmul(x1)).fadd(&a6.fmul(&c(&rat_int(2)))).fsub(&a3.fmul(y1));
        (num_l.fmul(&inv), num_n.fmul(&inv))
    } else {
        let inv = x2.fsub(x1).finv().expect("distinct x");
        (y2.fsub(y1).fmul(&inv), y1.fmul(x2).fsub(&y2.fmul(x1)).fmul(&inv))
    };
    let x3 = lambda.fmul(&lambda).fadd(&a1.fmul(&lambda)).fsub(&a2).fsub(x1).fsub(x2);
    let y3 = lambda.fadd(&a1).fmul(&x3).fneg().fsub(&nu).fsub(&a3);
    Point::Affine(x3, y3)
}

/// n·P by double-and-add (n may be negative).
pub fn mul_point<K: FieldElem>(e: &EllipticCurveQ, p: &Point<K>, n: i64) -> Point<K> {
    let mut base = if n < 0 { e.neg(p) } else { p.clone() };
    let mut k = n.unsigned_abs();
    let mut acc = Point::Infinity;
    while k > 0 {
        if k & 1 == 1 {
            acc = add_unchecked(e, &acc, &base);
        }
        k >>= 1;
        if k > 0 {
            base = add_unchecked(e, &base, &base);
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum LatticeShape {
    Rectangular,
    Triangular,
}

/// ℤω1 + ℤω2 with ω1 > 0 real and either Re ω2 = 0 or Re ω2 = ω1/2.
#[derive(Clone, Debug)]
pub struct PeriodLattice {
    pub omega1: Complex,
    pub omega2: Complex,
    pub shape: LatticeShape,
    pub bits: usize,
}

impl PeriodLattice {
    /// Classifies a basis (ω1 real positive, Im ω2 > 0) by shape.
    pub fn from_basis(omega1: Complex, omega2: Complex, bits: usize) -> Option<Self> {
        let w1 = omega1.re.to_f64();
        let r2 = omega2.re.to_f64();
        let tol = 1e-9 * w1.abs().max(1.0);
        let shape = if r2.abs() < tol {
            LatticeShape::Rectangular
        } else if (r2 - w1 / 2.0).abs() < tol {
            LatticeShape::Triangular
        } else {
            return None;
        };
        Some(PeriodLattice { omega1, omega2, shape, bits })
    }

    pub fn tau(&self) -> Complex {
        self.omega2.div(&self.omega1)
    }

    /// Area of a fundamental parallelogram.
    pub fn covolume(&self) -> Real {
        self.omega1.re.mul(&self.omega2.im).abs()
    }

    /// Real coordinates (s, t) with z = s·ω1 + t·ω2.
    pub fn coords(&self, z: &Complex) -> (Real, Real) {
        let t = z.im.div(&self.omega2.im);
        let s = z.re.sub(&t.mul(&self.omega2.re)).div(&self.omega1.re);
        (s, t)
    }

    pub fn point(&self, a: &Rat, b: &Rat) -> Complex {
        self.omega1.mul_rat(a).add(&self.omega2.mul_rat(b))
    }

    pub fn scaled(&self, c: &Rat) -> PeriodLattice {
        let om1 = self.omega1.mul_rat(c);
        let om2 = self.omega2.mul_rat(c);
        PeriodLattice::from_basis(om1, om2, self.bits).expect("scaling keeps the shape")
    }

    /// (℘(z), ℘′(z)) for this lattice.
    pub fn wp(&self, z: &Complex) -> (Complex, Complex) {
        wp_numeric(&self.omega1, &self.omega2, z)
    }

    /// (g2, g3) of the lattice through E4, E6.
    pub fn invariants(&self) -> (Complex, Complex) {
        let (w1, w2) = reduce_basis(&self.omega1, &self.omega2);
        let bits = w1.prec();
        let tau = w2.div(&w1);
        let q = tau.exp_2pi_i();
        let (mut e4, mut e6) = (Complex::zero(bits), Complex::zero(bits));
        let mut qn = Complex::one(bits);
        let eps = -(bits as i64) - 8;
        for n in 1i64.. {
            qn = qn.mul(&q);
            if qn.abs().exponent() < eps {
                break;
            }
            let (s3, s5) = divisor_sums(n);
            e4 = e4.add(&qn.scale(&Real::from_bigint(&s3, bits)));
            e6 = e6.add(&qn.scale(&Real::from_bigint(&s5, bits)));
        }
        let e4 = Complex::one(bits).add(&e4.mul_i64(240));
        let e6 = Complex::one(bits).sub(&e6.mul_i64(504));
        let two_pi_over = Complex::from_real(Real::pi(bits).mul_i64(2)).div(&w1);
        let t2 = two_pi_over.sqr();
        let t4 = t2.sqr();
        let t6 = t4.mul(&t2);
        (t4.mul(&e4).div_i64(12), t6.mul(&e6).div_i64(216))
    }
}

fn divisor_sums(n: i64) -> (BigInt, BigInt) {
    let (mut s3, mut s5) = (BigInt::zero(), BigInt::zero());
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            for e in if d * d == n { vec![d] } else { vec![d, n / d] } {
                let b = BigInt::from(e);
                s3 += b.pow(3);
                s5 += b.pow(5);
            }
        }
        d += 1;
    }
    (s3, s5)
}

/// Basis with τ = ω2/ω1 in the standard fundamental domain.
fn reduce_basis(w1: &Complex, w2: &Complex) -> (Complex, Complex) {
    let (mut a, mut b) = (w1.clone(), w2.clone());
    for _ in 0..200 {
        let tau = b.div(&a);
        let n = tau.re.round();
        if !n.is_zero() {
            b = b.sub(&a.scale(&Real::from_bigint(&n, a.prec())));
        }
        if b.norm_sqr().cmp(&a.norm_sqr()) == std::cmp::Ordering::Less {
            let na = b.neg();
            b = a;
            a = na;
        } else {
            break;
        }
    }
    (a, b)
}

/// ℘ and ℘′ for the lattice ℤw1 + ℤw2 via q-products.
pub fn wp_numeric(w1: &Complex, w2: &Complex, z: &Complex) -> (Complex, Complex) {
    let bits = z.prec().max(w1.prec());
    let (w1, w2) = reduce_basis(w1, w2);
    let tau = w2.div(&w1);
    let mut v = z.div(&w1);
    let k = v.im.div(&tau.im).round();
    if !k.is_zero() {
        v = v.sub(&tau.scale(&Real::from_bigint(&k, bits)));
    }
    let k = v.re.round();
    if !k.is_zero() {
        v = v.sub(&Complex::from_real(Real::from_bigint(&k, bits)));
    }
    let q = tau.exp_2pi_i();
    let u = v.exp_2pi_i();
    let ui = u.inv();
    let one = Complex::one(bits);
    let a2 = |w: &Complex| w.div(&one.sub(w).sqr());
    let a3 = |w: &Complex| w.mul(&one.add(w)).div(&one.sub(w).powu(3));
    let mut s = Complex::from_rat(&Rat::new(BigInt::one(), BigInt::from(12)), bits).add(&a2(&u));
    let mut sp = a3(&u);
    let umax = u.abs().max(&ui.abs()).exponent();
    let eps = -(bits as i64) - 16;
    let mut qn = one.clone();
    loop {
        qn = qn.mul(&q);
        if qn.abs().exponent() + umax < eps {
            break;
        }
        let x = qn.mul(&u);
        let y = qn.mul(&ui);
        s = s.add(&a2(&x)).add(&a2(&y)).sub(&a2(&qn).mul_i64(2));
        sp = sp.add(&a3(&x)).sub(&a3(&y));
    }
    let c = Complex::new(Real::zero(bits), Real::pi(bits).mul_i64(2)).div(&w1);
    let c2 = c.sqr();
    (c2.mul(&s), c2.mul(&c).mul(&sp))
}

fn agm(a: &Real, b: &Real) -> Real {
    let (mut a, mut b) = (a.clone(), b.clone());
    let bits = a.prec() as i64;
    for _ in 0..10_000 {
        let na = a.add(&b).div_i64(2);
        let nb = a.mul(&b).sqrt();
        a = na;
        b = nb;
        if crate::mpc::agree_bits(&a, &b) > bits - 4 {
            break;
        }
    }
    a
}

/// Real roots of 4x³ + b2x² + 2b4x + b6, decreasing.
fn two_torsion_roots(e: &EllipticCurveQ, bits: usize) -> Vec<Real> {
    let f64r = |r: &Rat| crate::exactmath::rational::rat_to_f64(r);
    let (b2, b4, b6) = (e.b2(), e.b4(), e.b6());
    let (a, b, c) = (f64r(&b2) / 4.0, f64r(&b4) / 2.0, f64r(&b6) / 4.0);
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc_pos = e.discriminant().is_positive();
    let mut guesses: Vec<f64> = if disc_pos {
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let th = arg.acos() / 3.0;
        (0..3).map(|k| 2.0 * r * (th - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - a / 3.0).collect()
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() - a / 3.0]
    };
    guesses.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let w = bits + 32;
    let (rb2, rb4, rb6) = (Real::from_rat(&b2, w), Real::from_rat(&b4, w), Real::from_rat(&b6, w));
    guesses
        .into_iter()
        .map(|g| {
            let mut x = Real::from_f64(g, w);
            for _ in 0..200 {
                let x2 = x.mul(&x);
                let f = x2.mul(&x).mul_i64(4).add(&rb2.mul(&x2)).add(&rb4.mul(&x).mul_i64(2)).add(&rb6);
                let df = x2.mul_i64(12).add(&rb2.mul(&x).mul_i64(2)).add(&rb4.mul_i64(2));
                if df.is_zero() {
                    break;
                }
                let step = f.div(&df);
                x = x.sub(&step);
                if step.is_zero() || x.exponent() - step.exponent() > w as i64 {
                    break;
                }
            }
            x
        })
        .collect()
}

/// Period lattice of the invariant differential dx/(2y + a1x + a3), by the AGM.
pub fn curve_periods(e: &EllipticCurveQ, bits: usize) -> PeriodLattice {
    let w = bits + 32;
    let pi = Real::pi(w);
    let roots = two_torsion_roots(e, bits);
    let (om1, om2) = if e.discriminant().is_positive() {
        let (e1, e2, e3) = (&roots[0], &roots[1], &roots[2]);
        let s13 = e1.sub(e3).sqrt();
        let om1 = pi.div(&agm(&s13, &e1.sub(e2).sqrt()));
        let om2 = pi.div(&agm(&s13, &e2.sub(e3).sqrt()));
        (Complex::from_real(om1), Complex::new(Real::zero(w), om2))
    } else {
        let e1 = &roots[0];
        let b2 = Real::from_rat(&e.b2(), w);
        let b4 = Real::from_rat(&e.b4(), w);
        let a = e1.mul_i64(3).add(&b2.div_i64(4));
        let b = e1.mul(e1).mul_i64(3).add(&b2.mul(e1).div_i64(2)).add(&b4.div_i64(2)).sqrt();
        let two_sb = b.sqrt().mul_i64(2);
        let om1 = pi.mul_i64(2).div(&agm(&two_sb, &b.mul_i64(2).add(&a).sqrt()));
        let im2 = pi.div(&agm(&two_sb, &b.mul_i64(2).sub(&a).sqrt()));
        (Complex::from_real(om1.clone()), Complex::new(om1.div_i64(2), im2))
    };
    PeriodLattice::from_basis(om1.with_prec(bits), om2.with_prec(bits), bits).expect("AGM basis has a standard shape")
}

impl EllipticCurveQ {
    /// Numeric (x, y) on this model for the complex parameter z of the given lattice.
    pub fn point_from_z(&self, lat: &PeriodLattice, z: &Complex) -> (Complex, Complex) {
        let bits = z.prec();
        let (p, dp) = lat.wp(z);
        let x = p.sub(&Complex::from_rat(&(self.b2() / rat_int(12)), bits));
        let y = dp
            .sub(&x.mul_rat(self.a1()))
            .sub(&Complex::from_rat(self.a3(), bits))
            .div_i64(2);
        (x, y)
    }
}

/// Laurent expansions of ℘ and ℘′ at z = 0 from (g2, g3); `terms` coefficients of ℘
/// starting at z⁻².
pub fn wp_series<T: Scalar>(g2: &T, g3: &T, terms: usize) -> (LaurentZSeries<T>, LaurentZSeries<T>) {
    let zero = g2.zero_like();
    let one = g2.from_rat_like(&Rat::one());
    let mut coeffs = vec![zero.clone(); terms.max(1)];
    coeffs[0] = one;
    let kmax = terms.div_ceil(2);
    let mut c: Vec<T> = vec![zero.clone(); kmax.max(4) + 1];
    for k in 2..=kmax {
        c[k] = match k {
            2 => g2.mul_rat(&Rat::new(BigInt::one(), BigInt::from(20))),
            3 => g3.mul_rat(&Rat::new(BigInt::one(), BigInt::from(28))),
            _ => {
                let mut s = zero.clone();
                for m in 2..=k - 2 {
                    s = s.add(&c[m].mul(&c[k - m]));
                }
                s.mul_rat(&Rat::new(BigInt::from(3), BigInt::from(((2 * k + 1) * (k - 3)) as i64)))
            }
        };
        // z^{2k−2} sits at index 2k
        if 2 * k < terms {
            coeffs[2 * k] = c[k].clone();
        }
    }
    let wp = LaurentZSeries { min_exp: -2, coeffs };
    let dwp = wp.derivative();
    (wp, dwp)
}

type Poly = Vec<Rat>;

fn pmul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn psub(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n).map(|i| a.get(i).cloned().unwrap_or_default() - b.get(i).cloned().unwrap_or_default()).collect();
    while out.last().is_some_and(|x| x.is_zero()) {
        out.pop();
    }
    out
}

/// Horner evaluation of a rational polynomial at a field element.
pub fn poly_eval<K: FieldElem>(p: &[Rat], x: &K) -> K {
    let mut acc = x.from_rat_like(&Rat::zero());
    for c in p.iter().rev() {
        acc = acc.fmul(x).fadd(&x.from_rat_like(c));
    }
    acc
}

/// Polynomial in x whose roots are the x-coordinates of the nonzero m-torsion: ψ_m for odd m,
/// ψ_m·ψ_2 for even m (so m = 2 gives 4x³ + b2x² + 2b4x + b6). Coefficients low to high.
pub fn division_poly(e: &EllipticCurveQ, m: usize) -> Vec<Rat> {
    let (b2, b4, b6, b8) = (e.b2(), e.b4(), e.b6(), e.b8());
    let f: Poly = vec![b6.clone(), rat_int(2) * &b4, b2.clone(), rat_int(4)];
    let f2 = pmul(&f, &f);
    let mut g: Vec<Poly> = vec![
        vec![],
        vec![rat_int(1)],
        vec![rat_int(1)],
        vec![b8.clone(), rat_int(3) * &b6, rat_int(3) * &b4, b2.clone(), rat_int(3)],
        vec![
            &b4 * &b8 - &b6 * &b6,
            &b2 * &b8 - &b4 * &b6,
            rat_int(10) * &b8,
            rat_int(10) * &b6,
            rat_int(5) * &b4,
            b2.clone(),
            rat_int(2),
        ],
    ];
    while g.len() <= m {
        let k = g.len();
        let n = k / 2;
        let next = if k % 2 == 1 {
            let t1 = pmul(&g[n + 2], &pmul(&g[n], &pmul(&g[n], &g[n])));
            let t2 = pmul(&g[n - 1], &pmul(&g[n + 1], &pmul(&g[n + 1], &g[n + 1])));
            if n.is_multiple_of(2) {
                psub(&pmul(&f2, &t1), &t2)
            } else {
                psub(&t1, &pmul(&f2, &t2))
            }
        } else {
            let a = pmul(&g[n + 2], &pmul(&g[n - 1], &g[n - 1]));
            let b = pmul(&g[n - 2], &pmul(&g[n + 1], &g[n + 1]));
            pmul(&g[n], &psub(&a, &b))
        };
        g.push(next);
    }
    let out = g[m].clone();
    if m.is_multiple_of(2) && m > 0 {
        pmul(&f, &out)
    } else {
        out
    }
}

fn rat_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| Rat::new(n, d))
}

/// Upper bound for #E(ℚ)_tors: gcd of #E(𝔽_p) over good primes below 200.
pub fn torsion_bound(e: &EllipticCurveQ) -> u64 {
    let mut g = 0u64;
    let mut used = 0;
    for p in 2u64..200 {
        if !is_prime(p) || !e.good_at(p) {
            continue;
        }
        g = g.gcd(&e.count_points(p).expect("good prime"));
        used += 1;
        if used >= 12 {
            break;
        }
    }
    g
}

/// E(ℚ) for a rank-0 curve: the torsion subgroup, found from the complex points (aω1 + bω2)/m
/// with m the reduction bound, each recognized exactly and checked.
pub fn mordell_weil_rank0(e: &EllipticCurveQ, rank: u32, bits: usize) -> Result<Vec<Point<Rat>>, EllipticError> {
    if rank != 0 {
        return Err(EllipticError::RankNotZero(rank));
    }
    let m = torsion_bound(e);
    let mut pts: Vec<Point<Rat>> = vec![Point::Infinity];
    if m <= 1 {
        return Ok(pts);
    }
    let lat = curve_periods(e, bits);
    let max_den = BigInt::from(10).pow(6);
    for a in 0..m as i64 {
        for b in 0..m as i64 {
            if a == 0 && b == 0 {
                continue;
            }
            let z = lat.point(&Rat::new(a.into(), (m as i64).into()), &Rat::new(b.into(), (m as i64).into()));
            let (x, _) = e.point_from_z(&lat, &z);
            let scale = x.re.abs().to_f64().max(1.0);
            if x.im.abs().to_f64() > 1e-20 * scale {
                continue;
            }
            let xr = best_rational(&x.re.to_rat(), &max_den);
            if (crate::exactmath::rational::rat_to_f64(&xr) - x.re.to_f64()).abs() > 1e-20 * scale {
                continue;
            }
            // y² + (a1x + a3)y − f(x) = 0
            let t = e.a1() * &xr + e.a3();
            let fx = &xr * &xr * &xr + e.a2() * &xr * &xr + e.a4() * &xr + e.a6();
            let disc = &t * &t + rat_int(4) * fx;
            let Some(s) = rat_sqrt(&disc) else { continue };
            for y in [(-&t + &s) / rat_int(2), (-&t - &s) / rat_int(2)] {
                let p = Point::Affine(xr.clone(), y);
                if e.contains(&p) && mul_point(e, &p, m as i64).is_infinity() && !pts.contains(&p) {
                    pts.push(p);
                }
            }
        }
    }
    Ok(pts)
}

/// Finds c ∈ ℚ(ζ_N) numerically equal to x through an integer relation among
/// (x, 1, ζ, …, ζ^{φ−1}).
pub fn recognize_cyclotomic(x: &Complex, n: u32, bits: usize) -> Option<CyclotomicNumber> {
    let f = crate::exactmath::field(n);
    let phi = f.phi;
    let w = bits + 32;
    let zeta = zeta_powers(n, phi, w);
    let shift = bits.saturating_sub(24).max(40);
    let scale = Real::from_bigint(&(BigInt::one() << shift), w);
    let emb = |c: &Complex| -> [BigInt; 2] { [c.re.mul(&scale).round(), c.im.mul(&scale).round()] };
    let mut basis = Vec::with_capacity(phi + 1);
    for k in 0..=phi {
        let mut row = vec![BigInt::zero(); phi + 3];
        row[k] = BigInt::one();
        let [re, im] = if k < phi { emb(&zeta[k]) } else { emb(x) };
        row[phi + 1] = re;
        row[phi + 2] = im;
        basis.push(row);
    }
    let reduced = lll(basis);
    for row in &reduced {
        let c = &row[phi];
        if c.is_zero() {
            continue;
        }
        let coeffs: Vec<Rat> = (0..phi).map(|k| Rat::new(-row[k].clone(), c.clone())).collect();
        let cand = CyclotomicNumber::from_coeffs(n, coeffs).ok()?;
        let val = crate::qexp::cyclo_to_complex(&cand, w);
        let err = val.dist(x);
        let size = x.abs().to_f64().max(1.0);
        if err <= size * 2f64.powi(-(bits as i32) / 2) {
            return Some(cand);
        }
    }
    None
}

/// Exact torsion point of E over ℚ(ζ_N) at the lattice parameter z0.
pub fn torsion_identify_cyclotomic(
    e: &EllipticCurveQ,
    z0: &Complex,
    lat: &PeriodLattice,
    n: u32,
) -> Result<Point<CyclotomicNumber>, EllipticError> {
    let bits = lat.bits.min(z0.prec());
    let (s, t) = lat.coords(z0);
    let tol = 2f64.powi(-(bits as i32) / 3);
    let m = (1i64..=120)
        .find(|&m| {
            let a = s.mul_i64(m);
            let b = t.mul_i64(m);
            let da = a.sub(&Real::from_bigint(&a.round(), bits)).abs().to_f64();
            let db = b.sub(&Real::from_bigint(&b.round(), bits)).abs().to_f64();
            da < tol && db < tol
        })
        .ok_or_else(|| EllipticError::NotTorsion(format!("{z0}")))?;
    if m == 1 {
        return Ok(Point::Infinity);
    }
    // move z0 to the exact torsion parameter before evaluating
    let a = Rat::new(s.mul_i64(m).round(), BigInt::from(m));
    let b = Rat::new(t.mul_i64(m).round(), BigInt::from(m));
    let z = lat.point(&a, &b);
    let (xn, yn) = e.point_from_z(lat, &z);
    let x = recognize_cyclotomic(&xn, n, bits).ok_or_else(|| EllipticError::Recognition(format!("x ≈ {xn}")))?;
    let psi = division_poly(e, m as usize);
    if !poly_eval(&psi, &x).is_zero() {
        return Err(EllipticError::Recognition(format!("x = {x} is not a root of the {m}-division polynomial")));
    }
    let y = recognize_cyclotomic(&yn, n, bits).ok_or_else(|| EllipticError::Recognition(format!("y ≈ {yn}")))?;
    let p = Point::Affine(x, y);
    if !e.contains(&p) {
        return Err(EllipticError::Recognition("recognized point is off the curve".into()));
    }
    if !mul_point(e, &p, m).is_infinity() {
        return Err(EllipticError::Recognition(format!("recognized point is not {m}-torsion")));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::rat;
    use proptest::prelude::*;

    fn e432() -> EllipticCurveQ {
        EllipticCurveQ::from_ints([0, 0, 0, -27, -918]).unwrap()
    }
    fn e11() -> EllipticCurveQ {
        EllipticCurveQ::from_ints([0, -1, 1, -10, -20]).unwrap()
    }

    fn sin(z: &Complex) -> Complex {
        // (e^{iz} − e^{−iz}) / 2i
        let iz = z.mul_i();
        let a = iz.exp();
        let b = iz.neg().exp();
        a.sub(&b).div(&Complex::i(z.prec()).mul_i64(2))
    }

    #[test]
    fn invariants() {
        let e = e11();
        assert_eq!(e.discriminant(), rat_int(-161051));
        assert_eq!(e.j_invariant(), rat(-122023936, 161051));
        assert!(EllipticCurveQ::from_ints([0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn ap_values() {
        assert_eq!(e11().ap(2).unwrap(), -2);
        let expected = [(3, -1), (5, 1), (7, -2), (13, 4)];
        for (p, a) in expected {
            assert_eq!(e11().ap(p).unwrap(), a, "a_{p}");
        }
        assert!(matches!(e11().ap(11), Err(EllipticError::BadReduction(11))));
        // y² = x³ + 1 is supersingular at 5: #E = 6
        assert_eq!(EllipticCurveQ::from_ints([0, 0, 0, 0, 1]).unwrap().ap(5).unwrap(), 0);
    }

    proptest! {
        #[test]
        fn hasse_bound(a4 in -50i64..50, a6 in -50i64..50, pi in 0usize..20) {
            let primes = [5u64, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79];
            let p = primes[pi];
            if let Ok(e) = EllipticCurveQ::from_ints([0, 0, 0, a4, a6]) {
                if e.good_at(p) {
                    let a = e.ap(p).unwrap();
                    prop_assert!((a * a) as u64 <= 4 * p);
                }
            }
        }
    }

    #[test]
    fn periods_of_432f1() {
        let lat = curve_periods(&e432(), 128);
        assert_eq!(lat.shape, LatticeShape::Triangular);
        assert!((lat.omega1.re.to_f64() - 0.756).abs() < 5e-4);
        assert!((lat.omega2.re.to_f64() - 0.378).abs() < 5e-4);
        assert!((lat.omega2.im.to_f64() - 0.695).abs() < 5e-4);
    }

    #[test]
    fn periods_of_11a1_and_precision_convergence() {
        let lat = curve_periods(&e11(), 128);
        assert!((lat.omega1.re.to_f64() - 1.2692093042795534).abs() < 1e-13);
        assert!((lat.omega2.im.to_f64() - 1.4588166169384952).abs() < 1e-13);
        let hi = curve_periods(&e11(), 256);
        let d = hi.omega1.re.sub(&lat.omega1.re).abs();
        assert!(d.exponent() < -128 + 4);
    }

    #[test]
    fn lattice_invariants_round_trip() {
        for e in [e11(), e432(), EllipticCurveQ::from_ints([0, 0, 0, -1, 0]).unwrap()] {
            let lat = curve_periods(&e, 160);
            let (g2, g3) = lat.invariants();
            let want2 = Complex::from_rat(&(e.c4() / rat_int(12)), 160);
            let want3 = Complex::from_rat(&(e.c6() / rat_int(216)), 160);
            assert!(g2.dist(&want2) < 1e-30 * want2.abs().to_f64().max(1.0), "{e}: {g2}");
            assert!(g3.dist(&want3) < 1e-30 * want3.abs().to_f64().max(1.0), "{e}: {g3}");
        }
    }

    #[test]
    fn numeric_points_lie_on_the_curve() {
        let e = e432();
        let lat = curve_periods(&e, 128);
        let mut seed = 1u64;
        for _ in 0..20 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let s = (seed >> 11) as f64 / (1u64 << 53) as f64;
            let t = ((seed >> 3) % 1000) as f64 / 1000.0;
            let z = lat.omega1.scale(&Real::from_f64(s, 128)).add(&lat.omega2.scale(&Real::from_f64(t + 0.01, 128)));
            let (x, y) = e.point_from_z(&lat, &z);
            let r = y.sqr().sub(&x.sqr().mul(&x)).add(&x.mul_i64(27)).add(&Complex::from_i64(918, 128));
            assert!(r.abs().to_f64() < 1e-25 * (1.0 + x.abs().to_f64().powi(3)));
        }
    }

    #[test]
    fn wp_series_against_lattice_sum() {
        let bits = 128;
        let e = e11();
        let lat = curve_periods(&e, bits);
        let g2 = Complex::from_rat(&(e.c4() / rat_int(12)), bits);
        let g3 = Complex::from_rat(&(e.c6() / rat_int(216)), bits);
        let (wp, _) = wp_series(&g2, &g3, 80);
        let z = lat.omega1.scale(&Real::from_f64(0.1, bits));
        let series = wp.eval_with(&z, |c| c.clone());
        // (π/ω1)² [Σ_m csc²(π(z − mω2)/ω1) − 1/3 − Σ_{m≠0} csc²(πmω2/ω1)]
        let pi = Complex::from_real(Real::pi(bits));
        let w1 = &lat.omega1;
        let w2 = &lat.omega2;
        let csc2 = |u: &Complex| sin(u).sqr().inv();
        let mut acc = csc2(&pi.mul(&z).div(w1)).sub(&Complex::from_rat(&rat(1, 3), bits));
        for m in 1..60i64 {
            let zm = z.sub(&w2.mul_i64(m));
            let zp = z.add(&w2.mul_i64(m));
            let cm = pi.mul(&w2.mul_i64(m)).div(w1);
            acc = acc.add(&csc2(&pi.mul(&zm).div(w1))).add(&csc2(&pi.mul(&zp).div(w1)));
            acc = acc.sub(&csc2(&cm).mul_i64(2));
        }
        let direct = pi.div(w1).sqr().mul(&acc);
        assert!(series.dist(&direct) < 1e-20, "{series} vs {direct}");
        let (num, _) = lat.wp(&z);
        assert!(num.dist(&direct) < 1e-20);
    }

    #[test]
    fn wp_series_shape_and_differential_equation() {
        let (g2, g3) = (rat(3, 1), rat(-5, 7));
        let (wp, dwp) = wp_series(&g2, &g3, 24);
        assert_eq!(wp.coeffs[0], rat_int(1));
        assert_eq!(wp.coeffs[1], rat_int(0));
        assert_eq!(wp.coeffs[2], rat_int(0));
        assert_eq!(wp.coeffs[4], rat(3, 20));
        assert_eq!(wp.coeffs[6], rat(-5, 196));
        // ℘′² − 4℘³ + g2℘ + g3 = O(z^{prec})
        let lhs = dwp.mul(&dwp);
        let p3 = wp.mul(&wp).mul(&wp).scale_rat(&rat_int(-4));
        let rest = wp.scale_rat(&g2);
        let total = lhs.add(&p3).add(&rest);
        for (i, c) in total.coeffs.iter().enumerate() {
            let k = total.min_exp + i as i64;
            let expect = if k == 0 { -g3.clone() } else { Rat::zero() };
            assert_eq!(*c, expect, "z^{k}");
        }
    }

    #[test]
    fn division_polynomials() {
        let e = e11();
        assert_eq!(division_poly(&e, 1), vec![rat_int(1)]);
        assert_eq!(division_poly(&e, 2), vec![e.b6(), rat_int(2) * e.b4(), e.b2(), rat_int(4)]);
        // the 5-torsion point (5, 5) is a root of ψ5 and not of ψ2·…
        assert!(poly_eval(&division_poly(&e, 5), &rat_int(5)).is_zero());
        assert!(!poly_eval(&division_poly(&e, 3), &rat_int(5)).is_zero());
        // numeric 3-torsion of 432.f1 is a root of ψ3
        let e = e432();
        let lat = curve_periods(&e, 128);
        let z = lat.omega1.div_i64(3);
        let (x, _) = e.point_from_z(&lat, &z);
        let psi = division_poly(&e, 3);
        let mut acc = Complex::zero(128);
        for c in psi.iter().rev() {
            acc = acc.mul(&x).add(&Complex::from_rat(c, 128));
        }
        assert!(acc.abs().to_f64() < 1e-25 * x.abs().to_f64().powi(4));
        assert_eq!(division_poly(&e, 4).len(), 10);
    }

    #[test]
    fn group_law() {
        let e = e11();
        let p = Point::Affine(rat_int(5), rat_int(5));
        assert_eq!(add_points(&e, &p, &Point::Infinity).unwrap(), p);
        assert_eq!(add_points(&e, &p, &e.neg(&p)).unwrap(), Point::Infinity);
        assert!(mul_point(&e, &p, 5).is_infinity());
        assert!(!mul_point(&e, &p, 2).is_infinity());
        assert!(add_points(&e, &p, &Point::Affine(rat_int(1), rat_int(1))).is_err());
        // associativity on points of y² = x³ + 17
        let e = EllipticCurveQ::from_ints([0, 0, 0, 0, 17]).unwrap();
        let pts = [(-2, 3), (-1, 4), (2, 5), (4, 9), (8, 23)].map(|(x, y)| Point::Affine(rat_int(x), rat_int(y)));
        for a in &pts {
            for b in &pts {
                for c in &pts {
                    let l = add_points(&e, &add_points(&e, a, b).unwrap(), c).unwrap();
                    let r = add_points(&e, a, &add_points(&e, b, c).unwrap()).unwrap();
                    assert_eq!(l, r);
                }
            }
        }
    }

    #[test]
    fn torsion_groups() {
        let pts = mordell_weil_rank0(&e11(), 0, 128).unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!(mordell_weil_rank0(&e432(), 0, 128).unwrap(), vec![Point::Infinity]);
        assert!(matches!(mordell_weil_rank0(&e11(), 1, 128), Err(EllipticError::RankNotZero(1))));
        let e = EllipticCurveQ::from_ints([0, 0, 0, -1, 0]).unwrap();
        assert_eq!(mordell_weil_rank0(&e, 0, 128).unwrap().len(), 4);
        for p in [5u64, 7] {
            let n = e11().count_points(p).unwrap();
            assert_eq!(n % 5, 0);
        }
    }

    #[test]
    fn torsion_recognition() {
        let bits = 160;
        let e = EllipticCurveQ::from_ints([0, 0, 0, -1, 0]).unwrap();
        let lat = curve_periods(&e, bits);
        assert_eq!(torsion_identify_cyclotomic(&e, &Complex::zero(bits), &lat, 4).unwrap(), Point::Infinity);
        let half = lat.omega1.div_i64(2);
        let p = torsion_identify_cyclotomic(&e, &half, &lat, 4).unwrap();
        assert_eq!(p, Point::Affine(rat_int(1), rat_int(0)).to_cyclotomic(4));
        let mid = lat.omega1.add(&lat.omega2).div_i64(2);
        let p = torsion_identify_cyclotomic(&e, &mid, &lat, 4).unwrap();
        assert_eq!(p, Point::Affine(rat_int(0), rat_int(0)).to_cyclotomic(4));
        // halving (0, 0) gives 4-torsion with x = ±i, y² = −2x
        let quarter = mid.div_i64(2);
        let p = torsion_identify_cyclotomic(&e, &quarter, &lat, 4).unwrap();
        let Point::Affine(x, _) = &p else { panic!("expected an affine point") };
        assert!((x * x).as_rational() == Some(rat_int(-1)));
        assert!(mul_point(&e, &p, 4).is_infinity());
        assert!(!mul_point(&e, &p, 2).is_infinity());
        // over ℚ(i) the other quarter point needs √2 and is refused
        assert!(torsion_identify_cyclotomic(&e, &lat.omega2.div_i64(4), &lat, 4).is_err());
        assert!(torsion_identify_cyclotomic(&e, &lat.omega2.div_i64(4), &lat, 8).is_ok());
        // a point off the torsion grid is refused
        let generic = lat.omega1.scale(&Real::from_f64(0.123456789, bits));
        assert!(torsion_identify_cyclotomic(&e, &generic, &lat, 4).is_err());
    }
}
