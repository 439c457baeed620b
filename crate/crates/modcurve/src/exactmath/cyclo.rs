//! Elements of ℚ(ζ_N) in the power basis 1, ζ, …, ζ^{φ(N)−1}.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::matrix::RatMatrix;
use super::rational::{format_rat, Rat};
use super::MathError;

/// Φ_N together with the reductions of x^k modulo Φ_N.
#[derive(Debug)]
pub struct CycloField {
    pub n: u32,
    pub phi: usize,
    /// Coefficients of Φ_N, constant term first.
    pub modulus: Vec<i64>,
    /// `powers[k]` is x^k mod Φ_N for k < max(N, 2φ − 1).
    pub powers: Vec<Vec<i64>>,
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let lead = den[dd];
    let mut q = vec![0i64; num.len() - dd];
    for i in (0..q.len()).rev() {
        let c = rem[i + dd] / lead;
        q[i] = c;
        for (j, d) in den.iter().enumerate() {
            rem[i + j] -= c * d;
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    q
}

pub fn cyclotomic_poly(n: u32) -> Vec<i64> {
    let mut p = vec![0i64; n as usize + 1];
    p[0] = -1;
    p[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            p = poly_div_exact(&p, &cyclotomic_poly(d));
        }
    }
    p
}

impl CycloField {
    fn build(n: u32) -> CycloField {
        assert!(n >= 1);
        let modulus = cyclotomic_poly(n);
        let phi = modulus.len() - 1;
        let count = (n as usize).max(2 * phi);
        let mut powers = Vec::with_capacity(count);
        let mut cur = vec![0i64; phi];
        cur[0] = 1;
        for _ in 0..count {
            powers.push(cur.clone());
            // multiply by x and reduce
            let top = cur[phi - 1];
            for i in (1..phi).rev() {
                cur[i] = cur[i - 1] - top * modulus[i];
            }
            cur[0] = -top * modulus[0];
        }
        CycloField { n, phi, modulus, powers }
    }

    /// Reduces an integer polynomial in ζ (any length) to the power basis.
    pub fn reduce_int(&self, v: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.phi];
        self.reduce_int_into(v, &mut out);
        out
    }

    pub fn reduce_int_into(&self, v: &[BigInt], out: &mut [BigInt]) {
        for (k, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if k < self.phi {
                out[k] += c;
                continue;
            }
            let row = self.power_row(k);
            for (o, &r) in out.iter_mut().zip(row.iter()) {
                if r != 0 {
                    *o += c * r;
                }
            }
        }
    }

    /// x^k mod Φ_N for any k ≥ 0.
    pub fn power_row(&self, k: usize) -> &[i64] {
        let n = self.n as usize;
        if k < self.powers.len() {
            &self.powers[k]
        } else {
            &self.powers[k % n]
        }
    }

    pub fn units(&self) -> Vec<u32> {
        (1..=self.n).filter(|k| k.gcd(&self.n) == 1).map(|k| k % self.n).collect()
    }
}

static FIELDS: OnceLock<Mutex<HashMap<u32, Arc<CycloField>>>> = OnceLock::new();

/// Shared field data for ℚ(ζ_N).
pub fn field(n: u32) -> Arc<CycloField> {
    let map = FIELDS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("field cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(CycloField::build(n))).clone()
}

#[derive(Clone)]
pub struct CyclotomicNumber {
    field: Arc<CycloField>,
    coeffs: Vec<Rat>,
}

impl PartialEq for CyclotomicNumber {
    fn eq(&self, other: &Self) -> bool {
        self.field.n == other.field.n && self.coeffs == other.coeffs
    }
}
impl Eq for CyclotomicNumber {}

impl fmt::Debug for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", format_rat(c))?,
                1 => write!(f, "({})*z{}", format_rat(c), self.field.n)?,
                _ => write!(f, "({})*z{}^{}", format_rat(c), self.field.n, i)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl CyclotomicNumber {
    /// Builds an element from a polynomial in ζ_N of any length, reducing modulo Φ_N.
    pub fn from_poly(n: u32, poly: &[Rat]) -> Self {
        let fld = field(n);
        let mut coeffs = vec![Rat::zero(); fld.phi];
        for (k, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, &r) in coeffs.iter_mut().zip(fld.power_row(k)) {
                if r != 0 {
                    *o += c * Rat::from_integer(BigInt::from(r));
                }
            }
        }
        CyclotomicNumber { field: fld, coeffs }
    }

    pub fn from_coeffs(n: u32, coeffs: Vec<Rat>) -> Result<Self, MathError> {
        let fld = field(n);
        if coeffs.len() != fld.phi {
            return Err(MathError::Dimension(format!(
                "expected {} coordinates for level {}, got {}",
                fld.phi,
                n,
                coeffs.len()
            )));
        }
        Ok(CyclotomicNumber { field: fld, coeffs })
    }

    pub fn zero(n: u32) -> Self {
        let fld = field(n);
        let coeffs = vec![Rat::zero(); fld.phi];
        CyclotomicNumber { field: fld, coeffs }
    }

    pub fn from_rat(n: u32, r: Rat) -> Self {
        let mut z = Self::zero(n);
        z.coeffs[0] = r;
        z
    }

    pub fn one(n: u32) -> Self {
        Self::from_rat(n, Rat::one())
    }

    /// ζ_N^k.
    pub fn zeta_pow(n: u32, k: i64) -> Self {
        let fld = field(n);
        let k = k.rem_euclid(n as i64) as usize;
        let coeffs = fld.power_row(k).iter().map(|&c| Rat::from_integer(BigInt::from(c))).collect();
        CyclotomicNumber { field: fld, coeffs }
    }

    pub fn level(&self) -> u32 {
        self.field.n
    }

    pub fn field(&self) -> &Arc<CycloField> {
        &self.field
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn as_rational(&self) -> Option<Rat> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    fn check(&self, other: &Self) -> Result<(), MathError> {
        if self.field.n != other.field.n {
            return Err(MathError::LevelMismatch(self.field.n, other.field.n));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, MathError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(CyclotomicNumber { field: self.field.clone(), coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, MathError> {
        self.check(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(CyclotomicNumber { field: self.field.clone(), coeffs })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, MathError> {
        self.check(other)?;
        let phi = self.field.phi;
        let mut prod = vec![Rat::zero(); 2 * phi - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        Ok(Self::from_poly(self.field.n, &prod))
    }

    pub fn scale(&self, r: &Rat) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * r).collect();
        CyclotomicNumber { field: self.field.clone(), coeffs }
    }

    /// Matrix of multiplication by `self` acting on coordinate columns.
    pub fn mul_matrix(&self) -> RatMatrix {
        let phi = self.field.phi;
        let mut m = RatMatrix::zeros(phi, phi);
        for j in 0..phi {
            let col = self.try_mul(&Self::zeta_pow(self.field.n, j as i64)).expect("same level");
            for i in 0..phi {
                m.set(i, j, col.coeffs[i].clone());
            }
        }
        m
    }

    pub fn inverse(&self) -> Result<Self, MathError> {
        if self.is_zero() {
            return Err(MathError::DivisionByZero);
        }
        let m = self.mul_matrix();
        let mut rhs = vec![Rat::zero(); self.field.phi];
        rhs[0] = Rat::one();
        let sol = m.solve(&rhs)?;
        Ok(CyclotomicNumber { field: self.field.clone(), coeffs: sol })
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, MathError> {
        self.try_mul(&other.inverse()?)
    }

    /// Image under ζ_N ↦ ζ_N^k.
    pub fn galois_twist(&self, k: i64) -> Result<Self, MathError> {
        let n = self.field.n as i64;
        if k.gcd(&n) != 1 {
            return Err(MathError::NotCoprime(k, self.field.n));
        }
        let k = k.rem_euclid(n) as usize;
        let mut poly = vec![Rat::zero(); self.field.n as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                poly[(i * k) % self.field.n as usize] += c;
            }
        }
        Ok(Self::from_poly(self.field.n, &poly))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.field.n);
        for _ in 0..e {
            acc = acc.try_mul(self).expect("same level");
        }
        acc
    }
}

/// Checked product; fails when the levels differ.
pub fn cyclo_mul(a: &CyclotomicNumber, b: &CyclotomicNumber) -> Result<CyclotomicNumber, MathError> {
    a.try_mul(b)
}

pub fn galois_twist(a: &CyclotomicNumber, k: i64) -> Result<CyclotomicNumber, MathError> {
    a.galois_twist(k)
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl std::ops::$tr<&CyclotomicNumber> for &CyclotomicNumber {
            type Output = CyclotomicNumber;
            fn $m(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
                self.$f(rhs).expect("cyclotomic level mismatch")
            }
        }
    };
}
binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl std::ops::Neg for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        CyclotomicNumber { field: self.field.clone(), coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::rat;
    use proptest::prelude::*;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(36), {
            let mut v = vec![0; 13];
            v[0] = 1;
            v[6] = -1;
            v[12] = 1;
            v
        });
        assert_eq!(field(36).phi, 12);
    }

    #[test]
    fn small_products() {
        let z6 = CyclotomicNumber::zeta_pow(6, 1);
        let sq = cyclo_mul(&z6, &z6).unwrap();
        let expect = &z6 - &CyclotomicNumber::one(6);
        assert_eq!(sq, expect);
        let z4 = CyclotomicNumber::zeta_pow(4, 1);
        assert_eq!(&z4 * &z4, CyclotomicNumber::from_rat(4, rat(-1, 1)));
        let x = CyclotomicNumber::from_poly(7, &[rat(1, 2), rat(3, 1), rat(0, 1), rat(-5, 3)]);
        assert_eq!(&CyclotomicNumber::one(7) * &x, x);
    }

    #[test]
    fn level_mismatch() {
        let a = CyclotomicNumber::one(4);
        let b = CyclotomicNumber::one(6);
        assert!(matches!(cyclo_mul(&a, &b), Err(MathError::LevelMismatch(4, 6))));
    }

    #[test]
    fn twists() {
        let z4 = CyclotomicNumber::zeta_pow(4, 1);
        assert_eq!(z4.galois_twist(3).unwrap(), -&z4);
        let r = CyclotomicNumber::from_rat(12, rat(5, 7));
        assert_eq!(r.galois_twist(5).unwrap(), r);
        let x = CyclotomicNumber::from_poly(12, &[rat(1, 1), rat(2, 1), rat(-1, 3), rat(4, 1)]);
        assert_eq!(x.galois_twist(5).unwrap().galois_twist(5).unwrap(), x);
        assert!(x.galois_twist(3).is_err());
    }

    #[test]
    fn inverse() {
        let x = CyclotomicNumber::from_poly(36, &[rat(1, 1), rat(2, 1), rat(0, 1), rat(-1, 5)]);
        let y = x.inverse().unwrap();
        assert_eq!(&x * &y, CyclotomicNumber::one(36));
        assert!(CyclotomicNumber::zero(5).inverse().is_err());
    }

    fn arb_elem(n: u32) -> impl Strategy<Value = CyclotomicNumber> {
        let phi = field(n).phi;
        prop::collection::vec((-20i64..20, 1i64..6), phi)
            .prop_map(move |v| CyclotomicNumber::from_coeffs(n, v.into_iter().map(|(a, b)| rat(a, b)).collect()).unwrap())
    }

    fn arb_triple() -> impl Strategy<Value = (i64, CyclotomicNumber, CyclotomicNumber, CyclotomicNumber)> {
        prop_oneof![Just(7u32), Just(12u32), Just(36u32)].prop_flat_map(|n| {
            let units: Vec<i64> = field(n).units().into_iter().map(|u| u as i64).collect();
            (prop::sample::select(units), arb_elem(n), arb_elem(n), arb_elem(n))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn field_laws((k, a, b, c) in arb_triple()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!((&a * &b).galois_twist(k).unwrap(), &a.galois_twist(k).unwrap() * &b.galois_twist(k).unwrap());
            prop_assert_eq!((&a + &b).galois_twist(k).unwrap(), &a.galois_twist(k).unwrap() + &b.galois_twist(k).unwrap());
        }
    }
}
