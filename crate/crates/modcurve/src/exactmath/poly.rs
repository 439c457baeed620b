//! Homogeneous multivariate polynomials with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::modp::{mulmod, powmod, rat_mod};
use super::rational::{format_rat, gcd_all, lcm_denoms, Rat};
use super::MathError;

pub type Exponent = Vec<u32>;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HomogPoly {
    nvars: usize,
    degree: u32,
    terms: BTreeMap<Exponent, Rat>,
}

/// All exponent vectors of total degree `d` in `n` variables, lexicographically descending.
pub fn monomials(n: usize, d: u32) -> Vec<Exponent> {
    fn rec(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        if prefix.len() == n - 1 {
            let mut e = prefix.clone();
            e.push(d);
            out.push(e);
            return;
        }
        for k in (0..=d).rev() {
            prefix.push(k);
            rec(n, d - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, d, &mut Vec::new(), &mut out);
    out
}

impl HomogPoly {
    pub fn new(nvars: usize, degree: u32, terms: Vec<(Exponent, Rat)>) -> Result<Self, MathError> {
        let mut map: BTreeMap<Exponent, Rat> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(MathError::Dimension(format!("exponent {:?} has {} entries, expected {}", e, e.len(), nvars)));
            }
            if e.iter().sum::<u32>() != degree {
                return Err(MathError::NotHomogeneous(format!("{:?}", e)));
            }
            *map.entry(e).or_insert_with(Rat::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(HomogPoly { nvars, degree, terms: map })
    }

    /// Infers the degree from the first term; an empty term list needs an explicit degree.
    pub fn from_terms(nvars: usize, terms: Vec<(Exponent, Rat)>) -> Result<Self, MathError> {
        let degree = terms.first().map(|(e, _)| e.iter().sum()).unwrap_or(0);
        Self::new(nvars, degree, terms)
    }

    pub fn zero(nvars: usize, degree: u32) -> Self {
        HomogPoly { nvars, degree, terms: BTreeMap::new() }
    }

    pub fn monomial(exp: Exponent, c: Rat) -> Self {
        let nvars = exp.len();
        let degree = exp.iter().sum();
        Self::new(nvars, degree, vec![(exp, c)]).expect("single term is homogeneous")
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &[u32]) -> Rat {
        self.terms.get(e).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &HomogPoly) -> Result<HomogPoly, MathError> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.degree != other.degree || self.nvars != other.nvars {
            return Err(MathError::NotHomogeneous("degree mismatch in sum".into()));
        }
        let terms = self.terms.iter().chain(other.terms.iter()).map(|(e, c)| (e.clone(), c.clone())).collect();
        HomogPoly::new(self.nvars, self.degree, terms)
    }

    pub fn scale(&self, r: &Rat) -> HomogPoly {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c * r)).collect();
        HomogPoly::new(self.nvars, self.degree, terms).expect("same shape")
    }

    pub fn sub(&self, other: &HomogPoly) -> Result<HomogPoly, MathError> {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn mul(&self, other: &HomogPoly) -> HomogPoly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                terms.push((e, c1 * c2));
            }
        }
        HomogPoly::new(self.nvars, self.degree + other.degree, terms).expect("product is homogeneous")
    }

    /// Partial derivative in variable `i` (degree drops by one).
    pub fn derivative(&self, i: usize) -> HomogPoly {
        let deg = self.degree.saturating_sub(1);
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] > 0)
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2[i] -= 1;
                (e2, c * Rat::from_integer(BigInt::from(e[i])))
            })
            .collect();
        HomogPoly::new(self.nvars, deg, terms).expect("derivative is homogeneous")
    }

    pub fn eval_rat(&self, x: &[Rat]) -> Rat {
        let mut acc = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_int(&self, x: &[BigInt]) -> Rat {
        let xs: Vec<Rat> = x.iter().map(|v| Rat::from_integer(v.clone())).collect();
        self.eval_rat(&xs)
    }

    /// Value at a point of 𝔽_p^n; `None` if a coefficient denominator vanishes mod p.
    pub fn eval_mod(&self, x: &[u64], p: u64) -> Option<u64> {
        let mut acc = 0u64;
        for (e, c) in &self.terms {
            let mut t = rat_mod(c, p)?;
            for (&xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t = mulmod(t, powmod(xi, k as u64, p), p);
                }
            }
            acc = (acc + t) % p;
        }
        Some(acc)
    }

    /// Integer multiple with coprime integer coefficients and the same sign.
    pub fn clear_denominators(&self) -> HomogPoly {
        if self.is_zero() {
            return self.clone();
        }
        let l = lcm_denoms(self.terms.values());
        let ints: Vec<BigInt> = self.terms.values().map(|c| (c * Rat::from_integer(l.clone())).to_integer()).collect();
        let g = gcd_all(ints.iter());
        let terms = self.terms.keys().cloned().zip(ints).map(|(e, c)| (e, Rat::new(c, g.clone()))).collect();
        HomogPoly::new(self.nvars, self.degree, terms).expect("same shape")
    }

    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (e, c) in self.terms.iter().rev() {
            let mut mono = Vec::new();
            for (i, &k) in e.iter().enumerate() {
                let name = names.get(i).cloned().unwrap_or_else(|| format!("x{}", i));
                match k {
                    0 => {}
                    1 => mono.push(name),
                    _ => mono.push(format!("{}^{}", name, k)),
                }
            }
            let cs = format_rat(c);
            parts.push(if mono.is_empty() {
                cs
            } else if c.is_one() {
                mono.join("*")
            } else {
                format!("{}*{}", cs, mono.join("*"))
            });
        }
        parts.join(" + ").replace("+ -", "- ")
    }
}

impl fmt::Display for HomogPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&[]))
    }
}
