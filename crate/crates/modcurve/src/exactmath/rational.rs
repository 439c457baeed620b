//! Big rationals and the `"num/den"` text form used in data files.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::MathError;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"n"` or `"n/d"`.
pub fn parse_rat(s: &str) -> Result<Rat, MathError> {
    let s = s.trim();
    let bad = || MathError::Parse(s.to_string());
    match s.split_once('/') {
        None => s.parse::<BigInt>().map(Rat::from_integer).map_err(|_| bad()),
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(n, d))
        }
    }
}

pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn lcm_denoms<'a, I: IntoIterator<Item = &'a Rat>>(it: I) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

pub fn gcd_all<'a, I: IntoIterator<Item = &'a BigInt>>(it: I) -> BigInt {
    let mut g = BigInt::zero();
    for x in it {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                break;
            }
        }
    }
    g
}

/// Scales a rational vector to coprime integers (sign untouched). Zero vector stays zero.
pub fn primitive_integer_vector(v: &[Rat]) -> Vec<BigInt> {
    let l = lcm_denoms(v.iter());
    let ints: Vec<BigInt> = v.iter().map(|r| (r * &l).to_integer()).collect();
    let g = gcd_all(ints.iter());
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // shift both down to the f64 range
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(900);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// The continued-fraction convergent of `x` with the largest denominator ≤ `max_den`.
pub fn best_rational(x: &Rat, max_den: &BigInt) -> Rat {
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut r = x.clone();
    loop {
        let a = r.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if &q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = &r - Rat::from_integer(a);
        if frac.is_zero() {
            break;
        }
        r = frac.recip();
    }
    if q1.is_zero() {
        return Rat::from_integer(x.floor().to_integer());
    }
    Rat::new(p1, q1)
}

pub fn abs_le(r: &Rat, bound: &BigInt) -> bool {
    r.numer().abs() <= *bound && r.denom() <= bound
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergents() {
        let pi_ish = Rat::new(BigInt::from(314159265358979i64), BigInt::from(100000000000000i64));
        assert_eq!(best_rational(&pi_ish, &BigInt::from(10)), rat(22, 7));
        assert_eq!(best_rational(&pi_ish, &BigInt::from(200)), rat(355, 113));
        assert_eq!(best_rational(&rat(-7, 2), &BigInt::from(100)), rat(-7, 2));
    }

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "-7", "3/4", "-22/6"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(parse_rat(&format_rat(&r)).unwrap(), r);
        }
        assert_eq!(format_rat(&parse_rat("-22/6").unwrap()), "-11/3");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn primitive_vector() {
        let v = vec![rat(1, 2), rat(-3, 4), rat(0, 1)];
        let p = primitive_integer_vector(&v);
        assert_eq!(p, vec![BigInt::from(2), BigInt::from(-3), BigInt::zero()]);
    }
}
