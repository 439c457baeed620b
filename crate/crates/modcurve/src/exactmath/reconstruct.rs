//! Rational reconstruction from residues, and Chinese remaindering.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::rational::Rat;

/// The rational a/b with |a|, b ≤ √(m/2), gcd(b, m) = 1 and a ≡ r·b (mod m), found by the
/// half-extended Euclidean algorithm; `None` when no such fraction exists.
pub fn rational_reconstruct(r: &BigInt, m: &BigInt) -> Option<Rat> {
    if m.is_zero() || m.is_negative() {
        return None;
    }
    let r = r.mod_floor(m);
    if r.is_zero() {
        return Some(Rat::zero());
    }
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), r);
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound || !t1.gcd(m).is_one() {
        return None;
    }
    let (a, b) = if t1.is_negative() { (-r1, -t1) } else { (r1, t1) };
    Some(Rat::new(a, b))
}

/// x ≡ a (mod m), x ≡ b (mod n) with coprime moduli; result reduced mod m·n.
pub fn crt_pair(a: &BigInt, m: &BigInt, b: &BigInt, n: &BigInt) -> BigInt {
    let g = m.extended_gcd(n);
    debug_assert!(g.gcd.is_one());
    let mn = m * n;
    let t = ((b - a) * &g.x).mod_floor(n);
    (a + m * t).mod_floor(&mn)
}

/// Residue of a rational modulo m; `None` if the denominator is not invertible.
pub fn rat_residue(q: &Rat, m: &BigInt) -> Option<BigInt> {
    let g = q.denom().extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    Some((q.numer() * g.x).mod_floor(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::rat;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let m = BigInt::from(101 * 101);
        assert_eq!(rational_reconstruct(&BigInt::zero(), &m), Some(Rat::zero()));
        let r = rat_residue(&rat(1, 3), &m).unwrap();
        assert_eq!(rational_reconstruct(&r, &m), Some(rat(1, 3)));
        // √(5/2) < 2, so the residue 2 has no admissible fraction
        assert_eq!(rational_reconstruct(&BigInt::from(2), &BigInt::from(5)), None);
        assert_eq!(rational_reconstruct(&BigInt::from(2), &BigInt::from(101)), Some(rat(2, 1)));
        assert_eq!(rational_reconstruct(&BigInt::from(-7), &m), Some(rat(-7, 1)));
    }

    #[test]
    fn crt() {
        let x = crt_pair(&BigInt::from(2), &BigInt::from(3), &BigInt::from(3), &BigInt::from(5));
        assert_eq!(x, BigInt::from(8));
    }

    proptest! {
        #[test]
        fn round_trip_under_bound(p in prop::sample::select(vec![3u32, 5, 7, 11, 101, 65521]), k in 1u32..12, a in -100_000i64..100_000, b in 1i64..100_000) {
            let m = BigInt::from(p).pow(k);
            let q = rat(a, b);
            let bound = (&m / BigInt::from(2)).sqrt();
            prop_assume!(q.numer().abs() <= bound && *q.denom() <= bound);
            prop_assume!(q.denom().gcd(&m).is_one());
            let r = rat_residue(&q, &m).unwrap();
            prop_assert_eq!(rational_reconstruct(&r, &m), Some(q));
        }
    }
}
