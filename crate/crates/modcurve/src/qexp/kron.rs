//! Kronecker-substitution products of series with coefficient vectors in ℤ[x].

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;

/// For each output index n < out_len, the coefficient vector (length 2·phi − 1) of
/// Σ_{i+j=n} a_i·b_j, where each a_i, b_j is an integer polynomial of length `phi`.
pub fn kron_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>], phi: usize, out_len: usize) -> Vec<Vec<BigInt>> {
    let slots = 2 * phi - 1;
    let la = a.len().min(out_len);
    let lb = b.len().min(out_len);
    let mut out = vec![vec![BigInt::zero(); slots]; out_len];
    if la == 0 || lb == 0 {
        return out;
    }
    let bits_a = a[..la].iter().flatten().map(|x| x.bits()).max().unwrap_or(0);
    let bits_b = b[..lb].iter().flatten().map(|x| x.bits()).max().unwrap_or(0);
    if bits_a == 0 || bits_b == 0 {
        return out;
    }
    let terms = (la.min(lb) * phi) as u64;
    let need = bits_a + bits_b + (64 - terms.leading_zeros() as u64) + 2;
    let w = need.div_ceil(32) as usize; // u32 words per slot
    let pa = pack(&a[..la], phi, slots, w);
    let pb = pack(&b[..lb], phi, slots, w);
    let prod = pa * pb;
    unpack(&prod, slots, w, &mut out);
    out
}

fn pack(a: &[Vec<BigInt>], phi: usize, slots: usize, w: usize) -> BigInt {
    let total = a.len() * slots * w;
    let mut pos = vec![0u32; total];
    let mut neg = vec![0u32; total];
    let mut any_neg = false;
    for (n, row) in a.iter().enumerate() {
        for (i, c) in row.iter().enumerate().take(phi) {
            if c.is_zero() {
                continue;
            }
            let (s, digits) = c.to_u32_digits();
            let base = (n * slots + i) * w;
            let dst = if s == Sign::Minus {
                any_neg = true;
                &mut neg
            } else {
                &mut pos
            };
            dst[base..base + digits.len()].copy_from_slice(&digits);
        }
    }
    let p = BigInt::from(BigUint::new(pos));
    if any_neg {
        p - BigInt::from(BigUint::new(neg))
    } else {
        p
    }
}

/// Splits a packed value into balanced slot digits of 32·w bits each.
fn unpack(x: &BigInt, slots: usize, w: usize, out: &mut [Vec<BigInt>]) {
    let total = out.len() * slots * w;
    let (sign, mut digits) = x.to_u32_digits();
    digits.resize(digits.len().max(total) + 1, 0);
    if sign == Sign::Minus {
        let mut carry = 1u64;
        for d in digits.iter_mut() {
            let v = (!*d) as u64 + carry;
            *d = v as u32;
            carry = v >> 32;
        }
    }
    let mut carry = 0u64;
    for (n, row) in out.iter_mut().enumerate() {
        for (s, slot) in row.iter_mut().enumerate() {
            let base = (n * slots + s) * w;
            let mut word: Vec<u32> = digits[base..base + w].to_vec();
            let mut c = carry;
            for d in word.iter_mut() {
                if c == 0 {
                    break;
                }
                let v = *d as u64 + c;
                *d = v as u32;
                c = v >> 32;
            }
            // c > 0 here means the slot wrapped to exactly 2^{32w}, i.e. digit 0 with carry
            if c > 0 {
                *slot = BigInt::zero();
                carry = 1;
                continue;
            }
            if word[w - 1] >> 31 == 1 {
                let mut mag: Vec<u32> = word.iter().map(|d| !d).collect();
                let mut c = 1u64;
                for d in mag.iter_mut() {
                    let v = *d as u64 + c;
                    *d = v as u32;
                    c = v >> 32;
                }
                *slot = -BigInt::from(BigUint::new(mag));
                carry = 1;
            } else {
                *slot = BigInt::from(BigUint::new(word));
                carry = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(a: &[Vec<BigInt>], b: &[Vec<BigInt>], phi: usize, out_len: usize) -> Vec<Vec<BigInt>> {
        let mut out = vec![vec![BigInt::zero(); 2 * phi - 1]; out_len];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                if i + j >= out_len {
                    continue;
                }
                for (k, u) in x.iter().enumerate() {
                    for (l, v) in y.iter().enumerate() {
                        out[i + j][k + l] += u * v;
                    }
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn matches_schoolbook(phi in 1usize..5, la in 0usize..6, lb in 0usize..6, out_len in 1usize..9,
                              seed in prop::collection::vec(-1_000_000_000_000i64..1_000_000_000_000, 60), big in any::<bool>()) {
            let mk = |len: usize, off: usize| -> Vec<Vec<BigInt>> {
                (0..len).map(|i| (0..phi).map(|k| {
                    let v = BigInt::from(seed[(off + i * phi + k) % 60]);
                    if big { v.clone() * v.clone() * v } else { v }
                }).collect()).collect()
            };
            let a = mk(la, 0);
            let b = mk(lb, 29);
            prop_assert_eq!(kron_mul(&a, &b, phi, out_len), naive(&a, &b, phi, out_len));
        }
    }

    #[test]
    fn extreme_digits() {
        // all-ones and all-minus-ones stress the carry chain
        let phi = 3;
        let a: Vec<Vec<BigInt>> = (0..4).map(|_| vec![BigInt::from(-1); phi]).collect();
        let b: Vec<Vec<BigInt>> = (0..4).map(|_| vec![BigInt::from(1); phi]).collect();
        assert_eq!(kron_mul(&a, &b, phi, 7), naive(&a, &b, phi, 7));
        assert_eq!(kron_mul(&a, &a, phi, 7), naive(&a, &a, phi, 7));
    }
}
