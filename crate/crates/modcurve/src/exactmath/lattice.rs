//! LLL reduction of integer lattices with exact rational Gram–Schmidt data.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::rational::Rat;

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn round_rat(q: &Rat) -> BigInt {
    let two = BigInt::from(2);
    let num = q.numer() * &two + q.denom();
    let den = q.denom() * &two;
    num_integer::Integer::div_floor(&num, &den)
}

/// LLL-reduces the rows of `basis` (δ = 3/4). Rows must be linearly independent.
pub fn lll(mut b: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let n = b.len();
    if n <= 1 {
        return b;
    }
    let delta = Rat::new(BigInt::from(3), BigInt::from(4));
    // Gram–Schmidt coefficients mu and squared norms bstar
    let gs = |b: &Vec<Vec<BigInt>>| -> (Vec<Vec<Rat>>, Vec<Rat>) {
        let mut mu = vec![vec![Rat::zero(); n]; n];
        let mut bstar: Vec<Vec<Rat>> = Vec::with_capacity(n);
        let mut norms = Vec::with_capacity(n);
        for i in 0..n {
            let mut v: Vec<Rat> = b[i].iter().map(|x| Rat::from_integer(x.clone())).collect();
            for j in 0..i {
                let num: Rat = b[i].iter().zip(&bstar[j]).map(|(x, y)| Rat::from_integer(x.clone()) * y).sum();
                mu[i][j] = if norms[j] == Rat::zero() { Rat::zero() } else { num / &norms[j] };
                for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                    *vk -= &mu[i][j] * bk;
                }
            }
            let nn: Rat = v.iter().map(|x| x * x).sum();
            norms.push(nn);
            bstar.push(v);
        }
        (mu, norms)
    };
    let (mut mu, mut norms) = gs(&b);
    let mut k = 1;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        if guard > 100_000 {
            break;
        }
        for j in (0..k).rev() {
            let q = round_rat(&mu[k][j]);
            if !q.is_zero() {
                let bj = b[j].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= &q * y;
                }
                let qr = Rat::from_integer(q);
                for l in 0..=j {
                    let m = if l == j { Rat::one() } else { mu[j][l].clone() };
                    mu[k][l] = &mu[k][l] - &qr * m;
                }
            }
        }
        let lhs = &norms[k];
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1];
        if *lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            let (m2, n2) = gs(&b);
            mu = m2;
            norms = n2;
            k = k.saturating_sub(1).max(1);
        }
    }
    b
}

pub fn norm2(v: &[BigInt]) -> BigInt {
    dot(v, v)
}
