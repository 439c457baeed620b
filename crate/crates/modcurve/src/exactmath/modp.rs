//! Word-size modular arithmetic and linear algebra over 𝔽_p.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::rational::Rat;

#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let g = (a as i128).extended_gcd(&(m as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(m as i128) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn next_prime(n: u64) -> u64 {
    let mut k = n + 1;
    while !is_prime(k) {
        k += 1;
    }
    k
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&k| is_prime(k)).collect()
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn legendre(a: i64, p: u64) -> i32 {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    if powmod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// A generator of the order-n subgroup of 𝔽_p^*, for p ≡ 1 mod n.
pub fn root_of_unity(n: u64, p: u64) -> Option<u64> {
    if !(p - 1).is_multiple_of(n) {
        return None;
    }
    let fac = prime_factors(n);
    for g in 2..p {
        let r = powmod(g, (p - 1) / n, p);
        if fac.iter().all(|&q| powmod(r, n / q, p) != 1) {
            return Some(r);
        }
    }
    None
}

pub fn bigint_mod(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits")
}

/// Image of a rational in 𝔽_p, `None` when p divides the denominator.
pub fn rat_mod(r: &Rat, p: u64) -> Option<u64> {
    let d = bigint_mod(r.denom(), p);
    let di = invmod(d, p)?;
    Some(mulmod(bigint_mod(r.numer(), p), di, p))
}

/// Incremental row echelon basis over 𝔽_p.
pub struct EchelonMod {
    p: u64,
    ncols: usize,
    rows: Vec<(usize, Vec<u64>)>,
}

impl EchelonMod {
    pub fn new(ncols: usize, p: u64) -> Self {
        EchelonMod { p, ncols, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the basis; inserts it and returns true if it was independent.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let p = self.p;
        let mut v: Vec<u64> = v.iter().map(|x| x % p).collect();
        for (piv, row) in &self.rows {
            let c = v[*piv];
            if c != 0 {
                for j in *piv..self.ncols {
                    if row[j] != 0 {
                        v[j] = (v[j] + p - mulmod(c, row[j], p)) % p;
                    }
                }
            }
        }
        match v.iter().position(|&x| x != 0) {
            None => false,
            Some(piv) => {
                let inv = invmod(v[piv], p).expect("prime modulus");
                for x in v.iter_mut() {
                    *x = mulmod(*x, inv, p);
                }
                let pos = self.rows.partition_point(|(q, _)| *q < piv);
                self.rows.insert(pos, (piv, v));
                true
            }
        }
    }

    /// Reduced basis of the null space of the inserted rows.
    pub fn nullspace(&self) -> Vec<Vec<u64>> {
        let p = self.p;
        // full reduction
        let mut rows: Vec<(usize, Vec<u64>)> = self.rows.clone();
        for i in (0..rows.len()).rev() {
            let (pi, ri) = rows[i].clone();
            for row in rows.iter_mut().take(i) {
                let c = row.1[pi];
                if c != 0 {
                    for j in pi..self.ncols {
                        row.1[j] = (row.1[j] + p - mulmod(c, ri[j], p)) % p;
                    }
                }
            }
        }
        let pivots: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let mut out = Vec::new();
        for free in 0..self.ncols {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = vec![0u64; self.ncols];
            v[free] = 1;
            for (pc, row) in &rows {
                v[*pc] = (p - row[free]) % p;
            }
            out.push(v);
        }
        out
    }
}

pub fn rank_mod(rows: &[Vec<u64>], ncols: usize, p: u64) -> usize {
    let mut e = EchelonMod::new(ncols, p);
    for r in rows {
        e.insert(r);
        if e.rank() == ncols {
            break;
        }
    }
    e.rank()
}

pub fn nullspace_mod(rows: &[Vec<u64>], ncols: usize, p: u64) -> Vec<Vec<u64>> {
    let mut e = EchelonMod::new(ncols, p);
    for r in rows {
        e.insert(r);
        if e.rank() == ncols {
            break;
        }
    }
    e.nullspace()
}

/// Solves the square system A x = b over 𝔽_p; `None` if singular.
pub fn solve_mod(a: &[Vec<u64>], b: &[u64], p: u64) -> Option<Vec<u64>> {
    let n = b.len();
    let mut m: Vec<Vec<u64>> = a.iter().zip(b).map(|(r, &x)| {
        let mut r = r.clone();
        r.push(x % p);
        r
    }).collect();
    for c in 0..n {
        let piv = (c..n).find(|&i| !m[i][c].is_multiple_of(p))?;
        m.swap(c, piv);
        let inv = invmod(m[c][c], p)?;
        for x in m[c].iter_mut() {
            *x = mulmod(*x, inv, p);
        }
        for i in 0..n {
            if i != c && m[i][c] != 0 {
                let f = m[i][c];
                let rc = m[c].clone();
                for (x, y) in m[i].iter_mut().zip(rc.iter()) {
                    *x = (*x + p - mulmod(f, *y, p)) % p;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n]).collect())
}

/// Integer image in [0, p) of each entry of an integer row, or `None` for a zero row.
pub fn row_mod(row: &[BigInt], p: u64) -> Vec<u64> {
    row.iter().map(|x| if x.is_zero() { 0 } else { bigint_mod(x, p) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        let small: Vec<u64> = primes_up_to(30);
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(is_prime(2_147_483_647));
        assert!(!is_prime(3_215_031_751));
        assert_eq!(next_prime(36), 37);
    }

    #[test]
    fn roots_of_unity() {
        let r = root_of_unity(36, 37).unwrap();
        assert_eq!(powmod(r, 36, 37), 1);
        assert_ne!(powmod(r, 18, 37), 1);
        assert_ne!(powmod(r, 12, 37), 1);
        assert!(root_of_unity(36, 41).is_none());
    }

    #[test]
    fn nullspace_small() {
        let rows = vec![vec![1, 2], vec![2, 4]];
        let ns = nullspace_mod(&rows, 2, 101);
        assert_eq!(ns, vec![vec![99, 1]]);
        assert_eq!(rank_mod(&rows, 2, 101), 1);
    }

    #[test]
    fn solve_small() {
        let a = vec![vec![2, 1], vec![1, 3]];
        let x = solve_mod(&a, &[3, 4], 7).unwrap();
        assert_eq!(x, vec![1, 1]);
    }
}
