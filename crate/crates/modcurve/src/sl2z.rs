//! SL₂(ℤ): words in S and T, lifts from SL₂(ℤ/N), random elements of the principal
//! congruence subgroup, and the coset bookkeeping that locates f|g among the stored
//! cusp expansions.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use num_integer::Integer;
use rand::Rng;
use thiserror::Error;

use crate::exactmath::modp::prime_factors;
use crate::mpc::Complex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Sl2zError {
    #[error("determinant is {0}, not 1")]
    NotDetOne(i64),
    #[error("determinant is {0} mod {1}, not 1")]
    DetNotOneModN(i64, u32),
    #[error("integer overflow in matrix arithmetic")]
    Overflow,
    #[error("matrix {0} is not in any listed coset Γ·α_j·T^b")]
    CuspNotFound(MatZ),
    #[error("cusp data inconsistent: {0}")]
    InconsistentCosets(String),
}

/// [[a, b], [c, d]] with ad − bc = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatZ {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl fmt::Display for MatZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl MatZ {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, Sl2zError> {
        let det = (a as i128) * (d as i128) - (b as i128) * (c as i128);
        if det != 1 {
            return Err(Sl2zError::NotDetOne(det.clamp(i64::MIN as i128, i64::MAX as i128) as i64));
        }
        Ok(MatZ { a, b, c, d })
    }

    pub fn from_array(e: [i64; 4]) -> Result<Self, Sl2zError> {
        Self::new(e[0], e[1], e[2], e[3])
    }

    pub fn to_array(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub const IDENTITY: MatZ = MatZ { a: 1, b: 0, c: 0, d: 1 };
    pub const S: MatZ = MatZ { a: 0, b: -1, c: 1, d: 0 };

    pub fn t(e: i64) -> Self {
        MatZ { a: 1, b: e, c: 0, d: 1 }
    }

    pub fn checked_mul(&self, o: &MatZ) -> Option<MatZ> {
        let m = |x: i64, y: i64, u: i64, v: i64| -> Option<i64> {
            i64::try_from(x as i128 * y as i128 + u as i128 * v as i128).ok()
        };
        Some(MatZ {
            a: m(self.a, o.a, self.b, o.c)?,
            b: m(self.a, o.b, self.b, o.d)?,
            c: m(self.c, o.a, self.d, o.c)?,
            d: m(self.c, o.b, self.d, o.d)?,
        })
    }

    /// Product; panics on i64 overflow.
    pub fn mul(&self, o: &MatZ) -> MatZ {
        self.checked_mul(o).expect("SL2(Z) product overflowed i64")
    }

    pub fn inverse(&self) -> MatZ {
        MatZ { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn neg(&self) -> MatZ {
        MatZ { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    pub fn is_pm_identity_mod(&self, n: u32) -> bool {
        let r = self.reduce(n);
        let one = MatN::identity(n);
        r == one || r == one.neg()
    }

    pub fn reduce(&self, n: u32) -> MatN {
        let n64 = n as i64;
        MatN {
            n,
            e: [self.a, self.b, self.c, self.d].map(|x| x.rem_euclid(n64) as u32),
        }
    }

    /// Möbius action on the upper half-plane.
    pub fn act(&self, z: &Complex) -> Complex {
        let num = z.mul_i64(self.a).add(&Complex::from_i64(self.b, z.prec()));
        let den = z.mul_i64(self.c).add(&Complex::from_i64(self.d, z.prec()));
        num.div(&den)
    }

    /// Image of the cusp ∞, as a reduced fraction a/c (c ≥ 0; ∞ is 1/0).
    pub fn cusp_of_infinity(&self) -> (i64, i64) {
        if self.c < 0 {
            (-self.a, -self.c)
        } else {
            (self.a, self.c)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    S,
    T(i64),
}

/// g = sign · w₁ w₂ ⋯ w_k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct STWord {
    pub sign: i8,
    pub letters: Vec<Letter>,
}

impl STWord {
    pub fn recompose(&self) -> MatZ {
        let mut m = MatZ::IDENTITY;
        for l in &self.letters {
            m = m.mul(&match l {
                Letter::S => MatZ::S,
                Letter::T(e) => MatZ::t(*e),
            });
        }
        if self.sign < 0 {
            m.neg()
        } else {
            m
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl fmt::Display for STWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign < 0 {
            write!(f, "-")?;
        }
        if self.letters.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| match l {
                Letter::S => "S".to_string(),
                Letter::T(e) => format!("T^{e}"),
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Euclidean algorithm on the bottom row: peel T^e and S off the right until c = 0.
pub fn st_decompose(g: &MatZ) -> STWord {
    let (mut a, mut b, mut c, mut d) = (g.a as i128, g.b as i128, g.c as i128, g.d as i128);
    let mut rev = Vec::new();
    while c != 0 {
        let e = Integer::div_floor(&d, &c);
        if e != 0 {
            rev.push(Letter::T(e as i64));
            b -= e * a;
            d -= e * c;
        }
        // right-multiply by S⁻¹
        (a, b, c, d) = (-b, a, -d, c);
        rev.push(Letter::S);
    }
    // now [[a, b], [0, a]] with a = ±1
    let sign = a as i8;
    if b * a != 0 {
        rev.push(Letter::T((b * a) as i64));
    }
    rev.reverse();
    STWord { sign, letters: rev }
}

/// Element of SL₂(ℤ/N).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatN {
    pub n: u32,
    pub e: [u32; 4],
}

impl MatN {
    pub fn new(n: u32, e: [i64; 4]) -> Self {
        MatN { n, e: e.map(|x| x.rem_euclid(n as i64) as u32) }
    }

    pub fn identity(n: u32) -> Self {
        Self::new(n, [1, 0, 0, 1])
    }

    pub fn det(&self) -> u32 {
        let n = self.n as u64;
        let [a, b, c, d] = self.e.map(|x| x as u64);
        ((a * d % n + n * n - b * c % n) % n) as u32
    }

    pub fn mul(&self, o: &MatN) -> MatN {
        let n = self.n as u64;
        let [a, b, c, d] = self.e.map(|x| x as u64);
        let [p, q, r, s] = o.e.map(|x| x as u64);
        MatN {
            n: self.n,
            e: [(a * p + b * r) % n, (a * q + b * s) % n, (c * p + d * r) % n, (c * q + d * s) % n].map(|x| x as u32),
        }
    }

    pub fn neg(&self) -> MatN {
        let n = self.n;
        MatN { n, e: self.e.map(|x| (n - x) % n) }
    }

    /// Inverse of a determinant-1 element.
    pub fn inverse(&self) -> MatN {
        let n = self.n;
        let [a, b, c, d] = self.e;
        MatN { n, e: [d, (n - b) % n, (n - c) % n, a] }
    }

    fn key(&self) -> u64 {
        let n = self.n as u64;
        let [a, b, c, d] = self.e.map(|x| x as u64);
        ((a * n + b) * n + c) * n + d
    }
}

/// |SL₂(ℤ/N)| = N³ ∏_{p | N} (1 − p⁻²).
pub fn sl2_order(n: u32) -> u64 {
    let mut r = (n as u64).pow(3);
    for p in prime_factors(n as u64) {
        r = r / (p * p) * (p * p - 1);
    }
    r
}

/// A determinant-1 integer matrix reducing to `e` modulo N.
pub fn lift_slnz(e: [i64; 4], n: u32) -> Result<MatZ, Sl2zError> {
    let nn = n as i64;
    if n == 1 {
        return Ok(MatZ::IDENTITY);
    }
    let [a0, b0, c0, d0] = e.map(|x| x.rem_euclid(nn));
    let det = (a0 as i128 * d0 as i128 - b0 as i128 * c0 as i128).rem_euclid(nn as i128) as i64;
    if det != 1 % nn {
        return Err(Sl2zError::DetNotOneModN(det, n));
    }
    // bottom row (c, d) with gcd 1, same residues
    let c = if c0 == 0 { nn } else { c0 };
    let mut d = d0;
    while c.gcd(&d) != 1 {
        d += nn;
    }
    // a'd − b'c = 1
    let eg = d.extended_gcd(&c);
    let (a1, b1) = (eg.x, -eg.y);
    debug_assert_eq!(a1 as i128 * d as i128 - b1 as i128 * c as i128, 1);
    // shift (a1, b1) by k·(c, d) to match a0, b0
    let eg2 = c.extended_gcd(&d);
    let (r, s) = (eg2.x, eg2.y);
    let u = (a0 - a1).rem_euclid(nn) as i128;
    let v = (b0 - b1).rem_euclid(nn) as i128;
    let k = ((u * r as i128 + v * s as i128).rem_euclid(nn as i128)) as i64;
    let m = MatZ::new(a1 + k * c, b1 + k * d, c, d)?;
    debug_assert_eq!(m.reduce(n), MatN::new(n, e));
    Ok(m)
}

/// Random elements of ±Γ(N): a random S/T word w times a short lift of w⁻¹ mod N,
/// kept only when the result decomposes into at most `max_len` letters.
pub fn random_kernel_words<R: Rng>(n: u32, count: usize, max_len: usize, rng: &mut R) -> Vec<MatZ> {
    let mut out = Vec::with_capacity(count);
    let mut budget = max_len.max(2);
    let mut failures = 0;
    while out.len() < count {
        let len = rng.gen_range(1..=budget / 2 + 1);
        let mut w = MatZ::IDENTITY;
        let mut ok = true;
        for i in 0..len {
            let letter = if i % 2 == 0 {
                let mut e = rng.gen_range(-3i64..=3);
                if e == 0 {
                    e = 1;
                }
                MatZ::t(e)
            } else {
                MatZ::S
            };
            match w.checked_mul(&letter) {
                Some(m) => w = m,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let g = if ok {
            lift_slnz(w.reduce(n).inverse().e.map(|x| x as i64), n).ok().and_then(|l| w.checked_mul(&l))
        } else {
            None
        };
        match g {
            Some(g) if g != MatZ::IDENTITY && g != MatZ::IDENTITY.neg() && st_decompose(&g).len() <= max_len => {
                out.push(g);
                failures = 0;
            }
            _ => {
                failures += 1;
                if failures > 20 && budget > 4 {
                    budget -= 2;
                    failures = 0;
                }
            }
        }
    }
    out
}

/// Precomputed map SL₂(ℤ/N) → (cusp j, shift b, sign) with ḡ = sign·γ·α_j·T^b, γ ∈ Γ̄.
#[derive(Clone, Debug)]
pub struct CosetTable {
    n: u32,
    widths: Vec<u32>,
    group: HashSet<MatN>,
    has_minus_one: bool,
    map: HashMap<u64, (usize, u32, i8)>,
}

impl CosetTable {
    /// `gens` generate the image Γ̄ of Γ in SL₂(ℤ/N); `cusps` are (α_j, w_j).
    pub fn new(n: u32, gens: &[MatZ], cusps: &[(MatZ, u32)]) -> Result<Self, Sl2zError> {
        let group = closure(n, gens);
        let minus = MatN::identity(n).neg();
        let has_minus_one = group.contains(&minus);
        let mut map: HashMap<u64, (usize, u32, i8)> = HashMap::new();
        for (j, (alpha, w)) in cusps.iter().enumerate() {
            if *w == 0 {
                return Err(Sl2zError::InconsistentCosets(format!("cusp {j} has width 0")));
            }
            let ar = alpha.reduce(n);
            for b in 0..*w {
                let x = ar.mul(&MatZ::t(b as i64).reduce(n));
                for gamma in &group {
                    let y = gamma.mul(&x);
                    for (m, sign) in [(y, 1i8), (y.neg(), -1i8)] {
                        let entry = (j, b, sign);
                        match map.get(&m.key()) {
                            Some(&(j2, b2, _)) if (j2, b2) != (j, b) => {
                                return Err(Sl2zError::InconsistentCosets(format!(
                                    "cosets of cusp {j} (shift {b}) and cusp {j2} (shift {b2}) overlap"
                                )));
                            }
                            Some(_) => {}
                            None => {
                                map.insert(m.key(), entry);
                            }
                        }
                    }
                }
            }
        }
        let group = group.into_iter().collect();
        Ok(CosetTable { n, widths: cusps.iter().map(|c| c.1).collect(), group, has_minus_one, map })
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    /// |Γ̄| inside SL₂(ℤ/N).
    pub fn group_order(&self) -> usize {
        self.group.len()
    }

    pub fn contains_minus_one(&self) -> bool {
        self.has_minus_one
    }

    /// [SL₂(ℤ) : Γ].
    pub fn index(&self) -> u64 {
        sl2_order(self.n) / self.group.len() as u64
    }

    /// True when every element of SL₂(ℤ/N) lands in some listed coset.
    pub fn covers_all(&self) -> bool {
        self.map.len() as u64 == sl2_order(self.n)
    }

    /// Whether g reduces into ±Γ̄.
    pub fn in_gamma(&self, g: &MatZ) -> bool {
        let r = g.reduce(self.n);
        self.group.contains(&r) || self.group.contains(&r.neg())
    }

    /// (j, b, sign) with g ≡ sign·γ·α_j·T^b mod N, so f|g = (f|α_j)(τ + b).
    pub fn cusp_normalize(&self, g: &MatZ) -> Result<(usize, u32, i8), Sl2zError> {
        self.map.get(&g.reduce(self.n).key()).copied().ok_or(Sl2zError::CuspNotFound(*g))
    }
}

/// All products of the generators (and their inverses) in SL₂(ℤ/N).
fn closure(n: u32, gens: &[MatZ]) -> Vec<MatN> {
    let gs: Vec<MatN> = gens.iter().map(|g| g.reduce(n)).collect();
    let start = MatN::identity(n);
    let mut seen: HashSet<MatN> = HashSet::from([start]);
    let mut order = vec![start];
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for g in &gs {
            for y in [x.mul(g), x.mul(&g.inverse())] {
                if seen.insert(y) {
                    order.push(y);
                    queue.push_back(y);
                }
            }
        }
    }
    order
}

/// Cusp-normalization as a free function over a prebuilt table.
pub fn cusp_normalize(g: &MatZ, table: &CosetTable) -> Result<(usize, u32, i8), Sl2zError> {
    table.cusp_normalize(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gens36() -> Vec<MatZ> {
        [[17, 144, 36, 305], [23, 394, 15, 257], [12, -53, 17, -75], [31, 143, 13, 60], [19, -180, 36, -341]]
            .iter()
            .map(|e| MatZ::from_array(*e).unwrap())
            .collect()
    }

    fn cusps36() -> Vec<(MatZ, u32)> {
        vec![
            (MatZ::IDENTITY, 36),
            (MatZ::new(5, 4, 36, 29).unwrap(), 36),
            (MatZ::new(7, 6, 36, 31).unwrap(), 36),
        ]
    }

    #[test]
    fn trivial_words() {
        assert_eq!(st_decompose(&MatZ::IDENTITY), STWord { sign: 1, letters: vec![] });
        assert_eq!(st_decompose(&MatZ::t(5)), STWord { sign: 1, letters: vec![Letter::T(5)] });
        let w = st_decompose(&MatZ::S);
        assert_eq!(w.recompose(), MatZ::S);
    }

    #[test]
    fn generator_word_matches_published_decomposition() {
        let g = MatZ::new(17, 144, 36, 305).unwrap();
        let w = st_decompose(&g);
        let mut expected = vec![Letter::S, Letter::T(-3)];
        for _ in 0..7 {
            expected.extend([Letter::S, Letter::T(-2)]);
        }
        expected.extend([Letter::S, Letter::T(-3), Letter::S, Letter::T(8)]);
        assert_eq!(w, STWord { sign: -1, letters: expected });
        assert_eq!(w.recompose(), g);
    }

    fn random_sl2<R: rand::Rng>(rng: &mut R, bound: i64) -> MatZ {
        loop {
            let c = rng.gen_range(-bound..=bound);
            let d = rng.gen_range(-bound..=bound);
            if c.gcd(&d) != 1 {
                continue;
            }
            let eg = d.extended_gcd(&c);
            let (a, b) = (eg.x, -eg.y);
            let k = rng.gen_range(-3..=3);
            return MatZ::new(a + k * c, b + k * d, c, d).unwrap();
        }
    }

    #[test]
    fn round_trip_thousand_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let g = random_sl2(&mut rng, 1_000_000);
            assert_eq!(st_decompose(&g).recompose(), g);
        }
    }

    proptest! {
        #[test]
        fn lift_reduces_correctly(n in 2u32..60, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_sl2(&mut rng, 10_000);
            let gbar = g.reduce(n);
            let l = lift_slnz(gbar.e.map(|x| x as i64), n).unwrap();
            prop_assert_eq!(l.reduce(n), gbar);
            prop_assert_eq!(l.a as i128 * l.d as i128 - l.b as i128 * l.c as i128, 1);
        }
    }

    #[test]
    fn lift_rejects_bad_determinant() {
        assert!(matches!(lift_slnz([2, 0, 0, 1], 5), Err(Sl2zError::DetNotOneModN(2, 5))));
        assert_eq!(lift_slnz([1, 0, 0, 1], 36).unwrap().reduce(36), MatN::identity(36));
        let l = lift_slnz([17, 144, 36, 305], 36).unwrap();
        assert_eq!(l.reduce(36), MatZ::new(17, 144, 36, 305).unwrap().reduce(36));
    }

    #[test]
    fn kernel_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(random_kernel_words(36, 0, 50, &mut rng).is_empty());
        let ws = random_kernel_words(36, 15, 50, &mut rng);
        assert_eq!(ws.len(), 15);
        for g in &ws {
            assert!(g.is_pm_identity_mod(36));
            let w = st_decompose(g);
            assert!(w.len() <= 50);
            assert_eq!(w.recompose(), *g);
        }
    }

    #[test]
    fn coset_table_for_level_36() {
        let t = CosetTable::new(36, &gens36(), &cusps36()).unwrap();
        assert_eq!(sl2_order(36), 31104);
        assert_eq!(t.group_order(), 288);
        assert_eq!(t.index(), 108);
        assert!(t.covers_all());
        for (j, (alpha, _)) in cusps36().iter().enumerate() {
            assert_eq!(t.cusp_normalize(alpha).unwrap(), (j, 0, 1));
            assert_eq!(t.cusp_normalize(&alpha.mul(&MatZ::t(1))).unwrap(), (j, 1, 1));
        }
        for g in gens36() {
            let (j, b, _) = t.cusp_normalize(&g).unwrap();
            assert_eq!((j, b), (0, 0));
        }
    }

    #[test]
    fn coset_table_for_gamma0_11() {
        let gens = [MatZ::t(1), MatZ::new(1, 0, 11, 1).unwrap(), MatZ::new(-1, 0, 0, -1).unwrap(), MatZ::new(2, 1, 11, 6).unwrap()];
        let cusps = vec![(MatZ::IDENTITY, 1), (MatZ::S, 11)];
        let t = CosetTable::new(11, &gens, &cusps).unwrap();
        assert_eq!(t.group_order(), 110);
        assert_eq!(t.index(), 12);
        assert!(t.covers_all());
    }

    #[test]
    fn recomposition_of_normalization() {
        // α_j·T^b ≡ ±γ⁻¹·g for some γ ∈ Γ̄: check by reducing γ = g·(α_j T^b)⁻¹ into the group
        let t = CosetTable::new(36, &gens36(), &cusps36()).unwrap();
        let group: HashSet<MatN> = closure(36, &gens36()).into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = random_sl2(&mut rng, 10_000);
            let (j, b, sign) = t.cusp_normalize(&g).unwrap();
            let h = cusps36()[j].0.mul(&MatZ::t(b as i64));
            let mut gamma = g.mul(&h.inverse()).reduce(36);
            if sign < 0 {
                gamma = gamma.neg();
            }
            assert!(group.contains(&gamma));
        }
    }

    #[test]
    fn overlapping_cusps_rejected() {
        let mut c = cusps36();
        c.push((MatZ::t(1), 36));
        assert!(matches!(CosetTable::new(36, &gens36(), &c), Err(Sl2zError::InconsistentCosets(_))));
    }
}
