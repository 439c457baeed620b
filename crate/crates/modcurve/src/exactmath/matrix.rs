//! Exact linear algebra over ℚ (fraction-free elimination) and over ℚ(ζ_N) by flattening.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::cyclo::{field, CyclotomicNumber};
use super::modp::{row_mod, EchelonMod};
use super::rational::{gcd_all, primitive_integer_vector, Rat};
use super::MathError;

/// Dense rational matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self, MathError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(MathError::Dimension("ragged rows".into()));
        }
        Ok(RatMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let v = rows.iter().map(|r| r.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect()).collect();
        Self::from_rows(v).expect("rectangular input")
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).filter(|(a, _)| !a.is_zero()).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, other: &RatMatrix) -> Result<RatMatrix, MathError> {
        if self.cols != other.rows {
            return Err(MathError::Dimension(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let cur = out.get(i, j) + a * b;
                        out.set(i, j, cur);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        RatMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn rank(&self) -> usize {
        self.cols - self.nullspace().len()
    }

    /// Basis of {v : M v = 0}.
    pub fn nullspace(&self) -> Vec<Vec<Rat>> {
        nullspace_int(self.row_vecs().iter().map(|r| primitive_integer_vector(r)).collect(), self.cols)
    }

    /// The unique solution of M x = b; errors if none or not unique.
    pub fn solve(&self, b: &[Rat]) -> Result<Vec<Rat>, MathError> {
        solve_unique(&self.row_vecs(), b, self.cols)
    }
}

/// Fraction-free Gauss–Jordan elimination on integer rows, with content removal after every step.
/// Returns the nonzero reduced rows with their pivot columns.
pub fn echelon_int(mut rows: Vec<Vec<BigInt>>, ncols: usize) -> Vec<(usize, Vec<BigInt>)> {
    rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    let mut done: Vec<(usize, Vec<BigInt>)> = Vec::new();
    for c in 0..ncols {
        if rows.is_empty() {
            break;
        }
        // smallest nonzero pivot keeps entries short
        let piv = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r[c].is_zero())
            .min_by_key(|(_, r)| r[c].bits())
            .map(|(i, _)| i);
        let Some(pi) = piv else { continue };
        let prow = rows.swap_remove(pi);
        let eliminate = |r: &mut Vec<BigInt>| {
            if r[c].is_zero() {
                return;
            }
            let g = r[c].gcd(&prow[c]);
            let f1 = &prow[c] / &g;
            let f2 = &r[c] / &g;
            for (x, y) in r.iter_mut().zip(prow.iter()) {
                *x = &*x * &f1 - &f2 * y;
            }
            let cont = gcd_all(r.iter());
            if !cont.is_zero() && !cont.is_one() {
                for x in r.iter_mut() {
                    *x /= &cont;
                }
            }
        };
        for r in rows.iter_mut() {
            eliminate(r);
        }
        for (_, r) in done.iter_mut() {
            eliminate(r);
        }
        rows.retain(|r| r.iter().any(|x| !x.is_zero()));
        done.push((c, prow));
    }
    done
}

/// Null space from fraction-free reduced rows.
pub fn nullspace_int(rows: Vec<Vec<BigInt>>, ncols: usize) -> Vec<Vec<Rat>> {
    let ech = echelon_int(rows, ncols);
    nullspace_from_echelon(&ech, ncols)
}

fn nullspace_from_echelon(ech: &[(usize, Vec<BigInt>)], ncols: usize) -> Vec<Vec<Rat>> {
    let pivots: Vec<usize> = ech.iter().map(|(c, _)| *c).collect();
    let mut out = Vec::new();
    for free in 0..ncols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![Rat::zero(); ncols];
        v[free] = Rat::one();
        for (pc, row) in ech {
            if !row[free].is_zero() {
                v[*pc] = -Rat::new(row[free].clone(), row[*pc].clone());
            }
        }
        out.push(v);
    }
    out
}

fn dot_int(row: &[BigInt], v: &[BigInt]) -> BigInt {
    row.iter().zip(v).filter(|(a, b)| !a.is_zero() && !b.is_zero()).map(|(a, b)| a * b).sum()
}

/// A large Mersenne prime used for row selection.
pub const SELECT_PRIME: u64 = 2_305_843_009_213_693_951;

/// Null space of a tall integer system: rows are pre-selected by rank over 𝔽_p, the exact
/// null space of the selection is computed, and every candidate is re-checked against all rows.
pub fn nullspace_tall(rows: &[Vec<BigInt>], ncols: usize) -> Vec<Vec<Rat>> {
    let mut ech = EchelonMod::new(ncols, SELECT_PRIME);
    let mut chosen: Vec<usize> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if ech.insert(&row_mod(r, SELECT_PRIME)) {
            chosen.push(i);
            if ech.rank() == ncols {
                break;
            }
        }
    }
    loop {
        let sel: Vec<Vec<BigInt>> = chosen.iter().map(|&i| rows[i].clone()).collect();
        let ns = nullspace_int(sel, ncols);
        if ns.is_empty() {
            return ns;
        }
        let ints: Vec<Vec<BigInt>> = ns.iter().map(|v| primitive_integer_vector(v)).collect();
        let bad = rows
            .iter()
            .enumerate()
            .find(|(_, r)| ints.iter().any(|v| !dot_int(r, v).is_zero()))
            .map(|(i, _)| i);
        match bad {
            None => return ns,
            Some(i) => chosen.push(i),
        }
    }
}

/// Unique solution of an overdetermined but consistent rational system.
pub fn solve_unique(rows: &[Vec<Rat>], b: &[Rat], ncols: usize) -> Result<Vec<Rat>, MathError> {
    let aug: Vec<Vec<BigInt>> = rows
        .iter()
        .zip(b)
        .map(|(r, x)| {
            let mut v = r.clone();
            v.push(-x.clone());
            primitive_integer_vector(&v)
        })
        .collect();
    let ns = nullspace_tall(&aug, ncols + 1);
    match ns.len() {
        0 => Err(MathError::Inconsistent),
        1 => {
            let v = &ns[0];
            if v[ncols].is_zero() {
                return Err(MathError::Inconsistent);
            }
            let s = v[ncols].clone();
            Ok(v[..ncols].iter().map(|x| x / &s).collect())
        }
        _ => Err(MathError::Singular),
    }
}

/// Null space over ℚ of rows with rational entries, for tall systems.
pub fn nullspace_rat_tall(rows: &[Vec<Rat>], ncols: usize) -> Vec<Vec<Rat>> {
    let ints: Vec<Vec<BigInt>> = rows.iter().map(|r| primitive_integer_vector(r)).collect();
    nullspace_tall(&ints, ncols)
}

/// Writes the ℚ(ζ_N)-linear system as a ℚ-linear one in the coordinates of the unknowns.
pub fn flatten_cyclo(rows: &[Vec<CyclotomicNumber>], n: u32) -> Vec<Vec<Rat>> {
    let phi = field(n).phi;
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut out = Vec::with_capacity(rows.len() * phi);
    for r in rows {
        let mut block = vec![vec![Rat::zero(); ncols * phi]; phi];
        for (j, a) in r.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for k in 0..phi {
                let prod = a * &CyclotomicNumber::zeta_pow(n, k as i64);
                for (m, c) in prod.coeffs().iter().enumerate() {
                    block[m][j * phi + k] = c.clone();
                }
            }
        }
        out.extend(block);
    }
    out
}

/// ℚ(ζ_N)-basis of the null space of a cyclotomic matrix.
pub fn nullspace_cyclo(rows: &[Vec<CyclotomicNumber>], ncols: usize, n: u32) -> Vec<Vec<CyclotomicNumber>> {
    let phi = field(n).phi;
    let flat = flatten_cyclo(rows, n);
    let qbasis = if flat.is_empty() {
        (0..ncols * phi)
            .map(|i| {
                let mut v = vec![Rat::zero(); ncols * phi];
                v[i] = Rat::one();
                v
            })
            .collect()
    } else {
        nullspace_rat_tall(&flat, ncols * phi)
    };
    let to_cyclo = |v: &[Rat]| -> Vec<CyclotomicNumber> {
        (0..ncols).map(|j| CyclotomicNumber::from_coeffs(n, v[j * phi..(j + 1) * phi].to_vec()).expect("length φ")).collect()
    };
    let to_flat = |v: &[CyclotomicNumber]| -> Vec<Rat> { v.iter().flat_map(|c| c.coeffs().to_vec()).collect() };
    // keep vectors outside the ℚ(ζ)-span of those already kept
    let mut kept: Vec<Vec<CyclotomicNumber>> = Vec::new();
    let mut span: Vec<Vec<BigInt>> = Vec::new();
    for v in qbasis {
        let mut trial = span.clone();
        trial.push(primitive_integer_vector(&v));
        if echelon_int(trial, ncols * phi).len() == span.len() {
            continue;
        }
        let cv = to_cyclo(&v);
        for k in 0..phi {
            let z = CyclotomicNumber::zeta_pow(n, k as i64);
            let shifted: Vec<CyclotomicNumber> = cv.iter().map(|c| c * &z).collect();
            span.push(primitive_integer_vector(&to_flat(&shifted)));
        }
        kept.push(cv);
    }
    kept
}

pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn max_abs_bits(rows: &[Vec<BigInt>]) -> u64 {
    rows.iter().flat_map(|r| r.iter()).map(|x| x.abs().bits()).max().unwrap_or(0)
}
