//! Hecke operators T(p)·[p,0;0,1]* on the span of a bundle's weight-2 cusp forms, and
//! isolation of the eigenform attached to an isogeny class.
//!
//! The image of Σ a(n) q^{n/w} is Σ σ(a(pn)) q^{n/w} + Σ b(n) q^{pn/w}, where σ sends
//! ζ_N to ζ_N^k with kp ≡ 1 (mod N). The b(n) are unknown, so the matrix is pinned down
//! from the indices n with p ∤ n alone.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::bundle::CurveBundle;
use crate::exactmath::matrix::{nullspace_rat_tall, solve_unique};
use crate::exactmath::modp::{invmod, is_prime};
use crate::exactmath::{MathError, Rat, RatMatrix};
use crate::qexp::{FracQSeries, SeriesError};

/// Default upper bound for the prime search of [`isolate_eigenform`].
pub const DEFAULT_PRIME_BOUND: u64 = 50;

#[derive(Debug, Error)]
pub enum HeckeError {
    #[error("p = {p} divides the level {level}")]
    BadPrime { p: u64, level: u32 },
    #[error("T({p}) is undetermined: the p∤n coefficients have rank {rank} < {genus}; increase the precision")]
    InsufficientPrecision { p: u64, rank: usize, genus: usize },
    #[error("T({p}) does not preserve the rational span of the basis")]
    NotRational { p: u64 },
    #[error("kernel intersection for {class} has dimension {dim}, not {target}, after primes up to {bound}")]
    NoEigenform { class: String, dim: usize, target: usize, bound: u64 },
    #[error("multiplicity must be at least 1")]
    ZeroMultiplicity,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Matrix of T(p)·[p,0;0,1]* on coefficient vectors: column i holds the coordinates of the
/// image of the i-th basis form.
#[derive(Clone, Debug, PartialEq)]
pub struct HeckeMatrix {
    pub p: u64,
    pub matrix: RatMatrix,
}

impl HeckeMatrix {
    pub fn apply(&self, v: &[Rat]) -> Vec<Rat> {
        self.matrix.mul_vec(v)
    }

    /// Basis of ker(T(p) − a).
    pub fn eigenspace(&self, a: i64) -> Vec<Vec<Rat>> {
        shifted(&self.matrix, a).nullspace()
    }
}

fn shifted(m: &RatMatrix, a: i64) -> RatMatrix {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        out.set(i, i, m.get(i, i) - Rat::from_integer(BigInt::from(a)));
    }
    out
}

/// Primes p ∤ level in increasing order up to `bound`.
pub fn good_primes(level: u32, bound: u64) -> Vec<u64> {
    (2..=bound).filter(|&p| is_prime(p) && !(level as u64).is_multiple_of(p)).collect()
}

pub fn hecke_matrix(bundle: &CurveBundle, p: u64) -> Result<HeckeMatrix, HeckeError> {
    hecke_matrix_for(&bundle.forms, bundle.level, p)
}

/// T(p) on the span of `forms` (`forms[i][j]` = form i at cusp j).
pub fn hecke_matrix_for(forms: &[Vec<FracQSeries>], level: u32, p: u64) -> Result<HeckeMatrix, HeckeError> {
    if (level as u64).is_multiple_of(p) {
        return Err(HeckeError::BadPrime { p, level });
    }
    let g = forms.len();
    if g == 0 {
        return Ok(HeckeMatrix { p, matrix: RatMatrix::zeros(0, 0) });
    }
    let k = invmod(p % level as u64, level as u64).unwrap_or(0) as i64;
    let ncusps = forms[0].len();
    // one equation per (cusp, n with p ∤ n and pn known, ℚ-coordinate)
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Vec<Rat>> = vec![Vec::new(); g];
    for j in 0..ncusps {
        let prec = forms.iter().map(|f| f[j].prec()).min().unwrap_or(0);
        let start = forms.iter().map(|f| f[j].start()).min().unwrap_or(0).max(1);
        for n in start.. {
            if p as i64 * n >= prec {
                break;
            }
            if n % p as i64 == 0 {
                continue;
            }
            let here: Vec<_> = forms.iter().map(|f| f[j].coeff(n)).collect();
            let images: Vec<_> = forms
                .iter()
                .map(|f| f[j].coeff(p as i64 * n).galois_twist(k))
                .collect::<Result<_, _>>()?;
            let phi = here[0].coeffs().len();
            for c in 0..phi {
                rows.push(here.iter().map(|x| x.coeffs()[c].clone()).collect());
                for (i, im) in images.iter().enumerate() {
                    rhs[i].push(im.coeffs()[c].clone());
                }
            }
        }
    }
    let rank = RatMatrix::from_rows(rows.clone()).map(|m| m.rank()).unwrap_or(0);
    if rank < g {
        return Err(HeckeError::InsufficientPrecision { p, rank, genus: g });
    }
    let mut m = RatMatrix::zeros(g, g);
    for (i, b) in rhs.iter().enumerate() {
        let col = solve_unique(&rows, b, g).map_err(|e| match e {
            MathError::Inconsistent => HeckeError::NotRational { p },
            other => HeckeError::Math(other),
        })?;
        for (r, x) in col.into_iter().enumerate() {
            m.set(r, i, x);
        }
    }
    Ok(HeckeMatrix { p, matrix: m })
}

/// Basis of ∩_p ker(T(p) − a_p) over the given (p, a_p) pairs.
pub fn common_eigenspace(mats: &[(&HeckeMatrix, i64)], g: usize) -> Vec<Vec<Rat>> {
    if g == 0 {
        return Vec::new();
    }
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for (m, a) in mats {
        rows.extend(shifted(&m.matrix, *a).row_vecs());
    }
    if rows.is_empty() {
        return (0..g).map(|i| (0..g).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()).collect();
    }
    nullspace_rat_tall(&rows, g)
}

/// Σ v_i forms[i][j] for every cusp j.
pub fn combine(forms: &[Vec<FracQSeries>], v: &[Rat]) -> Result<Vec<FracQSeries>, HeckeError> {
    let ncusps = forms[0].len();
    (0..ncusps)
        .map(|j| {
            let mut acc: Option<FracQSeries> = None;
            for (f, c) in forms.iter().zip(v) {
                if c.is_zero() {
                    continue;
                }
                let t = f[j].scale_rat(c);
                acc = Some(match acc {
                    None => t,
                    Some(a) => a.add(&t)?,
                });
            }
            Ok(acc.unwrap_or_else(|| forms[0][j].scale_rat(&Rat::zero())))
        })
        .collect()
}

/// Rescales v so that the expansion of Σ v_i f_i at the first cusp (∞) has coefficients in
/// ℤ[ζ_N] with no common rational prime divisor, its first nonzero coordinate positive.
/// Galois-conjugate cusps share that content; a cusp like 0 on X₀(N) carries the 1/N of the
/// SL₂(ℤ) slash and is left as is.
fn normalize(forms: &[Vec<FracQSeries>], v: &[Rat]) -> Result<Vec<Rat>, HeckeError> {
    let f = combine(forms, v)?;
    let f = &f[..1];
    let mut lcm = BigInt::one();
    let mut first: Option<Rat> = None;
    for s in f {
        for n in s.start()..s.prec() {
            for c in s.coeff(n).coeffs() {
                if !c.is_zero() {
                    lcm = lcm.lcm(c.denom());
                    if first.is_none() {
                        first = Some(c.clone());
                    }
                }
            }
        }
    }
    let mut gcd = BigInt::zero();
    for s in f {
        for n in s.start()..s.prec() {
            for c in s.coeff(n).coeffs() {
                if !c.is_zero() {
                    gcd = gcd.gcd(&(c * Rat::from_integer(lcm.clone())).to_integer());
                }
            }
        }
    }
    if gcd.is_zero() {
        return Ok(v.to_vec());
    }
    let mut scale = Rat::new(lcm, gcd);
    if first.is_some_and(|c| c.is_negative()) {
        scale = -scale;
    }
    Ok(v.iter().map(|x| x * &scale).collect())
}

/// The isolated eigenform: its coordinates in the bundle basis and its expansion at every cusp.
#[derive(Clone, Debug)]
pub struct Eigenform {
    pub coords: Vec<Rat>,
    pub expansions: Vec<FracQSeries>,
    /// Primes used to cut the space down, with the eigenvalues imposed.
    pub primes: Vec<(u64, i64)>,
}

/// Intersects ker(T(p) − a_p(E)) over p ∤ N in increasing order until the dimension drops to
/// `multiplicity`, then returns the first basis vector normalized as in `normalize`.
pub fn isolate_eigenform(
    bundle: &CurveBundle,
    class: &str,
    ap: impl Fn(u64) -> i64,
    multiplicity: usize,
    bound: u64,
) -> Result<Eigenform, HeckeError> {
    isolate_eigenform_for(&bundle.forms, bundle.level, class, ap, multiplicity, bound)
}

pub fn isolate_eigenform_for(
    forms: &[Vec<FracQSeries>],
    level: u32,
    class: &str,
    ap: impl Fn(u64) -> i64,
    multiplicity: usize,
    bound: u64,
) -> Result<Eigenform, HeckeError> {
    if multiplicity == 0 {
        return Err(HeckeError::ZeroMultiplicity);
    }
    let g = forms.len();
    let mut mats = Vec::new();
    let mut used = Vec::new();
    let mut dim = g;
    for p in good_primes(level, bound) {
        let m = hecke_matrix_for(forms, level, p)?;
        let a = ap(p);
        mats.push((m, a));
        used.push((p, a));
        let refs: Vec<(&HeckeMatrix, i64)> = mats.iter().map(|(m, a)| (m, *a)).collect();
        let basis = common_eigenspace(&refs, g);
        dim = basis.len();
        if dim == multiplicity {
            let coords = normalize(forms, &basis[0])?;
            let expansions = combine(forms, &coords)?;
            return Ok(Eigenform { coords, expansions, primes: used });
        }
        if dim < multiplicity {
            break;
        }
    }
    Err(HeckeError::NoEigenform { class: class.to_string(), dim, target: multiplicity, bound })
}
