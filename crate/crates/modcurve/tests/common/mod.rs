//! Planted zero-dimensional schemes shared by the solver suites.

use num_bigint::BigInt;

use modcurve::exactmath::poly::monomials;
use modcurve::exactmath::{HomogPoly, Rat, RatMatrix};

/// All quadrics through the given points. When no three points are collinear their common
/// zeros are exactly the points, each reduced.
pub fn quadrics_through(n: usize, pts: &[Vec<i64>]) -> Vec<HomogPoly> {
    let mons = monomials(n, 2);
    let rows: Vec<Vec<Rat>> = pts
        .iter()
        .map(|p| mons.iter().map(|e| Rat::from_integer(e.iter().zip(p).map(|(&k, &x)| BigInt::from(x).pow(k)).product())).collect())
        .collect();
    RatMatrix::from_rows(rows)
        .unwrap()
        .nullspace()
        .into_iter()
        .map(|v| HomogPoly::from_terms(n, mons.iter().cloned().zip(v).collect()).unwrap().clear_denominators())
        .collect()
}

fn rank(rows: &[&Vec<i64>]) -> usize {
    let m: Vec<Vec<Rat>> = rows.iter().map(|r| r.iter().map(|&x| Rat::from_integer(x.into())).collect()).collect();
    RatMatrix::from_rows(m).unwrap().rank()
}

/// Distinct projective points with no three collinear.
pub fn general_position(pts: &[Vec<i64>]) -> bool {
    let k = pts.len();
    for i in 0..k {
        for j in i + 1..k {
            if rank(&[&pts[i], &pts[j]]) < 2 {
                return false;
            }
            for l in j + 1..k {
                if rank(&[&pts[i], &pts[j], &pts[l]]) < 3 {
                    return false;
                }
            }
        }
    }
    true
}
