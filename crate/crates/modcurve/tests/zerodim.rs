//! Hensel solver against planted points and a height-bounded brute-force search.

mod common;

use common::{general_position, quadrics_through};
use num_bigint::BigInt;
use proptest::prelude::*;

use modcurve::exactmath::Rat;
use modcurve::ratpoints::{normalize_point, point_search, solve_zerodim, SolveConfig, ZeroDimScheme};

fn scheme() -> impl Strategy<Value = (usize, Vec<Vec<i64>>)> {
    (3usize..=4).prop_flat_map(|n| {
        let pt = prop::collection::vec(-3i64..=3, n).prop_filter("nonzero", |v| v.iter().any(|&x| x != 0));
        (Just(n), prop::collection::vec(pt, 1..=n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, max_global_rejects: 10_000, ..ProptestConfig::default() })]
    #[test]
    fn planted_points_match_brute_force((n, pts) in scheme()) {
        prop_assume!(general_position(&pts));
        let polys = quadrics_through(n, &pts);
        let z = ZeroDimScheme { nvars: n, polys: polys.clone(), target: None };
        let r = solve_zerodim(&z, 1, &SolveConfig::default()).unwrap();
        let mut planted: Vec<Vec<BigInt>> =
            pts.iter().map(|p| normalize_point(&p.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())).collect();
        planted.sort();
        let mut brute = point_search(&polys, n, 6);
        brute.sort();
        prop_assert_eq!(&brute, &planted);
        prop_assert_eq!(&r.points, &planted);
        prop_assert!(r.complete, "bounds did not meet: {:?}", r);
        for p in &r.points {
            prop_assert!(polys.iter().all(|f| f.eval_int(p) == Rat::from_integer(0.into())));
        }
    }
}
