mod common;

use common::spec;
use eulerlaw::moments::{
    central_moment_recurrence, factorial_moment_recurrence, general_mv_recurrence, mean_closed_form, mean_recurrence,
    moments_from_rows, moments_of_row, summaries_csv, MeanParams, MeanValue, MomentError,
};
use eulerlaw::poly::Poly;
use eulerlaw::rational::{rat, ri, Rational};
use eulerlaw::recurrence::{canonicalize, catalog_spec, generate_rows, FamilyId};
use proptest::prelude::*;

#[test]
fn row_moments_by_hand() {
    // 1 + 4v + v^2: mean 1, variance 1/3
    let s = moments_from_rows(&Poly::from_ints([1, 4, 1]), 4).unwrap();
    assert_eq!(s.total, ri(6));
    assert_eq!(s.mean, ri(1));
    assert_eq!(s.variance, rat(1, 3));
    assert_eq!(s.central[3], ri(0));
    assert_eq!(s.central[4], rat(1, 3));
    assert_eq!(s.factorial[2], rat(1, 3));
    assert_eq!(moments_from_rows(&Poly::from_ints([1, -1]), 2), Err(MomentError::NegativeCoefficient { k: 1 }));
    assert_eq!(moments_from_rows(&Poly::zero(), 2), Err(MomentError::ZeroRow));
}

#[test]
fn rencontres_factorial_moments_are_one() {
    let s = spec("a008290");
    let rows = generate_rows(&s, 12).unwrap();
    for (n, r) in rows.iter().enumerate() {
        let f = moments_of_row(n as i64, r, 4).unwrap().factorial;
        for (m, q) in f.iter().enumerate().take(5) {
            let want = if m <= n { ri(1) } else { ri(0) };
            assert_eq!(q, &want, "n = {n}, m = {m}");
        }
    }
}

#[test]
fn factorial_recurrence_matches_rows() {
    for name in ["a008290", "a065600", "a039598", "a193229", "a091441", "a202550"] {
        let s = spec(name);
        let cf = canonicalize(&s);
        let nn = cf.nn_params().unwrap();
        let q = factorial_moment_recurrence::<Rational>(&nn, cf.start, &cf.initial, 4, 25, true).unwrap();
        let rows = generate_rows(&s, 25).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let n = s.start + i as i64;
            assert_eq!(q[i][..5], moments_of_row(n, r, 4).unwrap().factorial[..5], "{name}, n = {n}");
        }
    }
}

#[test]
fn general_mean_variance_handles_parity_classes() {
    let s = spec("a244312");
    let (means, vars) = general_mv_recurrence(&s, 40).unwrap();
    let rows = generate_rows(&s, 40).unwrap();
    for (i, r) in rows.iter().enumerate() {
        let m = moments_of_row(s.start + i as i64, r, 2).unwrap();
        assert_eq!((&means[i], &vars[i]), (&m.mean, &m.variance));
    }
}

#[test]
fn closed_form_branches() {
    // beta = 0 with alpha = 0: Pascal mean n/2
    let p = MeanParams::from_canonical(&canonicalize(&spec("pascal"))).unwrap();
    assert_eq!(mean_closed_form(&p, 10).unwrap(), MeanValue::Exact(ri(5)));
    // log-scale mean is a digamma difference: harmonic number
    let p = MeanParams::from_canonical(&canonicalize(&spec("stirling_cycle"))).unwrap();
    let h10: f64 = (1..=10).map(|j| 1.0 / j as f64).sum();
    assert!((mean_closed_form(&p, 10).unwrap().to_f64() - h10).abs() < 1e-12);
}

#[test]
fn csv_has_expected_header() {
    let rows = generate_rows(&spec("eulerian"), 3).unwrap();
    let sums: Vec<_> = rows.iter().enumerate().map(|(n, r)| moments_of_row(n as i64, r, 3).unwrap()).collect();
    let csv = summaries_csv(&sums, 3);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,total,mean,variance,central2,central3,factorial1,factorial2,factorial3"));
    assert_eq!(lines.last(), Some("3,6,1,1/3,1/3,0,1,1/3,0"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recurrences_agree_with_rows(p in 0i64..4, q in 1i64..4, r in 1i64..4) {
        prop_assume!(p <= q * r);
        let s = catalog_spec(FamilyId::A, &[ri(p), ri(q), ri(r)]).unwrap().spec;
        let cf = canonicalize(&s);
        let rows = generate_rows(&s, 25).unwrap();
        let means = mean_recurrence(&cf, 25).unwrap();
        let central = central_moment_recurrence(&cf, 4, 25).unwrap();
        let mp = MeanParams::from_canonical(&cf).unwrap();
        for (n, row) in rows.iter().enumerate() {
            let m = moments_of_row(n as i64, row, 4).unwrap();
            prop_assert_eq!(&means[n], &m.mean);
            prop_assert_eq!(&central[n][..5], &m.central[..5]);
            prop_assert_eq!(mean_closed_form(&mp, n as i64).unwrap(), MeanValue::Exact(m.mean.clone()));
        }
    }

    #[test]
    fn variance_is_nonnegative(cs in prop::collection::vec(0i64..50, 1..10)) {
        prop_assume!(cs.iter().any(|&c| c > 0));
        let s = moments_from_rows(&Poly::from_ints(cs), 4).unwrap();
        prop_assert!(s.variance >= ri(0));
        prop_assert!(s.central[4] >= &s.variance * &s.variance);
    }
}
