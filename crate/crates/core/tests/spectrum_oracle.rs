use dirac_eta::eta::d1_eigenvalues;
use dirac_eta::spectrum::*;
use dirac_eta::surface::{Sign, SpinStructure, SurfaceData};
use proptest::prelude::*;

fn params(r: f64) -> SpectralParams {
    SpectralParams::new(r).unwrap()
}

fn sorted2(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    // The principal block is Hermitian; compare with a generic Hermitian solver.
    #[test]
    fn principal_block_matches_eigensolver(r in 0.02f64..4.0, half_m in -10i64..10, tau in 0.0f64..8.0) {
        let p = params(r);
        let m = 2 * half_m;
        let blk = principal_block(&p, m, tau).unwrap();
        let eig = blk.symmetric_eigen();
        let (lo, hi) = sorted2(eig.eigenvalues[0], eig.eigenvalues[1]);
        let pair = principal_eigenvalues(&p, m, tau).unwrap();
        let scale = pair.lambda_plus.abs().max(pair.lambda_minus.abs()).max(1.0);
        prop_assert!((hi - pair.lambda_plus).abs() <= 1e-10 * scale);
        prop_assert!((lo - pair.lambda_minus).abs() <= 1e-10 * scale);
        prop_assert!(pair.residual(&p) <= 1e-9 * scale * scale);
    }

    #[test]
    fn discrete_block_matches_eigensolver(r in 0.02f64..4.0, half_n in 1i64..8, extra in 1i64..10) {
        let p = params(r);
        let n = 2 * half_n;
        let m = n + 2 * extra;
        let blk = discrete_block(&p, n, m).unwrap();
        let ev = blk.complex_eigenvalues();
        let pair = discrete_eigenvalues(&p, n, m).unwrap();
        let scale = pair.lambda_plus.abs().max(pair.lambda_minus.abs()).max(1.0);
        prop_assert!(ev[0].im.abs() <= 1e-10 * scale && ev[1].im.abs() <= 1e-10 * scale);
        let (lo, hi) = sorted2(ev[0].re, ev[1].re);
        prop_assert!((hi - pair.lambda_plus).abs() <= 1e-10 * scale);
        prop_assert!((lo - pair.lambda_minus).abs() <= 1e-10 * scale);
    }

    #[test]
    fn pair_sum_and_product(r in 0.05f64..3.0, half_m in -6i64..6, tau in 0.0f64..5.0) {
        let p = params(r);
        let m = 2 * half_m;
        let e = principal_eigenvalues(&p, m, tau).unwrap();
        let o = (m - 1) as f64;
        prop_assert!((e.lambda_plus + e.lambda_minus + r).abs() < 1e-12 * (1.0 + e.lambda_plus.abs()));
        let prod = r * r / 4.0 - o * o / (r * r) - o * o - 4.0 * tau * tau;
        prop_assert!((e.lambda_plus * e.lambda_minus - prod).abs() <= 1e-10 * prod.abs().max(1.0));
    }
}

#[test]
fn bnormal_gap_equals_closed_form() {
    for &r in &[0.05, 0.3, 1.0, 2.0] {
        let p = params(r);
        for m in -8i64..=8 {
            let (a, b) = band_gap(&p, m);
            let (x, y) = gap_from_bnormal(&p, m);
            assert!((a - x).abs() < 1e-12 * a.abs().max(1.0), "r={r} m={m}: {a} vs {x}");
            assert!((b - y).abs() < 1e-12 * b.abs().max(1.0), "r={r} m={m}: {b} vs {y}");
        }
    }
}

#[test]
fn band_parity_follows_fiber_sign() {
    let p = params(1.0);
    let mut spin = SpinStructure::with_trivial_cusps(0, 4, 2).unwrap();
    let s = SurfaceData::new(0, 4, spin.clone()).unwrap();
    let odd: Vec<i64> = continuous_bands(&p, &s, 5).unwrap().iter().map(|b| b.m).collect();
    assert_eq!(odd, vec![1, 3, 5]);
    spin.eps_k = Sign::Minus;
    let s = SurfaceData::new(0, 4, spin).unwrap();
    let bands = continuous_bands(&p, &s, 5).unwrap();
    let even: Vec<i64> = bands.iter().map(|b| b.m).collect();
    assert_eq!(even, vec![0, 2, 4]);
    assert!(bands[0].gap_is_empty());
    assert!(bands.iter().all(|b| b.multiplicity == 2));
}

#[test]
fn no_trivial_cusps_no_continuous_spectrum() {
    let s = SurfaceData::with_trivial_cusps(0, 4, 0).unwrap();
    assert!(continuous_bands(&params(0.5), &s, 7).unwrap().is_empty());
}

#[test]
fn minimal_ktype_family() {
    let p = params(0.3);
    let s = SurfaceData::with_trivial_cusps(2, 0, 0).unwrap();
    for (k, (lam, mult)) in d1_eigenvalues(&p, &s, 5).into_iter().enumerate() {
        let n = 2 * (k as i64 + 1);
        assert!((minimal_ktype_eigenvalue(&p, n).unwrap() - lam).abs() < 1e-13);
        assert!((minimal_ktype_eigenvalue(&p, -n).unwrap() - lam).abs() < 1e-13);
        assert_eq!(mult, 2.0 * 2.0 * (n - 1) as f64);
    }
}

#[test]
fn rejects_bad_weights() {
    let p = params(1.0);
    assert!(principal_block(&p, 3, 1.0).is_err());
    assert!(discrete_block(&p, 4, 4).is_err());
    assert!(discrete_block(&p, 4, 2).is_err());
    assert!(discrete_block(&p, 3, 5).is_err());
    assert!(minimal_ktype_eigenvalue(&p, 0).is_err());
    assert!(SpectralParams::new(0.0).is_err());
    assert!(SpectralParams::new(f64::NAN).is_err());
}
