use std::f64::consts::PI;

use dirac_eta::heat::{h_principal, tr_discrete_part, TruncationPolicy};
use dirac_eta::quad::QuadratureSpec;
use dirac_eta::selberg::*;
use dirac_eta::specfn::digamma;
use dirac_eta::spectrum::SpectralParams;
use dirac_eta::surface::{HyperbolicClass, Sign, SpinStructure, SurfaceData};
use dirac_eta::Error;
use num_complex::Complex64;

fn params(r: f64) -> SpectralParams {
    SpectralParams::new(r).unwrap()
}

fn surfaces() -> Vec<SurfaceData> {
    vec![
        SurfaceData::with_trivial_cusps(2, 0, 0).unwrap(),
        SurfaceData::with_trivial_cusps(0, 4, 2).unwrap(),
        SurfaceData::with_trivial_cusps(1, 2, 0).unwrap(),
    ]
}

fn classes() -> Vec<HyperbolicClass> {
    vec![
        HyperbolicClass::new(1.3, 2.0, 1).unwrap(),
        HyperbolicClass::new(2.7, -1.0, 2).unwrap(),
    ]
}

/// Composite Simpson on [0, b].
fn simpson(f: impl Fn(f64) -> f64, b: f64, n: usize) -> f64 {
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn jfactor_forms_on_grid() {
    for m in (0..=8).step_by(2) {
        for &tau in &[0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0] {
            let (a, b) = jfactor(m, tau).unwrap();
            assert!((a - b).norm() < 1e-10, "m={m} tau={tau}: {a} vs {b}");
        }
    }
}

#[test]
fn jfactor_direct_digamma() {
    // Form A written out with the library digamma at a few points.
    let (m, tau) = (4i64, 0.8);
    let c = |x: f64| digamma(Complex64::new(x, tau)).unwrap();
    let want = c(0.5) + c(0.0) - c(2.5) - c(-1.5);
    assert!((jfactor(m, tau).unwrap().0 - want).norm() < 1e-14);
}

#[test]
fn refinement_stability() {
    let pol = TruncationPolicy::default();
    let q = QuadratureSpec::default();
    let fine = q.refined(1e-2);
    for s in surfaces() {
        for &r in &[0.1, 0.5, 1.0] {
            for &t in &[0.05, 0.3, 1.0] {
                let a = geometric_side(t, &params(r), &s, &classes(), &q, &pol).unwrap();
                let b = geometric_side(t, &params(r), &s, &classes(), &fine, &pol).unwrap();
                assert!(
                    (a.total - b.total).abs() < 1e-7,
                    "{s:?} r={r} t={t}: {} vs {}",
                    a.total,
                    b.total
                );
            }
        }
    }
}

#[test]
fn additive_in_classes() {
    let pol = TruncationPolicy::default();
    let q = QuadratureSpec::default();
    let s = SurfaceData::with_trivial_cusps(2, 0, 0).unwrap();
    let cl = classes();
    for &(r, t) in &[(0.3, 0.2), (1.0, 1.0)] {
        let p = params(r);
        let both = hyperbolic_term(t, &p, &cl, &q, &pol).unwrap();
        let one = hyperbolic_term(t, &p, &cl[..1], &q, &pol).unwrap();
        let two = hyperbolic_term(t, &p, &cl[1..], &q, &pol).unwrap();
        assert!((both - one - two).abs() < 1e-12 * both.abs().max(1e-3));
        let g0 = geometric_side(t, &p, &s, &[], &q, &pol).unwrap();
        let g2 = geometric_side(t, &p, &s, &cl, &q, &pol).unwrap();
        assert!((g2.total - g0.total - both).abs() < 1e-10);
        assert_eq!(hyperbolic_term(t, &p, &[], &q, &pol).unwrap(), 0.0);
    }
}

#[test]
fn decays_with_t_for_small_r() {
    let pol = TruncationPolicy::default();
    let q = QuadratureSpec::default();
    for s in surfaces() {
        let p = params(0.1);
        let mut prev = f64::INFINITY;
        for &t in &[0.005, 0.01, 0.02, 0.04, 0.08, 0.16] {
            let v = geometric_side(t, &p, &s, &classes(), &q, &pol).unwrap().total.abs();
            assert!(v < prev, "{s:?} t={t}: {v} ≥ {prev}");
            prev = v;
        }
        assert!(prev < 1e-3);
    }
}

#[test]
fn tau_integrals_match_simpson() {
    let pol = TruncationPolicy::default();
    let q = QuadratureSpec::default();
    let (r, t) = (0.5, 0.3);
    let p = params(r);
    let s = SurfaceData::with_trivial_cusps(0, 4, 2).unwrap();
    let cl = classes();
    let b = geometric_side(t, &p, &s, &cl, &q, &pol).unwrap();
    let cut = tau_cutoff(t, &q, &pol);
    let h = |tau: f64| h_principal(t, &p, tau, &pol).unwrap();
    let n = 4000;

    let ident = 2.0 * s.neg_euler() * simpson(|x| x * (PI * x).tanh() * h(x), cut, n);
    assert!((b.identity_cont - ident).abs() < 1e-9, "{} vs {ident}", b.identity_cont);

    let hyp: f64 = cl
        .iter()
        .map(|c| c.weight() * 2.0 * simpson(|x| (c.u * x).cos() * h(x), cut, n))
        .sum();
    assert!((b.hyperbolic - hyp).abs() < 1e-9);

    let kt = s.kappa_trivial() as f64;
    let psi = -kt / PI * 2.0 * simpson(|x| digamma(Complex64::new(1.0, 2.0 * x)).unwrap().re * h(x), cut, n);
    assert!((b.cusp_psi - psi).abs() < 1e-9);
    assert!((b.h_zero - 0.5 * kt * h(0.0)).abs() < 1e-15);
    let kn = s.kappa as f64 - kt;
    let log2 = kn * std::f64::consts::LN_2 / PI * 2.0 * simpson(h, cut, n);
    assert!((b.cusp_log2 - log2).abs() < 1e-9);
}

#[test]
fn principal_is_total_minus_discrete() {
    let pol = TruncationPolicy::default();
    let q = QuadratureSpec::default();
    for s in surfaces() {
        for &(r, t) in &[(0.2, 0.1), (0.7, 0.5)] {
            let p = params(r);
            let g = geometric_side(t, &p, &s, &classes(), &q, &pol).unwrap();
            let (tp, err) = principal_trace(t, &p, &s, &classes(), &q, &pol).unwrap();
            let disc = tr_discrete_part(t, &p, &s, &pol).unwrap();
            assert!((g.discrete() - disc).abs() < 1e-12 * disc.abs().max(1.0));
            assert!((g.total - disc - tp).abs() < 1e-10 * g.total.abs().max(1.0));
            assert!(err < 1e-6);
        }
    }
}

#[test]
fn weight_modes_share_everything_but_j() {
    let pol = TruncationPolicy::default();
    let q = QuadratureSpec::default();
    let s = SurfaceData::with_trivial_cusps(0, 4, 2).unwrap();
    let p = params(0.3);
    let a = geometric_side_with_mode(0.2, &p, &s, &[], &q, &pol, WeightMode::Diagonal).unwrap();
    let b = geometric_side_with_mode(0.2, &p, &s, &[], &q, &pol, WeightMode::BlockAverage).unwrap();
    assert!((a.identity_cont - b.identity_cont).abs() < 1e-12);
    assert!((a.cusp_psi - b.cusp_psi).abs() < 1e-12);
    assert!((a.total - a.pv_jterm - b.total + b.pv_jterm).abs() < 1e-10);
}

#[test]
fn nontrivial_fiber_rejected() {
    let mut spin = SpinStructure::with_trivial_cusps(2, 0, 0).unwrap();
    spin.eps_k = Sign::Minus;
    let s = SurfaceData::new(2, 0, spin).unwrap();
    let r = geometric_side(0.5, &params(0.5), &s, &[], &QuadratureSpec::default(), &TruncationPolicy::default());
    assert!(matches!(r, Err(Error::NontrivialFiberSpin { .. })));
}
