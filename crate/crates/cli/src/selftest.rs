//! Quick invariant suite run by `dirac-eta selftest`.

use dirac_eta::eta::{eta_d1, eta_d1_closed_form, eta_d2, eta_d2_direct, eta_from_eigenvalues};
use dirac_eta::heat::{h_principal, h_principal_series_form, poisson_theta, PoissonSide};
use dirac_eta::selberg::jfactor;
use dirac_eta::specfn::{digamma, hurwitz_zeta, zeta0};
use dirac_eta::spectrum::{band_gap, gap_from_bnormal, principal_block, principal_eigenvalues, SpectralParams};
use dirac_eta::surface::SurfaceData;
use dirac_eta::Result;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::args::RunConfig;
use crate::commands::{fmt, Artifact};

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Largest observed deviation.
    pub deviation: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn zeta_values() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &a in &[0.005, 0.125, 0.5, 1.0] {
        worst = worst.max((hurwitz_zeta(c(0.0), a)?.re - (0.5 - a)).abs());
        worst = worst.max((hurwitz_zeta(c(-1.0), a)?.re + 0.5 * (a * a - a + 1.0 / 6.0)).abs());
    }
    for &a in &[0.0, 0.005, 0.125, 0.5] {
        worst = worst.max((zeta0(c(0.0), a)?.re + 0.5 * a).abs());
        worst = worst.max((zeta0(c(-1.0), a)?.re + 0.25 * (a * a - 1.0 / 3.0)).abs());
    }
    Ok(worst)
}

fn digamma_identities() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &z in &[Complex64::new(0.3, 0.0), Complex64::new(1.0, 2.5), Complex64::new(4.0, -1.0)] {
        worst = worst.max((digamma(z + 1.0)? - digamma(z)? - 1.0 / z).norm());
        let dup = 0.5 * (digamma(z)? + digamma(z + 0.5)?) + std::f64::consts::LN_2;
        worst = worst.max((digamma(2.0 * z)? - dup).norm());
    }
    Ok(worst)
}

fn eigen_blocks() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &r in &[0.2, 1.0, 2.5] {
        let params = SpectralParams::new(r)?;
        for &m in &[-4i64, 0, 2, 6] {
            for &tau in &[0.0, 0.7, 3.0] {
                let b = principal_block(&params, m, tau)?;
                let e = principal_eigenvalues(&params, m, tau)?;
                worst = worst.max((b.trace() - (e.lambda_plus + e.lambda_minus)).norm());
                worst = worst.max((b.determinant() - e.lambda_plus * e.lambda_minus).norm() / (1.0 + b.determinant().norm()));
            }
        }
    }
    Ok(worst)
}

fn band_gaps() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &r in &[0.05, 0.3, 1.0, 2.0] {
        let params = SpectralParams::new(r)?;
        for m in -8i64..=8 {
            let (a, b) = band_gap(&params, m);
            let (x, y) = gap_from_bnormal(&params, m);
            worst = worst.max((a - x).abs()).max((b - y).abs());
        }
    }
    Ok(worst)
}

fn poisson() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &r in &[0.3, 1.0] {
        let params = SpectralParams::new(r)?;
        for &t in &[0.1, 1.0] {
            for p in 0..3 {
                let l = poisson_theta(p, t, &params, PoissonSide::Lhs)?;
                let rr = poisson_theta(p, t, &params, PoissonSide::Rhs)?;
                worst = worst.max((l - rr).abs());
            }
        }
    }
    Ok(worst)
}

fn cross_form(cfg: &RunConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &r in &[0.3, 1.0] {
        let params = SpectralParams::new(r)?;
        for &t in &[0.2, 1.0] {
            for &tau in &[0.0, 1.5, 4.0] {
                let a = h_principal(t, &params, tau, &cfg.truncation)?;
                let b = h_principal_series_form(t, &params, tau, &cfg.truncation, 24)?;
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

fn jfactor_forms() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for m in (0..=8).step_by(2) {
        for &tau in &[0.25, 1.0, 5.0] {
            let (a, b) = jfactor(m, tau)?;
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

fn eta_d1_zero() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(g, k, kt) in &[(2, 0, 0), (0, 4, 2)] {
        let s = SurfaceData::with_trivial_cusps(g, k, kt)?;
        for &r in &[0.1, 0.2] {
            let params = SpectralParams::new(r)?;
            let v = eta_d1(&params, &s, c(0.0))?.re();
            worst = worst.max((v - eta_d1_closed_form(&params, &s)).abs());
        }
    }
    Ok(worst)
}

fn eta_d2_overlap(cfg: &RunConfig) -> Result<f64> {
    let s = SurfaceData::with_trivial_cusps(0, 4, 2)?;
    let params = SpectralParams::new(0.3)?;
    let z = Complex64::new(3.0, 0.4);
    let a = eta_d2_direct(&params, &s, z, &cfg.truncation)?.value;
    let b = eta_d2(&params, &s, z, &cfg.truncation)?.value;
    Ok((a - b).norm())
}

fn single_eigenvalue(cfg: &RunConfig) -> Result<f64> {
    Ok((eta_from_eigenvalues(&[(-1.0, 1.0)], &cfg.quadrature)? + 1.0).abs())
}

pub fn run(cfg: &RunConfig) -> Artifact {
    let checks: Vec<(&'static str, f64, Result<f64>)> = vec![
        ("hurwitz_special_values", 1e-12, zeta_values()),
        ("digamma_identities", 1e-11, digamma_identities()),
        ("eigenvalue_blocks", 1e-10, eigen_blocks()),
        ("band_gaps", 1e-12, band_gaps()),
        ("poisson_identity", 1e-9, poisson()),
        ("heat_cross_form", 1e-8, cross_form(cfg)),
        ("jfactor_forms", 1e-10, jfactor_forms()),
        ("eta_d1_closed_form", 1e-13, eta_d1_zero()),
        ("eta_d2_overlap", 1e-8, eta_d2_overlap(cfg)),
        ("single_eigenvalue_eta", 1e-6, single_eigenvalue(cfg)),
    ];
    let results: Vec<Check> = checks
        .into_iter()
        .map(|(name, tolerance, res)| match res {
            Ok(dev) => Check {
                name,
                passed: dev <= tolerance,
                deviation: dev,
                tolerance,
                error: None,
            },
            Err(e) => Check {
                name,
                passed: false,
                deviation: f64::NAN,
                tolerance,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let success = results.iter().all(|c| c.passed);
    for c in &results {
        log::info!("{} {}: {:e} (tol {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.deviation, c.tolerance);
    }
    let rows = results
        .iter()
        .map(|c| vec![c.name.to_string(), c.passed.to_string(), fmt(c.deviation), fmt(c.tolerance)])
        .collect();
    Artifact {
        success,
        payload: json!({ "passed": success, "checks": results }),
        header: vec!["check", "passed", "deviation", "tolerance"],
        rows,
    }
}
