//! K-type blocks of the Dirac operator and their eigenvalues, plus the band
//! structure of the continuous spectrum.
//!
//! Two weight conventions appear here. The principal and discrete series
//! blocks are labelled by an even K-type weight `m`, and their eigenvalues
//! depend on `m − 1`, which is odd. Bands of the continuous spectrum are
//! labelled by the cusp Fourier index `m`, which is odd when the spin
//! structure is trivial along the fiber and even otherwise. A principal block
//! of weight `m` therefore has its edge at the band with index `|m − 1|`.

use nalgebra::{Matrix2, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::SurfaceData;

/// Fiber radius `r` and the derived `ℓ = (2 − r²)/r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    r: f64,
}

impl SpectralParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::param("r", format!("must be positive, got {r}")));
        }
        Ok(SpectralParams { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn ell(&self) -> f64 {
        (2.0 - self.r * self.r) / self.r
    }

    /// `1 + r^{-2}`.
    pub fn c(&self) -> f64 {
        1.0 + 1.0 / (self.r * self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "series", rename_all = "snake_case")]
pub enum Series {
    Principal { tau: f64 },
    Discrete { n: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Even K-type weight of the block.
    pub weight: i64,
    #[serde(flatten)]
    pub series: Series,
}

impl EigenPair {
    /// Largest residual of the two roots in `λ² + rλ + r²/4 − R = 0`, where
    /// `R` is the block's radicand.
    pub fn residual(&self, params: &SpectralParams) -> f64 {
        let r = params.r();
        let o = (self.weight - 1) as f64;
        let rad = match self.series {
            Series::Principal { tau } => o * o * params.c() + 4.0 * tau * tau,
            Series::Discrete { n } => {
                let n1 = (n.abs() - 1) as f64;
                o * o * params.c() - n1 * n1
            }
        };
        [self.lambda_plus, self.lambda_minus]
            .iter()
            .map(|&l| (l * l + r * l + r * r / 4.0 - rad).abs())
            .fold(0.0, f64::max)
    }
}

/// A gap `(gap_low, gap_high)` in the continuous spectrum contributed by cusp
/// Fourier index `m`, with multiplicity `κᵗ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub m: i64,
    pub gap_low: f64,
    pub gap_high: f64,
    pub multiplicity: usize,
}

impl Band {
    pub fn new(params: &SpectralParams, m: i64, multiplicity: usize) -> Self {
        let (gap_low, gap_high) = band_gap(params, m);
        Band {
            m,
            gap_low,
            gap_high,
            multiplicity,
        }
    }

    pub fn gap_is_empty(&self) -> bool {
        self.gap_low >= self.gap_high
    }
}

/// `−r/2 ∓ |m|√(1 + r^{-2})`.
pub fn band_gap(params: &SpectralParams, m: i64) -> (f64, f64) {
    let r = params.r();
    let w = m.unsigned_abs() as f64 * params.c().sqrt();
    (-0.5 * r - w, -0.5 * r + w)
}

fn require_even(name: &'static str, v: i64) -> Result<()> {
    if v % 2 != 0 {
        return Err(Error::param(name, format!("must be even, got {v}")));
    }
    Ok(())
}

/// The 2×2 block of the Dirac operator on the weights `(m − 2, m)` of the
/// principal series `π_{½+iτ}`.
pub fn principal_block(params: &SpectralParams, m: i64, tau: f64) -> Result<Matrix2<Complex64>> {
    require_even("m", m)?;
    let r = params.r();
    let half_ell = 0.5 * params.ell();
    let mf = m as f64;
    let i = Complex64::i();
    let a = Complex64::new((mf - 2.0) / r + half_ell, 0.0);
    let d = Complex64::new(-mf / r + half_ell, 0.0);
    let b = -i * Complex64::new(mf - 1.0, -2.0 * tau);
    let c = i * Complex64::new(mf - 1.0, 2.0 * tau);
    Ok(Matrix2::new(a, b, c, d))
}

/// `λ± = −r/2 ± ((m−1)²(1 + r^{-2}) + 4τ²)^{1/2}`.
pub fn principal_eigenvalues(params: &SpectralParams, m: i64, tau: f64) -> Result<EigenPair> {
    require_even("m", m)?;
    let o = (m - 1) as f64;
    let root = (o * o * params.c() + 4.0 * tau * tau).sqrt();
    let shift = -0.5 * params.r();
    Ok(EigenPair {
        lambda_plus: shift + root,
        lambda_minus: shift - root,
        weight: m,
        series: Series::Principal { tau },
    })
}

fn check_discrete(n: i64, m: i64) -> Result<()> {
    require_even("n", n)?;
    if n < 2 {
        return Err(Error::param("n", format!("must be at least 2, got {n}")));
    }
    if m <= n || (m - n) % 2 != 0 {
        return Err(Error::Domain {
            op: "discrete_block",
            msg: format!("weight m = {m} must lie in n + 2ℕ for n = {n}"),
        });
    }
    Ok(())
}

/// Block of the holomorphic discrete series `π_n` on the weights `(m − 2, m)`.
pub fn discrete_block(params: &SpectralParams, n: i64, m: i64) -> Result<Matrix2<f64>> {
    check_discrete(n, m)?;
    let r = params.r();
    let half_ell = 0.5 * params.ell();
    let (nf, mf) = (n as f64, m as f64);
    Ok(Matrix2::new(
        (mf - 2.0) / r + half_ell,
        nf - mf,
        -(nf + mf - 2.0),
        -mf / r + half_ell,
    ))
}

/// `λ± = −r/2 ± ((m−1)²(1 + r^{-2}) − (n−1)²)^{1/2}`.
pub fn discrete_eigenvalues(params: &SpectralParams, n: i64, m: i64) -> Result<EigenPair> {
    check_discrete(n, m)?;
    let o = (m - 1) as f64;
    let n1 = (n - 1) as f64;
    let root = (o * o * params.c() - n1 * n1).sqrt();
    let shift = -0.5 * params.r();
    Ok(EigenPair {
        lambda_plus: shift + root,
        lambda_minus: shift - root,
        weight: m,
        series: Series::Discrete { n },
    })
}

/// Eigenvalue `−r/2 + (1 − |n|)/r` on the minimal K-type of `π_{±n}`; the
/// holomorphic and anti-holomorphic partners share it.
pub fn minimal_ktype_eigenvalue(params: &SpectralParams, n: i64) -> Result<f64> {
    require_even("n", n)?;
    if n.abs() < 2 {
        return Err(Error::param("n", format!("|n| must be at least 2, got {n}")));
    }
    let r = params.r();
    Ok(-0.5 * r + (1.0 - n.abs() as f64) / r)
}

/// Gaps of the continuous spectrum for cusp indices `0 ≤ m ≤ max_index`.
///
/// Indices are odd for a fiber-trivial spin structure and even otherwise; the
/// even case includes `m = 0`, whose gap is empty. With no trivial cusps the
/// spectrum is pure point and the list is empty.
pub fn continuous_bands(params: &SpectralParams, surface: &SurfaceData, max_index: u32) -> Result<Vec<Band>> {
    if max_index < 1 {
        return Err(Error::param("max_index", "must be at least 1"));
    }
    let mult = surface.kappa_trivial();
    if mult == 0 {
        return Ok(Vec::new());
    }
    let start = if surface.spin.fiber_trivial() { 1 } else { 0 };
    Ok((start..=max_index as i64)
        .step_by(2)
        .map(|m| Band::new(params, m, mult))
        .collect())
}

/// Indicial family `N(A_{r,m})(s) = [[−2s, −im(1 + r^{-2})], [im, 2s]] − r/2`.
pub fn bnormal_matrix(params: &SpectralParams, m: i64, s: f64) -> Matrix2<Complex64> {
    let half_r = Complex64::new(0.5 * params.r(), 0.0);
    let im = Complex64::new(0.0, m as f64);
    SMatrix::<Complex64, 2, 2>::new(
        Complex64::new(-2.0 * s, 0.0) - half_r,
        -im * params.c(),
        im,
        Complex64::new(2.0 * s, 0.0) - half_r,
    )
}

/// Interval of `λ` for which `N(A_{r,m})(s) − λ` is invertible for every
/// real `s`. An empty gap is returned as `(−r/2, −r/2)`.
///
/// `det(N(s) − λ) = (λ − T/2)² − Δ(s)` with `T` the trace and `Δ(s)` a
/// quadratic in `s`; the gap is `T/2 ± √(min_s Δ(s))`.
pub fn gap_from_bnormal(params: &SpectralParams, m: i64) -> (f64, f64) {
    let disc = |s: f64| {
        let n = bnormal_matrix(params, m, s);
        let tr = n.trace();
        let det = n.determinant();
        (0.25 * tr * tr - det).re
    };
    let half_tr = 0.5 * bnormal_matrix(params, m, 0.0).trace().re;
    // Δ(s) = α s² + β s + γ from three samples.
    let (dm, d0, dp) = (disc(-1.0), disc(0.0), disc(1.0));
    let alpha = 0.5 * (dp + dm) - d0;
    let beta = 0.5 * (dp - dm);
    let min = if alpha > 0.0 {
        d0 - beta * beta / (4.0 * alpha)
    } else {
        d0
    };
    let w = min.max(0.0).sqrt();
    (half_tr - w, half_tr + w)
}
