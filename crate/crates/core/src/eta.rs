//! Eta-function components of `D_r` and their sum at `s = 0`.
//!
//! * `η_d¹`: the minimal-K-type family, closed form in ζ₀.
//! * `η_d²`: the remaining discrete-series double sum, continued to `s = 0`
//!   by a binomial expansion of `q^{−s}` into Hurwitz zeta values.
//! * `η_p`: the principal-series part, the finite part of the Mellin
//!   transform of `Tr_p(D_r e^{−tD_r²})` after subtracting a fitted small-time
//!   expansion.

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heat::{fit_small_time, log_grid, small_time_template, AsymptoticFit, Exponent, TruncationPolicy};
use crate::quad::{integrate, QuadratureSpec};
use crate::selberg::{geometric_side_with_mode, WeightMode};
use crate::specfn::{bernoulli_table, hurwitz_zeta, pow_neg, zeta0, ComplexValue, EULER_GAMMA};
use crate::spectrum::SpectralParams;
use crate::surface::{HyperbolicClass, SurfaceData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    D1,
    D2,
    P,
    Total,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaResult {
    pub value: ComplexValue,
    pub s: ComplexValue,
    pub component: Component,
    /// Whether a `r₀/s` pole was removed to produce `value`.
    pub pole_subtracted: bool,
    /// Residue removed at `s = 0`; zero unless `component` is `P`.
    pub residue_r0: f64,
    pub err_estimate: f64,
    /// Small-time fit used by the regularization, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<AsymptoticFit>,
}

impl EtaResult {
    fn plain(component: Component, s: ComplexValue, value: ComplexValue, err: f64) -> Self {
        EtaResult {
            value,
            s,
            component,
            pole_subtracted: false,
            residue_r0: 0.0,
            err_estimate: err,
            fit: None,
        }
    }

    pub fn re(&self) -> f64 {
        self.value.re
    }
}

/// Index pair `(k, ℓ)` of the second discrete family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QIndex {
    pub k: u64,
    pub l: u64,
    pub q: f64,
}

impl QIndex {
    pub fn new(params: &SpectralParams, k: u64, l: u64) -> Result<Self> {
        if k < 1 || l <= k {
            return Err(Error::param("QIndex", format!("need 1 ≤ k < l, got k={k}, l={l}")));
        }
        Ok(QIndex {
            k,
            l,
            q: q_value(params.r(), k, l),
        })
    }
}

#[inline]
fn q_value(r: f64, k: u64, l: u64) -> f64 {
    let lo = (2 * l - 1) as f64;
    let ko = (2 * k - 1) as f64;
    (lo * lo * (1.0 + r * r) - r * r * ko * ko).sqrt()
}

fn is_real_integer(s: Complex64, n: f64) -> bool {
    s.im == 0.0 && s.re == n
}

/// `η_d¹(D_r, s) = 2χ r^s (ζ₀(s−1, a) − a ζ₀(s, a)) + 2κᵗ r^s ζ₀(s, a)` with
/// `a = r²/2` and `χ = 2 − 2g − κ`.
pub fn eta_d1(params: &SpectralParams, surface: &SurfaceData, s: ComplexValue) -> Result<EtaResult> {
    surface.require_fiber_trivial("eta_d1")?;
    let value = eta_d1_from_counts(params, surface.euler_characteristic(), surface.kappa_trivial(), s)?;
    Ok(EtaResult::plain(Component::D1, s, value, 0.0))
}

/// [`eta_d1`] from the Euler characteristic `χ` and the number of trivial
/// cusps alone.
pub fn eta_d1_from_counts(params: &SpectralParams, chi: f64, kappa_t: usize, s: ComplexValue) -> Result<ComplexValue> {
    if is_real_integer(s, 1.0) || is_real_integer(s, 2.0) {
        return Err(Error::pole("eta_d1", s));
    }
    let r = params.r();
    let a = 0.5 * r * r;
    let kt = kappa_t as f64;
    let z1 = zeta0(s - 1.0, a)?;
    let z0 = zeta0(s, a)?;
    Ok(pow_neg(r, -s) * (2.0 * chi * (z1 - a * z0) + 2.0 * kt * z0))
}

/// `(2 − 2g − κ)(1/6 + r⁴/8) − κᵗ r²/2`.
pub fn eta_d1_closed_form(params: &SpectralParams, surface: &SurfaceData) -> f64 {
    let r2 = params.r() * params.r();
    surface.euler_characteristic() * (1.0 / 6.0 + r2 * r2 / 8.0) - surface.kappa_trivial() as f64 * r2 / 2.0
}

/// Eigenvalues `−(2k − 1 + r²/2)/r` of the minimal-K-type family with their
/// multiplicities `2(2g−2+κ)(2k−1) − 2κᵗ`, for `k ≤ k_max`.
pub fn d1_eigenvalues(params: &SpectralParams, surface: &SurfaceData, k_max: u64) -> Vec<(f64, f64)> {
    let r = params.r();
    let v = surface.neg_euler();
    let kt = surface.kappa_trivial() as f64;
    (1..=k_max)
        .map(|k| {
            let o = (2 * k - 1) as f64;
            (-(o + 0.5 * r * r) / r, 2.0 * v * o - 2.0 * kt)
        })
        .collect()
}

/// Settings for Mellin-transform regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MellinSettings {
    /// Fit window `[t_hi/window_ratio, t_hi]`.
    pub t_hi: f64,
    pub window_ratio: f64,
    pub points: usize,
    pub template: Vec<Exponent>,
    /// Upper limit of the large-time integral.
    pub t_max: f64,
    /// Maximum relative fit residual.
    pub residual_limit: f64,
}

/// Outcome of [`mellin_regularized`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MellinValue {
    /// `Reg_{s=0}` of `Γ((s+1)/2)^{−1} ∫₀^∞ t^{(s−1)/2} θ(t) dt`.
    pub value: f64,
    /// Coefficient of `1/s` removed from the result.
    pub residue: f64,
    pub err_estimate: f64,
    pub fit: AsymptoticFit,
}

// ψ(1/2)
const DIGAMMA_HALF: f64 = -EULER_GAMMA - 2.0 * LN_2;

/// Finite part at `s = 0` of `∫₀^{T} t^{(s−1)/2} · t^p (log t)^ℓ dt` and the
/// coefficient of `1/s` (before the `Γ` normalization).
fn finite_part(e: &Exponent, t0: f64) -> (f64, f64) {
    let beta = e.power + 0.5;
    let lt = t0.ln();
    if beta.abs() < 1e-12 {
        if e.has_log {
            // T^{s/2}(2 log T/s − 4/s²): the 1/s parts cancel, the double
            // pole is dropped.
            (0.5 * lt * lt, 0.0)
        } else {
            (lt, 2.0)
        }
    } else if e.has_log {
        (t0.powf(beta) * (lt / beta - 1.0 / (beta * beta)), 0.0)
    } else {
        (t0.powf(beta) / beta, 0.0)
    }
}

/// Regularized value at `s = 0` of `Γ((s+1)/2)^{−1} ∫₀^∞ t^{(s−1)/2} θ(t) dt`.
///
/// Below `t_hi` the integrand is replaced by a least-squares fit to
/// `settings.template` whose integral is continued analytically; above it
/// the integral is taken numerically in `x = ln t` up to `t_max`. A simple
/// pole at `s = 0` (from a `t^{−1/2}` term) is removed and reported.
pub fn mellin_regularized<F>(theta: F, settings: &MellinSettings, quad: &QuadratureSpec) -> Result<MellinValue>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let t_hi = settings.t_hi;
    if !(t_hi > 0.0) || !(settings.window_ratio > 1.0) || !(settings.t_max > t_hi) {
        return Err(Error::param("mellin_regularized", "need 0 < t_hi < t_max and window_ratio > 1"));
    }
    let grid = log_grid(t_hi / settings.window_ratio, t_hi, settings.points);
    let samples = grid
        .par_iter()
        .map(|&t| theta(t).map(|v| (t, v)))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_small_time(&samples, &settings.template)?;
    if fit.residual > settings.residual_limit {
        return Err(Error::FitResidual {
            residual: fit.residual,
            limit: settings.residual_limit,
        });
    }
    let small = assemble_small(&fit, t_hi);

    // Second estimate with the last template entry dropped, as an error proxy.
    let spread = if settings.template.len() > 3 {
        let shorter = &settings.template[..settings.template.len() - 1];
        match fit_small_time(&samples, shorter) {
            Ok(f2) => (assemble_small(&f2, t_hi).0 - small.0).abs(),
            Err(_) => 0.0,
        }
    } else {
        0.0
    };

    let failure = RefCell::new(None);
    let large = integrate(
        |x| {
            let t = x.exp();
            match theta(t) {
                Ok(v) => t.sqrt() * v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        },
        t_hi.ln(),
        settings.t_max.ln(),
        quad,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let large = large?;
    let (fp, res) = small;
    let sqrt_pi = PI.sqrt();
    // 1/Γ((s+1)/2) = (1 − (s/2)ψ(1/2) + …)/√π
    let value = (fp + large.value - 0.5 * res * DIGAMMA_HALF) / sqrt_pi;
    Ok(MellinValue {
        value,
        residue: res / sqrt_pi,
        err_estimate: (spread + large.error) / sqrt_pi,
        fit,
    })
}

fn assemble_small(fit: &AsymptoticFit, t0: f64) -> (f64, f64) {
    let mut fp = 0.0;
    let mut res = 0.0;
    for (e, &c) in fit.exponents.iter().zip(&fit.coefficients) {
        let (f, r) = finite_part(e, t0);
        fp += c * f;
        res += c * r;
    }
    (fp, res)
}

/// Eta invariant of a finite list of `(eigenvalue, multiplicity)` pairs
/// through [`mellin_regularized`]. Only meaningful when the list is the
/// full spectrum of a model problem; mainly a check of the machinery.
pub fn eta_from_eigenvalues(eigs: &[(f64, f64)], quad: &QuadratureSpec) -> Result<f64> {
    let gap = eigs
        .iter()
        .map(|&(l, _)| l.abs())
        .fold(f64::INFINITY, f64::min);
    let top = eigs.iter().map(|&(l, _)| l.abs()).fold(0.0, f64::max);
    if !(gap > 0.0) || !top.is_finite() {
        return Err(Error::param("eigs", "need a non-empty list of finite nonzero eigenvalues"));
    }
    let settings = MellinSettings {
        t_hi: 0.05 / (top * top),
        window_ratio: 100.0,
        points: 24,
        template: (0..6).map(|k| Exponent::pure(k as f64)).collect(),
        t_max: 40.0 / (gap * gap),
        residual_limit: 1e-8,
    };
    let theta = |t: f64| Ok(eigs.iter().map(|&(l, m)| m * l * (-t * l * l).exp()).sum());
    Ok(mellin_regularized(theta, &settings, quad)?.value)
}

/// Independent evaluation of `η_d¹(D_r, 0)` from the heat trace
/// `Θ(t) = Σ mult·λ e^{−tλ²}` of the minimal-K-type family.
pub fn eta_d1_mellin_oracle(params: &SpectralParams, surface: &SurfaceData) -> Result<f64> {
    surface.require_fiber_trivial("eta_d1_mellin_oracle")?;
    let r = params.r();
    let gap = (1.0 + 0.5 * r * r) / r;
    let t_hi = 0.05 / (gap * gap);
    let t_max = 40.0 / (gap * gap);
    let window_ratio = 100.0;
    // e^{−tλ²} underflows past tλ² ≈ 745 at the bottom of the fit window.
    let k_max = ((750.0 * window_ratio / t_hi).sqrt() * r / 2.0).ceil() as u64 + 2;
    let eigs = d1_eigenvalues(params, surface, k_max);
    let settings = MellinSettings {
        t_hi,
        window_ratio,
        points: 32,
        template: [-1.5, -1.0, -0.5, 0.0, 1.0, 2.0, 3.0]
            .iter()
            .map(|&p| Exponent::pure(p))
            .collect(),
        t_max,
        residual_limit: 1e-8,
    };
    let theta = |t: f64| {
        let mut acc = 0.0;
        for &(l, m) in &eigs {
            let g = (-t * l * l).exp();
            acc += m * l * g;
            if g < 1e-300 {
                break;
            }
        }
        Ok(acc)
    };
    Ok(mellin_regularized(theta, &settings, &QuadratureSpec::default())?.value)
}

#[inline]
fn expm1_c(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let h = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * c - 2.0 * h * h, z.re.exp() * s)
}

/// `(q − a)^{−s} − (q + a)^{−s}` without cancellation for small `a/q`.
#[inline]
fn diff_pow(q: f64, a: f64, s: Complex64) -> Complex64 {
    let b = -s * (q + a).ln();
    let d = 2.0 * s * (a / q).atanh();
    b.exp() * expm1_c(d)
}

/// Neville extrapolation to `x = 0` of values at nodes `x`; returns the
/// value and the difference between the last two diagonal entries.
fn neville_at_zero(x: &[f64], y: &[Complex64]) -> (Complex64, f64) {
    let n = x.len();
    let mut p: Vec<Complex64> = y.to_vec();
    let mut prev = p[n - 1];
    let mut last = p[n - 1];
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
        prev = last;
        last = p[0];
    }
    (last, (last - prev).norm())
}

/// Direct double sum for `η_d²(D_r, s)`,
/// `2(2g−2+κ) r^s f_r(s) − 2κᵗ r^s g_r(s)`, valid for `Re s ≥ 2.5`.
///
/// Partial sums over `ℓ ≤ N` are recorded at `N = 32·2^i` and extrapolated
/// in `1/N` with the tail exponents `s − 2 + j`.
pub fn eta_d2_direct(
    params: &SpectralParams,
    surface: &SurfaceData,
    s: ComplexValue,
    policy: &TruncationPolicy,
) -> Result<EtaResult> {
    surface.require_fiber_trivial("eta_d2_direct")?;
    if !(s.re >= 2.5) {
        return Err(Error::param("s", format!("direct summation needs Re(s) ≥ 2.5, got {s}")));
    }
    policy.validate()?;
    let r = params.r();
    let a = 0.5 * r * r;
    let levels = 6;
    let n_max = 32usize << (levels - 1);
    if n_max > policy.max_terms {
        return Err(Error::TruncationBudget {
            op: "eta_d2_direct",
            max_terms: policy.max_terms,
            eps_tail: policy.eps_tail,
        });
    }
    let mut f = Complex64::new(0.0, 0.0);
    let mut g = Complex64::new(0.0, 0.0);
    let mut fs = Vec::with_capacity(levels);
    let mut gs = Vec::with_capacity(levels);
    let mut next = 32usize;
    for l in 2..=n_max as u64 {
        let mut fl = Complex64::new(0.0, 0.0);
        let mut gl = Complex64::new(0.0, 0.0);
        for k in (1..l).rev() {
            let d = diff_pow(q_value(r, k, l), a, s);
            fl += (2 * k - 1) as f64 * d;
            gl += d;
        }
        f += fl;
        g += gl;
        if l as usize == next {
            fs.push(f);
            gs.push(g);
            next *= 2;
        }
    }
    let (f_inf, f_err) = richardson_tail(&fs, s);
    let (g_inf, g_err) = richardson_tail(&gs, s);
    let v = surface.neg_euler();
    let kt = surface.kappa_trivial() as f64;
    let rs = pow_neg(r, -s);
    let value = rs * (2.0 * v * f_inf - 2.0 * kt * g_inf);
    let err = rs.norm() * (2.0 * v * f_err + 2.0 * kt * g_err);
    Ok(EtaResult::plain(Component::D2, s, value, err))
}

/// Richardson elimination of tails `N^{−(s−2+j)}`, `j = 0, 1, …`, from
/// partial sums at `N, 2N, 4N, …`.
fn richardson_tail(sums: &[Complex64], s: Complex64) -> (Complex64, f64) {
    let mut row: Vec<Complex64> = sums.to_vec();
    let mut last = row[row.len() - 1];
    let mut prev = last;
    for j in 0..row.len() - 1 {
        let factor = Complex64::new(2.0, 0.0).powc(s - 2.0 + j as f64);
        for i in 0..row.len() - 1 - j {
            row[i] = (factor * row[i + 1] - row[i]) / (factor - 1.0);
        }
        prev = last;
        last = row[0];
    }
    (last, (last - prev).norm())
}

/// Head cutoff for the η_d² continuation: `ℓ ≤ N0` is summed directly.
const D2_HEAD: u64 = 64;
const D2_MAX_BINOMIAL: usize = 60;

/// Which weight the continuation carries in the `k` sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum D2Family {
    /// weight `2k − 1` (`f_r`)
    F,
    /// weight 1 (`g_r`)
    G,
}

impl D2Family {
    fn weight_power(self, i: usize) -> usize {
        match self {
            D2Family::F => 2 * i + 1,
            D2Family::G => 2 * i,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut b = 1.0;
    for j in 0..k {
        b = b * (n - j) as f64 / (j + 1) as f64;
    }
    b
}

/// Coefficients `c_p` of `Σ_{j odd, j<L} j^e = Σ_p c_p L^p`.
fn odd_power_sum_coefs(e: usize) -> Vec<f64> {
    let b = bernoulli_table();
    let n = e + 1;
    let scale = 2f64.powi(e as i32) / n as f64;
    let mut c = vec![0.0; n + 1];
    c[0] = scale * (2.0 - 2f64.powi(-(e as i32))) * b.bernoulli(n);
    for (p, cp) in c.iter_mut().enumerate().skip(1) {
        *cp = scale * binomial(n, p) * b.bernoulli(n - p) * 2f64.powi(-(p as i32));
    }
    c
}

/// Tail `Σ_{ℓ>N0} Σ_{k<ℓ} w(k) q^{−σ}` by the binomial expansion in
/// `ρ (2k−1)²/(2ℓ−1)²` with `ρ = r²/(1+r²)`.
fn h_tail(sigma: Complex64, r: f64, family: D2Family) -> Result<Complex64> {
    let rho = r * r / (1.0 + r * r);
    let shift = D2_HEAD as f64 + 0.5;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut binom = Complex64::new(1.0, 0.0);
    for i in 0..D2_MAX_BINOMIAL {
        if i > 0 {
            binom *= (0.5 * sigma + (i - 1) as f64) / i as f64 * rho;
        }
        let coefs = odd_power_sum_coefs(family.weight_power(i));
        let mut t_i = Complex64::new(0.0, 0.0);
        for (p, &c) in coefs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let z = sigma + (2 * i) as f64 - p as f64;
            t_i += c * pow_neg(2.0, z) * hurwitz_zeta(z, shift)?;
        }
        let term = binom * t_i;
        acc += term;
        if i > 2 && term.norm() <= 1e-17 * acc.norm() {
            return Ok(pow_neg(1.0 + r * r, 0.5 * sigma) * acc);
        }
    }
    Err(Error::Continuation(format!(
        "binomial expansion did not converge at σ = {sigma}, r = {r}"
    )))
}

/// Residue of `Σ_{ℓ>k} w(k) q^{−σ}` at the integer `σ0`.
fn h_residue(sigma0: usize, r: f64, family: D2Family) -> Result<f64> {
    let rho = r * r / (1.0 + r * r);
    let mut acc = 0.0;
    let mut binom = 1.0;
    for i in 0..D2_MAX_BINOMIAL {
        if i > 0 {
            binom *= (0.5 * sigma0 as f64 + (i - 1) as f64) / i as f64 * rho;
        }
        let p = sigma0 + 2 * i - 1;
        let coefs = odd_power_sum_coefs(family.weight_power(i));
        let term = if p < coefs.len() { binom * coefs[p] * 0.5 } else { 0.0 };
        acc += term;
        if i > 2 && term.abs() <= 1e-17 * acc.abs().max(1e-300) {
            return Ok((1.0 + r * r).powf(-0.5 * sigma0 as f64) * acc);
        }
    }
    Err(Error::Continuation(format!("residue series did not converge at σ = {sigma0}, r = {r}")))
}

/// `f_r(s)` or `g_r(s)` by analytic continuation; `s` must avoid the points
/// where `s + j` (odd `j`) hits a pole of the tail sum and `s` is not zero.
fn d2_continued(s: Complex64, r: f64, family: D2Family) -> Result<Complex64> {
    let a = 0.5 * r * r;
    let mut head = Complex64::new(0.0, 0.0);
    for l in 2..=D2_HEAD {
        for k in 1..l {
            let w = match family {
                D2Family::F => (2 * k - 1) as f64,
                D2Family::G => 1.0,
            };
            head += w * diff_pow(q_value(r, k, l), a, s);
        }
    }
    // Σ_{j odd} 2 (s)_j/j! a^j H_tail(s + j)
    let mut acc = Complex64::new(0.0, 0.0);
    let mut poch = s;
    let mut apow = a;
    let mut j = 1usize;
    while j < 200 {
        let term = 2.0 * poch * apow * h_tail(s + j as f64, r, family)?;
        acc += term;
        if term.norm() <= 1e-18 * (acc.norm() + head.norm()) && j > 3 {
            return Ok(head + acc);
        }
        // advance j by two: (s)_{j+2}/(j+2)! = (s)_j/j! · (s+j)(s+j+1)/((j+1)(j+2))
        poch *= (s + j as f64) * (s + (j + 1) as f64) / ((j + 1) * (j + 2)) as f64;
        apow *= a * a;
        j += 2;
    }
    Err(Error::Continuation(format!("odd-power series did not converge at s = {s}")))
}

/// `f_r(0)` or `g_r(0)`: only `j = 1, 3` survive, `2a^j/j · Res_{σ=j} H`.
fn d2_at_zero(r: f64, family: D2Family) -> Result<f64> {
    let a = 0.5 * r * r;
    Ok(2.0 * a * h_residue(1, r, family)? + 2.0 * a.powi(3) / 3.0 * h_residue(3, r, family)?)
}

/// `η_d²(D_r, s)` by analytic continuation of the double sum.
pub fn eta_d2(
    params: &SpectralParams,
    surface: &SurfaceData,
    s: ComplexValue,
    policy: &TruncationPolicy,
) -> Result<EtaResult> {
    if s == Complex64::new(0.0, 0.0) {
        return eta_d2_at_zero(params, surface, policy);
    }
    surface.require_fiber_trivial("eta_d2")?;
    if s.im == 0.0 && s.re == s.re.round() && s.re <= 1.0 {
        return Err(Error::pole("eta_d2", s));
    }
    let r = params.r();
    let f = d2_continued(s, r, D2Family::F)?;
    let g = d2_continued(s, r, D2Family::G)?;
    let value = pow_neg(r, -s) * (2.0 * surface.neg_euler() * f - 2.0 * surface.kappa_trivial() as f64 * g);
    Ok(EtaResult::plain(Component::D2, s, value, 1e-12 * value.norm()))
}

/// `η_d²(D_r, 0)` from the residues of the tail sums, checked against a
/// symmetric extrapolation of the continuation on `s = ±ε`.
pub fn eta_d2_at_zero(params: &SpectralParams, surface: &SurfaceData, policy: &TruncationPolicy) -> Result<EtaResult> {
    surface.require_fiber_trivial("eta_d2_at_zero")?;
    policy.validate()?;
    let r = params.r();
    if r > 0.5 {
        return Err(Error::param("r", format!("continuation to s = 0 needs r ≤ 0.5, got {r}")));
    }
    let v = surface.neg_euler();
    let kt = surface.kappa_trivial() as f64;
    let combine = |f: Complex64, g: Complex64| 2.0 * v * f - 2.0 * kt * g;
    let value = combine(
        Complex64::new(d2_at_zero(r, D2Family::F)?, 0.0),
        Complex64::new(d2_at_zero(r, D2Family::G)?, 0.0),
    )
    .re;

    let sym = |eps: f64| -> Result<f64> {
        let mut acc = 0.0;
        for sgn in [1.0, -1.0] {
            let s = Complex64::new(sgn * eps, 0.0);
            let f = d2_continued(s, r, D2Family::F)?;
            let g = d2_continued(s, r, D2Family::G)?;
            acc += 0.5 * (pow_neg(r, -s) * combine(f, g)).re;
        }
        Ok(acc)
    };
    let e = 1e-3;
    let check = (4.0 * sym(e)? - sym(2.0 * e)?) / 3.0;
    let mismatch = (check - value).abs();
    if mismatch > 1e-6 {
        return Err(Error::Continuation(format!(
            "residue value {value} and extrapolated continuation {check} differ by {mismatch:e}"
        )));
    }
    Ok(EtaResult::plain(Component::D2, Complex64::new(0.0, 0.0), Complex64::new(value, 0.0), mismatch))
}

/// Settings for [`eta_p_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaPSettings {
    pub quad: QuadratureSpec,
    pub policy: TruncationPolicy,
    pub weight_mode: WeightMode,
    /// The fit window ends at `window_scale · r²/(1 + r²)`.
    pub window_scale: f64,
    pub window_ratio: f64,
    pub points: usize,
    /// Number of `t^{(k−3)/2}` terms.
    pub n_pow: usize,
    /// Number of `t^{k−1} log t` terms; by default 2 with trivial cusps
    /// and 0 without.
    pub n_log: Option<usize>,
    pub residual_limit: f64,
}

impl Default for EtaPSettings {
    fn default() -> Self {
        EtaPSettings {
            quad: QuadratureSpec::default(),
            policy: TruncationPolicy::default(),
            weight_mode: WeightMode::Diagonal,
            window_scale: 0.01,
            window_ratio: 100.0,
            points: 48,
            n_pow: 8,
            n_log: None,
            residual_limit: 1e-6,
        }
    }
}

/// `Tr_p(D_r e^{−tD_r²})` with the requested J-factor pairing.
pub fn principal_trace_with_mode(
    t: f64,
    params: &SpectralParams,
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    settings: &EtaPSettings,
) -> Result<f64> {
    let b = geometric_side_with_mode(
        t,
        params,
        surface,
        classes,
        &settings.quad,
        &settings.policy,
        settings.weight_mode,
    )?;
    Ok(b.principal())
}

/// `η_p(D_r)` with default settings.
pub fn eta_p_regularized(
    params: &SpectralParams,
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
) -> Result<EtaResult> {
    let settings = EtaPSettings {
        quad: *quad,
        policy: *policy,
        ..EtaPSettings::default()
    };
    eta_p_with(params, surface, classes, &settings)
}

/// `η_p(D_r) = (η_p(D_r, s) − r₀/s)|_{s=0}`.
pub fn eta_p_with(
    params: &SpectralParams,
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    settings: &EtaPSettings,
) -> Result<EtaResult> {
    surface.require_fiber_trivial("eta_p")?;
    let r = params.r();
    if r > 0.5 {
        return Err(Error::param("r", format!("eta_p needs r ≤ 0.5, got {r}")));
    }
    let gap = -0.5 * r + (1.0 + 1.0 / (r * r)).sqrt();
    let mellin = MellinSettings {
        t_hi: settings.window_scale * r * r / (1.0 + r * r),
        window_ratio: settings.window_ratio,
        points: settings.points,
        template: small_time_template(
            settings.n_pow,
            settings.n_log.unwrap_or(if surface.kappa_trivial() > 0 { 2 } else { 0 }),
        ),
        t_max: (1e12f64).ln() / (gap * gap),
        residual_limit: settings.residual_limit,
    };
    let theta = |t: f64| principal_trace_with_mode(t, params, surface, classes, settings);
    let m = mellin_regularized(theta, &mellin, &settings.quad)?;
    Ok(EtaResult {
        value: Complex64::new(m.value, 0.0),
        s: Complex64::new(0.0, 0.0),
        component: Component::P,
        pole_subtracted: true,
        residue_r0: m.residue,
        err_estimate: m.err_estimate,
        fit: Some(m.fit),
    })
}

/// All components at `s = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaBreakdown {
    pub r: f64,
    pub d1: EtaResult,
    pub d2: EtaResult,
    pub p: EtaResult,
    pub total: EtaResult,
}

/// `η(D_r) = η_d¹(0) + η_d²(0) + η_p`.
pub fn eta_total(
    params: &SpectralParams,
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    settings: &EtaPSettings,
) -> Result<EtaBreakdown> {
    let zero = Complex64::new(0.0, 0.0);
    let d1 = eta_d1(params, surface, zero)?;
    let d2 = eta_d2_at_zero(params, surface, &settings.policy)?;
    let p = eta_p_with(params, surface, classes, settings)?;
    let value = d1.value + d2.value + p.value;
    let err = (d1.err_estimate.powi(2) + d2.err_estimate.powi(2) + p.err_estimate.powi(2)).sqrt();
    let total = EtaResult {
        value,
        s: zero,
        component: Component::Total,
        pole_subtracted: p.pole_subtracted,
        residue_r0: 0.0,
        err_estimate: err,
        fit: None,
    };
    Ok(EtaBreakdown {
        r: params.r(),
        d1,
        d2,
        p,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub eta_d1: f64,
    pub eta_d2: f64,
    pub eta_p: f64,
    pub eta_total: f64,
    pub err_d2: f64,
    pub err_p: f64,
    pub err_total: f64,
    pub residue_r0: f64,
}

/// Fitted exponent `γ` in `|value| ≈ A r^γ (1 + B r²)` over the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalOrders {
    pub d2: f64,
    pub p: f64,
    /// Order of `η_total − limit`.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `(2 − 2g − κ)/6`
    pub limit: f64,
    /// `−Vol/(12π)`
    pub limit_from_volume: f64,
    /// Polynomial extrapolation of `η_total` to `r² = 0`.
    pub extrapolated: f64,
    pub extrapolation_error: f64,
    /// `|η_total − limit|` decreases along the sweep.
    pub monotone: bool,
    pub orders: EmpiricalOrders,
}

/// Exponent `γ` of `|v| ≈ A r^γ (1 + B r²)`: least squares on
/// `log|v| = log A + γ log r + B r²` (without the `B` column for two points).
fn empirical_order(r: &[f64], v: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(v)
        .filter(|(_, &y)| y != 0.0)
        .map(|(&x, &y)| (x, y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let cols = if pts.len() >= 3 { 3 } else { 2 };
    let a = nalgebra::DMatrix::from_fn(pts.len(), cols, |i, j| match j {
        0 => 1.0,
        1 => pts[i].0.ln(),
        _ => pts[i].0 * pts[i].0,
    });
    let b = nalgebra::DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    match a.svd(true, true).solve(&b, 1e-14) {
        Ok(x) => x[1],
        Err(_) => f64::NAN,
    }
}

/// Evaluates every component along `r_list` and extrapolates `η_total`
/// to `r → 0`.
pub fn adiabatic_sweep(
    r_list: &[f64],
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    settings: &EtaPSettings,
) -> Result<SweepReport> {
    if r_list.len() < 2 {
        return Err(Error::param("r_list", "need at least two radii"));
    }
    if r_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("r_list", "radii must be strictly decreasing"));
    }
    if let Some(&r) = r_list.iter().find(|&&r| !(r > 0.0 && r <= 0.5)) {
        return Err(Error::param("r_list", format!("radius {r} outside (0, 0.5]")));
    }
    let rows = r_list
        .par_iter()
        .map(|&r| {
            let params = SpectralParams::new(r)?;
            let b = eta_total(&params, surface, classes, settings)?;
            Ok(SweepRow {
                r,
                eta_d1: b.d1.re(),
                eta_d2: b.d2.re(),
                eta_p: b.p.re(),
                eta_total: b.total.re(),
                err_d2: b.d2.err_estimate,
                err_p: b.p.err_estimate,
                err_total: b.total.err_estimate,
                residue_r0: b.p.residue_r0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let limit = surface.adiabatic_limit();
    let x: Vec<f64> = rows.iter().map(|w| w.r * w.r).collect();
    let y: Vec<Complex64> = rows.iter().map(|w| Complex64::new(w.eta_total, 0.0)).collect();
    let (ext, ext_err) = neville_at_zero(&x, &y);
    let dev: Vec<f64> = rows.iter().map(|w| (w.eta_total - limit).abs()).collect();
    let monotone = dev.windows(2).all(|w| w[1] <= w[0]);
    let rs: Vec<f64> = rows.iter().map(|w| w.r).collect();
    let orders = EmpiricalOrders {
        d2: empirical_order(&rs, &rows.iter().map(|w| w.eta_d2).collect::<Vec<_>>()),
        p: empirical_order(&rs, &rows.iter().map(|w| w.eta_p).collect::<Vec<_>>()),
        total: empirical_order(&rs, &dev),
    };
    Ok(SweepReport {
        rows,
        limit,
        limit_from_volume: -surface.volume() / (12.0 * PI),
        extrapolated: ext.re,
        extrapolation_error: ext_err,
        monotone,
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_power_sums() {
        for e in 0..6usize {
            let c = odd_power_sum_coefs(e);
            for l in [1u64, 3, 7, 11] {
                let want: f64 = (1..l).step_by(2).map(|j| (j as f64).powi(e as i32)).sum();
                let got: f64 = c.iter().enumerate().map(|(p, &cp)| cp * (l as f64).powi(p as i32)).sum();
                assert!((got - want).abs() < 1e-9 * want.max(1.0), "e={e} L={l}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn diff_pow_matches_naive() {
        let s = Complex64::new(3.2, 0.7);
        let (q, a) = (5.0, 0.3);
        let naive = Complex64::new(q - a, 0.0).powc(-s) - Complex64::new(q + a, 0.0).powc(-s);
        assert!((diff_pow(q, a, s) - naive).norm() < 1e-15);
    }

    #[test]
    fn neville_recovers_polynomial() {
        let x = [0.16, 0.04, 0.01];
        let y: Vec<Complex64> = x.iter().map(|&v| Complex64::new(1.0 + 2.0 * v - v * v, 0.0)).collect();
        let (v, _) = neville_at_zero(&x, &y);
        assert!((v.re - 1.0).abs() < 1e-14);
    }
}
