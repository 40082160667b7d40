//! Fourier transforms of the odd heat kernel `D e^{−tD²}` on principal and
//! discrete series, the discrete part of the heat trace, the Poisson
//! summation identity, and least-squares fits of small-time expansions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectralParams;
use crate::surface::SurfaceData;

/// Stopping rule for sums over K-type weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// A sum stops once the slowest Gaussian factor of the next term drops
    /// below this value.
    pub eps_tail: f64,
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            eps_tail: 1e-16,
            max_terms: 1_000_000,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_tail > 0.0 && self.eps_tail < 1.0) {
            return Err(Error::param("eps_tail", "must lie in (0, 1)"));
        }
        if self.max_terms == 0 {
            return Err(Error::param("max_terms", "must be positive"));
        }
        Ok(())
    }
}

/// A truncated sum together with the number of terms used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatSum {
    pub value: f64,
    pub terms: usize,
    /// Gaussian factor of the first omitted term.
    pub tail_factor: f64,
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    Ok(())
}

/// For `λ± = −r/2 ± I` and `f(λ) = λ e^{−tλ²}`, returns
/// `(f(λ₊) + f(λ₋), f(λ₊) − f(λ₋))` without overflow or cancellation in the
/// `cosh`/`sinh` combination.
pub(crate) fn principal_pair(t: f64, r: f64, i_val: f64) -> (f64, f64) {
    let x = t * r * i_val;
    if x < 20.0 {
        let common = (-t * (i_val * i_val + 0.25 * r * r)).exp();
        let (sh, ch) = (x.sinh(), x.cosh());
        (
            common * (2.0 * i_val * sh - r * ch),
            common * (2.0 * i_val * ch - r * sh),
        )
    } else {
        let lo = i_val - 0.5 * r;
        let hi = i_val + 0.5 * r;
        let ep = (2.0 * i_val - r) * (-t * lo * lo).exp();
        let em = (2.0 * i_val + r) * (-t * hi * hi).exp();
        (0.5 * (ep - em), 0.5 * (ep + em))
    }
}

/// Visits odd `o = 1, 3, 5, …` with `I = √(o²c + shift)` until the Gaussian
/// factor `e^{−t(I − r/2)²}` is negligible.
pub(crate) fn for_each_odd<F>(
    op: &'static str,
    t: f64,
    r: f64,
    c: f64,
    shift: f64,
    first: u64,
    policy: &TruncationPolicy,
    mut f: F,
) -> Result<(usize, f64)>
where
    F: FnMut(u64, f64),
{
    let mut o = first;
    for k in 0..policy.max_terms {
        let of = o as f64;
        let i_val = (of * of * c + shift).sqrt();
        let d = i_val - 0.5 * r;
        let g = (-t * d * d).exp();
        if d > 0.0 && g < policy.eps_tail {
            return Ok((k, g));
        }
        f(o, i_val);
        o += 2;
    }
    Err(Error::TruncationBudget {
        op,
        max_terms: policy.max_terms,
        eps_tail: policy.eps_tail,
    })
}

/// `h_{t,r}(τ) = Σ_{m∈2ℤ} (λ₊ e^{−tλ₊²} + λ₋ e^{−tλ₋²})` over principal-series
/// blocks. Weights `m` and `2 − m` give the same pair, so the sum runs over
/// odd `o = |m − 1|` and is doubled.
pub fn h_principal(t: f64, params: &SpectralParams, tau: f64, policy: &TruncationPolicy) -> Result<f64> {
    Ok(h_principal_detailed(t, params, tau, policy)?.value)
}

pub fn h_principal_detailed(
    t: f64,
    params: &SpectralParams,
    tau: f64,
    policy: &TruncationPolicy,
) -> Result<HeatSum> {
    check_t(t)?;
    policy.validate()?;
    let r = params.r();
    let mut acc = 0.0;
    let (terms, tail_factor) = for_each_odd("h_principal", t, r, params.c(), 4.0 * tau * tau, 1, policy, |_, i| {
        acc += principal_pair(t, r, i).0;
    })?;
    Ok(HeatSum {
        value: 2.0 * acc,
        terms,
        tail_factor,
    })
}

fn regime_warning(op: &str, t: f64, r: f64) {
    if !(t > 0.0 && t <= 1.0) || !(r > 0.0 && r <= 1.0) {
        log::warn!("{op}: (t, r) = ({t}, {r}) lies outside (0, 1] x (0, 1]");
    }
}

/// Power-series form of `h_{t,r}(τ)`:
/// `e^{−r²t/4 − 4τ²t} Σ_m e^{−(m−1)²(1+r^{-2})t} Σ_{k≤K} (−r (rt)^{2k}/(2k)! + 2 (rt)^{2k−1}/(2k−1)!) I^{2k}`.
pub fn h_principal_series_form(
    t: f64,
    params: &SpectralParams,
    tau: f64,
    policy: &TruncationPolicy,
    depth: usize,
) -> Result<f64> {
    check_t(t)?;
    policy.validate()?;
    let r = params.r();
    regime_warning("h_principal_series_form", t, r);
    let c = params.c();
    let prefactor = (-0.25 * r * r * t - 4.0 * tau * tau * t).exp();
    let rt = r * t;
    let mut acc = 0.0;
    for_each_odd("h_principal_series_form", t, r, c, 4.0 * tau * tau, 1, policy, |o, i| {
        let of = o as f64;
        let i2 = i * i;
        // even = (rt·I)^{2k}/(2k)!, odd = (rt)^{2k−1} I^{2k}/(2k−1)!
        let mut even = 1.0;
        let mut odd = 0.0;
        let mut inner = -r;
        for k in 1..=depth {
            let kk = (2 * k) as f64;
            odd = if k == 1 { rt * i2 } else { odd * rt * rt * i2 / ((kk - 2.0) * (kk - 1.0)) };
            even *= rt * rt * i2 / ((kk - 1.0) * kk);
            inner += -r * even + 2.0 * odd;
        }
        acc += (-of * of * c * t).exp() * inner;
    })?;
    Ok(2.0 * prefactor * acc)
}

/// Upper bound `2r e^{−r²t/4−4τ²t} Σ_m e^{−(m−1)²(1+r^{-2})t} (1 + I² + e^{I² r t})`.
///
/// The sum diverges for `r ≥ 1`, where the bound is `+∞`.
pub fn htr_estimate(t: f64, params: &SpectralParams, tau: f64, policy: &TruncationPolicy) -> Result<f64> {
    check_t(t)?;
    let r = params.r();
    if r >= 1.0 {
        return Ok(f64::INFINITY);
    }
    regime_warning("htr_estimate", t, r);
    let c = params.c();
    let mut acc = 0.0;
    let mut o = 1u64;
    for _ in 0..policy.max_terms {
        let of = o as f64;
        let i2 = of * of * c + 4.0 * tau * tau;
        let base = (-of * of * c * t).exp();
        let grow = (-i2 * t * (1.0 - r) + 4.0 * tau * tau * t).exp();
        let term = base * (1.0 + i2) + grow;
        acc += term;
        if term <= policy.eps_tail * acc {
            return Ok(2.0 * r * (-0.25 * r * r * t - 4.0 * tau * tau * t).exp() * 2.0 * acc);
        }
        o += 2;
    }
    Err(Error::TruncationBudget {
        op: "htr_estimate",
        max_terms: policy.max_terms,
        eps_tail: policy.eps_tail,
    })
}

/// `h_{t,r}(n) = λ(n) e^{−tλ(n)²} + Σ_{m∈n+2ℕ} (λ₊ e^{−tλ₊²} + λ₋ e^{−tλ₋²})`
/// for the discrete series `π_{±n}`; even in `n`.
pub fn h_discrete(t: f64, params: &SpectralParams, n: i64, policy: &TruncationPolicy) -> Result<f64> {
    check_t(t)?;
    policy.validate()?;
    if n % 2 != 0 || n.abs() < 2 {
        return Err(Error::param("n", format!("must be even with |n| ≥ 2, got {n}")));
    }
    let r = params.r();
    let n1 = (n.abs() - 1) as f64;
    let lam = -0.5 * r - n1 / r;
    let mut acc = lam * (-t * lam * lam).exp();
    let first = n.unsigned_abs() + 1;
    for_each_odd("h_discrete", t, r, params.c(), -n1 * n1, first, policy, |_, i| {
        acc += principal_pair(t, r, i).0;
    })?;
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoissonSide {
    Lhs,
    Rhs,
}

/// Both sides of
/// `Σ_{m∈2ℤ} (m−1)^{2p} c^p e^{−(m−1)² c t} = (−1)^p ∂_t^p Σ_{m∈ℤ} (−1)^m √π/(2√(ct)) e^{−π²m²/(4ct)}`
/// with `c = 1 + r^{-2}`. The right side is differentiated in closed form.
pub fn poisson_theta(p: u32, t: f64, params: &SpectralParams, side: PoissonSide) -> Result<f64> {
    check_t(t)?;
    let c = params.c();
    match side {
        PoissonSide::Lhs => {
            let mut acc = 0.0;
            let mut o = 1.0_f64;
            loop {
                let x = o * o * c;
                let term = x.powi(p as i32) * (-x * t).exp();
                acc += term;
                if x * t > 40.0 && term < 1e-17 * acc {
                    break;
                }
                o += 2.0;
            }
            Ok(2.0 * acc)
        }
        PoissonSide::Rhs => {
            let u = 1.0 / t;
            let amp = PI.sqrt() / (2.0 * c.sqrt());
            let mut acc = 0.0;
            for m in 0u32.. {
                let b = PI * PI * (m as f64).powi(2) / (4.0 * c);
                if b * u > 745.0 {
                    break;
                }
                // ∂_t^p [t^{-1/2} e^{-b/t}] = t^{-1/2} e^{-b/t} P(u), P a polynomial in u = 1/t.
                let mut poly = vec![1.0];
                for _ in 0..p {
                    let mut next = vec![0.0; poly.len() + 2];
                    for (k, &a) in poly.iter().enumerate() {
                        next[k + 1] += -0.5 * a - k as f64 * a;
                        next[k + 2] += b * a;
                    }
                    poly = next;
                }
                let pv = poly.iter().rev().fold(0.0, |acc, &a| acc * u + a);
                let term = amp * u.sqrt() * (-b * u).exp() * pv;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let weight = if m == 0 { 1.0 } else { 2.0 };
                acc += sign * weight * term;
                if m > 0 && term.abs() < 1e-18 * acc.abs() {
                    break;
                }
            }
            Ok(if p % 2 == 0 { acc } else { -acc })
        }
    }
}

/// Contribution of the discrete series to `Tr(D_r e^{−tD_r²})`:
/// `2(2g−2+κ) Σ_{n∈2ℕ} (n−1) h(n) − 2κᵗ Σ_{n∈2ℕ} h(n)`, counting `±n`.
pub fn tr_discrete_part(
    t: f64,
    params: &SpectralParams,
    surface: &SurfaceData,
    policy: &TruncationPolicy,
) -> Result<f64> {
    surface.require_fiber_trivial("tr_discrete_part")?;
    let (ident, cusp) = discrete_sums(t, params, policy)?;
    Ok(2.0 * surface.neg_euler() * ident - 2.0 * surface.kappa_trivial() as f64 * cusp)
}

/// `(Σ_{n∈2ℕ} (n−1) h(n), Σ_{n∈2ℕ} h(n))`.
pub(crate) fn discrete_sums(t: f64, params: &SpectralParams, policy: &TruncationPolicy) -> Result<(f64, f64)> {
    check_t(t)?;
    policy.validate()?;
    let r = params.r();
    let mut ident = 0.0;
    let mut cusp = 0.0;
    let mut n = 2i64;
    for _ in 0..policy.max_terms {
        let lam = -0.5 * r - (n - 1) as f64 / r;
        if (-t * lam * lam).exp() < policy.eps_tail {
            return Ok((ident, cusp));
        }
        let h = h_discrete(t, params, n, policy)?;
        ident += (n - 1) as f64 * h;
        cusp += h;
        n += 2;
    }
    Err(Error::TruncationBudget {
        op: "tr_discrete_part",
        max_terms: policy.max_terms,
        eps_tail: policy.eps_tail,
    })
}

/// A basis function `t^power` or `t^power log t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub power: f64,
    pub has_log: bool,
}

impl Exponent {
    pub fn pure(power: f64) -> Self {
        Exponent { power, has_log: false }
    }

    pub fn log(power: f64) -> Self {
        Exponent { power, has_log: true }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let v = t.powf(self.power);
        if self.has_log {
            v * t.ln()
        } else {
            v
        }
    }
}

/// Small-time template `Σ_{k<n_pow} a_k t^{(k−3)/2} + Σ_{k<n_log} b_k t^{k−1} log t`.
/// Without trivial cusps the expansion has no logarithms and `n_log` should be 0.
pub fn small_time_template(n_pow: usize, n_log: usize) -> Vec<Exponent> {
    let mut v: Vec<Exponent> = (0..n_pow)
        .map(|k| Exponent::pure((k as f64 - 3.0) / 2.0))
        .collect();
    v.extend((0..n_log).map(|k| Exponent::log(k as f64 - 1.0)));
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub exponents: Vec<Exponent>,
    pub coefficients: Vec<f64>,
    /// RMS of the weighted residual relative to the RMS of the weighted data.
    pub residual: f64,
    pub condition: f64,
}

impl AsymptoticFit {
    pub fn coefficient(&self, power: f64, has_log: bool) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .find(|(e, _)| e.has_log == has_log && (e.power - power).abs() < 1e-12)
            .map(|(_, &c)| c)
            .unwrap_or(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(e, c)| c * e.eval(t))
            .sum()
    }
}

/// Weighted least-squares fit of `samples` in the given basis.
///
/// Times are rescaled by their geometric mean and each row is multiplied by
/// `t^{−p_min}` so that the most singular basis element is bounded. Each
/// `t^p log t` element needs a `t^p` companion in the template.
pub fn fit_small_time(samples: &[(f64, f64)], template: &[Exponent]) -> Result<AsymptoticFit> {
    let n = template.len();
    if n == 0 {
        return Err(Error::param("template", "must not be empty"));
    }
    if samples.len() < 2 * n {
        return Err(Error::param(
            "samples",
            format!("need at least {} samples for {n} coefficients", 2 * n),
        ));
    }
    if samples.iter().any(|&(t, y)| !(t > 0.0) || !y.is_finite()) {
        return Err(Error::param("samples", "times must be positive and values finite"));
    }
    for e in template.iter().filter(|e| e.has_log) {
        if !template.iter().any(|p| !p.has_log && p.power == e.power) {
            return Err(Error::SingularFit(format!(
                "log term at power {} has no pure companion",
                e.power
            )));
        }
    }
    let log_mean = samples.iter().map(|&(t, _)| t.ln()).sum::<f64>() / samples.len() as f64;
    let scale = log_mean.exp();
    let p_min = template.iter().map(|e| e.power).fold(f64::INFINITY, f64::min);
    let rows = samples.len();
    let mut a = DMatrix::<f64>::zeros(rows, n);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, &(t, y)) in samples.iter().enumerate() {
        let x = t / scale;
        let w = x.powf(-p_min);
        for (j, e) in template.iter().enumerate() {
            a[(i, j)] = w * e.eval(x);
        }
        b[i] = w * y;
    }
    // Equilibrate columns before the SVD.
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, &nj) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / nj);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() {
        return Err(Error::SingularFit("design matrix is rank deficient".into()));
    }
    if condition > 1e12 {
        log::warn!("fit_small_time: ill-conditioned design matrix (cond = {condition:e})");
    }
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::SingularFit(e.to_string()))?;
    let res = &a * &sol - &b;
    let residual = res.norm() / b.norm().max(f64::MIN_POSITIVE);
    let scaled: Vec<f64> = (0..n).map(|j| sol[j] / norms[j]).collect();
    // Undo t = scale·x: x^p log x = scale^{-p} t^p (log t − log scale).
    let mut coefficients = vec![0.0; n];
    for (j, e) in template.iter().enumerate() {
        let f = scale.powf(-e.power);
        if e.has_log {
            coefficients[j] += f * scaled[j];
            let k = template
                .iter()
                .position(|p| !p.has_log && p.power == e.power)
                .expect("companion checked above");
            coefficients[k] -= f * scaled[j] * scale.ln();
        } else {
            coefficients[j] += f * scaled[j];
        }
    }
    Ok(AsymptoticFit {
        exponents: template.to_vec(),
        coefficients,
        residual,
        condition,
    })
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: f64) -> SpectralParams {
        SpectralParams::new(r).unwrap()
    }

    #[test]
    fn h_principal_example() {
        let pol = TruncationPolicy::default();
        let v = h_principal(1.0, &p(1.0), 0.0, &pol).unwrap();
        // Direct sum over m ∈ {−4, …, 6}.
        let f = |l: f64| l * (-l * l).exp();
        let want: f64 = (-2..=3)
            .map(|k| {
                let o = (2 * k - 1) as f64;
                let root = (2.0 * o * o).sqrt();
                f(-0.5 + root) + f(-0.5 - root)
            })
            .sum();
        assert!((v - want).abs() < 1e-14);
        assert!((v - 0.6946).abs() < 1e-3);
        assert!(h_principal(1.0, &p(1.0), 30.0, &pol).unwrap().abs() < 1e-300);
        assert_eq!(
            h_principal(0.3, &p(0.4), 1.7, &pol).unwrap(),
            h_principal(0.3, &p(0.4), -1.7, &pol).unwrap()
        );
    }

    #[test]
    fn series_form_matches() {
        let pol = TruncationPolicy::default();
        let a = h_principal(0.5, &p(0.3), 0.7, &pol).unwrap();
        let b = h_principal_series_form(0.5, &p(0.3), 0.7, &pol, 60).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn series_depth_one_is_leading_structure() {
        let pol = TruncationPolicy::default();
        let (t, r, tau) = (0.2, 0.1, 0.4);
        let params = p(r);
        let got = h_principal_series_form(t, &params, tau, &pol, 1).unwrap();
        let c = params.c();
        let mut want = 0.0;
        for o in (1..2000).step_by(2) {
            let of = o as f64;
            let i2 = of * of * c + 4.0 * tau * tau;
            want += (-of * of * c * t).exp() * (-r + r * t * (2.0 - r * r * t / 2.0) * i2);
        }
        want *= 2.0 * (-r * r * t / 4.0 - 4.0 * tau * tau * t).exp();
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn discrete_example() {
        let pol = TruncationPolicy::default();
        let v = h_discrete(1.0, &p(1.0), 2, &pol).unwrap();
        assert!((v + 0.15809).abs() < 1e-4, "{v}");
        assert_eq!(v, h_discrete(1.0, &p(1.0), -2, &pol).unwrap());
        assert!(h_discrete(1.0, &p(1.0), 3, &pol).is_err());
    }

    #[test]
    fn poisson_examples() {
        let l = poisson_theta(0, 1.0, &p(1.0), PoissonSide::Lhs).unwrap();
        let r = poisson_theta(0, 1.0, &p(1.0), PoissonSide::Rhs).unwrap();
        assert!((l - 0.27067).abs() < 1e-5);
        assert!((l - r).abs() < 1e-10);
        let l = poisson_theta(1, 1.0, &p(0.5), PoissonSide::Lhs).unwrap();
        let r = poisson_theta(1, 1.0, &p(0.5), PoissonSide::Rhs).unwrap();
        assert!((l - r).abs() < 1e-9 * l.abs().max(1.0));
    }

    #[test]
    fn fit_recovers_synthetic_terms() {
        let ts = log_grid(1e-3, 0.5, 40);
        let pure: Vec<_> = ts.iter().map(|&t| (t, 2.5 * t.powf(-1.5))).collect();
        let fit = fit_small_time(&pure, &[Exponent::pure(-1.5)]).unwrap();
        assert!((fit.coefficients[0] - 2.5).abs() < 1e-8);

        let mixed: Vec<_> = ts
            .iter()
            .map(|&t| (t, 0.7 * t.powf(-1.5) - 0.3 * t.powi(-1) * t.ln()))
            .collect();
        let tpl = [Exponent::pure(-1.5), Exponent::pure(-1.0), Exponent::log(-1.0)];
        let fit = fit_small_time(&mixed, &tpl).unwrap();
        assert!((fit.coefficient(-1.5, false) - 0.7).abs() < 1e-6);
        assert!((fit.coefficient(-1.0, true) + 0.3).abs() < 1e-6);
        assert!(fit.coefficient(-1.0, false).abs() < 1e-6);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let ts = log_grid(1e-3, 0.5, 3);
        let s: Vec<_> = ts.iter().map(|&t| (t, t)).collect();
        assert!(fit_small_time(&s, &[Exponent::pure(1.0), Exponent::pure(0.0)]).is_err());
        let ts = log_grid(1e-3, 0.5, 10);
        let s: Vec<_> = ts.iter().map(|&t| (t, t)).collect();
        assert!(matches!(
            fit_small_time(&s, &[Exponent::log(1.0)]),
            Err(Error::SingularFit(_))
        ));
    }
}
