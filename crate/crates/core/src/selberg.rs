//! Geometric side of the Selberg trace formula for `f_{t,r}`, the test
//! function whose spectral side is `Tr(D_r e^{−tD_r²})`.
//!
//! All τ-integrands are even after symmetrization, so each integral over ℝ
//! is computed as twice the integral over `[0, cutoff]` with
//! `cutoff = √(ln(1/eps_tail)/(4t)) + tau_margin`. The integrals are
//! evaluated together as one vector-valued quadrature.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heat::{self, for_each_odd, principal_pair, TruncationPolicy};
use crate::quad::{integrate_vec, QuadratureSpec};
use crate::specfn::digamma;
use crate::spectrum::SpectralParams;
use crate::surface::{HyperbolicClass, SurfaceData};

/// How the diagonal factor `J(s)^{-1}J'(s)` on weight `m` is paired with the
/// 2×2 heat blocks on weights `(m − 2, m)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `w_m` is the `m`-diagonal entry of `B e^{−tB²}` for each block `B`.
    #[default]
    Diagonal,
    /// Both weights of a block receive half of its trace.
    BlockAverage,
}

/// Per-integral error estimates of a [`TraceBreakdown`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceErrors {
    pub identity_cont: f64,
    pub hyperbolic: f64,
    pub cusp_psi: f64,
    pub cusp_log2: f64,
    pub pv_jterm: f64,
    /// Sum of the absolute errors above.
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceBreakdown {
    pub identity_cont: f64,
    pub identity_disc: f64,
    pub hyperbolic: f64,
    pub cusp_psi: f64,
    pub cusp_disc: f64,
    pub cusp_log2: f64,
    pub h_zero: f64,
    pub pv_jterm: f64,
    pub total: f64,
    pub errors: TraceErrors,
}

impl TraceBreakdown {
    /// Discrete-series part `identity_disc + cusp_disc`.
    pub fn discrete(&self) -> f64 {
        self.identity_disc + self.cusp_disc
    }

    /// Everything except the discrete-series sums.
    pub fn principal(&self) -> f64 {
        self.identity_cont + self.hyperbolic + self.cusp_psi + self.cusp_log2 + self.h_zero + self.pv_jterm
    }
}

/// The two forms of `J(s)^{-1}J'(s)` on weight `m` at `s = ½ + iτ`:
///
/// * A: `ψ(½+iτ) + ψ(iτ) − ψ((1+m)/2+iτ) − ψ((1−m)/2+iτ)`
/// * B: `2(ψ(1+iτ) − ψ(1+2iτ)) − 1/(iτ) + 2 log 2 − 4 Σ_{j odd < |m|} j/(j²+4τ²)`
pub fn jfactor(m: i64, tau: f64) -> Result<(Complex64, Complex64)> {
    if m % 2 != 0 {
        return Err(Error::param("m", format!("must be even, got {m}")));
    }
    if tau == 0.0 {
        return Err(Error::pole("jfactor", "tau = 0"));
    }
    let c = |re: f64| Complex64::new(re, tau);
    let mf = m as f64;
    let form_a = digamma(c(0.5))? + digamma(c(0.0))? - digamma(c(0.5 * (1.0 + mf)))? - digamma(c(0.5 * (1.0 - mf)))?;
    let form_b = 2.0 * (digamma(c(1.0))? - digamma(Complex64::new(1.0, 2.0 * tau))?)
        - 1.0 / Complex64::new(0.0, tau)
        + 2.0 * LN_2
        - 4.0 * odd_partial_sum(m.unsigned_abs().saturating_sub(1), tau);
    Ok((form_a, form_b))
}

/// `Σ_{j odd ≤ k} j/(j²+4τ²)`.
fn odd_partial_sum(k: u64, tau: f64) -> f64 {
    (1..=k)
        .step_by(2)
        .map(|j| {
            let j = j as f64;
            j / (j * j + 4.0 * tau * tau)
        })
        .sum()
}

/// Gaussian cut-off of the τ-integrals.
pub fn tau_cutoff(t: f64, quad: &QuadratureSpec, policy: &TruncationPolicy) -> f64 {
    ((1.0 / policy.eps_tail).ln() / (4.0 * t)).sqrt() + quad.tau_margin
}

const IDX_TANH: usize = 0;
const IDX_PSI: usize = 1;
const IDX_H: usize = 2;
const IDX_J: usize = 3;
const IDX_COS: usize = 4;

/// Integrand components at τ: `[τ tanh(πτ) h, Re ψ(1+2iτ) h, h, J, cos(u_k τ) h …]`.
fn integrand(
    t: f64,
    params: &SpectralParams,
    tau: f64,
    us: &[f64],
    mode: WeightMode,
    policy: &TruncationPolicy,
    out: &mut [f64],
) -> Result<()> {
    let r = params.r();
    let tau2 = 4.0 * tau * tau;
    let psi1 = digamma(Complex64::new(1.0, tau))?.re;
    let psi2 = digamma(Complex64::new(1.0, 2.0 * tau))?.re;
    // Real, even part of form B at m = 0.
    let jbase = 2.0 * (psi1 - psi2) + 2.0 * LN_2;
    let mut h = 0.0;
    let mut jsum = 0.0;
    let mut partial = 0.0;
    for_each_odd("pv_jterm", t, r, params.c(), tau2, 1, policy, |o, i| {
        let of = o as f64;
        let (sum, diff) = principal_pair(t, r, i);
        let frac = of / (of * of + tau2);
        let j_lo = jbase - 4.0 * partial;
        partial += frac;
        let j_hi = jbase - 4.0 * partial;
        h += sum;
        jsum += match mode {
            WeightMode::Diagonal => sum * (j_lo + j_hi) + 4.0 * of * frac * diff / (r * i),
            WeightMode::BlockAverage => sum * (j_lo + j_hi),
        };
    })?;
    let h = 2.0 * h;
    out[IDX_TANH] = tau * (PI * tau).tanh() * h;
    out[IDX_PSI] = psi2 * h;
    out[IDX_H] = h;
    out[IDX_J] = jsum;
    for (k, &u) in us.iter().enumerate() {
        out[IDX_COS + k] = (u * tau).cos() * h;
    }
    Ok(())
}

/// Full-line integrals (value, error) of the integrand components.
fn tau_integrals(
    t: f64,
    params: &SpectralParams,
    us: &[f64],
    mode: WeightMode,
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
) -> Result<Vec<(f64, f64)>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    policy.validate()?;
    quad.validate()?;
    let cutoff = tau_cutoff(t, quad, policy);
    let dim = IDX_COS + us.len();
    let mut failure: Option<Error> = None;
    let est = integrate_vec(
        |tau, out: &mut [f64]| {
            if failure.is_some() {
                out.iter_mut().for_each(|v| *v = 0.0);
                return;
            }
            if let Err(e) = integrand(t, params, tau, us, mode, policy, out) {
                failure = Some(e);
                out.iter_mut().for_each(|v| *v = 0.0);
            }
        },
        0.0,
        cutoff,
        dim,
        quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est?.into_iter().map(|e| (2.0 * e.value, 2.0 * e.error)).collect())
}

/// `(vol/2π) ∫ τ tanh(πτ) h dτ` and `(vol/2π) Σ_{n even} (|n|−1) h(n)`.
pub fn identity_term(
    t: f64,
    params: &SpectralParams,
    surface: &SurfaceData,
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
) -> Result<(f64, f64)> {
    let v = surface.neg_euler();
    let ints = tau_integrals(t, params, &[], WeightMode::Diagonal, quad, policy)?;
    let (ident, _) = heat::discrete_sums(t, params, policy)?;
    Ok((v * ints[IDX_TANH].0, 2.0 * v * ident))
}

/// `Σ_γ tr χ(γ) u_γ / (4π[Γ_γ:Z] sinh(u_γ/2)) ∫ cos(u_γ τ) h dτ`.
pub fn hyperbolic_term(
    t: f64,
    params: &SpectralParams,
    classes: &[HyperbolicClass],
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
) -> Result<f64> {
    if classes.is_empty() {
        return Ok(0.0);
    }
    for c in classes {
        c.validate()?;
    }
    let us: Vec<f64> = classes.iter().map(|c| c.u).collect();
    let ints = tau_integrals(t, params, &us, WeightMode::Diagonal, quad, policy)?;
    Ok(classes
        .iter()
        .enumerate()
        .map(|(k, c)| c.weight() * ints[IDX_COS + k].0)
        .sum())
}

/// Cusp contributions `(ψ-integral, discrete sum, log 2 integral, h(0) term)`:
///
/// `−(κᵗ/π) ∫ Re ψ(1+2iτ) h dτ`, `−κᵗ Σ_{n even} h(n)`,
/// `(κ−κᵗ)(log 2/π) ∫ h dτ` and `(κᵗ/2) h(0)`.
pub fn cusp_terms(
    t: f64,
    params: &SpectralParams,
    surface: &SurfaceData,
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
) -> Result<(f64, f64, f64, f64)> {
    let kt = surface.kappa_trivial() as f64;
    let kn = surface.kappa as f64 - kt;
    if kt == 0.0 && kn == 0.0 {
        return Ok((0.0, 0.0, 0.0, 0.0));
    }
    let ints = tau_integrals(t, params, &[], WeightMode::Diagonal, quad, policy)?;
    let (_, cusp) = heat::discrete_sums(t, params, policy)?;
    let h0 = heat::h_principal(t, params, 0.0, policy)?;
    Ok((
        -kt / PI * ints[IDX_PSI].0,
        -2.0 * kt * cusp,
        kn * LN_2 / PI * ints[IDX_H].0,
        0.5 * kt * h0,
    ))
}

/// `−(1/4π) p.v.∫ Tr(J^{-1}J'(½+iτ) π_{½+iτ}(f_{t,r})) dτ`.
///
/// The odd `1/(iτ)` and imaginary digamma parts cancel between `±τ`, so only
/// the real even part is integrated.
pub fn pv_jterm(
    t: f64,
    params: &SpectralParams,
    policy: &TruncationPolicy,
    quad: &QuadratureSpec,
    mode: WeightMode,
) -> Result<f64> {
    let ints = tau_integrals(t, params, &[], mode, quad, policy)?;
    Ok(-ints[IDX_J].0 / (4.0 * PI))
}

/// The full geometric side, or only its non-discrete part when
/// `with_discrete` is false (then `identity_disc = cusp_disc = 0`).
fn assemble(
    t: f64,
    params: &SpectralParams,
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
    mode: WeightMode,
    with_discrete: bool,
) -> Result<TraceBreakdown> {
    surface.require_fiber_trivial("geometric_side")?;
    for c in classes {
        c.validate()?;
    }
    let v = surface.neg_euler();
    let kt = surface.kappa_trivial() as f64;
    let kn = surface.kappa as f64 - kt;
    let us: Vec<f64> = classes.iter().map(|c| c.u).collect();
    let ints = tau_integrals(t, params, &us, mode, quad, policy)?;
    let (ident, cusp) = if with_discrete {
        heat::discrete_sums(t, params, policy)?
    } else {
        (0.0, 0.0)
    };
    let h0 = if kt > 0.0 {
        heat::h_principal(t, params, 0.0, policy)?
    } else {
        0.0
    };

    let identity_cont = v * ints[IDX_TANH].0;
    let identity_disc = 2.0 * v * ident;
    let mut hyperbolic = 0.0;
    let mut hyp_err = 0.0;
    for (k, c) in classes.iter().enumerate() {
        let w = c.weight();
        hyperbolic += w * ints[IDX_COS + k].0;
        hyp_err += (w * ints[IDX_COS + k].1).abs();
    }
    let cusp_psi = -kt / PI * ints[IDX_PSI].0;
    let cusp_disc = -2.0 * kt * cusp;
    let cusp_log2 = kn * LN_2 / PI * ints[IDX_H].0;
    let h_zero = 0.5 * kt * h0;
    let pv_jterm = -ints[IDX_J].0 / (4.0 * PI);

    let mut total = identity_cont;
    total += identity_disc;
    total += hyperbolic;
    total += cusp_psi;
    total += cusp_disc;
    total += cusp_log2;
    total += h_zero;
    total += pv_jterm;

    let mut errors = TraceErrors {
        identity_cont: (v * ints[IDX_TANH].1).abs(),
        hyperbolic: hyp_err,
        cusp_psi: (kt / PI * ints[IDX_PSI].1).abs(),
        cusp_log2: (kn * LN_2 / PI * ints[IDX_H].1).abs(),
        pv_jterm: (ints[IDX_J].1 / (4.0 * PI)).abs(),
        total: 0.0,
    };
    errors.total = errors.identity_cont + errors.hyperbolic + errors.cusp_psi + errors.cusp_log2 + errors.pv_jterm;
    Ok(TraceBreakdown {
        identity_cont,
        identity_disc,
        hyperbolic,
        cusp_psi,
        cusp_disc,
        cusp_log2,
        h_zero,
        pv_jterm,
        total,
        errors,
    })
}

/// Right-hand side of the trace formula for `Tr(D_r e^{−tD_r²})`.
pub fn geometric_side(
    t: f64,
    params: &SpectralParams,
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
) -> Result<TraceBreakdown> {
    assemble(t, params, surface, classes, quad, policy, WeightMode::Diagonal, true)
}

/// Same as [`geometric_side`] with an explicit J-factor pairing.
pub fn geometric_side_with_mode(
    t: f64,
    params: &SpectralParams,
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
    mode: WeightMode,
) -> Result<TraceBreakdown> {
    assemble(t, params, surface, classes, quad, policy, mode, true)
}

/// `Tr_p(D_r e^{−tD_r²})`: the geometric side minus the discrete-series
/// part, computed without evaluating the discrete sums. Returns the value and
/// its quadrature error estimate.
pub fn principal_trace(
    t: f64,
    params: &SpectralParams,
    surface: &SurfaceData,
    classes: &[HyperbolicClass],
    quad: &QuadratureSpec,
    policy: &TruncationPolicy,
) -> Result<(f64, f64)> {
    let b = assemble(t, params, surface, classes, quad, policy, WeightMode::Diagonal, false)?;
    Ok((b.principal(), b.errors.total))
}
