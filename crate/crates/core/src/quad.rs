//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature for scalar and
//! vector valued integrands on finite intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], …, XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

const ROUNDOFF: f64 = 100.0 * f64::EPSILON;

/// Identifier of the nested rule driving the adaptive scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussKronrod21,
}

/// Tolerances and limits for the τ-integrals of the trace formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    /// Relative tolerance; a component is converged once its error is below
    /// `max(abs_tol, rel_tol·|value|)`.
    pub rel_tol: f64,
    /// Safety margin added to the Gaussian cut-off `√(ln(1/ε)/(4t))`.
    pub tau_margin: f64,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
    pub max_intervals: usize,
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            tau_margin: 2.0,
            initial_panels: 8,
            max_intervals: 4000,
            rule: QuadratureRule::GaussKronrod21,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::param("abs_tol", "must be positive"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::param("rel_tol", "must be non-negative"));
        }
        if !(self.tau_margin >= 0.0) {
            return Err(Error::param("tau_margin", "must be non-negative"));
        }
        if self.initial_panels == 0 || self.max_intervals < self.initial_panels {
            return Err(Error::param(
                "max_intervals",
                "must be at least initial_panels > 0",
            ));
        }
        Ok(())
    }

    /// A spec with both tolerances scaled by `factor` and one more level of
    /// initial subdivision; used for refinement checks.
    pub fn refined(&self, factor: f64) -> Self {
        QuadratureSpec {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            tau_margin: self.tau_margin * 2.0,
            initial_panels: self.initial_panels * 2,
            max_intervals: self.max_intervals * 2,
            rule: self.rule,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    abs_value: Vec<f64>,
}

/// One 21-point Kronrod evaluation with the embedded Gauss error estimate,
/// per component.
fn gk21<F>(f: &mut F, a: f64, b: f64, dim: usize, scratch: &mut Scratch) -> Panel
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let Scratch { fv, values } = scratch;
    // values[j] holds f at XGK node j on the left (j) and right (21 - 1 - j).
    for (j, &x) in XGK.iter().enumerate() {
        if j == 10 {
            f(center, &mut values[10 * dim..11 * dim]);
            continue;
        }
        let dx = half * x;
        f(center - dx, &mut values[j * dim..(j + 1) * dim]);
        f(center + dx, &mut values[(20 - j) * dim..(21 - j) * dim]);
    }
    let mut value = vec![0.0; dim];
    let mut error = vec![0.0; dim];
    let mut abs_value = vec![0.0; dim];
    for c in 0..dim {
        for (j, slot) in fv.iter_mut().enumerate() {
            *slot = values[j * dim + c];
        }
        let fc = fv[10];
        let mut res_k = WGK[10] * fc;
        let mut res_g = 0.0;
        let mut res_abs = WGK[10] * fc.abs();
        for j in 0..10 {
            let (l, r) = (fv[j], fv[20 - j]);
            res_k += WGK[j] * (l + r);
            res_abs += WGK[j] * (l.abs() + r.abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * (l + r);
            }
        }
        let mean = 0.5 * res_k;
        let mut res_asc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[20 - j] - mean).abs());
        }
        let err = (res_k - res_g) * half;
        value[c] = res_k * half;
        abs_value[c] = res_abs * half.abs();
        error[c] = rescale_error(err, res_abs * half.abs(), res_asc * half.abs());
    }
    Panel {
        a,
        b,
        value,
        error,
        abs_value,
    }
}

struct Scratch {
    fv: [f64; 21],
    values: Vec<f64>,
}

/// Integrates a `dim`-component integrand over `[a, b]`.
///
/// The integrand writes its components into the provided slice. Refinement
/// stops once every component satisfies `err ≤ max(abs_tol, rel_tol·|I|)`,
/// or its error is at the roundoff level of `∫|f|`.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, dim: usize, spec: &QuadratureSpec) -> Result<Vec<Estimate>>
where
    F: FnMut(f64, &mut [f64]),
{
    spec.validate()?;
    if dim == 0 {
        return Ok(Vec::new());
    }
    if a == b {
        return Ok(vec![Estimate { value: 0.0, error: 0.0 }; dim]);
    }
    let mut scratch = Scratch {
        fv: [0.0; 21],
        values: vec![0.0; 21 * dim],
    };
    let n0 = spec.initial_panels;
    let width = (b - a) / n0 as f64;
    let mut panels: Vec<Panel> = (0..n0)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == n0 { b } else { lo + width };
            gk21(&mut f, lo, hi, dim, &mut scratch)
        })
        .collect();

    let mut total = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut abs_total = vec![0.0; dim];
    loop {
        total.iter_mut().for_each(|v| *v = 0.0);
        err.iter_mut().for_each(|v| *v = 0.0);
        abs_total.iter_mut().for_each(|v| *v = 0.0);
        for p in &panels {
            for c in 0..dim {
                total[c] += p.value[c];
                err[c] += p.error[c];
                abs_total[c] += p.abs_value[c];
            }
        }
        // Below 100·ε·∫|f| the error estimate is roundoff, not truncation.
        let tol: Vec<f64> = (0..dim)
            .map(|c| {
                spec.abs_tol
                    .max(spec.rel_tol * total[c].abs())
                    .max(ROUNDOFF * abs_total[c])
            })
            .collect();
        let worst = (0..dim)
            .map(|c| err[c] / tol[c])
            .fold(0.0_f64, f64::max);
        if worst <= 1.0 {
            break;
        }
        if panels.len() >= spec.max_intervals {
            let c = (0..dim)
                .max_by(|&i, &j| (err[i] / tol[i]).total_cmp(&(err[j] / tol[j])))
                .unwrap_or(0);
            return Err(Error::QuadratureTolerance {
                a,
                b,
                err: err[c],
                tol: tol[c],
                intervals: panels.len(),
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let score = (0..dim)
                    .map(|c| p.error[c] / tol[c])
                    .fold(0.0_f64, f64::max);
                (i, score)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("at least one panel");
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::QuadratureTolerance {
                a,
                b,
                err: err.iter().cloned().fold(0.0, f64::max),
                tol: tol.iter().cloned().fold(f64::INFINITY, f64::min),
                intervals: panels.len(),
            });
        }
        panels.push(gk21(&mut f, p.a, mid, dim, &mut scratch));
        panels.push(gk21(&mut f, mid, p.b, dim, &mut scratch));
    }
    Ok((0..dim)
        .map(|c| Estimate {
            value: total[c],
            error: err[c],
        })
        .collect())
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    let est = integrate_vec(|x, out: &mut [f64]| out[0] = f(x), a, b, 1, spec)?;
    Ok(est[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let spec = QuadratureSpec::default();
        let est = integrate(|x| 3.0 * x * x - x + 1.0, -1.0, 2.0, &spec).unwrap();
        assert!((est.value - 10.5).abs() < 1e-13);
    }

    #[test]
    fn gaussian_and_oscillatory() {
        let spec = QuadratureSpec::default();
        let est = integrate(|x| (-x * x).exp(), -10.0, 10.0, &spec).unwrap();
        assert!((est.value - PI.sqrt()).abs() < 1e-12);
        // ∫ cos(ux) e^{-x²} dx = √π e^{-u²/4}
        let u = 6.0;
        let est = integrate(|x| (u * x).cos() * (-x * x).exp(), -10.0, 10.0, &spec).unwrap();
        assert!((est.value - PI.sqrt() * (-u * u / 4.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn vector_components_are_independent() {
        let spec = QuadratureSpec::default();
        let est = integrate_vec(
            |x, out: &mut [f64]| {
                out[0] = x.sin();
                out[1] = x.exp();
            },
            0.0,
            1.0,
            2,
            &spec,
        )
        .unwrap();
        assert!((est[0].value - (1.0 - 1f64.cos())).abs() < 1e-14);
        assert!((est[1].value - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let spec = QuadratureSpec {
            max_intervals: 8,
            abs_tol: 1e-15,
            rel_tol: 0.0,
            ..QuadratureSpec::default()
        };
        let res = integrate(|x| (1.0 / x).sin(), 1e-4, 1.0, &spec);
        assert!(matches!(res, Err(Error::QuadratureTolerance { .. })));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let spec = QuadratureSpec {
            abs_tol: 0.0,
            ..QuadratureSpec::default()
        };
        assert!(integrate(|x| x, 0.0, 1.0, &spec).is_err());
    }
}
