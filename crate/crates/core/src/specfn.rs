//! Double-precision special functions on complex arguments: log-gamma,
//! digamma, the Hurwitz zeta function with its analytic continuation, the
//! odd-index zeta variant and a Bernoulli number table.
//!
//! Everything here is pure and allocation free apart from the lazily built
//! Bernoulli table, which is immutable once constructed.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex argument or value. Real parameters are embedded with `im = 0`.
pub type ComplexValue = Complex64;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_2PI_HALF: f64 = 0.918_938_533_204_672_8;

/// Shift target for the Stirling series of log Γ.
const LOG_GAMMA_SHIFT: f64 = 15.0;
/// Shift target for the digamma asymptotic series.
const DIGAMMA_SHIFT: f64 = 12.0;
/// Minimal Euler–Maclaurin cut-off for the Hurwitz zeta function.
const HURWITZ_CUTOFF: f64 = 16.0;
/// Number of Bernoulli correction terms used by Euler–Maclaurin (up to B_24).
const HURWITZ_TERMS: usize = 12;

/// Even-index Bernoulli numbers `B_2, B_4, …, B_{2K}`.
#[derive(Debug, Clone)]
pub struct BernoulliTable {
    values: Vec<f64>,
}

impl BernoulliTable {
    /// Smallest table length accepted by [`BernoulliTable::new`].
    pub const MIN_LEN: usize = 30;

    /// Builds `B_2 … B_{2K}` with `K = max(len, 30)`.
    ///
    /// The first ten entries are exact rationals; higher ones come from
    /// `B_{2k} = (-1)^{k+1} 2 (2k)! ζ(2k) / (2π)^{2k}`, where the zeta sum
    /// converges to machine precision within twenty terms.
    pub fn new(len: usize) -> Self {
        const EXACT: [f64; 10] = [
            1.0 / 6.0,
            -1.0 / 30.0,
            1.0 / 42.0,
            -1.0 / 30.0,
            5.0 / 66.0,
            -691.0 / 2730.0,
            7.0 / 6.0,
            -3617.0 / 510.0,
            43867.0 / 798.0,
            -174611.0 / 330.0,
        ];
        let len = len.max(Self::MIN_LEN);
        let mut values = Vec::with_capacity(len);
        // (2k)! / (2π)^{2k}, built incrementally to stay in range.
        let mut ratio = 1.0;
        for k in 1..=len {
            let n = 2 * k;
            ratio *= (n - 1) as f64 / (2.0 * PI);
            ratio *= n as f64 / (2.0 * PI);
            if k <= EXACT.len() {
                values.push(EXACT[k - 1]);
                continue;
            }
            let zeta: f64 = (1..=20).map(|j| (j as f64).powi(-(n as i32))).sum();
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            values.push(sign * 2.0 * ratio * zeta);
        }
        BernoulliTable { values }
    }

    /// Number of stored even-index values `K`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `B_{2k}` for `1 ≤ k ≤ K`.
    pub fn b2k(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.values.len(), "B_{} out of table range", 2 * k);
        self.values[k - 1]
    }

    /// `B_n` for any `n ≤ 2K`, with the convention `B_1 = -1/2`.
    pub fn bernoulli(&self, n: usize) -> f64 {
        match n {
            0 => 1.0,
            1 => -0.5,
            n if n % 2 == 1 => 0.0,
            n => self.b2k(n / 2),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Process-wide table with `K = 64`, enough for every expansion in the crate.
pub fn bernoulli_table() -> &'static BernoulliTable {
    static TABLE: OnceLock<BernoulliTable> = OnceLock::new();
    TABLE.get_or_init(|| BernoulliTable::new(64))
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `x^{-s}` for real `x > 0`.
#[inline]
pub fn pow_neg(x: f64, s: Complex64) -> Complex64 {
    (-s * x.ln()).exp()
}

/// Logarithm of the gamma function.
///
/// The argument is shifted to `Re z ≥ 15` with the recurrence and the Stirling
/// series is summed there. The branch is the one obtained by continuing
/// `ln Γ` from the positive axis along horizontal lines, so `exp` of the
/// result is always `Γ(z)`.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain {
            op: "log_gamma",
            msg: format!("non-finite argument {z}"),
        });
    }
    if is_nonpositive_integer(z) {
        return Err(Error::pole("log_gamma", z.re));
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < LOG_GAMMA_SHIFT {
        shift += w.ln();
        w += 1.0;
    }
    let table = bernoulli_table();
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for k in 1..=10 {
        let kk = (2 * k) as f64;
        series += table.b2k(k) / (kk * (kk - 1.0)) * pow;
        pow *= inv2;
    }
    Ok((w - 0.5) * w.ln() - w + LN_2PI_HALF + series - shift)
}

/// Γ(z) through [`log_gamma`].
pub fn gamma(z: Complex64) -> Result<Complex64> {
    Ok(log_gamma(z)?.exp())
}

/// `cot(w)` written to stay finite for large `|Im w|`.
fn cot(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    if w.im >= 0.0 {
        let q = (2.0 * i * w).exp();
        i * (q + 1.0) / (q - 1.0)
    } else {
        let p = (-2.0 * i * w).exp();
        i * (1.0 + p) / (1.0 - p)
    }
}

/// Digamma ψ(z) = Γ'(z)/Γ(z).
///
/// Negative real parts go through the reflection formula; otherwise the
/// recurrence `ψ(z) = ψ(z+1) − 1/z` moves the argument to `|z| ≥ 12` where
/// the Bernoulli asymptotic series `ln z − 1/(2z) − Σ B_{2k}/(2k z^{2k})`
/// is summed to ten terms.
pub fn digamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain {
            op: "digamma",
            msg: format!("non-finite argument {z}"),
        });
    }
    if is_nonpositive_integer(z) {
        return Err(Error::pole("digamma", z.re));
    }
    if z.re < 0.0 {
        let reflected = digamma(1.0 - z)?;
        return Ok(reflected - PI * cot(PI * z));
    }
    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.norm() < DIGAMMA_SHIFT {
        acc -= w.inv();
        w += 1.0;
    }
    let table = bernoulli_table();
    let inv2 = (w * w).inv();
    let mut pow = inv2;
    let mut series = Complex64::new(0.0, 0.0);
    for k in 1..=10 {
        series += table.b2k(k) / (2 * k) as f64 * pow;
        pow *= inv2;
    }
    Ok(acc + w.ln() - 0.5 * w.inv() - series)
}

/// Real digamma convenience wrapper.
pub fn digamma_real(x: f64) -> Result<f64> {
    Ok(digamma(Complex64::new(x, 0.0))?.re)
}

/// Hurwitz zeta ζ(s, a) = Σ_{k≥0} (k+a)^{-s} for `a > 0`, continued to all
/// `s ≠ 1` by Euler–Maclaurin.
///
/// The direct sum runs until `k + a ≥ 16 + |s|` (smaller for `Re s < 0`, none
/// at nonpositive integers); the tail is the integral term, the half
/// end-point term and Bernoulli corrections through `B_24`.
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Result<Complex64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain {
            op: "hurwitz_zeta",
            msg: format!("shift a = {a} must be positive"),
        });
    }
    if s.re == 1.0 && s.im == 0.0 {
        return Err(Error::pole("hurwitz_zeta", "s = 1"));
    }
    // For Re s < 0 head and tail cancel, so the shift is kept as small as the
    // Euler–Maclaurin remainder allows.
    // At s = 0, −1, −2, … the Bernoulli series terminates and needs no shift.
    let terminates = s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round() && 1.0 - s.re <= 2.0 * HURWITZ_TERMS as f64;
    let cutoff = if terminates {
        0.0
    } else if s.re < 0.0 {
        1.25 * (s.norm() + 2.0 * HURWITZ_TERMS as f64) / (2.0 * PI) + 1.0
    } else {
        HURWITZ_CUTOFF + s.norm()
    };
    let n = if a >= cutoff {
        0
    } else {
        (cutoff - a).ceil() as usize
    };
    let mut head = Complex64::new(0.0, 0.0);
    for k in 0..n {
        head += pow_neg(k as f64 + a, s);
    }
    let x = n as f64 + a;
    let x_pow = pow_neg(x, s);
    let mut tail = x_pow * x / (s - 1.0) + 0.5 * x_pow;
    let table = bernoulli_table();
    // rising = s (s+1) … (s+2j-2), fact = (2j)!
    let mut rising = s;
    let mut fact = 2.0;
    let mut xp = x_pow / x;
    let inv_x2 = 1.0 / (x * x);
    for j in 1..=HURWITZ_TERMS {
        tail += table.b2k(j) / fact * rising * xp;
        let jj = (2 * j) as f64;
        rising *= (s + jj - 1.0) * (s + jj);
        fact *= (jj + 1.0) * (jj + 2.0);
        xp *= inv_x2;
    }
    Ok(head + tail)
}

/// Riemann zeta through `hurwitz_zeta(s, 1)`.
pub fn riemann_zeta(s: Complex64) -> Result<Complex64> {
    hurwitz_zeta(s, 1.0)
}

/// Odd-index zeta ζ₀(s, a) = Σ_{k≥1} (2k−1+a)^{-s} for `a ≥ 0`.
///
/// Evaluated as `2^{-s} ζ(s, (1+a)/2)`, which covers `a = 0`
/// (`(1 − 2^{-s}) ζ(s)`) without a separate branch and avoids the
/// cancellation in `ζ(s,a) − 2^{-s} ζ(s,a/2)` for small `a`.
pub fn zeta0(s: Complex64, a: f64) -> Result<Complex64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::Domain {
            op: "zeta0",
            msg: format!("shift a = {a} must be non-negative"),
        });
    }
    if s.re == 1.0 && s.im == 0.0 {
        return Err(Error::pole("zeta0", "s = 1"));
    }
    Ok(pow_neg(2.0, s) * hurwitz_zeta(s, 0.5 * (1.0 + a))?)
}

/// Bernoulli polynomial `B_n(x)`.
pub fn bernoulli_poly(n: usize, x: f64) -> f64 {
    let table = bernoulli_table();
    let mut binom = 1.0;
    let mut acc = 0.0;
    for i in 0..=n {
        acc += binom * table.bernoulli(n - i) * x.powi(i as i32);
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
