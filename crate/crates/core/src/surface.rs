//! Base orbifold data: genus, cusps, spin structure and hyperbolic classes.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A ℤ₂ sign, serialized as `+1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_int(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn to_int(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn is_trivial(self) -> bool {
        self == Sign::Plus
    }

    fn mul(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i64(self.to_int())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Sign::from_int(v)
            .ok_or_else(|| serde::de::Error::custom(format!("sign must be +1 or -1, got {v}")))
    }
}

/// Images of the generators of π₁ under the ℤ₂-representation ρ.
///
/// `eps_k` is the sign on the circle fiber; `+1` means the spin structure is
/// trivial along the fiber.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinStructure {
    #[serde(rename = "x")]
    pub eps_x: Vec<Sign>,
    #[serde(rename = "y")]
    pub eps_y: Vec<Sign>,
    #[serde(rename = "h")]
    pub eps_h: Vec<Sign>,
    #[serde(rename = "k")]
    pub eps_k: Sign,
}

impl SpinStructure {
    /// All signs `+1`.
    pub fn trivial(genus: usize, kappa: usize) -> Self {
        SpinStructure {
            eps_x: vec![Sign::Plus; genus],
            eps_y: vec![Sign::Plus; genus],
            eps_h: vec![Sign::Plus; kappa],
            eps_k: Sign::Plus,
        }
    }

    /// Fiber-trivial structure whose first `kappa_t` cusps are trivial and the
    /// remaining ones nontrivial. Requires `kappa − kappa_t` even.
    pub fn with_trivial_cusps(genus: usize, kappa: usize, kappa_t: usize) -> Result<Self> {
        if kappa_t > kappa {
            return Err(Error::InvalidSurface(format!(
                "kappa_t = {kappa_t} exceeds kappa = {kappa}"
            )));
        }
        if (kappa - kappa_t) % 2 != 0 {
            return Err(Error::InvalidSurface(format!(
                "{} nontrivial cusps violate the product constraint",
                kappa - kappa_t
            )));
        }
        let mut spin = SpinStructure::trivial(genus, kappa);
        for e in spin.eps_h.iter_mut().skip(kappa_t) {
            *e = Sign::Minus;
        }
        Ok(spin)
    }

    pub fn cusp_product(&self) -> Sign {
        self.eps_h.iter().fold(Sign::Plus, |acc, &e| acc.mul(e))
    }

    pub fn fiber_trivial(&self) -> bool {
        self.eps_k.is_trivial()
    }
}

/// Genus, number of cusps and spin structure of the base `Σ_{g,κ}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SurfaceData {
    pub genus: usize,
    pub kappa: usize,
    pub spin: SpinStructure,
}

impl SurfaceData {
    pub fn new(genus: usize, kappa: usize, spin: SpinStructure) -> Result<Self> {
        if 2 * genus + kappa <= 2 {
            return Err(Error::InvalidSurface(format!(
                "2g - 2 + kappa must be positive (g = {genus}, kappa = {kappa})"
            )));
        }
        if spin.eps_x.len() != genus || spin.eps_y.len() != genus {
            return Err(Error::InvalidSurface(format!(
                "expected {genus} x/y signs, got {}/{}",
                spin.eps_x.len(),
                spin.eps_y.len()
            )));
        }
        if spin.eps_h.len() != kappa {
            return Err(Error::InvalidSurface(format!(
                "expected {kappa} cusp signs, got {}",
                spin.eps_h.len()
            )));
        }
        if spin.cusp_product() != Sign::Plus {
            return Err(Error::InvalidSurface(
                "product of cusp signs must be +1".into(),
            ));
        }
        Ok(SurfaceData { genus, kappa, spin })
    }

    /// Surface with fiber-trivial spin structure and `kappa_t` trivial cusps.
    pub fn with_trivial_cusps(genus: usize, kappa: usize, kappa_t: usize) -> Result<Self> {
        SurfaceData::new(genus, kappa, SpinStructure::with_trivial_cusps(genus, kappa, kappa_t)?)
    }

    /// Number of cusps along which the spin structure is trivial.
    pub fn kappa_trivial(&self) -> usize {
        kappa_trivial(&self.spin)
    }

    /// `2g − 2 + κ`, the negative Euler characteristic of the base.
    pub fn neg_euler(&self) -> f64 {
        (2 * self.genus + self.kappa) as f64 - 2.0
    }

    /// `2 − 2g − κ`.
    pub fn euler_characteristic(&self) -> f64 {
        -self.neg_euler()
    }

    /// `vol(Γ\G) = 2π(2g − 2 + κ)`, which is also the Poincaré area of the base.
    pub fn volume(&self) -> f64 {
        2.0 * PI * self.neg_euler()
    }

    /// The adiabatic limit `−vol/(12π) = (2 − 2g − κ)/6`.
    pub fn adiabatic_limit(&self) -> f64 {
        -self.volume() / (12.0 * PI)
    }

    pub fn require_fiber_trivial(&self, op: &'static str) -> Result<()> {
        if self.spin.fiber_trivial() {
            Ok(())
        } else {
            Err(Error::NontrivialFiberSpin { op })
        }
    }
}

pub fn kappa_trivial(spin: &SpinStructure) -> usize {
    spin.eps_h.iter().filter(|e| e.is_trivial()).count()
}

/// `2π(2g − 2 + κ)`, rejecting non-positive volume.
pub fn volume(genus: usize, kappa: usize) -> Result<f64> {
    if 2 * genus + kappa <= 2 {
        return Err(Error::InvalidSurface(format!(
            "non-positive volume for g = {genus}, kappa = {kappa}"
        )));
    }
    Ok(2.0 * PI * ((2 * genus + kappa) as f64 - 2.0))
}

/// `2^{2g+κ}`.
pub fn count_spin_structures(genus: u32, kappa: u32) -> u64 {
    1u64 << (2 * genus + kappa)
}

/// Whether a spin structure nontrivial at every cusp exists; needs `κ ≥ 1`.
pub fn totally_nontrivial_exists(kappa: usize) -> Result<bool> {
    if kappa == 0 {
        return Err(Error::param("kappa", "must be at least 1"));
    }
    Ok(kappa % 2 == 0)
}

/// Iterates over all sign assignments satisfying `∏ eps_h = +1`.
///
/// `eps_x`, `eps_y`, `eps_k` and the first `κ − 1` cusp signs are free; the
/// last cusp sign is determined. That gives `2^{2g+κ}` structures for
/// `κ ≥ 1` and `2^{2g+1}` for closed bases.
pub fn enumerate_spin_structures(genus: usize, kappa: usize) -> impl Iterator<Item = SpinStructure> {
    let free_h = kappa.saturating_sub(1);
    let bits = 2 * genus + free_h + 1;
    assert!(bits < 64, "too many spin structures to enumerate");
    let sign = |mask: u64, bit: usize| {
        if mask >> bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    };
    (0..1u64 << bits).map(move |mask| {
        let eps_x = (0..genus).map(|i| sign(mask, i)).collect();
        let eps_y = (0..genus).map(|i| sign(mask, genus + i)).collect();
        let mut eps_h: Vec<Sign> = (0..free_h).map(|i| sign(mask, 2 * genus + i)).collect();
        if kappa > 0 {
            let last = eps_h.iter().fold(Sign::Plus, |acc, &e| acc.mul(e));
            eps_h.push(last);
        }
        SpinStructure {
            eps_x,
            eps_y,
            eps_h,
            eps_k: sign(mask, bits - 1),
        }
    })
}

/// A hyperbolic conjugacy class conjugate to `a_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperbolicClass {
    /// Translation length.
    pub u: f64,
    /// `tr χ(γ)`.
    pub chi_trace: f64,
    /// Centralizer index `[Γ_γ : Z]`.
    pub index: u32,
}

impl HyperbolicClass {
    pub fn new(u: f64, chi_trace: f64, index: u32) -> Result<Self> {
        let c = HyperbolicClass { u, chi_trace, index };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u > 0.0) || !self.u.is_finite() {
            return Err(Error::param("u", format!("must be positive, got {}", self.u)));
        }
        if !self.chi_trace.is_finite() {
            return Err(Error::param("chi_trace", "must be finite"));
        }
        if self.index < 1 {
            return Err(Error::param("index", "must be at least 1"));
        }
        Ok(())
    }

    /// Prefactor `tr χ(γ)·u / (4π [Γ_γ:Z] sinh(u/2))` of the cosine transform.
    pub fn weight(&self) -> f64 {
        self.chi_trace * self.u / (4.0 * PI * self.index as f64 * (0.5 * self.u).sinh())
    }
}

impl Default for HyperbolicClass {
    fn default() -> Self {
        HyperbolicClass {
            u: 2.0,
            chi_trace: 2.0,
            index: 1,
        }
    }
}

/// Parsed surface configuration file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceConfig {
    pub surface: SurfaceData,
    pub hyperbolic_classes: Vec<HyperbolicClass>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    genus: usize,
    cusps: usize,
    #[serde(default)]
    spin: Option<SpinStructure>,
    #[serde(default)]
    hyperbolic_classes: Vec<HyperbolicClass>,
}

fn config_err(field: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        line: 0,
        column: 0,
        msg: msg.into(),
    }
}

impl SurfaceConfig {
    /// Parses and validates the JSON schema
    /// `{genus, cusps, spin: {x, y, h, k}, hyperbolic_classes: [{u, chi_trace, index}]}`.
    /// A missing `spin` means all signs `+1`.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config {
                field: path,
                line: inner.line(),
                column: inner.column(),
                msg: inner.to_string(),
            }
        })?;
        let spin = raw
            .spin
            .unwrap_or_else(|| SpinStructure::trivial(raw.genus, raw.cusps));
        if spin.eps_x.len() != raw.genus {
            return Err(config_err("spin.x", format!("expected {} signs", raw.genus)));
        }
        if spin.eps_y.len() != raw.genus {
            return Err(config_err("spin.y", format!("expected {} signs", raw.genus)));
        }
        if spin.eps_h.len() != raw.cusps {
            return Err(config_err("spin.h", format!("expected {} signs", raw.cusps)));
        }
        if spin.cusp_product() != Sign::Plus {
            return Err(config_err("spin.h", "product of cusp signs must be +1"));
        }
        let surface = SurfaceData::new(raw.genus, raw.cusps, spin)
            .map_err(|e| config_err("genus", e.to_string()))?;
        for (i, c) in raw.hyperbolic_classes.iter().enumerate() {
            c.validate().map_err(|e| match e {
                Error::Parameter { name, msg } => {
                    config_err(format!("hyperbolic_classes[{i}].{name}"), msg)
                }
                other => other,
            })?;
        }
        Ok(SurfaceConfig {
            surface,
            hyperbolic_classes: raw.hyperbolic_classes,
        })
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "genus": self.surface.genus,
            "cusps": self.surface.kappa,
            "spin": self.surface.spin,
            "hyperbolic_classes": self.hyperbolic_classes,
        })
    }
}
