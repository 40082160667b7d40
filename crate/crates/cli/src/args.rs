use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use dirac_eta::heat::TruncationPolicy;
use dirac_eta::quad::QuadratureSpec;
use dirac_eta::surface::{SurfaceConfig, SurfaceData};
use serde::Serialize;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Continuous-spectrum band gaps
    Spectrum,
    /// Discrete and principal parts of Tr(D e^{-tD²})
    Heat,
    /// Term-by-term geometric side of the trace formula
    Trace,
    /// Eta components at s = 0
    Eta,
    /// Eta components along a decreasing list of radii, with extrapolation
    Sweep,
    /// Fast invariant checks
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// Spectra, heat traces and eta invariants of Dirac operators on circle
/// bundles over hyperbolic surfaces.
#[derive(Debug, Parser)]
#[command(name = "dirac-eta", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Surface description (JSON). Defaults to a closed genus-2 surface.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Radius or comma-separated list of radii.
    #[arg(long, value_delimiter = ',', value_name = "R[,R...]", allow_negative_numbers = true)]
    pub r: Vec<f64>,

    /// Time or comma-separated list of times.
    #[arg(long, value_delimiter = ',', value_name = "T[,T...]", allow_negative_numbers = true)]
    pub t: Vec<f64>,

    /// Largest cusp index for `spectrum`.
    #[arg(long, default_value_t = 5)]
    pub max_weight: u32,

    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Absolute quadrature tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub abs_tol: Option<f64>,

    /// Tail threshold for truncated series.
    #[arg(long, allow_negative_numbers = true)]
    pub eps_tail: Option<f64>,
}

/// Fully resolved run configuration; embedded in JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub surface_path: Option<PathBuf>,
    pub surface: serde_json::Value,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub max_weight: u32,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub quadrature: QuadratureSpec,
    pub truncation: TruncationPolicy,
    #[serde(skip)]
    pub config: SurfaceConfig,
}

fn default_r(cmd: Command) -> Vec<f64> {
    match cmd {
        Command::Sweep => vec![0.4, 0.2, 0.1, 0.05],
        Command::Eta => vec![0.1],
        _ => vec![1.0],
    }
}

fn check_positive(field: &str, values: &[f64]) -> Result<(), Failure> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Failure::validation(field, format!("values must be positive and finite, got {v}")));
    }
    Ok(())
}

impl Cli {
    pub fn resolve(self) -> Result<RunConfig, Failure> {
        let config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::io("--config", format!("{}: {e}", path.display())))?;
                SurfaceConfig::from_json(&text)?
            }
            None => SurfaceConfig {
                surface: SurfaceData::with_trivial_cusps(2, 0, 0)?,
                hyperbolic_classes: Vec::new(),
            },
        };
        let r = if self.r.is_empty() { default_r(self.command) } else { self.r };
        check_positive("--r", &r)?;
        let t = if self.t.is_empty() { vec![0.1, 1.0] } else { self.t };
        check_positive("--t", &t)?;
        if self.max_weight < 1 {
            return Err(Failure::validation("--max-weight", "must be at least 1"));
        }

        let mut quadrature = QuadratureSpec::default();
        if let Some(v) = self.abs_tol {
            check_positive("--abs-tol", &[v])?;
            quadrature.abs_tol = v;
        }
        let mut truncation = TruncationPolicy::default();
        if let Some(v) = self.eps_tail {
            if !(v > 0.0 && v < 1.0) {
                return Err(Failure::validation("--eps-tail", format!("must lie in (0, 1), got {v}")));
            }
            truncation.eps_tail = v;
        }
        quadrature.validate()?;
        truncation.validate()?;

        Ok(RunConfig {
            command: self.command,
            surface_path: self.config,
            surface: config.to_json_value(),
            r,
            t,
            max_weight: self.max_weight,
            output: self.out,
            format: self.format,
            quadrature,
            truncation,
            config,
        })
    }
}
