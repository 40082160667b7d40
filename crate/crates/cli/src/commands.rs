use dirac_eta::eta::{adiabatic_sweep, eta_total, EtaPSettings};
use dirac_eta::heat::tr_discrete_part;
use dirac_eta::selberg::{geometric_side, principal_trace};
use dirac_eta::spectrum::{continuous_bands, SpectralParams};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{Command, RunConfig};
use crate::failure::Failure;
use crate::selftest;

/// Result of one command: a JSON payload and the same data as a table.
pub struct Artifact {
    pub success: bool,
    pub payload: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn grid(cfg: &RunConfig) -> Vec<(f64, f64)> {
    cfg.r
        .iter()
        .flat_map(|&r| cfg.t.iter().map(move |&t| (r, t)))
        .collect()
}

fn eta_settings(cfg: &RunConfig) -> EtaPSettings {
    EtaPSettings {
        quad: cfg.quadrature,
        policy: cfg.truncation,
        ..EtaPSettings::default()
    }
}

pub fn dispatch(cfg: &RunConfig) -> Result<Artifact, Failure> {
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::Heat => heat(cfg),
        Command::Trace => trace(cfg),
        Command::Eta => eta(cfg),
        Command::Sweep => sweep(cfg),
        Command::Selftest => Ok(selftest::run(cfg)),
    }
}

fn spectrum(cfg: &RunConfig) -> Result<Artifact, Failure> {
    let surface = &cfg.config.surface;
    let mut rows = Vec::new();
    let mut bands = Vec::new();
    for &r in &cfg.r {
        let params = SpectralParams::new(r)?;
        for b in continuous_bands(&params, surface, cfg.max_weight)? {
            rows.push(vec![fmt(r), b.m.to_string(), fmt(b.gap_low), fmt(b.gap_high), b.multiplicity.to_string()]);
            bands.push(json!({ "r": r, "band": b }));
        }
    }
    Ok(Artifact {
        success: true,
        payload: json!({ "bands": bands }),
        header: vec!["r", "m", "gap_low", "gap_high", "multiplicity"],
        rows,
    })
}

fn heat(cfg: &RunConfig) -> Result<Artifact, Failure> {
    let c = &cfg.config;
    let values = grid(cfg)
        .par_iter()
        .map(|&(r, t)| {
            let params = SpectralParams::new(r)?;
            let disc = tr_discrete_part(t, &params, &c.surface, &cfg.truncation)?;
            let (prin, err) = principal_trace(t, &params, &c.surface, &c.hyperbolic_classes, &cfg.quadrature, &cfg.truncation)?;
            Ok((r, t, disc, prin, err))
        })
        .collect::<Result<Vec<_>, dirac_eta::Error>>()?;
    let rows = values
        .iter()
        .map(|&(r, t, d, p, e)| vec![fmt(r), fmt(t), fmt(d), fmt(p), fmt(d + p), fmt(e)])
        .collect();
    let payload = values
        .iter()
        .map(|&(r, t, d, p, e)| json!({ "r": r, "t": t, "discrete": d, "principal": p, "total": d + p, "err_estimate": e }))
        .collect::<Vec<_>>();
    Ok(Artifact {
        success: true,
        payload: json!({ "heat": payload }),
        header: vec!["r", "t", "discrete", "principal", "total", "err_estimate"],
        rows,
    })
}

fn trace(cfg: &RunConfig) -> Result<Artifact, Failure> {
    let c = &cfg.config;
    let values = grid(cfg)
        .par_iter()
        .map(|&(r, t)| {
            let params = SpectralParams::new(r)?;
            let b = geometric_side(t, &params, &c.surface, &c.hyperbolic_classes, &cfg.quadrature, &cfg.truncation)?;
            Ok((r, t, b))
        })
        .collect::<Result<Vec<_>, dirac_eta::Error>>()?;
    let rows = values
        .iter()
        .map(|(r, t, b)| {
            [
                *r,
                *t,
                b.identity_cont,
                b.identity_disc,
                b.hyperbolic,
                b.cusp_psi,
                b.cusp_disc,
                b.cusp_log2,
                b.h_zero,
                b.pv_jterm,
                b.total,
                b.errors.total,
            ]
            .iter()
            .map(|&v| fmt(v))
            .collect()
        })
        .collect();
    let payload = values
        .iter()
        .map(|(r, t, b)| json!({ "r": r, "t": t, "terms": b }))
        .collect::<Vec<_>>();
    Ok(Artifact {
        success: true,
        payload: json!({ "trace": payload }),
        header: vec![
            "r",
            "t",
            "identity_cont",
            "identity_disc",
            "hyperbolic",
            "cusp_psi",
            "cusp_disc",
            "cusp_log2",
            "h_zero",
            "pv_jterm",
            "total",
            "err_estimate",
        ],
        rows,
    })
}

const ETA_HEADER: [&str; 9] = [
    "r",
    "eta_d1",
    "eta_d2",
    "eta_p",
    "eta_total",
    "err_d2",
    "err_p",
    "err_total",
    "residue_r0",
];

fn eta(cfg: &RunConfig) -> Result<Artifact, Failure> {
    let c = &cfg.config;
    let settings = eta_settings(cfg);
    let results = cfg
        .r
        .par_iter()
        .map(|&r| {
            let params = SpectralParams::new(r)?;
            eta_total(&params, &c.surface, &c.hyperbolic_classes, &settings)
        })
        .collect::<Result<Vec<_>, dirac_eta::Error>>()?;
    let rows = results
        .iter()
        .map(|b| {
            [
                b.r,
                b.d1.re(),
                b.d2.re(),
                b.p.re(),
                b.total.re(),
                b.d2.err_estimate,
                b.p.err_estimate,
                b.total.err_estimate,
                b.p.residue_r0,
            ]
            .iter()
            .map(|&v| fmt(v))
            .collect()
        })
        .collect();
    Ok(Artifact {
        success: true,
        payload: json!({ "limit": c.surface.adiabatic_limit(), "eta": results }),
        header: ETA_HEADER.to_vec(),
        rows,
    })
}

fn sweep(cfg: &RunConfig) -> Result<Artifact, Failure> {
    let c = &cfg.config;
    let report = adiabatic_sweep(&cfg.r, &c.surface, &c.hyperbolic_classes, &eta_settings(cfg))?;
    let mut rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|w| {
            let mut row = vec!["row".to_string()];
            row.extend(
                [w.r, w.eta_d1, w.eta_d2, w.eta_p, w.eta_total, w.err_d2, w.err_p, w.err_total, w.residue_r0]
                    .iter()
                    .map(|&v| fmt(v)),
            );
            row
        })
        .collect();
    let mut last = vec!["extrapolated".to_string(), fmt(0.0)];
    last.extend(std::iter::repeat_n(String::new(), 3));
    last.push(fmt(report.extrapolated));
    last.extend(std::iter::repeat_n(String::new(), 2));
    last.push(fmt(report.extrapolation_error));
    last.push(String::new());
    rows.push(last);
    let mut header = vec!["kind"];
    header.extend(ETA_HEADER);
    Ok(Artifact {
        success: true,
        payload: json!({ "sweep": report }),
        header,
        rows,
    })
}
