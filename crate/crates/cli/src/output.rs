use std::io::Write;

use serde_json::json;

use crate::args::{Format, RunConfig};
use crate::commands::Artifact;
use crate::failure::Failure;

/// Bumped whenever a CSV header changes.
pub const CSV_SCHEMA: u32 = 1;

fn render(artifact: &Artifact, cfg: &RunConfig) -> Result<Vec<u8>, Failure> {
    match cfg.format {
        Format::Json => {
            let doc = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "config": cfg,
                "result": artifact.payload,
            });
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::io("output", e.to_string()))?;
            text.push('\n');
            Ok(text.into_bytes())
        }
        Format::Csv => {
            let mut buf = format!("# dirac-eta {} csv schema {CSV_SCHEMA}\n", serde_json::to_value(cfg.command).unwrap_or_default().as_str().unwrap_or("")).into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                let io = |e: csv::Error| Failure::io("output", e.to_string());
                w.write_record(&artifact.header).map_err(io)?;
                for row in &artifact.rows {
                    w.write_record(row).map_err(io)?;
                }
                w.flush().map_err(|e| Failure::io("output", e.to_string()))?;
            }
            Ok(buf)
        }
    }
}

pub fn write(artifact: &Artifact, cfg: &RunConfig) -> Result<(), Failure> {
    let bytes = render(artifact, cfg)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Failure::io("--out", format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::io("stdout", e.to_string())),
    }
}
