//! Sweep execution and output files: the CSV curve plus a JSON metadata
//! sidecar that can be fed back as a config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::ensemble::{sweep, FidelityCurve};
use crate::error::{DdError, Result};
use crate::sequence::Protocol;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub code_version: String,
    pub protocol: Protocol,
    pub level: u32,
    pub pulse_count: usize,
    pub physical_pulse_count: usize,
    pub config_digest: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: RunConfig,
    pub metadata: Metadata,
}

/// `<output>.meta.json` next to the CSV.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn compute(config: &RunConfig) -> Result<(FidelityCurve, Sidecar)> {
    config.validate()?;
    let curve = sweep(config.protocol, config.level, &config.times(), &config.ensemble())?;
    let seq = crate::sequence::build(config.protocol, config.level, config.t_max)?;
    let metadata = Metadata {
        code_version: CODE_VERSION.to_string(),
        protocol: config.protocol,
        level: config.level,
        pulse_count: curve.pulse_count,
        physical_pulse_count: seq.physical_pulse_count(),
        config_digest: curve.config_digest.clone(),
        rows: curve.rows.len(),
    };
    let sidecar = Sidecar {
        config: config.clone(),
        metadata,
    };
    Ok((curve, sidecar))
}

/// Runs the sweep and writes the CSV and sidecar when an output path is set.
pub fn run_sweep(config: &RunConfig) -> Result<(FidelityCurve, Sidecar)> {
    let (curve, sidecar) = compute(config)?;
    if let Some(out) = &config.output {
        let write = |path: &Path, text: String| {
            fs::write(path, text)
                .map_err(|e| DdError::config("output", format!("cannot write {}: {e}", path.display())))
        };
        write(out, curve.to_csv())?;
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        write(&sidecar_path(out), json + "\n")?;
    }
    Ok((curve, sidecar))
}
