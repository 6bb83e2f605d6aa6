//! Run configuration for the command-line front end.
//!
//! Values are resolved in layers: built-in defaults, then a named preset,
//! then a JSON config file, then command-line flags. Every layer is a flat
//! JSON object keyed like [`RunConfig`]; unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ensemble::{Averaging, EnsembleConfig};
use crate::error::{DdError, Result};
use crate::pulse::{BathParams, ErrorMode, PulseErrorParams, ZOrder};
use crate::sequence::Protocol;

/// Field of the Si:P preset, `2π × 2.8025 MHz/G × 0.05 G`, in rad/µs.
pub const SI_P_BATH_WIDTH: f64 = 2.0 * std::f64::consts::PI * 2.8025 * 0.05;

pub const PRESETS: [&str; 2] = ["si-p", "perfect"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// `points` equal steps from `t_start` to `t_max`.
    #[default]
    Linear,
    /// `points` geometric steps from `t_start` (or `t_max / 1000` when it is
    /// zero) to `t_max`.
    LogWithZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Quadrature,
    MonteCarlo,
}

/// A fully resolved run. `t = 0` is always added in front of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub level: u32,
    pub t_start: f64,
    pub t_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub b: f64,
    pub eps0: f64,
    pub n0: f64,
    pub mx: f64,
    pub ny: f64,
    pub method: Method,
    pub nodes_b: usize,
    pub nodes_eps: usize,
    pub nodes_nz: usize,
    pub samples: usize,
    pub seed: u64,
    pub error_mode: ErrorMode,
    pub z_order: ZOrder,
    pub output: Option<PathBuf>,
    pub preset: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let errors = PulseErrorParams::default();
        RunConfig {
            protocol: Protocol::Udd,
            level: 2,
            t_start: 0.0,
            t_max: 60.0,
            points: 60,
            spacing: Spacing::Linear,
            b: 1.0,
            eps0: errors.epsilon0,
            n0: errors.n0,
            mx: errors.in_plane_mx,
            ny: errors.in_plane_ny,
            method: Method::Quadrature,
            nodes_b: 32,
            nodes_eps: 16,
            nodes_nz: 16,
            samples: 100_000,
            seed: 0,
            error_mode: ErrorMode::Independent,
            z_order: ZOrder::XThenY,
            output: None,
            preset: None,
        }
    }
}

fn preset_layer(name: &str) -> Result<Map<String, Value>> {
    let pairs: Vec<(&str, Value)> = match name {
        "si-p" => vec![("b", SI_P_BATH_WIDTH.into()), ("eps0", 0.3.into()), ("n0", (-0.12).into())],
        "perfect" => vec![
            ("eps0", 0.0.into()),
            ("n0", 0.0.into()),
            ("mx", 0.0.into()),
            ("ny", 0.0.into()),
        ],
        other => {
            return Err(DdError::config(
                "preset",
                format!("unknown preset `{other}` (known: {})", PRESETS.join(", ")),
            ))
        }
    };
    Ok(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

/// Extracts the config layer from a file's contents. A metadata sidecar
/// (`{"config": {...}, "metadata": {...}}`) yields its `config` object.
pub fn file_layer(text: &str) -> Result<Map<String, Value>> {
    let value: Value = serde_json::from_str(text).map_err(|e| DdError::config("config file", e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(DdError::config("config file", "expected a JSON object"));
    };
    if map.contains_key("config") {
        if let Some(key) = map.keys().find(|k| *k != "config" && *k != "metadata") {
            return Err(DdError::config(key.clone(), "unknown key in metadata file"));
        }
        return match map.remove("config") {
            Some(Value::Object(inner)) => Ok(inner),
            _ => Err(DdError::config("config", "expected a JSON object")),
        };
    }
    Ok(map)
}

fn with_defaults(overlay: Map<String, Value>) -> Map<String, Value> {
    let Value::Object(mut map) = serde_json::to_value(RunConfig::default()).expect("config serializes") else {
        unreachable!("RunConfig serializes to an object")
    };
    map.extend(overlay);
    map
}

fn known_key(key: &str) -> bool {
    let defaults = serde_json::to_value(RunConfig::default()).expect("config serializes");
    defaults.as_object().is_some_and(|m| m.contains_key(key))
}

/// Resolves `defaults < preset < file < flags`. The preset may be named by
/// either the file or the flags; the flags win.
pub fn resolve(file: Option<Map<String, Value>>, flags: Map<String, Value>) -> Result<RunConfig> {
    let file = file.unwrap_or_default();
    for key in file.keys().chain(flags.keys()) {
        if !known_key(key) {
            return Err(DdError::config(key.clone(), "unknown key"));
        }
    }
    let preset = flags
        .get("preset")
        .or_else(|| file.get("preset"))
        .filter(|v| !v.is_null())
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| DdError::config("preset", "expected a string"))
        })
        .transpose()?;

    let mut overlay = Map::new();
    if let Some(name) = &preset {
        overlay.extend(preset_layer(name)?);
    }
    overlay.extend(file);
    overlay.extend(flags);

    let merged = with_defaults(overlay.clone());
    let config: RunConfig = serde_json::from_value(Value::Object(merged)).map_err(|e| {
        // name the first key that fails on its own
        let key = overlay
            .iter()
            .find(|(k, v)| {
                let single = with_defaults(Map::from_iter([((*k).clone(), (*v).clone())]));
                serde_json::from_value::<RunConfig>(Value::Object(single)).is_err()
            })
            .map(|(k, _)| k.clone())
            .unwrap_or_else(|| "config".to_string());
        DdError::config(key, e.to_string())
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.level == 0 {
            return Err(DdError::config("level", "must be at least 1"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(DdError::config("t_max", "must be positive and finite"));
        }
        if !(self.t_start >= 0.0 && self.t_start < self.t_max) {
            return Err(DdError::config("t_start", "must lie in [0, t_max)"));
        }
        if self.points == 0 {
            return Err(DdError::config("points", "must be at least 1"));
        }
        self.ensemble().validate().map_err(|e| match e {
            DdError::NonPositiveBathWidth(_) => DdError::config("b", e.to_string()),
            DdError::AxisTiltTooLarge(_) => DdError::config("n0", e.to_string()),
            other => other,
        })
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        let averaging = match self.method {
            Method::Quadrature => Averaging::Quadrature {
                nodes_b: self.nodes_b,
                nodes_eps: self.nodes_eps,
                nodes_nz: self.nodes_nz,
            },
            Method::MonteCarlo => Averaging::MonteCarlo {
                samples: self.samples,
                seed: self.seed,
            },
        };
        EnsembleConfig {
            bath: BathParams { b: self.b },
            errors: PulseErrorParams {
                epsilon0: self.eps0,
                n0: self.n0,
                in_plane_mx: self.mx,
                in_plane_ny: self.ny,
            },
            averaging,
            error_mode: self.error_mode,
            z_order: self.z_order,
        }
    }

    /// Grid times, without the leading `t = 0`.
    pub fn times(&self) -> Vec<f64> {
        let n = self.points;
        let mut grid: Vec<f64> = match self.spacing {
            Spacing::Linear => {
                let step = (self.t_max - self.t_start) / n as f64;
                (1..=n).map(|i| self.t_start + step * i as f64).collect()
            }
            Spacing::LogWithZero => {
                let lo = if self.t_start > 0.0 { self.t_start } else { self.t_max / 1000.0 };
                if n == 1 {
                    return vec![self.t_max];
                }
                let ratio = (self.t_max / lo).ln() / (n - 1) as f64;
                (0..n).map(|i| lo * (ratio * i as f64).exp()).collect()
            }
        };
        // land exactly on t_max despite rounding
        grid[n - 1] = self.t_max;
        grid
    }
}
