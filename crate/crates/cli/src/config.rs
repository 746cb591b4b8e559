//! Config documents.
//!
//! A document is TOML with one `[[stations]]` table per station, in visiting
//! order, and an optional `[run]` table with defaults for the engines:
//!
//! ```toml
//! [run]
//! seed = 7
//! cycles = 1000000
//!
//! [[stations]]
//! lambda = 1.0
//! nu = 1.0
//! weight = 1.0          # optional, defaults to 1
//! service = { kind = "exponential", mean = 0.45 }
//! switchover = { kind = "deterministic", value = 1.0 }
//! glue = { kind = "gamma", shape = 2.0, scale = 0.25 }
//! ```
//!
//! Unknown keys are rejected. Missing station fields are reported with the
//! station index.

use std::path::Path;

use glue_polling::{DistributionSpec, StationParams, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Engine defaults carried by a document. Command-line flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDefaults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batches: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    /// Glue budget for `optimize`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawStation {
    lambda: Option<f64>,
    nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    service: Option<DistributionSpec>,
    switchover: Option<DistributionSpec>,
    glue: Option<DistributionSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default, skip_serializing_if = "is_default")]
    run: RunDefaults,
    #[serde(default)]
    stations: Vec<RawStation>,
}

fn is_default(r: &RunDefaults) -> bool {
    *r == RunDefaults::default()
}

/// A loaded document.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub system: SystemConfig,
    pub run: RunDefaults,
}

impl RawStation {
    pub(crate) fn build(&self, index: usize) -> Result<StationParams> {
        let missing = |field: &str| {
            CliError::Validation(format!("station {index}: missing field `{field}`"))
        };
        let station = StationParams::new(
            self.lambda.ok_or_else(|| missing("lambda"))?,
            self.nu.ok_or_else(|| missing("nu"))?,
            self.service.ok_or_else(|| missing("service"))?,
            self.switchover.ok_or_else(|| missing("switchover"))?,
            self.glue.ok_or_else(|| missing("glue"))?,
        );
        Ok(match self.weight {
            Some(w) => station.with_weight(w),
            None => station,
        })
    }
}

/// Parses and validates a document. `origin` only labels diagnostics.
pub fn parse_document(text: &str, origin: &Path) -> Result<Document> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let stations = raw
        .stations
        .iter()
        .enumerate()
        .map(|(i, s)| s.build(i))
        .collect::<Result<Vec<_>>>()?;
    let system = SystemConfig::new(stations)?;
    Ok(Document {
        system,
        run: raw.run,
    })
}

pub fn load_document(path: &Path) -> Result<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_document(&text, path)
}

/// The validated system of the document at `path`.
pub fn load_config(path: &Path) -> Result<SystemConfig> {
    Ok(load_document(path)?.system)
}

/// Serializes a document; reloading the text gives back an equal document.
pub fn to_toml(system: &SystemConfig, run: &RunDefaults) -> String {
    let raw = RawDocument {
        run: run.clone(),
        stations: system
            .stations()
            .iter()
            .map(|s| RawStation {
                lambda: Some(s.lambda),
                nu: Some(s.nu),
                weight: Some(s.weight),
                service: Some(s.service),
                switchover: Some(s.switchover),
                glue: Some(s.glue),
            })
            .collect(),
    };
    toml::to_string(&raw).expect("documents always serialize")
}
