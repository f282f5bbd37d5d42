//! Config document loading, overrides and seed/output resolution.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Born,
    BornUniverse,
    DetectorsBucket,
    DetectorsDoublewell,
    DetectorsLedger,
    DetectorsSg,
    Ehrenfest,
    Spectrum,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Born,
        Experiment::BornUniverse,
        Experiment::DetectorsBucket,
        Experiment::DetectorsDoublewell,
        Experiment::DetectorsLedger,
        Experiment::DetectorsSg,
        Experiment::Ehrenfest,
        Experiment::Spectrum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Born => "born",
            Experiment::BornUniverse => "born-universe",
            Experiment::DetectorsBucket => "detectors-bucket",
            Experiment::DetectorsDoublewell => "detectors-doublewell",
            Experiment::DetectorsLedger => "detectors-ledger",
            Experiment::DetectorsSg => "detectors-sg",
            Experiment::Ehrenfest => "ehrenfest",
            Experiment::Spectrum => "spectrum",
        }
    }

    pub(crate) fn section(self) -> &'static str {
        match self {
            Experiment::Born | Experiment::BornUniverse => "§3",
            Experiment::DetectorsBucket
            | Experiment::DetectorsDoublewell
            | Experiment::DetectorsLedger => "§4",
            Experiment::DetectorsSg => "§5",
            Experiment::Ehrenfest => "§2.1",
            Experiment::Spectrum => "§2.2",
        }
    }

    pub(crate) fn description(self) -> &'static str {
        match self {
            Experiment::Born => {
                "outcome frequencies of a qubit pointer driven by a stochastic environment"
            }
            Experiment::BornUniverse => {
                "reduced pointer matrix of an exact qubit-environment universe"
            }
            Experiment::DetectorsBucket => "Poisson flow counted in whole buckets",
            Experiment::DetectorsDoublewell => "Langevin pointer in a double-well potential",
            Experiment::DetectorsLedger => {
                "thermal and eigenvalue error bookkeeping of repeated readings"
            }
            Experiment::DetectorsSg => "Stern-Gerlach mean-spin scaling with ensemble size",
            Experiment::Ehrenfest => {
                "grid wave packet against classical motion and the deviation bound"
            }
            Experiment::Spectrum => {
                "resonance scan of a forced damped oscillator and peak recovery"
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    parameters: Map<String, Value>,
}

/// A config after overrides, with seed and output directory resolved but
/// parameters not yet checked against the experiment's schema.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub parameters: Map<String, Value>,
}

/// Where a run's settings come from besides the config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    /// Raw value of the fallback seed variable, if set.
    pub env_seed: Option<String>,
    pub output_dir: Option<PathBuf>,
}

const TOP_LEVEL: [&str; 4] = ["experiment", "seed", "output_dir", "parameters"];

/// Applies one `key=value` override. Keys are dotted paths; a key whose
/// first segment is not a top-level field is taken relative to
/// `parameters`. Values are read as JSON when they parse, else as strings.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), RunError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| RunError::config(spec, "override must have the form key=value"))?;
    let mut path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|s| s.is_empty()) {
        return Err(RunError::config(key, "empty segment in override key"));
    }
    if !TOP_LEVEL.contains(&path[0]) {
        path.insert(0, "parameters");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    for (i, seg) in path.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            _ => {
                return Err(RunError::config(
                    path[..i].join("."),
                    "cannot override inside a non-object value",
                ))
            }
        };
        if i + 1 == path.len() {
            obj.insert(seg.to_string(), value);
            break;
        }
        node = obj
            .entry(seg.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

pub fn load_config(path: &Path, sources: &ConfigSources) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::config("config", format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| RunError::config("config", format!("not valid JSON: {e}")))?;
    resolve(doc, sources)
}

pub fn resolve(mut doc: Value, sources: &ConfigSources) -> Result<ExperimentConfig, RunError> {
    if !doc.is_object() {
        return Err(RunError::config(
            "config",
            "top level must be a JSON object",
        ));
    }
    for o in &sources.overrides {
        apply_override(&mut doc, o)?;
    }
    let raw: RawConfig = deserialize_at(doc, "")?;
    let seed = match (sources.seed, raw.seed, &sources.env_seed) {
        (Some(s), _, _) | (None, Some(s), _) => s,
        (None, None, Some(env)) => env.trim().parse().map_err(|_| {
            RunError::config(
                "THERMALSIM_SEED",
                format!("not an unsigned integer: {env:?}"),
            )
        })?,
        (None, None, None) => {
            return Err(RunError::config(
                "seed",
                "no seed given in the config, by --seed or by THERMALSIM_SEED",
            ))
        }
    };
    let output_dir = sources
        .output_dir
        .clone()
        .or(raw.output_dir)
        .ok_or_else(|| {
            RunError::config(
                "output_dir",
                "no output directory given in the config or by --out",
            )
        })?;
    Ok(ExperimentConfig {
        experiment: raw.experiment,
        seed,
        output_dir,
        parameters: raw.parameters,
    })
}

/// Deserializes `value`, naming the offending key (prefixed by `prefix`) on
/// failure.
pub(crate) fn deserialize_at<T: DeserializeOwned>(
    value: Value,
    prefix: &str,
) -> Result<T, RunError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let key = match (prefix.is_empty(), inner == ".") {
            (true, true) => "config".to_string(),
            (true, false) => inner,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{inner}"),
        };
        RunError::config(key, e.into_inner().to_string())
    })
}
