//! Configuration file parsing, flag resolution and the run manifest.
//!
//! Settings resolve in four layers: built-in defaults (the benchmark
//! operating point), then the preset (`paper` or `desk` run lengths), then
//! the TOML config file, then command-line flags. Unknown config keys are
//! rejected, every numeric range is validated, and the fully resolved
//! configuration is hashed into the manifest for provenance.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qrc_core::experiments::SweepAxis;
use qrc_core::ipc::{ProfileOptions, WindowPolicy};
use qrc_core::reservoir::{ObservableSet, ReservoirConfig};
use qrc_core::rng::{derive_seed, stream};

pub const MANIFEST_SCHEMA: &str = "run-manifest/1";

/// Run-length presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Evaluation length 1e5 after a 1e4-step washout.
    Paper,
    /// Evaluation length 2e4 after a 1e3-step washout (quicker, noisier).
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => bail!("unknown preset '{other}' (expected 'paper' or 'desk')"),
        }
    }
}

// ---------------------------------------------------------------------------
// TOML schema
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    #[serde(default)]
    pub reservoir: ReservoirSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub ipc: IpcSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub convergence: ConvergenceSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSection {
    pub n_qubits: Option<usize>,
    pub field_h: Option<f64>,
    pub coupling_scale: Option<f64>,
    pub dt: Option<f64>,
    pub virtual_nodes: Option<usize>,
    pub observables: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub length: Option<usize>,
    pub washout: Option<usize>,
    pub realizations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpcSection {
    pub d_max: Option<usize>,
    pub n_surrogates: Option<usize>,
    pub min_delay: Option<usize>,
    pub max_delays: Option<Vec<usize>>,
    pub max_terms: Option<usize>,
    pub extension_block: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub dt_values: Option<Vec<f64>>,
    pub n_inputs: Option<usize>,
}

// ---------------------------------------------------------------------------
// Flag overrides (filled by main from clap)
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub length: Option<usize>,
    pub washout: Option<usize>,
    pub d_max: Option<usize>,
    pub preset: Option<Preset>,
    pub dt: Option<f64>,
    pub n_qubits: Option<usize>,
    pub virtual_nodes: Option<usize>,
    pub field_h: Option<f64>,
    pub coupling_scale: Option<f64>,
    pub observables: Option<String>,
    pub realizations: Option<usize>,
}

// ---------------------------------------------------------------------------
// Resolved configuration
// ---------------------------------------------------------------------------

/// Everything a run needs, with all defaults materialized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub reservoir: ReservoirConfig,
    pub length: usize,
    pub washout: usize,
    pub realizations: usize,
    pub ipc: ProfileOptions,
    pub sweep: Option<SweepAxis>,
    pub convergence_dt_values: Vec<f64>,
    pub convergence_inputs: usize,
}

/// Manifest written next to every run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: String,
    pub subcommand: String,
    pub master_seed: u64,
    pub out_dir: String,
    pub artifact_version: String,
    pub config_hash: String,
    pub status: String,
    pub config: Resolved,
}

impl RunManifest {
    pub fn new(subcommand: &str, master_seed: u64, out_dir: &str, config: Resolved) -> Self {
        let config_hash = hash_config(&config);
        RunManifest {
            schema: MANIFEST_SCHEMA.to_string(),
            subcommand: subcommand.to_string(),
            master_seed,
            out_dir: out_dir.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            status: "incomplete".to_string(),
            config,
        }
    }

    /// Seeds of one realization of this manifest's configuration.
    pub fn realization_seeds(&self, realization: usize) -> (u64, u64) {
        (
            derive_seed(self.master_seed, &[realization as u64, stream::COUPLINGS]),
            derive_seed(self.master_seed, &[realization as u64, stream::INPUTS]),
        )
    }
}

/// SHA-256 over the canonical JSON form of the resolved configuration.
pub fn hash_config(config: &Resolved) -> String {
    let canonical = serde_json::to_vec(config).expect("resolved config serializes");
    hex::encode(Sha256::digest(canonical))
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if !(value.is_finite() && value > 0.0) {
        bail!("{name} must be positive and finite, got {value}");
    }
    Ok(value)
}

fn non_negative(name: &str, value: f64) -> Result<f64> {
    if !(value.is_finite() && value >= 0.0) {
        bail!("{name} must be non-negative and finite, got {value}");
    }
    Ok(value)
}

fn at_least(name: &str, value: usize, min: usize) -> Result<usize> {
    if value < min {
        bail!("{name} must be at least {min}, got {value}");
    }
    Ok(value)
}

fn parse_axis(section: &SweepSection) -> Result<SweepAxis> {
    let floats = || -> Result<Vec<f64>> {
        section
            .values
            .iter()
            .map(|v| match v {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                other => bail!("sweep.values entry {other} is not a number"),
            })
            .collect()
    };
    let counts = || -> Result<Vec<usize>> {
        section
            .values
            .iter()
            .map(|v| match v {
                toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                other => bail!("sweep.values entry {other} is not a non-negative integer"),
            })
            .collect()
    };
    let axis = match section.axis.as_str() {
        "dt" => SweepAxis::Dt(floats()?),
        "field_h" => SweepAxis::FieldH(floats()?),
        "coupling_scale" => SweepAxis::CouplingScale(floats()?),
        "n_qubits" => SweepAxis::NQubits(counts()?),
        "virtual_nodes" => SweepAxis::VirtualNodes(counts()?),
        "observable_set" => {
            let sets = section
                .values
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => {
                        ObservableSet::parse(s).map_err(|e| anyhow::anyhow!("sweep.values: {e}"))
                    }
                    other => bail!("sweep.values entry {other} is not an observable string"),
                })
                .collect::<Result<Vec<_>>>()?;
            SweepAxis::ObservableSet(sets)
        }
        other => bail!(
            "sweep.axis '{other}' is not one of dt, n_qubits, virtual_nodes, field_h, coupling_scale, observable_set"
        ),
    };
    if axis.is_empty() {
        bail!("sweep.values must not be empty");
    }
    Ok(axis)
}

/// Reads the optional config file and resolves it against the preset,
/// defaults and flag overrides. Also returns `(master_seed, out_dir)`.
pub fn resolve(
    config_path: Option<&Path>,
    flags: &FlagOverrides,
) -> Result<(Resolved, u64, String)> {
    let file: FileConfig = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            toml::from_str(&text)
                .with_context(|| format!("cannot parse config file {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let preset = match (&flags.preset, &file.preset) {
        (Some(p), _) => *p,
        (None, Some(text)) => text.parse::<Preset>()?,
        (None, None) => Preset::Paper,
    };
    let (preset_length, preset_washout) = match preset {
        Preset::Paper => (100_000, 10_000),
        Preset::Desk => (20_000, 1_000),
    };

    // Defaults are the benchmark operating point.
    let n_qubits = at_least(
        "reservoir.n_qubits",
        flags.n_qubits.or(file.reservoir.n_qubits).unwrap_or(5),
        1,
    )?;
    let field_h = flags.field_h.or(file.reservoir.field_h).unwrap_or(1.0);
    if !field_h.is_finite() {
        bail!("reservoir.field_h must be finite");
    }
    let coupling_scale = non_negative(
        "reservoir.coupling_scale",
        flags
            .coupling_scale
            .or(file.reservoir.coupling_scale)
            .unwrap_or(1.0),
    )?;
    let dt = positive("reservoir.dt", flags.dt.or(file.reservoir.dt).unwrap_or(10.0))?;
    let virtual_nodes = at_least(
        "reservoir.virtual_nodes",
        flags
            .virtual_nodes
            .or(file.reservoir.virtual_nodes)
            .unwrap_or(1),
        1,
    )?;
    let observables_text = flags
        .observables
        .clone()
        .or(file.reservoir.observables.clone())
        .unwrap_or_else(|| "z".to_string());
    let observables = ObservableSet::parse(&observables_text)
        .map_err(|e| anyhow::anyhow!("reservoir.observables: {e}"))?;

    let reservoir = ReservoirConfig {
        n_qubits,
        field_h,
        coupling_scale,
        dt,
        virtual_nodes,
        coupling_seed: 0, // per-realization seeds are derived at dispatch
        observables,
    };
    reservoir
        .validate()
        .map_err(|e| anyhow::anyhow!("reservoir: {e}"))?;

    let length = at_least(
        "run.length",
        flags.length.or(file.run.length).unwrap_or(preset_length),
        1,
    )?;
    let washout = flags.washout.or(file.run.washout).unwrap_or(preset_washout);
    let realizations = at_least(
        "run.realizations",
        flags
            .realizations
            .or(file.run.realizations)
            .unwrap_or(10),
        1,
    )?;

    let defaults = ProfileOptions::default();
    let windows = WindowPolicy {
        min_delay: file.ipc.min_delay.unwrap_or(defaults.windows.min_delay),
        max_delays: file
            .ipc
            .max_delays
            .clone()
            .unwrap_or_else(|| defaults.windows.max_delays.clone()),
        max_terms: file.ipc.max_terms.unwrap_or(defaults.windows.max_terms),
        extension_block: file
            .ipc
            .extension_block
            .unwrap_or(defaults.windows.extension_block),
    };
    let ipc = ProfileOptions {
        d_max: at_least(
            "ipc.d_max",
            flags.d_max.or(file.ipc.d_max).unwrap_or(defaults.d_max),
            1,
        )?,
        windows,
        n_surrogates: at_least(
            "ipc.n_surrogates",
            file.ipc.n_surrogates.unwrap_or(defaults.n_surrogates),
            1,
        )?,
    };
    ipc.validate().map_err(|e| anyhow::anyhow!("ipc: {e}"))?;

    let sweep = file.sweep.as_ref().map(parse_axis).transpose()?;

    let convergence_dt_values = file
        .convergence
        .dt_values
        .clone()
        .unwrap_or_else(|| vec![0.1, 1.0, 4.0, 10.0, 20.0]);
    for &v in &convergence_dt_values {
        positive("convergence.dt_values", v)?;
    }
    let convergence_inputs = at_least(
        "convergence.n_inputs",
        file.convergence.n_inputs.unwrap_or(300),
        1,
    )?;

    let master_seed = flags.seed.or(file.seed).unwrap_or(1);
    let out_dir = flags
        .out
        .clone()
        .or(file.out.clone())
        .or_else(|| std::env::var("QRC_OUT_DIR").ok())
        .unwrap_or_else(|| "qrc-out".to_string());

    Ok((
        Resolved {
            reservoir,
            length,
            washout,
            realizations,
            ipc,
            sweep,
            convergence_dt_values,
            convergence_inputs,
        },
        master_seed,
        out_dir,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_resolves_to_benchmark_defaults() {
        let (resolved, seed, _) = resolve(None, &FlagOverrides::default()).unwrap();
        assert_eq!(resolved.reservoir.n_qubits, 5);
        assert_eq!(resolved.reservoir.field_h, 1.0);
        assert_eq!(resolved.reservoir.coupling_scale, 1.0);
        assert_eq!(resolved.reservoir.dt, 10.0);
        assert_eq!(resolved.reservoir.virtual_nodes, 1);
        assert_eq!(resolved.reservoir.observables.to_string(), "z");
        assert_eq!(resolved.length, 100_000);
        assert_eq!(resolved.washout, 10_000);
        assert_eq!(resolved.realizations, 10);
        assert_eq!(resolved.ipc.d_max, 9);
        assert_eq!(seed, 1);
    }

    #[test]
    fn flags_override_file_and_preset() {
        let flags = FlagOverrides {
            preset: Some(Preset::Desk),
            dt: Some(2.5),
            observables: Some("xy+z".into()),
            ..Default::default()
        };
        let (resolved, _, _) = resolve(None, &flags).unwrap();
        assert_eq!(resolved.length, 20_000);
        assert_eq!(resolved.washout, 1_000);
        assert_eq!(resolved.reservoir.dt, 2.5);
        assert_eq!(resolved.reservoir.observables.to_string(), "z+xy");
        // 5 z-projections plus 20 ordered xy pairs.
        assert_eq!(resolved.reservoir.observables.n_observables(5), 25);
    }

    #[test]
    fn negative_dt_is_rejected_by_name() {
        let flags = FlagOverrides {
            dt: Some(-1.0),
            ..Default::default()
        };
        let err = resolve(None, &flags).unwrap_err().to_string();
        assert!(err.contains("dt"), "error should name dt: {err}");
    }

    #[test]
    fn shipped_configs_resolve() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().and_then(|e| e.to_str()) != Some("toml") {
                continue;
            }
            let (resolved, _, _) = resolve(Some(&path), &FlagOverrides::default())
                .unwrap_or_else(|e| panic!("{} fails to resolve: {e}", path.display()));
            resolved.reservoir.validate().unwrap();
            seen += 1;
        }
        assert!(seen >= 12, "expected the shipped configs, found {seen}");
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let (a, _, _) = resolve(None, &FlagOverrides::default()).unwrap();
        let (b, _, _) = resolve(None, &FlagOverrides::default()).unwrap();
        assert_eq!(hash_config(&a), hash_config(&b));
        let flags = FlagOverrides {
            dt: Some(9.0),
            ..Default::default()
        };
        let (c, _, _) = resolve(None, &flags).unwrap();
        assert_ne!(hash_config(&a), hash_config(&c));
    }
}
