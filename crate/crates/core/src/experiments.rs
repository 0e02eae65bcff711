//! Multi-realization experiment orchestration.
//!
//! A sweep varies one parameter of a base reservoir configuration, runs
//! several seeded realizations per value (fresh couplings and fresh input
//! sequences), profiles each one and aggregates per-degree capacity
//! statistics into a plot-ready dataset. Seeds derive from a single master
//! seed keyed by the axis value's canonical label, so adding values to a
//! sweep never changes the results of existing ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipc::{
    aggregate_realizations, ipc_profile, CapacityReport, ProfileOptions, RealizationSummary,
};
use crate::linalg::DensityMatrix;
use crate::reservoir::{
    convergence_trace, run, InputSequence, ObservableSet, ReservoirConfig,
};
use crate::rng::{derive_seed, salt_from_label, stream};

pub const SWEEP_SCHEMA: &str = "sweep-dataset/1";
pub const CONVERGENCE_SCHEMA: &str = "convergence-dataset/1";

// ---------------------------------------------------------------------------
// Single realizations
// ---------------------------------------------------------------------------

/// Runs one seeded realization end to end: draw couplings and inputs, drive
/// the reservoir, profile the capacities. The report echoes the resolved
/// configuration.
pub fn run_realization(
    config: &ReservoirConfig,
    length: usize,
    washout: usize,
    opts: &ProfileOptions,
    input_seed: u64,
) -> Result<CapacityReport> {
    if length == 0 {
        return Err(Error::validation("evaluation length must be at least 1"));
    }
    let inputs = InputSequence::uniform(washout + length, input_seed);
    let x = run(config, &inputs, washout)?;
    let mut report = ipc_profile(&x, &inputs, opts)?;
    report.config = Some(config.clone());
    Ok(report)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// The swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    Dt(Vec<f64>),
    NQubits(Vec<usize>),
    VirtualNodes(Vec<usize>),
    FieldH(Vec<f64>),
    CouplingScale(Vec<f64>),
    ObservableSet(Vec<ObservableSet>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Dt(_) => "dt",
            SweepAxis::NQubits(_) => "n_qubits",
            SweepAxis::VirtualNodes(_) => "virtual_nodes",
            SweepAxis::FieldH(_) => "field_h",
            SweepAxis::CouplingScale(_) => "coupling_scale",
            SweepAxis::ObservableSet(_) => "observable_set",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Dt(v) | SweepAxis::FieldH(v) | SweepAxis::CouplingScale(v) => v.len(),
            SweepAxis::NQubits(v) | SweepAxis::VirtualNodes(v) => v.len(),
            SweepAxis::ObservableSet(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Canonical label of one value; keys both output rows and seed salts.
    pub fn label(&self, idx: usize) -> String {
        match self {
            SweepAxis::Dt(v) | SweepAxis::FieldH(v) | SweepAxis::CouplingScale(v) => {
                format!("{}", v[idx])
            }
            SweepAxis::NQubits(v) | SweepAxis::VirtualNodes(v) => format!("{}", v[idx]),
            SweepAxis::ObservableSet(v) => v[idx].to_string(),
        }
    }

    /// Applies value `idx` to a copy of the base configuration.
    pub fn apply(&self, base: &ReservoirConfig, idx: usize) -> ReservoirConfig {
        let mut config = base.clone();
        match self {
            SweepAxis::Dt(v) => config.dt = v[idx],
            SweepAxis::NQubits(v) => config.n_qubits = v[idx],
            SweepAxis::VirtualNodes(v) => config.virtual_nodes = v[idx],
            SweepAxis::FieldH(v) => config.field_h = v[idx],
            SweepAxis::CouplingScale(v) => config.coupling_scale = v[idx],
            SweepAxis::ObservableSet(v) => config.observables = v[idx].clone(),
        }
        config
    }
}

/// A full sweep description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub base: ReservoirConfig,
    pub axis: SweepAxis,
    /// Seeded repetitions per axis value (couplings and inputs both redrawn).
    pub realizations: usize,
    /// Evaluation steps per realization.
    pub length: usize,
    /// Discarded leading steps per realization.
    pub washout: usize,
    pub ipc: ProfileOptions,
    pub master_seed: u64,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.axis.is_empty() {
            return Err(Error::validation("sweep axis has no values"));
        }
        if self.realizations == 0 {
            return Err(Error::validation("sweep needs at least one realization"));
        }
        if self.length == 0 {
            return Err(Error::validation("evaluation length must be at least 1"));
        }
        self.ipc.validate()
    }

    /// Coupling and input seeds of one (value, realization) cell, derived
    /// from the master seed, the value's canonical label and the
    /// realization index.
    pub fn seeds_for(&self, value_label: &str, realization: usize) -> (u64, u64) {
        let salt = salt_from_label(value_label);
        let base = &[stream::SWEEP, salt, realization as u64];
        (
            derive_seed(self.master_seed, &[base[0], base[1], base[2], stream::COUPLINGS]),
            derive_seed(self.master_seed, &[base[0], base[1], base[2], stream::INPUTS]),
        )
    }
}

/// Compact record of one realization inside a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationOutcome {
    pub coupling_seed: u64,
    pub input_seed: u64,
    pub per_degree_totals: std::collections::BTreeMap<usize, f64>,
    pub total: f64,
    pub normalized_total: f64,
    pub window_warnings: Vec<usize>,
}

impl RealizationOutcome {
    fn from_report(report: &CapacityReport) -> Self {
        RealizationOutcome {
            coupling_seed: report.config.as_ref().map(|c| c.coupling_seed).unwrap_or(0),
            input_seed: report.input_seed,
            per_degree_totals: report.per_degree_totals.clone(),
            total: report.total,
            normalized_total: report.normalized_total,
            window_warnings: report.window_warnings.clone(),
        }
    }
}

/// One axis value of a sweep: resolved configs, per-realization outcomes
/// and their aggregate, or the error that aborted the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub label: String,
    pub configs: Vec<ReservoirConfig>,
    pub outcomes: Vec<RealizationOutcome>,
    pub summary: Option<RealizationSummary>,
    pub error: Option<String>,
}

/// Plot-ready result of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureDataset {
    pub schema: String,
    pub axis: String,
    pub master_seed: u64,
    pub realizations: usize,
    pub length: usize,
    pub washout: usize,
    pub base: ReservoirConfig,
    pub ipc: ProfileOptions,
    pub points: Vec<SweepPoint>,
}

/// Runs every (axis value, realization) cell of the plan; cells execute in
/// parallel and results are reduced in deterministic order. A failing cell
/// aborts its axis value (the error is recorded) without stopping others.
pub fn run_sweep(plan: &SweepPlan) -> Result<FigureDataset> {
    plan.validate()?;
    let n_points = plan.axis.len();
    let cells: Vec<(usize, usize)> = (0..n_points)
        .flat_map(|p| (0..plan.realizations).map(move |r| (p, r)))
        .collect();

    let mut results: Vec<(usize, usize, std::result::Result<CapacityReport, String>)> = cells
        .par_iter()
        .map(|&(p, r)| {
            let label = plan.axis.label(p);
            let (coupling_seed, input_seed) = plan.seeds_for(&label, r);
            let mut config = plan.axis.apply(&plan.base, p);
            config.coupling_seed = coupling_seed;
            let outcome = run_realization(&config, plan.length, plan.washout, &plan.ipc, input_seed)
                .map_err(|e| e.to_string());
            (p, r, outcome)
        })
        .collect();
    results.sort_by_key(|&(p, r, _)| (p, r));

    let mut points = Vec::with_capacity(n_points);
    for p in 0..n_points {
        let label = plan.axis.label(p);
        let mut reports = Vec::with_capacity(plan.realizations);
        let mut error = None;
        for (_, _, outcome) in results.iter().filter(|&&(pp, _, _)| pp == p) {
            match outcome {
                Ok(report) => reports.push(report.clone()),
                Err(msg) => {
                    error = Some(msg.clone());
                    break;
                }
            }
        }
        if let Some(msg) = error {
            points.push(SweepPoint {
                label,
                configs: Vec::new(),
                outcomes: Vec::new(),
                summary: None,
                error: Some(msg),
            });
            continue;
        }
        let summary = aggregate_realizations(&reports)?;
        points.push(SweepPoint {
            label,
            configs: reports
                .iter()
                .filter_map(|r| r.config.clone())
                .collect(),
            outcomes: reports.iter().map(RealizationOutcome::from_report).collect(),
            summary: Some(summary),
            error: None,
        });
    }

    Ok(FigureDataset {
        schema: SWEEP_SCHEMA.to_string(),
        axis: plan.axis.name().to_string(),
        master_seed: plan.master_seed,
        realizations: plan.realizations,
        length: plan.length,
        washout: plan.washout,
        base: plan.base.clone(),
        ipc: plan.ipc.clone(),
        points,
    })
}

// ---------------------------------------------------------------------------
// Convergence experiment
// ---------------------------------------------------------------------------

/// One sampled point of a convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub input_index: usize,
    pub time: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub dt: f64,
    pub points: Vec<ConvergencePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDataset {
    pub schema: String,
    pub base: ReservoirConfig,
    pub master_seed: u64,
    pub n_inputs: usize,
    pub curves: Vec<ConvergenceCurve>,
}

/// Evolves the two extreme product states (all spins down, all spins up)
/// under one shared input sequence for each requested `dt` and records the
/// Frobenius distance after every input. Distance against physical time and
/// against input count are both derivable from the points.
pub fn run_convergence(
    config: &ReservoirConfig,
    dt_values: &[f64],
    master_seed: u64,
    n_inputs: usize,
) -> Result<ConvergenceDataset> {
    if dt_values.is_empty() {
        return Err(Error::validation("convergence experiment needs dt values"));
    }
    if n_inputs == 0 {
        return Err(Error::validation("convergence experiment needs at least one input"));
    }
    let inputs = InputSequence::uniform(
        n_inputs,
        derive_seed(master_seed, &[stream::INPUTS]),
    );
    let dim = 1usize << config.n_qubits;
    let all_zeros = DensityMatrix::basis_state(config.n_qubits, 0)?;
    let all_ones = DensityMatrix::basis_state(config.n_qubits, dim - 1)?;

    let mut curves: Vec<(usize, ConvergenceCurve)> = dt_values
        .par_iter()
        .enumerate()
        .map(|(idx, &dt)| -> Result<(usize, ConvergenceCurve)> {
            let mut c = config.clone();
            c.dt = dt;
            let trace = convergence_trace(&c, &all_zeros, &all_ones, &inputs)?;
            let points = trace
                .into_iter()
                .enumerate()
                .map(|(k, (time, distance))| ConvergencePoint {
                    input_index: k + 1,
                    time,
                    distance,
                })
                .collect();
            Ok((idx, ConvergenceCurve { dt, points }))
        })
        .collect::<Result<_>>()?;
    curves.sort_by_key(|&(idx, _)| idx);

    Ok(ConvergenceDataset {
        schema: CONVERGENCE_SCHEMA.to_string(),
        base: config.clone(),
        master_seed,
        n_inputs,
        curves: curves.into_iter().map(|(_, c)| c).collect(),
    })
}

// ---------------------------------------------------------------------------
// Per-delay linear memory
// ---------------------------------------------------------------------------

/// Capacity of one linear-memory delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCapacity {
    pub delay: usize,
    pub capacity: f64,
    pub above_threshold: bool,
}

/// Extracts the degree-1 capacity-versus-delay curve from a report. The
/// above-threshold entries sum to the report's degree-1 total.
pub fn linear_memory_curve(report: &CapacityReport) -> Vec<DelayCapacity> {
    let mut curve: Vec<DelayCapacity> = report
        .records
        .iter()
        .filter(|r| r.spec.total_degree() == 1 && r.spec.terms().len() == 1)
        .map(|r| DelayCapacity {
            delay: r.spec.terms()[0].delay,
            capacity: r.capacity,
            above_threshold: r.above_threshold,
        })
        .collect();
    curve.sort_by_key(|p| p.delay);
    curve
}
