//! Command-line front end: resolves configuration, dispatches experiments
//! and writes JSON/CSV outputs plus a run manifest.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qrc_core::experiments::{
    linear_memory_curve, run_convergence, run_realization, run_sweep, SweepPlan,
};
use qrc_core::ipc::ipc_profile;
use qrc_core::reservoir::{run, InputSequence, ObservableSet, ReservoirConfig};

use config::{FlagOverrides, Preset, Resolved, RunManifest};

#[derive(Parser)]
#[command(
    name = "qrc",
    version,
    about = "Spin-network quantum reservoir simulator and information-processing-capacity profiler"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; every other seed derives from it.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory (default: $QRC_OUT_DIR or ./qrc-out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,

    /// Evaluation steps per realization.
    #[arg(long, global = true, value_name = "L")]
    length: Option<usize>,

    /// Discarded leading steps per realization.
    #[arg(long, global = true, value_name = "W")]
    washout: Option<usize>,

    /// Largest target polynomial degree.
    #[arg(long = "dmax", global = true, value_name = "D")]
    d_max: Option<usize>,

    /// Run-length preset: paper (1e5/1e4) or desk (2e4/1e3).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    dt: Option<f64>,

    #[arg(long = "n-qubits", global = true, value_name = "N")]
    n_qubits: Option<usize>,

    #[arg(long = "virtual-nodes", global = true, value_name = "V")]
    virtual_nodes: Option<usize>,

    #[arg(long = "field-h", global = true, value_name = "F", allow_negative_numbers = true)]
    field_h: Option<f64>,

    #[arg(long = "coupling-scale", global = true, value_name = "F", allow_negative_numbers = true)]
    coupling_scale: Option<f64>,

    /// Observable grammar: one letter per projection axis, two per ordered
    /// correlation pair, '+'-separated (e.g. "z", "x+y", "xy+z").
    #[arg(long, global = true, value_name = "STR")]
    observables: Option<String>,

    /// Seeded repetitions for sweeps.
    #[arg(long, global = true, value_name = "R")]
    realizations: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frobenius-distance convergence of two distant initial states.
    Converge,
    /// Capacity decomposition of one seeded realization.
    Ipc {
        /// Also write the harvested design matrix as design.csv.
        #[arg(long)]
        dump_design: bool,
    },
    /// Multi-realization parameter sweep ([sweep] section of the config).
    Sweep,
    /// Degree-1 capacity versus delay for one seeded realization.
    MemoryCurve,
    /// Single-qubit analytic self-test; exits nonzero unless the profile
    /// is unit capacity concentrated at delay zero.
    Oracle,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Converge => "converge",
            Command::Ipc { .. } => "ipc",
            Command::Sweep => "sweep",
            Command::MemoryCurve => "memory-curve",
            Command::Oracle => "oracle",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let flags = FlagOverrides {
        seed: cli.seed,
        out: cli.out.clone(),
        length: cli.length,
        washout: cli.washout,
        d_max: cli.d_max,
        preset: cli.preset.as_deref().map(str::parse::<Preset>).transpose()?,
        dt: cli.dt,
        n_qubits: cli.n_qubits,
        virtual_nodes: cli.virtual_nodes,
        field_h: cli.field_h,
        coupling_scale: cli.coupling_scale,
        observables: cli.observables.clone(),
        realizations: cli.realizations,
    };
    let (mut resolved, master_seed, out_dir) = config::resolve(cli.config.as_deref(), &flags)?;

    if let Command::Oracle = cli.command {
        // The self-test runs a fixed single-qubit setup; run lengths and
        // seeds remain configurable.
        resolved.reservoir = ReservoirConfig {
            n_qubits: 1,
            field_h: 1.0,
            coupling_scale: 0.0,
            dt: resolved.reservoir.dt,
            virtual_nodes: 1,
            coupling_seed: 0,
            observables: ObservableSet::z_projections(),
        };
        if flags.length.is_none() {
            resolved.length = 20_000;
        }
        if flags.washout.is_none() {
            resolved.washout = 1_000;
        }
    }

    let out = PathBuf::from(&out_dir);
    std::fs::create_dir_all(&out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;

    let mut manifest = RunManifest::new(cli.command.name(), master_seed, &out_dir, resolved.clone());
    output::write_json(&out.join("manifest.json"), &manifest)?;

    let run_result = match &cli.command {
        Command::Converge => cmd_converge(&resolved, master_seed, &out),
        Command::Ipc { dump_design } => {
            cmd_ipc(&resolved, &manifest, &out, *dump_design)
        }
        Command::Sweep => cmd_sweep(&resolved, master_seed, &out),
        Command::MemoryCurve => cmd_memory_curve(&resolved, &manifest, &out),
        Command::Oracle => cmd_oracle(&resolved, &manifest, &out),
    };

    manifest.status = match &run_result {
        Ok(()) => "complete".to_string(),
        Err(_) => "incomplete".to_string(),
    };
    output::write_json(&out.join("manifest.json"), &manifest)?;
    run_result
}

fn cmd_converge(resolved: &Resolved, master_seed: u64, out: &std::path::Path) -> Result<()> {
    let dataset = run_convergence(
        &resolved.reservoir,
        &resolved.convergence_dt_values,
        master_seed,
        resolved.convergence_inputs,
    )?;
    output::write_json(&out.join("convergence.json"), &dataset)?;
    output::write_convergence_csv(&out.join("convergence.csv"), &dataset)?;
    for curve in &dataset.curves {
        let last = curve.points.last().expect("curves are non-empty");
        println!(
            "converge dt={}: distance {:.3e} after {} inputs",
            curve.dt, last.distance, last.input_index
        );
    }
    Ok(())
}

fn cmd_ipc(
    resolved: &Resolved,
    manifest: &RunManifest,
    out: &std::path::Path,
    dump_design: bool,
) -> Result<()> {
    let (coupling_seed, input_seed) = manifest.realization_seeds(0);
    let mut config = resolved.reservoir.clone();
    config.coupling_seed = coupling_seed;

    let report = if dump_design {
        let inputs = InputSequence::uniform(resolved.washout + resolved.length, input_seed);
        let x = run(&config, &inputs, resolved.washout)?;
        let file = std::fs::File::create(out.join("design.csv"))?;
        x.write_csv(std::io::BufWriter::new(file))?;
        let mut report = ipc_profile(&x, &inputs, &resolved.ipc)?;
        report.config = Some(config);
        report
    } else {
        run_realization(&config, resolved.length, resolved.washout, &resolved.ipc, input_seed)?
    };

    output::write_json(&out.join("report.json"), &report)?;
    output::write_records_csv(&out.join("records.csv"), &report)?;
    println!(
        "ipc: n_vars {} total {:.4} normalized {:.4} threshold {:.3e}",
        report.n_vars, report.total, report.normalized_total, report.threshold
    );
    Ok(())
}

fn cmd_sweep(resolved: &Resolved, master_seed: u64, out: &std::path::Path) -> Result<()> {
    let Some(axis) = resolved.sweep.clone() else {
        bail!("the sweep subcommand needs a [sweep] section in the config file");
    };
    let plan = SweepPlan {
        base: resolved.reservoir.clone(),
        axis,
        realizations: resolved.realizations,
        length: resolved.length,
        washout: resolved.washout,
        ipc: resolved.ipc.clone(),
        master_seed,
    };
    let dataset = run_sweep(&plan)?;
    output::write_json(&out.join("sweep.json"), &dataset)?;
    output::write_sweep_points_csv(&out.join("sweep_points.csv"), &dataset)?;
    output::write_sweep_totals_csv(&out.join("sweep_totals.csv"), &dataset)?;
    for point in &dataset.points {
        match (&point.summary, &point.error) {
            (Some(s), _) => println!(
                "sweep {}={}: normalized {:.4} +/- {:.4} (total {:.3})",
                dataset.axis, point.label, s.normalized_mean, s.normalized_std, s.total_mean
            ),
            (None, Some(e)) => println!("sweep {}={}: FAILED: {e}", dataset.axis, point.label),
            (None, None) => unreachable!("a sweep point has either a summary or an error"),
        }
    }
    Ok(())
}

fn cmd_memory_curve(
    resolved: &Resolved,
    manifest: &RunManifest,
    out: &std::path::Path,
) -> Result<()> {
    let (coupling_seed, input_seed) = manifest.realization_seeds(0);
    let mut config = resolved.reservoir.clone();
    config.coupling_seed = coupling_seed;
    let report = run_realization(
        &config,
        resolved.length,
        resolved.washout,
        &resolved.ipc,
        input_seed,
    )?;
    let curve = linear_memory_curve(&report);
    #[derive(serde::Serialize)]
    struct MemoryCurve<'a> {
        schema: &'static str,
        degree_1_total: f64,
        threshold: f64,
        curve: &'a [qrc_core::experiments::DelayCapacity],
    }
    output::write_json(
        &out.join("memory_curve.json"),
        &MemoryCurve {
            schema: "memory-curve/1",
            degree_1_total: report.degree_total(1),
            threshold: report.threshold,
            curve: &curve,
        },
    )?;
    output::write_memory_curve_csv(&out.join("memory_curve.csv"), &curve)?;
    let above = curve.iter().filter(|p| p.above_threshold).count();
    println!(
        "memory-curve: {} delays evaluated, {} above threshold, degree-1 total {:.4}",
        curve.len(),
        above,
        report.degree_total(1)
    );
    Ok(())
}

fn cmd_oracle(resolved: &Resolved, manifest: &RunManifest, out: &std::path::Path) -> Result<()> {
    let (_, input_seed) = manifest.realization_seeds(0);
    let report = run_realization(
        &resolved.reservoir,
        resolved.length,
        resolved.washout,
        &resolved.ipc,
        input_seed,
    )?;
    let delay_zero = linear_memory_curve(&report)
        .first()
        .map(|p| p.capacity)
        .unwrap_or(0.0);
    let pass = (report.total - 1.0).abs() <= 0.005
        && (report.degree_total(1) - 1.0).abs() <= 0.005
        && (delay_zero - 1.0).abs() <= 1e-6;

    #[derive(serde::Serialize)]
    struct OracleOutcome {
        schema: &'static str,
        total: f64,
        degree_1_total: f64,
        delay_zero_capacity: f64,
        pass: bool,
    }
    output::write_json(
        &out.join("oracle.json"),
        &OracleOutcome {
            schema: "oracle-outcome/1",
            total: report.total,
            degree_1_total: report.degree_total(1),
            delay_zero_capacity: delay_zero,
            pass,
        },
    )?;
    output::write_records_csv(&out.join("records.csv"), &report)?;
    println!(
        "oracle: total IPC {:.4} (degree-1 {:.4}, delay-0 {:.6}) => {}",
        report.total,
        report.degree_total(1),
        delay_zero,
        if pass { "PASS" } else { "FAIL" }
    );
    if !pass {
        bail!("single-qubit oracle outside tolerance");
    }
    Ok(())
}
