//! JSON and CSV emission with stable formatting.
//!
//! Floats print in Rust's shortest round-trip decimal form, maps are
//! ordered, and lines end with LF, so identical runs produce byte-identical
//! files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use qrc_core::experiments::{ConvergenceDataset, DelayCapacity, FigureDataset};
use qrc_core::ipc::CapacityReport;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

/// One row per retained capacity record: total degree, delay list and
/// per-term degree list (semicolon separated), capacity, threshold flag.
pub fn write_records_csv(path: &Path, report: &CapacityReport) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "degree,delays,term_degrees,capacity,above_threshold")?;
    for r in &report.records {
        let delays: Vec<String> = r.spec.terms().iter().map(|t| t.delay.to_string()).collect();
        let degrees: Vec<String> = r.spec.terms().iter().map(|t| t.degree.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{}",
            r.spec.total_degree(),
            delays.join(";"),
            degrees.join(";"),
            r.capacity,
            r.above_threshold
        )?;
    }
    Ok(())
}

pub fn write_memory_curve_csv(path: &Path, curve: &[DelayCapacity]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "delay,capacity,above_threshold")?;
    for p in curve {
        writeln!(w, "{},{},{}", p.delay, p.capacity, p.above_threshold)?;
    }
    Ok(())
}

pub fn write_convergence_csv(path: &Path, dataset: &ConvergenceDataset) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "dt,input_index,time,distance")?;
    for curve in &dataset.curves {
        for p in &curve.points {
            writeln!(w, "{},{},{},{}", curve.dt, p.input_index, p.time, p.distance)?;
        }
    }
    Ok(())
}

/// Per-degree means and standard deviations, one row per (value, degree).
pub fn write_sweep_points_csv(path: &Path, dataset: &FigureDataset) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "axis,value,degree,mean,std")?;
    for point in &dataset.points {
        if let Some(summary) = &point.summary {
            for (degree, mean) in &summary.per_degree_mean {
                let std = summary.per_degree_std.get(degree).copied().unwrap_or(0.0);
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    dataset.axis, point.label, degree, mean, std
                )?;
            }
        }
    }
    Ok(())
}

/// Totals per axis value, one row per value; failed values carry the error.
pub fn write_sweep_totals_csv(path: &Path, dataset: &FigureDataset) -> Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "axis,value,realizations,n_vars,total_mean,total_std,normalized_mean,normalized_std,error"
    )?;
    for point in &dataset.points {
        match &point.summary {
            Some(s) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},",
                dataset.axis,
                point.label,
                s.realizations,
                s.n_vars,
                s.total_mean,
                s.total_std,
                s.normalized_mean,
                s.normalized_std
            )?,
            None => writeln!(
                w,
                "{},{},0,0,,,,,{}",
                dataset.axis,
                point.label,
                point.error.as_deref().unwrap_or("unknown").replace(',', ";")
            )?,
        }
    }
    Ok(())
}
