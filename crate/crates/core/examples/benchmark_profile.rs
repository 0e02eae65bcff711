//! Library usage example: profile one realization at the benchmark
//! operating point (desk scale) and print its degree decomposition.
//!
//!     cargo run --release -p qrc-core --example benchmark_profile

use qrc_core::experiments::{linear_memory_curve, run_realization};
use qrc_core::ipc::ProfileOptions;
use qrc_core::reservoir::ReservoirConfig;

fn main() {
    let config = ReservoirConfig::benchmark(7);
    let report = run_realization(&config, 20_000, 1_000, &ProfileOptions::default(), 8)
        .expect("realization runs");

    println!(
        "n_vars {}  threshold {:.3e}  total {:.4}  normalized {:.4}",
        report.n_vars, report.threshold, report.total, report.normalized_total
    );
    for (degree, total) in &report.per_degree_totals {
        println!("  degree {degree}: {total:.4}");
    }

    let curve = linear_memory_curve(&report);
    let half = curve
        .iter()
        .find(|p| p.capacity < 0.5)
        .map(|p| p.delay)
        .unwrap_or(0);
    println!("linear memory drops below 1/2 at delay {half}");
}
