//! Information processing capacity.
//!
//! The capacity of a reservoir for one target function is the fraction of
//! the target's variance reproduced by the best linear readout of the
//! harvested observables. Summed over a complete family of orthogonal
//! targets — products of Legendre polynomials of the scaled inputs at
//! distinct delays — the capacities decompose the reservoir's memory by
//! polynomial degree, and their total is bounded by the number of linearly
//! independent readout variables.
//!
//! The least-squares problems share one orthonormal basis of the design
//! matrix's column space (rank-truncated at a relative singular-value
//! cutoff of 1e-10), so evaluating one target costs a single projection.
//! Spurious finite-sample capacities are truncated below a threshold
//! estimated from surrogate replays: targets built on freshly drawn input
//! sequences that the reservoir never saw.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::{DesignMatrix, InputSequence, ReservoirConfig};
use crate::rng::{derive_seed, stream};

/// Relative singular-value cutoff of the least-squares pseudo-inverse.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-10;

/// Safety factor applied to the largest surrogate capacity.
pub const THRESHOLD_SAFETY_FACTOR: f64 = 1.2;

/// Schema tag embedded in serialized reports.
pub const REPORT_SCHEMA: &str = "capacity-report/1";

/// Targets per evaluation block; blocks are projected as one matrix product.
const TARGET_BLOCK: usize = 32;

// ---------------------------------------------------------------------------
// Legendre polynomials and target specifications
// ---------------------------------------------------------------------------

/// `P_d(x)` by the three-term recurrence
/// `(n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}`.
pub fn legendre(d: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::validation(format!(
            "Legendre argument {x} outside [-1, 1]"
        )));
    }
    Ok(legendre_unchecked(d, x))
}

#[inline]
fn legendre_unchecked(d: usize, x: f64) -> f64 {
    match d {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut curr = x;
            for n in 1..d {
                let next = ((2 * n + 1) as f64 * x * curr - n as f64 * prev) / (n + 1) as f64;
                prev = curr;
                curr = next;
            }
            curr
        }
    }
}

/// One factor of a product target: the input `delay` steps in the past,
/// passed through a Legendre polynomial of this `degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetTerm {
    pub delay: usize,
    pub degree: usize,
}

/// A product-of-Legendre-polynomials target: one term per distinct delay,
/// total degree equal to the sum of the term degrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetSpec {
    terms: Vec<TargetTerm>,
}

impl TargetSpec {
    /// Terms must have strictly increasing delays and degrees >= 1.
    pub fn new(terms: Vec<TargetTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::validation("a target needs at least one term"));
        }
        for pair in terms.windows(2) {
            if pair[1].delay <= pair[0].delay {
                return Err(Error::validation(
                    "target delays must be strictly increasing",
                ));
            }
        }
        if terms.iter().any(|t| t.degree == 0) {
            return Err(Error::validation("target term degrees must be at least 1"));
        }
        Ok(TargetSpec { terms })
    }

    /// Single-term convenience constructor.
    pub fn single(delay: usize, degree: usize) -> Result<Self> {
        TargetSpec::new(vec![TargetTerm { delay, degree }])
    }

    pub fn terms(&self) -> &[TargetTerm] {
        &self.terms
    }

    pub fn total_degree(&self) -> usize {
        self.terms.iter().map(|t| t.degree).sum()
    }

    pub fn max_delay(&self) -> usize {
        self.terms.iter().map(|t| t.delay).max().unwrap_or(0)
    }
}

impl std::fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("P{}[k-{}]", t.degree, t.delay))
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// `y_k = prod_i P_{d_i}(scaled input at delay i)` for every evaluation
/// step; `washout` sets the first evaluated index of `inputs`.
pub fn target_series(
    inputs: &InputSequence,
    spec: &TargetSpec,
    washout: usize,
) -> Result<DVector<f64>> {
    if spec.max_delay() > washout {
        return Err(Error::validation(format!(
            "target delay {} exceeds the washout of {washout} steps",
            spec.max_delay()
        )));
    }
    if inputs.len() <= washout {
        return Err(Error::validation(format!(
            "input sequence of length {} has no evaluation steps past washout {washout}",
            inputs.len()
        )));
    }
    let rows = inputs.len() - washout;
    let mut out = DVector::zeros(rows);
    for r in 0..rows {
        let mut acc = 1.0;
        for t in &spec.terms {
            acc *= legendre_unchecked(t.degree, inputs.scaled(washout + r - t.delay));
        }
        out[r] = acc;
    }
    Ok(out)
}

/// Precomputed `P_d(scaled input)` for all degrees up to `d_max` over a
/// whole input sequence; a target column is then a product of row slices.
struct LegendreTable {
    values: Vec<f64>, // (d_max + 1) rows of `len` values, row-major
    len: usize,
}

impl LegendreTable {
    fn build(inputs: &InputSequence, d_max: usize) -> Self {
        let len = inputs.len();
        let mut values = vec![0.0f64; (d_max + 1) * len];
        for k in 0..len {
            let x = inputs.scaled(k);
            values[k] = 1.0;
            if d_max >= 1 {
                values[len + k] = x;
            }
            for n in 1..d_max {
                let next = ((2 * n + 1) as f64 * x * values[n * len + k]
                    - n as f64 * values[(n - 1) * len + k])
                    / (n + 1) as f64;
                values[(n + 1) * len + k] = next;
            }
        }
        LegendreTable { values, len }
    }

    #[inline]
    fn row(&self, degree: usize) -> &[f64] {
        &self.values[degree * self.len..(degree + 1) * self.len]
    }

    fn fill_target(&self, spec: &TargetSpec, washout: usize, out: &mut [f64]) {
        let first = spec.terms[0];
        let row = self.row(first.degree);
        for (r, slot) in out.iter_mut().enumerate() {
            *slot = row[washout + r - first.delay];
        }
        for term in &spec.terms[1..] {
            let row = self.row(term.degree);
            for (r, slot) in out.iter_mut().enumerate() {
                *slot *= row[washout + r - term.delay];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Enumeration of targets
// ---------------------------------------------------------------------------

/// Per-degree delay windows for target enumeration.
///
/// Exhaustive enumeration over long delay windows is combinatorially
/// infeasible at high degree, so each degree gets its own window; degree 1
/// additionally grows in `extension_block`-sized blocks while the trailing
/// block still carries above-threshold capacity (bounded by the washout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    /// Smallest delay a target may use; 0 lets the present input
    /// participate, 1 reproduces the convention that starts at the
    /// previous input.
    pub min_delay: usize,
    /// Largest delay per total degree (`max_delays[d - 1]`); degrees past
    /// the end of the list reuse its last entry.
    pub max_delays: Vec<usize>,
    /// Cap on the number of simultaneous product terms.
    pub max_terms: usize,
    /// Block size of the adaptive degree-1 window extension (0 disables).
    pub extension_block: usize,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy {
            min_delay: 0,
            max_delays: vec![150, 30, 15, 15, 8, 8, 8, 8, 8],
            max_terms: 4,
            extension_block: 25,
        }
    }
}

impl WindowPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_delays.is_empty() {
            return Err(Error::validation("window policy needs at least one delay window"));
        }
        if self.max_terms == 0 {
            return Err(Error::validation("window policy max_terms must be at least 1"));
        }
        if self
            .max_delays
            .iter()
            .any(|&max| max < self.min_delay)
        {
            return Err(Error::validation(format!(
                "window policy min_delay {} exceeds a degree's max delay",
                self.min_delay
            )));
        }
        Ok(())
    }

    /// Largest delay admitted for targets of the given total degree.
    pub fn max_delay(&self, degree: usize) -> usize {
        let idx = degree.saturating_sub(1).min(self.max_delays.len() - 1);
        self.max_delays[idx]
    }
}

fn compositions(total: usize, parts: usize, out: &mut Vec<Vec<usize>>, prefix: &mut Vec<usize>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    // Leave at least 1 for each remaining part.
    for first in 1..=(total - (parts - 1)) {
        prefix.push(first);
        compositions(total - first, parts - 1, out, prefix);
        prefix.pop();
    }
}

fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = Vec::new();
    fn rec(pool: &[usize], k: usize, start: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if stack.len() == k {
            out.push(stack.clone());
            return;
        }
        for i in start..pool.len() {
            stack.push(pool[i]);
            rec(pool, k, i + 1, stack, out);
            stack.pop();
        }
    }
    rec(pool, k, 0, &mut stack, &mut out);
    out
}

/// All specs of the given total degree with delays in
/// `[min_delay, max_delay]`, at most `max_terms` terms, ordered by term
/// count, then lexicographically by delays, then by degree assignment.
pub fn enumerate_degree(
    degree: usize,
    min_delay: usize,
    max_delay: usize,
    max_terms: usize,
) -> Vec<TargetSpec> {
    let delays: Vec<usize> = (min_delay..=max_delay).collect();
    let mut specs = Vec::new();
    for k in 1..=max_terms.min(degree).min(delays.len()) {
        let mut degree_splits = Vec::new();
        compositions(degree, k, &mut degree_splits, &mut Vec::new());
        for delay_choice in combinations(&delays, k) {
            for split in &degree_splits {
                let terms = delay_choice
                    .iter()
                    .zip(split.iter())
                    .map(|(&delay, &degree)| TargetTerm { delay, degree })
                    .collect();
                specs.push(TargetSpec::new(terms).expect("enumeration yields valid specs"));
            }
        }
    }
    specs
}

/// All specs of total degree `1..=d_max` under the policy's windows,
/// degree-major and deterministic.
pub fn enumerate_targets(d_max: usize, policy: &WindowPolicy) -> Result<Vec<TargetSpec>> {
    if d_max == 0 {
        return Err(Error::validation("d_max must be at least 1"));
    }
    policy.validate()?;
    let mut specs = Vec::new();
    for d in 1..=d_max {
        specs.extend(enumerate_degree(
            d,
            policy.min_delay,
            policy.max_delay(d),
            policy.max_terms,
        ));
    }
    Ok(specs)
}

// ---------------------------------------------------------------------------
// Least-squares capacity
// ---------------------------------------------------------------------------

/// Orthonormal basis of a design matrix's column space, rank-truncated at
/// the relative singular-value cutoff. Capacities are squared projection
/// fractions against this basis, which equals `1 - MSE/<y^2>` at the
/// least-squares optimum.
pub struct Projector {
    basis_t: DMatrix<f64>, // rank x rows, orthonormal rows
    rank: usize,
    rows: usize,
}

impl Projector {
    pub fn new(x: &DesignMatrix) -> Result<Self> {
        Projector::from_matrix(x.data())
    }

    pub fn from_matrix(x: &DMatrix<f64>) -> Result<Self> {
        let rows = x.nrows();
        let cols = x.ncols();
        if rows == 0 || cols == 0 {
            return Err(Error::validation("cannot factorize an empty design matrix"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("design matrix contains NaN or Inf"));
        }
        // Thin QR, then an SVD of the small R factor; X and R share
        // singular values, so rank truncation happens on R.
        let qr = x.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let svd = r.svd(true, false);
        let u = svd
            .u
            .as_ref()
            .ok_or_else(|| Error::numerical("SVD of the R factor produced no U".to_string()))?;
        let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let kept: Vec<usize> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > SINGULAR_VALUE_CUTOFF * sigma_max && s > 0.0)
            .map(|(i, _)| i)
            .collect();
        let rank = kept.len();
        let mut u_kept = DMatrix::<f64>::zeros(u.nrows(), rank);
        for (dst, &src) in kept.iter().enumerate() {
            u_kept.set_column(dst, &u.column(src));
        }
        // basis = Q * U_kept (rows x rank); store its transpose for
        // row-major style products against target blocks.
        let basis_t = (q * u_kept).transpose();
        Ok(Projector {
            basis_t,
            rank,
            rows,
        })
    }

    /// Number of linearly independent columns at the cutoff.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Capacity of one target: `||proj y||^2 / ||y||^2`, clipped to [0, 1].
    pub fn capacity_of(&self, target: &DVector<f64>) -> Result<f64> {
        if target.len() != self.rows {
            return Err(Error::dimension(
                "Projector::capacity_of",
                format!("target length {} vs {} rows", target.len(), self.rows),
            ));
        }
        let denom = target.norm_squared();
        if denom <= 0.0 || !denom.is_finite() {
            return Err(Error::domain(
                "capacity is undefined for a zero-variance target".to_string(),
            ));
        }
        if self.rank == 0 {
            return Ok(0.0);
        }
        let z = &self.basis_t * target;
        Ok((z.norm_squared() / denom).clamp(0.0, 1.0))
    }

    /// Capacities of a block of targets stored as matrix columns.
    fn capacities_of_block(&self, targets: &DMatrix<f64>) -> Result<Vec<f64>> {
        debug_assert_eq!(targets.nrows(), self.rows);
        let mut norms = vec![0.0f64; targets.ncols()];
        for (j, col) in targets.column_iter().enumerate() {
            norms[j] = col.norm_squared();
            if norms[j] <= 0.0 || !norms[j].is_finite() {
                return Err(Error::domain(
                    "capacity is undefined for a zero-variance target".to_string(),
                ));
            }
        }
        if self.rank == 0 {
            return Ok(vec![0.0; targets.ncols()]);
        }
        let z = &self.basis_t * targets;
        Ok(z.column_iter()
            .zip(norms)
            .map(|(col, n)| (col.norm_squared() / n).clamp(0.0, 1.0))
            .collect())
    }
}

/// Capacity of a single target against a design matrix (one-shot variant;
/// batch evaluation shares a [`Projector`]).
pub fn capacity(x: &DesignMatrix, target: &DVector<f64>) -> Result<f64> {
    if target.len() != x.rows() {
        return Err(Error::dimension(
            "capacity",
            format!("target length {} vs design matrix rows {}", target.len(), x.rows()),
        ));
    }
    Projector::new(x)?.capacity_of(target)
}

fn capacities_for_specs(
    projector: &Projector,
    table: &LegendreTable,
    specs: &[TargetSpec],
    washout: usize,
) -> Result<Vec<f64>> {
    let rows = projector.rows();
    let chunks: Vec<&[TargetSpec]> = specs.chunks(TARGET_BLOCK).collect();
    let per_chunk: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|chunk| -> Result<Vec<f64>> {
            let mut block = DMatrix::<f64>::zeros(rows, chunk.len());
            for (j, spec) in chunk.iter().enumerate() {
                table.fill_target(spec, washout, block.column_mut(j).as_mut_slice());
            }
            projector.capacities_of_block(&block)
        })
        .collect::<Result<_>>()?;
    Ok(per_chunk.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// Threshold estimation
// ---------------------------------------------------------------------------

/// Capacity profile options: maximum degree, delay windows, surrogate count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Largest total degree evaluated.
    pub d_max: usize,
    pub windows: WindowPolicy,
    /// Surrogate input replays used for the noise threshold.
    pub n_surrogates: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            d_max: 9,
            windows: WindowPolicy::default(),
            n_surrogates: 10,
        }
    }
}

impl ProfileOptions {
    pub fn validate(&self) -> Result<()> {
        if self.d_max == 0 {
            return Err(Error::validation("d_max must be at least 1"));
        }
        if self.n_surrogates == 0 {
            return Err(Error::validation("n_surrogates must be at least 1"));
        }
        self.windows.validate()
    }
}

/// Evenly spaced stratified sample (about a tenth of each degree's specs,
/// at least 16) used for surrogate capacities.
fn stratified_sample(specs: &[TargetSpec]) -> Vec<TargetSpec> {
    let count = specs.len();
    if count == 0 {
        return Vec::new();
    }
    let size = (count.div_ceil(10)).max(16).min(count);
    (0..size).map(|m| specs[m * count / size].clone()).collect()
}

fn surrogate_threshold(
    projector: &Projector,
    inputs: &InputSequence,
    washout: usize,
    opts: &ProfileOptions,
) -> Result<f64> {
    let mut sample = Vec::new();
    for d in 1..=opts.d_max {
        let specs = enumerate_degree(
            d,
            opts.windows.min_delay,
            opts.windows.max_delay(d).min(washout),
            opts.windows.max_terms,
        );
        sample.extend(stratified_sample(&specs));
    }
    let mut worst = 0.0f64;
    for j in 0..opts.n_surrogates {
        let seed = derive_seed(inputs.generator_seed(), &[stream::SURROGATES, j as u64]);
        let surrogate = InputSequence::uniform(inputs.len(), seed);
        let table = LegendreTable::build(&surrogate, opts.d_max);
        let caps = capacities_for_specs(projector, &table, &sample, washout)?;
        worst = caps.into_iter().fold(worst, f64::max);
    }
    Ok(THRESHOLD_SAFETY_FACTOR * worst)
}

/// Noise floor for capacities: the largest capacity the design matrix
/// reaches against targets built from input sequences it never saw,
/// times a safety factor. Deterministic given the input sequence's seed.
pub fn estimate_threshold(
    x: &DesignMatrix,
    inputs: &InputSequence,
    opts: &ProfileOptions,
) -> Result<f64> {
    opts.validate()?;
    let washout = washout_of(x, inputs)?;
    let projector = Projector::new(x)?;
    surrogate_threshold(&projector, inputs, washout, opts)
}

fn washout_of(x: &DesignMatrix, inputs: &InputSequence) -> Result<usize> {
    if inputs.len() < x.rows() {
        return Err(Error::dimension(
            "ipc",
            format!(
                "input sequence of length {} is shorter than the {} design matrix rows",
                inputs.len(),
                x.rows()
            ),
        ));
    }
    Ok(inputs.len() - x.rows())
}

// ---------------------------------------------------------------------------
// Capacity reports
// ---------------------------------------------------------------------------

/// Capacity of one target, with its threshold flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub spec: TargetSpec,
    pub capacity: f64,
    pub above_threshold: bool,
}

/// Full degree-by-degree capacity decomposition of one realization.
///
/// `records` keeps every degree-1 target (the per-delay memory curve) and
/// the above-threshold targets of higher degrees; per-degree totals sum
/// above-threshold capacities only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub schema: String,
    /// Reservoir configuration echo (filled by the caller that ran it).
    pub config: Option<ReservoirConfig>,
    pub input_seed: u64,
    pub rows: usize,
    pub washout: usize,
    pub options: ProfileOptions,
    pub n_vars: usize,
    pub threshold: f64,
    pub records: Vec<CapacityRecord>,
    pub per_degree_totals: BTreeMap<usize, f64>,
    pub total: f64,
    pub normalized_total: f64,
    /// Degrees whose delay-window boundary still carried above-threshold
    /// capacity (the window may be truncating real memory).
    pub window_warnings: Vec<usize>,
}

impl CapacityReport {
    /// Above-threshold total of one degree (0 when absent).
    pub fn degree_total(&self, degree: usize) -> f64 {
        self.per_degree_totals.get(&degree).copied().unwrap_or(0.0)
    }
}

/// Runs the full capacity decomposition of a design matrix: enumerates
/// targets per degree, evaluates every capacity against the shared
/// projector, truncates below the surrogate threshold and aggregates.
pub fn ipc_profile(
    x: &DesignMatrix,
    inputs: &InputSequence,
    opts: &ProfileOptions,
) -> Result<CapacityReport> {
    opts.validate()?;
    let washout = washout_of(x, inputs)?;
    let base_window = opts.windows.max_delay(1);
    for d in 1..=opts.d_max {
        if opts.windows.max_delay(d) > washout {
            return Err(Error::validation(format!(
                "degree-{d} delay window {} exceeds the washout of {washout} steps",
                opts.windows.max_delay(d)
            )));
        }
    }

    let projector = Projector::new(x)?;
    let threshold = surrogate_threshold(&projector, inputs, washout, opts)?;
    let table = LegendreTable::build(inputs, opts.d_max);

    let mut records: Vec<CapacityRecord> = Vec::new();
    let mut window_warnings: Vec<usize> = Vec::new();

    // Degree 1: base window, then adaptive block extension while the
    // trailing block still carries above-threshold capacity.
    let mut degree1: Vec<CapacityRecord> = Vec::new();
    let eval_delays = |from: usize, to: usize, recs: &mut Vec<CapacityRecord>| -> Result<()> {
        let specs: Vec<TargetSpec> = (from..=to)
            .map(|delay| TargetSpec::single(delay, 1))
            .collect::<Result<_>>()?;
        let caps = capacities_for_specs(&projector, &table, &specs, washout)?;
        for (spec, capacity) in specs.into_iter().zip(caps) {
            recs.push(CapacityRecord {
                spec,
                capacity,
                above_threshold: capacity > threshold,
            });
        }
        Ok(())
    };
    eval_delays(opts.windows.min_delay, base_window, &mut degree1)?;
    if opts.windows.extension_block > 0 {
        let block = opts.windows.extension_block;
        let mut window_end = base_window;
        loop {
            let tail_start = window_end.saturating_sub(block - 1);
            let tail_contributes = degree1
                .iter()
                .any(|r| r.above_threshold && r.spec.max_delay() >= tail_start);
            if !tail_contributes {
                break;
            }
            if window_end >= washout {
                window_warnings.push(1);
                break;
            }
            let new_end = (window_end + block).min(washout);
            eval_delays(window_end + 1, new_end, &mut degree1)?;
            window_end = new_end;
        }
    } else if degree1
        .iter()
        .any(|r| r.above_threshold && r.spec.max_delay() == base_window)
    {
        window_warnings.push(1);
    }
    records.append(&mut degree1);

    // Higher degrees: full enumeration inside the windows; only
    // above-threshold records are retained.
    for d in 2..=opts.d_max {
        let max_delay = opts.windows.max_delay(d);
        let specs = enumerate_degree(d, opts.windows.min_delay, max_delay, opts.windows.max_terms);
        let caps = capacities_for_specs(&projector, &table, &specs, washout)?;
        let mut boundary_hit = false;
        for (spec, capacity) in specs.into_iter().zip(caps) {
            if capacity > threshold {
                boundary_hit |= spec.max_delay() == max_delay;
                records.push(CapacityRecord {
                    spec,
                    capacity,
                    above_threshold: true,
                });
            }
        }
        if boundary_hit {
            window_warnings.push(d);
        }
    }

    let mut per_degree_totals: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &records {
        if r.above_threshold {
            *per_degree_totals.entry(r.spec.total_degree()).or_insert(0.0) += r.capacity;
        }
    }
    let total: f64 = per_degree_totals.values().sum();
    let n_vars = x.n_vars();

    Ok(CapacityReport {
        schema: REPORT_SCHEMA.to_string(),
        config: None,
        input_seed: inputs.generator_seed(),
        rows: x.rows(),
        washout,
        options: opts.clone(),
        n_vars,
        threshold,
        records,
        per_degree_totals,
        total,
        normalized_total: total / n_vars as f64,
        window_warnings,
    })
}

// ---------------------------------------------------------------------------
// Aggregation over realizations
// ---------------------------------------------------------------------------

/// Mean and sample standard deviation of capacity totals over realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub realizations: usize,
    pub n_vars: usize,
    pub per_degree_mean: BTreeMap<usize, f64>,
    pub per_degree_std: BTreeMap<usize, f64>,
    pub total_mean: f64,
    pub total_std: f64,
    pub normalized_mean: f64,
    pub normalized_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Aggregates per-degree totals from realizations that share everything
/// except their seeds.
pub fn aggregate_realizations(reports: &[CapacityReport]) -> Result<RealizationSummary> {
    if reports.is_empty() {
        return Err(Error::validation("cannot aggregate zero realizations"));
    }
    let n_vars = reports[0].n_vars;
    if reports.iter().any(|r| r.n_vars != n_vars) {
        return Err(Error::validation(
            "realizations disagree on the number of variables; they do not share a config",
        ));
    }
    // Config echoes, where present, must agree up to the seeds.
    let mut reference = None;
    for r in reports.iter().filter(|r| r.config.is_some()) {
        let mut c = r.config.clone().unwrap();
        c.coupling_seed = 0;
        match &reference {
            None => reference = Some(c),
            Some(first) if *first != c => {
                return Err(Error::validation(
                    "realizations carry different configurations; they cannot be aggregated",
                ))
            }
            Some(_) => {}
        }
    }
    let mut degrees: Vec<usize> = reports
        .iter()
        .flat_map(|r| r.per_degree_totals.keys().copied())
        .collect();
    degrees.sort_unstable();
    degrees.dedup();

    let mut per_degree_mean = BTreeMap::new();
    let mut per_degree_std = BTreeMap::new();
    for &d in &degrees {
        let values: Vec<f64> = reports.iter().map(|r| r.degree_total(d)).collect();
        let (m, s) = mean_std(&values);
        per_degree_mean.insert(d, m);
        per_degree_std.insert(d, s);
    }
    let totals: Vec<f64> = reports.iter().map(|r| r.total).collect();
    let normalized: Vec<f64> = reports.iter().map(|r| r.normalized_total).collect();
    let (total_mean, total_std) = mean_std(&totals);
    let (normalized_mean, normalized_std) = mean_std(&normalized);

    Ok(RealizationSummary {
        realizations: reports.len(),
        n_vars,
        per_degree_mean,
        per_degree_std,
        total_mean,
        total_std,
        normalized_mean,
        normalized_std,
    })
}
