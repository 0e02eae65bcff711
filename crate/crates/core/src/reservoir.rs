//! Driven spin-network reservoir.
//!
//! A register of `N` qubits evolves under a transverse-field Ising
//! Hamiltonian with random couplings. Every time step the state of qubit 1
//! is replaced by a pure state encoding the scalar input (a CPTP map built
//! from a partial trace and a tensor product), then the whole network
//! evolves unitarily for the inter-input interval. Observables harvested
//! after each input — optionally at several intermediate times ("virtual
//! nodes") — become the columns of a regression design matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    expectation_compiled, frobenius_distance, hermitian_eig, kron, partial_trace_first,
    CMatrix, CVector, CompiledPauli, DensityMatrix, Pauli, PauliString, Propagator, MAX_QUBITS,
};
use crate::rng::{derive_seed, rng_from_seed, stream};

// ---------------------------------------------------------------------------
// Observable sets
// ---------------------------------------------------------------------------

/// Measurement axis of a single-spin projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    fn from_char(c: char) -> Result<Self> {
        match c {
            'x' => Ok(Axis::X),
            'y' => Ok(Axis::Y),
            'z' => Ok(Axis::Z),
            other => Err(Error::validation(format!(
                "unknown observable axis '{other}' (expected x, y or z)"
            ))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        };
        write!(f, "{c}")
    }
}

/// Which observables are harvested: single-spin projections applied to every
/// qubit, and/or two-spin correlations applied to every ordered qubit pair.
///
/// The text form is `+`-separated tokens: one letter for a projection axis,
/// two letters for an ordered correlation pair. `"z"` reads every
/// `<sigma^z_i>`; `"xy+z"` reads every `<sigma^x_i sigma^y_j>` (i != j) plus
/// every `<sigma^z_i>`. Tokens are stored in canonical (sorted) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservableSet {
    singles: Vec<Axis>,
    pairs: Vec<(Axis, Axis)>,
}

impl ObservableSet {
    pub fn new(mut singles: Vec<Axis>, mut pairs: Vec<(Axis, Axis)>) -> Result<Self> {
        singles.sort();
        pairs.sort();
        let dup_single = singles.windows(2).any(|w| w[0] == w[1]);
        let dup_pair = pairs.windows(2).any(|w| w[0] == w[1]);
        if dup_single || dup_pair {
            return Err(Error::validation("observable set lists a token twice"));
        }
        if singles.is_empty() && pairs.is_empty() {
            return Err(Error::validation("observable set is empty"));
        }
        Ok(ObservableSet { singles, pairs })
    }

    /// Single-spin z projections on every qubit; the default readout.
    pub fn z_projections() -> Self {
        ObservableSet {
            singles: vec![Axis::Z],
            pairs: Vec::new(),
        }
    }

    /// Parses the `singles(+pairs)*` grammar, e.g. `"z"`, `"x+y"`, `"xy+z"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut singles = Vec::new();
        let mut pairs = Vec::new();
        for token in text.split('+') {
            let token = token.trim();
            let chars: Vec<char> = token.chars().collect();
            match chars.len() {
                1 => singles.push(Axis::from_char(chars[0])?),
                2 => pairs.push((Axis::from_char(chars[0])?, Axis::from_char(chars[1])?)),
                _ => {
                    return Err(Error::validation(format!(
                        "observable token '{token}' must be one axis (projection) or two (correlation)"
                    )))
                }
            }
        }
        ObservableSet::new(singles, pairs)
    }

    pub fn singles(&self) -> &[Axis] {
        &self.singles
    }

    pub fn pairs(&self) -> &[(Axis, Axis)] {
        &self.pairs
    }

    /// Observables per time snapshot: `N |singles| + N(N-1) |pairs|`.
    pub fn n_observables(&self, n_qubits: usize) -> usize {
        n_qubits * self.singles.len() + n_qubits * (n_qubits - 1) * self.pairs.len()
    }

    /// Concrete Pauli strings (with label stems) for an `N`-qubit register.
    pub fn build(&self, n_qubits: usize) -> Result<Vec<(String, PauliString)>> {
        let mut out = Vec::with_capacity(self.n_observables(n_qubits));
        for &axis in &self.singles {
            for q in 1..=n_qubits {
                out.push((
                    format!("{axis}_{q}"),
                    PauliString::single(n_qubits, q, axis.pauli())?,
                ));
            }
        }
        for &(a, b) in &self.pairs {
            for i in 1..=n_qubits {
                for j in 1..=n_qubits {
                    if i == j {
                        continue;
                    }
                    out.push((
                        format!("{a}{b}_{i}_{j}"),
                        PauliString::pair(n_qubits, i, a.pauli(), j, b.pauli())?,
                    ));
                }
            }
        }
        Ok(out)
    }
}

impl std::fmt::Display for ObservableSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut tokens: Vec<String> = self.singles.iter().map(|a| a.to_string()).collect();
        tokens.extend(self.pairs.iter().map(|(a, b)| format!("{a}{b}")));
        write!(f, "{}", tokens.join("+"))
    }
}

impl Serialize for ObservableSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ObservableSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        ObservableSet::parse(&text).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Configuration, couplings, inputs
// ---------------------------------------------------------------------------

/// Physical and run parameters of one reservoir realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    /// Number of spins `N` (1..=12).
    pub n_qubits: usize,
    /// Transverse field `h`, the natural frequency of the spins.
    pub field_h: f64,
    /// Coupling scale `Js`: couplings are uniform on `[-Js/2, Js/2]`.
    pub coupling_scale: f64,
    /// Time between inputs (in units of `1/h` for `h = 1`).
    pub dt: f64,
    /// Number of time-multiplexed snapshots per input (`V >= 1`).
    pub virtual_nodes: usize,
    /// Seed of the coupling draw.
    pub coupling_seed: u64,
    /// Observables harvested at each snapshot.
    pub observables: ObservableSet,
}

impl ReservoirConfig {
    /// The operating point used throughout the capacity experiments:
    /// `N = 5`, `h = 1`, `Js = 1`, `dt = 10`, `V = 1`, z projections.
    pub fn benchmark(coupling_seed: u64) -> Self {
        ReservoirConfig {
            n_qubits: 5,
            field_h: 1.0,
            coupling_scale: 1.0,
            dt: 10.0,
            virtual_nodes: 1,
            coupling_seed,
            observables: ObservableSet::z_projections(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::validation("n_qubits must be at least 1"));
        }
        if self.n_qubits > MAX_QUBITS {
            return Err(Error::capacity(format!(
                "n_qubits = {} exceeds the supported maximum of {MAX_QUBITS}",
                self.n_qubits
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation(format!("dt must be positive, got {}", self.dt)));
        }
        if self.virtual_nodes == 0 {
            return Err(Error::validation("virtual_nodes must be at least 1"));
        }
        if !(self.coupling_scale.is_finite() && self.coupling_scale >= 0.0) {
            return Err(Error::validation(format!(
                "coupling_scale must be non-negative, got {}",
                self.coupling_scale
            )));
        }
        if !self.field_h.is_finite() {
            return Err(Error::validation("field_h must be finite"));
        }
        if self.observables.n_observables(self.n_qubits) == 0 {
            return Err(Error::validation(format!(
                "observable set '{}' yields no variables for {} qubit(s)",
                self.observables, self.n_qubits
            )));
        }
        Ok(())
    }

    /// Observable variables per design-matrix row (`V` snapshots).
    pub fn n_vars(&self) -> usize {
        self.observables.n_observables(self.n_qubits) * self.virtual_nodes
    }
}

/// One realization of the random couplings `J_ij`, `i > j` (1-based),
/// stored in draw order `(2,1), (3,1), (3,2), (4,1), ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    n_qubits: usize,
    entries: Vec<f64>,
}

impl CouplingMatrix {
    /// Draws all `N(N-1)/2` couplings uniformly from `[-scale/2, scale/2]`,
    /// deterministically in `seed`.
    pub fn draw(n_qubits: usize, scale: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(derive_seed(seed, &[stream::COUPLINGS]));
        let mut entries = Vec::with_capacity(n_qubits * (n_qubits - 1) / 2);
        for _i in 1..n_qubits {
            for _j in 0.._i {
                let u: f64 = rand::Rng::gen(&mut rng);
                entries.push((u - 0.5) * scale);
            }
        }
        CouplingMatrix { n_qubits, entries }
    }

    /// Rebuilds a realization from known entries (draw order).
    pub fn from_entries(n_qubits: usize, entries: Vec<f64>) -> Result<Self> {
        let expected = n_qubits * (n_qubits.saturating_sub(1)) / 2;
        if entries.len() != expected {
            return Err(Error::validation(format!(
                "coupling list for {n_qubits} qubits needs {expected} entries, got {}",
                entries.len()
            )));
        }
        Ok(CouplingMatrix { n_qubits, entries })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `J_ij` for an unordered pair of distinct 1-based qubit indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i != j && i >= 1 && j >= 1 && i <= self.n_qubits && j <= self.n_qubits);
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        // Entries for row hi start after (hi-1)(hi-2)/2 earlier entries.
        let base = (hi - 1) * (hi - 2) / 2;
        self.entries[base + lo - 1]
    }

    /// Iterates `(i, j, J_ij)` with `i > j` in draw order.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_qubits;
        (2..=n)
            .flat_map(move |i| (1..i).map(move |j| (i, j)))
            .zip(self.entries.iter())
            .map(|((i, j), &v)| (i, j, v))
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Scalar input sequence, values in `[0, 1]`; the scaled form
/// `2 s - 1` in `[-1, 1]` is what target polynomials act on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSequence {
    values: Vec<f64>,
    generator_seed: u64,
}

impl InputSequence {
    /// Draws `len` i.i.d. uniform values on `[0, 1)`, deterministic in `seed`.
    pub fn uniform(len: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(derive_seed(seed, &[stream::INPUTS]));
        let values = (0..len).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
        InputSequence {
            values,
            generator_seed: seed,
        }
    }

    pub fn from_values(values: Vec<f64>, generator_seed: u64) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::validation(format!(
                "input value {bad} outside [0, 1]"
            )));
        }
        Ok(InputSequence {
            values,
            generator_seed,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// `2 s_k - 1`, uniform on `[-1, 1]` when `s_k` is uniform on `[0, 1]`.
    pub fn scaled(&self, k: usize) -> f64 {
        2.0 * self.values[k] - 1.0
    }

    pub fn generator_seed(&self) -> u64 {
        self.generator_seed
    }
}

// ---------------------------------------------------------------------------
// Hamiltonian and the injection-and-evolve map
// ---------------------------------------------------------------------------

/// Transverse-field Ising Hamiltonian for a known coupling realization:
/// pairwise `J_ij X_i X_j` plus `h Z_i` on every spin.
pub fn hamiltonian_from_couplings(
    n_qubits: usize,
    field_h: f64,
    couplings: &CouplingMatrix,
) -> Result<CMatrix> {
    if couplings.n_qubits() != n_qubits {
        return Err(Error::dimension(
            "hamiltonian_from_couplings",
            format!(
                "couplings drawn for {} qubits, requested {n_qubits}",
                couplings.n_qubits()
            ),
        ));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::capacity(format!(
            "{n_qubits} qubits exceeds the supported maximum of {MAX_QUBITS}"
        )));
    }
    let dim = 1usize << n_qubits;
    let mut h = CMatrix::zeros(dim, dim);
    for (i, j, j_ij) in couplings.iter_pairs() {
        PauliString::pair(n_qubits, i, Pauli::X, j, Pauli::X)?
            .compile()
            .accumulate(j_ij, &mut h);
    }
    for q in 1..=n_qubits {
        PauliString::single(n_qubits, q, Pauli::Z)?
            .compile()
            .accumulate(field_h, &mut h);
    }
    Ok(h)
}

/// Draws the couplings for `config` and assembles the Hamiltonian.
pub fn build_hamiltonian(config: &ReservoirConfig) -> Result<(CMatrix, CouplingMatrix)> {
    config.validate()?;
    let couplings = CouplingMatrix::draw(
        config.n_qubits,
        config.coupling_scale,
        config.coupling_seed,
    );
    let h = hamiltonian_from_couplings(config.n_qubits, config.field_h, &couplings)?;
    Ok((h, couplings))
}

/// Input-encoding pure state `sqrt(1-s)|0> + sqrt(s)|1>` of qubit 1.
pub fn input_state(s: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::validation(format!(
            "input value {s} outside [0, 1]"
        )));
    }
    let amps = CVector::from_vec(vec![
        Complex64::new((1.0 - s).sqrt(), 0.0),
        Complex64::new(s.sqrt(), 0.0),
    ]);
    DensityMatrix::pure(1, &amps)
}

/// CPTP injection: replaces qubit 1 by the input state, keeping the marginal
/// of the remaining qubits. For a single qubit the state is replaced whole.
pub fn inject(rho: &DensityMatrix, s: f64) -> Result<DensityMatrix> {
    let fresh = input_state(s)?;
    if rho.n_qubits() == 1 {
        return Ok(fresh);
    }
    let rest = partial_trace_first(rho)?;
    // Renormalizing the marginal here stops round-off trace drift from
    // accumulating over 1e5-step trajectories.
    let trace = rest.trace().re;
    if !(trace.is_finite() && trace > 0.0) {
        return Err(Error::numerical(format!(
            "state trace degenerated to {trace} during injection"
        )));
    }
    let scaled = rest.matrix() / Complex64::new(trace, 0.0);
    let joint = kron(fresh.matrix(), &scaled)?;
    DensityMatrix::new_unvalidated(rho.n_qubits(), joint)
}

/// One reservoir step: inject the input, then evolve with the propagator.
pub fn step(rho: &DensityMatrix, s: f64, u: &Propagator) -> Result<DensityMatrix> {
    u.evolve(&inject(rho, s)?)
}

#[inline]
fn debug_validate(rho: &DensityMatrix, step_index: usize) {
    if cfg!(debug_assertions) {
        rho.validate_fast()
            .unwrap_or_else(|e| panic!("state invariant broken at step {step_index}: {e}"));
        // The PSD check needs an eigendecomposition; sample it.
        if step_index.is_multiple_of(1024) {
            rho.validate()
                .unwrap_or_else(|e| panic!("state invariant broken at step {step_index}: {e}"));
        }
    }
}

// ---------------------------------------------------------------------------
// Design matrix
// ---------------------------------------------------------------------------

/// Harvested observables: one row per evaluated input, one column per
/// (observable, virtual node) plus a trailing bias column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: DMatrix<f64>,
    labels: Vec<String>,
    n_vars: usize,
}

impl DesignMatrix {
    /// Wraps externally built regression data. The last column must be the
    /// bias (identically one) and `labels` must name every column.
    pub fn new(data: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if data.ncols() < 2 {
            return Err(Error::validation(
                "a design matrix needs at least one observable column plus the bias",
            ));
        }
        if labels.len() != data.ncols() {
            return Err(Error::validation(format!(
                "{} labels for {} columns",
                labels.len(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("design matrix contains NaN or Inf"));
        }
        let bias = data.ncols() - 1;
        if (0..data.nrows()).any(|r| data[(r, bias)] != 1.0) {
            return Err(Error::validation("the trailing bias column must be identically 1"));
        }
        let n_vars = bias;
        Ok(DesignMatrix {
            data,
            labels,
            n_vars,
        })
    }

    pub(crate) fn from_parts(data: DMatrix<f64>, labels: Vec<String>, n_vars: usize) -> Self {
        debug_assert_eq!(data.ncols(), n_vars + 1);
        debug_assert_eq!(labels.len(), n_vars + 1);
        DesignMatrix {
            data,
            labels,
            n_vars,
        }
    }

    /// Rows (evaluated inputs).
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    /// Observable columns, bias excluded.
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// All columns including the bias.
    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Column labels; the last one is `bias`.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Writes the matrix as CSV (header row, LF endings, shortest
    /// round-trip float formatting).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.labels.join(","))?;
        let mut line = String::new();
        for r in 0..self.data.nrows() {
            line.clear();
            for c in 0..self.data.ncols() {
                if c > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{}", self.data[(r, c)]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Running a trajectory
// ---------------------------------------------------------------------------

struct CompiledRun {
    propagators: Vec<Propagator>, // index v-1 holds exp(-iH v dt/V)
    observables: Vec<CompiledPauli>,
    labels: Vec<String>,
}

fn compile_run(config: &ReservoirConfig, h: &CMatrix) -> Result<CompiledRun> {
    let v_count = config.virtual_nodes;
    let (evals, evecs) = hermitian_eig(h)?;
    let mut propagators = Vec::with_capacity(v_count);
    for v in 1..=v_count {
        let tau = config.dt * v as f64 / v_count as f64;
        propagators.push(Propagator::from_spectrum(&evals, &evecs, tau)?);
    }
    let built = config.observables.build(config.n_qubits)?;
    let mut observables = Vec::with_capacity(built.len());
    let mut labels = Vec::with_capacity(built.len() * v_count + 1);
    for v in 1..=v_count {
        for (stem, _) in &built {
            labels.push(format!("{stem}_v{v}"));
        }
    }
    labels.push("bias".to_string());
    for (_, pauli) in &built {
        observables.push(pauli.compile());
    }
    Ok(CompiledRun {
        propagators,
        observables,
        labels,
    })
}

/// Drives the reservoir from the maximally mixed state and harvests the
/// design matrix. The first `washout` inputs only advance the state.
pub fn run(config: &ReservoirConfig, inputs: &InputSequence, washout: usize) -> Result<DesignMatrix> {
    let initial = DensityMatrix::maximally_mixed(config.n_qubits)?;
    run_with_initial(config, inputs, washout, &initial)
}

/// [`run`] from an explicit initial state (used by echo-state checks).
///
/// Per input `k`: the state is injected with `s_k`; for each `v = 1..=V` the
/// post-injection state is evolved for `v dt / V` and every observable is
/// recorded; the `v = V` snapshot (a full `dt` of evolution) is carried to
/// the next input.
pub fn run_with_initial(
    config: &ReservoirConfig,
    inputs: &InputSequence,
    washout: usize,
    initial: &DensityMatrix,
) -> Result<DesignMatrix> {
    config.validate()?;
    if initial.n_qubits() != config.n_qubits {
        return Err(Error::dimension(
            "run_with_initial",
            format!(
                "initial state has {} qubits, config {}",
                initial.n_qubits(),
                config.n_qubits
            ),
        ));
    }
    if inputs.len() < washout + 1 {
        return Err(Error::validation(format!(
            "input sequence of length {} cannot cover washout {} plus evaluation",
            inputs.len(),
            washout
        )));
    }

    let (h, _couplings) = build_hamiltonian(config)?;
    let compiled = compile_run(config, &h)?;
    let v_count = config.virtual_nodes;
    let n_obs = compiled.observables.len();
    let n_vars = n_obs * v_count;
    let rows = inputs.len() - washout;

    let mut data = DMatrix::<f64>::zeros(rows, n_vars + 1);
    data.column_mut(n_vars).fill(1.0);

    let full_step = &compiled.propagators[v_count - 1];
    let mut state = initial.clone();
    let mut row_values = vec![0.0f64; n_vars];

    for k in 0..inputs.len() {
        let s = inputs.get(k);
        if k < washout {
            state = step(&state, s, full_step)?;
            debug_validate(&state, k);
            continue;
        }

        let injected = inject(&state, s)?;
        if v_count >= 4 {
            // Virtual-node snapshots are independent given the injected
            // state; fan out and keep the v = V result as the carried state.
            let snapshots: Vec<(Vec<f64>, Option<DensityMatrix>)> = compiled
                .propagators
                .par_iter()
                .enumerate()
                .map(|(idx, u)| -> Result<(Vec<f64>, Option<DensityMatrix>)> {
                    let rho_v = u.evolve(&injected)?;
                    let values: Vec<f64> = compiled
                        .observables
                        .iter()
                        .map(|b| expectation_compiled(rho_v.matrix(), b))
                        .collect();
                    let carry = (idx + 1 == v_count).then_some(rho_v);
                    Ok((values, carry))
                })
                .collect::<Result<_>>()?;
            for (v_idx, (values, carry)) in snapshots.into_iter().enumerate() {
                row_values[v_idx * n_obs..(v_idx + 1) * n_obs].copy_from_slice(&values);
                if let Some(rho) = carry {
                    state = rho;
                }
            }
        } else {
            for (v_idx, u) in compiled.propagators.iter().enumerate() {
                let rho_v = u.evolve(&injected)?;
                for (o_idx, b) in compiled.observables.iter().enumerate() {
                    row_values[v_idx * n_obs + o_idx] = expectation_compiled(rho_v.matrix(), b);
                }
                if v_idx + 1 == v_count {
                    state = rho_v;
                }
            }
        }
        debug_validate(&state, k);

        let row = k - washout;
        for (col, &value) in row_values.iter().enumerate() {
            data[(row, col)] = value;
        }
    }

    Ok(DesignMatrix::from_parts(data, compiled.labels, n_vars))
}

/// Evolves two initial states under the same inputs and records the
/// Frobenius distance after each input, as `(physical time, distance)`
/// pairs; the input count at entry `i` is `i + 1`.
pub fn convergence_trace(
    config: &ReservoirConfig,
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    inputs: &InputSequence,
) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    if rho_a.n_qubits() != config.n_qubits || rho_b.n_qubits() != config.n_qubits {
        return Err(Error::dimension(
            "convergence_trace",
            format!(
                "initial states have {} and {} qubits, config {}",
                rho_a.n_qubits(),
                rho_b.n_qubits(),
                config.n_qubits
            ),
        ));
    }
    let (h, _) = build_hamiltonian(config)?;
    let u = Propagator::new(&h, config.dt)?;
    let mut a = rho_a.clone();
    let mut b = rho_b.clone();
    let mut trace = Vec::with_capacity(inputs.len());
    for k in 0..inputs.len() {
        let s = inputs.get(k);
        a = step(&a, s, &u)?;
        b = step(&b, s, &u)?;
        trace.push((
            (k + 1) as f64 * config.dt,
            frobenius_distance(a.matrix(), b.matrix())?,
        ));
    }
    Ok(trace)
}
