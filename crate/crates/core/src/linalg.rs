//! Dense complex linear algebra kernel for few-qubit density-matrix
//! simulation: Kronecker products, Hermitian eigendecomposition, spectral
//! matrix exponentials, partial trace, Pauli-string expectation values and
//! the Frobenius distance.
//!
//! Conventions used throughout the crate:
//!
//! * Qubit 1 is the **leftmost** (most significant) tensor factor. A basis
//!   index `b` of an `N`-qubit register reads `b = b_1 b_2 ... b_N` in
//!   binary with `b_1` the most significant bit.
//! * Matrix exponentials of Hermitian operators go through one spectral
//!   decomposition; the propagator for a different time interval reuses it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used for states, operators and propagators.
pub type CMatrix = DMatrix<Complex64>;

/// Dense complex vector (pure states).
pub type CVector = DVector<Complex64>;

/// Largest supported register; dense 2^N kernels become impractical beyond it.
pub const MAX_QUBITS: usize = 12;

/// Largest matrix dimension the dense kernel accepts (`2^MAX_QUBITS`).
pub const MAX_DIM: usize = 1 << MAX_QUBITS;

/// Tolerance on Hermiticity defects, `max|A - A†|`.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Tolerance on the unit-trace defect of a density matrix.
pub const TRACE_TOL: f64 = 1e-10;

/// Density-matrix eigenvalues may round off slightly below zero.
pub const PSD_TOL: f64 = -1e-9;

/// Tolerance on the unitarity defect of a propagator, `max|UU† - I|`.
pub const UNITARITY_TOL: f64 = 1e-9;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// Pauli operators
// ---------------------------------------------------------------------------

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// The 2x2 matrix of this factor.
    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
            Pauli::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I_UNIT, I_UNIT, ZERO]),
            Pauli::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    /// Action on a basis bit: `P|b> = coeff |flip(b)>`.
    #[inline]
    fn action(self, bit: u8) -> (u8, Complex64) {
        match self {
            Pauli::I => (bit, ONE),
            Pauli::X => (1 - bit, ONE),
            Pauli::Y => (1 - bit, if bit == 0 { I_UNIT } else { -I_UNIT }),
            Pauli::Z => (bit, if bit == 0 { ONE } else { -ONE }),
        }
    }
}

impl std::fmt::Display for Pauli {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'x',
            Pauli::Y => 'y',
            Pauli::Z => 'z',
        };
        write!(f, "{c}")
    }
}

/// Tensor product of `N` single-qubit Pauli factors, qubit 1 leftmost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    factors: Vec<Pauli>,
}

impl PauliString {
    /// Builds a string from its factors; `factors.len()` is the qubit count.
    pub fn new(factors: Vec<Pauli>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::validation("PauliString requires at least one factor"));
        }
        if factors.len() > MAX_QUBITS {
            return Err(Error::capacity(format!(
                "PauliString of {} qubits exceeds the supported maximum of {MAX_QUBITS}",
                factors.len()
            )));
        }
        Ok(PauliString { factors })
    }

    /// Identity on every qubit except `qubit` (1-based), which carries `p`.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Result<Self> {
        if qubit == 0 || qubit > n_qubits {
            return Err(Error::validation(format!(
                "qubit index {qubit} out of range 1..={n_qubits}"
            )));
        }
        let mut factors = vec![Pauli::I; n_qubits];
        factors[qubit - 1] = p;
        PauliString::new(factors)
    }

    /// Two non-identity factors on distinct qubits (1-based).
    pub fn pair(n_qubits: usize, qa: usize, pa: Pauli, qb: usize, pb: Pauli) -> Result<Self> {
        if qa == qb {
            return Err(Error::validation(format!(
                "pair observable requires distinct qubits, got {qa} and {qb}"
            )));
        }
        let mut s = PauliString::single(n_qubits, qa, pa)?;
        if qb == 0 || qb > n_qubits {
            return Err(Error::validation(format!(
                "qubit index {qb} out of range 1..={n_qubits}"
            )));
        }
        s.factors[qb - 1] = pb;
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    /// Column-sparse form: for each basis column `k`, the single nonzero row
    /// index and its coefficient. Pauli strings have exactly one nonzero per
    /// column, which makes traces against density matrices O(2^N).
    pub fn compile(&self) -> CompiledPauli {
        let n = self.factors.len();
        let dim = 1usize << n;
        let mut rows = Vec::with_capacity(dim);
        let mut coeffs = Vec::with_capacity(dim);
        for col in 0..dim {
            let mut row = 0usize;
            let mut coeff = ONE;
            for (pos, p) in self.factors.iter().enumerate() {
                // Qubit at position `pos` (0-based) owns bit N-1-pos.
                let shift = n - 1 - pos;
                let bit = ((col >> shift) & 1) as u8;
                let (out_bit, c) = p.action(bit);
                row |= (out_bit as usize) << shift;
                coeff *= c;
            }
            rows.push(row);
            coeffs.push(coeff);
        }
        CompiledPauli { rows, coeffs }
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in &self.factors {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Column-sparse representation of a Pauli string (one entry per column).
#[derive(Debug, Clone)]
pub struct CompiledPauli {
    rows: Vec<usize>,
    coeffs: Vec<Complex64>,
}

impl CompiledPauli {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `Tr[B rho]` as a complex number.
    pub fn trace_with(&self, rho: &CMatrix) -> Complex64 {
        debug_assert_eq!(rho.nrows(), self.dim());
        let dim = self.dim();
        let data = rho.as_slice(); // column-major
        let mut acc = ZERO;
        for col in 0..dim {
            // B_{row(col), col} * rho_{col, row(col)}
            let row = self.rows[col];
            acc += self.coeffs[col] * data[row * dim + col];
        }
        acc
    }

    /// Adds `scale * B` into a dense accumulator (used for Hamiltonians).
    pub fn accumulate(&self, scale: f64, target: &mut CMatrix) {
        debug_assert_eq!(target.nrows(), self.dim());
        let dim = self.dim();
        for col in 0..dim {
            target[(self.rows[col], col)] += self.coeffs[col] * scale;
        }
    }
}

/// Dense 2^N x 2^N matrix of a Pauli string in the fixed tensor ordering.
pub fn pauli_matrix(p: &PauliString) -> CMatrix {
    let dim = 1usize << p.n_qubits();
    let mut m = CMatrix::zeros(dim, dim);
    p.compile().accumulate(1.0, &mut m);
    m
}

// ---------------------------------------------------------------------------
// Generic dense helpers
// ---------------------------------------------------------------------------

/// Kronecker product with the left factor as the most significant subsystem.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= MAX_DIM && c <= MAX_DIM => Ok(a.kronecker(b)),
        _ => Err(Error::capacity(format!(
            "kron of {}x{} with {}x{} exceeds the {MAX_DIM}x{MAX_DIM} dense kernel limit",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        ))),
    }
}

/// `max |A_ij - (A†)_ij|`, the Hermiticity defect.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// `max |(UU† - I)_ij|`, the unitarity defect.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let product = u * u.adjoint();
    let mut worst = 0.0f64;
    for i in 0..product.nrows() {
        for j in 0..product.ncols() {
            let expect = if i == j { ONE } else { ZERO };
            let d = (product[(i, j)] - expect).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Frobenius distance `sqrt(Tr[(A-B)†(A-B)])`.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::dimension(
            "frobenius_distance",
            format!(
                "{}x{} vs {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            ),
        ));
    }
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += (x - y).norm_sqr();
    }
    Ok(acc.sqrt())
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, columns
/// of the returned matrix are the matching orthonormal eigenvectors.
pub fn hermitian_eig(h: &CMatrix) -> Result<(DVector<f64>, CMatrix)> {
    if h.nrows() != h.ncols() {
        return Err(Error::dimension(
            "hermitian_eig",
            format!("{}x{} is not square", h.nrows(), h.ncols()),
        ));
    }
    let defect = hermiticity_defect(h);
    if defect > HERMITICITY_TOL {
        return Err(Error::validation(format!(
            "hermitian_eig requires a Hermitian input (defect {defect:.3e} > {HERMITICITY_TOL:.0e})"
        )));
    }
    let norm = h.norm();
    let eig = nalgebra::SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0).ok_or_else(|| {
        Error::numerical(format!(
            "eigendecomposition failed to converge for a {}x{} matrix with Frobenius norm {norm:.6e}",
            h.nrows(),
            h.ncols()
        ))
    })?;

    // Sort ascending, permuting eigenvector columns along.
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

// ---------------------------------------------------------------------------
// Hand-rolled complex GEMM
// ---------------------------------------------------------------------------
//
// nalgebra falls back to a generic scalar loop for complex matrices; the
// propagator sandwich U rho U† runs ~10^6 times per profile, so the multiply
// is written out against the column-major slices directly.

/// `out = a * b` for square complex matrices of equal dimension.
pub(crate) fn cgemm(a: &CMatrix, b: &CMatrix, out: &mut CMatrix) {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    debug_assert_eq!(b.nrows(), n);
    debug_assert_eq!(b.ncols(), n);
    debug_assert_eq!(out.nrows(), n);
    debug_assert_eq!(out.ncols(), n);
    let av = a.as_slice();
    let bv = b.as_slice();
    let ov = out.as_mut_slice();
    ov.fill(ZERO);
    for j in 0..n {
        let out_col = &mut ov[j * n..(j + 1) * n];
        for k in 0..n {
            let s = bv[j * n + k];
            if s == ZERO {
                continue;
            }
            let a_col = &av[k * n..(k + 1) * n];
            for (o, &x) in out_col.iter_mut().zip(a_col.iter()) {
                *o += x * s;
            }
        }
    }
}

/// `a * b` with a fresh allocation.
pub(crate) fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    cgemm(a, b, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Hermitian, positive semidefinite, unit-trace state of an N-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking every state invariant (including
    /// positive semidefiniteness, which costs an eigendecomposition).
    pub fn new(n_qubits: usize, matrix: CMatrix) -> Result<Self> {
        let state = DensityMatrix::new_unvalidated(n_qubits, matrix)?;
        state.validate()?;
        Ok(state)
    }

    /// Shape and finiteness checks only; used on hot paths where the update
    /// rule preserves the remaining invariants (verified separately).
    pub(crate) fn new_unvalidated(n_qubits: usize, matrix: CMatrix) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::validation("a density matrix needs at least one qubit"));
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::capacity(format!(
                "{n_qubits} qubits exceeds the supported maximum of {MAX_QUBITS}"
            )));
        }
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::dimension(
                "DensityMatrix",
                format!(
                    "expected {dim}x{dim} for {n_qubits} qubits, got {}x{}",
                    matrix.nrows(),
                    matrix.ncols()
                ),
            ));
        }
        if matrix.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::validation("density matrix contains NaN or Inf"));
        }
        Ok(DensityMatrix { n_qubits, matrix })
    }

    /// Pure state `|psi><psi|` from an amplitude vector (renormalized).
    pub fn pure(n_qubits: usize, amplitudes: &CVector) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(Error::dimension(
                "DensityMatrix::pure",
                format!("expected {dim} amplitudes, got {}", amplitudes.len()),
            ));
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::validation("amplitude vector must have finite nonzero norm"));
        }
        let psi = amplitudes / Complex64::new(norm, 0.0);
        let matrix = &psi * psi.adjoint();
        DensityMatrix::new_unvalidated(n_qubits, matrix)
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::validation(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        DensityMatrix::pure(n_qubits, &amps)
    }

    /// The maximally mixed state `I / 2^N`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::capacity(format!(
                "{n_qubits} qubits outside supported range 1..={MAX_QUBITS}"
            )));
        }
        let dim = 1usize << n_qubits;
        let matrix = CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        DensityMatrix::new_unvalidated(n_qubits, matrix)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diagonal().sum()
    }

    /// `Tr[rho^2]`; 1 for pure states, 1/2^N for the maximally mixed state.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Checks Hermiticity and unit trace (no eigendecomposition).
    pub fn validate_fast(&self) -> Result<()> {
        let herm = hermiticity_defect(&self.matrix);
        if herm > HERMITICITY_TOL {
            return Err(Error::validation(format!(
                "density matrix Hermiticity defect {herm:.3e} exceeds {HERMITICITY_TOL:.0e}"
            )));
        }
        let trace_defect = (self.trace() - ONE).norm();
        if trace_defect > TRACE_TOL {
            return Err(Error::validation(format!(
                "density matrix trace defect {trace_defect:.3e} exceeds {TRACE_TOL:.0e}"
            )));
        }
        Ok(())
    }

    /// Full invariant check: Hermiticity, unit trace and positive
    /// semidefiniteness within round-off tolerance.
    pub fn validate(&self) -> Result<()> {
        self.validate_fast()?;
        let (values, _) = hermitian_eig(&self.matrix)?;
        let min = values.min();
        if min < PSD_TOL {
            return Err(Error::validation(format!(
                "density matrix has eigenvalue {min:.3e} below the PSD tolerance {PSD_TOL:.0e}"
            )));
        }
        Ok(())
    }
}

/// Marginal on qubits 2..N after discarding qubit 1 (the most significant
/// tensor factor).
pub fn partial_trace_first(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n_qubits() < 2 {
        return Err(Error::domain(
            "partial_trace_first needs at least two qubits".to_string(),
        ));
    }
    let half = rho.dim() / 2;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(half, half);
    for r in 0..half {
        for c in 0..half {
            out[(r, c)] = m[(r, c)] + m[(half + r, half + c)];
        }
    }
    DensityMatrix::new_unvalidated(rho.n_qubits() - 1, out)
}

/// `Tr[B rho]` for a Pauli-string observable; the value is real up to
/// round-off, whose imaginary residue is asserted and discarded.
pub fn expectation(rho: &DensityMatrix, p: &PauliString) -> Result<f64> {
    if rho.n_qubits() != p.n_qubits() {
        return Err(Error::dimension(
            "expectation",
            format!("state has {} qubits, observable {}", rho.n_qubits(), p.n_qubits()),
        ));
    }
    Ok(expectation_compiled(rho.matrix(), &p.compile()))
}

/// Expectation against a pre-compiled observable (hot path).
pub(crate) fn expectation_compiled(rho: &CMatrix, b: &CompiledPauli) -> f64 {
    let t = b.trace_with(rho);
    debug_assert!(
        t.im.abs() <= 1e-9,
        "imaginary residue {:.3e} in a Pauli expectation",
        t.im
    );
    t.re
}

// ---------------------------------------------------------------------------
// Propagators
// ---------------------------------------------------------------------------

/// Unitary `exp(-iH tau)` together with the interval it propagates.
#[derive(Debug, Clone)]
pub struct Propagator {
    matrix: CMatrix,
    adjoint: CMatrix,
    interval: f64,
}

impl Propagator {
    /// Builds `exp(-iH tau)` through the spectral decomposition of `H`.
    pub fn new(h: &CMatrix, tau: f64) -> Result<Self> {
        let (values, vectors) = hermitian_eig(h)?;
        Propagator::from_spectrum(&values, &vectors, tau)
    }

    /// Builds the propagator from a precomputed spectral decomposition,
    /// `U = V diag(exp(-i lambda tau)) V†`.
    pub fn from_spectrum(values: &DVector<f64>, vectors: &CMatrix, tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::validation(format!("propagator interval {tau} is not finite")));
        }
        let n = vectors.nrows();
        let mut scaled = vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            let phase = Complex64::from_polar(1.0, -values[k] * tau);
            for entry in col.iter_mut() {
                *entry *= phase;
            }
        }
        let matrix = cmul(&scaled, &vectors.adjoint());
        let defect = unitarity_defect(&matrix);
        if defect > UNITARITY_TOL {
            return Err(Error::numerical(format!(
                "propagator of dimension {n} has unitarity defect {defect:.3e} (> {UNITARITY_TOL:.0e})"
            )));
        }
        let adjoint = matrix.adjoint();
        Ok(Propagator {
            matrix,
            adjoint,
            interval: tau,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `U rho U†`.
    pub fn evolve(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::dimension(
                "Propagator::evolve",
                format!("state dim {} vs propagator dim {}", rho.dim(), self.dim()),
            ));
        }
        let n = self.dim();
        let mut tmp = CMatrix::zeros(n, n);
        let mut out = CMatrix::zeros(n, n);
        cgemm(&self.matrix, rho.matrix(), &mut tmp);
        cgemm(&tmp, &self.adjoint, &mut out);
        DensityMatrix::new_unvalidated(rho.n_qubits(), out)
    }
}

/// Spectral-route matrix exponential `exp(-iH tau)` (one-shot variant).
pub fn propagator(h: &CMatrix, tau: f64) -> Result<Propagator> {
    Propagator::new(h, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{max_abs_diff, random_density, random_hermitian};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identities() {
        let i2 = Pauli::I.matrix();
        let i4 = kron(&i2, &i2).unwrap();
        assert_eq!(i4, CMatrix::identity(4, 4));
    }

    #[test]
    fn kron_z_with_identity_is_diag() {
        let m = kron(&Pauli::Z.matrix(), &Pauli::I.matrix()).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(-1.0, 0.0),
        ]));
        assert_eq!(m, expected);
    }

    #[test]
    fn kron_xx_flips_both_qubits() {
        let xx = kron(&Pauli::X.matrix(), &Pauli::X.matrix()).unwrap();
        let mut ket00 = CVector::zeros(4);
        ket00[0] = ONE;
        let result = &xx * &ket00;
        let mut ket11 = CVector::zeros(4);
        ket11[3] = ONE;
        assert_eq!(result, ket11);
    }

    #[test]
    fn kron_respects_dimension_cap() {
        let big = CMatrix::zeros(MAX_DIM, MAX_DIM);
        let i2 = Pauli::I.matrix();
        assert!(matches!(kron(&big, &i2), Err(Error::Capacity(_))));
    }

    #[test]
    fn eig_sigma_z() {
        let (vals, _) = hermitian_eig(&Pauli::Z.matrix()).unwrap();
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_sigma_x_vectors_up_to_phase() {
        let (vals, vecs) = hermitian_eig(&Pauli::X.matrix()).unwrap();
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        // Eigenvectors are (1, -1)/sqrt(2) and (1, 1)/sqrt(2) up to phase:
        // check |<v|expected>| = 1.
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let minus = CVector::from_vec(vec![c(inv_sqrt2, 0.0), c(-inv_sqrt2, 0.0)]);
        let plus = CVector::from_vec(vec![c(inv_sqrt2, 0.0), c(inv_sqrt2, 0.0)]);
        let overlap_minus = (minus.adjoint() * vecs.column(0))[(0, 0)].norm();
        let overlap_plus = (plus.adjoint() * vecs.column(1))[(0, 0)].norm();
        assert_abs_diff_eq!(overlap_minus, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(overlap_plus, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let h = random_hermitian(8, 7919);
        let (vals, vecs) = hermitian_eig(&h).unwrap();
        for k in 1..8 {
            assert!(vals[k] >= vals[k - 1]);
        }
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(
            8,
            vals.iter().map(|&v| c(v, 0.0)),
        ));
        let rebuilt = &vecs * diag * vecs.adjoint();
        assert!(max_abs_diff(&rebuilt, &h) <= 1e-9);
        assert!(unitarity_defect(&vecs) <= 1e-9);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = Pauli::Z.matrix();
        m[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(hermitian_eig(&m), Err(Error::Validation(_))));
    }

    #[test]
    fn propagator_of_sigma_z_is_diagonal_phases() {
        let t = 0.7;
        let u = propagator(&Pauli::Z.matrix(), t).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::from_polar(1.0, -t),
            Complex64::from_polar(1.0, t),
        ]));
        assert!(max_abs_diff(u.matrix(), &expected) <= 1e-12);
    }

    #[test]
    fn propagator_zero_time_is_identity() {
        let h = random_hermitian(8, 42);
        let u = propagator(&h, 0.0).unwrap();
        assert!(max_abs_diff(u.matrix(), &CMatrix::identity(8, 8)) <= 1e-12);
    }

    #[test]
    fn propagator_composes_with_inverse() {
        let h = random_hermitian(8, 7);
        let tau = 3.21;
        let forward = propagator(&h, tau).unwrap();
        let backward = propagator(&h, -tau).unwrap();
        let composed = cmul(forward.matrix(), backward.matrix());
        assert!(max_abs_diff(&composed, &CMatrix::identity(8, 8)) <= 1e-9);
    }

    #[test]
    fn cgemm_matches_nalgebra() {
        let a = random_hermitian(16, 1);
        let b = random_hermitian(16, 2);
        let reference = &a * &b;
        let ours = cmul(&a, &b);
        assert!(max_abs_diff(&reference, &ours) <= 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state_returns_second_factor() {
        let rho1 = DensityMatrix::pure(1, &CVector::from_vec(vec![c(0.6, 0.0), c(0.8, 0.0)]))
            .unwrap();
        let sigma = DensityMatrix::pure(
            2,
            &CVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]),
        )
        .unwrap();
        let joint = DensityMatrix::new_unvalidated(
            3,
            kron(rho1.matrix(), sigma.matrix()).unwrap(),
        )
        .unwrap();
        let reduced = partial_trace_first(&joint).unwrap();
        assert!(max_abs_diff(reduced.matrix(), sigma.matrix()) <= 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(
            2,
            &CVector::from_vec(vec![c(inv_sqrt2, 0.0), ZERO, ZERO, c(inv_sqrt2, 0.0)]),
        )
        .unwrap();
        let reduced = partial_trace_first(&bell).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(max_abs_diff(reduced.matrix(), mixed.matrix()) <= 1e-12);
        assert_abs_diff_eq!(reduced.trace().re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn partial_trace_rejects_single_qubit() {
        let rho = DensityMatrix::basis_state(1, 0).unwrap();
        assert!(matches!(partial_trace_first(&rho), Err(Error::Domain(_))));
    }

    #[test]
    fn pauli_matrix_zi() {
        let p = PauliString::new(vec![Pauli::Z, Pauli::I]).unwrap();
        let expected = kron(&Pauli::Z.matrix(), &Pauli::I.matrix()).unwrap();
        assert_eq!(pauli_matrix(&p), expected);
    }

    #[test]
    fn pauli_matrix_identity_string() {
        let p = PauliString::new(vec![Pauli::I, Pauli::I]).unwrap();
        assert_eq!(pauli_matrix(&p), CMatrix::identity(4, 4));
    }

    #[test]
    fn pauli_strings_are_involutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let options = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        for _ in 0..24 {
            let n = rng.gen_range(1..=4);
            let factors: Vec<Pauli> = (0..n).map(|_| options[rng.gen_range(0..4)]).collect();
            let p = PauliString::new(factors).unwrap();
            let m = pauli_matrix(&p);
            let square = cmul(&m, &m);
            let dim = 1usize << n;
            assert!(max_abs_diff(&square, &CMatrix::identity(dim, dim)) <= 1e-12);
            assert!(hermiticity_defect(&m) <= 1e-12);
        }
    }

    #[test]
    fn expectation_of_z_on_ground_state() {
        let rho = DensityMatrix::basis_state(1, 0).unwrap();
        let p = PauliString::new(vec![Pauli::Z]).unwrap();
        assert_abs_diff_eq!(expectation(&rho, &p).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_on_amplitude_encoded_state() {
        // |psi> = sqrt(1-s)|0> + sqrt(s)|1>: <Z> = 1-2s, <X> = 2 sqrt(s(1-s)).
        for &s in &[0.0f64, 0.25, 0.5, 0.9, 1.0] {
            let amps = CVector::from_vec(vec![c((1.0 - s).sqrt(), 0.0), c(s.sqrt(), 0.0)]);
            let rho = DensityMatrix::pure(1, &amps).unwrap();
            let z = PauliString::new(vec![Pauli::Z]).unwrap();
            let x = PauliString::new(vec![Pauli::X]).unwrap();
            assert_abs_diff_eq!(expectation(&rho, &z).unwrap(), 1.0 - 2.0 * s, epsilon = 1e-12);
            assert_abs_diff_eq!(
                expectation(&rho, &x).unwrap(),
                2.0 * (s * (1.0 - s)).sqrt(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn expectation_rejects_mismatched_sizes() {
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        let p = PauliString::new(vec![Pauli::Z]).unwrap();
        assert!(matches!(expectation(&rho, &p), Err(Error::Dimension { .. })));
    }

    #[test]
    fn expectation_is_linear_in_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let a = random_density(2, &mut rng);
            let b = random_density(2, &mut rng);
            let alpha: f64 = rng.gen();
            let mixed = DensityMatrix::new_unvalidated(
                2,
                a.matrix() * c(alpha, 0.0) + b.matrix() * c(1.0 - alpha, 0.0),
            )
            .unwrap();
            let p = PauliString::pair(2, 1, Pauli::X, 2, Pauli::Y).unwrap();
            let lhs = expectation(&mixed, &p).unwrap();
            let rhs = alpha * expectation(&a, &p).unwrap()
                + (1.0 - alpha) * expectation(&b, &p).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn frobenius_distance_examples() {
        let z = Pauli::Z.matrix();
        let x = Pauli::X.matrix();
        assert_abs_diff_eq!(frobenius_distance(&z, &z).unwrap(), 0.0, epsilon = 1e-15);
        // (Z - X)^2 = 2I so Tr = 4 and the distance is 2.
        assert_abs_diff_eq!(frobenius_distance(&z, &x).unwrap(), 2.0, epsilon = 1e-12);
        let rho0 = DensityMatrix::basis_state(1, 0).unwrap();
        let rho1 = DensityMatrix::basis_state(1, 1).unwrap();
        assert_abs_diff_eq!(
            frobenius_distance(rho0.matrix(), rho1.matrix()).unwrap(),
            std::f64::consts::SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn frobenius_distance_rejects_mismatch() {
        let a = CMatrix::zeros(2, 2);
        let b = CMatrix::zeros(4, 4);
        assert!(matches!(
            frobenius_distance(&a, &b),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn density_matrix_validation_catches_bad_states() {
        let dim_bad = CMatrix::identity(3, 3);
        assert!(DensityMatrix::new(1, dim_bad).is_err());
        // Trace 2.
        let double = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(1, double).is_err());
        // Indefinite Hermitian with unit trace.
        let indefinite = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(DensityMatrix::new(1, indefinite).is_err());
    }
}
