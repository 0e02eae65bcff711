//! Shared helpers for unit and integration tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{CMatrix, CVector, DensityMatrix};

pub fn random_hermitian(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Random full-rank mixed state: a convex mixture of a few random pure states.
pub fn random_density(n_qubits: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let dim = 1usize << n_qubits;
    let mut m = CMatrix::zeros(dim, dim);
    let mut weights = [0.0f64; 3];
    for w in weights.iter_mut() {
        *w = rng.gen::<f64>() + 0.05;
    }
    let total: f64 = weights.iter().sum();
    for &w in &weights {
        let amps = CVector::from_fn(dim, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let pure = DensityMatrix::pure(n_qubits, &amps).unwrap();
        m += pure.matrix() * Complex64::new(w / total, 0.0);
    }
    DensityMatrix::new(n_qubits, m).unwrap()
}
