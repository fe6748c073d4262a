//! Shared helpers for unit tests: dense brute-force oracles kept
//! independent of the sparse/solver code paths they check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::{annihilation, hamiltonian, number, FockSpace, PhysicalParams};

pub fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let rho = &a * a.adjoint();
    let tr: Complex64 = rho.diagonal().iter().sum();
    rho / tr
}

/// Master-equation right side evaluated with dense matrix products.
pub fn direct_rhs(
    params: &PhysicalParams,
    space: FockSpace,
    rho: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let h = hamiltonian(params, space);
    let a = annihilation(space);
    let num = number(space);
    let i = Complex64::new(0.0, 1.0);
    let comm = h.matrix() * rho - rho * h.matrix();
    let jump = a.matrix() * rho * a.matrix().adjoint();
    let anti = num.matrix() * rho + rho * num.matrix();
    comm * (-i) + (jump - anti * Complex64::new(0.5, 0.0)) * Complex64::new(params.kappa(), 0.0)
}

/// Dense superoperator built column by column from [`direct_rhs`] applied
/// to matrix units (column-stacking convention).
pub fn dense_generator(params: &PhysicalParams, space: FockSpace) -> DMatrix<Complex64> {
    let dim = space.dim();
    let n = dim * dim;
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    for col in 0..n {
        let mut unit = DMatrix::<Complex64>::zeros(dim, dim);
        unit[(col % dim, col / dim)] = Complex64::new(1.0, 0.0);
        let out = direct_rhs(params, space, &unit);
        for (r, v) in out.as_slice().iter().enumerate() {
            l[(r, col)] = *v;
        }
    }
    l
}

/// Null vector of a dense generator by shifted inverse iteration.
///
/// The generator of a valid Lindblad problem has one eigenvalue at zero,
/// all others with negative real part; a small positive real shift makes
/// zero the closest eigenvalue.
pub fn null_vector_inverse_iteration(l: &DMatrix<Complex64>, shift: f64) -> Vec<Complex64> {
    let n = l.nrows();
    let shifted = l - DMatrix::<Complex64>::identity(n, n) * Complex64::new(shift, 0.0);
    let lu = shifted.lu();
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let mut x = nalgebra::DVector::from_fn(n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    for _ in 0..60 {
        x = lu.solve(&x).expect("shifted generator must be nonsingular");
        let norm = x.norm();
        x /= Complex64::new(norm, 0.0);
    }
    x.as_slice().to_vec()
}

/// Matrix exponential by scaling and squaring with a Taylor series;
/// adequate as a small-matrix oracle.
pub fn expm_taylor(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let norm = m.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
    let squarings = norm.log2().ceil().max(0.0) as u32 + 4;
    let scaled = m / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..=24 {
        term = (&term * &scaled) / Complex64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
