//! Brute-force oracles for the acceptance suite, kept independent of the
//! sparse solver path they are checking: the generator is rebuilt here by
//! direct dense evaluation of the master equation, and its null vector is
//! found by shifted inverse iteration instead of a trace-replaced solve.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kerrsense::fock::{annihilation, hamiltonian, number, FockSpace, PhysicalParams};

pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// dρ/dt evaluated with dense matrix products only.
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

/// Dense generator assembled column by column from matrix units
/// (column-stacking convention).
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

/// Null vector by shifted inverse iteration; the zero eigenvalue is the
/// one closest to a small positive real shift.
pub fn null_vector(l: &DMatrix<Complex64>, shift: f64) -> Vec<Complex64> {
    let n = l.nrows();
    let shifted = l - DMatrix::<Complex64>::identity(n, n) * Complex64::new(shift, 0.0);
    let lu = shifted.lu();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
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

/// Hermitize, normalize, and wrap an oracle null vector as a state.
pub fn oracle_state(space: FockSpace, vec: &[Complex64]) -> kerrsense::DensityMatrix {
    let dim = space.dim();
    let raw = DMatrix::from_column_slice(dim, dim, vec);
    let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let tr: Complex64 = herm.diagonal().iter().sum();
    kerrsense::DensityMatrix::with_leak_tol(space, herm / tr, 1.0).expect("oracle state")
}
