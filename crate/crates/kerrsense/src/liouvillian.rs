//! Vectorized Lindblad generator as a sparse superoperator.
//!
//! The master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] + κ (2 a ρ a† − {a†a, ρ}) / 2
//! ```
//!
//! is flattened by column stacking: vec(ρ)[m + n·dim] = ρ[(m, n)], so
//! that vec(A X B) = (Bᵀ ⊗ A) vec(X). With this convention the
//! generator has at most six nonzeros per row: the (m, n) diagonal,
//! the two-photon couplings (m±2, n) and (m, n±2), and the quantum
//! jump term (m+1, n+1).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{FockSpace, PhysicalParams};

/// Sparse superoperator form of the Lindblad generator (CSR).
#[derive(Clone, Debug)]
pub struct Liouvillian {
    space: FockSpace,
    params: PhysicalParams,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<Complex64>,
}

/// Flatten a density matrix by column stacking.
pub fn vectorize(rho: &DMatrix<Complex64>) -> Vec<Complex64> {
    rho.as_slice().to_vec()
}

/// Inverse of [`vectorize`].
pub fn unvectorize(space: FockSpace, v: &[Complex64]) -> DMatrix<Complex64> {
    let dim = space.dim();
    assert_eq!(v.len(), dim * dim, "vector length does not match dim^2");
    DMatrix::from_column_slice(dim, dim, v)
}

/// Build the sparse Lindblad generator for one operating point.
pub fn liouvillian(params: &PhysicalParams, space: FockSpace) -> Liouvillian {
    let dim = space.dim();
    let n_super = dim * dim;
    let delta = params.delta();
    let g = params.g();
    let u = params.u();
    let kappa = params.kappa();

    let h_diag = |m: usize| {
        let mf = m as f64;
        delta * mf + 0.5 * u * mf * (mf - 1.0)
    };
    let sq = |k: usize| (k as f64).sqrt();
    let idx = |m: usize, n: usize| m + n * dim;

    let mut row_ptr = Vec::with_capacity(n_super + 1);
    let mut col_idx = Vec::with_capacity(6 * n_super);
    let mut vals = Vec::with_capacity(6 * n_super);
    row_ptr.push(0);

    // rows in column-stacked order: r = m + n*dim
    for n in 0..dim {
        for m in 0..dim {
            // entries pushed in ascending column order
            if n >= 2 {
                col_idx.push(idx(m, n - 2));
                vals.push(Complex64::new(0.0, 0.5 * g * sq(n * (n - 1))));
            }
            if m >= 2 {
                col_idx.push(idx(m - 2, n));
                vals.push(Complex64::new(0.0, -0.5 * g * sq(m * (m - 1))));
            }
            col_idx.push(idx(m, n));
            vals.push(Complex64::new(
                -0.5 * kappa * (m + n) as f64,
                -(h_diag(m) - h_diag(n)),
            ));
            if m + 2 < dim {
                col_idx.push(idx(m + 2, n));
                vals.push(Complex64::new(0.0, -0.5 * g * sq((m + 1) * (m + 2))));
            }
            if m + 1 < dim && n + 1 < dim {
                col_idx.push(idx(m + 1, n + 1));
                vals.push(Complex64::new(kappa * sq((m + 1) * (n + 1)), 0.0));
            }
            if n + 2 < dim {
                col_idx.push(idx(m, n + 2));
                vals.push(Complex64::new(0.0, 0.5 * g * sq((n + 1) * (n + 2))));
            }
            row_ptr.push(col_idx.len());
        }
    }

    Liouvillian { space, params: *params, row_ptr, col_idx, vals }
}

impl Liouvillian {
    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Superoperator dimension dim².
    pub fn dim_super(&self) -> usize {
        self.space.dim() * self.space.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = L x (CSR matrix-vector product).
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim_super());
        assert_eq!(y.len(), self.dim_super());
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    pub fn apply_alloc(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::ZERO; self.dim_super()];
        self.apply(x, &mut y);
        y
    }

    /// dρ/dt evaluated through the superoperator.
    pub fn apply_matrix(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let y = self.apply_alloc(rho.as_slice());
        unvectorize(self.space, &y)
    }

    /// Operator ∞-norm (max absolute row sum); scale for residual checks.
    pub fn inf_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for r in 0..self.dim_super() {
            let s: f64 = (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k].norm()).sum();
            best = best.max(s);
        }
        best
    }

    /// Iterate stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim_super()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.vals[k]))
        })
    }
}
