//! Steady states, master-equation time evolution, and observables.
//!
//! The steady state ∂t ρ_ss = 0 is found by replacing one row of the
//! vectorized linear system with the trace constraint and solving the
//! sparse system directly; an iterative Krylov solver and long-time
//! integration serve as fallbacks. Time evolution uses an embedded
//! Dormand–Prince 5(4) pair with adaptive step control.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::liouvillian::{unvectorize, Liouvillian};

/// Truncated-basis density matrix; carrier of all observables.
///
/// Construction validates Hermiticity, unit trace, positivity up to
/// round-off, and that the top 10% of Fock levels hold no more than the
/// truncation-leak tolerance.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: FockSpace,
    matrix: DMatrix<Complex64>,
}

/// Default population tolerance for the top 10% of Fock levels.
pub const DEFAULT_LEAK_TOL: f64 = 1e-6;

impl DensityMatrix {
    pub fn new(space: FockSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::with_leak_tol(space, matrix, DEFAULT_LEAK_TOL)
    }

    pub fn with_leak_tol(space: FockSpace, matrix: DMatrix<Complex64>, leak_tol: f64) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::InvalidState(format!(
                "shape {}x{} does not match dim {}",
                matrix.nrows(),
                matrix.ncols(),
                space.dim()
            )));
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-9 {
            return Err(Error::InvalidState(format!("Hermiticity (defect {herm:.3e})")));
        }
        let tr: Complex64 = matrix.diagonal().iter().sum();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::InvalidState(format!("unit trace (got {tr})")));
        }
        let state = Self { space, matrix };
        let min_eig = state.min_eigenvalue();
        if min_eig < -1e-8 {
            return Err(Error::InvalidState(format!("positivity (min eigenvalue {min_eig:.3e})")));
        }
        let leak = state.tail_population();
        if leak > leak_tol {
            return Err(Error::TruncationLeak { leak, tol: leak_tol, dim: space.dim() });
        }
        Ok(state)
    }

    /// Symmetrize and renormalize a raw solver output, then validate.
    pub(crate) fn from_solver(space: FockSpace, raw: DMatrix<Complex64>, leak_tol: f64) -> Result<Self> {
        let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
        let tr: Complex64 = herm.diagonal().iter().sum();
        if tr.norm() < 1e-300 {
            return Err(Error::NoConvergence("solver returned a traceless matrix".into()));
        }
        Self::with_leak_tol(space, herm / tr, leak_tol)
    }

    pub fn vacuum(space: FockSpace) -> Self {
        let mut m = DMatrix::<Complex64>::zeros(space.dim(), space.dim());
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        Self { space, matrix: m }
    }

    /// Pure Fock state |k⟩⟨k|. Fails if k populates the truncation tail.
    pub fn fock_state(space: FockSpace, k: usize) -> Result<Self> {
        if k >= space.dim() {
            return Err(Error::InvalidState(format!("level {k} outside dim {}", space.dim())));
        }
        let mut m = DMatrix::<Complex64>::zeros(space.dim(), space.dim());
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self::new(space, m)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diagonal().iter().sum()
    }

    /// Diagonal populations p(n); round-off negatives in [-1e-8, 0)
    /// are clamped for reporting.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re.max(0.0)).collect()
    }

    /// Total population of the top 10% of Fock levels.
    pub fn tail_population(&self) -> f64 {
        let dim = self.space.dim();
        let tail = dim.div_ceil(10);
        self.matrix
            .diagonal()
            .iter()
            .skip(dim - tail)
            .map(|z| z.re)
            .sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Tr[op ρ].
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Complex64 {
        assert_eq!(op.nrows(), self.space.dim());
        let mut acc = Complex64::ZERO;
        for i in 0..self.space.dim() {
            for j in 0..self.space.dim() {
                acc += op[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.matrix - &other.matrix;
        0.5 * diff.symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
    }

    /// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
    pub fn fidelity(&self, other: &DensityMatrix) -> f64 {
        let eig = self.matrix.clone().symmetric_eigen();
        let sqrt_vals: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
        let dim = self.space.dim();
        let mut sqrt_rho = DMatrix::<Complex64>::zeros(dim, dim);
        for k in 0..dim {
            let col = eig.eigenvectors.column(k);
            let w = Complex64::new(sqrt_vals[k], 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    sqrt_rho[(i, j)] += w * col[i] * col[j].conj();
                }
            }
        }
        let inner = &sqrt_rho * &other.matrix * &sqrt_rho;
        let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
        let root_sum: f64 = inner
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .sum();
        root_sum * root_sum
    }
}

/// Photon-number moments of a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableRecord {
    pub n_mean: f64,
    pub n2_mean: f64,
    pub n_var: f64,
}

/// n̄ = Tr[a†a ρ] and second moment from the diagonal populations.
pub fn observables(rho: &DensityMatrix) -> ObservableRecord {
    let mut n_mean = 0.0;
    let mut n2_mean = 0.0;
    for (k, z) in rho.matrix().diagonal().iter().enumerate() {
        debug_assert!(z.im.abs() < 1e-10);
        n_mean += k as f64 * z.re;
        n2_mean += (k * k) as f64 * z.re;
    }
    let n_var = (n2_mean - n_mean * n_mean).max(0.0);
    ObservableRecord { n_mean, n2_mean, n_var }
}

#[derive(Clone, Copy, Debug)]
pub struct SteadyStateOptions {
    /// Residual bound relative to the generator ∞-norm.
    pub residual_tol: f64,
    /// Tolerance on the top 10% Fock-level population.
    pub leak_tol: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { residual_tol: 1e-9, leak_tol: DEFAULT_LEAK_TOL }
    }
}

/// Steady state with default options.
pub fn steady_state(liou: &Liouvillian) -> Result<DensityMatrix> {
    steady_state_with(liou, &SteadyStateOptions::default())
}

/// Steady state of the generator: sparse LU on the trace-replaced system,
/// falling back to preconditioned BiCGSTAB, then to long-time integration.
pub fn steady_state_with(liou: &Liouvillian, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    let scale = liou.inf_norm();
    let target = opts.residual_tol * scale;

    let mut best: Option<(Vec<Complex64>, f64)> = None;
    let keep_best = |sol: Vec<Complex64>, res: f64, best: &mut Option<(Vec<Complex64>, f64)>| {
        if best.as_ref().map_or(true, |(_, r)| res < *r) {
            *best = Some((sol, res));
        }
    };

    if let Ok(sol) = solve_direct_lu(liou) {
        let res = normalized_residual(liou, &sol);
        if res <= target {
            return finish(liou, sol, opts);
        }
        keep_best(sol, res, &mut best);
    }

    let start = best.as_ref().map(|(s, _)| s.clone());
    if let Ok(sol) = solve_bicgstab(liou, start, opts.residual_tol) {
        let res = normalized_residual(liou, &sol);
        if res <= target {
            return finish(liou, sol, opts);
        }
        keep_best(sol, res, &mut best);
    }

    if let Ok(sol) = solve_by_relaxation(liou, opts) {
        let res = normalized_residual(liou, &sol);
        if res <= target {
            return finish(liou, sol, opts);
        }
        keep_best(sol, res, &mut best);
    }

    let res = best.map(|(_, r)| r).unwrap_or(f64::INFINITY);
    Err(Error::NoConvergence(format!(
        "residual {res:.3e} above tolerance {:.1e} after fallback chain",
        opts.residual_tol
    )))
}

fn finish(liou: &Liouvillian, sol: Vec<Complex64>, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    DensityMatrix::from_solver(liou.space(), unvectorize(liou.space(), &sol), opts.leak_tol)
}

/// ‖L x‖∞ / (‖L‖∞ ‖x‖∞) after trace normalization of x.
fn normalized_residual(liou: &Liouvillian, sol: &[Complex64]) -> f64 {
    let dim = liou.space().dim();
    let tr: Complex64 = (0..dim).map(|m| sol[m + m * dim]).sum();
    if tr.norm() < 1e-300 {
        return f64::INFINITY;
    }
    let x: Vec<Complex64> = sol.iter().map(|z| z / tr).collect();
    let y = liou.apply_alloc(&x);
    let num = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let den = x.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    num / (liou.inf_norm() * den)
}

/// Trace-replaced linear system: row 0 of L becomes the trace constraint,
/// the right-hand side becomes e₀.
struct TraceReplaced<'a> {
    liou: &'a Liouvillian,
}

impl TraceReplaced<'_> {
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.liou.apply(x, y);
        let dim = self.liou.space().dim();
        y[0] = (0..dim).map(|m| x[m + m * dim]).sum();
    }

    fn diagonal(&self) -> Vec<Complex64> {
        let n = self.liou.dim_super();
        let mut d = vec![Complex64::ZERO; n];
        for (r, c, v) in self.liou.entries() {
            if r == c {
                d[r] = v;
            }
        }
        d[0] = Complex64::new(1.0, 0.0);
        d
    }
}

fn solve_direct_lu(liou: &Liouvillian) -> Result<Vec<Complex64>> {
    let n = liou.dim_super();
    let dim = liou.space().dim();
    let mut trips: Vec<Triplet<usize, usize, c64>> = Vec::with_capacity(liou.nnz() + dim);
    for (r, c, v) in liou.entries() {
        if r != 0 {
            trips.push(Triplet::new(r, c, c64::new(v.re, v.im)));
        }
    }
    for m in 0..dim {
        trips.push(Triplet::new(0, m + m * dim, c64::new(1.0, 0.0)));
    }
    let a = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &trips)
        .map_err(|e| Error::NoConvergence(format!("superoperator assembly failed: {e:?}")))?;
    let sym = SymbolicLu::try_new(a.symbolic())
        .map_err(|e| Error::NoConvergence(format!("symbolic factorization failed: {e:?}")))?;
    let lu = Lu::try_new_with_symbolic(sym, a.as_ref())
        .map_err(|e| Error::NoConvergence(format!("LU factorization failed: {e:?}")))?;
    let mut rhs = Mat::<c64>::zeros(n, 1);
    rhs[(0, 0)] = c64::new(1.0, 0.0);
    let sol = lu.solve(&rhs);
    Ok((0..n).map(|i| Complex64::new(sol[(i, 0)].re, sol[(i, 0)].im)).collect())
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Left-preconditioned BiCGSTAB on the trace-replaced system. The
/// Jacobi (row-equilibrating) preconditioner tames the wildly different
/// row scales of the rate rows versus the trace row; the shadow
/// residual is restarted on stagnation.
fn solve_bicgstab(liou: &Liouvillian, start: Option<Vec<Complex64>>, rel_tol: f64) -> Result<Vec<Complex64>> {
    let sys = TraceReplaced { liou };
    let n = liou.dim_super();
    let inv_diag: Vec<Complex64> = sys
        .diagonal()
        .iter()
        .map(|d| if d.norm() > 1e-300 { 1.0 / d } else { Complex64::new(1.0, 0.0) })
        .collect();

    // y = D⁻¹ A x
    let mut raw = vec![Complex64::ZERO; n];
    let mut apply = |x: &[Complex64], y: &mut [Complex64]| {
        sys.apply(x, &mut raw);
        for i in 0..n {
            y[i] = raw[i] * inv_diag[i];
        }
    };
    let mut b = vec![Complex64::ZERO; n];
    b[0] = inv_diag[0];

    let mut x = start.unwrap_or_else(|| vec![Complex64::ZERO; n]);
    let mut r = vec![Complex64::ZERO; n];
    apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut r_hat = r.clone();
    let tol = (rel_tol * cnorm(&b)).max(1e-300);

    let mut rho = Complex64::new(1.0, 0.0);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut omega = Complex64::new(1.0, 0.0);
    let mut v = vec![Complex64::ZERO; n];
    let mut p = vec![Complex64::ZERO; n];
    let mut t = vec![Complex64::ZERO; n];
    let max_iter = 50_000.min(200 * n);
    let mut since_check = 0usize;
    let mut last_norm = cnorm(&r);

    for _ in 0..max_iter {
        let rho_new = cdot(&r_hat, &r);
        // serious breakdown of the shadow projection: restart
        if rho_new.norm() < 1e-14 * cnorm(&r_hat) * cnorm(&r) {
            r_hat.copy_from_slice(&r);
            rho = Complex64::new(1.0, 0.0);
            alpha = Complex64::new(1.0, 0.0);
            omega = Complex64::new(1.0, 0.0);
            v.iter_mut().for_each(|z| *z = Complex64::ZERO);
            p.iter_mut().for_each(|z| *z = Complex64::ZERO);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply(&p, &mut v);
        let denom = cdot(&r_hat, &v);
        if denom.norm() < 1e-300 {
            break;
        }
        alpha = rho_new / denom;
        let s: Vec<Complex64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if cnorm(&s) < tol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            break;
        }
        apply(&s, &mut t);
        let tt = cdot(&t, &t);
        if tt.norm() < 1e-300 {
            break;
        }
        omega = cdot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
        }
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        if cnorm(&r) < tol {
            break;
        }
        rho = rho_new;

        // stagnation: restart the shadow residual
        since_check += 1;
        if since_check >= 200 {
            let now = cnorm(&r);
            if now > 0.98 * last_norm {
                r_hat.copy_from_slice(&r);
                rho = Complex64::new(1.0, 0.0);
                alpha = Complex64::new(1.0, 0.0);
                omega = Complex64::new(1.0, 0.0);
                v.iter_mut().for_each(|z| *z = Complex64::ZERO);
                p.iter_mut().for_each(|z| *z = Complex64::ZERO);
            }
            last_norm = now;
            since_check = 0;
        }
    }
    Ok(x)
}

/// Long-time integration from the vacuum until the residual settles.
fn solve_by_relaxation(liou: &Liouvillian, opts: &SteadyStateOptions) -> Result<Vec<Complex64>> {
    let kappa = liou.params().kappa();
    let mut y = crate::liouvillian::vectorize(DensityMatrix::vacuum(liou.space()).matrix());
    let chunk = 5.0 / kappa;
    let mut t = 0.0;
    for _ in 0..12 {
        integrate(liou, &mut y, t, &[t + chunk], 1e-10, 5_000_000, |_, _| {})?;
        t += chunk;
        if normalized_residual(liou, &y) <= opts.residual_tol * liou.inf_norm() {
            break;
        }
    }
    Ok(y)
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Local error tolerance per unit trace norm.
    pub rtol: f64,
    pub leak_tol: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, leak_tol: DEFAULT_LEAK_TOL, max_steps: 5_000_000 }
    }
}

/// Integrate the master equation, returning the state at each requested time.
pub fn evolve(liou: &Liouvillian, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    evolve_with(liou, rho0, times, &EvolveOptions::default())
}

pub fn evolve_with(
    liou: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<DensityMatrix>> {
    if rho0.space() != liou.space() {
        return Err(Error::InvalidParameter("state space does not match generator".into()));
    }
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("times must be ascending and non-negative".into()));
    }
    let mut y = crate::liouvillian::vectorize(rho0.matrix());
    let mut out: Vec<Vec<Complex64>> = vec![Vec::new(); times.len()];
    integrate(liou, &mut y, 0.0, times, opts.rtol, opts.max_steps, |k, state| {
        out[k] = state.to_vec();
    })?;
    out.into_iter()
        .map(|v| {
            let m = unvectorize(liou.space(), &v);
            // integration preserves trace to round-off; validation is strict
            DensityMatrix::with_leak_tol(liou.space(), m, opts.leak_tol)
        })
        .collect()
}

/// Steady-state two-time photon-number correlation
/// C(τ) = Tr[n̂ e^{Lτ}(n̂ ρ_ss)] − ⟨n̂⟩², via the quantum regression theorem.
pub fn number_autocorrelation(
    liou: &Liouvillian,
    rho_ss: &DensityMatrix,
    taus: &[f64],
) -> Result<Vec<f64>> {
    if rho_ss.space() != liou.space() {
        return Err(Error::InvalidParameter("state space does not match generator".into()));
    }
    if taus.is_empty() {
        return Ok(Vec::new());
    }
    if taus[0] < 0.0 || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("taus must be ascending and non-negative".into()));
    }
    let dim = liou.space().dim();
    let n_mean = observables(rho_ss).n_mean;
    // B(0) = n̂ ρ_ss
    let mut b = rho_ss.matrix().clone();
    for m in 0..dim {
        for n in 0..dim {
            b[(m, n)] *= Complex64::new(m as f64, 0.0);
        }
    }
    let mut y = crate::liouvillian::vectorize(&b);
    let mut c = vec![0.0; taus.len()];
    integrate(liou, &mut y, 0.0, taus, 1e-8, 5_000_000, |k, state| {
        let mut corr = 0.0;
        for m in 0..dim {
            corr += m as f64 * state[m + m * dim].re;
        }
        c[k] = corr - n_mean * n_mean;
    })?;
    Ok(c)
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive DOPRI5 on the flattened state; calls `sink(k, y)` at targets[k].
/// Works for any matrix flattened to dim² (not only density matrices),
/// which the regression-theorem correlation relies on.
fn integrate(
    liou: &Liouvillian,
    y: &mut Vec<Complex64>,
    t0: f64,
    targets: &[f64],
    rtol: f64,
    max_steps: usize,
    mut sink: impl FnMut(usize, &[Complex64]),
) -> Result<()> {
    let n = y.len();
    assert_eq!(n, liou.dim_super());
    let mut t = t0;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; n]; 7];
    let mut y_stage = vec![Complex64::ZERO; n];
    let mut y_new = vec![Complex64::ZERO; n];
    liou.apply(y, &mut k[0]);

    let span = targets.last().unwrap() - t0;
    let h_min = 1e-15 * span.max(1.0 / liou.params().kappa());
    let mut h = (0.1 / liou.inf_norm()).min(span.max(h_min));
    let mut steps = 0usize;

    for (ti, &target) in targets.iter().enumerate() {
        while t < target {
            if steps >= max_steps {
                return Err(Error::NoConvergence(format!(
                    "integrator exceeded {max_steps} steps at t = {t:.6e}"
                )));
            }
            steps += 1;
            let clamped = h.min(target - t);

            for stage in 0..6 {
                for i in 0..n {
                    let mut acc = Complex64::ZERO;
                    for (j, kj) in k.iter().enumerate().take(stage + 1) {
                        let a = A[stage][j];
                        if a != 0.0 {
                            acc += Complex64::new(a, 0.0) * kj[i];
                        }
                    }
                    y_stage[i] = y[i] + Complex64::new(clamped, 0.0) * acc;
                }
                if stage == 5 {
                    y_new.copy_from_slice(&y_stage);
                }
                let dst = &mut k[stage + 1] as *mut Vec<Complex64>;
                // stages only read k[0..=stage]; the write target is disjoint
                unsafe { liou.apply(&y_stage, &mut *dst) };
            }

            let mut err_ratio = 0.0f64;
            for i in 0..n {
                let mut e = Complex64::ZERO;
                for (j, kj) in k.iter().enumerate() {
                    if ERR[j] != 0.0 {
                        e += Complex64::new(ERR[j], 0.0) * kj[i];
                    }
                }
                let sc = rtol * (1.0 + y[i].norm().max(y_new[i].norm()));
                err_ratio = err_ratio.max(clamped * e.norm() / sc);
            }

            if err_ratio <= 1.0 {
                t += clamped;
                std::mem::swap(y, &mut y_new);
                k.swap(0, 6); // FSAL: last stage is f(y_new)
            }
            let factor = if err_ratio > 0.0 {
                (0.9 * err_ratio.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = (clamped * factor).max(h_min);
            if h < h_min || !h.is_finite() {
                return Err(Error::StepFailure { t, h });
            }
        }
        sink(ti, y);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation, FockSpace, PhysicalParams};
    use crate::liouvillian::liouvillian;
    use crate::testutil::{dense_generator, null_vector_inverse_iteration, random_density};
    use crate::units::khz;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_params(delta: f64, g: f64, u: f64) -> PhysicalParams {
        PhysicalParams::overcoupled(delta, g, u, 1.0).unwrap()
    }

    // small truncations hold visible tail weight; these comparisons are
    // solver-vs-solver on the same generator, so the leak gate is moot
    fn relaxed() -> SteadyStateOptions {
        SteadyStateOptions { residual_tol: 1e-9, leak_tol: 1.0 }
    }

    #[test]
    fn undriven_cavity_decays_to_vacuum() {
        let space = FockSpace::new(8).unwrap();
        let liou = liouvillian(&unit_params(-0.5, 0.0, -0.2), space);
        let ss = steady_state(&liou).unwrap();
        let vac = DensityMatrix::vacuum(space);
        assert!(ss.trace_distance(&vac) < 1e-10);
        assert!(ss.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn bright_state_matches_mean_field_estimate() {
        // operating point of the photon-number curve at zero detuning
        let params =
            PhysicalParams::overcoupled(0.0, khz(300.0), khz(-9.14), khz(72.0)).unwrap();
        let space = FockSpace::new(160).unwrap();
        let liou = liouvillian(&params, space);
        let ss = steady_state(&liou).unwrap();
        let obs = observables(&ss);
        let mean_field = crate::calibration::meanfield_n(&params);
        assert!((obs.n_mean - mean_field).abs() / mean_field < 0.15);
        // reference value cross-checked against an independent sparse-solver
        // implementation of the same generator
        assert_relative_eq!(obs.n_mean, 32.577971454, max_relative = 1e-6);
    }

    #[test]
    fn small_dim_matches_dense_null_space_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let delta = 3.0 * (rng.random::<f64>() - 0.5);
            let g = 0.8 * rng.random::<f64>();
            let u = -1.5 * rng.random::<f64>();
            let kappa = 0.5 + 1.5 * rng.random::<f64>();
            let params = PhysicalParams::overcoupled(delta, g, u, kappa).unwrap();
            let space = FockSpace::new(8).unwrap();
            let liou = liouvillian(&params, space);
            let ss = steady_state_with(&liou, &relaxed()).unwrap();

            let dense = dense_generator(&params, space);
            let null = null_vector_inverse_iteration(&dense, 1e-8 * kappa);
            let oracle =
                DensityMatrix::from_solver(space, unvectorize(space, &null), 1.0).unwrap();
            let fid = ss.fidelity(&oracle);
            assert!(fid >= 1.0 - 1e-8, "fidelity {fid} too low");
        }
    }

    #[test]
    fn truncation_leak_is_reported() {
        // needs ~32 photons; dim 24 cannot hold the state
        let params =
            PhysicalParams::overcoupled(0.0, khz(300.0), khz(-9.14), khz(72.0)).unwrap();
        let liou = liouvillian(&params, FockSpace::new(24).unwrap());
        match steady_state(&liou) {
            Err(Error::TruncationLeak { .. }) => {}
            other => panic!("expected TruncationLeak, got {other:?}"),
        }
    }

    #[test]
    fn evolve_at_time_zero_returns_input() {
        let space = FockSpace::new(6).unwrap();
        let liou = liouvillian(&unit_params(0.2, 0.5, -0.1), space);
        let rho0 = DensityMatrix::fock_state(space, 1).unwrap();
        let out = evolve(&liou, &rho0, &[0.0]).unwrap();
        assert!(out[0].trace_distance(&rho0) < 1e-14);
    }

    #[test]
    fn single_photon_decay_law() {
        let space = FockSpace::new(6).unwrap();
        let kappa = 1.0;
        let liou = liouvillian(&unit_params(0.0, 0.0, 0.0), space);
        let rho0 = DensityMatrix::fock_state(space, 1).unwrap();
        let times = [0.3, 1.0, 3.0];
        let out = evolve(&liou, &rho0, &times).unwrap();
        for (t, rho) in times.iter().zip(&out) {
            let n = observables(rho).n_mean;
            assert_relative_eq!(n, (-kappa * t).exp(), max_relative = 1e-7);
        }
    }

    #[test]
    fn long_time_evolution_reaches_steady_state() {
        let space = FockSpace::new(24).unwrap();
        let liou = liouvillian(&unit_params(-0.5, 0.6, -0.15), space);
        let ss = steady_state_with(&liou, &relaxed()).unwrap();
        let opts = EvolveOptions { rtol: 1e-10, leak_tol: 1.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let rho0 =
                DensityMatrix::with_leak_tol(space, random_density(24, &mut rng), 1.0).unwrap();
            let out = evolve_with(&liou, &rho0, &[20.0], &opts).unwrap();
            let dist = out[0].trace_distance(&ss);
            assert!(dist < 1e-5, "endpoint distance {dist:.3e}");
        }
        // well past 7/kappa the state has settled to well below 1e-6
        let out = evolve_with(&liou, &DensityMatrix::vacuum(space), &[25.0], &opts).unwrap();
        assert!(out[0].trace_distance(&ss) < 1e-6);
    }

    #[test]
    fn observable_examples() {
        let space = FockSpace::new(10).unwrap();
        let vac = observables(&DensityMatrix::vacuum(space));
        assert_eq!((vac.n_mean, vac.n2_mean, vac.n_var), (0.0, 0.0, 0.0));

        let two = observables(&DensityMatrix::fock_state(space, 2).unwrap());
        assert_eq!((two.n_mean, two.n2_mean, two.n_var), (2.0, 4.0, 0.0));

        // thermal-like diagonal p(n) ∝ x^n against direct summation
        let x: f64 = 0.37;
        let weights: Vec<f64> = (0..10).map(|n| x.powi(n)).collect();
        let z: f64 = weights.iter().sum();
        let mut m = DMatrix::<Complex64>::zeros(10, 10);
        for (n, w) in weights.iter().enumerate() {
            m[(n, n)] = Complex64::new(w / z, 0.0);
        }
        let obs = observables(&DensityMatrix::with_leak_tol(space, m, 1.0).unwrap());
        let n_direct: f64 = weights.iter().enumerate().map(|(n, w)| n as f64 * w / z).sum();
        let n2_direct: f64 =
            weights.iter().enumerate().map(|(n, w)| (n * n) as f64 * w / z).sum();
        assert_relative_eq!(obs.n_mean, n_direct, max_relative = 1e-12);
        assert_relative_eq!(obs.n2_mean, n2_direct, max_relative = 1e-12);
    }

    #[test]
    fn autocorrelation_definition_and_decay() {
        let space = FockSpace::new(16).unwrap();
        let liou = liouvillian(&unit_params(-0.2, 0.9, -0.2), space);
        let ss = steady_state_with(&liou, &relaxed()).unwrap();
        let obs = observables(&ss);
        let taus = [0.0, 0.5, 2.0, 12.0];
        let c = number_autocorrelation(&liou, &ss, &taus).unwrap();
        assert_relative_eq!(c[0], obs.n_var, max_relative = 1e-8);
        assert!(c[3].abs() < 1e-4 * c[0].max(1e-12), "C should decay, got {:?}", c);
    }

    #[test]
    fn autocorrelation_vanishes_for_vacuum() {
        let space = FockSpace::new(6).unwrap();
        let liou = liouvillian(&unit_params(-0.3, 0.0, -0.1), space);
        let ss = steady_state(&liou).unwrap();
        let c = number_autocorrelation(&liou, &ss, &[0.0, 1.0, 4.0]).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn autocorrelation_matches_dense_expm_oracle() {
        let space = FockSpace::new(8).unwrap();
        let params = unit_params(-0.3, 0.6, -0.25);
        let liou = liouvillian(&params, space);
        let ss = steady_state_with(&liou, &relaxed()).unwrap();
        let tau = 0.8;
        let c = number_autocorrelation(&liou, &ss, &[tau]).unwrap()[0];

        let dim = space.dim();
        let dense = dense_generator(&params, space);
        let prop = crate::testutil::expm_taylor(&(dense * Complex64::new(tau, 0.0)));
        let mut b = ss.matrix().clone();
        for m in 0..dim {
            for n in 0..dim {
                b[(m, n)] *= Complex64::new(m as f64, 0.0);
            }
        }
        let v = nalgebra::DVector::from_column_slice(b.as_slice());
        let evolved = prop * v;
        let n_mean = observables(&ss).n_mean;
        let mut corr = 0.0;
        for m in 0..dim {
            corr += m as f64 * evolved[m + m * dim].re;
        }
        assert_relative_eq!(c, corr - n_mean * n_mean, max_relative = 1e-6, epsilon = 1e-9);
    }

    #[test]
    fn steady_state_has_no_coherent_amplitude() {
        let params =
            PhysicalParams::overcoupled(khz(-100.0), khz(300.0), khz(-9.14), khz(72.0)).unwrap();
        let space = FockSpace::new(120).unwrap();
        let ss = steady_state(&liouvillian(&params, space)).unwrap();
        let a_mean = ss.expectation(annihilation(space).matrix());
        assert!(a_mean.norm() < 1e-8, "<a> = {a_mean}");
    }

    #[test]
    fn dim_independence_once_leak_passes() {
        let params =
            PhysicalParams::overcoupled(khz(-150.0), khz(300.0), khz(-9.14), khz(72.0)).unwrap();
        let n_small = {
            let liou = liouvillian(&params, FockSpace::new(90).unwrap());
            observables(&steady_state(&liou).unwrap()).n_mean
        };
        let n_large = {
            let liou = liouvillian(&params, FockSpace::new(180).unwrap());
            observables(&steady_state(&liou).unwrap()).n_mean
        };
        assert!((n_large - n_small).abs() / n_large < 1e-3);
    }

    #[test]
    fn bicgstab_agrees_with_direct_solve() {
        let space = FockSpace::new(10).unwrap();
        for params in [unit_params(-0.4, 0.25, -0.1), unit_params(-0.2, 0.7, -0.3)] {
            let liou = liouvillian(&params, space);
            let direct = solve_direct_lu(&liou).unwrap();
            let krylov = solve_bicgstab(&liou, None, 1e-12).unwrap();
            let res = normalized_residual(&liou, &krylov);
            assert!(res < 1e-9, "krylov residual {res:.3e}");
            let dm_a = DensityMatrix::from_solver(space, unvectorize(space, &direct), 1.0).unwrap();
            let dm_b = DensityMatrix::from_solver(space, unvectorize(space, &krylov), 1.0).unwrap();
            assert!(dm_a.trace_distance(&dm_b) < 1e-8);
        }
    }
}
