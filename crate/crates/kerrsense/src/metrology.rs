//! Detuning sweeps under the two thermodynamic-limit scalings, the
//! error-propagation precision, and the precision-scaling exponent.
//!
//! L plays the role of system size: scaling (I) keeps the pump fixed
//! and divides the Kerr nonlinearity by L, scaling (II) keeps the Kerr
//! fixed and multiplies detuning, pump, and loss by L. Curves are
//! always parameterised by the reduced detuning δ̃, which coincides
//! with the physical detuning under scaling (I).

use rayon::prelude::*;

use crate::calibration::meanfield_n;
use crate::dynamics::{observables, steady_state_with, ObservableRecord, SteadyStateOptions};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, PhysicalParams};
use crate::liouvillian::liouvillian;
use crate::measurement::{
    model_precision_pair, output_moments, precision_error_pair,EstimatorOptions, MeasurementModel,
};

/// Thermodynamic-limit parameter rescaling family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scaling {
    I,
    II,
}

impl std::str::FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Scaling::I),
            "II" | "2" => Ok(Scaling::II),
            other => Err(Error::InvalidParameter(format!("unknown scaling `{other}`"))),
        }
    }
}

impl std::fmt::Display for Scaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scaling::I => write!(f, "I"),
            Scaling::II => write!(f, "II"),
        }
    }
}

/// Reduced (tilde) parameters plus the system-size knob L.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedParams {
    pub tilde_delta: f64,
    pub tilde_g: f64,
    pub tilde_u: f64,
    pub tilde_kappa: f64,
    pub l: f64,
    pub scaling: Scaling,
}

impl ReducedParams {
    pub fn new(
        tilde_delta: f64,
        tilde_g: f64,
        tilde_u: f64,
        tilde_kappa: f64,
        l: f64,
        scaling: Scaling,
    ) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter(format!("L must be positive, got {l}")));
        }
        if !(tilde_kappa > 0.0) {
            return Err(Error::InvalidParameter("tilde_kappa must be positive".into()));
        }
        Ok(Self { tilde_delta, tilde_g, tilde_u, tilde_kappa, l, scaling })
    }

    pub fn with_tilde_delta(&self, tilde_delta: f64) -> Self {
        Self { tilde_delta, ..*self }
    }

    /// Physical parameters of this operating point; κ_ext = κ/2
    /// (overcoupled hanger).
    pub fn to_physical(&self) -> Result<PhysicalParams> {
        let (delta, g, u, kappa) = match self.scaling {
            Scaling::I => (self.tilde_delta, self.tilde_g, self.tilde_u / self.l, self.tilde_kappa),
            Scaling::II => (
                self.tilde_delta * self.l,
                self.tilde_g * self.l,
                self.tilde_u,
                self.tilde_kappa * self.l,
            ),
        };
        PhysicalParams::overcoupled(delta, g, u, kappa)
    }

    /// Critical detuning in reduced units.
    pub fn tilde_delta_c(&self) -> Result<f64> {
        critical_detuning(self.tilde_g, self.tilde_kappa)
    }
}

/// Critical detuning δ_c = −√(G² − κ²) of the second-order transition.
pub fn critical_detuning(g: f64, kappa: f64) -> Result<f64> {
    if g <= kappa {
        return Err(Error::NoTransition { g, kappa });
    }
    Ok(-(g * g - kappa * kappa).sqrt())
}

/// Fock truncation heuristic: at least 4 n̄_mf + 20 levels, clamped to
/// the configured window, so the tail population stays below the
/// truncation-leak tolerance.
pub fn suggested_dim(pp: &PhysicalParams, floor: usize, cap: usize) -> usize {
    let n_mf = meanfield_n(pp);
    let by_meanfield = if n_mf.is_finite() { (4.0 * n_mf + 20.0).ceil() as usize } else { cap };
    by_meanfield.max(floor).max(2).min(cap)
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub dim_floor: usize,
    pub dim_cap: usize,
    pub residual_tol: f64,
    pub leak_tol: f64,
    /// Trace count assumed when predicting statistical error bars.
    pub m_traces: u64,
    pub estimator: EstimatorOptions,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            dim_floor: 32,
            dim_cap: 512,
            residual_tol: 1e-9,
            leak_tol: 1e-6,
            m_traces: 400_000,
            estimator: EstimatorOptions::default(),
            parallel: true,
        }
    }
}

/// A sweep point that could not be solved; its entries stay missing
/// (NaN), never fabricated.
#[derive(Clone, Debug)]
pub struct SweepFailure {
    pub index: usize,
    pub message: String,
}

/// Per-detuning record of the swept observables and precision.
#[derive(Clone, Debug)]
pub struct PrecisionCurve {
    /// Reduced detunings δ̃ (rad/s), ascending.
    pub detunings: Vec<f64>,
    pub n_mean: Vec<f64>,
    pub n_var: Vec<f64>,
    /// Central second finite difference of ⟨n⟩ (endpoints 0).
    pub d2n: Vec<f64>,
    /// Pairwise precision assigned to the left detuning of each pair
    /// (last entry 0: no pair).
    pub precision: Vec<f64>,
    pub precision_err: Vec<f64>,
    pub delta_max: f64,
    pub p_max: f64,
    pub failures: Vec<SweepFailure>,
}

impl PrecisionCurve {
    pub fn is_missing(&self, index: usize) -> bool {
        self.n_mean[index].is_nan()
    }
}

/// Solve the steady state across a uniform reduced-detuning grid and
/// assemble photon-number, derivative, and precision records.
pub fn sweep(
    rp: &ReducedParams,
    tilde_delta_grid: &[f64],
    model: &MeasurementModel,
    opts: &SweepOptions,
) -> Result<PrecisionCurve> {
    if tilde_delta_grid.len() < 3 {
        return Err(Error::InvalidParameter("grid needs at least 3 points".into()));
    }
    let eps = tilde_delta_grid[1] - tilde_delta_grid[0];
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("grid must be ascending".into()));
    }
    for w in tilde_delta_grid.windows(2) {
        if ((w[1] - w[0]) - eps).abs() > 1e-9 * eps {
            return Err(Error::InvalidParameter("grid spacing must be uniform".into()));
        }
    }

    let solve_point = |&tilde_delta: &f64| -> std::result::Result<ObservableRecord, String> {
        let pp = rp.with_tilde_delta(tilde_delta).to_physical().map_err(|e| e.to_string())?;
        let ss_opts = SteadyStateOptions { residual_tol: opts.residual_tol, leak_tol: opts.leak_tol };
        let mut dim = suggested_dim(&pp, opts.dim_floor, opts.dim_cap);
        loop {
            let space = FockSpace::new(dim).map_err(|e| e.to_string())?;
            let liou = liouvillian(&pp, space);
            match steady_state_with(&liou, &ss_opts) {
                Ok(ss) => return Ok(observables(&ss)),
                Err(Error::TruncationLeak { .. }) if dim < opts.dim_cap => {
                    dim = (dim * 2).min(opts.dim_cap);
                }
                Err(e) => return Err(e.to_string()),
            }
        }
    };

    let points: Vec<std::result::Result<ObservableRecord, String>> = if opts.parallel {
        tilde_delta_grid.par_iter().map(solve_point).collect()
    } else {
        tilde_delta_grid.iter().map(solve_point).collect()
    };

    let k = tilde_delta_grid.len();
    let mut n_mean = vec![f64::NAN; k];
    let mut n_var = vec![f64::NAN; k];
    let mut failures = Vec::new();
    let mut moments = vec![None; k];
    for (i, res) in points.iter().enumerate() {
        match res {
            Ok(obs) => {
                n_mean[i] = obs.n_mean;
                n_var[i] = obs.n_var;
                moments[i] = Some(output_moments(obs, 1.0, model)?);
            }
            Err(msg) => failures.push(SweepFailure { index: i, message: msg.clone() }),
        }
    }

    let mut d2n = vec![0.0; k];
    for i in 1..k - 1 {
        d2n[i] = (n_mean[i - 1] - 2.0 * n_mean[i] + n_mean[i + 1]) / (eps * eps);
    }

    let steady_bins = model.steady_bins() as f64;
    let mut precision = vec![0.0; k];
    let mut precision_err = vec![0.0; k];
    for i in 0..k - 1 {
        match (&moments[i], &moments[i + 1]) {
            (Some(a), Some(b)) => {
                precision[i] = model_precision_pair(a, b, eps);
                precision_err[i] =
                    precision_error_pair(a, b, eps, opts.m_traces, opts.m_traces, &opts.estimator)
                        / steady_bins.sqrt();
            }
            _ => {
                precision[i] = f64::NAN;
                precision_err[i] = f64::NAN;
            }
        }
    }

    let mut best = (0usize, 0.0f64);
    for (i, p) in precision.iter().enumerate() {
        if p.is_finite() && *p > best.1 {
            best = (i, *p);
        }
    }
    Ok(PrecisionCurve {
        detunings: tilde_delta_grid.to_vec(),
        n_mean,
        n_var,
        d2n,
        precision,
        precision_err,
        delta_max: tilde_delta_grid[best.0],
        p_max: best.1,
        failures,
    })
}

/// Least-squares slope of log p vs log L with its standard error.
pub fn fit_beta(l_values: &[f64], p_max_values: &[f64]) -> Result<(f64, f64)> {
    if l_values.len() != p_max_values.len() || l_values.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 aligned pairs, got {}/{}",
            l_values.len(),
            p_max_values.len()
        )));
    }
    if l_values.iter().chain(p_max_values).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::DegenerateFit("all pairs must be positive and finite".into()));
    }
    let x: Vec<f64> = l_values.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = p_max_values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("zero variance in log L".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(&y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let stderr = (ssr.max(0.0) / (n - 2.0).max(1.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// Per-L record of where the precision peaks versus the critical point,
/// both in reduced units.
pub fn delta_max_gap(
    curves: &[PrecisionCurve],
    rps: &[ReducedParams],
) -> Result<Vec<(f64, f64, f64)>> {
    if curves.len() != rps.len() {
        return Err(Error::InvalidParameter("curves and parameter sets must align".into()));
    }
    curves
        .iter()
        .zip(rps)
        .map(|(c, rp)| Ok((rp.l, c.delta_max, rp.tilde_delta_c()?)))
        .collect()
}
