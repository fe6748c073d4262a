//! Output-field measurement model and trace-ensemble estimators.
//!
//! Intracavity statistics map to measured per-bin power statistics
//! through the dimensionless per-bin signal power p = κ_ext ΔT ⟨n⟩ and
//! an amplifier chain with gain 𝒢 and quadrature variance σ² (vacuum
//! units, σ² ≥ 1/4). σ² = 0 selects the idealised noise-free chain with
//! no amplifier contribution at all. The two parameterisations of the
//! added noise are bridged by n_amp = 2σ²/(κ_ext ΔT).
//!
//! Synthetic trace ensembles draw per-bin quadratures from a displaced
//! Gaussian matched to the first two moments of the power; the true
//! near-critical state is non-Gaussian, so synthesis is a stated
//! approximation faithful exactly at the order the estimators use.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{number_autocorrelation, DensityMatrix, ObservableRecord};
use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;

/// Amplification-chain and acquisition-window description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementModel {
    /// Effective chain gain 𝒢 (dimensionless, cancels in precisions).
    pub gain: f64,
    /// Amplifier quadrature variance σ² in vacuum units (vacuum = 1/4);
    /// 0 selects the idealised noise-free chain.
    pub sigma2: f64,
    /// External coupling rate (rad/s).
    pub kappa_ext: f64,
    /// Integration bin ΔT (s).
    pub delta_t: f64,
    /// Total trace length T (s).
    pub total_time: f64,
    /// Start of the steady-state averaging window (s).
    pub j_ss_time: f64,
}

impl MeasurementModel {
    pub fn new(
        gain: f64,
        sigma2: f64,
        kappa_ext: f64,
        delta_t: f64,
        total_time: f64,
        j_ss_time: f64,
    ) -> Result<Self> {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::InvalidParameter(format!("gain must be positive, got {gain}")));
        }
        if sigma2 != 0.0 && !(sigma2 >= 0.25) {
            return Err(Error::InvalidNoise(sigma2));
        }
        if !(delta_t > 0.0) {
            return Err(Error::InvalidParameter("delta_t must be positive".into()));
        }
        if total_time < delta_t {
            return Err(Error::InvalidParameter("total_time must cover at least one bin".into()));
        }
        if !(j_ss_time < total_time) {
            return Err(Error::InvalidParameter("j_ss_time must lie inside the trace".into()));
        }
        if !(kappa_ext > 0.0) {
            return Err(Error::InvalidParameter("kappa_ext must be positive".into()));
        }
        Ok(Self { gain, sigma2, kappa_ext, delta_t, total_time, j_ss_time })
    }

    /// Idealised noise-free chain (n_amp = 0, 𝒢 = 1) with the
    /// steady-state acquisition defaults.
    pub fn ideal(kappa_ext: f64) -> Self {
        Self::new(1.0, 0.0, kappa_ext, 1.5e-6, 69e-6, 15e-6).unwrap()
    }

    /// Steady-state acquisition defaults (ΔT = 1.5 µs, T = 69 µs,
    /// steady window from 15 µs) with an explicit amplifier variance.
    pub fn steady_defaults(kappa_ext: f64, sigma2: f64) -> Result<Self> {
        Self::new(1.0, sigma2, kappa_ext, 1.5e-6, 69e-6, 15e-6)
    }

    /// Fast-acquisition defaults for dynamics (ΔT = 250 ns).
    pub fn dynamics_defaults(kappa_ext: f64, sigma2: f64) -> Result<Self> {
        Self::new(1.0, sigma2, kappa_ext, 250e-9, 69e-6, 15e-6)
    }

    /// Same model with σ² chosen to realise a given added-photon number.
    pub fn with_n_amp(&self, n_amp: f64) -> Result<Self> {
        let sigma2 = 0.5 * n_amp * self.kappa_ext * self.delta_t;
        Self::new(self.gain, sigma2, self.kappa_ext, self.delta_t, self.total_time, self.j_ss_time)
    }

    /// Added-photon-number form of the amplifier noise.
    pub fn n_amp(&self) -> f64 {
        2.0 * self.sigma2 / (self.kappa_ext * self.delta_t)
    }

    pub fn is_ideal(&self) -> bool {
        self.sigma2 == 0.0
    }

    /// Number of integration bins J = ⌊T/ΔT⌋.
    pub fn bins(&self) -> usize {
        // guard against 3e-6/1e-6 = 2.999... style rounding
        (self.total_time / self.delta_t + 1e-9).floor() as usize
    }

    /// First bin index inside the steady-state window.
    pub fn j_ss_index(&self) -> usize {
        (self.j_ss_time / self.delta_t - 1e-9).ceil().max(0.0) as usize
    }

    /// Number of bins averaged for steady-state quantities.
    pub fn steady_bins(&self) -> usize {
        self.bins().saturating_sub(self.j_ss_index()).max(1)
    }
}

/// First two moments of the measured per-bin output power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerMoments {
    pub n_out_mean: f64,
    pub n_out_var: f64,
}

/// Map intracavity moments to measured output-power moments.
///
/// With p = κ_ext ΔT ⟨n⟩ and Δp² = s (κ_ext ΔT)² Δn² (s the
/// variance-reduction factor from temporal averaging within ΔT):
/// ⟨N⟩ = 𝒢 (p + 2σ²) and ΔN² = 𝒢² (Δp² + 4σ²p + 4σ⁴ − 1/4); the last
/// term vanishes for a vacuum-limited amplifier. The ideal chain maps
/// ⟨N⟩ = 𝒢 p, ΔN² = 𝒢² Δp².
pub fn output_moments(
    obs: &ObservableRecord,
    autocorr_scale: f64,
    model: &MeasurementModel,
) -> Result<PowerMoments> {
    if !(autocorr_scale > 0.0 && autocorr_scale <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "autocorr_scale must lie in (0, 1], got {autocorr_scale}"
        )));
    }
    if model.sigma2 != 0.0 && model.sigma2 < 0.25 {
        return Err(Error::InvalidNoise(model.sigma2));
    }
    let c = model.kappa_ext * model.delta_t;
    let p = c * obs.n_mean;
    let dp2 = autocorr_scale * c * c * obs.n_var;
    let g = model.gain;
    if model.is_ideal() {
        return Ok(PowerMoments { n_out_mean: g * p, n_out_var: g * g * dp2 });
    }
    let s2 = model.sigma2;
    Ok(PowerMoments {
        n_out_mean: g * (p + 2.0 * s2),
        n_out_var: g * g * (dp2 + 4.0 * s2 * p + 4.0 * s2 * s2 - 0.25),
    })
}

/// Precision of the discretized estimator from model moments at two
/// adjacent detunings: 𝒫 = [2|⟨N_a⟩−⟨N_b⟩| / ((ΔN_a+ΔN_b) ε)]².
/// A flat signal carries no information and reports 0.
pub fn model_precision_pair(pm_a: &PowerMoments, pm_b: &PowerMoments, epsilon: f64) -> f64 {
    let diff = (pm_a.n_out_mean - pm_b.n_out_mean).abs();
    if diff == 0.0 {
        return 0.0;
    }
    let sd = pm_a.n_out_var.max(0.0).sqrt() + pm_b.n_out_var.max(0.0).sqrt();
    if sd == 0.0 {
        return f64::INFINITY;
    }
    let err = sd * epsilon.abs() / (2.0 * diff);
    1.0 / (err * err)
}

/// Which denominator the precision error-propagation uses for the
/// standard-deviation term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorForm {
    /// (ΔN_a − ΔN_b)², as printed in the source analysis.
    #[default]
    DifferenceDenominator,
    /// (ΔN_a + ΔN_b)², matching the estimator itself.
    SumDenominator,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EstimatorOptions {
    /// Uncertainty of the detuning step (rad/s); 0 for a simulated step.
    pub err_epsilon: f64,
    pub error_form: ErrorForm,
}

/// Error-propagation uncertainty of a per-bin pair precision with
/// M-trace sample moments: Err[⟨N⟩] = √(ΔN²/M), Err[ΔN] = √(ΔN²/(2M)).
pub fn precision_error_pair(
    pm_a: &PowerMoments,
    pm_b: &PowerMoments,
    epsilon: f64,
    m_a: u64,
    m_b: u64,
    opts: &EstimatorOptions,
) -> f64 {
    let p = model_precision_pair(pm_a, pm_b, epsilon);
    if p == 0.0 {
        return 0.0;
    }
    let sd_a = pm_a.n_out_var.max(0.0).sqrt();
    let sd_b = pm_b.n_out_var.max(0.0).sqrt();
    let err_mean2 = pm_a.n_out_var / m_a as f64 + pm_b.n_out_var / m_b as f64;
    let err_sd2 = pm_a.n_out_var / (2.0 * m_a as f64) + pm_b.n_out_var / (2.0 * m_b as f64);
    let mean_diff = pm_a.n_out_mean - pm_b.n_out_mean;
    let sd_den = match opts.error_form {
        ErrorForm::DifferenceDenominator => sd_a - sd_b,
        ErrorForm::SumDenominator => sd_a + sd_b,
    };
    let mut sum = err_mean2 / (mean_diff * mean_diff);
    sum += if sd_den == 0.0 { f64::INFINITY } else { err_sd2 / (sd_den * sd_den) };
    if opts.err_epsilon != 0.0 {
        sum += (opts.err_epsilon / epsilon) * (opts.err_epsilon / epsilon);
    }
    2.0 * p * sum.sqrt()
}

/// Variance-reduction factor from boxcar averaging of the photon-number
/// fluctuations within one bin:
/// s = (2/ΔT²) ∫₀^ΔT (ΔT−τ) C(τ)/C(0) dτ, clamped to (0, 1].
pub fn autocorr_scale_factor(
    liou: &Liouvillian,
    rho_ss: &DensityMatrix,
    model: &MeasurementModel,
) -> Result<f64> {
    const SEGMENTS: usize = 256;
    let dt = model.delta_t;
    let taus: Vec<f64> = (0..=SEGMENTS).map(|k| dt * k as f64 / SEGMENTS as f64).collect();
    let c = number_autocorrelation(liou, rho_ss, &taus)?;
    Ok(scale_factor_from_samples(&taus, &c, dt))
}

/// Simpson evaluation of the triangular-kernel integral on uniform
/// correlation samples; exposed so quadrature can be checked directly.
pub fn scale_factor_from_samples(taus: &[f64], c: &[f64], delta_t: f64) -> f64 {
    assert!(taus.len() == c.len() && taus.len() >= 3 && taus.len() % 2 == 1);
    let c0 = c[0];
    if c0 <= 0.0 {
        return 1.0;
    }
    let h = taus[1] - taus[0];
    let integrand: Vec<f64> = taus.iter().zip(c).map(|(t, ci)| (delta_t - t) * ci).collect();
    let mut integral = integrand[0] + integrand[integrand.len() - 1];
    for (k, v) in integrand.iter().enumerate().skip(1).take(integrand.len() - 2) {
        integral += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    integral *= h / 3.0;
    let s = 2.0 * integral / (delta_t * delta_t * c0);
    s.clamp(1e-12, 1.0)
}

/// Provenance of a trace ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceSeed {
    Seeded(u64),
    Ingested,
}

/// M×J grid of integrated (I, Q) samples with acquisition metadata.
#[derive(Clone, Debug)]
pub struct TraceEnsemble {
    m: usize,
    j: usize,
    i_samples: Vec<f64>,
    q_samples: Vec<f64>,
    model: MeasurementModel,
    seed: TraceSeed,
}

impl TraceEnsemble {
    pub fn traces(&self) -> usize {
        self.m
    }

    pub fn bins(&self) -> usize {
        self.j
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }

    pub fn seed(&self) -> TraceSeed {
        self.seed
    }

    pub fn i_sample(&self, trace: usize, bin: usize) -> f64 {
        self.i_samples[trace * self.j + bin]
    }

    pub fn q_sample(&self, trace: usize, bin: usize) -> f64 {
        self.q_samples[trace * self.j + bin]
    }

    /// Scale every sample by √c (gain recalibration of the records).
    pub fn rescaled(&self, c: f64) -> TraceEnsemble {
        let root = c.sqrt();
        TraceEnsemble {
            m: self.m,
            j: self.j,
            i_samples: self.i_samples.iter().map(|v| v * root).collect(),
            q_samples: self.q_samples.iter().map(|v| v * root).collect(),
            model: self.model,
            seed: self.seed,
        }
    }

    /// Build directly from sample arrays (row-major m×j).
    pub fn from_samples(
        i_samples: Vec<f64>,
        q_samples: Vec<f64>,
        m: usize,
        j: usize,
        model: MeasurementModel,
        seed: TraceSeed,
    ) -> Result<Self> {
        if m == 0 || j == 0 {
            return Err(Error::ShapeError("ensemble must hold at least one trace and bin".into()));
        }
        if i_samples.len() != m * j || q_samples.len() != m * j {
            return Err(Error::ShapeError(format!(
                "expected {}x{} samples, got {} / {}",
                m,
                j,
                i_samples.len(),
                q_samples.len()
            )));
        }
        Ok(Self { m, j, i_samples, q_samples, model, seed })
    }
}

/// Displaced-Gaussian parameters matching target power moments:
/// ⟨N⟩ = |μ|² + 2v and Var(N) = 4v(|μ|² + v).
fn gaussian_parameters(pm: &PowerMoments) -> Result<(f64, f64)> {
    if pm.n_out_var < 0.0 || pm.n_out_mean < 0.0 {
        return Err(Error::MomentInfeasible { mean: pm.n_out_mean, var: pm.n_out_var });
    }
    let disc = pm.n_out_mean * pm.n_out_mean - pm.n_out_var;
    if disc < 0.0 {
        return Err(Error::MomentInfeasible { mean: pm.n_out_mean, var: pm.n_out_var });
    }
    let mu2 = disc.sqrt();
    let v = 0.5 * (pm.n_out_mean - mu2);
    Ok((mu2, v.max(0.0)))
}

/// Forward model standing in for the digitizer output: per bin draws
/// I ~ N(μ, v), Q ~ N(0, v). Deterministic under a fixed seed; each
/// trace runs on its own counter stream so generation order is free.
pub fn synthesize_traces(
    pm: &PowerMoments,
    model: &MeasurementModel,
    m: usize,
    seed: u64,
) -> Result<TraceEnsemble> {
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one trace".into()));
    }
    let (mu2, v) = gaussian_parameters(pm)?;
    let mu = mu2.sqrt();
    let sd = v.sqrt();
    let j = model.bins();
    let mut i_samples = vec![0.0; m * j];
    let mut q_samples = vec![0.0; m * j];
    for trace in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trace as u64);
        for bin in 0..j {
            let zi: f64 = StandardNormal.sample(&mut rng);
            let zq: f64 = StandardNormal.sample(&mut rng);
            i_samples[trace * j + bin] = mu + sd * zi;
            q_samples[trace * j + bin] = sd * zq;
        }
    }
    TraceEnsemble::from_samples(i_samples, q_samples, m, j, *model, TraceSeed::Seeded(seed))
}

/// Per-bin sample moments ⟨N_j⟩ = (1/M) Σ (I²+Q²), ΔN_j² = ⟨N_j²⟩ − ⟨N_j⟩².
pub fn estimate_moments(te: &TraceEnsemble) -> Result<Vec<PowerMoments>> {
    if te.traces() < 2 {
        return Err(Error::InvalidParameter("need at least two traces to estimate moments".into()));
    }
    let m = te.traces() as f64;
    let mut out = Vec::with_capacity(te.bins());
    for bin in 0..te.bins() {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for trace in 0..te.traces() {
            let n = te.i_sample(trace, bin).powi(2) + te.q_sample(trace, bin).powi(2);
            s1 += n;
            s2 += n * n;
        }
        let mean = s1 / m;
        out.push(PowerMoments { n_out_mean: mean, n_out_var: (s2 / m - mean * mean).max(0.0) });
    }
    Ok(out)
}

/// Result of the pairwise precision estimator.
#[derive(Clone, Debug)]
pub struct PrecisionEstimate {
    /// 𝒫_j per bin.
    pub per_bin: Vec<f64>,
    /// Error-propagation uncertainty per bin.
    pub per_bin_err: Vec<f64>,
    /// Mean of 𝒫_j over the steady-state window.
    pub aggregate: f64,
    /// ≈ Err[𝒫_{j_ss}]/√J_ss.
    pub aggregate_err: f64,
    /// Bins where ⟨N_a⟩ = ⟨N_b⟩ exactly (no signal; 𝒫 reported 0).
    pub zero_signal_bins: Vec<usize>,
    pub j_ss_index: usize,
}

/// Discretized error-propagation precision from two ensembles measured
/// at detunings a step ε apart.
pub fn estimate_precision_pair(
    te_a: &TraceEnsemble,
    te_b: &TraceEnsemble,
    epsilon: f64,
    opts: &EstimatorOptions,
) -> Result<PrecisionEstimate> {
    if epsilon == 0.0 {
        return Err(Error::InvalidParameter("detuning step must be nonzero".into()));
    }
    if te_a.bins() != te_b.bins() || te_a.model().delta_t != te_b.model().delta_t {
        return Err(Error::ShapeError("ensembles must share the bin structure".into()));
    }
    let ma = estimate_moments(te_a)?;
    let mb = estimate_moments(te_b)?;
    let mut per_bin = Vec::with_capacity(ma.len());
    let mut per_bin_err = Vec::with_capacity(ma.len());
    let mut zero_signal_bins = Vec::new();
    for (bin, (a, b)) in ma.iter().zip(&mb).enumerate() {
        if a.n_out_mean == b.n_out_mean {
            zero_signal_bins.push(bin);
            per_bin.push(0.0);
            per_bin_err.push(0.0);
            continue;
        }
        per_bin.push(model_precision_pair(a, b, epsilon));
        per_bin_err.push(precision_error_pair(
            a,
            b,
            epsilon,
            te_a.traces() as u64,
            te_b.traces() as u64,
            opts,
        ));
    }
    let model = te_a.model();
    let j_ss = model.j_ss_index().min(per_bin.len().saturating_sub(1));
    let window = &per_bin[j_ss..];
    let aggregate = window.iter().sum::<f64>() / window.len() as f64;
    let aggregate_err = per_bin_err[j_ss] / (window.len() as f64).sqrt();
    Ok(PrecisionEstimate { per_bin, per_bin_err, aggregate, aggregate_err, zero_signal_bins, j_ss_index: j_ss })
}

/// Serialize an ensemble to the trace CSV schema:
/// `# m=<int> j=<int> dt=<float_s> gain=<float> sigma2=<float>` then m
/// rows of I_1,Q_1,…,I_j,Q_j with shortest round-trip decimals.
pub fn format_traces(te: &TraceEnsemble) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# m={} j={} dt={} gain={} sigma2={}",
        te.traces(),
        te.bins(),
        te.model().delta_t,
        te.model().gain,
        te.model().sigma2
    );
    for trace in 0..te.traces() {
        let mut first = true;
        for bin in 0..te.bins() {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{},{}", te.i_sample(trace, bin), te.q_sample(trace, bin));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn export_traces(te: &TraceEnsemble, path: &Path) -> Result<()> {
    std::fs::write(path, format_traces(te))?;
    Ok(())
}

/// Parse a trace file against the CSV schema. Acquisition metadata in
/// the header overrides `model`; rates and window times come from the
/// caller's model.
pub fn ingest_traces(path: &Path, model: &MeasurementModel) -> Result<TraceEnsemble> {
    let text = std::fs::read_to_string(path)?;
    parse_traces(&text, model)
}

pub fn parse_traces(text: &str, model: &MeasurementModel) -> Result<TraceEnsemble> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::ParseError { line: 1, message: "empty trace file".into() })?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::ParseError { line: 1, message: "missing `#` header".into() })?;
    let mut m = None;
    let mut j = None;
    let mut dt = None;
    let mut gain = None;
    let mut sigma2 = None;
    for tok in header.split_whitespace() {
        let (key, value) = tok.split_once('=').ok_or_else(|| Error::ParseError {
            line: 1,
            message: format!("malformed header token `{tok}`"),
        })?;
        fn bad(key: &str) -> Error {
            Error::ParseError { line: 1, message: format!("bad value for `{key}`") }
        }
        match key {
            "m" => m = Some(value.parse::<usize>().map_err(|_| bad(key))?),
            "j" => j = Some(value.parse::<usize>().map_err(|_| bad(key))?),
            "dt" => dt = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "gain" => gain = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "sigma2" => sigma2 = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            other => {
                return Err(Error::ParseError { line: 1, message: format!("unknown header key `{other}`") })
            }
        }
    }
    let missing = |k: &str| Error::ParseError { line: 1, message: format!("header missing `{k}`") };
    let m = m.ok_or_else(|| missing("m"))?;
    let j = j.ok_or_else(|| missing("j"))?;
    let dt = dt.ok_or_else(|| missing("dt"))?;
    let gain = gain.ok_or_else(|| missing("gain"))?;
    let sigma2 = sigma2.ok_or_else(|| missing("sigma2"))?;

    let total_time = dt * j as f64;
    let file_model = MeasurementModel::new(
        gain,
        sigma2,
        model.kappa_ext,
        dt,
        total_time,
        model.j_ss_time.min(total_time - dt).max(0.0),
    )?;

    let mut i_samples = Vec::with_capacity(m * j);
    let mut q_samples = Vec::with_capacity(m * j);
    let mut rows = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 * j {
            return Err(Error::ShapeError(format!(
                "line {}: expected {} fields, got {}",
                lineno + 1,
                2 * j,
                fields.len()
            )));
        }
        for (k, tok) in fields.iter().enumerate() {
            let v: f64 = tok.trim().parse().map_err(|_| Error::ParseError {
                line: lineno + 1,
                message: format!("bad float `{tok}`"),
            })?;
            if k % 2 == 0 {
                i_samples.push(v);
            } else {
                q_samples.push(v);
            }
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::ShapeError(format!("header declares m={m} but file holds {rows} rows")));
    }
    TraceEnsemble::from_samples(i_samples, q_samples, m, j, file_model, TraceSeed::Ingested)
}
