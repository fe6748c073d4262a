//! Batch-run orchestration: resolves a [`RunConfig`] into concrete
//! parameters, distributes sweep points across a worker pool, and
//! writes CSV artifacts, a resolved-config manifest, and a per-point
//! error record. Identical (config, seed) pairs produce byte-identical
//! CSV output regardless of the thread count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::calibration::{
    self, eigenmode_k0, extract_g, flux_resonance, kerr_from_mode, meanfield_n, s21_fit, s21_model,
    DeviceModel, ResonanceFit,
};
use crate::classical::{classical_precision, classical_precision_timed, ClassicalSetup};
use crate::config::{Command, RunConfig};
use crate::dynamics::{observables, steady_state_with, SteadyStateOptions};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, PhysicalParams};
use crate::liouvillian::liouvillian;
use crate::measurement::{
    estimate_precision_pair, model_precision_pair, output_moments, synthesize_traces,
    MeasurementModel, PowerMoments, TraceEnsemble,
};
use crate::metrology::{
    critical_detuning, fit_beta, suggested_dim, sweep, PrecisionCurve, ReducedParams, Scaling,
    SweepOptions,
};
use crate::units::{ghz, khz, to_hz};

/// Files written by a run plus the count of per-point failures that
/// were recorded rather than aborted on.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub point_failures: usize,
}

/// Environment variable consulted for the default output directory.
pub const OUTPUT_DIR_ENV: &str = "KERRSENSE_OUT";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("kerrsense_out"))
}

/// Execute one configured run.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let out_dir = config.output_dir.clone().unwrap_or_else(default_output_dir);
    std::fs::create_dir_all(&out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;

    let mut ctx = RunContext {
        config,
        out_dir,
        summary: RunSummary::default(),
        manifest: vec![
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ("command".into(), config.command.to_string()),
            ("seed".into(), config.seed.to_string()),
            ("threads".into(), config.threads.to_string()),
        ],
        errors: Vec::new(),
    };
    for (k, v) in config.entries() {
        ctx.note(&format!("config.{k}"), v);
    }

    pool.install(|| match config.command {
        Command::Sweep => run_sweep(&mut ctx),
        Command::Scaling => run_scaling(&mut ctx),
        Command::Precision => run_precision(&mut ctx),
        Command::Traces => run_traces(&mut ctx),
        Command::Calibrate => run_calibrate(&mut ctx),
        Command::Classical => run_classical(&mut ctx),
    })?;

    ctx.write_errors_csv()?;
    ctx.write_manifest()?;
    Ok(ctx.summary)
}

struct RunContext<'a> {
    config: &'a RunConfig,
    out_dir: PathBuf,
    summary: RunSummary,
    manifest: Vec<(String, String)>,
    errors: Vec<(String, String)>,
}

impl RunContext<'_> {
    fn note(&mut self, key: &str, value: impl Into<String>) {
        self.manifest.push((key.to_string(), value.into()));
    }

    fn record_error(&mut self, location: String, message: String) {
        self.errors.push((location, message));
        self.summary.point_failures += 1;
    }

    fn write_file(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)?;
        self.summary.files.push(path.clone());
        Ok(path)
    }

    fn write_manifest(&mut self) -> Result<()> {
        let mut entries = self.manifest.clone();
        entries.sort();
        let mut text = String::new();
        for (k, v) in entries {
            let _ = writeln!(text, "{k} = {v}");
        }
        self.write_file("manifest", &text)?;
        Ok(())
    }

    fn write_errors_csv(&mut self) -> Result<()> {
        let mut text = String::from("location,error\n");
        for (loc, msg) in &self.errors {
            let _ = writeln!(text, "{},{}", loc, msg.replace(',', ";").replace('\n', " "));
        }
        self.write_file("errors.csv", &text)?;
        Ok(())
    }

    fn maybe_plot(&mut self, name: &str, xs: &[f64], ys: &[f64], x_label: &str, y_label: &str) -> Result<()> {
        if self.config.plot {
            let svg = render_svg(xs, ys, x_label, y_label);
            self.write_file(name, &svg)?;
        }
        Ok(())
    }
}

/// One operating point plus its default detuning window, resolved from
/// a preset row and/or explicit keys.
struct ResolvedPoint {
    g: f64,
    u: f64,
    kappa: f64,
    kappa_ext: f64,
    window: (f64, f64),
}

fn resolve_point(config: &RunConfig) -> Result<ResolvedPoint> {
    let preset = match config.text("preset") {
        Some(name) => Some(
            calibration::operating_point(name)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown preset `{name}`")))?,
        ),
        None => None,
    };
    let from_preset = |f: fn(&calibration::OperatingPoint) -> f64, key: &str| -> Result<f64> {
        config
            .angular(key)
            .or_else(|| preset.as_ref().map(f))
            .ok_or_else(|| Error::MissingKey(key.into()))
    };
    let g = from_preset(|p| khz(p.g_khz), "g")?;
    let u = from_preset(|p| khz(p.u_khz), "u")?;
    let kappa = from_preset(|p| khz(p.kappa_khz), "kappa")?;
    let kappa_ext = config.angular("kappa_ext").unwrap_or(kappa / 2.0);
    let window = match (config.angular("delta_start"), config.angular("delta_stop"), &preset) {
        (Some(a), Some(b), _) => (a, b),
        (_, _, Some(p)) => p.delta_window(),
        _ => return Err(Error::MissingKey("delta_start/delta_stop".into())),
    };
    Ok(ResolvedPoint { g, u, kappa, kappa_ext, window })
}

fn resolve_model(config: &RunConfig, kappa_ext: f64) -> Result<MeasurementModel> {
    let delta_t = config.seconds("delta_t").unwrap_or(1.5e-6);
    let total_time = config.seconds("total_time").unwrap_or(69e-6);
    let j_ss_time = config.seconds("jss_time").unwrap_or(15e-6);
    let gain = config.float("gain").unwrap_or(1.0);
    let sigma2 = if let Some(s2) = config.float("sigma2") {
        s2
    } else if let Some(n_amp) = config.float("n_amp") {
        0.5 * n_amp * kappa_ext * delta_t
    } else {
        0.0
    };
    MeasurementModel::new(gain, sigma2, kappa_ext, delta_t, total_time, j_ss_time)
}

fn resolve_sweep_options(config: &RunConfig) -> SweepOptions {
    let mut opts = SweepOptions::default();
    if let Some(v) = config.int("dim_floor") {
        opts.dim_floor = v.max(2) as usize;
    }
    if let Some(v) = config.int("dim_cap") {
        opts.dim_cap = v.max(2) as usize;
    }
    if let Some(v) = config.int("m_traces") {
        opts.m_traces = v.max(2) as u64;
    }
    if let Some(v) = config.angular("err_epsilon") {
        opts.estimator.err_epsilon = v;
    }
    opts
}

fn uniform_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let n = points.max(3);
    (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect()
}

fn curve_csv(curve: &PrecisionCurve) -> String {
    let mut text = String::from("delta_hz,n_mean,n_var,d2n,precision,precision_err\n");
    for i in 0..curve.detunings.len() {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            to_hz(curve.detunings[i]),
            curve.n_mean[i],
            curve.n_var[i],
            curve.d2n[i],
            curve.precision[i],
            curve.precision_err[i]
        );
    }
    text
}

fn run_sweep(ctx: &mut RunContext) -> Result<()> {
    let point = resolve_point(ctx.config)?;
    let model = resolve_model(ctx.config, point.kappa_ext)?;
    let opts = resolve_sweep_options(ctx.config);
    let points = ctx.config.int("points").unwrap_or(31).max(3) as usize;
    let grid = uniform_grid(point.window.0, point.window.1, points);

    let rp = ReducedParams::new(0.0, point.g, point.u, point.kappa, 1.0, Scaling::I)?;
    let curve = sweep(&rp, &grid, &model, &opts)?;
    for f in &curve.failures {
        ctx.record_error(format!("delta_hz={}", to_hz(grid[f.index])), f.message.clone());
    }
    ctx.note("resolved.g_hz", to_hz(point.g).to_string());
    ctx.note("resolved.u_hz", to_hz(point.u).to_string());
    ctx.note("resolved.kappa_hz", to_hz(point.kappa).to_string());
    ctx.note("resolved.kappa_ext_hz", to_hz(point.kappa_ext).to_string());
    ctx.note("resolved.n_amp", model.n_amp().to_string());
    ctx.note("resolved.delta_max_hz", to_hz(curve.delta_max).to_string());
    ctx.note("resolved.p_max", curve.p_max.to_string());
    ctx.write_file("curve.csv", &curve_csv(&curve))?;
    ctx.maybe_plot("curve.svg", &curve.detunings, &curve.n_mean, "delta (rad/s)", "n_mean")?;
    Ok(())
}

fn run_scaling(ctx: &mut RunContext) -> Result<()> {
    let config = ctx.config;
    let preset = config.text("preset");
    let (scaling, g_t, u_t, k_t, l_values, window, default_points): (
        Scaling,
        f64,
        f64,
        f64,
        Vec<f64>,
        (f64, f64),
        usize,
    ) = match preset {
        Some("table1") => (
            Scaling::I,
            khz(300.0),
            khz(-9.14),
            khz(72.0),
            calibration::table1().iter().map(|p| p.l).rev().collect(),
            (-crate::units::mhz(0.5), crate::units::mhz(0.25)),
            31,
        ),
        Some("table2") => (
            Scaling::II,
            khz(300.0),
            khz(-9.14),
            khz(72.0),
            calibration::table2().iter().map(|p| p.l).collect(),
            (-crate::units::mhz(0.38), -crate::units::mhz(0.10)),
            29,
        ),
        Some(other) => {
            return Err(Error::InvalidParameter(format!(
                "scaling preset must be `table1` or `table2`, got `{other}`"
            )))
        }
        None => {
            let scaling: Scaling = config
                .text("scaling")
                .ok_or(Error::MissingKey("scaling".into()))?
                .parse()?;
            (
                scaling,
                config.angular("g_tilde").ok_or(Error::MissingKey("g_tilde".into()))?,
                config.angular("u_tilde").ok_or(Error::MissingKey("u_tilde".into()))?,
                config.angular("kappa_tilde").ok_or(Error::MissingKey("kappa_tilde".into()))?,
                config.list("l_values").ok_or(Error::MissingKey("l_values".into()))?.to_vec(),
                (
                    config.angular("delta_start").ok_or(Error::MissingKey("delta_start".into()))?,
                    config.angular("delta_stop").ok_or(Error::MissingKey("delta_stop".into()))?,
                ),
                31,
            )
        }
    };
    let mut l_values = l_values;
    if let Some(ls) = config.list("l_values") {
        l_values = ls.to_vec();
    }
    let points = config.int("points").unwrap_or(default_points as i64).max(3) as usize;
    let grid = uniform_grid(window.0, window.1, points);
    let opts = resolve_sweep_options(config);

    let mut curves = Vec::new();
    let mut rps = Vec::new();
    for &l in &l_values {
        let rp = ReducedParams::new(0.0, g_t, u_t, k_t, l, scaling)?;
        let kappa_ext = config.angular("kappa_ext").unwrap_or(rp.to_physical()?.kappa() / 2.0);
        let model = resolve_model(config, kappa_ext)?;
        let curve = sweep(&rp, &grid, &model, &opts)?;
        for f in &curve.failures {
            ctx.record_error(
                format!("L={l} delta_hz={}", to_hz(grid[f.index])),
                f.message.clone(),
            );
        }
        ctx.write_file(&format!("curve_L{l}.csv"), &curve_csv(&curve))?;
        if ctx.config.plot {
            ctx.maybe_plot(
                &format!("curve_L{l}.svg"),
                &curve.detunings,
                &curve.n_mean,
                "delta (rad/s)",
                "n_mean",
            )?;
        }
        curves.push(curve);
        rps.push(rp);
    }

    let finite: Vec<(f64, f64)> = l_values
        .iter()
        .zip(&curves)
        .filter(|(_, c)| c.p_max > 0.0)
        .map(|(l, c)| (*l, c.p_max))
        .collect();
    let beta_line = if finite.len() >= 3 {
        let ls: Vec<f64> = finite.iter().map(|x| x.0).collect();
        let ps: Vec<f64> = finite.iter().map(|x| x.1).collect();
        match fit_beta(&ls, &ps) {
            Ok((beta, se)) => {
                ctx.note("resolved.beta", format!("{beta}"));
                ctx.note("resolved.beta_stderr", format!("{se}"));
                format!("# beta = {beta} +- {se}\n")
            }
            Err(e) => format!("# beta unavailable: {e}\n"),
        }
    } else {
        "# beta unavailable: fewer than 3 usable points\n".to_string()
    };

    let mut beta_csv = beta_line;
    beta_csv.push_str("L,p_max,delta_max_hz,delta_c_hz\n");
    for (rp, curve) in rps.iter().zip(&curves) {
        let delta_c = rp.tilde_delta_c().map(to_hz).unwrap_or(f64::NAN);
        let _ = writeln!(
            beta_csv,
            "{},{},{},{}",
            rp.l,
            curve.p_max,
            to_hz(curve.delta_max),
            delta_c
        );
    }
    ctx.write_file("beta.csv", &beta_csv)?;
    Ok(())
}

/// Synthesize an ensemble per detuning and run the pairwise estimator,
/// comparing against the analytic model precision.
fn run_precision(ctx: &mut RunContext) -> Result<()> {
    let config = ctx.config;
    let point = resolve_point_or_delta(config)?;
    let model = resolve_model(config, point.kappa_ext)?;
    let opts = resolve_sweep_options(config);
    let delta = config.angular("delta").ok_or(Error::MissingKey("delta".into()))?;
    let epsilon = config.angular("epsilon").unwrap_or(khz(25.0));
    let pairs = config.int("pairs").unwrap_or(5).max(2) as usize;
    let m_traces = config.int("m_traces").unwrap_or(100_000).max(2) as usize;

    // pairs+1 detunings straddling the centre
    let first = delta - epsilon * (pairs as f64 / 2.0).floor();
    let grid: Vec<f64> = (0..=pairs).map(|k| first + epsilon * k as f64).collect();
    let rp = ReducedParams::new(0.0, point.g, point.u, point.kappa, 1.0, Scaling::I)?;
    let curve = sweep(&rp, &grid, &model, &opts)?;
    for f in &curve.failures {
        ctx.record_error(format!("delta_hz={}", to_hz(grid[f.index])), f.message.clone());
    }

    let moments: Vec<Option<PowerMoments>> = (0..grid.len())
        .map(|i| {
            if curve.is_missing(i) {
                None
            } else {
                output_moments(
                    &crate::dynamics::ObservableRecord {
                        n_mean: curve.n_mean[i],
                        n2_mean: curve.n_var[i] + curve.n_mean[i] * curve.n_mean[i],
                        n_var: curve.n_var[i],
                    },
                    1.0,
                    &model,
                )
                .ok()
            }
        })
        .collect();

    let mut ensembles: Vec<Option<TraceEnsemble>> = Vec::new();
    for (i, pm) in moments.iter().enumerate() {
        match pm {
            Some(pm) => match synthesize_traces(pm, &model, m_traces, config.seed.wrapping_add(i as u64)) {
                Ok(te) => ensembles.push(Some(te)),
                Err(e) => {
                    ctx.record_error(format!("delta_hz={}", to_hz(grid[i])), e.to_string());
                    ensembles.push(None);
                }
            },
            None => ensembles.push(None),
        }
    }

    let mut text = String::from("delta_hz,p_model,p_estimated,p_estimated_err\n");
    for i in 0..pairs {
        let (Some(pm_a), Some(pm_b)) = (&moments[i], &moments[i + 1]) else {
            continue;
        };
        let p_model = model_precision_pair(pm_a, pm_b, epsilon);
        let (Some(te_a), Some(te_b)) = (&ensembles[i], &ensembles[i + 1]) else {
            continue;
        };
        let est = estimate_precision_pair(te_a, te_b, epsilon, &opts.estimator)?;
        let _ = writeln!(
            text,
            "{},{},{},{}",
            to_hz(grid[i]),
            p_model,
            est.aggregate,
            est.aggregate_err
        );
    }
    ctx.note("resolved.epsilon_hz", to_hz(epsilon).to_string());
    ctx.note("resolved.m_traces", m_traces.to_string());
    ctx.write_file("precision.csv", &text)?;
    Ok(())
}

/// Like [`resolve_point`] but without requiring a detuning window.
fn resolve_point_or_delta(config: &RunConfig) -> Result<ResolvedPoint> {
    let preset = match config.text("preset") {
        Some(name) => Some(
            calibration::operating_point(name)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown preset `{name}`")))?,
        ),
        None => None,
    };
    let get = |f: fn(&calibration::OperatingPoint) -> f64, key: &str| -> Result<f64> {
        config
            .angular(key)
            .or_else(|| preset.as_ref().map(f))
            .ok_or_else(|| Error::MissingKey(key.into()))
    };
    let g = get(|p| khz(p.g_khz), "g")?;
    let u = get(|p| khz(p.u_khz), "u")?;
    let kappa = get(|p| khz(p.kappa_khz), "kappa")?;
    let kappa_ext = config.angular("kappa_ext").unwrap_or(kappa / 2.0);
    Ok(ResolvedPoint { g, u, kappa, kappa_ext, window: (0.0, 0.0) })
}

fn run_traces(ctx: &mut RunContext) -> Result<()> {
    let config = ctx.config;
    if let Some(input) = config.text("input") {
        let kappa_ext = config.angular("kappa_ext").unwrap_or(khz(36.0));
        let model = resolve_model(config, kappa_ext)?;
        let te = crate::measurement::ingest_traces(Path::new(input), &model)?;
        let moments = crate::measurement::estimate_moments(&te)?;
        let mut text = String::from("bin,t_s,n_out_mean,n_out_var\n");
        for (j, pm) in moments.iter().enumerate() {
            let _ = writeln!(
                text,
                "{},{},{},{}",
                j,
                j as f64 * te.model().delta_t,
                pm.n_out_mean,
                pm.n_out_var
            );
        }
        ctx.note("resolved.input", input.to_string());
        ctx.note("resolved.m", te.traces().to_string());
        ctx.note("resolved.j", te.bins().to_string());
        ctx.write_file("moments.csv", &text)?;
        return Ok(());
    }

    let point = resolve_point_or_delta(config)?;
    let delta = config.angular("delta").ok_or(Error::MissingKey("delta".into()))?;
    let model = resolve_model(config, point.kappa_ext)?;
    let opts = resolve_sweep_options(config);
    let m_traces = config.int("m_traces").unwrap_or(1000).max(2) as usize;

    let pp = PhysicalParams::overcoupled(delta, point.g, point.u, point.kappa)?;
    let obs = solve_single_point(&pp, &opts)?;
    let pm = output_moments(&obs, 1.0, &model)?;
    let te = synthesize_traces(&pm, &model, m_traces, config.seed)?;
    ctx.note("resolved.n_mean", obs.n_mean.to_string());
    ctx.note("resolved.n_out_mean", pm.n_out_mean.to_string());
    let path = ctx.out_dir.join("traces.csv");
    crate::measurement::export_traces(&te, &path)?;
    ctx.summary.files.push(path);
    Ok(())
}

fn solve_single_point(pp: &PhysicalParams, opts: &SweepOptions) -> Result<crate::dynamics::ObservableRecord> {
    let ss_opts = SteadyStateOptions { residual_tol: opts.residual_tol, leak_tol: opts.leak_tol };
    let mut dim = suggested_dim(pp, opts.dim_floor, opts.dim_cap);
    loop {
        let liou = liouvillian(pp, FockSpace::new(dim)?);
        match steady_state_with(&liou, &ss_opts) {
            Ok(ss) => return Ok(observables(&ss)),
            Err(Error::TruncationLeak { .. }) if dim < opts.dim_cap => {
                dim = (dim * 2).min(opts.dim_cap);
            }
            Err(e) => return Err(e),
        }
    }
}

fn run_calibrate(ctx: &mut RunContext) -> Result<()> {
    let config = ctx.config;
    let dm = DeviceModel::new(
        config.float("gamma0").unwrap_or(3.1e-2),
        config.angular("omega_bare").unwrap_or(ghz(4.5068)),
        config.float("l_cav").unwrap_or(1.8e-9),
        config.float("c_cav").unwrap_or(0.7e-12),
        config.float("c_j").unwrap_or(6e-14),
        config.float("d_len").unwrap_or(6.5e-3),
    )?;

    // flux map of resonance and Kerr
    let start = config.float("flux_start").unwrap_or(0.0);
    let stop = config.float("flux_stop").unwrap_or(0.82);
    let n = config.int("flux_points").unwrap_or(42).max(2) as usize;
    let mut text = String::from("flux_rad,omega_r_hz,u_hz\n");
    for k in 0..n {
        let flux = start + (stop - start) * k as f64 / (n - 1) as f64;
        match (flux_resonance(&dm, flux), eigenmode_k0(&dm, flux)) {
            (Ok(w), Ok(k0)) => {
                let u = kerr_from_mode(&dm, k0, w);
                let _ = writeln!(text, "{},{},{}", flux, to_hz(w), to_hz(u));
            }
            (Err(e), _) | (_, Err(e)) => {
                ctx.record_error(format!("flux={flux}"), e.to_string());
            }
        }
    }
    ctx.write_file("flux.csv", &text)?;

    // synthetic hanger-resonance round trip at a configurable SNR
    let truth = ResonanceFit {
        f_r: to_hz(config.angular("s21_fr").unwrap_or(ghz(4.334886))),
        q_l: config.float("s21_ql").unwrap_or(6.02e4),
        q_c_abs: config.float("s21_qc").unwrap_or(6.3e4),
        phi: config.float("s21_phi").unwrap_or(0.12),
        a: config.float("s21_a").unwrap_or(0.97),
        alpha: config.float("s21_alpha").unwrap_or(0.4),
        tau: config.seconds("s21_tau").unwrap_or(3.5e-8),
    };
    let snr = config.float("s21_snr").unwrap_or(100.0);
    let n_pts = config.int("s21_points").unwrap_or(241).max(20) as usize;
    let span_lw = config.float("s21_span").unwrap_or(20.0);
    let width = truth.f_r / truth.q_l;
    let freqs: Vec<f64> = (0..n_pts)
        .map(|k| truth.f_r + width * span_lw * (k as f64 / (n_pts - 1) as f64 - 0.5))
        .collect();
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let sigma = if snr > 0.0 { truth.a / (snr * 2f64.sqrt()) } else { 0.0 };
    let gauss = |r: &mut rand_chacha::ChaCha8Rng| {
        let u1: f64 = r.random::<f64>().max(1e-12);
        let u2: f64 = r.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let data: Vec<num_complex::Complex64> = freqs
        .iter()
        .map(|f| {
            s21_model(*f, &truth)
                + num_complex::Complex64::new(sigma * gauss(&mut rng), sigma * gauss(&mut rng))
        })
        .collect();
    let mut text = String::from(
        "f_r_true_hz,f_r_fit_hz,q_l_true,q_l_fit,q_c_true,q_c_fit,kappa_fit_hz\n",
    );
    match s21_fit(&freqs, &data) {
        Ok(fit) => {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{}",
                truth.f_r,
                fit.f_r,
                truth.q_l,
                fit.q_l,
                truth.q_c_abs,
                fit.q_c_abs,
                to_hz(fit.kappa())
            );
        }
        Err(e) => ctx.record_error("s21_fit".into(), e.to_string()),
    }
    ctx.write_file("s21fit.csv", &text)?;

    // pump extraction from a synthetic bright-phase photon-number curve
    let g_true = config.angular("gfit_g").unwrap_or(khz(300.0));
    let kappa = config.angular("gfit_kappa").unwrap_or(khz(72.0));
    let u = config.angular("gfit_u").unwrap_or(khz(-9.14));
    let n_gfit = config.int("gfit_points").unwrap_or(12).max(3) as usize;
    let pp = PhysicalParams::overcoupled(0.0, g_true, u, kappa)?;
    let dc = critical_detuning(g_true, kappa)?;
    let deltas: Vec<f64> =
        (0..n_gfit).map(|k| dc + 2.0 * kappa + (4.0 * kappa) * k as f64 / (n_gfit - 1) as f64).collect();
    let ns: Vec<f64> = deltas.iter().map(|d| meanfield_n(&pp.with_delta(*d))).collect();
    let (g_fit, delta0) = extract_g(&deltas, &ns, kappa)?;
    let mut text = String::from("g_true_hz,g_fit_hz,delta0_hz,delta_c_hz\n");
    let _ = writeln!(text, "{},{},{},{}", to_hz(g_true), to_hz(g_fit), to_hz(delta0), to_hz(dc));
    ctx.write_file("gfit.csv", &text)?;
    Ok(())
}

fn run_classical(ctx: &mut RunContext) -> Result<()> {
    let config = ctx.config;
    let kappa_ext = config.angular("kappa_ext").unwrap_or(khz(36.0));
    let alpha2 = config.float("alpha2").unwrap_or(1.0);
    let bandwidth = config.angular("bandwidth").unwrap_or(kappa_ext / 10.0);
    let time = config.seconds("time").unwrap_or(69e-6);
    let start = config.angular("delta_p_start").unwrap_or(-3.0 * kappa_ext);
    let stop = config.angular("delta_p_stop").unwrap_or(3.0 * kappa_ext);
    let n = config.int("points").unwrap_or(121).max(3) as usize;

    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut text = String::from("delta_p_hz,precision,precision_timed\n");
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        let dp = start + (stop - start) * k as f64 / (n - 1) as f64;
        let setup = ClassicalSetup::new(kappa_ext, dp, alpha2, bandwidth, time)?;
        let p = classical_precision(&setup);
        let pt = classical_precision_timed(&setup);
        if p > best.0 {
            best = (p, dp);
        }
        xs.push(dp);
        ys.push(p);
        let _ = writeln!(text, "{},{},{}", to_hz(dp), p, pt);
    }
    ctx.note("resolved.p_max", best.0.to_string());
    ctx.note("resolved.delta_p_max_hz", to_hz(best.1).to_string());
    ctx.write_file("classical.csv", &text)?;
    ctx.maybe_plot("classical.svg", &xs, &ys, "delta_p (rad/s)", "precision")?;

    // scaling in output photon number: exactly linear
    let nouts: Vec<f64> = (0..6).map(|k| 2f64.powi(k)).collect();
    let ps: Vec<f64> = nouts
        .iter()
        .map(|nout| {
            let setup = ClassicalSetup::new(kappa_ext, 0.0, *nout, bandwidth, time).unwrap();
            classical_precision_timed(&setup)
        })
        .collect();
    let mut text = match fit_beta(&nouts, &ps) {
        Ok((beta, se)) => {
            ctx.note("resolved.beta_classical", format!("{beta}"));
            format!("# beta_classical = {beta} +- {se}\n")
        }
        Err(e) => format!("# beta_classical unavailable: {e}\n"),
    };
    text.push_str("n_out,p_max\n");
    for (nout, p) in nouts.iter().zip(&ps) {
        let _ = writeln!(text, "{nout},{p}");
    }
    ctx.write_file("classical_beta.csv", &text)?;
    Ok(())
}

/// Minimal self-contained SVG line plot.
fn render_svg(xs: &[f64], ys: &[f64], x_label: &str, y_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 50.0;
    let finite: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let (x0, x1) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| {
        (a.0.min(p.0), a.1.max(p.0))
    });
    let (y0, y1) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| {
        (a.0.min(p.1), a.1.max(p.1))
    });
    let sx = |x: f64| M + (x - x0) / (x1 - x0).max(1e-300) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0).max(1e-300) * (H - 2.0 * M);
    let mut pts = String::new();
    for (x, y) in &finite {
        let _ = write!(pts, "{:.2},{:.2} ", sx(*x), sy(*y));
    }
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<rect x=\"{m}\" y=\"{m}\" width=\"{iw}\" height=\"{ih}\" fill=\"none\" stroke=\"black\"/>\n",
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n",
            "<text x=\"{xc}\" y=\"{xl}\" text-anchor=\"middle\" font-size=\"12\">{x_label}</text>\n",
            "<text x=\"14\" y=\"{yc}\" text-anchor=\"middle\" font-size=\"12\" ",
            "transform=\"rotate(-90 14 {yc})\">{y_label}</text>\n",
            "</svg>\n"
        ),
        w = W,
        h = H,
        m = M,
        iw = W - 2.0 * M,
        ih = H - 2.0 * M,
        pts = pts.trim_end(),
        xc = W / 2.0,
        xl = H - 12.0,
        yc = H / 2.0,
        x_label = x_label,
        y_label = y_label,
    )
}
