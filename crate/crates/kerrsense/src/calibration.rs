//! Device-parameter model: flux-dependent resonance of a λ/4 resonator
//! terminated by a SQUID, the eigenmode transcendental equation and Kerr
//! formula, the S21 hanger model with its circle fit, the mean-field
//! photon number, and extraction of the two-photon pump from the
//! bright-phase x-intercept.

use std::f64::consts::{PI, TAU};
use std::sync::LazyLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::PhysicalParams;

const HBAR: f64 = 1.054_571_817e-34;
/// Reduced flux quantum φ₀ = ħ/(2e).
const PHI0_REDUCED: f64 = 2.067_833_848e-15 / TAU;

/// Distributed-circuit description of the SQUID-terminated resonator.
#[derive(Clone, Copy, Debug)]
pub struct DeviceModel {
    gamma0: f64,
    omega_bare: f64,
    l_cav: f64,
    c_cav: f64,
    c_j: f64,
    l_j0: f64,
    d: f64,
}

impl DeviceModel {
    /// Build from the participation ratio at zero flux; the SQUID
    /// inductance follows as L_J(0) = γ₀ L_cav.
    pub fn new(gamma0: f64, omega_bare: f64, l_cav: f64, c_cav: f64, c_j: f64, d: f64) -> Result<Self> {
        let dm = Self { gamma0, omega_bare, l_cav, c_cav, c_j, l_j0: gamma0 * l_cav, d };
        dm.validate()?;
        Ok(dm)
    }

    /// Build from explicit inductances; γ₀ must equal L_J(0)/L_cav.
    pub fn with_inductances(
        omega_bare: f64,
        l_cav: f64,
        l_j0: f64,
        c_cav: f64,
        c_j: f64,
        d: f64,
    ) -> Result<Self> {
        let dm = Self { gamma0: l_j0 / l_cav, omega_bare, l_cav, c_cav, c_j, l_j0, d };
        dm.validate()?;
        Ok(dm)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma0", self.gamma0),
            ("omega_bare", self.omega_bare),
            ("l_cav", self.l_cav),
            ("c_cav", self.c_cav),
            ("l_j0", self.l_j0),
            ("d", self.d),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v:.6e}")));
            }
        }
        if !(self.c_j.is_finite() && self.c_j >= 0.0) {
            return Err(Error::InvalidParameter("c_j must be non-negative".into()));
        }
        let implied = self.l_j0 / self.l_cav;
        if (implied - self.gamma0).abs() > 1e-9 * self.gamma0 {
            return Err(Error::InvalidParameter(format!(
                "gamma0 = {:.6e} inconsistent with l_j0/l_cav = {implied:.6e}",
                self.gamma0
            )));
        }
        Ok(())
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn omega_bare(&self) -> f64 {
        self.omega_bare
    }

    pub fn length(&self) -> f64 {
        self.d
    }

    /// Flux-dependent SQUID inductance L_J = L_J(0)/|cos F|.
    pub fn l_j(&self, flux: f64) -> Result<f64> {
        let c = flux.cos().abs();
        if c <= 1e-6 {
            return Err(Error::FluxSingularity(c));
        }
        Ok(self.l_j0 / c)
    }
}

/// Resonance frequency ω ≈ ω_{λ/4}/(1 + γ(F)) with γ(F) = γ₀/|cos F|.
pub fn flux_resonance(dm: &DeviceModel, flux: f64) -> Result<f64> {
    let c = flux.cos().abs();
    if c <= 1e-6 {
        return Err(Error::FluxSingularity(c));
    }
    Ok(dm.omega_bare() / (1.0 + dm.gamma0() / c))
}

/// Smallest positive root k₀ of the fundamental-eigenmode condition
/// L_cav/L_J − C_J (k₀d)²/C_cav = k₀d · tan(k₀d) on (0, π/(2d)).
pub fn eigenmode_k0(dm: &DeviceModel, flux: f64) -> Result<f64> {
    let l_ratio = dm.l_cav / dm.l_j(flux)?;
    let c_ratio = dm.c_j / dm.c_cav;
    let f = |x: f64| l_ratio - c_ratio * x * x - x * x.tan();

    // bracket by scanning; tan dominates near π/2 so a sign change exists
    let lo = 1e-9;
    let hi = PI / 2.0 - 1e-12;
    let steps = 10_000;
    let at = |k: usize| lo + (hi - lo) * k as f64 / steps as f64;
    let mut prev = f(lo);
    let mut bracket = None;
    for k in 1..=steps {
        let fx = f(at(k));
        if prev == 0.0 {
            bracket = Some((at(k - 1), at(k - 1)));
            break;
        }
        if prev.signum() != fx.signum() {
            bracket = Some((at(k - 1), at(k)));
            break;
        }
        prev = fx;
    }
    let (mut a, mut b) = bracket.ok_or(Error::RootNotBracketed)?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= 1e-12 * mid {
            break;
        }
        if f(a).signum() == f(mid).signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut x = 0.5 * (a + b);
    // Newton polish
    for _ in 0..3 {
        let cosx = x.cos();
        let deriv = -2.0 * c_ratio * x - x.tan() - x / (cosx * cosx);
        let step = f(x) / deriv;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    Ok(x / dm.d)
}

/// Kerr nonlinearity from the mode solution:
/// U = −(ħω₀² L_cav)/(2γ φ₀²) · [cos²(k₀d) / ((k₀d)² M₀)]², with
/// M₀ = 1 + sin(2k₀d)/(2k₀d) + (2C_J/C_cav) cos²(k₀d). The flux-dependent
/// participation ratio γ is recovered from the eigenmode condition itself.
pub fn kerr_from_mode(dm: &DeviceModel, k0: f64, omega0: f64) -> f64 {
    let x = k0 * dm.d;
    let c_ratio = dm.c_j / dm.c_cav;
    let gamma = 1.0 / (x * x.tan() + c_ratio * x * x);
    let m0 = 1.0 + (2.0 * x).sin() / (2.0 * x) + 2.0 * c_ratio * x.cos() * x.cos();
    let shape = x.cos() * x.cos() / (x * x * m0);
    -(HBAR * omega0 * omega0 * dm.l_cav) / (2.0 * gamma * PHI0_REDUCED * PHI0_REDUCED) * shape * shape
}

/// Fitted hanger-resonance parameters.
#[derive(Clone, Copy, Debug)]
pub struct ResonanceFit {
    /// Resonance frequency in Hz.
    pub f_r: f64,
    /// Loaded quality factor.
    pub q_l: f64,
    /// Absolute value of the coupling quality factor.
    pub q_c_abs: f64,
    /// Impedance-mismatch rotation (rad).
    pub phi: f64,
    /// Off-resonant amplitude.
    pub a: f64,
    /// Off-resonant phase (rad).
    pub alpha: f64,
    /// Cable delay (s).
    pub tau: f64,
}

impl ResonanceFit {
    /// Total loss rate κ = ω_r/Q_l (rad/s).
    pub fn kappa(&self) -> f64 {
        TAU * self.f_r / self.q_l
    }
}

/// Hanger scattering model
/// S21(f) = a e^{iα} e^{−2πifτ} [1 − (Q_l/|Q_c|) e^{iφ} / (1 + 2iQ_l(f/f_r − 1))].
pub fn s21_model(f: f64, fit: &ResonanceFit) -> Complex64 {
    let pre = Complex64::new(fit.a, 0.0)
        * Complex64::from_polar(1.0, fit.alpha - TAU * f * fit.tau);
    let num = Complex64::from_polar(fit.q_l / fit.q_c_abs, fit.phi);
    let den = Complex64::new(1.0, 2.0 * fit.q_l * (f / fit.f_r - 1.0));
    pre * (Complex64::ONE - num / den)
}

/// Fit the hanger model to measured S21 data: cable-delay removal,
/// algebraic circle fit, and a phase-versus-frequency fit, falling back
/// to plain nonlinear least squares when the circle route fails.
pub fn s21_fit(freqs: &[f64], s21: &[Complex64]) -> Result<ResonanceFit> {
    if freqs.len() != s21.len() {
        return Err(Error::InvalidParameter("frequency/data length mismatch".into()));
    }
    if freqs.len() < 20 {
        return Err(Error::InsufficientSpan(format!("need at least 20 points, got {}", freqs.len())));
    }
    let span = freqs.last().unwrap() - freqs.first().unwrap();
    if span <= 0.0 {
        return Err(Error::InvalidParameter("frequencies must be ascending".into()));
    }

    // a resonance must actually be present
    let mags: Vec<f64> = s21.iter().map(|z| z.norm()).collect();
    let max_mag = mags.iter().cloned().fold(0.0, f64::max);
    let (min_idx, min_mag) = mags
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if max_mag <= 0.0 || (max_mag - min_mag) / max_mag < 0.01 {
        return Err(Error::FitDiverged("no resonance dip in the data".into()));
    }

    // rough linewidth from the half-depth crossings around the dip
    let half = 0.5 * (max_mag + min_mag);
    let mut i_lo = min_idx;
    while i_lo > 0 && mags[i_lo] < half {
        i_lo -= 1;
    }
    let mut i_hi = min_idx;
    while i_hi + 1 < mags.len() && mags[i_hi] < half {
        i_hi += 1;
    }
    let width = (freqs[i_hi] - freqs[i_lo]).max(span / freqs.len() as f64);
    if span < 3.0 * width {
        return Err(Error::InsufficientSpan(format!(
            "span {span:.3e} Hz below 3 linewidths ({:.3e} Hz)",
            3.0 * width
        )));
    }
    let f_r_init = freqs[min_idx];
    let q_l_init = (f_r_init / width).max(1.0);

    match circle_fit(freqs, s21, f_r_init, q_l_init) {
        Ok(fit) => Ok(fit),
        Err(_) => nls_fit(freqs, s21, f_r_init, q_l_init, min_mag / max_mag),
    }
}

fn circle_fit(freqs: &[f64], s21: &[Complex64], f_r_init: f64, q_l_init: f64) -> Result<ResonanceFit> {
    // delay from a coarse scan plus golden-section refinement of the
    // algebraic circle-fit residual
    let span = freqs.last().unwrap() - freqs.first().unwrap();
    let tau_init = phase_slope_delay(freqs, s21);
    let half_window = 3.0 / span;
    let mut best = (f64::INFINITY, tau_init);
    for k in 0..=60 {
        let tau = tau_init - half_window + 2.0 * half_window * k as f64 / 60.0;
        let res = circle_residual(freqs, s21, tau);
        if res < best.0 {
            best = (res, tau);
        }
    }
    let tau = golden_refine(
        |t| circle_residual(freqs, s21, t),
        best.1 - half_window / 30.0,
        best.1 + half_window / 30.0,
    );

    let z: Vec<Complex64> = freqs
        .iter()
        .zip(s21)
        .map(|(f, s)| s * Complex64::from_polar(1.0, TAU * f * tau))
        .collect();
    let (cx, cy, r) = kasa_circle(&z)?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::FitDiverged("degenerate resonance circle".into()));
    }
    let center = Complex64::new(cx, cy);

    // phase of the centered data follows θ(f) = θ0 + 2 atan(2 Q_l (1 − f/f_r))
    let theta: Vec<f64> = z.iter().map(|p| (p - center).arg()).collect();
    let theta = unwrap_phase(&theta);
    let (theta0, q_l, f_r) = phase_fit(freqs, &theta, f_r_init, q_l_init)?;
    if !(q_l > 0.0 && f_r > 0.0) {
        return Err(Error::FitDiverged("phase fit returned nonphysical parameters".into()));
    }

    let z_off = center - Complex64::from_polar(r, theta0);
    let z_res = center + Complex64::from_polar(r, theta0);
    let a = z_off.norm();
    if a <= 0.0 {
        return Err(Error::FitDiverged("vanishing off-resonant amplitude".into()));
    }
    let alpha = z_off.arg();
    let dip = Complex64::ONE - z_res / z_off;
    let ratio = dip.norm();
    if ratio <= 0.0 {
        return Err(Error::FitDiverged("vanishing dip".into()));
    }
    Ok(ResonanceFit { f_r, q_l, q_c_abs: q_l / ratio, phi: dip.arg(), a, alpha, tau })
}

/// Plain nonlinear least squares on all seven model parameters.
fn nls_fit(
    freqs: &[f64],
    s21: &[Complex64],
    f_r_init: f64,
    q_l_init: f64,
    depth: f64,
) -> Result<ResonanceFit> {
    let f0 = f_r_init;
    let q0 = q_l_init;
    let a0 = s21.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-12);
    let alpha0 = s21[0].arg();
    // scaled parameters [f_r/f0, q_l/q0, q_c/q0, phi, a/a0, alpha, tau*span]
    let span = freqs.last().unwrap() - freqs.first().unwrap();
    let unpack = |p: &[f64]| ResonanceFit {
        f_r: p[0] * f0,
        q_l: p[1] * q0,
        q_c_abs: p[2] * q0,
        phi: p[3],
        a: p[4] * a0,
        alpha: p[5],
        tau: p[6] / span,
    };
    let residual = |p: &[f64], out: &mut Vec<f64>| {
        let fit = unpack(p);
        out.clear();
        for (f, s) in freqs.iter().zip(s21) {
            let m = s21_model(*f, &fit);
            out.push(m.re - s.re);
            out.push(m.im - s.im);
        }
    };
    let qc0 = (1.0 / (1.0 - depth).max(1e-3)).min(50.0);
    let x0 = [1.0, 1.0, qc0, 0.0, 1.0, alpha0, 0.0];
    let p = levenberg_marquardt(&residual, &x0, 300, 1e-14)
        .map_err(|_| Error::FitDiverged("least-squares refinement failed".into()))?;
    let fit = unpack(&p);
    if !(fit.q_l > 0.0 && fit.f_r > 0.0 && fit.q_c_abs > 0.0) {
        return Err(Error::FitDiverged("nonphysical fallback fit".into()));
    }
    Ok(fit)
}

fn phase_slope_delay(freqs: &[f64], s21: &[Complex64]) -> f64 {
    let phases: Vec<f64> = s21.iter().map(|z| z.arg()).collect();
    let phases = unwrap_phase(&phases);
    let n = freqs.len() as f64;
    let fx: f64 = freqs.iter().sum::<f64>() / n;
    let fy: f64 = phases.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (f, p) in freqs.iter().zip(&phases) {
        sxx += (f - fx) * (f - fx);
        sxy += (f - fx) * (p - fy);
    }
    if sxx == 0.0 {
        return 0.0;
    }
    -(sxy / sxx) / TAU
}

fn circle_residual(freqs: &[f64], s21: &[Complex64], tau: f64) -> f64 {
    let z: Vec<Complex64> = freqs
        .iter()
        .zip(s21)
        .map(|(f, s)| s * Complex64::from_polar(1.0, TAU * f * tau))
        .collect();
    match kasa_circle(&z) {
        Ok((cx, cy, r)) => z
            .iter()
            .map(|p| {
                let d = (p - Complex64::new(cx, cy)).norm() - r;
                d * d
            })
            .sum(),
        Err(_) => f64::INFINITY,
    }
}

/// Algebraic (Kåsa) circle fit: least squares for center and radius.
fn kasa_circle(z: &[Complex64]) -> Result<(f64, f64, f64)> {
    let n = z.len();
    let mut a = DMatrix::<f64>::zeros(n, 3);
    let mut b = DVector::<f64>::zeros(n);
    for (i, p) in z.iter().enumerate() {
        a[(i, 0)] = 2.0 * p.re;
        a[(i, 1)] = 2.0 * p.im;
        a[(i, 2)] = 1.0;
        b[i] = p.norm_sqr();
    }
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    let sol = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::FitDiverged("singular circle-fit system".into()))?;
    let r2 = sol[2] + sol[0] * sol[0] + sol[1] * sol[1];
    if r2 <= 0.0 {
        return Err(Error::FitDiverged("negative circle radius".into()));
    }
    Ok((sol[0], sol[1], r2.sqrt()))
}

fn unwrap_phase(theta: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(theta.len());
    let mut offset = 0.0;
    for (i, &t) in theta.iter().enumerate() {
        if i > 0 {
            let prev = out[i - 1];
            let mut cur = t + offset;
            while cur - prev > PI {
                cur -= TAU;
                offset -= TAU;
            }
            while cur - prev < -PI {
                cur += TAU;
                offset += TAU;
            }
            out.push(cur);
        } else {
            out.push(t);
        }
    }
    out
}

/// Fit θ(f) = θ0 + 2 atan(2 Q_l (1 − f/f_r)).
fn phase_fit(freqs: &[f64], theta: &[f64], f_r_init: f64, q_l_init: f64) -> Result<(f64, f64, f64)> {
    let n = freqs.len() as f64;
    let theta0_init = theta.iter().sum::<f64>() / n;
    let residual = |p: &[f64], out: &mut Vec<f64>| {
        let (theta0, q_l, f_r) = (p[0], p[1] * q_l_init, p[2] * f_r_init);
        out.clear();
        for (f, t) in freqs.iter().zip(theta) {
            out.push(theta0 + 2.0 * (2.0 * q_l * (1.0 - f / f_r)).atan() - t);
        }
    };
    let p = levenberg_marquardt(&residual, &[theta0_init, 1.0, 1.0], 300, 1e-15)
        .map_err(|_| Error::FitDiverged("phase fit failed".into()))?;
    Ok((p[0], p[1] * q_l_init, p[2] * f_r_init))
}

fn golden_refine(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_895;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Small dense Levenberg–Marquardt with forward-difference Jacobian.
pub(crate) fn levenberg_marquardt(
    residual: &dyn Fn(&[f64], &mut Vec<f64>),
    x0: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let np = x0.len();
    let mut x = x0.to_vec();
    let mut r = Vec::new();
    residual(&x, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut r_trial = Vec::new();

    for _ in 0..max_iter {
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, np);
        let mut xp = x.clone();
        let mut rp = Vec::new();
        for j in 0..np {
            let step = 1e-7 * x[j].abs().max(1e-9);
            xp[j] = x[j] + step;
            residual(&xp, &mut rp);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - r[i]) / step;
            }
            xp[j] = x[j];
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * DVector::from_column_slice(&r);

        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for k in 0..np {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 3.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, s)| xi - s).collect();
            residual(&trial, &mut r_trial);
            let trial_cost: f64 = r_trial.iter().map(|v| v * v).sum();
            if trial_cost < cost {
                let rel_drop = (cost - trial_cost) / cost.max(1e-300);
                x = trial;
                std::mem::swap(&mut r, &mut r_trial);
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel_drop < tol || cost < 1e-300 {
                    return Ok(x);
                }
                break;
            }
            lambda *= 3.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    if cost.is_finite() {
        Ok(x)
    } else {
        Err(Error::FitDiverged("non-finite least-squares cost".into()))
    }
}

/// Bright-phase mean-field photon number max(0, (δ + √(G²−κ²))/|U|).
pub fn meanfield_n(pp: &PhysicalParams) -> f64 {
    let s = (pp.g() * pp.g() - pp.kappa() * pp.kappa()).max(0.0).sqrt();
    let num = pp.delta() + s;
    if num <= 0.0 {
        return 0.0;
    }
    if pp.u() == 0.0 {
        return f64::INFINITY;
    }
    num / pp.u().abs()
}

/// Extract the two-photon pump from a bright-phase photon-number curve:
/// a least-squares line through (δ, ⟨n⟩) gives the x-intercept δ₀ and
/// G = √(δ₀² + κ²).
pub fn extract_g(detunings: &[f64], n_mean: &[f64], kappa: f64) -> Result<(f64, f64)> {
    if detunings.len() != n_mean.len() {
        return Err(Error::InvalidParameter("detuning/photon-number length mismatch".into()));
    }
    if detunings.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 bright-phase points, got {}",
            detunings.len()
        )));
    }
    let n = detunings.len() as f64;
    let mx = detunings.iter().sum::<f64>() / n;
    let my = n_mean.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in detunings.iter().zip(n_mean) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("no spread in detuning".into()));
    }
    let slope = sxy / sxx;
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::DegenerateFit("zero slope".into()));
    }
    let intercept = my - slope * mx;
    let delta0 = -intercept / slope;
    Ok(((delta0 * delta0 + kappa * kappa).sqrt(), delta0))
}

/// One row of the bundled operating-point table.
#[derive(Clone, Copy, Debug)]
pub struct OperatingPoint {
    /// Scaling family: 1 or 2.
    pub table: u8,
    /// 1-based row within the table.
    pub row: usize,
    /// Flux bias F = πΦ_dc/Φ₀ (rad).
    pub flux: f64,
    pub omega_r_ghz: f64,
    pub omega_p_lo_ghz: f64,
    pub omega_p_hi_ghz: f64,
    pub u_khz: f64,
    pub l: f64,
    pub kappa_khz: f64,
    pub g_khz: f64,
}

impl OperatingPoint {
    /// Detuning window δ = ω_r − ω_p/2 implied by the pump range (rad/s);
    /// the higher pump frequency gives the lower detuning.
    pub fn delta_window(&self) -> (f64, f64) {
        let lo = crate::units::ghz(self.omega_r_ghz - self.omega_p_hi_ghz / 2.0);
        let hi = crate::units::ghz(self.omega_r_ghz - self.omega_p_lo_ghz / 2.0);
        (lo, hi)
    }

    /// Physical parameters at a given detuning (overcoupled split).
    pub fn physical_params(&self, delta: f64) -> Result<PhysicalParams> {
        PhysicalParams::overcoupled(
            delta,
            crate::units::khz(self.g_khz),
            crate::units::khz(self.u_khz),
            crate::units::khz(self.kappa_khz),
        )
    }
}

static OPERATING_POINTS: LazyLock<Vec<OperatingPoint>> = LazyLock::new(|| {
    let text = include_str!("../data/operating_points.csv");
    let mut rows = Vec::new();
    let mut counts = [0usize; 2];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('F') {
            continue;
        }
        let f: Vec<f64> = line.split(',').map(|t| t.trim().parse().expect("bundled table")).collect();
        assert_eq!(f.len(), 8, "bundled table must have 8 columns");
        // the first five rows belong to the fixed-pump family (table 1)
        let table = if rows.len() < 5 { 1u8 } else { 2u8 };
        counts[table as usize - 1] += 1;
        rows.push(OperatingPoint {
            table,
            row: counts[table as usize - 1],
            flux: f[0],
            omega_r_ghz: f[1],
            omega_p_lo_ghz: f[2],
            omega_p_hi_ghz: f[3],
            u_khz: f[4],
            l: f[5],
            kappa_khz: f[6],
            g_khz: f[7],
        });
    }
    rows
});

/// Operating points of the fixed-pump (Kerr-stepped) family.
pub fn table1() -> Vec<OperatingPoint> {
    OPERATING_POINTS.iter().filter(|p| p.table == 1).cloned().collect()
}

/// Operating points of the pump-stepped family.
pub fn table2() -> Vec<OperatingPoint> {
    OPERATING_POINTS.iter().filter(|p| p.table == 2).cloned().collect()
}

/// Look up a preset such as `table1_row3` or `table2_row7`.
pub fn operating_point(preset: &str) -> Option<OperatingPoint> {
    let rest = preset.strip_prefix("table")?;
    let (t, r) = rest.split_once("_row")?;
    let table: u8 = t.parse().ok()?;
    let row: usize = r.parse().ok()?;
    OPERATING_POINTS.iter().find(|p| p.table == table && p.row == row).cloned()
}
