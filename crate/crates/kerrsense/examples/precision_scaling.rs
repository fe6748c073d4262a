//! Frequency-estimation precision across the transition and its scaling
//! with system size. The quantum-limited (noise-free) readout scales
//! linearly with L; a readout chain whose added noise dominates the
//! fluctuations — the regime of a HEMT-limited microwave measurement —
//! approaches the quadratic scaling of the signal slope.
//!
//! Run: cargo run --release -p kerrsense --example precision_scaling

use kerrsense::dynamics::ObservableRecord;
use kerrsense::measurement::{model_precision_pair, output_moments, MeasurementModel};
use kerrsense::metrology::{fit_beta, sweep, PrecisionCurve, ReducedParams, Scaling, SweepOptions};
use kerrsense::units::{khz, mhz, to_hz};

fn precision_under(curve: &PrecisionCurve, model: &MeasurementModel) -> (f64, f64) {
    let eps = curve.detunings[1] - curve.detunings[0];
    let mut best = (0.0f64, 0.0f64);
    for i in 0..curve.detunings.len() - 1 {
        if curve.is_missing(i) || curve.is_missing(i + 1) {
            continue;
        }
        let rec = |k: usize| ObservableRecord {
            n_mean: curve.n_mean[k],
            n2_mean: curve.n_var[k] + curve.n_mean[k] * curve.n_mean[k],
            n_var: curve.n_var[k],
        };
        let a = output_moments(&rec(i), 1.0, model).unwrap();
        let b = output_moments(&rec(i + 1), 1.0, model).unwrap();
        let p = model_precision_pair(&a, &b, eps);
        if p > best.0 {
            best = (p, curve.detunings[i]);
        }
    }
    best
}

fn main() -> kerrsense::Result<()> {
    let l_values = [0.66, 0.80, 1.0, 1.31, 1.64];
    let grid: Vec<f64> = (0..31).map(|k| mhz(-0.5) + khz(25.0) * k as f64).collect();
    let ideal = MeasurementModel::ideal(khz(36.0));
    let opts = SweepOptions { dim_cap: 160, ..Default::default() };

    let mut curves = Vec::new();
    for l in l_values {
        let rp = ReducedParams::new(0.0, khz(300.0), khz(-9.14), khz(72.0), l, Scaling::I)?;
        eprintln!("sweeping L = {l} ...");
        curves.push(sweep(&rp, &grid, &ideal, &opts)?);
    }

    // a noisy readout chain: n_amp added photons referred to the input
    let noisy = MeasurementModel::steady_defaults(khz(36.0), 0.25)?.with_n_amp(30.0)?;

    println!(
        "{:>6} {:>16} {:>14} {:>16} {:>14}",
        "L", "P_max ideal", "delta_max", "P_max noisy", "delta_max"
    );
    let mut p_ideal = Vec::new();
    let mut p_noisy = Vec::new();
    for (l, curve) in l_values.iter().zip(&curves) {
        let (pn, dn) = precision_under(curve, &noisy);
        p_ideal.push(curve.p_max);
        p_noisy.push(pn);
        println!(
            "{l:>6} {:>16.4e} {:>11.0} kHz {:>16.4e} {:>11.0} kHz",
            curve.p_max,
            to_hz(curve.delta_max) / 1e3,
            pn,
            to_hz(dn) / 1e3
        );
    }

    let (beta_i, se_i) = fit_beta(&l_values, &p_ideal)?;
    let (beta_n, se_n) = fit_beta(&l_values, &p_noisy)?;
    println!("\nscaling exponents P_max ~ L^beta:");
    println!("  quantum-limited readout : beta = {beta_i:.3} +- {se_i:.3}");
    println!("  amplifier-dominated     : beta = {beta_n:.3} +- {se_n:.3}  (n_amp = 30)");
    println!(
        "\nthe added noise is flat in detuning, so the estimator inherits the full\n\
         slope enhancement near the critical point and the exponent approaches 2"
    );
    Ok(())
}
