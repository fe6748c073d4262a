//! First steps: build an operating point, solve its steady state, and
//! look at photon-number statistics and temporal correlations.
//!
//! Run: cargo run --release -p kerrsense --example steady_state_basics

use kerrsense::measurement::MeasurementModel;
use kerrsense::units::{khz, to_hz, us};
use kerrsense::{
    autocorr_scale_factor, liouvillian, number_autocorrelation, observables, steady_state,
    FockSpace, PhysicalParams,
};

fn main() -> kerrsense::Result<()> {
    // the reference operating point: two-photon drive G/2pi = 300 kHz,
    // Kerr U/2pi = -9.14 kHz, total loss kappa/2pi = 72 kHz
    let params = PhysicalParams::overcoupled(0.0, khz(300.0), khz(-9.14), khz(72.0))?;
    let space = FockSpace::new(160)?;
    let liou = liouvillian(&params, space);

    let ss = steady_state(&liou)?;
    let obs = observables(&ss);
    let mean_field = kerrsense::calibration::meanfield_n(&params);
    println!("steady state at delta = 0:");
    println!("  <n>        = {:.4}   (mean-field estimate {:.4})", obs.n_mean, mean_field);
    println!("  Var n      = {:.4}", obs.n_var);
    println!("  tail (top 10% levels) = {:.2e}", ss.tail_population());
    println!("  min eigenvalue        = {:.2e}", ss.min_eigenvalue());

    println!("\nphoton-number distribution (every 8th level):");
    for (n, p) in ss.populations().iter().enumerate().step_by(8) {
        let bar = "#".repeat((p * 400.0).round() as usize);
        println!("  |{n:>3}>  {p:.4}  {bar}");
    }

    // two-time correlation of the photon number at the steady state
    let taus: Vec<f64> = (0..=10).map(|k| us(0.5) * k as f64).collect();
    let c = number_autocorrelation(&liou, &ss, &taus)?;
    println!("\nnumber autocorrelation:");
    for (tau, value) in taus.iter().zip(&c) {
        println!("  C({:.1} us) / C(0) = {:+.4}", tau * 1e6, value / c[0]);
    }

    // variance reduction from integrating over a finite bin
    let model = MeasurementModel::ideal(params.kappa_ext());
    let s = autocorr_scale_factor(&liou, &ss, &model)?;
    println!(
        "\nbin-averaging factor over dT = {:.1} us: s = {s:.4}",
        model.delta_t * 1e6
    );
    println!(
        "(per-bin power fluctuations are s^1/2 = {:.3} of the instantaneous ones)",
        s.sqrt()
    );

    println!("\ncritical detuning for this point: delta_c/2pi = {:.1} kHz",
        to_hz(kerrsense::critical_detuning(params.g(), params.kappa())?) / 1e3);
    Ok(())
}
