//! Full measurement pipeline on synthetic data: map intracavity moments
//! through the amplifier chain, synthesize heterodyne trace ensembles,
//! and check that the pairwise precision estimator reproduces the model.
//!
//! Run: cargo run --release -p kerrsense --example measurement_pipeline

use kerrsense::measurement::{
    estimate_moments, estimate_precision_pair, model_precision_pair, output_moments,
    synthesize_traces, EstimatorOptions, MeasurementModel,
};
use kerrsense::units::{khz, to_hz};
use kerrsense::{liouvillian, observables, steady_state, FockSpace, PhysicalParams};

fn main() -> kerrsense::Result<()> {
    // two adjacent detunings near the precision optimum
    let delta = khz(-225.0);
    let epsilon = khz(25.0);
    let base = PhysicalParams::overcoupled(delta, khz(300.0), khz(-9.14), khz(72.0))?;
    let space = FockSpace::new(96)?;

    eprintln!("solving steady states ...");
    let obs_a = observables(&steady_state(&liouvillian(&base, space))?);
    let obs_b = observables(&steady_state(&liouvillian(&base.with_delta(delta + epsilon), space))?);
    println!("intracavity moments:");
    println!("  delta/2pi = {:.0} kHz: <n> = {:.3}, Var n = {:.3}", to_hz(delta) / 1e3, obs_a.n_mean, obs_a.n_var);
    println!(
        "  delta/2pi = {:.0} kHz: <n> = {:.3}, Var n = {:.3}",
        to_hz(delta + epsilon) / 1e3,
        obs_b.n_mean,
        obs_b.n_var
    );

    let model = MeasurementModel::steady_defaults(base.kappa_ext(), 0.25)?;
    let pm_a = output_moments(&obs_a, 1.0, &model)?;
    let pm_b = output_moments(&obs_b, 1.0, &model)?;
    println!("\nmeasured-power moments (vacuum-limited amplifier, {} bins of {:.1} us):",
        model.bins(), model.delta_t * 1e6);
    println!("  <N_a> = {:.4}, Var N_a = {:.4}", pm_a.n_out_mean, pm_a.n_out_var);
    println!("  <N_b> = {:.4}, Var N_b = {:.4}", pm_b.n_out_mean, pm_b.n_out_var);

    let m = 100_000;
    eprintln!("synthesizing 2 x {m} traces ...");
    let te_a = synthesize_traces(&pm_a, &model, m, 1)?;
    let te_b = synthesize_traces(&pm_b, &model, m, 2)?;

    let est_a = estimate_moments(&te_a)?;
    println!("\nrecovered moments at the first bin: <N> = {:.4} (target {:.4})",
        est_a[0].n_out_mean, pm_a.n_out_mean);

    let p_model = model_precision_pair(&pm_a, &pm_b, epsilon);
    let est = estimate_precision_pair(&te_a, &te_b, epsilon, &EstimatorOptions::default())?;
    println!("\npairwise frequency-estimation precision:");
    println!("  model     : {p_model:.4e} (rad/s)^-2");
    println!("  estimated : {:.4e} +- {:.1e}", est.aggregate, est.aggregate_err);
    println!("  ({} steady-state bins from index {})", est.per_bin.len() - est.j_ss_index, est.j_ss_index);

    println!("\namplifier-noise ladder at fixed signal:");
    for sigma2 in [0.25, 0.5, 1.0, 2.0] {
        let m_noisy = MeasurementModel::steady_defaults(base.kappa_ext(), sigma2)?;
        let a = output_moments(&obs_a, 1.0, &m_noisy)?;
        let b = output_moments(&obs_b, 1.0, &m_noisy)?;
        println!(
            "  sigma^2 = {sigma2:<5}: P = {:.4e}  (n_amp = {:.1})",
            model_precision_pair(&a, &b, epsilon),
            m_noisy.n_amp()
        );
    }
    println!("\n(gain never enters: the estimator is a ratio of measured quantities)");
    Ok(())
}
