//! Device calibration workflow: flux-tuned resonance and Kerr map from
//! the distributed-circuit model, hanger-resonance fitting, and pump
//! extraction from the bright-phase photon-number line.
//!
//! Run: cargo run --release -p kerrsense --example calibrate_device

use kerrsense::calibration::{
    eigenmode_k0, extract_g, flux_resonance, kerr_from_mode, meanfield_n, s21_fit, s21_model,
    DeviceModel, ResonanceFit,
};
use kerrsense::units::{ghz, khz, to_hz};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> kerrsense::Result<()> {
    // participation ratio and bare mode from a flux-map fit
    let dm = DeviceModel::new(3.1e-2, ghz(4.5068), 1.8e-9, 0.7e-12, 6e-14, 6.5e-3)?;

    println!("flux map (resonance and Kerr from the eigenmode condition):");
    println!("{:>8} {:>14} {:>12}", "F (rad)", "omega_r (GHz)", "U (kHz)");
    for k in 0..=8 {
        let flux = 0.82 * k as f64 / 8.0;
        let w = flux_resonance(&dm, flux)?;
        let k0 = eigenmode_k0(&dm, flux)?;
        let u = kerr_from_mode(&dm, k0, w);
        println!("{flux:>8.3} {:>14.6} {:>12.2}", to_hz(w) / 1e9, to_hz(u) / 1e3);
    }
    println!("(larger flux: smaller resonance, stronger |U| — the system-size knob)");

    // hanger-resonance round trip at finite SNR
    let truth = ResonanceFit {
        f_r: 4.334886e9,
        q_l: 6.02e4,
        q_c_abs: 6.3e4,
        phi: 0.12,
        a: 0.97,
        alpha: 0.4,
        tau: 3.5e-8,
    };
    let width = truth.f_r / truth.q_l;
    let n = 241;
    let freqs: Vec<f64> =
        (0..n).map(|k| truth.f_r + width * 18.0 * (k as f64 / (n - 1) as f64 - 0.5)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sigma = truth.a / (100.0 * 2f64.sqrt());
    let mut gauss = || {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let data: Vec<Complex64> = freqs
        .iter()
        .map(|f| s21_model(*f, &truth) + Complex64::new(sigma * gauss(), sigma * gauss()))
        .collect();
    let fit = s21_fit(&freqs, &data)?;
    println!("\nhanger S21 fit at SNR 100:");
    println!("  f_r   : {:.6} GHz (true {:.6})", fit.f_r / 1e9, truth.f_r / 1e9);
    println!("  Q_l   : {:.0} (true {:.0})", fit.q_l, truth.q_l);
    println!("  |Q_c| : {:.0} (true {:.0})", fit.q_c_abs, truth.q_c_abs);
    println!("  kappa : {:.1} kHz", to_hz(fit.kappa()) / 1e3);

    // pump calibration: the bright-phase line crosses zero at delta_0,
    // and G = sqrt(delta_0^2 + kappa^2) independent of the Kerr value
    let kappa = khz(72.0);
    let g_true = khz(300.0);
    println!("\npump extraction from bright-phase photon-number lines:");
    for u_khz in [-5.58, -9.14, -13.86] {
        let pp = kerrsense::PhysicalParams::overcoupled(0.0, g_true, khz(u_khz), kappa)?;
        let deltas: Vec<f64> = (0..10).map(|k| khz(-140.0 + 40.0 * k as f64)).collect();
        let ns: Vec<f64> = deltas.iter().map(|d| meanfield_n(&pp.with_delta(*d))).collect();
        let (g_fit, delta0) = extract_g(&deltas, &ns, kappa)?;
        println!(
            "  U/2pi = {u_khz:>7.2} kHz: delta_0 = {:>7.1} kHz -> G/2pi = {:.1} kHz",
            to_hz(delta0) / 1e3,
            to_hz(g_fit) / 1e3
        );
    }
    println!("  (all lines cross at the same intercept: one pump value fits every Kerr setting)");
    Ok(())
}
