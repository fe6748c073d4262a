//! Signature of the second-order dissipative phase transition: rescaled
//! photon-number curves collapse onto each other while the maximum of
//! the second derivative grows with the system size L.
//!
//! Run: cargo run --release -p kerrsense --example dpt_signature

use kerrsense::measurement::MeasurementModel;
use kerrsense::metrology::{critical_detuning, sweep, ReducedParams, Scaling, SweepOptions};
use kerrsense::units::{khz, mhz, to_hz};

fn main() -> kerrsense::Result<()> {
    let l_values = [0.66, 1.0, 1.64];
    let grid: Vec<f64> = (0..26).map(|k| mhz(-0.5) + khz(30.0) * k as f64).collect();
    let model = MeasurementModel::ideal(khz(36.0));
    let opts = SweepOptions { dim_cap: 160, ..Default::default() };

    let mut curves = Vec::new();
    for l in l_values {
        let rp = ReducedParams::new(0.0, khz(300.0), khz(-9.14), khz(72.0), l, Scaling::I)?;
        eprintln!("sweeping L = {l} ...");
        curves.push(sweep(&rp, &grid, &model, &opts)?);
    }

    let delta_c = critical_detuning(khz(300.0), khz(72.0))?;
    println!("rescaled photon number <n>/L (vacuum -> bright transition at delta_c = {:.0} kHz):\n",
        to_hz(delta_c) / 1e3);
    println!("{:>12} {:>10} {:>10} {:>10}", "delta (kHz)", "L=0.66", "L=1.0", "L=1.64");
    for (i, d) in grid.iter().enumerate() {
        let cols: Vec<String> = curves
            .iter()
            .zip(&l_values)
            .map(|(c, l)| {
                if c.is_missing(i) {
                    "   -   ".into()
                } else {
                    format!("{:10.3}", c.n_mean[i] / l)
                }
            })
            .collect();
        let marker = if (d - delta_c).abs() < khz(15.0) { "  <- delta_c" } else { "" };
        println!("{:>12.0} {}{marker}", to_hz(*d) / 1e3, cols.join(" "));
    }

    println!("\ngrowth of the second-derivative peak (transition sharpens with L):");
    for (l, c) in l_values.iter().zip(&curves) {
        let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
        for (i, v) in c.d2n.iter().enumerate() {
            if !c.is_missing(i) && *v > best {
                best = *v;
                at = c.detunings[i];
            }
        }
        println!(
            "  L = {l}: max d2<n>/d(delta)2 = {best:.3e} photons/(rad/s)^2 at {:.0} kHz",
            to_hz(at) / 1e3
        );
    }
    Ok(())
}
