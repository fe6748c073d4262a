//! End-to-end acceptance suite. Each test prints one PASS line on
//! success (visible with `--nocapture`) or fails with a FAIL line in
//! the panic message:
//!
//! ```text
//! cargo test -p kerrsense --test acceptance -- --nocapture
//! ```
//!
//! The heavy detuning sweeps are computed once and shared across
//! criteria through lazy statics.

mod common;

use std::sync::LazyLock;
use std::time::Instant;

use kerrsense::dynamics::ObservableRecord;
use kerrsense::measurement::{
    estimate_precision_pair, model_precision_pair, output_moments, synthesize_traces,
    EstimatorOptions, MeasurementModel,
};
use kerrsense::metrology::{
    critical_detuning, delta_max_gap, fit_beta, sweep, PrecisionCurve, ReducedParams, Scaling,
    SweepOptions,
};
use kerrsense::units::{khz, mhz, to_hz};
use kerrsense::{
    classical, liouvillian, steady_state_with, FockSpace, PhysicalParams, SteadyStateOptions,
};

const G_TILDE_KHZ: f64 = 300.0;
const U_TILDE_KHZ: f64 = -9.14;
const KAPPA_TILDE_KHZ: f64 = 72.0;
/// Representative added noise of a HEMT-limited readout chain
/// (about 6 K noise temperature at 4.3 GHz).
const REPORT_N_AMP: f64 = 30.0;

fn reduced(l: f64, scaling: Scaling) -> ReducedParams {
    ReducedParams::new(
        0.0,
        khz(G_TILDE_KHZ),
        khz(U_TILDE_KHZ),
        khz(KAPPA_TILDE_KHZ),
        l,
        scaling,
    )
    .unwrap()
}

fn ideal_model() -> MeasurementModel {
    MeasurementModel::ideal(khz(KAPPA_TILDE_KHZ / 2.0))
}

fn amplifier_model(sigma2: f64) -> MeasurementModel {
    MeasurementModel::steady_defaults(khz(KAPPA_TILDE_KHZ / 2.0), sigma2).unwrap()
}

fn capped_options() -> SweepOptions {
    SweepOptions { dim_cap: 160, ..Default::default() }
}

struct SweepSet {
    l_values: Vec<f64>,
    rps: Vec<ReducedParams>,
    curves: Vec<PrecisionCurve>,
    elapsed_s: f64,
}

fn run_set(l_values: &[f64], scaling: Scaling, grid: &[f64]) -> SweepSet {
    let start = Instant::now();
    let model = ideal_model();
    let opts = capped_options();
    let mut rps = Vec::new();
    let mut curves = Vec::new();
    for &l in l_values {
        let rp = reduced(l, scaling);
        curves.push(sweep(&rp, grid, &model, &opts).expect("sweep"));
        rps.push(rp);
    }
    SweepSet { l_values: l_values.to_vec(), rps, curves, elapsed_s: start.elapsed().as_secs_f64() }
}

/// Scaling I over the five tabulated system sizes, table-window grid.
static SCALING_I: LazyLock<SweepSet> = LazyLock::new(|| {
    let grid: Vec<f64> = (0..31).map(|k| mhz(-0.5) + khz(25.0) * k as f64).collect();
    run_set(&[0.66, 0.80, 1.0, 1.31, 1.64], Scaling::I, &grid)
});

/// Scaling II over the tabulated subset, reduced-window grid.
static SCALING_II: LazyLock<SweepSet> = LazyLock::new(|| {
    let grid: Vec<f64> = (0..29).map(|k| mhz(-0.38) + khz(10.0) * k as f64).collect();
    run_set(&[1.0, 1.44, 1.99, 2.66], Scaling::II, &grid)
});

/// Indices where every curve in the set solved.
fn common_indices(set: &SweepSet) -> Vec<usize> {
    (0..set.curves[0].detunings.len())
        .filter(|&i| set.curves.iter().all(|c| !c.is_missing(i)))
        .collect()
}

/// Rebuild the pairwise precision of a solved curve under a different
/// measurement model (moments only; no new solves).
fn precision_under_model(curve: &PrecisionCurve, model: &MeasurementModel) -> Vec<f64> {
    let eps = curve.detunings[1] - curve.detunings[0];
    let mut out = vec![0.0; curve.detunings.len()];
    for i in 0..curve.detunings.len() - 1 {
        if curve.is_missing(i) || curve.is_missing(i + 1) {
            out[i] = f64::NAN;
            continue;
        }
        let rec = |k: usize| ObservableRecord {
            n_mean: curve.n_mean[k],
            n2_mean: curve.n_var[k] + curve.n_mean[k] * curve.n_mean[k],
            n_var: curve.n_var[k],
        };
        let a = output_moments(&rec(i), 1.0, model).unwrap();
        let b = output_moments(&rec(i + 1), 1.0, model).unwrap();
        out[i] = model_precision_pair(&a, &b, eps);
    }
    out
}

fn argmax(values: &[f64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && *v > best.1 {
            best = (i, *v);
        }
    }
    best.0
}

#[test]
fn c1_second_order_dpt_signature() {
    let set = &*SCALING_I;
    assert!(
        set.elapsed_s < 600.0,
        "criterion 1: FAIL — sweep set took {:.0} s (budget 600 s)",
        set.elapsed_s
    );

    // the maximum of the second derivative grows strictly with L
    let d2_max: Vec<f64> = set
        .curves
        .iter()
        .map(|c| {
            c.d2n
                .iter()
                .enumerate()
                .filter(|(i, _)| !c.is_missing(*i))
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    for w in d2_max.windows(2) {
        assert!(
            w[1] > w[0],
            "criterion 1: FAIL — d2n maxima not strictly increasing: {d2_max:?}"
        );
    }

    // photon-number curves collapse onto each other in the bright phase
    let delta_c = critical_detuning(khz(G_TILDE_KHZ), khz(KAPPA_TILDE_KHZ)).unwrap();
    let bright_from = delta_c + 2.0 * khz(KAPPA_TILDE_KHZ);
    let reference = set.l_values.iter().position(|l| *l == 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut bright_points = 0;
    for &i in &common_indices(set) {
        if set.curves[reference].detunings[i] < bright_from {
            continue;
        }
        bright_points += 1;
        let base = set.curves[reference].n_mean[i];
        for (l, curve) in set.l_values.iter().zip(&set.curves) {
            let dev = (curve.n_mean[i] / l - base).abs() / base.max(1e-12);
            worst = worst.max(dev);
        }
    }
    assert!(bright_points >= 5, "criterion 1: FAIL — too few bright-phase points");
    assert!(
        worst <= 0.05,
        "criterion 1: FAIL — collapse deviation {:.2}% exceeds 5%",
        100.0 * worst
    );
    println!(
        "criterion 1: PASS — d2n maxima strictly increasing {:?} 1/(rad/s)^2 per photon, \
         collapse within {:.2}% over {} bright points, {:.0} s at dim <= 160",
        d2_max.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(),
        100.0 * worst,
        bright_points,
        set.elapsed_s
    );
}

#[test]
fn c2_quadratic_precision_scaling() {
    let set = &*SCALING_I;
    let p_max: Vec<f64> = set.curves.iter().map(|c| c.p_max).collect();
    let (beta, se) = fit_beta(&set.l_values, &p_max).expect("beta fit");

    // context: the same moments under a noisy readout chain
    let noisy = amplifier_model(0.25).with_n_amp(REPORT_N_AMP).unwrap();
    let p_max_noisy: Vec<f64> = set
        .curves
        .iter()
        .map(|c| {
            let p = precision_under_model(c, &noisy);
            p[argmax(&p)]
        })
        .collect();
    let (beta_noisy, se_noisy) = fit_beta(&set.l_values, &p_max_noisy).expect("noisy beta fit");
    println!(
        "criterion 2: noise-free beta = {beta:.3} +- {se:.3}; \
         amplifier-chain beta (n_amp = {REPORT_N_AMP}) = {beta_noisy:.3} +- {se_noisy:.3}"
    );

    assert!(
        (beta - 2.0).abs() <= 0.3,
        "criterion 2: FAIL — noise-free fit_beta = {beta:.3} +- {se:.3}, outside 2.0 +- 0.3. \
         The quantum-limited moment noise grows with the signal (Delta n ~ sqrt(n) ~ sqrt(L)), \
         so the noise-free error-propagation precision scales linearly; the quadratic scaling \
         emerges when the readout noise is detuning-independent, as for the amplifier chain \
         (beta = {beta_noisy:.3} at n_amp = {REPORT_N_AMP})."
    );
    println!("criterion 2: PASS — noise-free beta = {beta:.3} +- {se:.3} within 2.0 +- 0.3");
}

#[test]
fn c3_critical_point_locking() {
    let set = &*SCALING_II;
    let gaps = delta_max_gap(&set.curves, &set.rps).expect("gap");
    let step = set.curves[0].detunings[1] - set.curves[0].detunings[0];
    let mut text = Vec::new();
    for w in gaps.windows(2) {
        let (l0, d0, c0) = w[0];
        let (l1, d1, c1) = w[1];
        let g0 = (d0 - c0).abs();
        let g1 = (d1 - c1).abs();
        text.push(format!("L={l0}: {:.1} kHz", to_hz(g0) / 1e3));
        assert!(
            g1 <= g0 + step + 1e-9,
            "criterion 3: FAIL — gap grew from {:.1} kHz (L={l0}) to {:.1} kHz (L={l1})",
            to_hz(g0) / 1e3,
            to_hz(g1) / 1e3
        );
    }
    let (l_last, d_last, c_last) = *gaps.last().unwrap();
    text.push(format!("L={l_last}: {:.1} kHz", to_hz((d_last - c_last).abs()) / 1e3));
    println!(
        "criterion 3: PASS — |delta_max - delta_c| non-increasing within one step: {}",
        text.join(", ")
    );
}

#[test]
fn c4_mean_field_consistency() {
    let set = &*SCALING_I;
    let reference = set.l_values.iter().position(|l| *l == 1.0).unwrap();
    let curve = &set.curves[reference];

    // zero detuning sits on the grid
    let zero = curve.detunings.iter().position(|d| d.abs() < 1e-6).expect("grid holds delta = 0");
    assert!(!curve.is_missing(zero), "criterion 4: FAIL — zero-detuning point missing");
    let n_zero = curve.n_mean[zero];
    let mean_field = (khz(G_TILDE_KHZ).powi(2) - khz(KAPPA_TILDE_KHZ).powi(2)).sqrt() / khz(-U_TILDE_KHZ);
    let dev = (n_zero - mean_field).abs() / mean_field;
    assert!(
        dev <= 0.15,
        "criterion 4: FAIL — n(0) = {n_zero:.3} deviates {:.1}% from mean field {mean_field:.3}",
        100.0 * dev
    );

    // bright-phase linear fit recovers the pump within 2%
    let delta_c = critical_detuning(khz(G_TILDE_KHZ), khz(KAPPA_TILDE_KHZ)).unwrap();
    let bright_from = delta_c + 2.0 * khz(KAPPA_TILDE_KHZ);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..curve.detunings.len() {
        if curve.detunings[i] >= bright_from && !curve.is_missing(i) {
            xs.push(curve.detunings[i]);
            ys.push(curve.n_mean[i]);
        }
    }
    let (g_fit, delta0) =
        kerrsense::calibration::extract_g(&xs, &ys, khz(KAPPA_TILDE_KHZ)).expect("bright-phase fit");
    let g_dev = (g_fit / khz(G_TILDE_KHZ) - 1.0).abs();
    assert!(
        g_dev <= 0.02,
        "criterion 4: FAIL — extracted G/2pi = {:.1} kHz deviates {:.2}% from 300 kHz",
        to_hz(g_fit) / 1e3,
        100.0 * g_dev
    );
    println!(
        "criterion 4: PASS — n(0) = {n_zero:.2} vs mean field {mean_field:.2} ({:.1}%); \
         G/2pi = {:.1} kHz ({:.2}%), x-intercept {:.1} kHz",
        100.0 * dev,
        to_hz(g_fit) / 1e3,
        100.0 * g_dev,
        to_hz(delta0) / 1e3
    );
}

#[test]
fn c5_classical_bound() {
    // the classical optimum sits exactly at zero drive detuning
    let kappa_ext = khz(36.0);
    let p0 = classical::classical_precision(
        &classical::ClassicalSetup::new(kappa_ext, 0.0, 1.0, kappa_ext / 10.0, 69e-6).unwrap(),
    );
    for k in 1..=1000 {
        let dp = 6.0 * kappa_ext * k as f64 / 1000.0;
        for sign in [-1.0, 1.0] {
            let p = classical::classical_precision(
                &classical::ClassicalSetup::new(kappa_ext, sign * dp, 1.0, kappa_ext / 10.0, 69e-6)
                    .unwrap(),
            );
            assert!(p < p0, "criterion 5: FAIL — precision not maximal at zero detuning");
        }
    }

    // output-photon scaling of the classical bound is exactly linear
    let nouts = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let ps: Vec<f64> = nouts
        .iter()
        .map(|a2| {
            classical::classical_precision_timed(
                &classical::ClassicalSetup::new(kappa_ext, 0.0, *a2, kappa_ext / 10.0, 69e-6)
                    .unwrap(),
            )
        })
        .collect();
    let (beta_classical, _) = fit_beta(&nouts, &ps).unwrap();
    assert!(
        (beta_classical - 1.0).abs() < 1e-12,
        "criterion 5: FAIL — classical exponent {beta_classical} not exactly 1"
    );

    // quantum-vs-classical report under the measured readout chain
    let set = &*SCALING_I;
    let noisy = amplifier_model(0.25).with_n_amp(REPORT_N_AMP).unwrap();
    let p_max: Vec<f64> = set
        .curves
        .iter()
        .map(|c| {
            let p = precision_under_model(c, &noisy);
            p[argmax(&p)]
        })
        .collect();
    let (beta_quantum, se) = fit_beta(&set.l_values, &p_max).unwrap();
    assert!(
        beta_quantum - beta_classical >= 0.7,
        "criterion 5: FAIL — beta_quantum {beta_quantum:.3} - beta_classical {beta_classical:.3} < 0.7"
    );
    println!(
        "criterion 5: PASS — classical max at delta_p = 0, beta_classical = {beta_classical:.3} (exact), \
         beta_quantum = {beta_quantum:.3} +- {se:.3} (n_amp = {REPORT_N_AMP}), gap {:.2}",
        beta_quantum - beta_classical
    );
}

#[test]
fn c6_estimator_pipeline() {
    let set = &*SCALING_I;
    let reference = set.l_values.iter().position(|l| *l == 1.0).unwrap();
    let curve = &set.curves[reference];
    let eps = curve.detunings[1] - curve.detunings[0];
    let model = amplifier_model(0.25);
    let p_model_curve = precision_under_model(curve, &model);
    let imax = argmax(&p_model_curve);

    let rec = |k: usize| ObservableRecord {
        n_mean: curve.n_mean[k],
        n2_mean: curve.n_var[k] + curve.n_mean[k] * curve.n_mean[k],
        n_var: curve.n_var[k],
    };

    // six consecutive feasible detunings straddling the optimum
    let mut start = imax.saturating_sub(2);
    let feasible = |i: usize| {
        output_moments(&rec(i), 1.0, &model)
            .ok()
            .map(|pm| pm.n_out_var <= pm.n_out_mean * pm.n_out_mean)
            .unwrap_or(false)
    };
    while start + 5 < curve.detunings.len() && !(start..start + 6).all(feasible) {
        start += 1;
    }
    assert!(
        (start..start + 6).all(feasible) && start <= imax && imax < start + 5,
        "criterion 6: FAIL — no feasible window straddling the optimum"
    );

    const M: usize = 100_000;
    let ensembles: Vec<_> = (start..start + 6)
        .map(|i| {
            let pm = output_moments(&rec(i), 1.0, &model).unwrap();
            synthesize_traces(&pm, &model, M, 9000 + i as u64).unwrap()
        })
        .collect();

    let opts = EstimatorOptions::default();
    let mut lines = Vec::new();
    for k in 0..5 {
        let i = start + k;
        let pm_a = output_moments(&rec(i), 1.0, &model).unwrap();
        let pm_b = output_moments(&rec(i + 1), 1.0, &model).unwrap();
        let p_model = model_precision_pair(&pm_a, &pm_b, eps);
        let est = estimate_precision_pair(&ensembles[k], &ensembles[k + 1], eps, &opts).unwrap();
        let dev = (est.aggregate - p_model).abs();
        assert!(
            dev <= 3.0 * est.aggregate_err,
            "criterion 6: FAIL — at delta/2pi = {:.0} kHz estimated {:.3e} vs model {:.3e} \
             (|dev| = {:.2e} > 3 x {:.2e})",
            to_hz(curve.detunings[i]) / 1e3,
            est.aggregate,
            p_model,
            dev,
            est.aggregate_err
        );
        lines.push(format!(
            "{:.0} kHz: {:.3e} vs {:.3e}",
            to_hz(curve.detunings[i]) / 1e3,
            est.aggregate,
            p_model
        ));
    }

    // noise ladder at the optimal pair: strictly decreasing precision
    let mut prev = f64::INFINITY;
    for sigma2 in [0.25, 0.5, 1.0, 2.0] {
        let m = amplifier_model(sigma2);
        let pm_a = output_moments(&rec(imax), 1.0, &m).unwrap();
        let pm_b = output_moments(&rec(imax + 1), 1.0, &m).unwrap();
        let te_a = synthesize_traces(&pm_a, &m, M, 501).unwrap();
        let te_b = synthesize_traces(&pm_b, &m, M, 502).unwrap();
        let est = estimate_precision_pair(&te_a, &te_b, eps, &opts).unwrap();
        assert!(
            est.aggregate < prev,
            "criterion 6: FAIL — precision did not decrease at sigma2 = {sigma2}"
        );
        prev = est.aggregate;
    }

    // gain invariance of the estimated precision
    let base = estimate_precision_pair(&ensembles[2], &ensembles[3], eps, &opts).unwrap();
    let scaled = estimate_precision_pair(
        &ensembles[2].rescaled(3.7),
        &ensembles[3].rescaled(3.7),
        eps,
        &opts,
    )
    .unwrap();
    let rel = (base.aggregate - scaled.aggregate).abs() / base.aggregate;
    assert!(rel <= 1e-10, "criterion 6: FAIL — gain invariance violated ({rel:.2e})");

    println!(
        "criterion 6: PASS — estimated vs model precision within 3 SE at 5 pairs [{}]; \
         noise ladder strictly decreasing; gain invariance {rel:.1e}",
        lines.join("; ")
    );
}

#[test]
fn c7_calibration_round_trips() {
    use kerrsense::calibration::{
        eigenmode_k0, flux_resonance, s21_fit, s21_model, DeviceModel, ResonanceFit,
    };
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // flux model reproduces the tabulated resonance at the reference flux
    let dm = DeviceModel::new(3.1e-2, kerrsense::units::ghz(4.5068), 1.8e-9, 0.7e-12, 6e-14, 6.5e-3)
        .unwrap();
    let w = flux_resonance(&dm, 0.66).unwrap();
    let w_dev = (w / kerrsense::units::ghz(4.334886) - 1.0).abs();
    assert!(
        w_dev < 1e-3,
        "criterion 7: FAIL — flux resonance off by {:.3e} (tolerance 1e-3)",
        w_dev
    );

    // eigenmode residual over random device models
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_residual: f64 = 0.0;
    for _ in 0..100 {
        let gamma0 = 1e-3 + 0.3 * rng.random::<f64>();
        let c_cav = 1e-12 * (0.2 + rng.random::<f64>());
        let c_j = 0.5 * rng.random::<f64>() * c_cav;
        let device =
            DeviceModel::new(gamma0, kerrsense::units::ghz(4.0), 1.8e-9, c_cav, c_j, 5e-3).unwrap();
        let flux = 1.3 * rng.random::<f64>();
        let x = eigenmode_k0(&device, flux).unwrap() * 5e-3;
        let lhs = device.l_j(flux).map(|lj| 1.8e-9 / lj).unwrap() - (c_j / c_cav) * x * x;
        let rhs = x * x.tan();
        worst_residual = worst_residual.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    assert!(
        worst_residual < 1e-10,
        "criterion 7: FAIL — eigenmode residual {worst_residual:.3e} above 1e-10"
    );

    // hanger fit round trip at SNR 100
    let truth = ResonanceFit {
        f_r: 4.334886e9,
        q_l: 6.02e4,
        q_c_abs: 6.3e4,
        phi: 0.12,
        a: 0.97,
        alpha: 0.4,
        tau: 3.5e-8,
    };
    let n = 301;
    let width = truth.f_r / truth.q_l;
    let freqs: Vec<f64> =
        (0..n).map(|k| truth.f_r + width * 18.0 * (k as f64 / (n - 1) as f64 - 0.5)).collect();
    let sigma = truth.a / (100.0 * 2f64.sqrt());
    let gauss = |r: &mut ChaCha8Rng| {
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
    let fit = s21_fit(&freqs, &data).unwrap();
    let fr_dev = (fit.f_r / truth.f_r - 1.0).abs();
    let ql_dev = (fit.q_l / truth.q_l - 1.0).abs();
    assert!(fr_dev < 1e-5, "criterion 7: FAIL — f_r recovered to {fr_dev:.2e} (tolerance 1e-5)");
    assert!(ql_dev < 0.01, "criterion 7: FAIL — Q_l recovered to {ql_dev:.2e} (tolerance 1%)");

    println!(
        "criterion 7: PASS — flux resonance within {:.2e}, eigenmode residual {:.1e}, \
         f_r within {:.1e}, Q_l within {:.2e} at SNR 100",
        w_dev, worst_residual, fr_dev, ql_dev
    );
}

#[test]
fn c8_oracle_equivalence() {
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let opts = SteadyStateOptions { residual_tol: 1e-9, leak_tol: 1.0 };
    let mut worst_fidelity: f64 = 1.0;
    let mut worst_action: f64 = 0.0;
    for _ in 0..25 {
        let dim = 6 + (rng.random::<f64>() * 3.0) as usize; // 6..8
        let space = FockSpace::new(dim).unwrap();
        let kappa = 0.5 + 1.5 * rng.random::<f64>();
        let params = PhysicalParams::overcoupled(
            3.0 * (rng.random::<f64>() - 0.5),
            0.8 * rng.random::<f64>(),
            -1.5 * rng.random::<f64>() - 0.01,
            kappa,
        )
        .unwrap();
        let liou = liouvillian(&params, space);

        // steady state: sparse trace-replaced solve vs dense inverse iteration
        let ss = steady_state_with(&liou, &opts).unwrap();
        let dense = common::dense_generator(&params, space);
        let oracle = common::oracle_state(space, &common::null_vector(&dense, 1e-8 * kappa));
        worst_fidelity = worst_fidelity.min(ss.fidelity(&oracle));

        // generator action: superoperator vs direct dense evaluation
        let rho = common::random_hermitian(dim, &mut rng);
        let via_super = liou.apply_matrix(&rho);
        let direct = common::direct_rhs(&params, space, &rho);
        let defect = (&via_super - &direct).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst_action = worst_action.max(defect);
    }
    assert!(
        worst_fidelity >= 1.0 - 1e-8,
        "criterion 8: FAIL — worst fidelity {worst_fidelity:.12}"
    );
    assert!(
        worst_action <= 1e-10,
        "criterion 8: FAIL — generator action defect {worst_action:.3e}"
    );
    println!(
        "criterion 8: PASS — 25 random sets: worst fidelity 1 - {:.1e}, action defect {:.1e}",
        1.0 - worst_fidelity,
        worst_action
    );
}

#[test]
fn c9_cli_determinism() {
    use std::process::Command;

    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.conf");
    std::fs::write(
        &config_path,
        "command = scaling\nscaling = I\ng_tilde = 300khz\nu_tilde = -9.14khz\n\
         kappa_tilde = 72khz\nl_values = 0.66,1.0\ndelta_start = -0.35mhz\n\
         delta_stop = -0.15mhz\npoints = 9\ndim_cap = 96\nseed = 11\n",
    )
    .unwrap();

    let bin = env!("CARGO_BIN_EXE_kerrsense");
    let run = |threads: &str, out: &std::path::Path| {
        let status = Command::new(bin)
            .args(["scaling", "--config"])
            .arg(&config_path)
            .args(["--threads", threads, "--out"])
            .arg(out)
            .status()
            .expect("binary runs");
        assert!(status.success(), "criterion 9: FAIL — run exited with {status}");
    };
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    run("1", &out1);
    run("4", &out2);

    let mut compared = 0;
    for name in ["curve_L0.66.csv", "curve_L1.csv", "beta.csv", "errors.csv"] {
        let a = std::fs::read(out1.join(name)).unwrap_or_else(|_| panic!("missing {name}"));
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "criterion 9: FAIL — {name} differs across thread counts");
        compared += 1;
    }
    println!("criterion 9: PASS — {compared} CSV artifacts byte-identical across 1 and 4 threads");
}
