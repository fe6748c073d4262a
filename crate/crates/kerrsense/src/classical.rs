//! Classical benchmark: phase-sensitive frequency estimation with a
//! coherently driven, lossless linear resonator read out in reflection
//! by homodyne detection. Its precision is linear in the photon number,
//! the baseline the critical protocol is compared against.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Drive and readout configuration of the linear benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalSetup {
    /// External coupling (rad/s).
    pub kappa_ext: f64,
    /// Detuning between drive and prior frequency Δ_p (rad/s).
    pub delta_p: f64,
    /// Input photon number |α|².
    pub alpha2: f64,
    /// Drive bandwidth B (rad/s).
    pub bandwidth: f64,
    /// Measurement time T (s).
    pub time: f64,
}

impl ClassicalSetup {
    pub fn new(kappa_ext: f64, delta_p: f64, alpha2: f64, bandwidth: f64, time: f64) -> Result<Self> {
        if !(kappa_ext > 0.0) {
            return Err(Error::InvalidParameter("kappa_ext must be positive".into()));
        }
        if alpha2 < 0.0 {
            return Err(Error::InvalidParameter("alpha2 must be non-negative".into()));
        }
        if bandwidth * time < 0.0 {
            return Err(Error::InvalidParameter("bandwidth-time product must be non-negative".into()));
        }
        Ok(Self { kappa_ext, delta_p, alpha2, bandwidth, time })
    }

    /// Output photon number N_out = B T |α|² / 2π.
    pub fn n_out(&self) -> f64 {
        self.bandwidth * self.time * self.alpha2 / std::f64::consts::TAU
    }
}

/// Reflection coefficient Γ = (κ_ext/2 + iΔ)/(κ_ext/2 − iΔ); unimodular.
pub fn reflection(delta_p: f64, kappa_ext: f64) -> Complex64 {
    let half = 0.5 * kappa_ext;
    Complex64::new(half, delta_p) / Complex64::new(half, -delta_p)
}

/// First-order response of the optimal homodyne quadrature to a small
/// frequency shift: ∂_δ⟨p_out⟩ = −4 κ_ext α / (κ_ext² + 4Δ_p²).
pub fn homodyne_slope(setup: &ClassicalSetup) -> f64 {
    let k = setup.kappa_ext;
    -4.0 * k * setup.alpha2.sqrt() / (k * k + 4.0 * setup.delta_p * setup.delta_p)
}

/// Single-mode classical precision 𝒫 = 64 κ_ext² |α|² / (κ_ext² + 4Δ_p²)².
pub fn classical_precision(setup: &ClassicalSetup) -> f64 {
    let k = setup.kappa_ext;
    let den = k * k + 4.0 * setup.delta_p * setup.delta_p;
    64.0 * k * k * setup.alpha2 / (den * den)
}

/// Finite-time, finite-bandwidth form: the single-mode precision scaled
/// by the collected output photon number N_out = B T |α| ²/2π.
pub fn classical_precision_timed(setup: &ClassicalSetup) -> f64 {
    let k = setup.kappa_ext;
    let den = k * k + 4.0 * setup.delta_p * setup.delta_p;
    64.0 * k * k / (den * den) * setup.n_out()
}
