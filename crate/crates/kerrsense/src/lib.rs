//! Simulation and analysis toolkit for a two-photon driven dissipative
//! Kerr resonator used as a critical frequency sensor.
//!
//! The crate covers the full chain from microscopic model to estimator
//! statistics:
//!
//! - [`fock`] / [`liouvillian`] — truncated Fock-space operators, the
//!   Kerr-parametric Hamiltonian, and the vectorized Lindblad generator.
//! - [`dynamics`] — sparse steady-state solver with fallbacks, adaptive
//!   master-equation integration, photon-number observables and
//!   two-time correlations.
//! - [`metrology`] — detuning sweeps under the two system-size scalings,
//!   discretized error-propagation precision, and power-law fits of the
//!   precision-scaling exponent.
//! - [`measurement`] — amplifier model mapping intracavity moments to
//!   measured power statistics, synthetic heterodyne trace ensembles,
//!   and the moment/precision estimators with error bars.
//! - [`calibration`] — flux-dependent resonance, SQUID eigenmode and
//!   Kerr formulas, the S21 hanger circle fit, and pump extraction.
//! - [`classical`] — the coherently driven linear-resonator benchmark
//!   whose precision is linear in photon number.
//! - [`config`] / [`runner`] — the batch front-end behind the `kerrsense`
//!   binary.
//!
//! Start with the runnable examples: `steady_state_basics` introduces
//! the solver, `dpt_signature`, `precision_scaling` and `scaling_ii`
//! reproduce the critical-sensing analyses, `measurement_pipeline` and
//! `trace_files` exercise the estimator layer and the trace-file
//! interface, `calibrate_device` covers device calibration, and
//! `classical_bound` contrasts the quantum and classical scalings.
//!
//! All rates are angular frequencies (rad/s); interfaces that quote
//! values "in Hz" mean frequency/2π, converted by [`units`].

pub mod calibration;
pub mod classical;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod liouvillian;
pub mod measurement;
pub mod metrology;
pub mod runner;
pub mod units;

#[cfg(test)]
pub(crate) mod testutil;

pub use calibration::{DeviceModel, OperatingPoint, ResonanceFit};
pub use classical::ClassicalSetup;
pub use config::{parse_config, Command, RunConfig};
pub use dynamics::{
    evolve, number_autocorrelation, observables, steady_state, steady_state_with, DensityMatrix,
    EvolveOptions, ObservableRecord, SteadyStateOptions,
};
pub use error::{Error, Result};
pub use fock::{annihilation, creation, hamiltonian, number, ComplexOperator, FockSpace, PhysicalParams};
pub use liouvillian::{liouvillian, Liouvillian};
pub use measurement::{
    autocorr_scale_factor, estimate_moments, estimate_precision_pair, ingest_traces, output_moments,
    synthesize_traces, MeasurementModel, PowerMoments, TraceEnsemble, TraceSeed,
};
pub use metrology::{
    critical_detuning, delta_max_gap, fit_beta, sweep, PrecisionCurve, ReducedParams, Scaling,
    SweepOptions,
};
pub use runner::{run, RunSummary};
