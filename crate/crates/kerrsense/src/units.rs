//! Unit helpers. All rates in this crate are angular frequencies (rad/s);
//! interfaces quote values as frequency/2π, so these convert Hz-like inputs.

use std::f64::consts::TAU;

/// Frequency in Hz (as f/2π) to angular frequency in rad/s.
pub fn hz(f: f64) -> f64 {
    TAU * f
}

/// Frequency in kHz to rad/s.
pub fn khz(f: f64) -> f64 {
    TAU * f * 1e3
}

/// Frequency in MHz to rad/s.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Frequency in GHz to rad/s.
pub fn ghz(f: f64) -> f64 {
    TAU * f * 1e9
}

/// Angular frequency in rad/s back to Hz (f/2π).
pub fn to_hz(w: f64) -> f64 {
    w / TAU
}

/// Microseconds to seconds.
pub fn us(t: f64) -> f64 {
    t * 1e-6
}

/// Nanoseconds to seconds.
pub fn ns(t: f64) -> f64 {
    t * 1e-9
}
