//! Unit conversions at the API boundary.
//!
//! Every frequency-like quantity is stored internally as an angular
//! frequency in rad/s. Configuration files and CLI arguments carry
//! ordinary frequencies (MHz, kHz) and are converted exactly once, here.
//! Mixing rates and detunings in the solver kernels is then safe: there
//! is a single 2π convention for the whole crate.

use std::f64::consts::TAU;

/// Ordinary frequency in MHz to angular frequency in rad/s.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * 1.0e6 * f
}

/// Ordinary frequency in kHz to angular frequency in rad/s.
#[inline]
pub fn khz(f: f64) -> f64 {
    TAU * 1.0e3 * f
}

/// Angular frequency in rad/s to ordinary frequency in MHz.
#[inline]
pub fn to_mhz(w: f64) -> f64 {
    w / (TAU * 1.0e6)
}

/// Angular frequency in rad/s to ordinary frequency in kHz.
#[inline]
pub fn to_khz(w: f64) -> f64 {
    w / (TAU * 1.0e3)
}

/// Microseconds to seconds.
#[inline]
pub fn us(t: f64) -> f64 {
    1.0e-6 * t
}

/// Seconds to microseconds.
#[inline]
pub fn to_us(t: f64) -> f64 {
    1.0e6 * t
}
