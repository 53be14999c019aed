//! Simulation of probe transmission and light storage in a driven
//! three-level lambda system.
//!
//! Two spectral models are implemented and cross-validated: a
//! closed-form rate-equation model of the population beat (the narrow
//! central resonance) and a first-harmonic Floquet solution of the full
//! density matrix (central plus Raman side resonances), the latter with
//! Doppler-velocity averaging, magnetic-gradient position averaging, and
//! exponential absorption through the cell. A time-domain module
//! simulates write/store/read cycles for population- and
//! coherence-based storage, and a small fitting toolkit extracts
//! linewidths and decay constants.
//!
//! Internally every frequency is angular (rad/s); configuration and file
//! formats use MHz/kHz and convert at the boundary ([`units`]).
//!
//! Entry points:
//! - [`rate::rate_spectrum`] / [`rate::first_harmonics`] for the
//!   population model;
//! - [`floquet::transmission_spectrum`] for averaged spectra;
//! - [`memory::decay_curve`] for storage lifetimes;
//! - [`analysis`] for the fitters;
//! - [`runs`] for the file-producing batch drivers behind the CLI.

pub mod analysis;
pub mod config;
pub mod error;
pub mod floquet;
pub mod memory;
pub mod ode;
pub mod params;
pub mod quadrature;
pub mod rate;
pub mod runs;
pub mod units;

pub use error::{Diagnostic, Error, Result};
pub use params::{
    validate, zeeman_shifts, DecayCurve, FieldDrive, MagneticEnvironment, MemoryTag, ModelTag,
    Polarization, SpectrumTrace, SystemParams, ValidatedSetup,
};
