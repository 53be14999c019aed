//! Domain types shared by every solver: atomic rates, drive fields,
//! magnetic environment, and the containers for computed traces.
//!
//! Level scheme: one excited state `|e>` coupled to two ground sublevels
//! `|-1>` and `|+1>` (the two legs of the lambda). All frequencies are
//! angular (rad/s); see [`crate::units`] for boundary conversions.

use crate::error::{Diagnostic, Error, Result};
use crate::units;

/// Atomic and field rates. The single source of physical truth for the
/// solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Upper-level population decay rate (rad/s).
    pub gamma0: f64,
    /// Lower-level decay rate: transit of atoms through the beams (rad/s).
    pub gamma_t: f64,
    /// Optical-coherence decay rate (rad/s). Defaults to `gamma0 / 2`.
    pub gamma_opt: f64,
    /// Doppler half-width at half-maximum of the one-photon line (rad/s).
    pub doppler_hwhm: f64,
    /// Coupling Rabi frequency per driven leg (rad/s).
    pub omega_c: f64,
    /// Probe Rabi frequency per driven leg (rad/s).
    pub omega_p: f64,
}

impl SystemParams {
    /// Construct with `gamma_opt = gamma0 / 2`.
    pub fn new(gamma0: f64, gamma_t: f64, doppler_hwhm: f64, omega_c: f64, omega_p: f64) -> Self {
        Self {
            gamma0,
            gamma_t,
            gamma_opt: gamma0 / 2.0,
            doppler_hwhm,
            omega_c,
            omega_p,
        }
    }

    /// Override the optical-coherence decay rate (sensitivity studies).
    pub fn with_gamma_opt(mut self, gamma_opt: f64) -> Self {
        self.gamma_opt = gamma_opt;
        self
    }

    /// Reference cesium-cell parameter set used throughout the examples:
    /// Γ0/2π = 5.2 MHz, γt/2π = 40 kHz, W_D/2π = 190 MHz,
    /// Ω_C/2π = 0.4 MHz, Ω_P/2π = 70 kHz.
    pub fn cesium_cell() -> Self {
        Self::new(
            units::mhz(5.2),
            units::khz(40.0),
            units::mhz(190.0),
            units::mhz(0.4),
            units::khz(70.0),
        )
    }

    /// Saturation pump rate per leg (s^-1) driven by the coupling field:
    /// `i0 = omega_c^2 / (2 * gamma_opt)`.
    ///
    /// This is the population transfer rate obtained by adiabatic
    /// elimination of a resonant optical coherence, and it is the bridge
    /// that makes the intensity-driven rate model comparable with the
    /// field-driven density-matrix model.
    pub fn pump_rate_i0(&self) -> f64 {
        self.omega_c * self.omega_c / (2.0 * self.gamma_opt)
    }

    /// Pump-rate sideband magnitude (s^-1) of the coupling-probe beat on
    /// a leg carrying both fields: `omega_c * omega_p / (2 * gamma_opt)`.
    pub fn pump_rate_i1(&self) -> f64 {
        self.omega_c * self.omega_p / (2.0 * self.gamma_opt)
    }
}

/// Polarization configuration of the coupling/probe pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    /// Orthogonal linear polarizations: both fields drive both legs, and
    /// the probe amplitude carries opposite signs on the two legs, so the
    /// coupling-probe beatnotes on the two legs are in antiphase.
    LinPerpLin,
    /// Orthogonal circular polarizations: the coupling drives only the
    /// `|-1>` leg and the probe only the `|+1>` leg.
    CircOrthogonal,
}

impl Polarization {
    /// Per-leg coupling amplitude pattern `(leg -, leg +)`.
    pub fn coupling_pattern(&self) -> (f64, f64) {
        match self {
            Polarization::LinPerpLin => (1.0, 1.0),
            Polarization::CircOrthogonal => (1.0, 0.0),
        }
    }

    /// Per-leg probe amplitude pattern `(leg -, leg +)`.
    pub fn probe_pattern(&self) -> (f64, f64) {
        match self {
            Polarization::LinPerpLin => (1.0, -1.0),
            Polarization::CircOrthogonal => (0.0, 1.0),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Polarization::LinPerpLin => "lin_perp_lin",
            Polarization::CircOrthogonal => "circ_orthogonal",
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lin_perp_lin" => Ok(Polarization::LinPerpLin),
            "circ_orthogonal" => Ok(Polarization::CircOrthogonal),
            other => Err(Error::validation(
                "unknown_polarization",
                format!("'{other}' is not one of lin_perp_lin, circ_orthogonal"),
            )),
        }
    }
}

/// Drive configuration: detunings plus the intensity-picture pump rates
/// used by the rate-equation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDrive {
    pub polarization: Polarization,
    /// Coupling-probe detuning δ (rad/s); the probe runs at ω_C + δ.
    pub delta: f64,
    /// Coupling one-photon detuning from line center at B = 0 (rad/s).
    pub coupling_detuning: f64,
    /// DC saturation pump rate per leg (s^-1).
    pub i0: f64,
    /// Complex pump-rate sideband on the `|-1>` leg (s^-1).
    pub i1_minus: num_complex::Complex64,
    /// Complex pump-rate sideband on the `|+1>` leg (s^-1).
    pub i1_plus: num_complex::Complex64,
}

impl FieldDrive {
    /// Build the drive implied by the Rabi frequencies in `params`:
    /// `i0 = Ω_C²/(2Γ)` and `i1∓ = ±Ω_CΩ_P/(2Γ)` on the legs the
    /// polarization actually drives.
    pub fn from_rabi(params: &SystemParams, polarization: Polarization, delta: f64) -> Self {
        let i1 = params.pump_rate_i1();
        let (pm, pp) = polarization.probe_pattern();
        let (cm, cp) = polarization.coupling_pattern();
        // A beatnote exists only on legs carrying both fields.
        let i1_minus = num_complex::Complex64::new(cm * pm * i1, 0.0);
        let i1_plus = num_complex::Complex64::new(cp * pp * i1, 0.0);
        Self {
            polarization,
            delta,
            coupling_detuning: 0.0,
            i0: params.pump_rate_i0(),
            i1_minus,
            i1_plus,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_coupling_detuning(mut self, detuning: f64) -> Self {
        self.coupling_detuning = detuning;
        self
    }
}

/// Uniform field plus linear gradient along the cell axis; maps position
/// to ground- and excited-state Zeeman shifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticEnvironment {
    /// Uniform field component (G).
    pub b0: f64,
    /// Linear gradient (G/cm).
    pub db_dz: f64,
    /// Cell length (cm).
    pub cell_length: f64,
    /// Ground-state Zeeman coefficient (MHz/G).
    pub zeeman_ground: f64,
    /// Excited-state Zeeman coefficient (MHz/G).
    pub zeeman_excited: f64,
}

impl MagneticEnvironment {
    pub const DEFAULT_CELL_LENGTH_CM: f64 = 5.0;
    pub const DEFAULT_ZEEMAN_GROUND_MHZ_PER_G: f64 = -0.35;
    pub const DEFAULT_ZEEMAN_EXCITED_MHZ_PER_G: f64 = -0.95;

    /// Uniform field `b0` (G) with gradient `db_dz` (G/cm) over the
    /// default 5 cm cell, with the cesium Zeeman coefficients.
    pub fn new(b0: f64, db_dz: f64) -> Self {
        Self {
            b0,
            db_dz,
            cell_length: Self::DEFAULT_CELL_LENGTH_CM,
            zeeman_ground: Self::DEFAULT_ZEEMAN_GROUND_MHZ_PER_G,
            zeeman_excited: Self::DEFAULT_ZEEMAN_EXCITED_MHZ_PER_G,
        }
    }

    /// Field magnitude at position `z` (cm from the cell entrance).
    pub fn field_at(&self, z: f64) -> f64 {
        self.b0 + self.db_dz * z
    }
}

/// Ground (Δ_Z) and excited Zeeman shifts at position `z`, both as
/// angular frequencies. Ground sublevels `|∓1>` sit at `∓Δ_Z`, so the
/// Raman (two-photon) resonances fall at coupling-probe detunings
/// `δ = ±2Δ_Z`.
pub fn zeeman_shifts(env: &MagneticEnvironment, z: f64) -> Result<(f64, f64)> {
    if env.cell_length <= 0.0 {
        return Err(Error::validation(
            "cell_length_nonpositive",
            format!("cell_length = {} cm must be > 0", env.cell_length),
        ));
    }
    if !(0.0..=env.cell_length).contains(&z) {
        return Err(Error::validation(
            "position_outside_cell",
            format!("z = {z} cm outside [0, {}] cm", env.cell_length),
        ));
    }
    let b = env.field_at(z);
    Ok((units::mhz(env.zeeman_ground * b), units::mhz(env.zeeman_excited * b)))
}

/// A validated `(SystemParams, FieldDrive)` pair plus any soft warnings
/// raised along the way. Immutable value object; safe to share across
/// workers.
#[derive(Debug, Clone)]
pub struct ValidatedSetup {
    pub params: SystemParams,
    pub drive: FieldDrive,
    pub warnings: Vec<Diagnostic>,
}

/// Check every invariant of the parameter set and drive. Hard violations
/// are collected into one `Error::Validation`; soft ones (probe above the
/// perturbative comfort zone but still below the coupling) come back as
/// warnings on the validated object.
pub fn validate(params: SystemParams, drive: FieldDrive) -> Result<ValidatedSetup> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    for (name, v) in [
        ("gamma0", params.gamma0),
        ("gamma_t", params.gamma_t),
        ("gamma_opt", params.gamma_opt),
        ("doppler_hwhm", params.doppler_hwhm),
        ("omega_c", params.omega_c),
        ("omega_p", params.omega_p),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            errors.push(Diagnostic::new(
                "rate_not_positive",
                format!("{name} = {v} rad/s must be strictly positive and finite"),
            ));
        }
    }

    if params.gamma_t >= params.gamma0 {
        errors.push(Diagnostic::new(
            "transit_not_slow",
            format!(
                "gamma_t = {} must be below gamma0 = {} (transit is the slow scale)",
                params.gamma_t, params.gamma0
            ),
        ));
    }

    if params.omega_p > params.omega_c {
        errors.push(Diagnostic::new(
            "probe_not_perturbative",
            format!(
                "omega_p = {} exceeds omega_c = {}; first-order probe expansion invalid",
                params.omega_p, params.omega_c
            ),
        ));
    } else if params.omega_p > 0.2 * params.omega_c {
        warnings.push(Diagnostic::new(
            "probe_above_soft_bound",
            format!(
                "omega_p/omega_c = {:.3} > 0.2; first-order results degrade",
                params.omega_p / params.omega_c
            ),
        ));
    }

    if params.omega_p > 0.2 * params.gamma0 {
        warnings.push(Diagnostic::new(
            "probe_comparable_to_gamma0",
            format!(
                "omega_p/gamma0 = {:.3} > 0.2; weak-probe assumption degrades",
                params.omega_p / params.gamma0
            ),
        ));
    }

    if drive.i0 < 0.0 || !drive.i0.is_finite() {
        errors.push(Diagnostic::new(
            "pump_rate_negative",
            format!("i0 = {} s^-1 must be nonnegative and finite", drive.i0),
        ));
    }

    for (name, i1) in [("i1_minus", drive.i1_minus), ("i1_plus", drive.i1_plus)] {
        if i1.norm() > 0.2 * drive.i0 {
            errors.push(Diagnostic::new(
                "sideband_not_perturbative",
                format!(
                    "|{name}| = {} exceeds 0.2 * i0 = {}",
                    i1.norm(),
                    0.2 * drive.i0
                ),
            ));
        }
    }

    if drive.polarization == Polarization::LinPerpLin {
        let sum = drive.i1_plus + drive.i1_minus;
        if sum.norm() > 1e-12 * (drive.i1_minus.norm() + drive.i1_plus.norm()).max(f64::MIN_POSITIVE)
        {
            errors.push(Diagnostic::new(
                "antiphase_constraint_violated",
                format!(
                    "lin_perp_lin requires i1_plus == -i1_minus; got i1_minus = {}, i1_plus = {}",
                    drive.i1_minus, drive.i1_plus
                ),
            ));
        }
    }

    if errors.is_empty() {
        Ok(ValidatedSetup {
            params,
            drive,
            warnings,
        })
    } else {
        Err(Error::Validation(errors))
    }
}

/// Which model produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Rate,
    Floquet,
}

impl ModelTag {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelTag::Rate => "rate",
            ModelTag::Floquet => "floquet",
        }
    }
}

impl std::str::FromStr for ModelTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rate" => Ok(ModelTag::Rate),
            "floquet" => Ok(ModelTag::Floquet),
            other => Err(Error::validation(
                "unknown_model",
                format!("'{other}' is not one of rate, floquet"),
            )),
        }
    }
}

/// Sampled probe transmission versus coupling-probe detuning, with
/// provenance metadata.
#[derive(Debug, Clone)]
pub struct SpectrumTrace {
    /// Detunings (rad/s), strictly increasing.
    pub deltas: Vec<f64>,
    /// Transmission per sample, each in (0, 1].
    pub transmission: Vec<f64>,
    pub model: ModelTag,
    /// Velocity nodes actually used by the Doppler average (1 for rate).
    pub velocity_nodes: usize,
    /// Cell positions actually used by the gradient average (1 for rate).
    pub z_nodes: usize,
}

impl SpectrumTrace {
    /// Check the container invariants (monotone grid, physical range).
    pub fn check(&self) -> Result<()> {
        if self.deltas.len() != self.transmission.len() {
            return Err(Error::validation(
                "trace_length_mismatch",
                format!("{} deltas vs {} samples", self.deltas.len(), self.transmission.len()),
            ));
        }
        if self.deltas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "trace_grid_not_increasing",
                "delta grid must be strictly increasing",
            ));
        }
        if self
            .transmission
            .iter()
            .any(|&t| !(t > 0.0 && t <= 1.0 + 1e-12))
        {
            return Err(Error::validation(
                "transmission_out_of_range",
                "transmission samples must lie in (0, 1]",
            ));
        }
        Ok(())
    }
}

/// Which memory a storage run addressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryTag {
    /// Population-based storage: orthogonal linear polarizations, δ = 0.
    Cpo,
    /// Raman-coherence storage: orthogonal circular polarizations, δ at
    /// the two-photon resonance.
    Eit,
}

impl MemoryTag {
    pub fn tag(&self) -> &'static str {
        match self {
            MemoryTag::Cpo => "cpo",
            MemoryTag::Eit => "eit",
        }
    }
}

impl std::str::FromStr for MemoryTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cpo" => Ok(MemoryTag::Cpo),
            "eit" => Ok(MemoryTag::Eit),
            other => Err(Error::validation(
                "unknown_memory",
                format!("'{other}' is not one of cpo, eit"),
            )),
        }
    }
}

/// Retrieved-pulse amplitude versus storage time.
#[derive(Debug, Clone)]
pub struct DecayCurve {
    /// Storage times (s), strictly increasing.
    pub storage_times: Vec<f64>,
    /// Peak retrieved amplitudes (arbitrary units), nonnegative.
    pub amplitudes: Vec<f64>,
    pub memory: MemoryTag,
}

impl DecayCurve {
    pub fn check(&self) -> Result<()> {
        if self.storage_times.len() != self.amplitudes.len() {
            return Err(Error::validation(
                "curve_length_mismatch",
                format!(
                    "{} times vs {} amplitudes",
                    self.storage_times.len(),
                    self.amplitudes.len()
                ),
            ));
        }
        if self.storage_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "curve_grid_not_increasing",
                "storage times must be strictly increasing",
            ));
        }
        if self.amplitudes.iter().any(|&a| a < 0.0 || !a.is_finite()) {
            return Err(Error::validation(
                "amplitude_negative",
                "amplitudes must be nonnegative and finite",
            ));
        }
        Ok(())
    }
}
