//! Three-level rate-equation model of the driven lambda system.
//!
//! The two legs are pumped by intensities `i∓(t) = i0 + i1∓ e^{-iδt} + c.c.`
//! (rates in s^-1). Populations are normalized to unit stationary total:
//! each ground state relaxes toward 1/2 at the transit rate. Closed-form
//! first-harmonic inversions are available for perturbative sidebands;
//! the time-domain integrator doubles as their independent check and as
//! the population kernel for storage dynamics.
//!
//! Inversion harmonics (`w0`, `w1∓`) follow the convention in which the
//! unsaturated dc inversion is -1, i.e. they are `2 (n_e - n_∓)` in terms
//! of the unit-total populations.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::params::{FieldDrive, ModelTag, SpectrumTrace, SystemParams};

/// Populations of `|e>`, `|-1>`, `|+1>`; total is 1 in steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationState {
    pub n_e: f64,
    pub n_m1: f64,
    pub n_p1: f64,
}

impl PopulationState {
    pub fn total(&self) -> f64 {
        self.n_e + self.n_m1 + self.n_p1
    }

    /// Thermal mixture with an empty excited state.
    pub fn ground_mixture() -> Self {
        Self {
            n_e: 0.0,
            n_m1: 0.5,
            n_p1: 0.5,
        }
    }
}

/// DC part of the population inversion for symmetric pumping `i0` on
/// both legs: `w0 = -(Γ0 + γt) / (Γ0 + γt + 3 i0)`.
pub fn dc_inversion(params: &SystemParams, i0: f64) -> Result<f64> {
    if i0 < 0.0 || !i0.is_finite() {
        return Err(Error::validation(
            "pump_rate_negative",
            format!("i0 = {i0} s^-1 must be nonnegative and finite"),
        ));
    }
    let g = params.gamma0 + params.gamma_t;
    Ok(-g / (g + 3.0 * i0))
}

/// First-harmonic inversions on the two legs, split into the broad and
/// narrow Lorentzian contributions:
///
/// `w1∓ = -(w0/2) [ broad ± narrow ]`, with
/// `broad  = 3 (i1- + i1+) / (Γ0 + γt + 3 i0 - iδ)` and
/// `narrow =   (i1- - i1+) / (γt + i0 - iδ)`.
///
/// For antiphase sidebands (`i1+ = -i1-`) the broad term vanishes
/// identically and only the narrow resonance of half-width `γt + i0`
/// survives.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicInversion {
    pub w0: f64,
    pub w1_minus: C64,
    pub w1_plus: C64,
    /// Broad-term contribution (half-width `Γ0 + γt + 3 i0`).
    pub broad_term: C64,
    /// Narrow-term contribution (half-width `γt + i0`).
    pub narrow_term: C64,
}

/// Closed-form first harmonics of the inversion for a perturbative drive.
pub fn first_harmonics(params: &SystemParams, drive: &FieldDrive) -> Result<HarmonicInversion> {
    let w0 = dc_inversion(params, drive.i0)?;
    let g = params.gamma0 + params.gamma_t;
    let denom_broad = C64::new(g + 3.0 * drive.i0, -drive.delta);
    let denom_narrow = C64::new(params.gamma_t + drive.i0, -drive.delta);
    let broad_term = 3.0 * (drive.i1_minus + drive.i1_plus) / denom_broad;
    let narrow_term = (drive.i1_minus - drive.i1_plus) / denom_narrow;
    Ok(HarmonicInversion {
        w0,
        w1_minus: -0.5 * w0 * (broad_term + narrow_term),
        w1_plus: -0.5 * w0 * (broad_term - narrow_term),
        broad_term,
        narrow_term,
    })
}

/// Normalized in-phase probe response of the rate model: the average of
/// `w1/i1` over the probe-carrying legs (those with a nonzero sideband).
/// `None` when no leg carries a beatnote (e.g. orthogonal circular
/// polarizations, where the rate model predicts a flat spectrum).
pub fn probe_response(h: &HarmonicInversion, drive: &FieldDrive) -> Option<C64> {
    let mut acc = C64::new(0.0, 0.0);
    let mut n = 0;
    if drive.i1_minus.norm() > 0.0 {
        acc += h.w1_minus / drive.i1_minus;
        n += 1;
    }
    if drive.i1_plus.norm() > 0.0 {
        acc += h.w1_plus / drive.i1_plus;
        n += 1;
    }
    (n > 0).then(|| acc / n as f64)
}

/// Probe transmission of the rate model over a detuning grid.
///
/// The saturated absorption seen by the probe sideband on a leg is
/// `-w0 - i0 Re[w1/i1]`; the transmitted baseline is the dc saturated
/// value `exp(-od * (-w0))` with `od = -ln(linear_transmission)`
/// anchored to the unsaturated line-center transmission, and the beat
/// response enters to first order so the resonance keeps its exact
/// Lorentzian shape:
///
/// `T(δ) = exp(-od (-w0)) * (1 + od * i0 * Re[w1/i1](δ))`.
pub fn rate_spectrum(
    params: &SystemParams,
    drive: &FieldDrive,
    deltas: &[f64],
    linear_transmission: f64,
) -> Result<SpectrumTrace> {
    if deltas.is_empty() {
        return Err(Error::validation("empty_delta_grid", "delta grid is empty"));
    }
    if deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation(
            "trace_grid_not_increasing",
            "delta grid must be strictly increasing",
        ));
    }
    if !(linear_transmission > 0.0 && linear_transmission <= 1.0) {
        return Err(Error::validation(
            "linear_transmission_out_of_range",
            format!("linear transmission {linear_transmission} must lie in (0, 1]"),
        ));
    }
    let od = -linear_transmission.ln();
    let w0 = dc_inversion(params, drive.i0)?;
    let t_sat = (-od * (-w0)).exp();
    let transmission = deltas
        .iter()
        .map(|&d| {
            let h = first_harmonics(params, &drive.with_delta(d))?;
            let chi = probe_response(&h, drive).map_or(0.0, |c| c.re);
            Ok(t_sat * (1.0 + od * drive.i0 * chi))
        })
        .collect::<Result<Vec<_>>>()?;
    let trace = SpectrumTrace {
        deltas: deltas.to_vec(),
        transmission,
        model: ModelTag::Rate,
        velocity_nodes: 1,
        z_nodes: 1,
    };
    trace.check()?;
    Ok(trace)
}

/// Integrate the population equations with arbitrary time-dependent leg
/// intensities, sampling the state at `sample_times` (nondecreasing,
/// within `[0, t_end]`). The trajectory conserves the unit total exactly
/// when started on it.
pub fn integrate_populations(
    params: &SystemParams,
    i_minus: impl Fn(f64) -> f64,
    i_plus: impl Fn(f64) -> f64,
    initial: PopulationState,
    t_end: f64,
    opts: &OdeOptions,
    sample_times: &[f64],
) -> Result<Vec<PopulationState>> {
    let g0 = params.gamma0;
    let gt = params.gamma_t;
    let mut f = |t: f64, y: &[f64; 3]| {
        let [ne, nm, np] = *y;
        let im = i_minus(t);
        let ip = i_plus(t);
        debug_assert!(im >= 0.0 && ip >= 0.0, "negative intensity at t = {t}");
        let pump_m = im * (nm - ne);
        let pump_p = ip * (np - ne);
        [
            -(g0 + gt) * ne + pump_m + pump_p,
            0.5 * gt + 0.5 * g0 * ne - gt * nm - pump_m,
            0.5 * gt + 0.5 * g0 * ne - gt * np - pump_p,
        ]
    };
    let states = ode::integrate_sampled(
        &mut f,
        0.0,
        t_end,
        [initial.n_e, initial.n_m1, initial.n_p1],
        opts,
        sample_times,
    )?;
    Ok(states
        .into_iter()
        .map(|[n_e, n_m1, n_p1]| PopulationState { n_e, n_m1, n_p1 })
        .collect())
}

/// Step-size guard for modulated intensities: resolve the faster of the
/// upper-level decay and the beat period by a factor of ten.
pub fn modulation_max_step(params: &SystemParams, delta: f64) -> f64 {
    let fast = params.gamma0.max(delta.abs());
    0.1 / fast
}

/// Algebraic steady state with constant leg intensities (time derivatives
/// zeroed), in the unit-total normalization.
pub fn steady_state_populations(
    params: &SystemParams,
    i_minus: f64,
    i_plus: f64,
) -> PopulationState {
    let g0 = params.gamma0;
    let gt = params.gamma_t;
    let a = nalgebra::Matrix3::new(
        -(g0 + gt) - i_minus - i_plus,
        i_minus,
        i_plus,
        0.5 * g0 + i_minus,
        -gt - i_minus,
        0.0,
        0.5 * g0 + i_plus,
        0.0,
        -gt - i_plus,
    );
    let b = nalgebra::Vector3::new(0.0, -0.5 * gt, -0.5 * gt);
    let sol = a.lu().solve(&b).expect("steady-state system is nonsingular");
    PopulationState {
        n_e: sol[0],
        n_m1: sol[1],
        n_p1: sol[2],
    }
}

/// Inversion first harmonics extracted from the periodic steady state of
/// the time-domain equations: integrate through 20 transit times, then
/// project the inversions of the next `periods` beat periods onto
/// `e^{+iδt}`. Returned in the same normalization as
/// [`first_harmonics`] (dark-state inversion of -1).
pub fn first_harmonics_from_ode(
    params: &SystemParams,
    drive: &FieldDrive,
    periods: usize,
) -> Result<(C64, C64)> {
    assert!(drive.delta != 0.0, "harmonic projection requires delta != 0");
    let i_of = |i1: C64| move |t: f64| drive.i0 + 2.0 * (i1 * C64::new(0.0, -drive.delta * t).exp()).re;
    let i_minus = i_of(drive.i1_minus);
    let i_plus = i_of(drive.i1_plus);

    let warmup = 20.0 / params.gamma_t;
    let period = std::f64::consts::TAU / drive.delta.abs();
    let opts = OdeOptions {
        max_step: modulation_max_step(params, drive.delta),
        ..OdeOptions::default()
    };

    let g0 = params.gamma0;
    let gt = params.gamma_t;
    let mut f = |t: f64, y: &[f64; 3]| {
        let [ne, nm, np] = *y;
        let pump_m = i_minus(t) * (nm - ne);
        let pump_p = i_plus(t) * (np - ne);
        [
            -(g0 + gt) * ne + pump_m + pump_p,
            0.5 * gt + 0.5 * g0 * ne - gt * nm - pump_m,
            0.5 * gt + 0.5 * g0 * ne - gt * np - pump_p,
        ]
    };

    let y0 = [0.0, 0.5, 0.5];
    let y_warm = ode::integrate(&mut f, 0.0, warmup, y0, &opts)?;

    // Uniform sampling over an integer number of periods makes the
    // projection a DFT bin: exact for the harmonic content up to aliasing.
    let samples_per_period = 256;
    let n = periods * samples_per_period;
    let dt = period / samples_per_period as f64;
    let mut acc_m = C64::new(0.0, 0.0);
    let mut acc_p = C64::new(0.0, 0.0);
    let mut y = y_warm;
    let mut t = warmup;
    for _ in 0..n {
        let phase = C64::new(0.0, drive.delta * t).exp();
        acc_m += 2.0 * (y[0] - y[1]) * phase;
        acc_p += 2.0 * (y[0] - y[2]) * phase;
        let t_next = t + dt;
        y = ode::integrate(&mut f, t, t_next, y, &opts)?;
        t = t_next;
    }
    Ok((acc_m / n as f64, acc_p / n as f64))
}
