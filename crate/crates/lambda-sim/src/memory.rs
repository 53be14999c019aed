//! Time-domain light-storage simulation: write, store, read.
//!
//! The write phase drives the full density matrix at each cell position
//! to its stationary state under both fields. During storage the fields
//! are off: populations relax at the transit rate independently of the
//! magnetic field, while the ground coherence also precesses at the
//! local Raman splitting `2 Δ_Z(z)` and therefore dephases across the
//! cell under a gradient. At read-on the coupling alone converts the
//! surviving pattern into an emitted field; the reported signal is the
//! coherent cell average projected on the probe polarization channel.
//!
//! Velocity classes share the stored ground-state pattern (copropagating
//! beams, velocity-free two-photon condition), so the time integration
//! runs once per position for the resonant class and the Doppler
//! distribution enters the readout as an averaged linear transfer
//! factor.
//!
//! Population (`cpo`) storage uses orthogonal linear polarizations at
//! zero coupling-probe detuning; coherence (`eit`) storage uses
//! orthogonal circular polarizations with the detuning parked on the
//! two-photon resonance at mid-cell.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::floquet::{eit_resonance_delta, LocalConditions};
use crate::ode::{self, OdeOptions};
use crate::params::{
    DecayCurve, FieldDrive, MagneticEnvironment, MemoryTag, Polarization, SystemParams,
};
use crate::quadrature::{position_grid, VelocityGrid, VelocityQuadratureSpec};

const E: usize = 0;
const M: usize = 1;
const P: usize = 2;

/// Timing of one write/store/read cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSequence {
    /// Duration both fields are on (s); must reach stationarity.
    pub write_duration: f64,
    /// Dark interval between write-off and read-on (s).
    pub storage_time: f64,
    /// Observation window after read-on (s).
    pub read_duration: f64,
    /// Switching-edge ramp time (s); 0 is an ideal step.
    pub ramp: f64,
}

impl PulseSequence {
    /// 100 us write, 6 us read window, ideal switching.
    pub fn standard(storage_time: f64) -> Self {
        Self {
            write_duration: 100.0e-6,
            storage_time,
            read_duration: 6.0e-6,
            ramp: 0.0,
        }
    }

    pub fn check(&self, params: &SystemParams) -> Result<()> {
        if self.write_duration < 0.0
            || self.storage_time < 0.0
            || self.read_duration <= 0.0
            || self.ramp < 0.0
        {
            return Err(Error::validation(
                "sequence_durations_invalid",
                format!("{self:?}: durations must be nonnegative (read window positive)"),
            ));
        }
        let min_write = 10.0 / params.gamma_t;
        if self.write_duration < min_write {
            return Err(Error::validation(
                "write_too_short",
                format!(
                    "write_duration = {:.3e} s below 10/gamma_t = {:.3e} s; write would not reach stationarity",
                    self.write_duration, min_write
                ),
            ));
        }
        Ok(())
    }
}

/// Retrieved probe-channel signal after read-on.
#[derive(Debug, Clone)]
pub struct RetrievedPulse {
    /// Sample times (s), zero at read-on.
    pub times: Vec<f64>,
    /// |probe-channel amplitude| per sample (arbitrary units).
    pub signal: Vec<f64>,
    pub peak_amplitude: f64,
    pub memory: MemoryTag,
}

/// Controls for the storage simulation.
#[derive(Debug, Clone, Copy)]
pub struct MemoryOptions {
    pub z_nodes: usize,
    pub include_excited_zeeman: bool,
    /// Apply the Doppler-averaged readout transfer factor.
    pub doppler_readout: bool,
    pub velocity: VelocityQuadratureSpec,
    /// Samples across the read window.
    pub read_samples: usize,
    pub ode: OdeOptions,
}

impl Default for MemoryOptions {
    fn default() -> Self {
        Self {
            z_nodes: 65,
            include_excited_zeeman: true,
            doppler_readout: true,
            velocity: VelocityQuadratureSpec::default(),
            read_samples: 601,
            ode: OdeOptions::default(),
        }
    }
}

/// Field configuration implied by the memory type.
pub fn memory_drive(
    memory: MemoryTag,
    params: &SystemParams,
    env: &MagneticEnvironment,
) -> Result<FieldDrive> {
    match memory {
        MemoryTag::Cpo => Ok(FieldDrive::from_rabi(params, Polarization::LinPerpLin, 0.0)),
        MemoryTag::Eit => {
            let delta = eit_resonance_delta(env, 0.5 * env.cell_length)?;
            Ok(FieldDrive::from_rabi(
                params,
                Polarization::CircOrthogonal,
                delta,
            ))
        }
    }
}

/// Position average of the Raman phase factor accumulated over the
/// storage interval: `(1/L) ∫ exp(i 2 Δ_Z(z) t_s) dz`. Its magnitude is
/// the sinc-shaped envelope with first zero at
/// `t_s = 1 / (2 |zeeman_ground| |db_dz| L)`; uniform fields give unit
/// magnitude (a global phase).
pub fn eit_dephasing_kernel(env: &MagneticEnvironment, storage_time: f64) -> C64 {
    let slope = crate::units::mhz(env.zeeman_ground * env.db_dz); // rad/s per cm
    let mid = crate::units::mhz(env.zeeman_ground * env.field_at(0.5 * env.cell_length));
    let x = slope * env.cell_length * storage_time; // half the total phase spread
    let sinc = if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    C64::new(0.0, 2.0 * mid * storage_time).exp() * sinc
}

// --- density-matrix plumbing -------------------------------------------

fn pack(rho: &Matrix3<C64>) -> [f64; 18] {
    let mut s = [0.0; 18];
    for i in 0..3 {
        for j in 0..3 {
            let k = 3 * i + j;
            s[2 * k] = rho[(i, j)].re;
            s[2 * k + 1] = rho[(i, j)].im;
        }
    }
    s
}

fn unpack(s: &[f64; 18]) -> Matrix3<C64> {
    Matrix3::from_fn(|i, j| {
        let k = 3 * i + j;
        C64::new(s[2 * k], s[2 * k + 1])
    })
}

struct BlochRhs {
    h_static: Matrix3<C64>,
    h_coupling: Matrix3<C64>,
    v_probe: Matrix3<C64>,
    delta: f64,
    gamma0: f64,
    gamma_t: f64,
    gamma_opt: f64,
}

impl BlochRhs {
    fn new(params: &SystemParams, drive: &FieldDrive, local: &LocalConditions) -> Self {
        let (cm, cp) = drive.polarization.coupling_pattern();
        let (pm, pp) = drive.polarization.probe_pattern();
        let common = local.one_photon_common(drive.coupling_detuning);
        let mut h_static = Matrix3::<C64>::zeros();
        h_static[(E, E)] = C64::new(-common, 0.0);
        h_static[(M, M)] = C64::new(-local.delta_z_ground, 0.0);
        h_static[(P, P)] = C64::new(local.delta_z_ground, 0.0);
        let mut h_coupling = Matrix3::<C64>::zeros();
        h_coupling[(E, M)] = C64::new(0.5 * cm * params.omega_c, 0.0);
        h_coupling[(M, E)] = C64::new(0.5 * cm * params.omega_c, 0.0);
        h_coupling[(E, P)] = C64::new(0.5 * cp * params.omega_c, 0.0);
        h_coupling[(P, E)] = C64::new(0.5 * cp * params.omega_c, 0.0);
        let mut v_probe = Matrix3::<C64>::zeros();
        v_probe[(E, M)] = C64::new(0.5 * pm * params.omega_p, 0.0);
        v_probe[(E, P)] = C64::new(0.5 * pp * params.omega_p, 0.0);
        Self {
            h_static,
            h_coupling,
            v_probe,
            delta: drive.delta,
            gamma0: params.gamma0,
            gamma_t: params.gamma_t,
            gamma_opt: params.gamma_opt,
        }
    }

    /// `dρ/dt` with gate amplitudes for the two fields.
    fn eval(&self, t: f64, rho: &Matrix3<C64>, gate_c: f64, gate_p: f64) -> Matrix3<C64> {
        let mut h = self.h_static + self.h_coupling.map(|x| x * gate_c);
        if gate_p != 0.0 {
            let phase = C64::new(0.0, -self.delta * t).exp();
            let v = self.v_probe.map(|x| x * gate_p * phase);
            h += v + v.adjoint();
        }
        let comm = h * rho - rho * h;
        let mut d = comm.map(|x| C64::new(0.0, -1.0) * x);
        // Relaxation: upper level to each ground state, transit decay of
        // everything, coherence decay rates per element.
        let decay = [
            [self.gamma0 + self.gamma_t, self.gamma_opt, self.gamma_opt],
            [self.gamma_opt, self.gamma_t, self.gamma_t],
            [self.gamma_opt, self.gamma_t, self.gamma_t],
        ];
        for i in 0..3 {
            for j in 0..3 {
                d[(i, j)] -= decay[i][j] * rho[(i, j)];
            }
        }
        let feed = 0.5 * self.gamma0 * rho[(E, E)] + C64::new(0.5 * self.gamma_t, 0.0);
        d[(M, M)] += feed;
        d[(P, P)] += feed;
        d
    }
}

/// One prepared cell slice: the stationary written state at position z,
/// plus the state a probe-free write would have produced. The retrieved
/// signal is the difference of the two read-out traces, the ideal
/// analogue of the two-trace background subtraction a photodiode
/// measurement needs (the read-on resaturation transient is common to
/// both and cancels).
struct ZSlice {
    weight: f64,
    rho_written: Matrix3<C64>,
    rho_reference: Matrix3<C64>,
    rhs: BlochRhs,
}

/// Written states for every cell position, reusable across storage times.
pub struct StoragePrep {
    slices: Vec<ZSlice>,
    drive: FieldDrive,
    seq: PulseSequence,
    memory: MemoryTag,
    readout_factor: f64,
    opts: MemoryOptions,
}

/// Gate profiles around the storage interval. Time is absolute; write
/// ends at `t_w`, read starts at `t_w + t_s`. Ideal steps when ramp = 0.
fn gates(seq: &PulseSequence, storage_time: f64, t: f64) -> (f64, f64) {
    let t_off = seq.write_duration;
    let t_on = seq.write_duration + storage_time;
    let down = |t: f64| {
        if t < t_off {
            1.0
        } else if seq.ramp > 0.0 && t < t_off + seq.ramp {
            1.0 - (t - t_off) / seq.ramp
        } else {
            0.0
        }
    };
    let up = |t: f64| {
        if t < t_on {
            0.0
        } else if seq.ramp > 0.0 && t < t_on + seq.ramp {
            (t - t_on) / seq.ramp
        } else {
            1.0
        }
    };
    let w = down(t);
    ((w + up(t)).min(1.0), w)
}

/// Integrate the write phase at every position. The written state is
/// stationary, so it is shared by all storage times.
pub fn prepare_write(
    params: &SystemParams,
    env: &MagneticEnvironment,
    seq: &PulseSequence,
    memory: MemoryTag,
    opts: &MemoryOptions,
) -> Result<StoragePrep> {
    seq.check(params)?;
    let drive = memory_drive(memory, params, env)?;
    let zs = position_grid(env, opts.z_nodes);
    let rho0 = Matrix3::from_diagonal(&nalgebra::Vector3::new(
        C64::new(0.0, 0.0),
        C64::new(0.5, 0.0),
        C64::new(0.5, 0.0),
    ));

    let mut slices = Vec::with_capacity(zs.len());
    for &(z, weight) in &zs {
        let local = LocalConditions::at(env, z, 0.0, opts.include_excited_zeeman)?;
        let rhs = BlochRhs::new(params, &drive, &local);
        let mut f = |t: f64, y: &[f64; 18]| {
            let rho = unpack(y);
            pack(&rhs.eval(t, &rho, 1.0, 1.0))
        };
        let y = ode::integrate(&mut f, 0.0, seq.write_duration, pack(&rho0), &opts.ode)
            .map_err(|e| Error::Numeric(format!("write phase failed at z = {z} cm: {e}")))?;
        // Probe-free write for the reference trace.
        let mut f_ref = |t: f64, y: &[f64; 18]| {
            let rho = unpack(y);
            pack(&rhs.eval(t, &rho, 1.0, 0.0))
        };
        let y_ref = ode::integrate(&mut f_ref, 0.0, seq.write_duration, pack(&rho0), &opts.ode)
            .map_err(|e| Error::Numeric(format!("reference write failed at z = {z} cm: {e}")))?;
        slices.push(ZSlice {
            weight,
            rho_written: unpack(&y),
            rho_reference: unpack(&y_ref),
            rhs,
        });
    }

    let readout_factor = if opts.doppler_readout {
        let grid = VelocityGrid::build(params, &opts.velocity);
        let g = params.gamma_opt;
        grid.nodes
            .iter()
            .map(|&(v, w)| w * C64::new(g, 0.0) / C64::new(g, -v))
            .sum::<C64>()
            .norm()
    } else {
        1.0
    };

    Ok(StoragePrep {
        slices,
        drive,
        seq: *seq,
        memory,
        readout_factor,
        opts: *opts,
    })
}

/// Probe-polarization projection of the optical coherences.
fn probe_channel(drive: &FieldDrive, rho: &Matrix3<C64>) -> C64 {
    let (pm, pp) = drive.polarization.probe_pattern();
    let norm2 = pm * pm + pp * pp;
    (C64::new(pm, 0.0) * rho[(E, M)] + C64::new(pp, 0.0) * rho[(E, P)]) / norm2
}

/// Evolve through the dark interval and the read window for one storage
/// time, returning the retrieved pulse.
pub fn retrieve(prep: &StoragePrep, storage_time: f64) -> Result<RetrievedPulse> {
    let seq = PulseSequence {
        storage_time,
        ..prep.seq
    };
    let t_off = seq.write_duration;
    let t_on = t_off + storage_time;
    let t_end = t_on + seq.read_duration;

    let n = prep.opts.read_samples.max(2);
    let read_times: Vec<f64> = (0..n)
        .map(|k| seq.read_duration * k as f64 / (n - 1) as f64)
        .collect();

    // Evolve one initial state through the dark interval and the read
    // window, returning the sampled probe-channel amplitudes.
    let evolve = |slice: &ZSlice, si: usize, initial: &Matrix3<C64>| -> Result<Vec<C64>> {
        let mut f = |t: f64, y: &[f64; 18]| {
            let rho = unpack(y);
            let (gc, gp) = gates(&seq, storage_time, t);
            pack(&slice.rhs.eval(t, &rho, gc, gp))
        };
        let y_stored = ode::integrate(&mut f, t_off, t_on, pack(initial), &prep.opts.ode)
            .map_err(|e| Error::Numeric(format!("storage failed for slice {si}: {e}")))?;
        let abs_times: Vec<f64> = read_times.iter().map(|&t| t_on + t).collect();
        let samples =
            ode::integrate_sampled(&mut f, t_on, t_end, y_stored, &prep.opts.ode, &abs_times)
                .map_err(|e| Error::Numeric(format!("read phase failed for slice {si}: {e}")))?;
        Ok(samples
            .iter()
            .map(|y| probe_channel(&prep.drive, &unpack(y)))
            .collect())
    };

    // Coherent cell average of (stored - reference) probe traces.
    let mut signal_acc = vec![C64::new(0.0, 0.0); n];
    for (si, slice) in prep.slices.iter().enumerate() {
        let stored = evolve(slice, si, &slice.rho_written)?;
        let reference = evolve(slice, si, &slice.rho_reference)?;
        for ((acc, s), r) in signal_acc.iter_mut().zip(&stored).zip(&reference) {
            *acc += slice.weight * (s - r);
        }
    }

    let signal: Vec<f64> = signal_acc
        .iter()
        .map(|s| s.norm() * prep.readout_factor)
        .collect();
    let peak_amplitude = signal.iter().cloned().fold(0.0, f64::max);
    Ok(RetrievedPulse {
        times: read_times,
        signal,
        peak_amplitude,
        memory: prep.memory,
    })
}

/// One-shot write/store/read for the storage time in `seq`.
pub fn simulate_storage(
    params: &SystemParams,
    env: &MagneticEnvironment,
    seq: &PulseSequence,
    memory: MemoryTag,
    opts: &MemoryOptions,
) -> Result<RetrievedPulse> {
    let prep = prepare_write(params, env, seq, memory, opts)?;
    retrieve(&prep, seq.storage_time)
}

/// Peak retrieved amplitude for each storage time; the write phase is
/// computed once and shared. Per-point integration failures drop the
/// point; fewer than four survivors abort.
pub fn decay_curve(
    params: &SystemParams,
    env: &MagneticEnvironment,
    seq: &PulseSequence,
    memory: MemoryTag,
    storage_times: &[f64],
    opts: &MemoryOptions,
) -> Result<(DecayCurve, Vec<RetrievedPulse>)> {
    if storage_times.len() < 6 {
        return Err(Error::validation(
            "storage_grid_too_small",
            format!("need >= 6 storage times, got {}", storage_times.len()),
        ));
    }
    if storage_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation(
            "curve_grid_not_increasing",
            "storage times must be strictly increasing",
        ));
    }
    let span = storage_times.last().unwrap() - storage_times[0];
    if span * params.gamma_t < 2.0 {
        return Err(Error::validation(
            "storage_grid_span_too_short",
            format!(
                "storage grid spans {:.2} transit lifetimes; need >= 2",
                span * params.gamma_t
            ),
        ));
    }

    let prep = prepare_write(params, env, seq, memory, opts)?;
    let mut times = Vec::new();
    let mut amps = Vec::new();
    let mut pulses = Vec::new();
    let mut failures = Vec::new();
    for &ts in storage_times {
        match retrieve(&prep, ts) {
            Ok(pulse) => {
                times.push(ts);
                amps.push(pulse.peak_amplitude);
                pulses.push(pulse);
            }
            Err(e) => failures.push(format!("t_s = {ts:.3e} s: {e}")),
        }
    }
    if times.len() < 4 {
        return Err(Error::Numeric(format!(
            "only {} storage points survived (need >= 4): {}",
            times.len(),
            failures.join("; ")
        )));
    }
    let curve = DecayCurve {
        storage_times: times,
        amplitudes: amps,
        memory,
    };
    curve.check()?;
    Ok((curve, pulses))
}

/// Default storage-time grid: 8 points, logarithmic from 0.2 us to 12 us.
pub fn default_storage_grid() -> Vec<f64> {
    let (lo, hi) = (0.2e-6_f64, 12.0e-6_f64);
    (0..8)
        .map(|k| lo * (hi / lo).powf(k as f64 / 7.0))
        .collect()
}
