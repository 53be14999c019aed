//! First-harmonic Floquet solution of the three-level density matrix,
//! with Doppler-velocity and cell-position averaging and exponential
//! absorption through the cell.
//!
//! Working frame: the excited state rotates at the coupling frequency,
//! so the coupling enters statically and the probe as a perturbation at
//! `e^{∓iδt}`. The density matrix is expanded as
//! `ρ(t) = Σ_k ρ^{(k)} e^{-ikδt}` truncated at `|k| ≤ 1`, which closes
//! the dynamics into one 27-unknown complex linear system per
//! (detuning, velocity class, position) and keeps the dc block coupled
//! to the sidebands to all retained orders.
//!
//! Relaxation structure: the upper level decays to each ground state at
//! `Γ0/2` and everything relaxes at the transit rate toward the thermal
//! ground mixture; optical coherences decay at `gamma_opt` and the
//! ground (Raman) coherence at `γt`. The population block of this model
//! reduces to the rate equations when the optical coherences are fast,
//! which is pinned by a cross-model test against the closed-form
//! harmonics.

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{
    zeeman_shifts, FieldDrive, MagneticEnvironment, ModelTag, SpectrumTrace, SystemParams,
};
use crate::quadrature::{position_grid, VelocityGrid, VelocityQuadratureSpec};

const E: usize = 0;
const M: usize = 1;
const P: usize = 2;

const DIM: usize = 9;
const NH: usize = 27;

type Mat27 = SMatrix<C64, NH, NH>;
type Vec27 = SVector<C64, NH>;
type Mat9 = SMatrix<C64, DIM, DIM>;

#[inline]
fn idx(i: usize, j: usize) -> usize {
    3 * i + j
}

/// Block offsets for the harmonics `k = +1, 0, -1`.
const BLOCK_P1: usize = 0;
const BLOCK_DC: usize = 9;
const BLOCK_M1: usize = 18;

/// Everything local to one (velocity class, cell position) pair.
#[derive(Debug, Clone, Copy)]
pub struct LocalConditions {
    /// One-photon detuning offset of this velocity class (rad/s).
    pub velocity_detuning: f64,
    /// Position along the cell (cm).
    pub z: f64,
    /// Ground Zeeman shift Δ_Z(z) (rad/s); sublevels `|∓1>` sit at `∓Δ_Z`.
    pub delta_z_ground: f64,
    /// Excited Zeeman shift at z (rad/s); zero when disabled.
    pub delta_excited: f64,
}

impl LocalConditions {
    /// Conditions at position `z` for a velocity class offset by
    /// `velocity_detuning`, under `env`. The excited-state shift can be
    /// excluded for sensitivity studies.
    pub fn at(
        env: &MagneticEnvironment,
        z: f64,
        velocity_detuning: f64,
        include_excited_zeeman: bool,
    ) -> Result<Self> {
        let (dz, de) = zeeman_shifts(env, z)?;
        Ok(Self {
            velocity_detuning,
            z,
            delta_z_ground: dz,
            delta_excited: if include_excited_zeeman { de } else { 0.0 },
        })
    }

    /// Free-space conditions (no field, resonant class).
    pub fn free() -> Self {
        Self {
            velocity_detuning: 0.0,
            z: 0.0,
            delta_z_ground: 0.0,
            delta_excited: 0.0,
        }
    }

    /// Common one-photon detuning part: coupling offset plus velocity
    /// class minus the excited-state shift.
    pub fn one_photon_common(&self, coupling_detuning: f64) -> f64 {
        coupling_detuning + self.velocity_detuning - self.delta_excited
    }

    /// One-photon coupling detunings on the two legs `(leg -, leg +)`.
    pub fn leg_detunings(&self, coupling_detuning: f64) -> (f64, f64) {
        let common = self.one_photon_common(coupling_detuning);
        (common - self.delta_z_ground, common + self.delta_z_ground)
    }

    /// Two-photon (Raman) detuning of the probe-coupling pair for the
    /// `|-1> -> |e> -> |+1>` pathway; independent of the velocity class.
    pub fn raman_detuning(&self, delta: f64) -> f64 {
        delta + 2.0 * self.delta_z_ground
    }
}

/// Coupling-probe detuning at which the circular-polarization lambda
/// pathway is two-photon resonant at position `z`.
pub fn eit_resonance_delta(env: &MagneticEnvironment, z: f64) -> Result<f64> {
    let (dz, _) = zeeman_shifts(env, z)?;
    Ok(-2.0 * dz)
}

/// Solved harmonic amplitudes of the density matrix: `dc` plus the
/// sidebands co-rotating (`plus`, at `e^{-iδt}`) and counter-rotating
/// (`minus`) with the probe beat.
#[derive(Debug, Clone)]
pub struct BlochHarmonics {
    pub plus: Matrix3<C64>,
    pub dc: Matrix3<C64>,
    pub minus: Matrix3<C64>,
}

impl BlochHarmonics {
    /// Largest violation of `ρ^{(-k)} = ρ^{(k)†}` across the harmonics.
    pub fn hermiticity_defect(&self) -> f64 {
        let d0 = (self.dc - self.dc.adjoint()).norm();
        let d1 = (self.minus - self.plus.adjoint()).norm();
        d0.max(d1)
    }

    /// `(|tr dc - 1|, |tr plus|, |tr minus|)`.
    pub fn trace_defects(&self) -> (f64, f64, f64) {
        (
            (self.dc.trace() - C64::new(1.0, 0.0)).norm(),
            self.plus.trace().norm(),
            self.minus.trace().norm(),
        )
    }
}

/// Assembled 27x27 linear system for one (δ, velocity, z) point, with
/// the dc trace constraint replacing the redundant excited-population
/// row.
pub struct FloquetSystem {
    pub matrix: Mat27,
    pub rhs: Vec27,
    /// Context carried into solver diagnostics.
    context: String,
}

/// Per-leg Rabi amplitudes implied by the polarization patterns.
#[derive(Debug, Clone, Copy)]
struct LegFields {
    coupling: (f64, f64),
    probe: (f64, f64),
}

fn leg_fields(params: &SystemParams, drive: &FieldDrive) -> LegFields {
    let (cm, cp) = drive.polarization.coupling_pattern();
    let (pm, pp) = drive.polarization.probe_pattern();
    LegFields {
        coupling: (cm * params.omega_c, cp * params.omega_c),
        probe: (pm * params.omega_p, pp * params.omega_p),
    }
}

/// Add `-i [h, ·]` for a (not necessarily Hermitian) `h` into the 9x9
/// superoperator `l`: the commutator acts as
/// `(h σ - σ h)_{ij} = Σ_k h_{ik} σ_{kj} - Σ_l σ_{il} h_{lj}`.
fn add_commutator(l: &mut Mat9, h: &Matrix3<C64>) {
    let mi = C64::new(0.0, -1.0);
    for i in 0..3 {
        for j in 0..3 {
            let row = idx(i, j);
            for k in 0..3 {
                l[(row, idx(k, j))] += mi * h[(i, k)];
                l[(row, idx(i, k))] -= mi * h[(k, j)];
            }
        }
    }
}

/// Static part of the Liouvillian: coupling drive, detunings, decay.
fn build_l0(params: &SystemParams, drive: &FieldDrive, local: &LocalConditions) -> Mat9 {
    let mut l0 = Mat9::zeros();

    let common = local.one_photon_common(drive.coupling_detuning);
    let fields = leg_fields(params, drive);
    let mut h0 = Matrix3::<C64>::zeros();
    h0[(E, E)] = C64::new(-common, 0.0);
    h0[(M, M)] = C64::new(-local.delta_z_ground, 0.0);
    h0[(P, P)] = C64::new(local.delta_z_ground, 0.0);
    h0[(E, M)] = C64::new(0.5 * fields.coupling.0, 0.0);
    h0[(M, E)] = C64::new(0.5 * fields.coupling.0, 0.0);
    h0[(E, P)] = C64::new(0.5 * fields.coupling.1, 0.0);
    h0[(P, E)] = C64::new(0.5 * fields.coupling.1, 0.0);
    add_commutator(&mut l0, &h0);

    // Decay rates per element.
    let g0 = params.gamma0;
    let gt = params.gamma_t;
    let gopt = params.gamma_opt;
    let decay = [
        [g0 + gt, gopt, gopt], // rows: e, m, p
        [gopt, gt, gt],
        [gopt, gt, gt],
    ];
    for i in 0..3 {
        for j in 0..3 {
            let r = idx(i, j);
            l0[(r, r)] -= C64::new(decay[i][j], 0.0);
        }
    }
    // Spontaneous feeding of the ground populations.
    l0[(idx(M, M), idx(E, E))] += C64::new(0.5 * g0, 0.0);
    l0[(idx(P, P), idx(E, E))] += C64::new(0.5 * g0, 0.0);
    l0
}

/// Probe sideband operator: the coefficient of `e^{-iδt}` in the
/// rotating-frame Hamiltonian.
fn build_v_plus(params: &SystemParams, drive: &FieldDrive) -> Matrix3<C64> {
    let fields = leg_fields(params, drive);
    let mut v = Matrix3::<C64>::zeros();
    v[(E, M)] = C64::new(0.5 * fields.probe.0, 0.0);
    v[(E, P)] = C64::new(0.5 * fields.probe.1, 0.0);
    v
}

/// Assemble the truncated harmonic system for one point. Layout:
/// harmonics `(+1, 0, -1)` of the vectorized density matrix, the dc
/// excited-population row replaced by `tr ρ^{(0)} = 1` (that row is the
/// sum of the other dc population rows up to the trace relation, and the
/// replacement stays well conditioned as the transit rate goes small).
pub fn assemble_floquet_system(
    params: &SystemParams,
    drive: &FieldDrive,
    local: &LocalConditions,
) -> FloquetSystem {
    let l0 = build_l0(params, drive, local);
    let v_plus = build_v_plus(params, drive);
    let v_minus = v_plus.adjoint();
    let mut c_plus = Mat9::zeros();
    add_commutator(&mut c_plus, &v_plus);
    let mut c_minus = Mat9::zeros();
    add_commutator(&mut c_minus, &v_minus);

    let mut m = Mat27::zeros();
    let i_delta = C64::new(0.0, drive.delta);
    for r in 0..DIM {
        for c in 0..DIM {
            m[(BLOCK_P1 + r, BLOCK_P1 + c)] = l0[(r, c)];
            m[(BLOCK_P1 + r, BLOCK_DC + c)] = c_plus[(r, c)];
            m[(BLOCK_DC + r, BLOCK_P1 + c)] = c_minus[(r, c)];
            m[(BLOCK_DC + r, BLOCK_DC + c)] = l0[(r, c)];
            m[(BLOCK_DC + r, BLOCK_M1 + c)] = c_plus[(r, c)];
            m[(BLOCK_M1 + r, BLOCK_DC + c)] = c_minus[(r, c)];
            m[(BLOCK_M1 + r, BLOCK_M1 + c)] = l0[(r, c)];
        }
        m[(BLOCK_P1 + r, BLOCK_P1 + r)] += i_delta;
        m[(BLOCK_M1 + r, BLOCK_M1 + r)] -= i_delta;
    }

    let mut rhs = Vec27::zeros();
    // dc equation: L0 ρ0 + C- ρ+1 + C+ ρ-1 + feed = 0, feed = γt/2 per
    // ground population.
    rhs[BLOCK_DC + idx(M, M)] = C64::new(-0.5 * params.gamma_t, 0.0);
    rhs[BLOCK_DC + idx(P, P)] = C64::new(-0.5 * params.gamma_t, 0.0);

    // Trace constraint replaces the dc excited-population row.
    let tr_row = BLOCK_DC + idx(E, E);
    for c in 0..NH {
        m[(tr_row, c)] = C64::new(0.0, 0.0);
    }
    m[(tr_row, BLOCK_DC + idx(E, E))] = C64::new(1.0, 0.0);
    m[(tr_row, BLOCK_DC + idx(M, M))] = C64::new(1.0, 0.0);
    m[(tr_row, BLOCK_DC + idx(P, P))] = C64::new(1.0, 0.0);
    rhs[tr_row] = C64::new(1.0, 0.0);

    FloquetSystem {
        matrix: m,
        rhs,
        context: format!(
            "delta={:.6e} rad/s, v={:.6e} rad/s, z={:.3} cm",
            drive.delta, local.velocity_detuning, local.z
        ),
    }
}

/// Direct dense solve of an assembled system.
pub fn solve_floquet(system: &FloquetSystem) -> Result<BlochHarmonics> {
    let lu = system.matrix.lu();
    let x = lu.solve(&system.rhs).filter(|x| x.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    let x = match x {
        Some(x) => x,
        None => {
            // Estimate conditioning from the U diagonal for the diagnostic.
            let u = system.matrix.lu().u();
            let mut umax: f64 = 0.0;
            let mut umin = f64::INFINITY;
            for i in 0..NH {
                let a = u[(i, i)].norm();
                umax = umax.max(a);
                umin = umin.min(a);
            }
            return Err(Error::Numeric(format!(
                "singular harmonic system at {} (|u|max/|u|min = {:.3e})",
                system.context,
                umax / umin
            )));
        }
    };
    let unpack = |off: usize| {
        Matrix3::from_fn(|i, j| x[off + idx(i, j)])
    };
    Ok(BlochHarmonics {
        plus: unpack(BLOCK_P1),
        dc: unpack(BLOCK_DC),
        minus: unpack(BLOCK_M1),
    })
}

/// Complex probe response of one solved point: the optical-coherence
/// harmonic co-rotating with the probe sideband, projected on the probe
/// polarization pattern and normalized per unit probe Rabi frequency so
/// the result is drive-strength independent to first order. The
/// imaginary part is absorption (positive for an absorbing medium); a
/// resonant two-level ground state gives `Im χ` equal to its population.
pub fn probe_susceptibility(
    params: &SystemParams,
    drive: &FieldDrive,
    harmonics: &BlochHarmonics,
) -> C64 {
    let (pm, pp) = drive.polarization.probe_pattern();
    let norm2 = pm * pm + pp * pp;
    let projected = C64::new(pm, 0.0) * harmonics.plus[(E, M)]
        + C64::new(pp, 0.0) * harmonics.plus[(E, P)];
    -2.0 * params.gamma_opt / (params.omega_p * norm2) * projected
}

/// Stationary density matrix under the static part of the drive alone
/// (coupling on, probe off): the dc Liouvillian block with the trace
/// constraint replacing the excited-population row.
pub fn dc_steady_state(
    params: &SystemParams,
    drive: &FieldDrive,
    local: &LocalConditions,
) -> Result<Matrix3<C64>> {
    let mut m = build_l0(params, drive, local);
    let mut rhs = SVector::<C64, DIM>::zeros();
    rhs[idx(M, M)] = C64::new(-0.5 * params.gamma_t, 0.0);
    rhs[idx(P, P)] = C64::new(-0.5 * params.gamma_t, 0.0);
    let tr_row = idx(E, E);
    for c in 0..DIM {
        m[(tr_row, c)] = C64::new(0.0, 0.0);
    }
    m[(tr_row, idx(E, E))] = C64::new(1.0, 0.0);
    m[(tr_row, idx(M, M))] = C64::new(1.0, 0.0);
    m[(tr_row, idx(P, P))] = C64::new(1.0, 0.0);
    rhs[tr_row] = C64::new(1.0, 0.0);
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular stationary system".to_string()))?;
    Ok(Matrix3::from_fn(|i, j| x[idx(i, j)]))
}

/// Assemble and solve one local point, returning the probe response.
pub fn solve_local_susceptibility(
    params: &SystemParams,
    drive: &FieldDrive,
    local: &LocalConditions,
) -> Result<C64> {
    let system = assemble_floquet_system(params, drive, local);
    let harmonics = solve_floquet(&system)?;
    Ok(probe_susceptibility(params, drive, &harmonics))
}

/// Velocity grid adapted to one probe detuning: panels graded around the
/// coupling-resonant class (offset 0) and the probe-resonant class
/// (offset `-δ`), so both narrow structures stay resolved wherever the
/// probe sits inside the Doppler span.
pub fn velocity_grid_for_delta(
    params: &SystemParams,
    spec: &VelocityQuadratureSpec,
    delta: f64,
) -> VelocityGrid {
    VelocityGrid::build_graded(params, spec, &[0.0, -delta])
}

/// Gaussian-weighted velocity average of the probe response at one cell
/// position. The two-photon detuning is identical for every class; only
/// the one-photon detunings shift.
pub fn doppler_average(
    params: &SystemParams,
    drive: &FieldDrive,
    env: &MagneticEnvironment,
    z: f64,
    include_excited_zeeman: bool,
    grid: &VelocityGrid,
) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for &(v, w) in &grid.nodes {
        let local = LocalConditions::at(env, z, v, include_excited_zeeman)?;
        acc += w * solve_local_susceptibility(params, drive, &local)?;
    }
    Ok(acc)
}

/// As [`doppler_average`], additionally verifying quadrature convergence
/// by doubling the per-panel order; changes beyond `tol` (relative)
/// produce a refinement diagnostic.
pub fn doppler_average_checked(
    params: &SystemParams,
    drive: &FieldDrive,
    env: &MagneticEnvironment,
    z: f64,
    include_excited_zeeman: bool,
    spec: &VelocityQuadratureSpec,
    tol: f64,
) -> Result<C64> {
    let coarse = doppler_average(
        params,
        drive,
        env,
        z,
        include_excited_zeeman,
        &velocity_grid_for_delta(params, spec, drive.delta),
    )?;
    let fine = doppler_average(
        params,
        drive,
        env,
        z,
        include_excited_zeeman,
        &velocity_grid_for_delta(params, &spec.doubled(), drive.delta),
    )?;
    let change = (fine - coarse).norm() / fine.norm().max(f64::MIN_POSITIVE);
    if change > tol {
        return Err(Error::Numeric(format!(
            "velocity quadrature not converged at z = {z} cm: node doubling moved the response by {:.3e} (tol {:.1e}); increase nodes_per_panel",
            change, tol
        )));
    }
    Ok(coarse)
}

/// Optical-depth calibration anchored to the measured unsaturated
/// transmission: scale chosen so a weak probe with the coupling off at
/// line center and zero field transmits `linear_transmission`.
#[derive(Debug, Clone, Copy)]
pub struct OpticalDepthCalibration {
    /// Line-center optical depth `-ln(linear_transmission)`.
    pub od0: f64,
    /// Doppler-averaged `Im χ` at the anchor point.
    pub chi0_im: f64,
}

impl OpticalDepthCalibration {
    pub fn scale(&self) -> f64 {
        self.od0 / self.chi0_im
    }
}

/// Compute the calibration for the given parameters and velocity grid.
pub fn calibrate_optical_depth(
    params: &SystemParams,
    drive: &FieldDrive,
    grid: &VelocityGrid,
    linear_transmission: f64,
) -> Result<OpticalDepthCalibration> {
    if !(linear_transmission > 0.0 && linear_transmission < 1.0) {
        return Err(Error::validation(
            "linear_transmission_out_of_range",
            format!("linear transmission {linear_transmission} must lie in (0, 1)"),
        ));
    }
    let mut params0 = *params;
    params0.omega_c = 0.0;
    let drive0 = FieldDrive {
        delta: 0.0,
        coupling_detuning: 0.0,
        ..*drive
    };
    let env0 = MagneticEnvironment::new(0.0, 0.0);
    let chi0 = doppler_average(&params0, &drive0, &env0, 0.5 * env0.cell_length, true, grid)?;
    Ok(OpticalDepthCalibration {
        od0: -linear_transmission.ln(),
        chi0_im: chi0.im,
    })
}

/// Options for the averaged transmission spectrum.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub velocity: VelocityQuadratureSpec,
    /// Nominal position nodes (collapses to 1 for uniform fields).
    pub z_nodes: usize,
    pub include_excited_zeeman: bool,
    /// Unsaturated line-center transmission anchoring the depth scale.
    pub linear_transmission: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            velocity: VelocityQuadratureSpec::default(),
            z_nodes: 65,
            include_excited_zeeman: true,
            linear_transmission: 0.27,
        }
    }
}

/// Probe transmission over a detuning grid:
/// `T(δ) = exp(-scale * <Im χ̄(δ, z)>_z)` with the scale fixed by
/// [`calibrate_optical_depth`]. Detuning points are independent and are
/// evaluated in parallel; all reductions run in fixed order so results
/// are identical for any worker count.
pub fn transmission_spectrum(
    params: &SystemParams,
    drive: &FieldDrive,
    env: &MagneticEnvironment,
    deltas: &[f64],
    opts: &SpectrumOptions,
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
    let calib_grid = VelocityGrid::build(params, &opts.velocity);
    let calib = calibrate_optical_depth(params, drive, &calib_grid, opts.linear_transmission)?;
    let zs = position_grid(env, opts.z_nodes);

    let per_delta = deltas
        .par_iter()
        .map(|&delta| {
            let d = drive.with_delta(delta);
            let grid = velocity_grid_for_delta(params, &opts.velocity, delta);
            let mut od = 0.0;
            for &(z, wz) in &zs {
                let chi =
                    doppler_average(params, &d, env, z, opts.include_excited_zeeman, &grid)?;
                od += wz * chi.im;
            }
            Ok(((-calib.scale() * od).exp(), grid.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let velocity_nodes = per_delta.iter().map(|p| p.1).max().unwrap_or(0);
    let transmission = per_delta.into_iter().map(|p| p.0).collect();

    let trace = SpectrumTrace {
        deltas: deltas.to_vec(),
        transmission,
        model: ModelTag::Floquet,
        velocity_nodes,
        z_nodes: zs.len(),
    };
    trace.check()?;
    Ok(trace)
}

/// Fitted linewidths of the central and side resonances for one value of
/// the field gradient.
#[derive(Debug, Clone, Copy)]
pub struct GradientLinewidths {
    /// Gradient (G/cm).
    pub gradient: f64,
    /// Central-resonance FWHM (rad/s); `None` when the fit failed.
    pub cpo_fwhm: Option<f64>,
    /// Side-resonance FWHM (rad/s), averaged over the two side peaks
    /// when both converge.
    pub eit_fwhm: Option<f64>,
}

/// Sweep the field gradient and extract the central (population) and
/// side (Raman) linewidths from fitted resonance profiles. Per-point fit
/// failures leave a hole in the table rather than aborting the sweep.
pub fn linewidth_vs_gradient(
    params: &SystemParams,
    drive: &FieldDrive,
    env_base: &MagneticEnvironment,
    gradients: &[f64],
    deltas: &[f64],
    opts: &SpectrumOptions,
) -> Result<Vec<GradientLinewidths>> {
    let mut rows = Vec::with_capacity(gradients.len());
    for &g in gradients {
        let env = MagneticEnvironment {
            db_dz: g,
            ..*env_base
        };
        let trace = transmission_spectrum(params, drive, &env, deltas, opts)?;
        let widths = extract_linewidths(&trace);
        rows.push(GradientLinewidths {
            gradient: g,
            cpo_fwhm: widths.0,
            eit_fwhm: widths.1,
        });
    }
    Ok(rows)
}

/// Identify the central peak and the side peaks of a transmission trace
/// and fit each; returns `(central FWHM, mean side FWHM)`.
pub fn extract_linewidths(trace: &SpectrumTrace) -> (Option<f64>, Option<f64>) {
    let tmin = trace.transmission.iter().cloned().fold(f64::INFINITY, f64::min);
    let tmax = trace.transmission.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let peaks = crate::analysis::find_peaks(&trace.deltas, &trace.transmission, 0.03 * (tmax - tmin));
    if peaks.is_empty() {
        return (None, None);
    }
    let span = trace.deltas.last().unwrap() - trace.deltas[0];
    // Peaks come sorted by |δ|; the central one must actually be central.
    let central = peaks[0];
    let cpo = (central.abs() < 0.05 * span)
        .then(|| fit_peak_fwhm(trace, central, &peaks))
        .flatten();
    let mut side_widths = Vec::new();
    for &p in peaks.iter().skip(1) {
        if let Some(w) = fit_peak_fwhm(trace, p, &peaks) {
            side_widths.push(w);
        }
    }
    let eit = (!side_widths.is_empty())
        .then(|| side_widths.iter().sum::<f64>() / side_widths.len() as f64);
    (cpo, eit)
}

/// Fit a single resonance in a window bounded by the midpoints to the
/// neighboring peaks.
fn fit_peak_fwhm(trace: &SpectrumTrace, center: f64, all_peaks: &[f64]) -> Option<f64> {
    let mut lo = trace.deltas[0];
    let mut hi = *trace.deltas.last().unwrap();
    for &p in all_peaks {
        if p < center {
            lo = lo.max(0.5 * (p + center));
        } else if p > center {
            hi = hi.min(0.5 * (p + center));
        }
    }
    let xs: Vec<f64> = trace
        .deltas
        .iter()
        .cloned()
        .filter(|&d| d >= lo && d <= hi)
        .collect();
    let ys: Vec<f64> = trace
        .deltas
        .iter()
        .zip(&trace.transmission)
        .filter(|(d, _)| **d >= lo && **d <= hi)
        .map(|(_, t)| *t)
        .collect();
    if xs.len() < 9 {
        return None;
    }
    let fit = crate::analysis::fit_lorentzian(&xs, &ys).ok()?;
    fit.converged.then_some(fit.fwhm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Polarization;
    use crate::units;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn params() -> SystemParams {
        SystemParams::cesium_cell()
    }

    #[test]
    fn no_probe_leaves_sidebands_empty() {
        let mut p = params();
        p.omega_p = 1e-300; // structurally zero probe
        let drive = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.3 * p.gamma_t);
        let local = LocalConditions::free();
        let h = solve_floquet(&assemble_floquet_system(&p, &drive, &local)).unwrap();
        assert!(h.plus.norm() < 1e-250);
        assert!(h.minus.norm() < 1e-250);
        // dc block solves the coupling-only steady state: populations sum
        // to one with a saturated excited state.
        assert_relative_eq!(h.dc.trace().re, 1.0, max_relative = 1e-12);
        assert!(h.dc[(E, E)].re > 0.0);
    }

    #[test]
    fn no_fields_gives_thermal_ground_mixture() {
        let mut p = params();
        p.omega_c = 0.0;
        p.omega_p = 1e-300;
        let drive = FieldDrive {
            polarization: Polarization::LinPerpLin,
            delta: p.gamma_t,
            coupling_detuning: 0.0,
            i0: 0.0,
            i1_minus: C64::new(0.0, 0.0),
            i1_plus: C64::new(0.0, 0.0),
        };
        let h = solve_floquet(&assemble_floquet_system(&p, &drive, &LocalConditions::free())).unwrap();
        assert_relative_eq!(h.dc[(M, M)].re, 0.5, max_relative = 1e-12);
        assert_relative_eq!(h.dc[(P, P)].re, 0.5, max_relative = 1e-12);
        assert!(h.dc[(E, E)].norm() < 1e-14);
        assert!(h.dc[(M, P)].norm() < 1e-14);
    }

    #[test]
    fn two_level_linear_absorption_line() {
        // Coupling off, weak circular probe: textbook linear response of
        // the `|+1>` leg, Lorentzian of half-width gamma_opt and peak
        // Im χ equal to the ground population 1/2. The probe must be
        // genuinely weak here or its own transit-limited saturation
        // shows up at the few-permille level.
        let mut p = params();
        p.omega_c = 0.0;
        p.omega_p = units::khz(0.01);
        let drive = FieldDrive {
            polarization: Polarization::CircOrthogonal,
            delta: 0.0,
            coupling_detuning: 0.0,
            i0: 0.0,
            i1_minus: C64::new(0.0, 0.0),
            i1_plus: C64::new(0.0, 0.0),
        };
        let local = LocalConditions::free();
        for x in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let det = x * p.gamma_opt;
            let chi =
                solve_local_susceptibility(&p, &drive.with_delta(det), &local).unwrap();
            let expect = 0.5 * p.gamma_opt * p.gamma_opt / (det * det + p.gamma_opt * p.gamma_opt);
            assert_relative_eq!(chi.im, expect, max_relative = 1e-6);
        }
    }

    #[test]
    fn strong_coupling_saturates_absorption() {
        let mut p = params();
        p.omega_c = 20.0 * p.gamma0;
        let strong = solve_local_susceptibility(
            &p,
            &FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.0),
            &LocalConditions::free(),
        )
        .unwrap();
        let mut p0 = p;
        p0.omega_c = 0.0;
        let weak = solve_local_susceptibility(
            &p0,
            &FieldDrive {
                i0: 0.0,
                i1_minus: C64::new(0.0, 0.0),
                i1_plus: C64::new(0.0, 0.0),
                ..FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.0)
            },
            &LocalConditions::free(),
        )
        .unwrap();
        assert!(strong.im < 0.2 * weak.im, "strong {} weak {}", strong.im, weak.im);
    }

    #[test]
    fn hermiticity_and_traces_hold_over_random_conditions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let mut p = params();
            p.omega_c *= rng.random_range(0.2..3.0);
            p.omega_p *= rng.random_range(0.2..1.5);
            let pol = if rng.random_range(0.0..1.0) < 0.5 {
                Polarization::LinPerpLin
            } else {
                Polarization::CircOrthogonal
            };
            let drive = FieldDrive::from_rabi(&p, pol, rng.random_range(-10.0..10.0) * p.gamma_t)
                .with_coupling_detuning(rng.random_range(-2.0..2.0) * p.gamma0);
            let env = MagneticEnvironment::new(rng.random_range(-1.0..1.0), rng.random_range(-0.05..0.05));
            let local = LocalConditions::at(
                &env,
                rng.random_range(0.0..5.0),
                rng.random_range(-3.0..3.0) * p.doppler_hwhm,
                true,
            )
            .unwrap();
            let h = solve_floquet(&assemble_floquet_system(&p, &drive, &local)).unwrap();
            assert!(h.hermiticity_defect() < 1e-10, "hermiticity defect too large");
            let (d0, d1, dm1) = h.trace_defects();
            assert!(d0 < 1e-10 && d1 < 1e-10 && dm1 < 1e-10);
        }
    }

    #[test]
    fn raman_detuning_is_velocity_independent() {
        let env = MagneticEnvironment::new(0.9, 0.02);
        let delta = units::mhz(0.4);
        let base = LocalConditions::at(&env, 1.0, 0.0, true).unwrap();
        for v in [-1e9, -1e7, 0.0, 3e8] {
            let l = LocalConditions::at(&env, 1.0, v, true).unwrap();
            assert_eq!(l.raman_detuning(delta), base.raman_detuning(delta));
        }
    }

    #[test]
    fn linear_response_in_probe() {
        let p = params();
        let env = MagneticEnvironment::new(0.9, 0.0);
        let drive = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.4 * p.gamma_t);
        let local = LocalConditions::at(&env, 2.5, 0.3 * p.gamma_opt, true).unwrap();
        let chi = solve_local_susceptibility(&p, &drive, &local).unwrap();
        let mut p_half = p;
        p_half.omega_p *= 0.5;
        let chi_half = solve_local_susceptibility(&p_half, &drive, &local).unwrap();
        assert!(
            (chi - chi_half).norm() / chi.norm() < 0.01,
            "probe response not drive-independent: {chi} vs {chi_half}"
        );
    }

    #[test]
    fn eit_window_sits_at_the_two_photon_resonance() {
        let p = params();
        let env = MagneticEnvironment::new(0.9, 0.0);
        let drive = FieldDrive::from_rabi(&p, Polarization::CircOrthogonal, 0.0);
        let local = LocalConditions::at(&env, 2.5, 0.0, true).unwrap();
        let d_res = eit_resonance_delta(&env, 2.5).unwrap();
        let step = 0.02 * p.gamma_t;
        let mut best = (f64::INFINITY, 0.0);
        for k in -60..=60 {
            let d = d_res + k as f64 * step;
            let chi = solve_local_susceptibility(&p, &drive.with_delta(d), &local).unwrap();
            if chi.im < best.0 {
                best = (chi.im, d);
            }
        }
        // The single velocity class carries a small ac-Stark pull of the
        // dark resonance (the coupling sits off one-photon resonance by
        // the Zeeman shifts); allow for it here. The Doppler average
        // cancels it to first order, which the spectrum-level tests pin.
        let light_shift_allowance = 0.05 * p.omega_c;
        assert!(
            (best.1 - d_res).abs() <= light_shift_allowance,
            "dip at {} vs {}",
            best.1,
            d_res
        );
        let off = solve_local_susceptibility(
            &p,
            &drive.with_delta(d_res + 60.0 * step),
            &local,
        )
        .unwrap();
        assert!(best.0 < 0.7 * off.im);
    }

    #[test]
    fn doppler_average_degenerates_with_single_node() {
        let p = params();
        let env = MagneticEnvironment::new(0.9, 0.0);
        let drive = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.2 * p.gamma_t);
        let local = solve_local_susceptibility(
            &p,
            &drive,
            &LocalConditions::at(&env, 2.5, 0.0, true).unwrap(),
        )
        .unwrap();
        let avg = doppler_average(&p, &drive, &env, 2.5, true, &VelocityGrid::single()).unwrap();
        assert_relative_eq!(avg.re, local.re, max_relative = 1e-14);
        assert_relative_eq!(avg.im, local.im, max_relative = 1e-14);
    }

    #[test]
    fn doppler_dominated_linewidth_of_linear_absorption() {
        // With the coupling off, the averaged line half-width approaches
        // the Doppler half-width.
        let mut p = params();
        p.omega_c = 0.0;
        let drive = FieldDrive {
            polarization: Polarization::CircOrthogonal,
            delta: 0.0,
            coupling_detuning: 0.0,
            i0: 0.0,
            i1_minus: C64::new(0.0, 0.0),
            i1_plus: C64::new(0.0, 0.0),
        };
        let env = MagneticEnvironment::new(0.0, 0.0);
        let at = |delta: f64| {
            let grid = velocity_grid_for_delta(&p, &VelocityQuadratureSpec::default(), delta);
            doppler_average(&p, &drive.with_delta(delta), &env, 2.5, true, &grid)
                .unwrap()
                .im
        };
        let center = at(0.0);
        let half = at(p.doppler_hwhm);
        assert_relative_eq!(half, 0.5 * center, max_relative = 0.02);
    }

    #[test]
    fn quadrature_convergence_check_passes_at_defaults() {
        let p = params();
        let env = MagneticEnvironment::new(0.9, 0.0);
        let drive = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.0);
        let spec = VelocityQuadratureSpec::default();
        doppler_average_checked(&p, &drive, &env, 2.5, true, &spec, 5e-3).unwrap();
    }

    #[test]
    fn population_sidebands_match_rate_model_near_line_center() {
        // Doppler-free resonant conditions: the population block of the
        // harmonic solution must reproduce the closed-form rate-model
        // inversion harmonics through the pump-rate bridge, to 10% on the
        // narrow central resonance.
        let p = params();
        let env = MagneticEnvironment::new(0.0, 0.0);
        let drive_rate = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.0);
        for k in [-3.0, -1.5, -0.6, 0.0, 0.4, 1.1, 2.2, 3.0] {
            let delta = k * p.gamma_t;
            let drive = drive_rate.with_delta(delta);
            let local = LocalConditions::at(&env, 2.5, 0.0, true).unwrap();
            let h = solve_floquet(&assemble_floquet_system(&p, &drive, &local)).unwrap();
            // Unit-total populations: inversion harmonics are twice the
            // population difference.
            let w1m_floquet = 2.0 * (h.plus[(E, E)] - h.plus[(M, M)]);
            let analytic = crate::rate::first_harmonics(&p, &drive).unwrap();
            let scale = analytic.w1_minus.norm().max(1e-30);
            let err = (w1m_floquet - analytic.w1_minus).norm() / scale;
            assert!(
                err < 0.10,
                "population sidebands diverge from rate model at delta = {k} gamma_t: {err:.3}"
            );
        }
    }

    #[test]
    fn central_and_side_widths_comparable_at_zero_gradient() {
        // Same broadening mechanism limits both resonances in a uniform
        // field; their fitted widths agree to better than 15%.
        let p = params();
        let env = MagneticEnvironment::new(0.9, 0.0);
        let drive = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.0);
        let deltas: Vec<f64> = (0..241)
            .map(|k| units::mhz(-1.2 + 2.4 * k as f64 / 240.0))
            .collect();
        let trace =
            transmission_spectrum(&p, &drive, &env, &deltas, &SpectrumOptions::default()).unwrap();
        let (cpo, eit) = extract_linewidths(&trace);
        let (cpo, eit) = (cpo.unwrap(), eit.unwrap());
        assert!(
            (cpo - eit).abs() / eit < 0.15,
            "central {} vs side {} kHz",
            units::to_khz(cpo),
            units::to_khz(eit)
        );
    }

    #[test]
    fn transmission_matches_anchor_at_calibration_point() {
        let mut p = params();
        p.omega_c = 0.0;
        let drive = FieldDrive {
            polarization: Polarization::CircOrthogonal,
            delta: 0.0,
            coupling_detuning: 0.0,
            i0: 0.0,
            i1_minus: C64::new(0.0, 0.0),
            i1_plus: C64::new(0.0, 0.0),
        };
        let env = MagneticEnvironment::new(0.0, 0.0);
        let opts = SpectrumOptions::default();
        let trace =
            transmission_spectrum(&p, &drive, &env, &[0.0, units::mhz(0.01)], &opts).unwrap();
        assert_relative_eq!(trace.transmission[0], 0.27, max_relative = 1e-10);
    }
}
