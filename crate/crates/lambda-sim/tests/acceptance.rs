//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them). Every tolerance is pinned
//! here; sub-checks that the model genuinely cannot meet are asserted
//! anyway and fail loudly rather than being loosened.
//!
//! Run serially: `cargo test --test acceptance -- --test-threads=1 --nocapture`

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lambda_sim::analysis::{find_peaks, fit_exponential, fit_lorentzian, linear_fit};
use lambda_sim::floquet::{
    self, doppler_average, solve_local_susceptibility, transmission_spectrum,
    velocity_grid_for_delta, LocalConditions, SpectrumOptions,
};
use lambda_sim::memory::{
    decay_curve, default_storage_grid, eit_dephasing_kernel, MemoryOptions, PulseSequence,
};
use lambda_sim::ode::OdeOptions;
use lambda_sim::params::{
    FieldDrive, MagneticEnvironment, MemoryTag, Polarization, SystemParams,
};
use lambda_sim::quadrature::VelocityQuadratureSpec;
use lambda_sim::rate::{
    dc_inversion, first_harmonics, first_harmonics_from_ode, integrate_populations,
    rate_spectrum, PopulationState,
};
use lambda_sim::units;

fn reference_params() -> SystemParams {
    SystemParams::cesium_cell()
}

/// Collects named sub-checks and renders the criterion verdict.
struct Criterion {
    name: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) {
        let label = label.into();
        println!("  [{}] {}", if ok { "ok" } else { "FAIL" }, label);
        self.checks.push((label, ok));
    }

    fn finish(self) {
        let failed: Vec<&(String, bool)> = self.checks.iter().filter(|c| !c.1).collect();
        if failed.is_empty() {
            println!("ACCEPTANCE {}: PASS", self.name);
        } else {
            println!(
                "ACCEPTANCE {}: FAIL ({}/{} sub-checks failed)",
                self.name,
                failed.len(),
                self.checks.len()
            );
        }
        assert!(
            failed.is_empty(),
            "{} failed sub-checks: {:?}",
            self.name,
            failed.iter().map(|c| c.0.clone()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn criterion_1_dc_inversion_vs_long_time_integration() {
    let start = Instant::now();
    let mut c = Criterion::new("1 (dc inversion closed form vs ODE)");
    let base = reference_params();
    let mut worst: f64 = 0.0;
    for ii in 0..10 {
        for jj in 0..10 {
            let mut p = base;
            // Two decades in each direction around the reference scales.
            p.gamma_t = base.gamma_t * 10f64.powf(-1.0 + 2.0 * ii as f64 / 9.0);
            let i0 = base.pump_rate_i0() * 10f64.powf(-1.0 + 2.0 * jj as f64 / 9.0);
            let t_end = 25.0 / p.gamma_t;
            let s = integrate_populations(
                &p,
                |_| i0,
                |_| i0,
                PopulationState::ground_mixture(),
                t_end,
                &OdeOptions::default(),
                &[t_end],
            )
            .unwrap()[0];
            let w0_ode = 2.0 * (s.n_e - s.n_p1);
            let w0 = dc_inversion(&p, i0).unwrap();
            worst = worst.max(((w0_ode - w0) / w0).abs());
        }
    }
    let dt = start.elapsed();
    c.check(format!("max relative error {worst:.2e} <= 1e-6 on 10x10 grid"), worst <= 1e-6);
    c.check(format!("runtime {dt:.2?} < 10 s"), dt.as_secs_f64() < 10.0);
    c.finish();
}

#[test]
fn criterion_2_first_harmonics_vs_ode_oracle() {
    let start = Instant::now();
    let mut c = Criterion::new("2 (first harmonics vs time-domain oracle)");
    let p = reference_params();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let i0 = p.pump_rate_i0() * rng.random_range(0.3..3.0);
        let mag = |r: &mut ChaCha8Rng| r.random_range(0.01..0.08) * i0;
        let phase = |r: &mut ChaCha8Rng| r.random_range(0.0..std::f64::consts::TAU);
        let drive = FieldDrive {
            polarization: Polarization::CircOrthogonal,
            delta: p.gamma_t * rng.random_range(0.3..4.0),
            coupling_detuning: 0.0,
            i0,
            i1_minus: C64::from_polar(mag(&mut rng), phase(&mut rng)),
            i1_plus: C64::from_polar(mag(&mut rng), phase(&mut rng)),
        };
        let h = first_harmonics(&p, &drive).unwrap();
        let (w1m, w1p) = first_harmonics_from_ode(&p, &drive, 10).unwrap();
        worst = worst.max((w1m - h.w1_minus).norm() / h.w1_minus.norm());
        worst = worst.max((w1p - h.w1_plus).norm() / h.w1_plus.norm());
    }
    let dt = start.elapsed();
    c.check(format!("max relative deviation {worst:.2e} <= 1% over 20 random drives"), worst <= 0.01);
    c.check(format!("runtime {dt:.2?} < 60 s"), dt.as_secs_f64() < 60.0);
    c.finish();
}

#[test]
fn criterion_3_antiphase_cancellation_and_width_law() {
    let mut c = Criterion::new("3 (antiphase cancellation, width law)");
    let p = reference_params();
    // Exact cancellation of the broad term for antiphase sidebands.
    let mut exact = true;
    for k in 0..50 {
        let i0 = p.pump_rate_i0() * 10f64.powf(-1.0 + 2.0 * k as f64 / 49.0);
        let i1 = 0.1 * i0;
        let drive = FieldDrive {
            polarization: Polarization::LinPerpLin,
            delta: p.gamma_t * (k as f64 - 25.0) / 5.0,
            coupling_detuning: 0.0,
            i0,
            i1_minus: C64::new(i1, 0.0),
            i1_plus: C64::new(-i1, 0.0),
        };
        let h = first_harmonics(&p, &drive).unwrap();
        exact &= h.broad_term == C64::new(0.0, 0.0);
    }
    c.check("broad Lorentzian term identically zero for i1+ = -i1-", exact);

    // Fitted central width equals 2(gamma_t + i0) across two decades.
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let i0 = p.pump_rate_i0() * 10f64.powf(-1.0 + 2.0 * k as f64 / 4.0);
        let i1 = 0.1 * i0;
        let drive = FieldDrive {
            polarization: Polarization::LinPerpLin,
            delta: 0.0,
            coupling_detuning: 0.0,
            i0,
            i1_minus: C64::new(i1, 0.0),
            i1_plus: C64::new(-i1, 0.0),
        };
        let width = 2.0 * (p.gamma_t + i0);
        let deltas: Vec<f64> = (-600..=600).map(|j| j as f64 * width / 120.0).collect();
        let trace = rate_spectrum(&p, &drive, &deltas, 0.27).unwrap();
        let fit = fit_lorentzian(&trace.deltas, &trace.transmission).unwrap();
        assert!(fit.converged);
        worst = worst.max(((fit.fwhm - width) / width).abs());
    }
    c.check(format!("fitted FWHM matches 2(gamma_t + i0) to {worst:.2e} <= 2% over two decades of i0"), worst <= 0.02);
    c.finish();
}

#[test]
fn criterion_4_spectral_structure_at_reference_field() {
    let start = Instant::now();
    let mut c = Criterion::new("4 (three-peak / single-peak structure at 0.9 G)");
    let p = reference_params();
    let env = MagneticEnvironment::new(0.9, 0.0);
    let opts = SpectrumOptions::default();
    let deltas: Vec<f64> = (0..=600)
        .map(|k| units::mhz(-1.5 + 3.0 * k as f64 / 600.0))
        .collect();

    let peaks_of = |pol: Polarization| {
        let drive = FieldDrive::from_rabi(&p, pol, 0.0);
        let tr = transmission_spectrum(&p, &drive, &env, &deltas, &opts).unwrap();
        let tmax = tr.transmission.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tmin = tr.transmission.iter().cloned().fold(f64::INFINITY, f64::min);
        find_peaks(&tr.deltas, &tr.transmission, 0.05 * (tmax - tmin))
    };

    let lin = peaks_of(Polarization::LinPerpLin);
    let lin_mhz: Vec<f64> = lin.iter().map(|&d| units::to_mhz(d)).collect();
    c.check(
        format!("orthogonal linear: three peaks found ({lin_mhz:?} MHz)"),
        lin.len() == 3,
    );
    if lin.len() == 3 {
        c.check(
            format!("central peak at delta = 0 ({:+.4} MHz)", lin_mhz[0]),
            lin_mhz[0].abs() <= 0.05,
        );
        for &side in &lin_mhz[1..] {
            c.check(
                format!("side peak |delta| = {:.3} MHz inside 0.70 +- 0.05 MHz", side.abs()),
                (side.abs() - 0.70).abs() <= 0.05,
            );
        }
        c.check(
            format!(
                "side peaks at the two-photon splitting 2|dz| = 0.63 MHz ({:.3}, {:.3})",
                lin_mhz[1].abs(),
                lin_mhz[2].abs()
            ),
            lin_mhz[1..].iter().all(|s| (s.abs() - 0.63).abs() <= 0.02),
        );
    }

    let circ = peaks_of(Polarization::CircOrthogonal);
    let circ_mhz: Vec<f64> = circ.iter().map(|&d| units::to_mhz(d)).collect();
    c.check(
        format!("orthogonal circular: single side peak, none at delta = 0 ({circ_mhz:?} MHz)"),
        circ.len() == 1 && circ_mhz[0].abs() > 0.1,
    );
    if lin.len() == 3 && circ.len() == 1 {
        let lin_side = lin_mhz[1].abs();
        c.check(
            format!(
                "circular peak at the same |delta| as the linear side peaks ({:.3} vs {:.3})",
                circ_mhz[0].abs(),
                lin_side
            ),
            (circ_mhz[0].abs() - lin_side).abs() <= 0.02,
        );
    }
    let dt = start.elapsed();
    c.check(format!("runtime {dt:.2?} < 10 min"), dt.as_secs_f64() < 600.0);
    c.finish();
}

#[test]
fn criterion_5_gradient_immunity_and_side_peak_broadening() {
    let mut c = Criterion::new("5 (linewidths vs gradient)");
    let p = reference_params();
    let drive = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.0);
    let env = MagneticEnvironment::new(0.9, 0.0);
    let opts = SpectrumOptions::default();
    let gradients_mg = [0.0, 15.0, 30.0, 45.0, 60.0];
    let gradients: Vec<f64> = gradients_mg.iter().map(|g| 1.0e-3 * g).collect();
    let deltas: Vec<f64> = (0..241)
        .map(|k| units::mhz(-1.2 + 2.4 * k as f64 / 240.0))
        .collect();

    let rows = floquet::linewidth_vs_gradient(&p, &drive, &env, &gradients, &deltas, &opts).unwrap();
    let cpo: Vec<f64> = rows.iter().map(|r| r.cpo_fwhm.unwrap()).collect();
    let eit: Vec<f64> = rows.iter().map(|r| r.eit_fwhm.unwrap()).collect();
    println!(
        "  central FWHM (kHz): {:?}",
        cpo.iter().map(|w| units::to_khz(*w)).collect::<Vec<_>>()
    );
    println!(
        "  side    FWHM (kHz): {:?}",
        eit.iter().map(|w| units::to_khz(*w)).collect::<Vec<_>>()
    );

    let cpo_spread = (cpo.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - cpo.iter().cloned().fold(f64::INFINITY, f64::min))
        / cpo.iter().sum::<f64>()
        * cpo.len() as f64;
    c.check(
        format!("central FWHM varies {:.2}% < 5% over 0-60 mG/cm", 100.0 * cpo_spread),
        cpo_spread < 0.05,
    );
    c.check(
        "side FWHM strictly increasing with gradient",
        eit.windows(2).all(|w| w[1] > w[0]),
    );

    let lf = linear_fit(&gradients, &eit).unwrap();
    c.check(
        format!("side FWHM affine in gradient: r^2 = {:.3} > 0.95", lf.r_squared),
        lf.r_squared > 0.95,
    );
    // Geometric oracle: the two-photon resonance spread across the cell,
    // d(2|zg| B-spread)/d(db_dz) = 2 * 0.35 MHz/G * 5 cm.
    let oracle = units::mhz(2.0 * 0.35 * env.cell_length); // rad/s per (G/cm)
    let ratio = lf.slope / oracle;
    c.check(
        format!("slope/oracle = {ratio:.3} within [1/1.5, 1.5]"),
        ratio >= 1.0 / 1.5 && ratio <= 1.5,
    );
    c.finish();
}

#[test]
fn criterion_6_memory_decay_uniform_field() {
    let mut c = Criterion::new("6 (memory decay, uniform field)");
    let p = reference_params();
    let env = MagneticEnvironment::new(0.9, 0.0);
    let seq = PulseSequence::standard(0.0);
    let opts = MemoryOptions::default();
    let grid = default_storage_grid();

    let tau_of = |mem: MemoryTag| {
        let (curve, _) = decay_curve(&p, &env, &seq, mem, &grid, &opts).unwrap();
        let fit = fit_exponential(&curve.storage_times, &curve.amplitudes, false).unwrap();
        assert!(fit.converged, "decay fit did not converge for {mem:?}");
        fit.tau
    };
    let tau_cpo = tau_of(MemoryTag::Cpo);
    let tau_eit = tau_of(MemoryTag::Eit);
    let tau_transit = 1.0 / p.gamma_t;
    println!(
        "  tau_cpo = {:.3} us, tau_eit = {:.3} us, 1/gamma_t = {:.3} us",
        units::to_us(tau_cpo),
        units::to_us(tau_eit),
        units::to_us(tau_transit)
    );

    c.check(
        format!("tau_cpo and tau_eit agree to {:.2}% <= 10%", 100.0 * ((tau_cpo - tau_eit) / tau_eit).abs()),
        ((tau_cpo - tau_eit) / tau_eit).abs() <= 0.10,
    );
    for (name, tau) in [("cpo", tau_cpo), ("eit", tau_eit)] {
        c.check(
            format!("tau_{name} within 15% of 1/gamma_t"),
            ((tau - tau_transit) / tau_transit).abs() <= 0.15,
        );
    }
    let measured = 3.5e-6;
    c.check(
        format!(
            "measured 3.5 us within 25% of simulated ({:.1}%)",
            100.0 * ((measured - tau_cpo) / tau_cpo).abs()
        ),
        ((measured - tau_cpo) / tau_cpo).abs() <= 0.25,
    );
    c.finish();
}

#[test]
fn criterion_7_memory_decay_under_gradient() {
    let mut c = Criterion::new("7 (memory decay, 45 mG/cm gradient)");
    let p = reference_params();
    let uniform = MagneticEnvironment::new(0.9, 0.0);
    let gradient = MagneticEnvironment::new(0.9, 0.045);
    let seq = PulseSequence::standard(0.0);
    let opts = MemoryOptions::default();
    let grid = default_storage_grid();

    let curve_of = |env: &MagneticEnvironment, mem: MemoryTag| {
        let (curve, _) = decay_curve(&p, env, &seq, mem, &grid, &opts).unwrap();
        curve
    };

    let cpo_u = curve_of(&uniform, MemoryTag::Cpo);
    let cpo_g = curve_of(&gradient, MemoryTag::Cpo);
    let eit_u = curve_of(&uniform, MemoryTag::Eit);
    let eit_g = curve_of(&gradient, MemoryTag::Eit);

    let tau = |curve: &lambda_sim::DecayCurve| {
        fit_exponential(&curve.storage_times, &curve.amplitudes, false)
            .unwrap()
            .tau
    };
    let tau_cpo_u = tau(&cpo_u);
    let tau_cpo_g = tau(&cpo_g);
    let tau_eit_g = tau(&eit_g);
    println!(
        "  tau_cpo {:.3} -> {:.3} us; tau_eit(gradient) = {:.3} us",
        units::to_us(tau_cpo_u),
        units::to_us(tau_cpo_g),
        units::to_us(tau_eit_g)
    );

    c.check(
        format!(
            "population-memory lifetime unchanged by gradient ({:.2}% <= 5%)",
            100.0 * ((tau_cpo_g - tau_cpo_u) / tau_cpo_u).abs()
        ),
        ((tau_cpo_g - tau_cpo_u) / tau_cpo_u).abs() <= 0.05,
    );

    // Coherence amplitude against the dephasing-kernel envelope,
    // both normalized at the first storage point.
    let mut worst: f64 = 0.0;
    let k0 = eit_dephasing_kernel(&gradient, eit_g.storage_times[0]).norm()
        * (-p.gamma_t * eit_g.storage_times[0]).exp();
    for (i, (&ts, &a)) in eit_g
        .storage_times
        .iter()
        .zip(&eit_g.amplitudes)
        .enumerate()
    {
        let expected = eit_dephasing_kernel(&gradient, ts).norm() * (-p.gamma_t * ts).exp() / k0;
        let got = a / eit_g.amplitudes[0];
        if i > 0 {
            worst = worst.max((got - expected).abs());
        }
    }
    c.check(
        format!("coherence amplitude tracks |kernel| e^(-gamma_t t): max deviation {worst:.3} <= 0.05"),
        worst <= 0.05,
    );

    c.check(
        format!(
            "fitted effective tau_eit = {:.2} us inside [0.5, 1.2] us",
            units::to_us(tau_eit_g)
        ),
        (0.5e-6..=1.2e-6).contains(&tau_eit_g),
    );

    // Maximum retrieved amplitudes (earliest storage point) under the
    // gradient: coherence memory suppressed relative to population
    // memory by a factor inside [3, 8].
    let suppression = cpo_g.amplitudes[0] / eit_g.amplitudes[0];
    c.check(
        format!("gradient cpo/eit amplitude ratio {suppression:.2} inside [3, 8]"),
        (3.0..=8.0).contains(&suppression),
    );
    let _ = eit_u;
    c.finish();
}

#[test]
fn criterion_8_optical_depth_calibration() {
    let mut c = Criterion::new("8 (27% linear-transmission calibration)");
    let mut p = reference_params();
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
    let tr = transmission_spectrum(&p, &drive, &env, &[0.0, units::mhz(0.05)], &opts).unwrap();
    c.check(
        format!(
            "weak-probe, no-coupling line-center transmission {:.4} = 0.27 +- 0.01",
            tr.transmission[0]
        ),
        (tr.transmission[0] - 0.27).abs() <= 0.01,
    );
    c.finish();
}

#[test]
fn criterion_9_property_suite() {
    let start = Instant::now();
    let mut c = Criterion::new("9 (properties: hermiticity, conservation, linearity, quadrature, determinism)");
    let p = reference_params();
    let env = MagneticEnvironment::new(0.9, 0.02);

    // Hermiticity / trace structure of solved harmonic systems.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut herm: f64 = 0.0;
    let mut trace_defect: f64 = 0.0;
    for _ in 0..25 {
        let pol = if rng.random_range(0.0..1.0_f64) < 0.5 {
            Polarization::LinPerpLin
        } else {
            Polarization::CircOrthogonal
        };
        let drive = FieldDrive::from_rabi(&p, pol, rng.random_range(-8.0..8.0) * p.gamma_t);
        let local = LocalConditions::at(
            &env,
            rng.random_range(0.0..5.0),
            rng.random_range(-2.0..2.0) * p.doppler_hwhm,
            true,
        )
        .unwrap();
        let sys = floquet::assemble_floquet_system(&p, &drive, &local);
        let h = floquet::solve_floquet(&sys).unwrap();
        herm = herm.max(h.hermiticity_defect());
        let (d0, d1, dm1) = h.trace_defects();
        trace_defect = trace_defect.max(d0).max(d1).max(dm1);
    }
    c.check(format!("hermiticity defect {herm:.2e} <= 1e-10"), herm <= 1e-10);
    c.check(format!("trace defects {trace_defect:.2e} <= 1e-10"), trace_defect <= 1e-10);

    // Population conservation along a modulated trajectory.
    let i0 = p.pump_rate_i0();
    let delta = 1.3 * p.gamma_t;
    let t_end = 6.0 / p.gamma_t;
    let samples: Vec<f64> = (1..=60).map(|k| t_end * k as f64 / 60.0).collect();
    let states = integrate_populations(
        &p,
        |t| i0 + 0.2 * i0 * (delta * t).cos(),
        |t| i0 - 0.2 * i0 * (delta * t).cos(),
        PopulationState::ground_mixture(),
        t_end,
        &OdeOptions::default(),
        &samples,
    )
    .unwrap();
    let cons: f64 = states
        .iter()
        .map(|s| (s.total() - 1.0).abs())
        .fold(0.0, f64::max);
    c.check(format!("population conservation {cons:.2e} <= 1e-8"), cons <= 1e-8);

    // Linear response: probe response invariant under halving the probe.
    let drive = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, 0.5 * p.gamma_t);
    let local = LocalConditions::at(&env, 2.0, 0.4 * p.gamma_opt, true).unwrap();
    let chi = solve_local_susceptibility(&p, &drive, &local).unwrap();
    let mut ph = p;
    ph.omega_p *= 0.5;
    let chi_h = solve_local_susceptibility(&ph, &drive, &local).unwrap();
    let lin_dev = (chi - chi_h).norm() / chi.norm();
    c.check(format!("probe-response change on halving {lin_dev:.2e} < 1%"), lin_dev < 0.01);

    // Velocity-quadrature convergence: node doubling moves transmission
    // by < 0.5% at representative detunings (central resonance, side
    // resonance, background).
    let spec = VelocityQuadratureSpec::default();
    let opts = SpectrumOptions::default();
    let mut quad_worst: f64 = 0.0;
    for delta_mhz in [0.0, 0.63, -1.2] {
        let d = FieldDrive::from_rabi(&p, Polarization::LinPerpLin, units::mhz(delta_mhz));
        let t_of = |s: &VelocityQuadratureSpec| {
            let grid = velocity_grid_for_delta(&p, s, d.delta);
            let chi = doppler_average(&p, &d, &env, 2.5, true, &grid).unwrap();
            let calib_grid = lambda_sim::quadrature::VelocityGrid::build(&p, s);
            let calib =
                floquet::calibrate_optical_depth(&p, &d, &calib_grid, opts.linear_transmission)
                    .unwrap();
            (-calib.scale() * chi.im).exp()
        };
        let coarse = t_of(&spec);
        let fine = t_of(&spec.doubled());
        quad_worst = quad_worst.max(((fine - coarse) / fine).abs());
    }
    c.check(
        format!("transmission change on node doubling {quad_worst:.2e} < 0.5%"),
        quad_worst < 5e-3,
    );

    // CLI byte determinism: identical config -> byte-identical outputs.
    let bin = env!("CARGO_BIN_EXE_lambda-sim");
    let dir = std::env::temp_dir().join("lambda_sim_acceptance_cli");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("run.cfg");
    std::fs::write(
        &cfg_path,
        "[grid]\ndelta_points = 41\n[magnetic]\ngradients_mG_cm = 0\n[run]\nreproducible = true\n",
    )
    .unwrap();
    let run = |out: &str| {
        let status = std::process::Command::new(bin)
            .args([
                "spectrum",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                dir.join(out).to_str().unwrap(),
                "--workers",
                "1",
            ])
            .status()
            .unwrap();
        assert!(status.success());
        // Compare the data products; the echoed config legitimately
        // records the (differing) output directory itself.
        let mut names: Vec<_> = std::fs::read_dir(dir.join(out))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        names.sort();
        names
            .into_iter()
            .map(|p| std::fs::read(p).unwrap())
            .collect::<Vec<_>>()
    };
    let a = run("a");
    let b = run("b");
    c.check(
        "byte-identical CLI data outputs for identical config",
        !a.is_empty() && a == b,
    );

    let dt = start.elapsed();
    c.check(format!("property suite runtime {dt:.2?} < 15 min"), dt.as_secs_f64() < 900.0);
    c.finish();
}
