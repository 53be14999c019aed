//! Gradient sweep: the central resonance ignores the field gradient
//! while the side (Raman) resonances broaden with it.
//!
//! Coarser grids than the defaults keep this demo quick; see the
//! acceptance suite for the full-resolution sweep.
//!
//! ```bash
//! cargo run --release --example gradient_sweep
//! ```

use lambda_sim::floquet::{linewidth_vs_gradient, SpectrumOptions};
use lambda_sim::quadrature::VelocityQuadratureSpec;
use lambda_sim::{units, FieldDrive, MagneticEnvironment, Polarization, SystemParams};

fn main() -> lambda_sim::Result<()> {
    let params = SystemParams::cesium_cell();
    let drive = FieldDrive::from_rabi(&params, Polarization::LinPerpLin, 0.0);
    let env = MagneticEnvironment::new(0.9, 0.0);
    let opts = SpectrumOptions {
        velocity: VelocityQuadratureSpec {
            nodes_per_panel: 10,
            ..VelocityQuadratureSpec::default()
        },
        z_nodes: 33,
        ..SpectrumOptions::default()
    };
    let deltas: Vec<f64> = (0..161)
        .map(|k| units::mhz(-1.2 + 2.4 * k as f64 / 160.0))
        .collect();
    let gradients: Vec<f64> = [0.0, 20.0, 40.0, 60.0].iter().map(|g| 1e-3 * g).collect();

    println!("gradient (mG/cm)   central FWHM (kHz)   side FWHM (kHz)");
    let rows = linewidth_vs_gradient(&params, &drive, &env, &gradients, &deltas, &opts)?;
    for row in &rows {
        println!(
            "{:>10.0} {:>20.1} {:>18.1}",
            1e3 * row.gradient,
            row.cpo_fwhm.map_or(f64::NAN, units::to_khz),
            row.eit_fwhm.map_or(f64::NAN, units::to_khz),
        );
    }
    let spread_rate = units::mhz(2.0 * 0.35 * env.cell_length);
    println!(
        "\ngeometric two-photon spread rate: {:.2} kHz per mG/cm",
        units::to_khz(spread_rate) * 1e-3
    );
    Ok(())
}
