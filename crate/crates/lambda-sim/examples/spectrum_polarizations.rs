//! Averaged transmission spectra at 0.9 G for the two polarization
//! configurations: orthogonal linear (central resonance plus two side
//! resonances) versus orthogonal circular (one side resonance only).
//!
//! ```bash
//! cargo run --release --example spectrum_polarizations
//! ```

use lambda_sim::analysis::find_peaks;
use lambda_sim::floquet::{transmission_spectrum, SpectrumOptions};
use lambda_sim::{units, FieldDrive, MagneticEnvironment, Polarization, SystemParams};
use std::io::Write;

fn main() -> lambda_sim::Result<()> {
    let params = SystemParams::cesium_cell();
    let env = MagneticEnvironment::new(0.9, 0.0);
    let opts = SpectrumOptions::default();
    let deltas: Vec<f64> = (0..=400)
        .map(|k| units::mhz(-1.5 + 3.0 * k as f64 / 400.0))
        .collect();

    std::fs::create_dir_all("example_out").ok();
    for pol in [Polarization::LinPerpLin, Polarization::CircOrthogonal] {
        let drive = FieldDrive::from_rabi(&params, pol, 0.0);
        let trace = transmission_spectrum(&params, &drive, &env, &deltas, &opts)?;

        let name = format!("example_out/spectrum_{}.csv", pol.tag());
        let mut f = std::fs::File::create(&name).unwrap();
        writeln!(f, "delta_MHz,transmission").unwrap();
        for (d, t) in trace.deltas.iter().zip(&trace.transmission) {
            writeln!(f, "{:.6},{:.9}", units::to_mhz(*d), t).unwrap();
        }

        let span = trace.transmission.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - trace.transmission.iter().cloned().fold(f64::INFINITY, f64::min);
        let peaks = find_peaks(&trace.deltas, &trace.transmission, 0.05 * span);
        println!(
            "{:<16} peaks at {:?} MHz -> {}",
            pol.tag(),
            peaks.iter().map(|&d| (units::to_mhz(d) * 1e3).round() / 1e3).collect::<Vec<_>>(),
            name
        );
    }
    Ok(())
}
