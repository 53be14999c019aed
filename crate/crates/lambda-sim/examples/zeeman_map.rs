//! Map a magnetic environment to level shifts and resonance positions.
//!
//! ```bash
//! cargo run --release --example zeeman_map
//! ```

use lambda_sim::{units, zeeman_shifts, MagneticEnvironment};

fn main() -> lambda_sim::Result<()> {
    let env = MagneticEnvironment::new(0.9, 0.0);
    let (dz, de) = zeeman_shifts(&env, 2.5)?;
    println!("uniform 0.9 G:");
    println!("  ground shift  {:+.4} MHz", units::to_mhz(dz));
    println!("  excited shift {:+.4} MHz", units::to_mhz(de));
    println!(
        "  two-photon resonances at delta = +-{:.3} MHz",
        units::to_mhz(2.0 * dz.abs())
    );

    let grad = MagneticEnvironment::new(0.9, 0.045);
    println!("\n45 mG/cm gradient across the {} cm cell:", grad.cell_length);
    for z in [0.0, 1.25, 2.5, 3.75, 5.0] {
        let (dz, _) = zeeman_shifts(&grad, z)?;
        println!(
            "  z = {z:>5.2} cm: B = {:.4} G, raman splitting 2|dz| = {:.4} MHz",
            grad.field_at(z),
            units::to_mhz(2.0 * dz.abs())
        );
    }
    let (d0, _) = zeeman_shifts(&grad, 0.0)?;
    let (dl, _) = zeeman_shifts(&grad, grad.cell_length)?;
    println!(
        "  two-photon spread over the cell: {:.4} MHz",
        units::to_mhz(2.0 * (dl - d0).abs())
    );
    Ok(())
}
