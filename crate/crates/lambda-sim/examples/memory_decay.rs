//! Write/store/read cycles for the population (cpo) and coherence (eit)
//! memories, with and without a field gradient. The population memory
//! keeps its transit-limited lifetime under the gradient; the coherence
//! memory dephases across the cell.
//!
//! ```bash
//! cargo run --release --example memory_decay
//! ```

use lambda_sim::analysis::fit_exponential;
use lambda_sim::memory::{
    decay_curve, eit_dephasing_kernel, MemoryOptions, PulseSequence,
};
use lambda_sim::{units, MagneticEnvironment, MemoryTag, SystemParams};
use std::io::Write;

fn main() -> lambda_sim::Result<()> {
    let params = SystemParams::cesium_cell();
    let seq = PulseSequence::standard(0.0);
    let opts = MemoryOptions {
        z_nodes: 17,
        ..MemoryOptions::default()
    };
    let times: Vec<f64> = (0..8)
        .map(|k| 0.2e-6 * (12.0e-6_f64 / 0.2e-6).powf(k as f64 / 7.0))
        .collect();

    std::fs::create_dir_all("example_out").ok();
    for (label, db_dz) in [("uniform", 0.0), ("gradient45", 0.045)] {
        let env = MagneticEnvironment::new(0.9, db_dz);
        for memory in [MemoryTag::Cpo, MemoryTag::Eit] {
            let (curve, _) = decay_curve(&params, &env, &seq, memory, &times, &opts)?;
            let fit = fit_exponential(&curve.storage_times, &curve.amplitudes, false)?;

            let name = format!("example_out/decay_{}_{}.csv", memory.tag(), label);
            let mut f = std::fs::File::create(&name).unwrap();
            writeln!(f, "t_s_us,amplitude").unwrap();
            for (t, a) in curve.storage_times.iter().zip(&curve.amplitudes) {
                writeln!(f, "{:.4},{:.6e}", units::to_us(*t), a).unwrap();
            }
            println!(
                "{label:<10} {:<4} tau = {:.2} us -> {name}",
                memory.tag(),
                units::to_us(fit.tau)
            );
        }
    }

    println!("\ndephasing-kernel envelope at 45 mG/cm:");
    let env = MagneticEnvironment::new(0.9, 0.045);
    for ts in [0.5e-6, 2.0e-6, 4.0e-6, 6.35e-6] {
        println!(
            "  t_s = {:>5.2} us: |kernel| = {:.4}",
            units::to_us(ts),
            eit_dephasing_kernel(&env, ts).norm()
        );
    }
    Ok(())
}
