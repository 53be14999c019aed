//! The fitting toolkit on synthetic data: peak finding, Lorentzian
//! linewidth extraction, and exponential decay constants.
//!
//! ```bash
//! cargo run --release --example fit_demo
//! ```

use lambda_sim::analysis::{find_peaks, fit_exponential, fit_lorentzian, linear_fit};

fn main() -> lambda_sim::Result<()> {
    // A three-peak synthetic trace.
    let lor = |x: f64, c: f64, w: f64, a: f64| {
        let hw = 0.5 * w;
        a * hw * hw / ((x - c) * (x - c) + hw * hw)
    };
    let xs: Vec<f64> = (-300..=300).map(|k| k as f64 * 0.005).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| 0.3 + lor(x, 0.0, 0.12, 0.2) + lor(x, -0.7, 0.15, 0.1) + lor(x, 0.7, 0.15, 0.1))
        .collect();
    let peaks = find_peaks(&xs, &ys, 0.02);
    println!("peaks found at {peaks:?}");

    // Fit the central peak in a window.
    let window: Vec<usize> = xs
        .iter()
        .enumerate()
        .filter(|(_, &x)| x.abs() < 0.35)
        .map(|(i, _)| i)
        .collect();
    let wx: Vec<f64> = window.iter().map(|&i| xs[i]).collect();
    let wy: Vec<f64> = window.iter().map(|&i| ys[i]).collect();
    let fit = fit_lorentzian(&wx, &wy)?;
    println!(
        "central peak: center {:+.5}, fwhm {:.5} (true 0.12), converged {}",
        fit.center, fit.fwhm, fit.converged
    );

    // Exponential decay.
    let ts: Vec<f64> = (0..20).map(|k| 0.7 * k as f64).collect();
    let amps: Vec<f64> = ts.iter().map(|&t| 1.8 * (-t / 3.5).exp()).collect();
    let efit = fit_exponential(&ts, &amps, false)?;
    println!("decay: tau {:.6} (true 3.5), amplitude {:.6}", efit.tau, efit.amplitude);

    // Ordinary least squares.
    let lx = [0.0, 15.0, 30.0, 45.0, 60.0];
    let ly = [0.11, 0.14, 0.18, 0.21, 0.25];
    let lfit = linear_fit(&lx, &ly)?;
    println!(
        "line: slope {:.5}, intercept {:.5}, r^2 {:.5}",
        lfit.slope, lfit.intercept, lfit.r_squared
    );
    Ok(())
}
