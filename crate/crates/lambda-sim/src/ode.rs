//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4)).
//!
//! The systems integrated here are non-stiff at the parameters of
//! interest (rate ratios of order 100), so an embedded explicit pair
//! with PI step-size control is adequate and keeps the dependency
//! surface flat. States are fixed-size `[f64; N]` arrays.

use crate::error::{Error, Result};

/// Integration controls. `rtol`/`atol` bound the local error estimate;
/// `max_step` caps growth (useful when the right-hand side is about to
/// switch discontinuously).
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            initial_step: 0.0, // 0 = pick from the interval
            max_step: f64::INFINITY,
        }
    }
}

// Dormand-Prince coefficients (RK5(4)7M).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1`, returning the final
/// state. Fails with a step-size-underflow diagnostic if the controller
/// cannot meet the tolerance.
pub fn integrate<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &OdeOptions,
) -> Result<[f64; N]> {
    let mut sink = |_: f64, _: &[f64; N]| {};
    integrate_observed(f, t0, t1, y0, opts, &mut sink)
}

/// As [`integrate`], invoking `observe(t, y)` after every accepted step
/// (including the initial state).
pub fn integrate_observed<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &OdeOptions,
    observe: &mut impl FnMut(f64, &[f64; N]),
) -> Result<[f64; N]> {
    let span = t1 - t0;
    if span <= 0.0 {
        observe(t0, &y0);
        return Ok(y0);
    }
    let mut h = if opts.initial_step > 0.0 {
        opts.initial_step
    } else {
        span / 100.0
    };
    h = h.min(opts.max_step).min(span);
    let h_min = span * 1e-14;

    let mut t = t0;
    let mut y = y0;
    observe(t, &y);

    let mut k = [[0.0_f64; N]; 7];
    // PI controller memory.
    let mut err_prev: f64 = 1.0;

    while t < t1 {
        if h < h_min {
            return Err(Error::Numeric(format!(
                "step-size underflow at t = {t:.6e} (h = {h:.3e}); system too stiff for the requested tolerance"
            )));
        }
        if t + h > t1 {
            h = t1 - t;
        }

        k[0] = f(t, &y);
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }

        let mut y5 = y;
        let mut err = 0.0_f64;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            let e = h * (d5 - d4) / scale;
            err += e * e;
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = y5;
            observe(t, &y);
            let grow = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h = (h * grow.min(5.0)).min(opts.max_step);
            err_prev = err.max(1e-10);
        } else {
            h *= (0.9 * err.powf(-1.0 / 5.0)).max(0.2);
        }
    }
    Ok(y)
}

/// Integrate while recording the state at the fixed `sample_times`
/// (must be nondecreasing and within `[t0, t1]`). The integration steps
/// land exactly on every sample point.
pub fn integrate_sampled<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &OdeOptions,
    sample_times: &[f64],
) -> Result<Vec<[f64; N]>> {
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut y = y0;
    let mut t = t0;
    for &ts in sample_times {
        debug_assert!(ts >= t - 1e-30 && ts <= t1 * (1.0 + 1e-12) + 1e-30);
        y = integrate(f, t, ts, y, opts)?;
        t = ts.max(t);
        samples.push(y);
    }
    if t < t1 {
        integrate(f, t, t1, y, opts)?;
    }
    Ok(samples)
}
