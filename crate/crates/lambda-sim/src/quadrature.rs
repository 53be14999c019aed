//! Quadrature grids for the Doppler-velocity and cell-position averages.
//!
//! The velocity integrand is a Gaussian of half-width `W_D` carrying a
//! resonant core whose scale is the optical-coherence width, two orders
//! of magnitude narrower. A plain Gaussian-weighted rule at practical
//! node counts undersamples that core, so the velocity grid here is a
//! composite Gauss-Legendre rule on panels graded geometrically away
//! from the core: the innermost panel resolves the resonance, the outer
//! panels the Gaussian envelope. Node positions and weights are emitted
//! in ascending order so reductions are deterministic.

use crate::params::{MagneticEnvironment, SystemParams};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence from Chebyshev starting
/// guesses; accurate to machine precision for the orders used here.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Specification of the velocity quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityQuadratureSpec {
    /// Gauss-Legendre order per panel.
    pub nodes_per_panel: usize,
    /// Half-span of the grid in units of the Doppler HWHM.
    pub span_hwhm: f64,
    /// Core panel half-width in units of the optical-coherence rate.
    pub core_widths: f64,
    /// Geometric growth ratio of successive panel edges.
    pub panel_ratio: f64,
}

impl Default for VelocityQuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_panel: 16,
            span_hwhm: 3.5,
            core_widths: 4.0,
            panel_ratio: 3.0,
        }
    }
}

impl VelocityQuadratureSpec {
    /// Same panels with doubled per-panel order (convergence checks).
    pub fn doubled(&self) -> Self {
        Self {
            nodes_per_panel: 2 * self.nodes_per_panel,
            ..*self
        }
    }
}

/// A velocity-class grid: one-photon detuning offsets with Gaussian
/// weights, normalized to unit total weight.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    /// `(detuning offset rad/s, weight)` in ascending detuning order.
    pub nodes: Vec<(f64, f64)>,
}

impl VelocityGrid {
    /// Build the grid for the Doppler width in `params`, graded around
    /// the resonant class at zero offset. A nonpositive Doppler width
    /// degenerates to the single resonant class.
    pub fn build(params: &SystemParams, spec: &VelocityQuadratureSpec) -> Self {
        Self::build_graded(params, spec, &[0.0])
    }

    /// Build a grid with panels graded around every listed structure
    /// center (e.g. the coupling- and probe-resonant classes). Panels
    /// shrink to the core width near each center and grow geometrically
    /// away from all of them, so narrow resonances are resolved wherever
    /// they sit inside the Gaussian span.
    pub fn build_graded(
        params: &SystemParams,
        spec: &VelocityQuadratureSpec,
        centers: &[f64],
    ) -> Self {
        if params.doppler_hwhm <= 0.0 {
            return Self::single();
        }
        let span = spec.span_hwhm * params.doppler_hwhm;
        let core = (spec.core_widths * params.gamma_opt).min(span);

        let mut edges = vec![-span, span];
        for &c in centers {
            let c = c.clamp(-span, span);
            let mut e = core;
            // An edge at the center keeps the innermost panels no wider
            // than one core width on each side of the resonance.
            edges.push(c);
            edges.push((c - e).clamp(-span, span));
            edges.push((c + e).clamp(-span, span));
            while c - e > -span || c + e < span {
                e *= spec.panel_ratio;
                edges.push((c - e).clamp(-span, span));
                edges.push((c + e).clamp(-span, span));
            }
        }
        edges.sort_by(|a, b| a.total_cmp(b));
        // Merge edges closer than half a core width; the panel would add
        // nodes without adding resolution.
        let mut merged = vec![edges[0]];
        for &e in &edges[1..] {
            if e - merged.last().unwrap() > 0.5 * core {
                merged.push(e);
            }
        }
        if *merged.last().unwrap() < span {
            merged.push(span);
        }

        let gl = gauss_legendre(spec.nodes_per_panel);
        let ln2 = std::f64::consts::LN_2;
        let wd2 = params.doppler_hwhm * params.doppler_hwhm;
        let gauss = |x: f64| (-ln2 * x * x / wd2).exp();

        let mut nodes = Vec::new();
        for pair in merged.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for &(x, w) in &gl {
                let d = mid + half * x;
                nodes.push((d, half * w * gauss(d)));
            }
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));

        let total: f64 = nodes.iter().map(|n| n.1).sum();
        for n in &mut nodes {
            n.1 /= total;
        }
        Self { nodes }
    }

    /// Degenerate single-class grid (no Doppler averaging).
    pub fn single() -> Self {
        Self {
            nodes: vec![(0.0, 1.0)],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Uniform trapezoid grid over the cell, `(z cm, weight)` with weights
/// normalized to a unit-mean average. A single node sits at mid-cell;
/// gradients of zero collapse to it since the integrand is constant.
pub fn position_grid(env: &MagneticEnvironment, n: usize) -> Vec<(f64, f64)> {
    let l = env.cell_length;
    if n <= 1 || env.db_dz == 0.0 {
        return vec![(0.5 * l, 1.0)];
    }
    let h = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            (l * i as f64 * h, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = gauss_legendre(6);
        // x^8 over [-1,1] = 2/9 needs order >= 5.
        let s: f64 = gl.iter().map(|&(x, w)| w * x.powi(8)).sum();
        assert_relative_eq!(s, 2.0 / 9.0, max_relative = 1e-13);
        let total: f64 = gl.iter().map(|&(_, w)| w).sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gauss_legendre_handles_smooth_transcendentals() {
        let gl = gauss_legendre(20);
        let s: f64 = gl.iter().map(|&(x, w)| w * x.exp()).sum();
        assert_relative_eq!(s, std::f64::consts::E - 1.0 / std::f64::consts::E, max_relative = 1e-14);
    }

    #[test]
    fn velocity_grid_is_normalized_and_sorted() {
        let p = SystemParams::cesium_cell();
        let g = VelocityGrid::build(&p, &VelocityQuadratureSpec::default());
        assert!(g.len() >= 64, "default grid too small: {}", g.len());
        let total: f64 = g.nodes.iter().map(|n| n.1).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        assert!(g.nodes.windows(2).all(|w| w[1].0 > w[0].0));
        // Symmetric grid.
        let mean: f64 = g.nodes.iter().map(|n| n.0 * n.1).sum();
        assert!(mean.abs() < 1e-9 * p.doppler_hwhm);
    }

    #[test]
    fn velocity_grid_resolves_narrow_lorentzian_core() {
        // The acid test for the graded panels: average a Lorentzian of the
        // optical-coherence width over the Doppler Gaussian and compare
        // against dense numerical quadrature.
        let p = SystemParams::cesium_cell();
        let g = p.gamma_opt;
        let lorentz = |d: f64| g * g / (d * d + g * g);

        let spec = VelocityQuadratureSpec::default();
        let grid = VelocityGrid::build(&p, &spec);
        let approx_val: f64 = grid.nodes.iter().map(|&(d, w)| w * lorentz(d)).sum();

        // Dense reference on the same span.
        let span = spec.span_hwhm * p.doppler_hwhm;
        let n = 4_000_000;
        let ln2 = std::f64::consts::LN_2;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let d = -span + (2.0 * span) * (i as f64 + 0.5) / n as f64;
            let wt = (-ln2 * d * d / (p.doppler_hwhm * p.doppler_hwhm)).exp();
            num += wt * lorentz(d);
            den += wt;
        }
        let reference = num / den;
        assert_relative_eq!(approx_val, reference, max_relative = 1e-6);

        // Doubling the per-panel order moves the result by well under 0.5%.
        let grid2 = VelocityGrid::build(&p, &spec.doubled());
        let doubled: f64 = grid2.nodes.iter().map(|&(d, w)| w * lorentz(d)).sum();
        assert!((doubled - approx_val).abs() / approx_val.abs() < 5e-3);
    }

    #[test]
    fn zero_doppler_degenerates_to_single_class() {
        let mut p = SystemParams::cesium_cell();
        p.doppler_hwhm = 0.0;
        let g = VelocityGrid::build(&p, &VelocityQuadratureSpec::default());
        assert_eq!(g.nodes, vec![(0.0, 1.0)]);
    }

    #[test]
    fn position_grid_weights_average_linear_fields_exactly() {
        let env = MagneticEnvironment::new(0.5, 0.045);
        let grid = position_grid(&env, 65);
        let total: f64 = grid.iter().map(|g| g.1).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        let mean_b: f64 = grid.iter().map(|&(z, w)| w * env.field_at(z)).sum();
        assert_relative_eq!(mean_b, env.field_at(2.5), max_relative = 1e-12);
    }

    #[test]
    fn uniform_field_collapses_position_grid() {
        let env = MagneticEnvironment::new(0.9, 0.0);
        assert_eq!(position_grid(&env, 65), vec![(2.5, 1.0)]);
    }
}
