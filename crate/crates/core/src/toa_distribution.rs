//! Arrival-time distribution from the nodal and non-nodal eigenfunctions of
//! the free arrival-time operator, its FWHM and the clock-fluctuation ratio.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::corrections::exact_toa;
use crate::error::{QtoaError, Result};
use crate::numerics::{gauss_legendre, GaussLegendre};
use crate::wavepacket::{wavefunction, PacketParams, PhaseSpec};

/// Points in the default τ-grid.
pub const DEFAULT_GRID_POINTS: usize = 2001;
/// Half-width of the default τ-grid in units of `σ/v0`.
pub const DEFAULT_GRID_HALF_WIDTH: f64 = 5.0;
/// Momentum mass below which the momentum window is widened.
pub const MOMENTUM_MASS_TARGET: f64 = 1.0 - 1e-6;
/// Envelope amplitude treated as zero when sizing quadrature panels.
const NEGLIGIBLE_AMPLITUDE: f64 = 1e-13;
/// Largest phase advance `ω h` allowed across one 20-point panel.
const MAX_PANEL_PHASE: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenKind {
    NonNodal,
    Nodal,
}

/// Momentum amplitude `ψ̃0(p)` tabulated on Gauss-Legendre nodes.
#[derive(Debug, Clone)]
pub struct MomentumTable {
    params: PacketParams,
    momenta: Vec<f64>,
    /// Quadrature weight times `ψ̃0(p)`.
    weighted_amplitude: Vec<Complex64>,
    mass: f64,
}

fn panels(lo: f64, hi: f64, max_len: impl Fn(f64) -> f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    cuts.push(hi);
    let mut out = Vec::new();
    let mut a = lo;
    for stop in cuts {
        while a < stop {
            let b = (a + max_len(a)).min(stop);
            out.push((a, b));
            a = b;
        }
    }
    out
}

impl MomentumTable {
    /// Tabulates `ψ̃0` over a momentum window wide enough for the overlaps at
    /// arrival point `x_arrival` and times up to `tau_max` in magnitude.
    pub fn new(params: &PacketParams, spec: &PhaseSpec, x_arrival: f64, tau_max: f64) -> Result<Self> {
        params.validate()?;
        let (hbar, sigma) = (params.hbar, params.sigma);
        let p0 = hbar * params.k();
        // Local momentum ħ(k + θ'(x)/σ) across the bulk of the packet.
        let (mut dmin, mut dmax) = (0.0f64, 0.0f64);
        if !spec.is_none() {
            for i in 0..=220 {
                let x = -5.5 + 11.0 * i as f64 / 220.0;
                let d = spec.derivative(x, 1);
                dmin = dmin.min(d);
                dmax = dmax.max(d);
            }
        }
        let pad = 10.0 * hbar / (2.0 * sigma);
        let mut lo = p0 + hbar * dmin / sigma - pad;
        let mut hi = p0 + hbar * dmax / sigma + pad;
        let gl = gauss_legendre(20);
        for _ in 0..8 {
            let table = Self::tabulate(params, spec, x_arrival, tau_max, lo, hi, &gl);
            if table.mass >= MOMENTUM_MASS_TARGET {
                return Ok(table);
            }
            let (c, w) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            lo = c - 1.5 * w;
            hi = c + 1.5 * w;
        }
        let table = Self::tabulate(params, spec, x_arrival, tau_max, lo, hi, &gl);
        if table.mass < MOMENTUM_MASS_TARGET {
            return Err(QtoaError::numerical(
                "momentum window failed to capture the packet",
                table.mass,
                1.0 - table.mass,
            ));
        }
        Ok(table)
    }

    fn tabulate(
        params: &PacketParams,
        spec: &PhaseSpec,
        x_arrival: f64,
        tau_max: f64,
        lo: f64,
        hi: f64,
        gl: &GaussLegendre,
    ) -> Self {
        let (hbar, sigma, mu) = (params.hbar, params.sigma, params.mu);
        let k = params.k();
        // Position nodes for the Fourier transform of the envelope.
        let x_cut = 12.0 + spec.derivative_degree() as f64;
        let kappa_max = ((k - lo / hbar).abs().max((k - hi / hbar).abs())) * sigma;
        let x_panels = panels(
            -x_cut,
            x_cut,
            |a| {
                let live = (0..=4).any(|i| wavefunction(spec, a + 0.25 * i as f64).norm() > NEGLIGIBLE_AMPLITUDE);
                let rate = if live && !spec.is_none() {
                    (0..=4).map(|i| spec.derivative(a + 0.25 * i as f64, 1).abs()).fold(0.0, f64::max) * 1.1
                } else {
                    0.0
                };
                (MAX_PANEL_PHASE / (kappa_max + rate)).min(1.0)
            },
            &[],
        );
        let mut xs = Vec::new();
        let mut xw = Vec::new();
        for &(a, b) in &x_panels {
            for (x, w) in gl.mapped(a, b) {
                let f = wavefunction(spec, x);
                if f.norm() > 0.0 {
                    xs.push(x);
                    xw.push(f * w);
                }
            }
        }
        // Momentum panels: bound the oscillation of ψ̃0 and of the eigenfunction phases.
        let spatial = (x_arrival.abs() + params.q0.abs() + x_cut * sigma) / hbar;
        let p_max = lo.abs().max(hi.abs());
        let rate_p = spatial + p_max * tau_max.abs() / (mu * hbar);
        let p_panels = panels(lo, hi, |_| MAX_PANEL_PHASE / rate_p, &[0.0]);
        let pre = (sigma / (2.0 * PI * hbar)).sqrt();
        let mut momenta = Vec::new();
        let mut weighted_amplitude = Vec::new();
        let mut mass = 0.0;
        for &(a, b) in &p_panels {
            for (p, w) in gl.mapped(a, b) {
                let kappa = (k - p / hbar) * sigma;
                let mut ft = Complex64::new(0.0, 0.0);
                for (&x, &fx) in xs.iter().zip(&xw) {
                    ft += fx * Complex64::from_polar(1.0, kappa * x);
                }
                let amp = ft * Complex64::from_polar(pre, (k - p / hbar) * params.q0);
                mass += amp.norm_sqr() * w;
                momenta.push(p);
                weighted_amplitude.push(amp * w);
            }
        }
        Self { params: *params, momenta, weighted_amplitude, mass }
    }

    /// `∫|ψ̃0|² dp` over the window.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `(⟨τ_non|ψ0⟩, ⟨τ_nod|ψ0⟩)` at arrival point `x_arrival` and time `tau`.
    pub fn overlaps(&self, x_arrival: f64, tau: f64) -> (Complex64, Complex64) {
        let (hbar, mu) = (self.params.hbar, self.params.mu);
        let norm = 1.0 / (2.0 * PI * hbar).sqrt();
        let mut non = Complex64::new(0.0, 0.0);
        let mut nod = Complex64::new(0.0, 0.0);
        for (&p, &a) in self.momenta.iter().zip(&self.weighted_amplitude) {
            let weight = (p.abs() / (2.0 * mu)).sqrt() * norm;
            let phase = p * x_arrival / hbar - p * p * tau / (2.0 * mu * hbar);
            let term = a * Complex64::from_polar(weight, phase);
            non += term;
            if p >= 0.0 {
                nod += term;
            } else {
                nod -= term;
            }
        }
        (non, nod)
    }
}

/// `∫ ⟨τ_kind^X|p⟩* ψ̃0(p) dp`.
pub fn overlap(
    params: &PacketParams,
    spec: &PhaseSpec,
    x_arrival: f64,
    tau: f64,
    kind: EigenKind,
) -> Result<Complex64> {
    let table = MomentumTable::new(params, spec, x_arrival, tau)?;
    let (non, nod) = table.overlaps(x_arrival, tau);
    Ok(match kind {
        EigenKind::NonNodal => non,
        EigenKind::Nodal => nod,
    })
}

/// Densities on a τ-grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToaDistribution {
    pub arrival_point: f64,
    pub tau_grid: Vec<f64>,
    pub pi_non: Vec<f64>,
    pub pi_nod: Vec<f64>,
    pub pi_total: Vec<f64>,
    /// Trapezoid integral of `pi_total`.
    pub grid_mass: f64,
}

fn trapezoid(t: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..t.len()).map(|i| 0.5 * (t[i] - t[i - 1]) * (f(i) + f(i - 1))).sum()
}

impl ToaDistribution {
    /// Trapezoid integral of `τ Π(τ)` (not divided by the grid mass).
    pub fn first_moment(&self) -> f64 {
        trapezoid(&self.tau_grid, |i| self.tau_grid[i] * self.pi_total[i])
    }

    /// `Σ |Π_non − Π_nod| Δτ` by the trapezoid rule.
    pub fn nodal_split(&self) -> f64 {
        trapezoid(&self.tau_grid, |i| (self.pi_non[i] - self.pi_nod[i]).abs())
    }
}

fn check_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.len() < 3 {
        return Err(QtoaError::invalid("tau grid needs at least three points"));
    }
    if tau_grid.iter().any(|t| !t.is_finite()) || tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QtoaError::invalid("tau grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// `Π(X, τ) = |⟨τ_non|ψ0⟩|² + |⟨τ_nod|ψ0⟩|²` on `tau_grid`.
pub fn distribution(
    params: &PacketParams,
    spec: &PhaseSpec,
    x_arrival: f64,
    tau_grid: &[f64],
) -> Result<ToaDistribution> {
    check_grid(tau_grid)?;
    let tau_max = tau_grid[0].abs().max(tau_grid[tau_grid.len() - 1].abs());
    let table = MomentumTable::new(params, spec, x_arrival, tau_max)?;
    Ok(distribution_from_table(&table, x_arrival, tau_grid))
}

fn distribution_from_table(table: &MomentumTable, x_arrival: f64, tau_grid: &[f64]) -> ToaDistribution {
    let mut pi_non = Vec::with_capacity(tau_grid.len());
    let mut pi_nod = Vec::with_capacity(tau_grid.len());
    for &t in tau_grid {
        let (non, nod) = table.overlaps(x_arrival, t);
        pi_non.push(non.norm_sqr());
        pi_nod.push(nod.norm_sqr());
    }
    let pi_total: Vec<f64> = pi_non.iter().zip(&pi_nod).map(|(a, b)| a + b).collect();
    let grid_mass = trapezoid(tau_grid, |i| pi_total[i]);
    ToaDistribution { arrival_point: x_arrival, tau_grid: tau_grid.to_vec(), pi_non, pi_nod, pi_total, grid_mass }
}

/// Classical arrival time at `x_arrival`.
pub fn classical_arrival(params: &PacketParams, x_arrival: f64) -> f64 {
    (x_arrival - params.q0) / params.v0()
}

/// Uniform grid of `points` on `τ_c ± half_width · σ/v0`.
pub fn tau_grid(params: &PacketParams, x_arrival: f64, half_width: f64, points: usize) -> Vec<f64> {
    let c = classical_arrival(params, x_arrival);
    let h = half_width * params.time_scale();
    (0..points).map(|i| c - h + 2.0 * h * i as f64 / (points - 1) as f64).collect()
}

/// Default grid, `2001` points on `τ_c ± 5σ/v0`.
pub fn default_tau_grid(params: &PacketParams, x_arrival: f64) -> Vec<f64> {
    tau_grid(params, x_arrival, DEFAULT_GRID_HALF_WIDTH, DEFAULT_GRID_POINTS)
}

/// Distribution on the default grid, widened once (doubling the half-width)
/// when the grid mass is below `0.999`.
pub fn distribution_auto(params: &PacketParams, spec: &PhaseSpec, x_arrival: f64) -> Result<ToaDistribution> {
    let grid = default_tau_grid(params, x_arrival);
    let d = distribution(params, spec, x_arrival, &grid)?;
    if d.grid_mass >= 0.999 {
        return Ok(d);
    }
    let wide = tau_grid(params, x_arrival, 2.0 * DEFAULT_GRID_HALF_WIDTH, DEFAULT_GRID_POINTS);
    distribution(params, spec, x_arrival, &wide)
}

/// Full width at half maximum around the global maximum, using the outermost
/// half-maximum crossings located by linear interpolation.
pub fn fwhm(dist: &ToaDistribution) -> Result<f64> {
    fwhm_of(&dist.tau_grid, &dist.pi_total)
}

pub fn fwhm_of(t: &[f64], f: &[f64]) -> Result<f64> {
    if t.len() != f.len() || t.len() < 3 {
        return Err(QtoaError::invalid("fwhm needs matching grids of at least three points"));
    }
    let (imax, &fmax) = f.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    if imax == 0 || imax == f.len() - 1 {
        return Err(QtoaError::GridTooNarrow("maximum lies on the grid boundary; widen the grid".into()));
    }
    if fmax.is_nan() || fmax <= 0.0 {
        return Err(QtoaError::DegenerateInput("density has no positive maximum".into()));
    }
    let half = 0.5 * fmax;
    let lo = f.iter().position(|&v| v >= half).expect("maximum qualifies");
    let hi = f.iter().rposition(|&v| v >= half).expect("maximum qualifies");
    if lo == 0 || hi == f.len() - 1 {
        return Err(QtoaError::GridTooNarrow("no half-maximum crossing inside the grid; widen the grid".into()));
    }
    let cross = |i: usize, j: usize| t[i] + (half - f[i]) * (t[j] - t[i]) / (f[j] - f[i]);
    Ok(cross(hi, hi + 1) - cross(lo - 1, lo))
}

/// `FWHM / τ̄` with `τ̄` the exact expected arrival time at `x_arrival`.
pub fn fluctuation_ratio(params: &PacketParams, spec: &PhaseSpec, x_arrival: f64, tau_grid: &[f64]) -> Result<f64> {
    let d = distribution(params, spec, x_arrival, tau_grid)?;
    fluctuation_ratio_of(params, spec, &d)
}

/// [`fluctuation_ratio`] for an already computed distribution.
pub fn fluctuation_ratio_of(params: &PacketParams, spec: &PhaseSpec, d: &ToaDistribution) -> Result<f64> {
    let width = fwhm(d)?;
    let shifted = PacketParams { q0: params.q0 - d.arrival_point, ..*params };
    let tau = exact_toa(&shifted, spec)?.value;
    if tau.is_nan() || tau <= 0.0 {
        return Err(QtoaError::DegenerateInput(format!("expected arrival time {tau} is not positive")));
    }
    Ok(width / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::momentum_amplitude;

    #[test]
    fn triangle_fwhm() {
        let t: Vec<f64> = (0..=2000).map(|i| -1.5 + 3.0 * i as f64 / 2000.0).collect();
        let f: Vec<f64> = t.iter().map(|&x| (1.0 - x.abs()).max(0.0)).collect();
        assert!((fwhm_of(&t, &f).unwrap() - 1.0).abs() < 1.5e-3);
    }

    #[test]
    fn gaussian_fwhm() {
        let s = 0.7;
        let t: Vec<f64> = (0..=400).map(|i| -5.0 + 10.0 * i as f64 / 400.0).collect();
        let f: Vec<f64> = t.iter().map(|&x| (-0.5 * x * x / (s * s)).exp()).collect();
        let w = fwhm_of(&t, &f).unwrap();
        assert!((w / (2.0 * (2.0 * 2f64.ln()).sqrt() * s) - 1.0).abs() < 0.01);
    }

    #[test]
    fn boundary_maximum_is_rejected() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(fwhm_of(&t, &[4.0, 3.0, 2.0, 1.0]), Err(QtoaError::GridTooNarrow(_))));
        assert!(matches!(fwhm_of(&t, &[1.0, 3.0, 2.0, 1.9]), Err(QtoaError::GridTooNarrow(_))));
    }

    #[test]
    fn grid_validation() {
        let p = PacketParams::natural(1.0, -4.0, 50.0).unwrap();
        assert!(distribution(&p, &PhaseSpec::none(), 0.0, &[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn table_matches_direct_transform() {
        let p = PacketParams::natural(1.0, -3.0, 50.0).unwrap();
        let s = PhaseSpec::odd_even_01(0.1, 0.05);
        let table = MomentumTable::new(&p, &s, 0.0, 1.0).unwrap();
        assert!((table.mass() - 1.0).abs() < 1e-6);
        // Reconstruct one amplitude from the table's weights and compare.
        let i = table.momenta.len() / 3;
        let pp = table.momenta[i];
        let direct = momentum_amplitude(&p, &s, pp).unwrap();
        let w = table.weighted_amplitude[i] / direct;
        assert!(w.im.abs() < 1e-9 * w.re.abs());
    }

    #[test]
    fn overlaps_decay_far_from_arrival() {
        let p = PacketParams::natural(6.0, -10.0, 200.0).unwrap();
        let s = PhaseSpec::none();
        let near = overlap(&p, &s, 0.0, 0.5, EigenKind::NonNodal).unwrap().norm();
        let far = overlap(&p, &s, 0.0, 5.0, EigenKind::NonNodal).unwrap().norm();
        assert!(far < 1e-2 * near, "{far} vs {near}");
        let nod = overlap(&p, &s, 0.0, 0.5, EigenKind::Nodal).unwrap().norm();
        assert!((nod - near).abs() < 1e-6 * near);
    }
}
