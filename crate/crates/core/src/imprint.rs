//! Impulsive phase imprinting: a kick `-γΘ(q)δ(t)` multiplies the state by
//! `e^{iγΘ(q)/ℏ}`.

use num_complex::Complex64;

use crate::corrections::{exact_toa_envelope, ExactToa};
use crate::error::{QtoaError, Result};
use crate::wavepacket::{wavefunction, PacketParams, PhaseSpec};

/// Position profile `Θ` of the kick.
#[derive(Debug, Clone, PartialEq)]
pub enum ImprintProfile {
    /// `Θ(x) = scale · θ_spec(x)`.
    Hermite { spec: PhaseSpec, scale: f64 },
    /// `Θ` sampled on the wavefunction grid.
    Sampled(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprintConfig {
    pub gamma: f64,
    pub profile: ImprintProfile,
}

impl ImprintConfig {
    /// Kick whose imprinted phase `γΘ/ℏ` equals `spec`.
    pub fn for_phase(spec: PhaseSpec, gamma: f64, hbar: f64) -> Result<Self> {
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(QtoaError::invalid("gamma must be finite and nonzero to realise a phase"));
        }
        Ok(Self { gamma, profile: ImprintProfile::Hermite { spec, scale: hbar / gamma } })
    }

    fn theta(&self, i: usize, x: f64) -> f64 {
        match &self.profile {
            ImprintProfile::Hermite { spec, scale } => scale * spec.value(x),
            ImprintProfile::Sampled(v) => v[i],
        }
    }
}

/// Complex wavefunction on a position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWavefunction {
    pub x: Vec<f64>,
    pub psi: Vec<Complex64>,
}

impl SampledWavefunction {
    /// Samples `φ̃` on `x`.
    pub fn from_spec(spec: &PhaseSpec, x: Vec<f64>) -> Self {
        let psi = x.iter().map(|&t| wavefunction(spec, t)).collect();
        Self { x, psi }
    }

    /// Trapezoid estimate of `∫|ψ|²`.
    pub fn norm(&self) -> f64 {
        (1..self.x.len())
            .map(|i| 0.5 * (self.x[i] - self.x[i - 1]) * (self.psi[i].norm_sqr() + self.psi[i - 1].norm_sqr()))
            .sum()
    }
}

/// `ψ_out(x) = e^{iγΘ(x)/ℏ} ψ_in(x)` pointwise.
pub fn imprint(psi_in: &SampledWavefunction, config: &ImprintConfig, hbar: f64) -> Result<SampledWavefunction> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(QtoaError::invalid("hbar must be finite and positive"));
    }
    if psi_in.x.len() != psi_in.psi.len() {
        return Err(QtoaError::invalid("grid and samples differ in length"));
    }
    if let ImprintProfile::Sampled(v) = &config.profile {
        if v.len() != psi_in.x.len() {
            return Err(QtoaError::invalid("sampled profile does not match the wavefunction grid"));
        }
    }
    let psi = psi_in
        .x
        .iter()
        .zip(&psi_in.psi)
        .enumerate()
        .map(|(i, (&x, &p))| p * Complex64::from_polar(1.0, config.gamma * config.theta(i, x) / hbar))
        .collect();
    Ok(SampledWavefunction { x: psi_in.x.clone(), psi })
}

/// Exact expected arrival time of the unphased packet after a kick with a
/// Hermite profile, evaluated on the imprinted envelope itself.
pub fn exact_toa_after_imprint(params: &PacketParams, config: &ImprintConfig) -> Result<ExactToa> {
    let ImprintProfile::Hermite { spec, scale } = &config.profile else {
        return Err(QtoaError::invalid("continuous evaluation needs a Hermite profile"));
    };
    let factor = config.gamma * scale / params.hbar;
    let bare = PhaseSpec::none();
    let envelope = |x: f64| wavefunction(&bare, x) * Complex64::from_polar(1.0, factor * spec.value(x));
    let rate = |x: f64| if spec.is_none() { 0.0 } else { (factor * spec.derivative(x, 1)).abs() };
    let half_width = 12.0 + params.u().abs().max(spec.derivative_degree() as f64);
    exact_toa_envelope(params, envelope, rate, half_width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Vec<f64> {
        (0..=801).map(|i| -8.0 + 16.0 * i as f64 / 801.0).collect()
    }

    fn packet_case() -> PhaseSpec {
        PhaseSpec::odd_even_01(9.0 / (8.0 * (6.0 * PI).sqrt()), 5.0 / (16.0 * (2.0 * PI).sqrt()))
    }

    #[test]
    fn zero_coupling_is_identity() {
        let psi = SampledWavefunction::from_spec(&packet_case(), grid());
        let cfg = ImprintConfig { gamma: 0.0, profile: ImprintProfile::Sampled(vec![3.0; psi.x.len()]) };
        assert_eq!(imprint(&psi, &cfg, 1.0).unwrap(), psi);
    }

    #[test]
    fn reproduces_phased_packet() {
        let np = SampledWavefunction::from_spec(&PhaseSpec::none(), grid());
        let wp = SampledWavefunction::from_spec(&packet_case(), grid());
        let cfg = ImprintConfig::for_phase(packet_case(), 0.37, 1.0).unwrap();
        let out = imprint(&np, &cfg, 1.0).unwrap();
        for (a, b) in out.psi.iter().zip(&wp.psi) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((out.norm() - np.norm()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_profile_rejected() {
        let psi = SampledWavefunction::from_spec(&PhaseSpec::none(), grid());
        let cfg = ImprintConfig { gamma: 1.0, profile: ImprintProfile::Sampled(vec![0.0; 3]) };
        assert!(imprint(&psi, &cfg, 1.0).is_err());
    }
}
