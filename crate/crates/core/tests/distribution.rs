use std::f64::consts::PI;

use qclock_core::corrections::exact_toa;
use qclock_core::toa_distribution::{
    classical_arrival, distribution, distribution_auto, fluctuation_ratio, fwhm, tau_grid,
};
use qclock_core::{PacketParams, PhaseSpec, QtoaError};

fn packet_spec() -> PhaseSpec {
    PhaseSpec::odd_even_01(9.0 / (8.0 * (6.0 * PI).sqrt()), 5.0 / (16.0 * (2.0 * PI).sqrt()))
}

fn packet_params(e0: f64) -> PacketParams {
    PacketParams::natural(6.0, -10.0, e0).unwrap()
}

/// Grid on `τ_c ± 8 FWHM` with the width taken from the default grid.
fn eight_fwhm(params: &PacketParams, spec: &PhaseSpec) -> (f64, qclock_core::ToaDistribution) {
    let w = fwhm(&distribution_auto(params, spec, 0.0).unwrap()).unwrap();
    let half = 8.0 * w / params.time_scale();
    let d = distribution(params, spec, 0.0, &tau_grid(params, 0.0, half, 4001)).unwrap();
    (w, d)
}

#[test]
fn completeness_and_positivity() {
    for (params, spec) in [
        (packet_params(200.0), PhaseSpec::none()),
        (packet_params(200.0), packet_spec()),
        (PacketParams::from_dimensionless(30.0, -3.0).unwrap(), PhaseSpec::none()),
    ] {
        let (_, d) = eight_fwhm(&params, &spec);
        assert!((d.grid_mass - 1.0).abs() <= 1e-3, "mass {}", d.grid_mass);
        assert!(d.pi_total.iter().chain(&d.pi_non).chain(&d.pi_nod).all(|&v| v >= 0.0));
    }
}

#[test]
fn nodal_and_non_nodal_nearly_degenerate() {
    let p = packet_params(200.0);
    assert!((p.k_sigma() - 120.0).abs() < 1e-12);
    for spec in [PhaseSpec::none(), packet_spec()] {
        let d = distribution_auto(&p, &spec, 0.0).unwrap();
        assert!(d.nodal_split() < 1e-4, "split {}", d.nodal_split());
    }
}

#[test]
fn first_moment_matches_exact() {
    for spec in [PhaseSpec::none(), packet_spec()] {
        let p = packet_params(200.0);
        let d = distribution_auto(&p, &spec, 0.0).unwrap();
        let e = exact_toa(&p, &spec).unwrap().value;
        assert!((d.first_moment() - e).abs() / e < 1e-3);
    }
}

fn ratio_at(e0: f64, spec: &PhaseSpec) -> f64 {
    let p = packet_params(e0);
    fluctuation_ratio(&p, spec, 0.0, &tau_grid(&p, 0.0, 5.0, 2001)).unwrap()
}

#[test]
fn fluctuation_ratio_versus_energy() {
    let np = [ratio_at(200.0, &PhaseSpec::none()), ratio_at(400.0, &PhaseSpec::none())];
    assert!(np[0].is_finite() && np[1] < np[0], "{np:?}");
    // The phase narrows the distribution relative to the mean at both
    // energies; its effect fades as ħk grows, so this ratio rises towards
    // the unphased one.
    let wp = [ratio_at(200.0, &packet_spec()), ratio_at(400.0, &packet_spec())];
    assert!(wp[0] < np[0] && wp[1] < np[1], "{wp:?} vs {np:?}");
}

/// A free Gaussian arrives with relative spread from its width and from its
/// velocity spread: FWHM/τ ≈ 2√(2 ln 2) √(1/u² + 1/(4K²)). When the second
/// term dominates the ratio falls like 1/K.
#[test]
fn fluctuation_ratio_dispersion_law() {
    let u = -2000.0;
    let c = 2.0 * (2.0 * 2f64.ln()).sqrt();
    let mut scaled = Vec::new();
    for k in [10.0, 10.0 * 10f64.sqrt(), 100.0] {
        let p = PacketParams::from_dimensionless(k, u).unwrap();
        let predicted = c * (1.0 / (u * u) + 1.0 / (4.0 * k * k)).sqrt();
        // τ_c ± 8 predicted widths.
        let half = 8.0 * predicted * classical_arrival(&p, 0.0) / p.time_scale();
        let ratio = fluctuation_ratio(&p, &PhaseSpec::none(), 0.0, &tau_grid(&p, 0.0, half, 2001)).unwrap();
        assert!((ratio / predicted - 1.0).abs() < 2e-2, "K = {k}: {ratio} vs {predicted}");
        scaled.push(ratio * k);
    }
    for s in &scaled {
        assert!((s / scaled[0] - 1.0).abs() < 2e-2, "{scaled:?}");
    }
}

#[test]
fn narrow_grid_is_reported() {
    let p = packet_params(200.0);
    let e = fluctuation_ratio(&p, &PhaseSpec::none(), 0.0, &tau_grid(&p, 0.0, 0.2, 101)).unwrap_err();
    assert!(matches!(e, QtoaError::GridTooNarrow(_)));
}
