//! Fast invariant suite behind `qclock verify`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use qclock_core::corrections::{asymptotic_toa, chi_explicit, chi_generic_for_order, exact_toa, q_np_k};
use qclock_core::imprint::{exact_toa_after_imprint, imprint};
use qclock_core::numerics::{integrate, Domain};
use qclock_core::phase_solver::{
    linear_condition_residuals, second_order_residual_closed, second_order_residual_spec, solve_a_from_b,
};
use qclock_core::toa_distribution::distribution_auto;
use qclock_core::wavepacket::wavefunction;
use qclock_core::{
    ImprintConfig, PacketParams, Parity, PhaseSpec, QtoaError, SampledWavefunction, SolveMethod, Truncation,
};

use crate::error::CliError;
use crate::output::Output;

type Check = qclock_core::Result<(bool, String)>;
type NamedCheck = (&'static str, fn() -> Check);

fn sweep_case() -> (f64, f64, f64) {
    let s = (19.0 * PI).sqrt();
    (5.0 / (4.0 * s), 9.0 / (16.0 * s), -0.9 * 3f64.sqrt())
}

fn packet_case() -> (f64, f64, f64) {
    (9.0 / (8.0 * (6.0 * PI).sqrt()), 5.0 / (16.0 * (2.0 * PI).sqrt()), -5.0 / 3.0)
}

fn packet_spec() -> PhaseSpec {
    let (a, b, _) = packet_case();
    PhaseSpec::odd_even_01(a, b)
}

fn second_order_forms() -> Check {
    let mut worst: f64 = 0.0;
    for a in [-0.5, 0.1, 0.7] {
        for b in [-0.3, 0.05, 0.4] {
            for u in [-2.0, -0.5, 1.3] {
                let closed = second_order_residual_closed(a, b, u);
                let moments = second_order_residual_spec(&PhaseSpec::odd_even_01(a, b), u)?;
                worst = worst.max((closed - moments).abs() / (1.0 + closed.abs()));
            }
        }
    }
    Ok((worst < 1e-10, format!("max relative difference {worst:.1e}")))
}

fn reference_roots() -> Check {
    let mut worst: f64 = 0.0;
    for (a, b, u) in [sweep_case(), packet_case()] {
        let r = second_order_residual_spec(&PhaseSpec::odd_even_01(a, b), u)?;
        worst = worst.max(r.abs());
        for method in [SolveMethod::ClosedForm, SolveMethod::Numeric] {
            let rep = solve_a_from_b(b, 1.0, u, method)?;
            worst = worst.max(rep.discriminant.abs());
            for root in [rep.a_plus, rep.a_minus] {
                worst = worst.max(root.map_or(f64::INFINITY, |x| (x - a).abs()));
            }
        }
    }
    Ok((worst < 1e-12, format!("max residual, discriminant or root error {worst:.1e}")))
}

fn closed_vs_numeric() -> Check {
    let mut worst: f64 = 0.0;
    for b in [0.06, 0.0728, 0.2, -0.15] {
        for u in [-1.5588, -1.2, 0.9] {
            let c = solve_a_from_b(b, 1.0, u, SolveMethod::ClosedForm)?;
            let n = solve_a_from_b(b, 1.0, u, SolveMethod::Numeric)?;
            if c.feasible != n.feasible {
                return Ok((false, format!("feasibility differs at b = {b}, u = {u}")));
            }
            for (x, y) in [(c.a_plus, n.a_plus), (c.a_minus, n.a_minus)] {
                if let (Some(x), Some(y)) = (x, y) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    Ok((worst < 1e-8, format!("max root difference {worst:.1e}")))
}

fn parity_conditions() -> Check {
    let mut worst: f64 = 0.0;
    for parity in [Parity::Odd, Parity::Even] {
        for l in 0..=4 {
            for m in (0..=4).filter(|&m| m != l) {
                let (c1, c2) = linear_condition_residuals(&PhaseSpec::single(parity, l, m, 1.0)?)?;
                worst = worst.max(c1.abs()).max(c2.abs());
            }
        }
    }
    Ok((worst < 1e-10, format!("40 basis terms, max residual {worst:.1e}")))
}

fn normalization() -> Check {
    let spec = packet_spec();
    let n = integrate(|x: f64| wavefunction(&spec, x).norm_sqr(), Domain::Whole, 1e-13)?.value;
    Ok(((n - 1.0).abs() < 1e-12, format!("|norm - 1| = {:.1e}", (n - 1.0).abs())))
}

fn low_orders() -> Check {
    let p = PacketParams::from_dimensionless(50.0, -1.2)?;
    let mut worst: f64 = 0.0;
    for spec in
        [packet_spec(), PhaseSpec::single(Parity::Odd, 1, 3, 0.3)?, PhaseSpec::single(Parity::Even, 2, 0, -0.2)?]
    {
        for order in 1..=2 {
            let e = chi_explicit(order, &p, &spec)?;
            let g = chi_generic_for_order(order, &p, &spec)?;
            worst = worst.max((e - g).abs() / (1.0 + g.abs()));
        }
    }
    Ok((worst < 1e-8, format!("orders 1-2, max relative difference {worst:.1e}")))
}

fn oracle() -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, spec) in [("none", PhaseSpec::none()), ("phased", packet_spec())] {
        let p = PacketParams::from_dimensionless(30.0, packet_case().2)?;
        let e = exact_toa(&p, &spec)?;
        let s = asymptotic_toa(&p, &spec, Truncation::default())?;
        let diff = (e.value - s.value).abs();
        ok &= diff <= 3.0 * s.error_estimate && e.imaginary_residue < 1e-10;
        detail.push(format!("{name}: |diff| {diff:.1e} vs estimate {:.1e}", s.error_estimate));
    }
    Ok((ok, detail.join(", ")))
}

fn leading_law() -> Check {
    let mut worst: f64 = 0.0;
    for k in [30.0, 60.0, 120.0] {
        let p = PacketParams::from_dimensionless(k, packet_case().2)?;
        let dev = exact_toa(&p, &PhaseSpec::none())?.ratio - 1.0;
        let rel = (dev * 4.0 * k * k - 1.0).abs();
        worst = worst.max(rel * k * k / 5.0);
        if (q_np_k(k) * 4.0 * k * k - 1.0).abs() > 1e-14 {
            return Ok((false, format!("q_np({k}) differs from 1/(4k²)")));
        }
    }
    Ok((worst < 1.0, format!("max deviation {worst:.2} of the 5/K² bound")))
}

fn imprinting() -> Check {
    let x: Vec<f64> = (0..=800).map(|i| -10.0 + 20.0 * i as f64 / 800.0).collect();
    let bare = SampledWavefunction::from_spec(&PhaseSpec::none(), x.clone());
    let phased = SampledWavefunction::from_spec(&packet_spec(), x);
    let cfg = ImprintConfig::for_phase(packet_spec(), 0.7, 1.0)?;
    let kicked = imprint(&bare, &cfg, 1.0)?;
    let pointwise = kicked.psi.iter().zip(&phased.psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let norm = (kicked.norm() - bare.norm()).abs();
    let p = PacketParams::natural(6.0, -10.0, 200.0)?;
    let direct = exact_toa(&p, &packet_spec())?;
    let via = exact_toa_after_imprint(&p, &cfg)?;
    let diff = (direct.value - via.value).abs();
    let ok =
        pointwise < 1e-12 && norm < 1e-12 && diff <= direct.error_estimate + via.error_estimate + 1e-12 * direct.value;
    Ok((ok, format!("pointwise {pointwise:.1e}, norm {norm:.1e}, toa {diff:.1e}")))
}

fn completeness() -> Check {
    let p = PacketParams::natural(6.0, -10.0, 200.0)?;
    let d = distribution_auto(&p, &PhaseSpec::none(), 0.0)?;
    let e = exact_toa(&p, &PhaseSpec::none())?.value;
    let rel = (d.first_moment() - e).abs() / e;
    Ok((
        (d.grid_mass - 1.0).abs() <= 1e-3 && rel < 1e-3,
        format!("mass {:.6}, first moment relative error {rel:.1e}", d.grid_mass),
    ))
}

pub fn run() -> Result<Output, CliError> {
    let checks: [NamedCheck; 11] = [
        ("second-order residual, closed form vs moments", second_order_forms),
        ("reference phases solve the second-order condition", reference_roots),
        ("closed-form vs numeric roots", closed_vs_numeric),
        ("parity terms satisfy the linear conditions", parity_conditions),
        ("phased packet is normalised", normalization),
        ("explicit corrections of orders 1-2", low_orders),
        ("exact vs truncated series", oracle),
        ("leading correction without phase", leading_law),
        ("imprinting", imprinting),
        ("distribution completeness and first moment", completeness),
        ("solver rejects q0 = 0 in closed form", degenerate_guard),
    ];
    let mut text = String::new();
    let mut failed = 0;
    for (name, check) in checks {
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!pass);
        let _ = writeln!(text, "[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    let _ = writeln!(text, "verify: {} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        return Err(CliError::CheckFailed(format!("{failed} checks failed"), Output::Text(text)));
    }
    Ok(Output::Text(text))
}

fn degenerate_guard() -> Check {
    let ok = matches!(solve_a_from_b(0.1, 1.0, 0.0, SolveMethod::ClosedForm), Err(QtoaError::DegenerateInput(_)));
    Ok((ok, "DegenerateInput".into()))
}
