//! Subcommand implementations.

use std::path::Path;

use qclock_core::corrections::{asymptotic_toa, exact_toa, q_np_k, q_wp_k};
use qclock_core::imprint::{exact_toa_after_imprint, imprint};
use qclock_core::phase_solver::{solve_a_from_b, solve_phase_general};
use qclock_core::toa_distribution::{distribution, distribution_auto, fluctuation_ratio_of, fwhm, tau_grid};
use qclock_core::wavepacket::{HBAR_SI, NEUTRON_MASS_SI};
use qclock_core::{
    ImprintConfig, PacketParams, Parity, PhaseBasisTerm, PhaseSpec, SampledWavefunction, SolveMethod, Truncation, Units,
};

use crate::config::{sweep_points, PhaseConfig, SweepScale, SweepVariable};
use crate::error::CliError;
use crate::output::{json_text, Cell, Output, Record, Table};
use crate::{
    Context, DistArgs, ImprintArgs, MethodArg, PacketArgs, PhaseArgs, QfactorArgs, SolvePhaseArgs, ToaArgs, ToaMethod,
};

const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
const DEFAULT_IMPRINT_TOL: f64 = 1e-12;
const DEFAULT_SWEEP_POINTS: usize = 50;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn default_mass_hbar(units: Units) -> (f64, f64) {
    match units {
        Units::Si => (NEUTRON_MASS_SI, HBAR_SI),
        Units::Natural => (1.0, 1.0),
    }
}

pub fn packet(ctx: &Context, a: &PacketArgs) -> Result<PacketParams, CliError> {
    if let Some(k) = a.k_sigma {
        let u = a.q0_over_sigma.ok_or_else(|| invalid("--k-sigma needs --q0-over-sigma"))?;
        return Ok(PacketParams::from_dimensionless(k, u)?);
    }
    let c = &ctx.config;
    let sigma = a.sigma.or(c.sigma).ok_or_else(|| invalid("missing --sigma (or --k-sigma)"))?;
    let q0 =
        a.q0.or_else(|| a.q0_over_sigma.map(|u| u * sigma))
            .or(c.q0)
            .ok_or_else(|| invalid("missing --q0 or --q0-over-sigma"))?;
    let e0 = a.e0.or(c.e0).ok_or_else(|| invalid("missing --e0"))?;
    let (mu, hbar) = default_mass_hbar(ctx.units);
    Ok(PacketParams::new(sigma, q0, e0, a.mu.or(c.mu).unwrap_or(mu), a.hbar.or(c.hbar).unwrap_or(hbar), ctx.units)?)
}

fn parse_parity(s: &str) -> Result<Parity, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "odd" => Ok(Parity::Odd),
        "even" => Ok(Parity::Even),
        _ => Err(invalid(format!("parity must be odd or even, got {s:?}"))),
    }
}

fn parse_index(s: &str, what: &str) -> Result<usize, CliError> {
    s.parse().map_err(|_| invalid(format!("bad {what} {s:?}")))
}

/// `PARITY:L:M`.
pub fn parse_basis(s: &str) -> Result<PhaseBasisTerm, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [p, l, m] = parts.as_slice() else {
        return Err(invalid(format!("basis term must be PARITY:L:M, got {s:?}")));
    };
    Ok(PhaseBasisTerm::new(parse_parity(p)?, parse_index(l, "index l")?, parse_index(m, "index m")?)?)
}

/// `PARITY:L:M:COEF`.
pub fn parse_term(s: &str) -> Result<(f64, PhaseBasisTerm), CliError> {
    let (head, coef) =
        s.rsplit_once(':').ok_or_else(|| invalid(format!("phase term must be PARITY:L:M:COEF, got {s:?}")))?;
    let c: f64 = coef.parse().map_err(|_| invalid(format!("bad coefficient {coef:?}")))?;
    Ok((c, parse_basis(head)?))
}

fn parse_pins(pins: &[String], len: usize) -> Result<Vec<Option<f64>>, CliError> {
    let mut out = vec![None; len];
    for p in pins {
        let (i, v) = p.split_once('=').ok_or_else(|| invalid(format!("pin must be INDEX=VALUE, got {p:?}")))?;
        let i = parse_index(i, "pin index")?;
        if i >= len {
            return Err(invalid(format!("pin index {i} outside a basis of {len} terms")));
        }
        out[i] = Some(v.parse().map_err(|_| invalid(format!("bad pin value {v:?}")))?);
    }
    Ok(out)
}

fn default_basis(order: usize) -> Vec<PhaseBasisTerm> {
    let t = |parity, m| PhaseBasisTerm { parity, l: 0, m };
    [t(Parity::Odd, 1), t(Parity::Even, 1), t(Parity::Even, 2)].into_iter().take(order).collect()
}

fn basis_label(t: &PhaseBasisTerm) -> String {
    let p = match t.parity {
        Parity::Odd => "odd",
        Parity::Even => "even",
    };
    format!("{p}:{}:{}", t.l, t.m)
}

fn solved_phase(
    order: usize,
    basis: Vec<PhaseBasisTerm>,
    pinned: &[Option<f64>],
    u: f64,
) -> Result<PhaseSpec, CliError> {
    let sol = solve_phase_general(order, &basis, u, pinned)?;
    if !sol.feasible {
        return Err(CliError::Numerical(format!(
            "phase solver did not converge for order {order} (residuals {:?})",
            sol.residuals
        )));
    }
    Ok(sol.spec)
}

pub fn phase(ctx: &Context, a: &PhaseArgs, u: f64) -> Result<PhaseSpec, CliError> {
    if !a.terms.is_empty() {
        let terms = a.terms.iter().map(|s| parse_term(s)).collect::<Result<Vec<_>, _>>()?;
        return Ok(PhaseSpec::new(terms)?);
    }
    if a.a.is_some() || a.b.is_some() {
        return Ok(PhaseSpec::odd_even_01(a.a.unwrap_or(0.0), a.b.unwrap_or(0.0)));
    }
    if let Some(order) = a.cancel_order {
        let basis = if a.basis.is_empty() {
            default_basis(order)
        } else {
            a.basis.iter().map(|s| parse_basis(s)).collect::<Result<Vec<_>, _>>()?
        };
        let pinned = parse_pins(&a.pin, basis.len())?;
        return solved_phase(order, basis, &pinned, u);
    }
    match &ctx.config.phase {
        None | Some(PhaseConfig::None) => Ok(PhaseSpec::none()),
        Some(PhaseConfig::Terms { terms }) => Ok(PhaseSpec::new(terms.clone())?),
        Some(PhaseConfig::Solve { order, basis, pinned }) => solved_phase(*order, basis.clone(), pinned, u),
    }
}

fn check_tol(tol: f64) -> Result<f64, CliError> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(invalid(format!("--tol must be positive, got {tol}")))
    }
}

pub fn solve_phase(ctx: &Context, a: &SolvePhaseArgs) -> Result<Output, CliError> {
    let tol = check_tol(ctx.tol.unwrap_or(DEFAULT_RESIDUAL_TOL))?;
    let c = &ctx.config;
    let sigma = a.sigma.or(c.sigma).unwrap_or(1.0);
    let q0 =
        a.q0.or_else(|| a.q0_over_sigma.map(|u| u * sigma))
            .or(c.q0)
            .ok_or_else(|| invalid("missing --q0-over-sigma (or --q0)"))?;
    if let Some(order) = a.order {
        if a.b.is_some() {
            return Err(invalid("--b applies to the two-term problem; pin coefficients with --pin INDEX=VALUE"));
        }
        let basis = if a.basis.is_empty() {
            default_basis(order)
        } else {
            a.basis.iter().map(|s| parse_basis(s)).collect::<Result<Vec<_>, _>>()?
        };
        let pinned = parse_pins(&a.pin, basis.len())?;
        let u = q0 / sigma;
        let sol = solve_phase_general(order, &basis, u, &pinned)?;
        let mut r = Record::new().with("order", order).with("q0_over_sigma", u).with("feasible", sol.feasible);
        r.push("iterations", sol.iterations);
        for (i, (t, c)) in basis.iter().zip(&sol.coefficients).enumerate() {
            r.push(&format!("basis_{i}"), basis_label(t));
            r.push(&format!("coef_{i}"), *c);
        }
        for (i, v) in sol.residuals.iter().enumerate() {
            r.push(&format!("residual_{i}"), *v);
        }
        let out = Output::Record(r);
        if !sol.feasible {
            return Err(CliError::CheckFailed(format!("phase solver did not converge for order {order}"), out));
        }
        return Ok(out);
    }
    if !a.basis.is_empty() || !a.pin.is_empty() {
        return Err(invalid("--basis and --pin need --order"));
    }
    let b = a.b.ok_or_else(|| invalid("missing --b"))?;
    let method = match a.method {
        MethodArg::ClosedForm => SolveMethod::ClosedForm,
        MethodArg::Numeric => SolveMethod::Numeric,
    };
    let rep = solve_a_from_b(b, sigma, q0, method)?;
    let r = Record::new()
        .with("b", rep.b)
        .with("q0_over_sigma", rep.q0_over_sigma)
        .with("a", rep.preferred_a())
        .with("a_plus", rep.a_plus)
        .with("a_minus", rep.a_minus)
        .with("discriminant", rep.discriminant)
        .with("feasible", rep.feasible)
        .with("residual_cond1", rep.residual_cond1)
        .with("residual_cond2", rep.residual_cond2)
        .with("residual_cond3", rep.residual_cond3)
        .with(
            "method",
            match rep.method {
                SolveMethod::ClosedForm => "closed_form",
                SolveMethod::Numeric => "numeric",
            },
        );
    let out = Output::Record(r);
    if !rep.feasible {
        return Err(CliError::Infeasible(
            format!("no real a solves the second-order condition for b = {b}, q0/σ = {}", rep.q0_over_sigma),
            out,
        ));
    }
    let worst = rep.residual_cond1.max(rep.residual_cond2).max(rep.residual_cond3);
    if worst > tol {
        return Err(CliError::CheckFailed(format!("root residual {worst:e} exceeds --tol {tol:e}"), out));
    }
    Ok(out)
}

pub fn qfactor(ctx: &Context, a: &QfactorArgs) -> Result<Output, CliError> {
    let c = &ctx.config;
    let sweep = c.sweep.as_ref();
    let variable = a.sweep.variable.or(sweep.and_then(|s| s.variable)).unwrap_or(SweepVariable::KSigma);
    let min = a.sweep.min.or(sweep.and_then(|s| s.min)).ok_or_else(|| invalid("missing --min"))?;
    let max = a.sweep.max.or(sweep.and_then(|s| s.max)).ok_or_else(|| invalid("missing --max"))?;
    let points = a.sweep.points.or(sweep.and_then(|s| s.points)).unwrap_or(DEFAULT_SWEEP_POINTS);
    let scale = a.sweep.scale.or(sweep.and_then(|s| s.scale)).unwrap_or(SweepScale::Log);
    let values = sweep_points(min, max, points, scale)?;

    let sigma = a.sigma.or(c.sigma);
    let u = match (a.q0_over_sigma, a.q0.or(c.q0), sigma) {
        (Some(u), _, _) => u,
        (None, Some(q0), Some(s)) => q0 / s,
        _ => return Err(invalid("missing --q0-over-sigma (or --q0 with --sigma)")),
    };
    let spec = phase(ctx, &a.phase, u)?;
    let (mu, hbar) = default_mass_hbar(ctx.units);
    let (mu, hbar) = (a.mu.or(c.mu).unwrap_or(mu), a.hbar.or(c.hbar).unwrap_or(hbar));

    let mut table = Table::new(&["k_sigma", "q_np", "q_wp"]);
    for v in values {
        let k_sigma = match variable {
            SweepVariable::KSigma => {
                if v.is_nan() || v <= 0.0 {
                    return Err(invalid(format!("kσ must be positive, got {v}")));
                }
                v
            }
            SweepVariable::E0 => {
                let s = sigma.ok_or_else(|| invalid("energy sweeps need --sigma"))?;
                PacketParams::new(s, u * s, v, mu, hbar, ctx.units)?.k_sigma()
            }
        };
        let q_wp = if spec.is_none() { Cell::Empty } else { Cell::Num(q_wp_k(k_sigma, u, &spec)?) };
        table.push(vec![k_sigma.into(), q_np_k(k_sigma).into(), q_wp]);
    }
    Ok(Output::Table(table))
}

pub fn toa(ctx: &Context, a: &ToaArgs) -> Result<Output, CliError> {
    let params = packet(ctx, &a.packet)?;
    let spec = phase(ctx, &a.phase, params.u())?;
    let truncation = match a.fixed_order {
        Some(order) => Truncation::Fixed(order),
        None => Truncation::Auto { max_order: a.max_order },
    };
    let tau_class = params.tau_class();
    let method = match a.method {
        ToaMethod::Exact => "exact",
        ToaMethod::Asymptotic => "asymptotic",
        ToaMethod::Both => "both",
    };
    let mut r = Record::new().with("method", method);
    match a.method {
        ToaMethod::Exact => {
            let e = exact_toa(&params, &spec)?;
            r.push("value", e.value);
            r.push("tau_class", tau_class);
            r.push("ratio", e.ratio);
            r.push("error_estimate", e.error_estimate);
            r.push("imaginary_residue", e.imaginary_residue);
        }
        ToaMethod::Asymptotic => {
            let s = asymptotic_toa(&params, &spec, truncation)?;
            r.push("value", s.value);
            r.push("tau_class", tau_class);
            r.push("ratio", s.ratio);
            r.push("truncation_order", s.series.truncation_index);
            r.push("error_estimate", s.error_estimate);
        }
        ToaMethod::Both => {
            let s = asymptotic_toa(&params, &spec, truncation)?;
            let e = exact_toa(&params, &spec)?;
            let discrepancy = (e.value - s.value).abs();
            r.push("value", e.value);
            r.push("tau_class", tau_class);
            r.push("ratio", e.ratio);
            r.push("truncation_order", s.series.truncation_index);
            r.push("error_estimate", s.error_estimate);
            r.push("asymptotic_value", s.value);
            r.push("asymptotic_ratio", s.ratio);
            r.push("exact_error_estimate", e.error_estimate);
            r.push("discrepancy", discrepancy);
            r.push("within_three_estimates", discrepancy <= 3.0 * s.error_estimate);
        }
    }
    r.push("k_sigma", params.k_sigma());
    r.push("q0_over_sigma", params.u());
    Ok(Output::Record(r))
}

pub fn dist(ctx: &Context, a: &DistArgs, out: Option<&Path>) -> Result<Output, CliError> {
    let params = packet(ctx, &a.packet)?;
    let spec = phase(ctx, &a.phase, params.u())?;
    let sidecar = match (&a.fwhm_out, a.fwhm) {
        (Some(p), _) => Some(p.clone()),
        (None, true) => Some(
            out.map(|o| o.with_extension("fwhm.json")).ok_or_else(|| invalid("--fwhm needs --out or --fwhm-out"))?,
        ),
        (None, false) => None,
    };
    let d = if a.grid_points.is_some() || a.half_width.is_some() {
        let hw = a.half_width.unwrap_or(qclock_core::toa_distribution::DEFAULT_GRID_HALF_WIDTH);
        let n = a.grid_points.unwrap_or(qclock_core::toa_distribution::DEFAULT_GRID_POINTS);
        if !(hw.is_finite() && hw > 0.0) {
            return Err(invalid(format!("--half-width must be positive, got {hw}")));
        }
        distribution(&params, &spec, a.arrival, &tau_grid(&params, a.arrival, hw, n))?
    } else {
        distribution_auto(&params, &spec, a.arrival)?
    };
    if let Some(path) = sidecar {
        let r = Record::new()
            .with("fwhm", fwhm(&d)?)
            .with("first_moment", d.first_moment())
            .with("grid_mass", d.grid_mass)
            .with("fluctuation_ratio", fluctuation_ratio_of(&params, &spec, &d)?)
            .with("nodal_split", d.nodal_split());
        std::fs::write(&path, json_text(&r.to_json_value()))
            .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    if (d.grid_mass - 1.0).abs() > 1e-3 {
        eprintln!("warning: grid mass {:.6} differs from 1; widen the grid with --half-width", d.grid_mass);
    }
    let mut table = Table::new(&["tau", "pi_non", "pi_nod", "pi_total"]);
    for i in 0..d.tau_grid.len() {
        table.push(vec![d.tau_grid[i].into(), d.pi_non[i].into(), d.pi_nod[i].into(), d.pi_total[i].into()]);
    }
    Ok(Output::Table(table))
}

pub fn imprint_demo(ctx: &Context, a: &ImprintArgs) -> Result<Output, CliError> {
    let tol = check_tol(ctx.tol.unwrap_or(DEFAULT_IMPRINT_TOL))?;
    let params = packet(ctx, &a.packet)?;
    let spec = phase(ctx, &a.phase, params.u())?;
    if spec.is_none() {
        return Err(invalid("imprint-demo needs a phase (--phase, --a/--b or --cancel-order)"));
    }
    if a.samples < 2 || !(a.extent.is_finite() && a.extent > 0.0) {
        return Err(invalid("need at least two samples and a positive extent"));
    }
    let n = a.samples - 1;
    let x: Vec<f64> = (0..=n).map(|i| -a.extent + 2.0 * a.extent * i as f64 / n as f64).collect();
    let bare = SampledWavefunction::from_spec(&PhaseSpec::none(), x.clone());
    let phased = SampledWavefunction::from_spec(&spec, x);
    let config = ImprintConfig::for_phase(spec.clone(), a.gamma, params.hbar)?;
    let kicked = imprint(&bare, &config, params.hbar)?;
    let pointwise = kicked.psi.iter().zip(&phased.psi).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    let (before, after) = (bare.norm(), kicked.norm());
    let direct = exact_toa(&params, &spec)?;
    let via_kick = exact_toa_after_imprint(&params, &config)?;
    let diff = (direct.value - via_kick.value).abs();
    let toa_tol = direct.error_estimate + via_kick.error_estimate + 1e-12 * direct.value.abs();
    let pass = pointwise <= tol && (after - before).abs() <= tol && diff <= toa_tol;
    let r = Record::new()
        .with("gamma", a.gamma)
        .with("samples", a.samples)
        .with("max_pointwise_error", pointwise)
        .with("norm_before", before)
        .with("norm_after", after)
        .with("norm_change", after - before)
        .with("toa_phased", direct.value)
        .with("toa_imprinted", via_kick.value)
        .with("toa_difference", diff)
        .with("toa_tolerance", toa_tol)
        .with("pass", pass);
    let out = Output::Record(r);
    if !pass {
        return Err(CliError::CheckFailed("imprinted packet differs from the phased packet".into(), out));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_terms() {
        let (c, t) = parse_term("odd:0:1:-0.25").unwrap();
        assert_eq!(c, -0.25);
        assert_eq!(t, PhaseBasisTerm { parity: Parity::Odd, l: 0, m: 1 });
        assert!(parse_term("odd:1:1:0.5").is_err());
        assert!(parse_term("up:0:1:0.5").is_err());
        assert!(parse_basis("even:0").is_err());
    }

    #[test]
    fn parses_pins() {
        assert_eq!(parse_pins(&["1=0.5".into()], 2).unwrap(), vec![None, Some(0.5)]);
        assert!(parse_pins(&["2=0.5".into()], 2).is_err());
    }
}
