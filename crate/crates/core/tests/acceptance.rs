//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use qclock_core::corrections::{
    asymptotic_toa, chi_explicit, chi_generic_for_order, exact_toa, q_np_k, q_wp_k, Truncation,
};
use qclock_core::imprint::{exact_toa_after_imprint, imprint, ImprintConfig, SampledWavefunction};
use qclock_core::numerics::{integrate, Domain};
use qclock_core::phase_solver::{second_order_residual_spec, solve_a_from_b, SolveMethod};
use qclock_core::toa_distribution::{distribution_auto, fwhm};
use qclock_core::wavepacket::density;
use qclock_core::{PacketParams, Parity, PhaseBasisTerm, PhaseSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

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

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, (a, b, u)) in [("sweep case", sweep_case()), ("packet case", packet_case())] {
        let r = second_order_residual_spec(&PhaseSpec::odd_even_01(a, b), u).unwrap();
        let c = solve_a_from_b(b, 1.0, u, SolveMethod::ClosedForm).unwrap();
        let n = solve_a_from_b(b, 1.0, u, SolveMethod::Numeric).unwrap();
        let roots = [c.a_plus, c.a_minus, n.a_plus, n.a_minus];
        let worst = roots.iter().map(|x| x.map_or(f64::INFINITY, |x| (x - a).abs())).fold(0.0, f64::max);
        let ok = r.abs() < 1e-12 && c.discriminant.abs() < 1e-12 && worst < 1e-12;
        pass &= ok;
        detail.push(format!(
            "{name}: residual {:.1e}, discriminant {:.1e}, |a - reference| {:.1e}",
            r, c.discriminant, worst
        ));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn quadrature_conditions(spec: &PhaseSpec) -> (f64, f64) {
    let c1 = integrate(|x: f64| spec.derivative(x, 1) * density(x), Domain::Whole, 1e-13).unwrap().value;
    let c2 = integrate(|x: f64| x * spec.derivative(x, 1) * density(x), Domain::Whole, 1e-13).unwrap().value;
    (c1, c2)
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for parity in [Parity::Odd, Parity::Even] {
        for l in 0..=4 {
            for m in 0..=4 {
                if l == m {
                    continue;
                }
                let spec = PhaseSpec::single(parity, l, m, 1.0).unwrap();
                let (c1, c2) = quadrature_conditions(&spec);
                worst = worst.max(c1.abs()).max(c2.abs());
                count += 1;
            }
        }
    }
    let spec = packet_spec();
    let (c1, c2) = quadrature_conditions(&spec);
    worst = worst.max(c1.abs()).max(c2.abs());
    let u = packet_case().2;
    let second = integrate(
        |x: f64| {
            let t = spec.derivative(x, 1);
            (x + u) * (t * t + 0.25 * x * x) * density(x)
        },
        Domain::Whole,
        1e-13,
    )
    .unwrap()
    .value;
    Outcome {
        pass: worst < 1e-10 && second.abs() < 1e-10,
        detail: format!(
            "{count} basis terms + packet-case phase: max linear residual {worst:.1e}; packet-case second-order residual {:.1e}",
            second
        ),
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, spec) in [("none", PhaseSpec::none()), ("phased", packet_spec())] {
        for k in [10.0, 30.0, 120.0] {
            let p = PacketParams::from_dimensionless(k, packet_case().2).unwrap();
            let e = exact_toa(&p, &spec).unwrap();
            let a = asymptotic_toa(&p, &spec, Truncation::default()).unwrap();
            let diff = (e.value - a.value).abs();
            let ok = diff <= 3.0 * a.error_estimate;
            pass &= ok;
            detail.push(format!("{name} K={k}: |diff| {diff:.2e} vs 3*est {:.2e}", 3.0 * a.error_estimate));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    detail.push(format!("{secs:.1}s"));
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_4() -> Outcome {
    let u = packet_case().2;
    let mut pass = true;
    let mut detail = Vec::new();
    for k in [30.0, 60.0, 120.0] {
        let p = PacketParams::from_dimensionless(k, u).unwrap();
        let dev = exact_toa(&p, &PhaseSpec::none()).unwrap().ratio - 1.0;
        let lead = 1.0 / (4.0 * k * k);
        let rel = (dev / lead - 1.0).abs();
        let ok = rel < 5.0 / (k * k);
        pass &= ok;
        detail.push(format!("none K={k}: rel dev {rel:.2e} < {:.2e} {}", 5.0 / (k * k), if ok { "ok" } else { "NO" }));
    }
    let k = 120.0;
    let p = PacketParams::from_dimensionless(k, u).unwrap();
    let dev = (exact_toa(&p, &packet_spec()).unwrap().ratio - 1.0).abs();
    let bound = 10.0 / k.powi(3);
    let ok = dev < bound;
    pass &= ok;
    detail.push(format!(
        "phased K=120: |ratio-1| {dev:.3e} vs 10/K^3 {bound:.3e} ({:.1}/K^3) {}",
        dev * k.powi(3),
        if ok { "ok" } else { "NO" }
    ));
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_5() -> Outcome {
    let (a, b, u) = sweep_case();
    let spec = PhaseSpec::odd_even_01(a, b);
    // Log sweep over a decade containing the anchors kσ = 121 and 484.
    let mut ks: Vec<f64> = (0..=20).map(|i| 100.0 * 10f64.powf(i as f64 / 20.0)).collect();
    ks.extend([121.0, 484.0]);
    ks.sort_by(f64::total_cmp);
    let rows: Vec<(f64, f64, f64)> = ks.iter().map(|&k| (k, q_np_k(k), q_wp_k(k, u, &spec).unwrap())).collect();
    let np_pos = rows.iter().all(|r| r.1 > 0.0);
    let wp_neg = rows.iter().all(|r| r.2 < 0.0);
    let smaller = rows.iter().all(|r| r.2.abs() < r.1.abs());
    let mono = rows.windows(2).all(|w| w[1].1.abs() < w[0].1.abs() && w[1].2.abs() < w[0].2.abs());
    let yn = |b: bool| if b { "yes" } else { "NO" };
    Outcome {
        pass: np_pos && wp_neg && smaller && mono,
        detail: format!(
            "kσ in [100, 1000]: q_np>0 {}, q_wp<0 {} (q_wp(121) = {:+.3e}), |q_wp|<|q_np| {}, monotone {}",
            yn(np_pos),
            yn(wp_neg),
            q_wp_k(121.0, u, &spec).unwrap(),
            yn(smaller),
            yn(mono)
        ),
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    let mut widths = Vec::new();
    for e0 in [100.0, 200.0, 400.0] {
        let p = PacketParams::natural(6.0, -10.0, e0).unwrap();
        let mut pair = Vec::new();
        for (name, spec) in [("np", PhaseSpec::none()), ("wp", packet_spec())] {
            let d = distribution_auto(&p, &spec, 0.0).unwrap();
            let w = fwhm(&d).unwrap();
            pair.push(w);
            if e0 == 200.0 {
                let ex = exact_toa(&p, &spec).unwrap().value;
                let rel = (d.first_moment() - ex).abs() / ex;
                let ok = (d.grid_mass - 1.0).abs() <= 1e-3 && rel < 1e-3;
                pass &= ok;
                detail.push(format!("{name}: mass {:.5}, moment rel {rel:.1e}, fwhm {w:.4}", d.grid_mass));
            }
        }
        widths.push(pair);
    }
    let narrower = widths[1][1] < widths[1][0];
    let decreasing = (0..2).all(|j| widths[0][j] > widths[1][j] && widths[1][j] > widths[2][j]);
    pass &= narrower && decreasing;
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    detail.push(format!(
        "wp narrower {}; fwhm wp over E0 100/200/400: {:.4}/{:.4}/{:.4}; {secs:.1}s",
        narrower, widths[0][1], widths[1][1], widths[2][1]
    ));
    Outcome { pass, detail: detail.join("; ") }
}

fn random_phase(rng: &mut ChaCha8Rng) -> PhaseSpec {
    let n = rng.gen_range(1..=3);
    let terms = (0..n)
        .map(|_| {
            let parity = if rng.gen_bool(0.5) { Parity::Odd } else { Parity::Even };
            let l = rng.gen_range(0..=3usize);
            let m = (l + rng.gen_range(1..=3usize)) % 4;
            (rng.gen_range(-0.5..0.5), PhaseBasisTerm::new(parity, l, m).unwrap())
        })
        .collect();
    PhaseSpec::new(terms).unwrap()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = [0.0f64; 7];
    for _ in 0..20 {
        let spec = random_phase(&mut rng);
        let u = rng.gen_range(-2.0..-0.2);
        let p = PacketParams::from_dimensionless(50.0, u).unwrap();
        for (order, w) in worst.iter_mut().enumerate().skip(1) {
            let e = chi_explicit(order, &p, &spec).unwrap();
            let g = chi_generic_for_order(order, &p, &spec).unwrap();
            *w = w.max((e - g).abs() / (1.0 + g.abs()));
        }
    }
    let pass = (1..=5).all(|o| worst[o] < 1e-8);
    let list: Vec<String> = (1..=6).map(|o| format!("o{o} {:.1e}", worst[o])).collect();
    Outcome {
        pass,
        detail: format!(
            "max |explicit - generic|/(1+|generic|) over 20 phases: {} (order 6 reported only)",
            list.join(", ")
        ),
    }
}

fn criterion_8() -> Outcome {
    let x: Vec<f64> = (0..=1600).map(|i| -10.0 + 20.0 * i as f64 / 1600.0).collect();
    let np = SampledWavefunction::from_spec(&PhaseSpec::none(), x.clone());
    let wp = SampledWavefunction::from_spec(&packet_spec(), x);
    let gamma = 0.8;
    let cfg = ImprintConfig::for_phase(packet_spec(), gamma, 1.0).unwrap();
    let out = imprint(&np, &cfg, 1.0).unwrap();
    let pointwise = out.psi.iter().zip(&wp.psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let norm = (out.norm() - np.norm()).abs();
    let p = PacketParams::natural(6.0, -10.0, 200.0).unwrap();
    let direct = exact_toa(&p, &packet_spec()).unwrap();
    let kicked = exact_toa_after_imprint(&p, &cfg).unwrap();
    let diff = (direct.value - kicked.value).abs();
    let tol = direct.error_estimate + kicked.error_estimate + 1e-12 * direct.value.abs();
    Outcome {
        pass: pointwise < 1e-12 && norm < 1e-12 && diff <= tol,
        detail: format!("pointwise {pointwise:.1e}, norm change {norm:.1e}, exact toa diff {diff:.1e} (tol {tol:.1e})"),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("second-order identity and reference roots", criterion_1),
        ("condition residuals", criterion_2),
        ("exact vs super-asymptotic", criterion_3),
        ("leading-correction law", criterion_4),
        ("Q-factor sweep", criterion_5),
        ("distribution, FWHM and moments", criterion_6),
        ("explicit vs generic corrections", criterion_7),
        ("imprinting", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} [{}] {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
