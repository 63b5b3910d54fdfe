//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! Reference values are recomputed here from the closed-form expressions with an
//! independent implementation of h(x), and also checked against values frozen
//! from a 40-digit evaluation.

use std::f64::consts::E;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cvmdi::attack::{min_rate_brute, AttackGrid};
use cvmdi::gaussian::{bisector_lambda, chi_equivalent, derive_noise, entropy_h, g_max, symplectic_spectrum};
use cvmdi::keyrate::{key_rate, key_rate_closed_asym, key_rate_closed_sym, key_rate_min_chi, key_rate_min_thermal};
use cvmdi::optics::check_self_alignment;
use cvmdi::proof::run_suite;
use cvmdi::sweep::{evaluate_cell, relay_scan, Knowledge};
use cvmdi::{approx_eq_rel, AncillaState, LinkPair, ProtocolParams};

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(20_240_611);
    r.set_stream(stream);
    r
}

mod oracle {
    //! Straight transcriptions of the rate expressions, sharing no code with the
    //! library.

    use super::E;

    pub fn h(x: f64) -> f64 {
        let p = (x + 1.0) / 2.0;
        let m = (x - 1.0) / 2.0;
        let mterm = if m == 0.0 { 0.0 } else { m * m.log2() };
        p * p.log2() - mterm
    }

    /// Symmetric rate minimized at fixed χ.
    pub fn min_chi_sym(xi: f64, mu: f64, chi: f64) -> f64 {
        h((chi - 2.0) / 2.0) + (16.0 * mu.powf(xi - 1.0) / (E * E * chi.powf(xi) * (chi - 4.0))).log2()
    }

    /// Asymmetric rate minimized at fixed χ.
    pub fn min_chi_asym(xi: f64, mu: f64, ta: f64, tb: f64, chi: f64) -> f64 {
        let (alpha, beta, dt) = (ta * tb, ta + tb, (ta - tb).abs());
        (2.0 * beta * mu.powf(xi - 1.0) / (E * dt * chi.powf(xi))).log2() + h(ta * chi / beta - 1.0)
            - h((alpha * chi - beta * beta) / (dt * beta))
    }

    /// Symmetric rate minimized at known thermal noise, as a function of λ.
    pub fn min_thermal_sym(xi: f64, mu: f64, tau: f64, lambda: f64) -> f64 {
        let chi = 2.0 * (2.0 * tau + lambda) / tau;
        h((tau + lambda) / tau) + (8.0 * tau * mu.powf(xi - 1.0) / (E * E * chi.powf(xi) * lambda)).log2()
    }

    pub fn chi_equivalent(ta: f64, tb: f64, eps: f64) -> f64 {
        2.0 * (ta + tb) / (ta * tb) + eps
    }
}

/// Closed-form consistency on random bisector attacks: the general rate, the
/// closed form at λ = λ′ and the fixed-χ minimum must coincide.
fn criterion_1() -> Verdict {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut accepted = 0;
    let mut redrawn = 0;
    while accepted < 1000 {
        let ta: f64 = r.random_range(0.3..0.999);
        let tb: f64 = if accepted % 5 == 0 {
            ta
        } else {
            r.random_range(0.3..0.999)
        };
        let (wa, wb): (f64, f64) = (r.random_range(1.0..10.0), r.random_range(1.0..10.0));
        let xi: f64 = r.random_range(0.9..=1.0);
        let g = g_max(wa, wb) * r.random_range(-1.0..1.0);
        let protocol = ProtocolParams::new(xi, 60.0, 0.01).unwrap();
        let link = LinkPair::new(ta, tb).unwrap();
        let ancilla = AncillaState::new(wa, wb, g, -g).unwrap();
        let noise = derive_noise(&link, &ancilla).unwrap();
        if !link.is_symmetric() && noise.lambda <= link.delta_tau() {
            // Outside the asymmetric formulas' domain (λ must exceed |Δτ|).
            redrawn += 1;
            continue;
        }
        accepted += 1;
        let general = key_rate(&protocol, &link, &ancilla);
        let closed = if link.is_symmetric() {
            key_rate_closed_sym(&protocol, ta, noise.lambda, noise.lambda_prime)
        } else {
            key_rate_closed_asym(&protocol, &link, noise.lambda, noise.lambda_prime)
        };
        let chi = link.beta() / link.alpha() * (link.beta() + noise.lambda);
        let minimized = key_rate_min_chi(&protocol, &link, chi);
        match (general, closed, minimized) {
            (Ok(a), Ok(b), Ok(c)) => {
                let scale = a.rate.abs().max(1.0);
                worst = worst
                    .max((a.rate - b.rate).abs() / scale)
                    .max((a.rate - c.rate).abs() / scale);
                if !(approx_eq_rel(a.rate, b.rate, 1e-9) && approx_eq_rel(a.rate, c.rate, 1e-9)) {
                    failures += 1;
                }
            }
            _ => failures += 1,
        }
    }
    verdict(
        failures == 0,
        format!("1000 bisector scenarios ({redrawn} redrawn for λ ≤ |Δτ|), worst relative disagreement {worst:.2e}, {failures} failures"),
    )
}

/// Grid argmin of the general rate sits on the bisector at |g| = g_max, and the
/// analytic minimum lower-bounds every grid sample.
fn criterion_2() -> Verdict {
    let mut r = rng(2);
    let grid = AttackGrid::default();
    let mut worst_bisector: f64 = 0.0;
    let mut worst_gmax: f64 = 0.0;
    let mut worst_gap = f64::INFINITY;
    let mut failures = Vec::new();
    for i in 0..100 {
        let ta: f64 = r.random_range(0.3..0.999);
        let tb: f64 = if i % 5 == 0 { ta } else { r.random_range(0.3..0.999) };
        let (wa, wb): (f64, f64) = (r.random_range(1.0..10.0), r.random_range(1.0..10.0));
        let xi: f64 = r.random_range(0.9..=1.0);
        let protocol = ProtocolParams::new(xi, 60.0, 0.01).unwrap();
        let link = LinkPair::new(ta, tb).unwrap();
        match min_rate_brute(&protocol, &link, wa, wb, grid) {
            Ok(rep) => {
                let b = rep.bisector_distance / rep.cell_size;
                let m = rep.g_max_distance / rep.cell_size;
                worst_bisector = worst_bisector.max(b);
                worst_gmax = worst_gmax.max(m);
                worst_gap = worst_gap.min(rep.gap);
                if b > 1.0 || m > 1.0 || rep.gap < -1e-4 {
                    failures.push(i);
                }
            }
            Err(e) => {
                failures.push(i);
                eprintln!("  scenario {i}: {e}");
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "100 scenarios on a {}x{} grid refined {}x{}: worst bisector distance {worst_bisector:.3} cells, worst ||g|-g_max| {worst_gmax:.3} cells, min(grid - analytic) {worst_gap:.2e}, failures {failures:?}",
            grid.n(),
            grid.n(),
            grid.refine().unwrap(),
            grid.refine().unwrap()
        ),
    )
}

/// Monotonicity and region lemmas on seeded scenarios.
fn criterion_3() -> Verdict {
    let report = run_suite(7, 100, 200);
    let mut ok = report.pass && report.classify_lattice.pass;
    let mut parts = Vec::new();
    for c in &report.checks {
        let margin_ok = c.worst_margin.is_none_or(|m| m > -1e-10);
        let endpoint_ok = c.worst_endpoint_deviation.is_none_or(|d| d <= 1e-9);
        ok &= c.pass && c.runs == 100 && c.passed == 100 && margin_ok && endpoint_ok;
        parts.push(format!(
            "{} {}/{} margin {} endpoint {}",
            c.name,
            c.passed,
            c.runs,
            c.worst_margin.map_or("-".into(), |m| format!("{m:.2e}")),
            c.worst_endpoint_deviation.map_or("-".into(), |d| format!("{d:.1e}")),
        ));
    }
    parts.push(format!(
        "lattice {}/{}",
        report.classify_lattice.agreed, report.classify_lattice.points
    ));
    verdict(ok, parts.join("; "))
}

/// Worked values against the oracle (and the oracle against frozen values).
fn criterion_4() -> Verdict {
    let reference = ProtocolParams::default();
    let (xi, mu, eps) = (reference.xi(), reference.mu(), reference.epsilon());
    let sym_chi = oracle::chi_equivalent(0.95, 0.95, eps);
    let asym_chi = oracle::chi_equivalent(0.98, 0.6, eps);
    let pure_loss = ProtocolParams::new(1.0, 60.0, 0.01).unwrap();

    let cases: [(&str, f64, f64, f64, f64); 4] = [
        (
            "symmetric fixed-chi (tau=0.95)",
            key_rate_min_chi(
                &reference,
                &LinkPair::symmetric(0.95).unwrap(),
                chi_equivalent(&LinkPair::symmetric(0.95).unwrap(), eps),
            )
            .unwrap()
            .rate,
            oracle::min_chi_sym(xi, mu, sym_chi),
            1.414_760_081_430_468_4,
            1.4147,
        ),
        (
            "asymmetric fixed-chi (0.98, 0.6)",
            key_rate_min_chi(
                &reference,
                &LinkPair::new(0.98, 0.6).unwrap(),
                chi_equivalent(&LinkPair::new(0.98, 0.6).unwrap(), eps),
            )
            .unwrap()
            .rate,
            oracle::min_chi_asym(xi, mu, 0.98, 0.6, asym_chi),
            0.379_392_191_958_814_2,
            0.3794,
        ),
        (
            "mirrored (0.6, 0.98)",
            key_rate_min_chi(
                &reference,
                &LinkPair::new(0.6, 0.98).unwrap(),
                chi_equivalent(&LinkPair::new(0.6, 0.98).unwrap(), eps),
            )
            .unwrap()
            .rate,
            oracle::min_chi_asym(xi, mu, 0.6, 0.98, asym_chi),
            -1.088_030_056_295_368_1,
            -1.0881,
        ),
        (
            "pure-loss thermal (xi=1, tau=0.9, omega=1)",
            key_rate_min_thermal(&pure_loss, &LinkPair::symmetric(0.9).unwrap(), 1.0, 1.0)
                .unwrap()
                .rate,
            oracle::min_thermal_sym(1.0, 61.0, 0.9, 2.0 * (1.0 - 0.9)),
            0.653_638_041_318_536_9,
            0.6536,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, lib, oracle, frozen, quoted) in cases {
        let oracle_ok = approx_eq_rel(oracle, frozen, 1e-12);
        let lib_ok = (lib - oracle).abs() <= 1e-3 * oracle.abs();
        let quoted_ok = (quoted - oracle).abs() <= 1e-3 * oracle.abs();
        ok &= oracle_ok && lib_ok && quoted_ok;
        parts.push(format!("{name}: {lib:.7} (oracle {oracle:.7})"));
    }
    verdict(ok, parts.join("; "))
}

/// The rate at the Alice end of each contour beats the symmetric midpoint, and
/// is the contour maximum.
fn criterion_5() -> Verdict {
    let protocol = ProtocolParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for total in [0.4, 0.6, 0.8] {
        let scan = relay_scan(total, &protocol, 101).unwrap();
        let end = scan.records.last().unwrap();
        let mid_tau = f64::sqrt(total);
        let mid = evaluate_cell(&protocol, Knowledge::ChiFromEpsilon, mid_tau, mid_tau);
        let (end_rate, mid_rate) = (end.rate.unwrap_or(f64::NAN), mid.rate.unwrap_or(f64::NAN));
        let argmax_ok = scan.argmax == Some(scan.records.len() - 1);
        ok &= end_rate > mid_rate && argmax_ok;
        parts.push(format!(
            "c={total}: end {end_rate:.4} vs midpoint {mid_rate:.4}, argmax index {:?}/{}",
            scan.argmax,
            scan.records.len() - 1
        ));
    }
    verdict(ok, parts.join("; "))
}

/// The asymmetric closed form approaches the symmetric one as |Δτ| → 0.
fn criterion_6() -> Verdict {
    let protocol = ProtocolParams::default();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for tau in [0.7, 0.9, 0.95] {
        let sym = LinkPair::symmetric(tau).unwrap();
        let lambda = bisector_lambda(&sym, chi_equivalent(&sym, protocol.epsilon()));
        let reference = key_rate_closed_sym(&protocol, tau, lambda, lambda).unwrap().rate;
        for (ta, tb) in [(tau + 1e-4, tau - 1e-4), (tau - 1e-4, tau + 1e-4)] {
            let link = LinkPair::new(ta, tb).unwrap();
            let l = bisector_lambda(&link, chi_equivalent(&link, protocol.epsilon()));
            match key_rate_closed_asym(&protocol, &link, l, l) {
                Ok(rep) => {
                    let d = (rep.rate - reference).abs();
                    worst = worst.max(d);
                    ok &= d <= 1e-3;
                }
                Err(_) => ok = false,
            }
        }
    }
    verdict(ok, format!("max |asymmetric(tau±1e-4) - symmetric(tau)| = {worst:.2e}"))
}

fn criterion_7() -> Verdict {
    let rep = check_self_alignment(10_000, 2024).unwrap();
    verdict(
        rep.pass && rep.max_phase_error <= 1e-12 && rep.control.misaligned_fraction >= 0.99,
        format!(
            "max phase error {:.2e} rad over {} trials; broken control misaligned in {:.2}% of trials",
            rep.max_phase_error,
            rep.trials,
            100.0 * rep.control.misaligned_fraction
        ),
    )
}

fn criterion_8() -> Verdict {
    let h1 = entropy_h(1.0).unwrap();
    let h3 = entropy_h(3.0).unwrap();
    let pair = symplectic_spectrum(&AncillaState::thermal(1.0, 1.0).unwrap()).unwrap();
    let g11 = g_max(1.0, 1.0);
    let g22 = g_max(2.0, 2.0);
    let ok = h1 == 0.0
        && h3 == 2.0
        && pair.nu_minus == 1.0
        && pair.nu_plus == 1.0
        && g11 == 0.0
        && (g22 - 3f64.sqrt()).abs() <= 1e-10
        && (oracle::h(3.0) - 2.0).abs() < 1e-15;
    verdict(
        ok,
        format!(
            "h(1)={h1}, h(3)={h3}, spectrum(I)=({}, {}), g_max(1,1)={g11}, g_max(2,2)-sqrt3={:.1e}",
            pair.nu_minus,
            pair.nu_plus,
            g22 - 3f64.sqrt()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("closed-form consistency", criterion_1),
        ("minimization certificate", criterion_2),
        ("monotonicity suite", criterion_3),
        ("worked values", criterion_4),
        ("relay placement", criterion_5),
        ("symmetric-limit continuity", criterion_6),
        ("optics self-alignment", criterion_7),
        ("special-function anchors", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} ({name}): {status} [{:.1}s] {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
