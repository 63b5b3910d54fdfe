//! Numerical certificates for the lemmas behind the minimized rate formulas.
//!
//! The minimization over Eve's correlations is a two-step argument: for fixed
//! noise the rate increases with the distance d′ from the bisector (so d′ = 0 is
//! optimal), and on the bisector the rate decreases with λ (so λ = λ_opt is
//! optimal). Each step is checked here by sampling the rate and the auxiliary
//! functions the argument relies on.
//!
//! Strict inequalities are tested with slack [`MARGIN_SLACK`]: the lemmas are
//! strict only in the interior, and boundary samples see rounding noise.

use std::f64::consts::{E, LOG2_E};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx_eq_rel;
use crate::attack::{log_offsets, rate_profile_y, ProfileMode};
use crate::error::{Error, Result};
use crate::gaussian::{chi_equivalent, entropy_h, g_max, log_ratio_g, LinkPair, ProtocolParams};
use crate::keyrate::{key_rate_min_chi, lambda_opt, min_thermal_at_lambda};

/// Slack on every strict inequality.
pub const MARGIN_SLACK: f64 = 1e-10;
/// Relative tolerance for profile endpoints against the minimized closed forms.
pub const ENDPOINT_TOL: f64 = 1e-9;
/// Relative tolerance between the sampled rate and its ν-form. The two are
/// algebraically identical; near the upper end of the fixed-χ domain both lose
/// digits to cancellation.
pub const FORM_TOL: f64 = 1e-7;
pub const DEFAULT_SAMPLES: usize = 200;
/// y samples used to observe the ν₁/ν₂ relation.
pub const CLASSIFY_SAMPLES: usize = 400;

/// One of the auxiliary functions whose sign the monotonicity argument needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    /// "F", "L" or "A".
    pub name: &'static str,
    /// y at which the function was evaluated.
    pub y: Vec<f64>,
    pub values: Vec<f64>,
    /// Smallest value; `None` if the function applies nowhere on the sample.
    pub worst: Option<f64>,
    /// For F: min over y of F(y) − F(0).
    pub floor_margin: Option<f64>,
    pub pass: bool,
}

/// Rate sampled along the monotonicity variable y.
///
/// The ν traces depend on the knowledge model. Thermal, symmetric:
/// ν₁ = √((τ+δ)²−y)/τ, ν₂ = μ^(1−ξ)·(2√((2τ+δ)²−y)/τ)^ξ, ν₃ = √(δ²−y)/τ, so that
/// R = h(ν₁) − log₂ν₂ − log₂ν₃ + log₂(8/e²). Thermal, asymmetric: ν₁ = √((τ_A+δ)²−y)/τ_B
/// and ν₂ = √(δ²−y)/|Δτ|. Fixed χ: ν₁ = √(b₁ − a₁y), ν₂ = √(b₂ − a₂y).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneProbe {
    pub y_grid: Vec<f64>,
    pub rate_values: Vec<f64>,
    pub finite_diffs: Vec<f64>,
    pub nu1: Vec<f64>,
    pub nu2: Vec<f64>,
    pub nu3: Vec<f64>,
    pub bound: Option<BoundCheck>,
    /// R at d′ = 0 and the minimized closed form it should equal.
    pub endpoint_rate: f64,
    pub endpoint_reference: f64,
    pub endpoint_ok: bool,
    /// Largest relative difference between the sampled rate and its ν-form.
    pub form_deviation: f64,
    /// Samples at which the rate is undefined.
    pub skipped: usize,
    pub degenerate: bool,
    /// Smallest finite difference; `None` for degenerate profiles.
    pub worst_margin: Option<f64>,
    pub verdict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NuRelation {
    /// ν₁ > ν₂ everywhere on the domain.
    Greater,
    /// A region with ν₁ < ν₂ exists.
    Less,
    /// ν₁ ≥ ν₂ with equality reached (threshold case).
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionVerdict {
    pub predicted_relation: NuRelation,
    pub observed_relation: NuRelation,
    /// χ threshold of the case table; `None` when τ_A ≥ 2τ_B.
    pub chi_threshold_used: Option<f64>,
    /// min over the sampled y of ν₁ − ν₂.
    pub min_difference: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PPrimeProbe {
    pub y_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub worst_margin: f64,
    pub degenerate: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaProbe {
    pub lambdas: Vec<f64>,
    pub rates: Vec<f64>,
    /// The entropy part H of the split R = H + L.
    pub h_part: Vec<f64>,
    pub finite_diffs: Vec<f64>,
    /// −max finite difference: positive iff R decreases.
    pub worst_margin: f64,
    /// min second difference of H; only meaningful on asymmetric links, where H
    /// is claimed convex.
    pub h_second_diff_min: Option<f64>,
    pub pass: bool,
}

fn monotone_verdict(diffs: &[f64]) -> Option<f64> {
    diffs.iter().copied().reduce(f64::min)
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Checks that R(y) increases with y = u²d′² for fixed ω_A, ω_B and bisector
/// coordinate l, and on symmetric links that F(y) = log₂e/ν₃ − g(ν₁)/2 stays
/// positive and above F(0).
pub fn verify_monotone_thermal(
    protocol: &ProtocolParams,
    link: &LinkPair,
    omega_a: f64,
    omega_b: f64,
    l: f64,
    samples: usize,
) -> Result<MonotoneProbe> {
    let profile = rate_profile_y(protocol, link, ProfileMode::Thermal { omega_a, omega_b, l }, samples)?;
    let delta = profile.delta.expect("thermal profiles carry delta");
    let reference = min_thermal_at_lambda(protocol, link, delta)?.rate;
    let (xi, mu) = (protocol.xi(), protocol.mu());
    let symmetric = link.is_symmetric();
    let (ta, tb, dt) = (link.tau_a(), link.tau_b(), link.delta_tau());
    let (alpha, beta) = (link.alpha(), link.beta());

    let mut probe = empty_probe(profile.degenerate, reference);
    let mut f_check = BoundCheck {
        name: "F",
        y: Vec::new(),
        values: Vec::new(),
        worst: None,
        floor_margin: None,
        pass: true,
    };
    for point in &profile.points {
        let Some(rate) = point.rate else {
            probe.skipped += 1;
            continue;
        };
        let y = point.y;
        let form = if symmetric {
            let tau = ta;
            let nu1 = ((tau + delta).powi(2) - y).sqrt() / tau;
            let nu2 = mu.powf(1.0 - xi) * (2.0 * ((2.0 * tau + delta).powi(2) - y).sqrt() / tau).powf(xi);
            let nu3 = (delta * delta - y).max(0.0).sqrt() / tau;
            probe.nu1.push(nu1);
            probe.nu2.push(nu2);
            probe.nu3.push(nu3);
            if nu3 > 0.0 {
                f_check.y.push(y);
                f_check.values.push(LOG2_E / nu3 - 0.5 * log_ratio_g(nu1)?);
            }
            entropy_h(nu1)? - nu2.log2() - nu3.log2() + 3.0 - 2.0 * LOG2_E
        } else {
            let nu1 = ((ta + delta).powi(2) - y).sqrt() / tb;
            let nu2 = (delta * delta - y).max(0.0).sqrt() / dt;
            probe.nu1.push(nu1);
            probe.nu2.push(nu2);
            let chi = beta / alpha * ((beta + delta).powi(2) - y).sqrt();
            xi * (mu / chi).log2() - entropy_h(nu2)? - (E * dt * mu / (2.0 * beta)).log2() + entropy_h(nu1)?
        };
        probe.form_deviation = probe.form_deviation.max(rel_dev(rate, form));
        probe.y_grid.push(y);
        probe.rate_values.push(rate);
    }
    if symmetric {
        if let Some(&f0) = f_check.values.first() {
            let worst = f_check.values.iter().copied().fold(f64::INFINITY, f64::min);
            let floor = f_check.values.iter().map(|f| f - f0).fold(f64::INFINITY, f64::min);
            f_check.worst = Some(worst);
            f_check.floor_margin = Some(floor);
            f_check.pass = worst > -MARGIN_SLACK && floor > -MARGIN_SLACK;
        }
        probe.bound = Some(f_check);
    }
    finish(probe, &profile.points[0].rate)
}

/// Checks that R(y) increases for fixed χ over the part of [y_min, y_max] where
/// the rate is defined, together with the sign of L(y) = a₂log₂e/ν₂ − a₁g(ν₁)/2
/// (symmetric) or of A(y) = (a₂ν₁² − a₁ν₂²) − (a₂ν₁ − a₁ν₂) wherever ν₁ < ν₂
/// (asymmetric).
pub fn verify_monotone_chi(
    protocol: &ProtocolParams,
    link: &LinkPair,
    chi: f64,
    samples: usize,
) -> Result<MonotoneProbe> {
    let profile = rate_profile_y(protocol, link, ProfileMode::Chi { chi }, samples)?;
    let reference = key_rate_min_chi(protocol, link, chi)?.rate;
    let (xi, mu) = (protocol.xi(), protocol.mu());
    let coeffs = NuCoefficients::new(link, chi);
    let symmetric = link.is_symmetric();
    let mut probe = empty_probe(profile.degenerate, reference);
    let mut bound = BoundCheck {
        name: if symmetric { "L" } else { "A" },
        y: Vec::new(),
        values: Vec::new(),
        worst: None,
        floor_margin: None,
        pass: true,
    };
    let const_term = if symmetric {
        3.0 + (xi - 1.0) * mu.log2() - 2.0 * LOG2_E - xi * chi.log2()
    } else {
        1.0 + link.beta().log2() + (xi - 1.0) * mu.log2() - LOG2_E - link.delta_tau().log2() - xi * chi.log2()
    };
    for point in &profile.points {
        let Some(rate) = point.rate else {
            probe.skipped += 1;
            continue;
        };
        let y = point.y;
        let (nu1, nu2) = coeffs.nus(y);
        probe.nu1.push(nu1);
        probe.nu2.push(nu2);
        let form = if symmetric {
            if nu1 > 1.0 && nu2 > 0.0 {
                bound.y.push(y);
                bound
                    .values
                    .push(coeffs.a2 * LOG2_E / nu2 - 0.5 * coeffs.a1 * log_ratio_g(nu1)?);
            }
            const_term - nu2.log2() + entropy_h(nu1)?
        } else {
            if nu1 < nu2 {
                bound.y.push(y);
                bound.values.push(coeffs.bound_a(nu1, nu2));
            }
            const_term + entropy_h(nu1)? - entropy_h(nu2)?
        };
        probe.form_deviation = probe.form_deviation.max(rel_dev(rate, form));
        probe.y_grid.push(y);
        probe.rate_values.push(rate);
    }
    if !bound.values.is_empty() {
        let worst = bound.values.iter().copied().fold(f64::INFINITY, f64::min);
        bound.worst = Some(worst);
        bound.pass = worst > -MARGIN_SLACK;
    }
    probe.bound = Some(bound);
    finish(probe, &profile.points[0].rate)
}

fn empty_probe(degenerate: bool, reference: f64) -> MonotoneProbe {
    MonotoneProbe {
        y_grid: Vec::new(),
        rate_values: Vec::new(),
        finite_diffs: Vec::new(),
        nu1: Vec::new(),
        nu2: Vec::new(),
        nu3: Vec::new(),
        bound: None,
        endpoint_rate: f64::NAN,
        endpoint_reference: reference,
        endpoint_ok: false,
        form_deviation: 0.0,
        skipped: 0,
        degenerate,
        worst_margin: None,
        verdict: false,
    }
}

fn finish(mut probe: MonotoneProbe, first: &Option<f64>) -> Result<MonotoneProbe> {
    if probe.rate_values.is_empty() {
        return Err(Error::EmptyDomain("no admissible sample on the profile"));
    }
    if let Some(r) = *first {
        probe.endpoint_rate = r;
        probe.endpoint_ok = approx_eq_rel(r, probe.endpoint_reference, ENDPOINT_TOL);
    }
    let bound_ok = probe.bound.as_ref().is_none_or(|b| b.pass);
    let form_ok = probe.form_deviation <= FORM_TOL;
    if probe.degenerate {
        let r0 = probe.rate_values[0];
        let constant = probe.rate_values.iter().all(|&r| r == r0);
        probe.verdict = constant && probe.endpoint_ok && form_ok;
        return Ok(probe);
    }
    probe.finite_diffs = probe.rate_values.windows(2).map(|w| w[1] - w[0]).collect();
    probe.worst_margin = monotone_verdict(&probe.finite_diffs);
    let monotone = probe.worst_margin.is_none_or(|m| m > -MARGIN_SLACK);
    probe.verdict = monotone && bound_ok && probe.endpoint_ok && form_ok;
    Ok(probe)
}

/// ν₁² = b₁ − a₁y and ν₂² = b₂ − a₂y on the fixed-χ curve.
///
/// Asymmetric: b₁ = 1 + τ_A²χ²/β², a₁ = 2/τ_B, b₂ = (β² + α²χ²/β²)/Δτ², a₂ = 2β/Δτ².
/// Symmetric: b₁ = χ²/4 + 1, a₁ = 2/τ, b₂ = χ²/4 + 4, a₂ = 4/τ.
#[derive(Debug, Clone, Copy)]
struct NuCoefficients {
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
}

impl NuCoefficients {
    fn new(link: &LinkPair, chi: f64) -> Self {
        let (ta, tb, alpha, beta) = (link.tau_a(), link.tau_b(), link.alpha(), link.beta());
        if link.is_symmetric() {
            let q = chi * chi / 4.0;
            return Self {
                a1: 2.0 / ta,
                b1: q + 1.0,
                a2: 4.0 / ta,
                b2: q + 4.0,
            };
        }
        let d2 = link.delta_tau().powi(2);
        let c = alpha * chi / beta;
        Self {
            a1: 2.0 / tb,
            b1: 1.0 + (ta * chi / beta).powi(2),
            a2: 2.0 * beta / d2,
            b2: (beta * beta + c * c) / d2,
        }
    }

    fn nus(&self, y: f64) -> (f64, f64) {
        (
            (self.b1 - self.a1 * y).max(0.0).sqrt(),
            (self.b2 - self.a2 * y).max(0.0).sqrt(),
        )
    }

    fn bound_a(&self, nu1: f64, nu2: f64) -> f64 {
        (self.a2 * nu1 * nu1 - self.a1 * nu2 * nu2) - (self.a2 * nu1 - self.a1 * nu2)
    }

    fn p_prime(&self, nu1: f64, nu2: f64) -> f64 {
        (self.a2 * nu1 - self.a1 * nu2) / (4.0 * nu1 * nu2)
    }
}

fn require_asymmetric_chi(link: &LinkPair, chi: f64) -> Result<()> {
    if link.is_symmetric() {
        return Err(Error::SymmetricDegenerate {
            delta_tau: link.delta_tau(),
        });
    }
    let floor = link.chi_floor();
    if !(chi >= floor) {
        return Err(Error::ChiDomain {
            chi,
            bound: floor,
            requirement: ">=",
        });
    }
    Ok(())
}

/// Predicts from the case table whether ν₁ < ν₂ somewhere on [y_min, y_max] and
/// compares with direct evaluation.
///
/// τ_A ≥ 2τ_B gives ν₁ > ν₂ throughout. Otherwise a ν₁ < ν₂ region exists iff
/// χ ≥ β(3τ_B − τ_A + |τ_A − τ_B|)/(τ_A(2τ_B − τ_A)), which reduces to
/// 2τ_Bβ/(τ_A(2τ_B − τ_A)) for τ_A > τ_B and 2β/τ_A for τ_A < τ_B.
pub fn classify_nu_regions(link: &LinkPair, chi: f64) -> Result<RegionVerdict> {
    require_asymmetric_chi(link, chi)?;
    let (ta, tb, beta) = (link.tau_a(), link.tau_b(), link.beta());
    let (predicted, threshold) = if ta >= 2.0 * tb {
        (NuRelation::Greater, None)
    } else {
        let thr = beta * (3.0 * tb - ta + (ta - tb).abs()) / (ta * (2.0 * tb - ta));
        let rel = if (chi - thr).abs() <= MARGIN_SLACK * thr {
            NuRelation::Equal
        } else if chi > thr {
            NuRelation::Less
        } else {
            NuRelation::Greater
        };
        (rel, Some(thr))
    };
    let coeffs = NuCoefficients::new(link, chi);
    let c = link.alpha() * chi / beta;
    let (y_min, y_max) = (c, (c * c + beta * beta) / (2.0 * beta));
    let mut min_diff = f64::INFINITY;
    let mut scale = 1.0f64;
    for k in 0..CLASSIFY_SAMPLES {
        let y = y_min + (y_max - y_min) * k as f64 / (CLASSIFY_SAMPLES - 1) as f64;
        let (nu1, nu2) = coeffs.nus(y);
        if nu1 - nu2 < min_diff {
            min_diff = nu1 - nu2;
            scale = nu1.max(nu2).max(1.0);
        }
    }
    let observed = if min_diff.abs() <= MARGIN_SLACK * scale {
        NuRelation::Equal
    } else if min_diff < 0.0 {
        NuRelation::Less
    } else {
        NuRelation::Greater
    };
    Ok(RegionVerdict {
        predicted_relation: predicted,
        observed_relation: observed,
        chi_threshold_used: threshold,
        min_difference: min_diff,
        agree: predicted == observed,
    })
}

/// Evaluates p′(y) = (a₂ν₁ − a₁ν₂)/(4ν₁ν₂) on [y_min, y_max).
///
/// When u = 0 the variable y cannot move; p′ is then evaluated at y_min only and
/// the probe passes trivially.
pub fn verify_p_prime_positive(link: &LinkPair, chi: f64, samples: usize) -> Result<PPrimeProbe> {
    require_asymmetric_chi(link, chi)?;
    let coeffs = NuCoefficients::new(link, chi);
    let beta = link.beta();
    let c = link.alpha() * chi / beta;
    let (y_min, y_max) = (c, (c * c + beta * beta) / (2.0 * beta));
    let degenerate = link.u() == 0.0;
    let offsets = if degenerate {
        vec![0.0]
    } else {
        log_offsets(samples.max(2))
    };
    let mut y_grid = Vec::with_capacity(offsets.len());
    let mut values = Vec::with_capacity(offsets.len());
    for t in offsets {
        // Stay off y_max, where ν₂ = 0 and p′ has a pole.
        let y = y_min + (y_max - y_min) * t * (1.0 - 1e-9);
        let (nu1, nu2) = coeffs.nus(y);
        y_grid.push(y);
        values.push(coeffs.p_prime(nu1, nu2));
    }
    let worst_margin = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PPrimeProbe {
        y_grid,
        values,
        worst_margin,
        degenerate,
        pass: degenerate || worst_margin > -MARGIN_SLACK,
    })
}

/// Checks that the bisector rate R(λ) decreases on (|Δτ| + 1e−9, λ_max] and, on
/// asymmetric links, that H(λ) = h((τ_A+λ)/τ_B) − h(λ/|Δτ|) is convex.
///
/// On symmetric links H = h((τ+λ)/τ) is concave, so only the decrease is
/// asserted there.
pub fn verify_lambda_minimization(
    protocol: &ProtocolParams,
    link: &LinkPair,
    lambda_max: f64,
    samples: usize,
) -> Result<LambdaProbe> {
    let floor = if link.is_symmetric() { 0.0 } else { link.delta_tau() };
    let lo = floor + 1e-9;
    if !(lambda_max > lo) {
        return Err(Error::LambdaDomain {
            lambda: lambda_max,
            delta_tau: link.delta_tau(),
        });
    }
    let samples = samples.max(3);
    let (ta, tb) = (link.tau_a(), link.tau_b());
    let mut lambdas = Vec::with_capacity(samples);
    let mut rates = Vec::with_capacity(samples);
    let mut h_part = Vec::with_capacity(samples);
    for k in 1..=samples {
        let lambda = lo + (lambda_max - lo) * k as f64 / samples as f64;
        let rate = min_thermal_at_lambda(protocol, link, lambda)?.rate;
        let h = if link.is_symmetric() {
            entropy_h((ta + lambda) / ta)?
        } else {
            entropy_h((ta + lambda) / tb)? - entropy_h(lambda / floor)?
        };
        lambdas.push(lambda);
        rates.push(rate);
        h_part.push(h);
    }
    let finite_diffs: Vec<f64> = rates.windows(2).map(|w| w[1] - w[0]).collect();
    let worst_margin = -finite_diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h_second_diff_min = (!link.is_symmetric()).then(|| {
        h_part
            .windows(3)
            .map(|w| w[2] - 2.0 * w[1] + w[0])
            .fold(f64::INFINITY, f64::min)
    });
    let pass = worst_margin > -MARGIN_SLACK && h_second_diff_min.is_none_or(|m| m > -MARGIN_SLACK);
    Ok(LambdaProbe {
        lambdas,
        rates,
        h_part,
        finite_diffs,
        worst_margin,
        h_second_diff_min,
        pass,
    })
}

/// Aggregate of one verify_* operation over all scenarios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub runs: usize,
    pub passed: usize,
    /// Smallest margin over all runs (finite differences, p′ values, ...).
    pub worst_margin: Option<f64>,
    /// Largest relative endpoint deviation from the minimized closed form.
    pub worst_endpoint_deviation: Option<f64>,
    /// Scenario indices that failed, with the reason.
    pub failures: Vec<(usize, String)>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSummary {
    pub points: usize,
    pub skipped_symmetric: usize,
    pub agreed: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub scenarios: usize,
    pub samples: usize,
    pub checks: Vec<CheckSummary>,
    pub classify_lattice: LatticeSummary,
    pub pass: bool,
}

/// Outcome of a single scenario inside a check.
struct Run {
    pass: bool,
    margin: Option<f64>,
    endpoint_dev: Option<f64>,
    reason: String,
}

impl Run {
    fn from_result<T>(r: Result<T>, f: impl FnOnce(T) -> Run) -> Run {
        match r {
            Ok(v) => f(v),
            Err(e) => Run {
                pass: false,
                margin: None,
                endpoint_dev: None,
                reason: e.to_string(),
            },
        }
    }

    fn from_probe(p: MonotoneProbe) -> Run {
        let reason = if p.verdict {
            String::new()
        } else {
            format!(
                "margin {:?}, endpoint {} vs {}, form deviation {:e}, bound {:?}",
                p.worst_margin,
                p.endpoint_rate,
                p.endpoint_reference,
                p.form_deviation,
                p.bound.as_ref().map(|b| (b.worst, b.floor_margin))
            )
        };
        Run {
            pass: p.verdict,
            margin: p.worst_margin,
            endpoint_dev: Some(rel_dev(p.endpoint_rate, p.endpoint_reference)),
            reason,
        }
    }
}

fn summarize(name: &'static str, runs: Vec<Run>) -> CheckSummary {
    let min_opt = |a: Option<f64>, b: Option<f64>, pick: fn(f64, f64) -> f64| match (a, b) {
        (Some(x), Some(y)) => Some(pick(x, y)),
        (x, y) => x.or(y),
    };
    let mut summary = CheckSummary {
        name,
        runs: runs.len(),
        passed: 0,
        worst_margin: None,
        worst_endpoint_deviation: None,
        failures: Vec::new(),
        pass: true,
    };
    for (i, run) in runs.into_iter().enumerate() {
        summary.worst_margin = min_opt(summary.worst_margin, run.margin, f64::min);
        summary.worst_endpoint_deviation = min_opt(summary.worst_endpoint_deviation, run.endpoint_dev, f64::max);
        if run.pass {
            summary.passed += 1;
        } else {
            summary.failures.push((i, run.reason));
        }
    }
    summary.pass = summary.passed == summary.runs;
    summary
}

/// Random thermal-knowledge scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalScenario {
    pub protocol: ProtocolParams,
    pub link: LinkPair,
    pub omega_a: f64,
    pub omega_b: f64,
    pub l: f64,
}

/// Random fixed-χ scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiScenario {
    pub protocol: ProtocolParams,
    pub link: LinkPair,
    pub chi: f64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw_link(rng: &mut ChaCha8Rng, index: usize, lo: f64) -> LinkPair {
    let ta: f64 = rng.random_range(lo..0.999);
    let tb: f64 = rng.random_range(lo..0.999);
    let tb = if index.is_multiple_of(5) { ta } else { tb };
    LinkPair::new(ta, tb).expect("drawn inside (0, 1)")
}

fn draw_protocol(index: usize) -> ProtocolParams {
    let xi = if index.is_multiple_of(2) { 1.0 } else { 0.97 };
    ProtocolParams::new(xi, 60.0, 0.01).expect("valid constants")
}

/// ω ∈ [1, 10]², τ ∈ [0.3, 0.999) (every fifth link symmetric), ξ ∈ {1, 0.97} and
/// l ∈ [−|g|_max, |g|_max], folded to l ≤ 0 when the bisector rate would be undefined.
pub fn thermal_scenarios(seed: u64, count: usize) -> Vec<ThermalScenario> {
    let mut rng = stream(seed, 1);
    (0..count)
        .map(|i| {
            let link = draw_link(&mut rng, i, 0.3);
            let omega_a = rng.random_range(1.0..10.0);
            let omega_b = rng.random_range(1.0..10.0);
            let gm = g_max(omega_a, omega_b);
            let mut l = gm * rng.random_range(-1.0..1.0);
            let kappa = (1.0 - link.tau_a()) * omega_a + (1.0 - link.tau_b()) * omega_b;
            if kappa - link.u() * l <= link.delta_tau() {
                l = -l.abs();
            }
            ThermalScenario {
                protocol: draw_protocol(i),
                link,
                omega_a,
                omega_b,
                l,
            }
        })
        .collect()
}

/// Even indices use χ = 2β/α + ε with ε ∈ [0, 0.5]; odd indices draw χ up to four
/// times the smallest value at which the rate is defined, β(β+|Δτ|)/α.
pub fn chi_scenarios(seed: u64, count: usize) -> Vec<ChiScenario> {
    let mut rng = stream(seed, 2);
    (0..count)
        .map(|i| {
            let link = draw_link(&mut rng, i, 0.3);
            let eps: f64 = rng.random_range(0.0..0.5);
            let stretch: f64 = rng.random_range(0.001..3.0);
            let chi = if i % 4 < 2 {
                chi_equivalent(&link, eps)
            } else {
                link.beta() * (link.beta() + link.delta_tau()) / link.alpha() * (1.0 + stretch)
            };
            ChiScenario {
                protocol: draw_protocol(i),
                link,
                chi,
            }
        })
        .collect()
}

/// Asymmetric links with τ ∈ [0.05, 1) and χ ∈ [β²/α, 6β²/α].
pub fn region_scenarios(seed: u64, count: usize) -> Vec<(LinkPair, f64)> {
    let mut rng = stream(seed, 3);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let ta: f64 = rng.random_range(0.05..1.0);
        let tb: f64 = rng.random_range(0.05..1.0);
        let stretch: f64 = rng.random_range(0.0..5.0);
        if (ta - tb).abs() < 1e-3 {
            continue;
        }
        let link = LinkPair::new(ta, tb).expect("drawn inside (0, 1)");
        out.push((link, link.chi_floor() * (1.0 + stretch)));
    }
    out
}

/// Bisector λ ranges (|Δτ|, λ_opt(ω)] for ω ∈ [1, 10]².
pub fn lambda_scenarios(seed: u64, count: usize) -> Vec<(ProtocolParams, LinkPair, f64)> {
    let mut rng = stream(seed, 4);
    (0..count)
        .map(|i| {
            let link = draw_link(&mut rng, i, 0.3);
            let omega_a = rng.random_range(1.0..10.0);
            let omega_b = rng.random_range(1.0..10.0);
            let lambda_max = lambda_opt(&link, omega_a, omega_b).expect("omegas drawn ≥ 1");
            (draw_protocol(i), link, lambda_max)
        })
        .collect()
}

/// The 50 × 50 × 20 lattice τ_A, τ_B ∈ {0.02, …, 1}, χ ∈ [β²/α, 6β²/α].
pub fn classify_lattice() -> LatticeSummary {
    let taus: Vec<f64> = (0..50).map(|k| 0.02 + 0.98 * k as f64 / 49.0).collect();
    let cells: Vec<(f64, f64)> = taus.iter().flat_map(|&a| taus.iter().map(move |&b| (a, b))).collect();
    let (points, skipped, agreed) = cells
        .par_iter()
        .map(|&(ta, tb)| {
            let link = LinkPair::new(ta, tb).expect("lattice inside (0, 1]");
            if link.is_symmetric() {
                return (0, 20, 0);
            }
            let floor = link.chi_floor();
            let agreed = (0..20)
                .filter(|&k| {
                    let chi = floor * (1.0 + 5.0 * k as f64 / 19.0);
                    classify_nu_regions(&link, chi).is_ok_and(|v| v.agree)
                })
                .count();
            (20, 0, agreed)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    LatticeSummary {
        points,
        skipped_symmetric: skipped,
        agreed,
        pass: agreed == points,
    }
}

/// Runs every verify_* operation on `scenarios` seeded scenarios each, plus the
/// ν₁/ν₂ classification lattice.
pub fn run_suite(seed: u64, scenarios: usize, samples: usize) -> SuiteReport {
    let thermal: Vec<Run> = thermal_scenarios(seed, scenarios)
        .par_iter()
        .map(|s| {
            Run::from_result(
                verify_monotone_thermal(&s.protocol, &s.link, s.omega_a, s.omega_b, s.l, samples),
                Run::from_probe,
            )
        })
        .collect();
    let chi: Vec<Run> = chi_scenarios(seed, scenarios)
        .par_iter()
        .map(|s| {
            Run::from_result(
                verify_monotone_chi(&s.protocol, &s.link, s.chi, samples),
                Run::from_probe,
            )
        })
        .collect();
    let regions = region_scenarios(seed, scenarios);
    let p_prime: Vec<Run> = regions
        .par_iter()
        .map(|(link, chi)| {
            Run::from_result(verify_p_prime_positive(link, *chi, samples), |p| Run {
                pass: p.pass,
                margin: Some(p.worst_margin),
                endpoint_dev: None,
                reason: format!("min p' = {}", p.worst_margin),
            })
        })
        .collect();
    let lambda: Vec<Run> = lambda_scenarios(seed, scenarios)
        .par_iter()
        .map(|(protocol, link, lambda_max)| {
            Run::from_result(verify_lambda_minimization(protocol, link, *lambda_max, samples), |p| {
                Run {
                    pass: p.pass,
                    margin: Some(p.worst_margin),
                    endpoint_dev: None,
                    reason: format!("margin {}, min H'' {:?}", p.worst_margin, p.h_second_diff_min),
                }
            })
        })
        .collect();
    let classify: Vec<Run> = regions
        .par_iter()
        .map(|(link, chi)| {
            Run::from_result(classify_nu_regions(link, *chi), |v| Run {
                pass: v.agree,
                margin: None,
                endpoint_dev: None,
                reason: format!(
                    "predicted {:?}, observed {:?}",
                    v.predicted_relation, v.observed_relation
                ),
            })
        })
        .collect();
    let checks = vec![
        summarize("verify_monotone_thermal", thermal),
        summarize("verify_monotone_chi", chi),
        summarize("verify_p_prime_positive", p_prime),
        summarize("verify_lambda_minimization", lambda),
        summarize("classify_nu_regions", classify),
    ];
    let classify_lattice = classify_lattice();
    let pass = checks.iter().all(|c| c.pass) && classify_lattice.pass;
    SuiteReport {
        seed,
        scenarios,
        samples,
        checks,
        classify_lattice,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::chi_equivalent;

    fn reference() -> ProtocolParams {
        ProtocolParams::default()
    }

    #[test]
    fn thermal_symmetric_example() {
        let p = ProtocolParams::new(1.0, 60.0, 0.01).unwrap();
        let link = LinkPair::symmetric(0.9).unwrap();
        let probe = verify_monotone_thermal(&p, &link, 2.0, 2.0, 0.0, 200).unwrap();
        assert!(
            probe.verdict,
            "{:?} {:?} {}",
            probe.worst_margin,
            probe.bound.map(|b| b.worst),
            probe.form_deviation
        );
        assert!(probe.worst_margin.unwrap() > 0.0);
        let f = probe.bound.as_ref().unwrap();
        assert!(f.worst.unwrap() > 0.0);
        assert!(f.floor_margin.unwrap() >= 0.0);
        assert_eq!(probe.y_grid[0], 0.0);
        let min = probe.rate_values.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(min, probe.rate_values[0]);
    }

    #[test]
    fn thermal_degenerate_link() {
        let link = LinkPair::new(1.0, 0.6).unwrap();
        let probe = verify_monotone_thermal(&reference(), &link, 3.0, 2.0, 0.3, 50).unwrap();
        assert!(probe.degenerate);
        assert!(probe.finite_diffs.is_empty());
        assert!(probe.worst_margin.is_none());
        assert!(probe.verdict);
    }

    #[test]
    fn chi_symmetric_example() {
        let link = LinkPair::symmetric(0.95).unwrap();
        let probe = verify_monotone_chi(&reference(), &link, chi_equivalent(&link, 0.01), 200).unwrap();
        assert!(
            probe.verdict,
            "{:?} {:?} {}",
            probe.worst_margin,
            probe.bound.map(|b| b.worst),
            probe.form_deviation
        );
        assert!((probe.endpoint_rate - 1.414_760_081_430_468_4).abs() < 1e-12);
        assert!(probe.bound.as_ref().unwrap().worst.unwrap() > 0.0);
    }

    #[test]
    fn chi_asymmetric_example() {
        let link = LinkPair::new(0.98, 0.6).unwrap();
        let probe = verify_monotone_chi(&reference(), &link, chi_equivalent(&link, 0.01), 200).unwrap();
        assert!(
            probe.verdict,
            "{:?} {:?} {}",
            probe.worst_margin,
            probe.bound.map(|b| b.worst),
            probe.form_deviation
        );
        assert!((probe.endpoint_rate - 0.379_392_191_958_814_2).abs() < 1e-12);
        assert!(probe.form_deviation < 1e-12);
    }

    #[test]
    fn chi_domain_is_enforced() {
        let link = LinkPair::symmetric(0.95).unwrap();
        assert!(matches!(
            verify_monotone_chi(&reference(), &link, 4.0, 10),
            Err(Error::ChiDomain { .. })
        ));
    }

    #[test]
    fn region_examples() {
        // τ_A = 3τ_B
        let link = LinkPair::new(0.9, 0.3).unwrap();
        for stretch in [0.0, 0.5, 3.0] {
            let v = classify_nu_regions(&link, link.chi_floor() * (1.0 + stretch)).unwrap();
            assert_eq!(v.predicted_relation, NuRelation::Greater);
            assert!(v.agree);
        }
        // τ_A > 2τ_B
        let link = LinkPair::new(0.9, 0.4).unwrap();
        let v = classify_nu_regions(&link, link.chi_floor() * 2.0).unwrap();
        assert_eq!(v.observed_relation, NuRelation::Greater);
        assert!(v.chi_threshold_used.is_none());
        // τ_A < τ_B: the threshold reduces to 2β/τ_A.
        let link = LinkPair::new(0.5, 0.9).unwrap();
        let thr = 2.0 * link.beta() / 0.5;
        let v = classify_nu_regions(&link, thr * 1.01).unwrap();
        assert!((v.chi_threshold_used.unwrap() - thr).abs() < 1e-12);
        assert_eq!(v.observed_relation, NuRelation::Less);
        assert!(v.agree);
        let v = classify_nu_regions(&link, thr * 0.99).unwrap();
        assert_eq!(v.observed_relation, NuRelation::Greater);
        assert!(v.agree);
    }

    #[test]
    fn region_preconditions() {
        assert!(classify_nu_regions(&LinkPair::symmetric(0.5).unwrap(), 10.0).is_err());
        let link = LinkPair::new(0.9, 0.5).unwrap();
        assert!(classify_nu_regions(&link, link.chi_floor() * 0.5).is_err());
    }

    #[test]
    fn p_prime_examples() {
        let link = LinkPair::new(0.9, 0.4).unwrap();
        assert!(
            verify_p_prime_positive(&link, link.chi_floor() * 1.5, 200)
                .unwrap()
                .pass
        );
        let link = LinkPair::new(0.5, 0.9).unwrap();
        let chi = 2.0 * link.beta() / 0.5 * 1.2;
        let probe = verify_p_prime_positive(&link, chi, 200).unwrap();
        assert!(probe.pass && probe.worst_margin > 0.0);
        let lossless = LinkPair::new(1.0, 0.6).unwrap();
        let probe = verify_p_prime_positive(&lossless, lossless.chi_floor() * 2.0, 200).unwrap();
        assert!(probe.degenerate && probe.pass);
        assert_eq!(probe.values.len(), 1);
    }

    #[test]
    fn lambda_examples() {
        let p = ProtocolParams::new(1.0, 60.0, 0.01).unwrap();
        let link = LinkPair::new(0.8, 0.5).unwrap();
        let probe = verify_lambda_minimization(&p, &link, 1.5, 100).unwrap();
        assert!(probe.pass, "{} {:?}", probe.worst_margin, probe.h_second_diff_min);
        assert!(probe.h_second_diff_min.unwrap() > 0.0);
        assert!(probe.rates.iter().all(|r| r.is_finite()));
        let sym = LinkPair::symmetric(0.9).unwrap();
        let probe = verify_lambda_minimization(&p, &sym, 1.5, 100).unwrap();
        assert!(probe.pass && probe.h_second_diff_min.is_none());
        assert!(matches!(
            verify_lambda_minimization(&p, &link, 0.2, 10),
            Err(Error::LambdaDomain { .. })
        ));
    }

    #[test]
    fn suite_is_deterministic_and_passes() {
        let a = run_suite(7, 12, 60);
        let b = run_suite(7, 12, 60);
        assert_eq!(a, b);
        assert!(a.pass, "{:#?}", a.checks);
    }
}
