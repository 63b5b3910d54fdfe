//! Secret-key rates.
//!
//! The general rate is R = ξ·I_AB − I_EA with I_AB = log₂(μ/χ) and
//!
//! ```text
//! I_EA = h(√(λλ′)/|τ_A−τ_B|) + log₂(e·|τ_A−τ_B|·μ / (2(τ_A+τ_B))) − h(ν),
//! ν    = √((τ_A+λ)(τ_A+λ′)) / τ_B.
//! ```
//!
//! Alice's raw key is always the reference. Swapping τ_A and τ_B gives the
//! Bob-reference rate. Negative rates are reported unclamped; `secure` carries
//! the sign.

use std::f64::consts::{E, LOG2_E};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{
    check_omegas, derive_noise, entropy_h, g_max, is_physical, AncillaState, DerivedNoise, LinkPair, ProtocolParams,
    H_CLAMP_TOL,
};

/// Which expression produced a [`KeyRateReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaTag {
    /// R = ξ·I_AB − I_EA on an asymmetric link.
    General,
    ClosedSymmetric,
    ClosedAsymmetric,
    MinThermalSymmetric,
    MinThermalAsymmetric,
    MinChiSymmetric,
    MinChiAsymmetric,
    /// Lossless links with λ = λ′ = 0: Eve's ancillas never couple in, I_EA = 0.
    Decoupled,
}

/// Rate in bits per relay use together with its information terms.
///
/// `nu` is the argument of the positive entropy term on asymmetric links and
/// `nu2` the argument of the negative one (√(λλ′)/|τ_A−τ_B|). On symmetric links
/// `nu1` is √((τ+λ)(τ+λ′))/τ and `nu3` is √(λλ′)/τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyRateReport {
    pub rate: f64,
    pub i_ab: f64,
    pub i_ea: f64,
    pub chi: f64,
    pub nu: Option<f64>,
    pub nu1: Option<f64>,
    pub nu2: Option<f64>,
    pub nu3: Option<f64>,
    pub secure: bool,
    pub formula: FormulaTag,
}

#[derive(Default)]
struct Nus {
    nu: Option<f64>,
    nu1: Option<f64>,
    nu2: Option<f64>,
    nu3: Option<f64>,
}

fn report(protocol: &ProtocolParams, chi: f64, rate: f64, formula: FormulaTag, nus: Nus) -> KeyRateReport {
    let i_ab = (protocol.mu() / chi).log2();
    KeyRateReport {
        rate,
        i_ab,
        i_ea: protocol.xi() * i_ab - rate,
        chi,
        nu: nus.nu,
        nu1: nus.nu1,
        nu2: nus.nu2,
        nu3: nus.nu3,
        secure: rate > 0.0,
        formula,
    }
}

fn h_of(quantity: &'static str, x: f64) -> Result<f64> {
    entropy_h(x).map_err(|_| Error::NonPhysicalNoise { quantity, value: x })
}

fn require_asymmetric(link: &LinkPair) -> Result<f64> {
    if link.is_symmetric() {
        return Err(Error::SymmetricDegenerate {
            delta_tau: link.delta_tau(),
        });
    }
    Ok(link.delta_tau())
}

fn require_lambda_product(lambda: f64, lambda_prime: f64) -> Result<f64> {
    let product = lambda * lambda_prime;
    if !(product > 0.0) || lambda < 0.0 {
        return Err(Error::NonPhysicalNoise {
            quantity: "lambda*lambda'",
            value: product,
        });
    }
    Ok(product.sqrt())
}

/// √(λλ′)/|Δτ|, which has to reach 1 for the Holevo term to exist.
fn eve_argument(root_product: f64, delta_tau: f64) -> Result<f64> {
    let x = root_product / delta_tau;
    if x < 1.0 - H_CLAMP_TOL {
        return Err(Error::LambdaDomain {
            lambda: root_product,
            delta_tau,
        });
    }
    Ok(x)
}

/// I_AB = log₂(μ/χ).
pub fn mutual_information(mu: f64, chi: f64) -> Result<f64> {
    if !(chi > 0.0) {
        return Err(Error::Domain {
            function: "I_AB",
            value: chi,
            reason: "equivalent noise must be positive",
        });
    }
    if !(mu > 0.0) {
        return Err(Error::Domain {
            function: "I_AB",
            value: mu,
            reason: "mu must be positive",
        });
    }
    Ok((mu / chi).log2())
}

/// Eve's Holevo information about Alice's raw key on an asymmetric link.
pub fn eve_holevo(link: &LinkPair, noise: &DerivedNoise, mu: f64) -> Result<f64> {
    let delta_tau = require_asymmetric(link)?;
    let root = require_lambda_product(noise.lambda, noise.lambda_prime)?;
    let x = eve_argument(root, delta_tau)?;
    let nu = ((link.tau_a() + noise.lambda) * (link.tau_a() + noise.lambda_prime)).sqrt() / link.tau_b();
    Ok(
        h_of("sqrt(lambda*lambda')/|tau_a-tau_b|", x)? + (E * delta_tau * mu / (2.0 * link.beta())).log2()
            - h_of("nu", nu)?,
    )
}

/// Rate for an explicit ancilla. Symmetric links (|Δτ| < 1e−9) are routed to
/// the symmetric closed form, which is the analytic limit of the general one.
pub fn key_rate(protocol: &ProtocolParams, link: &LinkPair, ancilla: &AncillaState) -> Result<KeyRateReport> {
    if !is_physical(ancilla) {
        return Err(Error::NonPhysicalAttack {
            omega_a: ancilla.omega_a,
            omega_b: ancilla.omega_b,
            g: ancilla.g,
            g_prime: ancilla.g_prime,
        });
    }
    let noise = derive_noise(link, ancilla)?;
    if link.is_symmetric() {
        let tau = 0.5 * link.beta();
        return key_rate_closed_sym(protocol, tau, noise.lambda, noise.lambda_prime);
    }
    let i_ab = mutual_information(protocol.mu(), noise.chi)?;
    let i_ea = eve_holevo(link, &noise, protocol.mu())?;
    let nu = ((link.tau_a() + noise.lambda) * (link.tau_a() + noise.lambda_prime)).sqrt() / link.tau_b();
    let nu2 = (noise.lambda * noise.lambda_prime).sqrt() / link.delta_tau();
    let rate = protocol.xi() * i_ab - i_ea;
    Ok(KeyRateReport {
        rate,
        i_ab,
        i_ea,
        chi: noise.chi,
        nu: Some(nu),
        nu1: None,
        nu2: Some(nu2),
        nu3: None,
        secure: rate > 0.0,
        formula: FormulaTag::General,
    })
}

fn decoupled(protocol: &ProtocolParams) -> KeyRateReport {
    let chi = 4.0;
    let i_ab = (protocol.mu() / chi).log2();
    let rate = protocol.xi() * i_ab;
    KeyRateReport {
        rate,
        i_ab,
        i_ea: 0.0,
        chi,
        nu: None,
        nu1: Some(1.0),
        nu2: None,
        nu3: Some(0.0),
        secure: rate > 0.0,
        formula: FormulaTag::Decoupled,
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
            reason: "transmissivity must lie in (0, 1]",
        });
    }
    Ok(())
}

/// Symmetric closed form (τ_A = τ_B = τ):
/// R = log₂(8τ·μ^(ξ−1) / (e²·χ^ξ·√(λλ′))) + h(ν₁).
pub fn key_rate_closed_sym(
    protocol: &ProtocolParams,
    tau: f64,
    lambda: f64,
    lambda_prime: f64,
) -> Result<KeyRateReport> {
    check_tau(tau)?;
    if lambda == 0.0 && lambda_prime == 0.0 {
        return Ok(decoupled(protocol));
    }
    let root = require_lambda_product(lambda, lambda_prime)?;
    let xi = protocol.xi();
    let chi = 2.0 / tau * ((2.0 * tau + lambda) * (2.0 * tau + lambda_prime)).sqrt();
    let nu1 = ((tau + lambda) * (tau + lambda_prime)).sqrt() / tau;
    let log_term = 3.0 + tau.log2() + (xi - 1.0) * protocol.mu().log2() - 2.0 * LOG2_E - xi * chi.log2() - root.log2();
    let rate = log_term + h_of("nu1", nu1)?;
    Ok(report(
        protocol,
        chi,
        rate,
        FormulaTag::ClosedSymmetric,
        Nus {
            nu1: Some(nu1),
            nu3: Some(root / tau),
            ..Nus::default()
        },
    ))
}

/// Asymmetric closed form (τ_A ≠ τ_B):
/// R = log₂(2(τ_A+τ_B)·μ^(ξ−1) / (e·|τ_A−τ_B|·χ^ξ)) + h(ν) − h(√(λλ′)/|τ_A−τ_B|).
pub fn key_rate_closed_asym(
    protocol: &ProtocolParams,
    link: &LinkPair,
    lambda: f64,
    lambda_prime: f64,
) -> Result<KeyRateReport> {
    let delta_tau = require_asymmetric(link)?;
    let root = require_lambda_product(lambda, lambda_prime)?;
    let x = eve_argument(root, delta_tau)?;
    let (alpha, beta, xi) = (link.alpha(), link.beta(), protocol.xi());
    let chi = beta / alpha * ((beta + lambda) * (beta + lambda_prime)).sqrt();
    let nu = ((link.tau_a() + lambda) * (link.tau_a() + lambda_prime)).sqrt() / link.tau_b();
    let log_term = 1.0 + beta.log2() + (xi - 1.0) * protocol.mu().log2() - LOG2_E - delta_tau.log2() - xi * chi.log2();
    let rate = log_term + h_of("nu", nu)? - h_of("sqrt(lambda*lambda')/|tau_a-tau_b|", x)?;
    Ok(report(
        protocol,
        chi,
        rate,
        FormulaTag::ClosedAsymmetric,
        Nus {
            nu: Some(nu),
            nu2: Some(x),
            ..Nus::default()
        },
    ))
}

/// Minimized closed form under known thermal noise, as a function of λ on the
/// bisector. At λ = λ_opt = κ + u·|g|_max this is the minimum over Eve's
/// correlations; see [`key_rate_min_thermal`].
///
/// The asymmetric branch keeps the β^(1−ξ) factor that makes it equal to the
/// asymmetric closed form at λ = λ′ for every ξ.
pub fn min_thermal_at_lambda(protocol: &ProtocolParams, link: &LinkPair, lambda: f64) -> Result<KeyRateReport> {
    let xi = protocol.xi();
    let mu_term = (xi - 1.0) * protocol.mu().log2();
    if link.is_symmetric() {
        let tau = 0.5 * link.beta();
        if lambda == 0.0 {
            return Ok(decoupled(protocol));
        }
        if !(lambda > 0.0) {
            return Err(Error::NonPhysicalNoise {
                quantity: "lambda",
                value: lambda,
            });
        }
        let chi = 2.0 * (2.0 * tau + lambda) / tau;
        let nu1 = (tau + lambda) / tau;
        let rate = h_of("nu1", nu1)? + 3.0 + tau.log2() + mu_term - 2.0 * LOG2_E - xi * chi.log2() - lambda.log2();
        return Ok(report(
            protocol,
            chi,
            rate,
            FormulaTag::MinThermalSymmetric,
            Nus {
                nu1: Some(nu1),
                nu3: Some(lambda / tau),
                ..Nus::default()
            },
        ));
    }
    let delta_tau = link.delta_tau();
    if !(lambda >= delta_tau * (1.0 - H_CLAMP_TOL)) {
        return Err(Error::LambdaDomain { lambda, delta_tau });
    }
    let (alpha, beta) = (link.alpha(), link.beta());
    let nu = (link.tau_a() + lambda) / link.tau_b();
    let x = lambda / delta_tau;
    let log_term = 1.0 + (1.0 - xi) * beta.log2() + xi * alpha.log2() + mu_term
        - LOG2_E
        - delta_tau.log2()
        - xi * (beta + lambda).log2();
    let rate = h_of("nu", nu)? - h_of("lambda/|tau_a-tau_b|", x)? + log_term;
    let chi = beta / alpha * (beta + lambda);
    Ok(report(
        protocol,
        chi,
        rate,
        FormulaTag::MinThermalAsymmetric,
        Nus {
            nu: Some(nu),
            nu2: Some(x),
            ..Nus::default()
        },
    ))
}

/// λ_opt = κ + u·|g|_max for thermal ancillas with variances ω_A, ω_B.
pub fn lambda_opt(link: &LinkPair, omega_a: f64, omega_b: f64) -> Result<f64> {
    check_omegas(omega_a, omega_b)?;
    let kappa = (1.0 - link.tau_a()) * omega_a + (1.0 - link.tau_b()) * omega_b;
    Ok(kappa + link.u() * g_max(omega_a, omega_b))
}

/// Rate minimized over (g, g′) when the thermal noise ω_A, ω_B is known.
pub fn key_rate_min_thermal(
    protocol: &ProtocolParams,
    link: &LinkPair,
    omega_a: f64,
    omega_b: f64,
) -> Result<KeyRateReport> {
    let lambda = lambda_opt(link, omega_a, omega_b)?;
    min_thermal_at_lambda(protocol, link, lambda)
}

/// Rate minimized over (g, g′) when the equivalent noise χ is known.
///
/// Symmetric: R = h((χ−2)/2) + log₂(16·μ^(ξ−1) / (e²·χ^ξ·(χ−4))).
/// Asymmetric: R = log₂(2β·μ^(ξ−1)/(e|Δτ|χ^ξ)) + h(τ_Aχ/β − 1) − h((αχ − β²)/(|Δτ|β)).
pub fn key_rate_min_chi(protocol: &ProtocolParams, link: &LinkPair, chi: f64) -> Result<KeyRateReport> {
    let xi = protocol.xi();
    let mu_term = (xi - 1.0) * protocol.mu().log2();
    if link.is_symmetric() {
        if !(chi > 4.0) {
            return Err(Error::ChiDomain {
                chi,
                bound: 4.0,
                requirement: ">",
            });
        }
        let nu1 = (chi - 2.0) / 2.0;
        let rate = h_of("(chi-2)/2", nu1)? + 4.0 + mu_term - 2.0 * LOG2_E - xi * chi.log2() - (chi - 4.0).log2();
        return Ok(report(
            protocol,
            chi,
            rate,
            FormulaTag::MinChiSymmetric,
            Nus {
                nu1: Some(nu1),
                ..Nus::default()
            },
        ));
    }
    let (alpha, beta, delta_tau) = (link.alpha(), link.beta(), link.delta_tau());
    let floor = link.chi_floor();
    if !(chi >= floor) {
        return Err(Error::ChiDomain {
            chi,
            bound: floor,
            requirement: ">=",
        });
    }
    let nu = link.tau_a() * chi / beta - 1.0;
    let x = (alpha * chi - beta * beta) / (delta_tau * beta);
    let log_term = 1.0 + beta.log2() + mu_term - LOG2_E - delta_tau.log2() - xi * chi.log2();
    let rate = log_term + h_of("tau_a*chi/beta - 1", nu)? - h_of("(alpha*chi - beta^2)/(|tau_a-tau_b|*beta)", x)?;
    Ok(report(
        protocol,
        chi,
        rate,
        FormulaTag::MinChiAsymmetric,
        Nus {
            nu: Some(nu),
            nu2: Some(x),
            ..Nus::default()
        },
    ))
}
