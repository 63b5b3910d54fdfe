//! Domain types, special functions and two-mode Gaussian algebra.
//!
//! Eve's two ancillary modes are described by the covariance matrix
//!
//! ```text
//!     ( ω_A·I   G    )          G = diag(g, g′)
//!     (   G   ω_B·I  )
//! ```
//!
//! Everything downstream consumes the noise quantities derived here:
//! κ = (1−τ_A)ω_A + (1−τ_B)ω_B, λ = κ − u·g, λ′ = κ + u·g′ and the equivalent
//! noise χ = (β/α)·√((β+λ)(β+λ′)), with α = τ_Aτ_B, β = τ_A+τ_B and
//! u = 2√((1−τ_A)(1−τ_B)).

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arguments of `h` this close below 1 are clamped to 1.
pub const H_CLAMP_TOL: f64 = 1e-12;
/// Slack on ν₋ ≥ 1 when testing physicality.
pub const PHYSICALITY_SLACK: f64 = 1e-12;
/// Absolute bracket width at which the |g|_max bisection stops.
pub const GMAX_TOL: f64 = 1e-12;
/// Below this |τ_A − τ_B| the symmetric closed forms are used.
pub const SYMMETRIC_THRESHOLD: f64 = 1e-9;

/// Protocol-level constants: reconciliation efficiency ξ, modulation variance φ and
/// excess noise ε. The derived μ = φ + 1 is fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolParams {
    xi: f64,
    phi: f64,
    mu: f64,
    epsilon: f64,
}

impl ProtocolParams {
    pub fn new(xi: f64, phi: f64, epsilon: f64) -> Result<Self> {
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "xi",
                value: xi,
                reason: "reconciliation efficiency must lie in (0, 1]",
            });
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "modulation variance must be positive",
            });
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                reason: "excess noise must be non-negative",
            });
        }
        Ok(Self {
            xi,
            phi,
            mu: phi + 1.0,
            epsilon,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Same parameters with a different reconciliation efficiency.
    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        Self::new(xi, self.phi, self.epsilon)
    }
}

impl Default for ProtocolParams {
    /// ξ = 0.97, φ = 60, ε = 0.01: the reference simulation setting.
    fn default() -> Self {
        Self {
            xi: 0.97,
            phi: 60.0,
            mu: 61.0,
            epsilon: 0.01,
        }
    }
}

/// Transmissivities of the Alice–relay and Bob–relay links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkPair {
    tau_a: f64,
    tau_b: f64,
}

impl LinkPair {
    pub fn new(tau_a: f64, tau_b: f64) -> Result<Self> {
        for (name, value) in [("tau_a", tau_a), ("tau_b", tau_b)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "transmissivity must lie in (0, 1]",
                });
            }
        }
        Ok(Self { tau_a, tau_b })
    }

    pub fn symmetric(tau: f64) -> Result<Self> {
        Self::new(tau, tau)
    }

    pub fn tau_a(&self) -> f64 {
        self.tau_a
    }

    pub fn tau_b(&self) -> f64 {
        self.tau_b
    }

    /// α = τ_A·τ_B
    pub fn alpha(&self) -> f64 {
        self.tau_a * self.tau_b
    }

    /// β = τ_A + τ_B
    pub fn beta(&self) -> f64 {
        self.tau_a + self.tau_b
    }

    /// u = 2√((1−τ_A)(1−τ_B))
    pub fn u(&self) -> f64 {
        2.0 * ((1.0 - self.tau_a) * (1.0 - self.tau_b)).sqrt()
    }

    pub fn delta_tau(&self) -> f64 {
        (self.tau_a - self.tau_b).abs()
    }

    pub fn is_symmetric(&self) -> bool {
        self.delta_tau() < SYMMETRIC_THRESHOLD
    }

    /// The link with the roles of Alice and Bob exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            tau_a: self.tau_b,
            tau_b: self.tau_a,
        }
    }

    /// Smallest equivalent noise compatible with the link, β²/α.
    pub fn chi_floor(&self) -> f64 {
        self.beta() * self.beta() / self.alpha()
    }
}

/// Eve's two-mode ancilla: variances ω_A, ω_B and cross correlations g, g′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncillaState {
    pub omega_a: f64,
    pub omega_b: f64,
    pub g: f64,
    pub g_prime: f64,
}

impl AncillaState {
    pub fn new(omega_a: f64, omega_b: f64, g: f64, g_prime: f64) -> Result<Self> {
        check_omegas(omega_a, omega_b)?;
        for (name, value) in [("g", g), ("g_prime", g_prime)] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "correlation must be finite",
                });
            }
        }
        Ok(Self {
            omega_a,
            omega_b,
            g,
            g_prime,
        })
    }

    /// Uncorrelated thermal ancillas.
    pub fn thermal(omega_a: f64, omega_b: f64) -> Result<Self> {
        Self::new(omega_a, omega_b, 0.0, 0.0)
    }

    /// A state on the bisector g′ = −g.
    pub fn on_bisector(omega_a: f64, omega_b: f64, g: f64) -> Result<Self> {
        Self::new(omega_a, omega_b, g, -g)
    }
}

pub(crate) fn check_omegas(omega_a: f64, omega_b: f64) -> Result<()> {
    for (name, value) in [("omega_a", omega_a), ("omega_b", omega_b)] {
        if !(value >= 1.0 && value.is_finite()) {
            return Err(Error::InvalidParameter {
                name,
                value,
                reason: "ancilla variance must be at least the vacuum level 1",
            });
        }
    }
    Ok(())
}

/// Channel-level noise induced by an ancilla on a pair of links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedNoise {
    pub kappa: f64,
    pub lambda: f64,
    pub lambda_prime: f64,
    /// δ = κ − u·l, half of λ + λ′.
    pub delta: f64,
    pub chi: f64,
}

/// Symplectic eigenvalues ν₋ ≤ ν₊ of the ancilla covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymplecticPair {
    pub nu_minus: f64,
    pub nu_plus: f64,
}

/// Coordinates of (g, g′) relative to the bisector g = −g′.
///
/// `d` is the Euclidean distance from the bisector, `l` the bisector coordinate of
/// the projection (l, −l) and `d_prime = (g + g′)/2`, so that g = d′ + l and
/// g′ = d′ − l. In the sector g + g′ ≥ 0, `d_prime = √2·d/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackCoords {
    pub d: f64,
    pub d_prime: f64,
    pub l: f64,
}

impl AttackCoords {
    pub fn from_correlations(g: f64, g_prime: f64) -> Self {
        Self {
            d: (g + g_prime).abs() / SQRT_2,
            d_prime: (g + g_prime) / 2.0,
            l: (g - g_prime) / 2.0,
        }
    }

    pub fn from_parts(d_prime: f64, l: f64) -> Self {
        Self {
            d: (2.0 * d_prime).abs() / SQRT_2,
            d_prime,
            l,
        }
    }

    /// Back to (g, g′).
    pub fn to_correlations(&self) -> (f64, f64) {
        (self.d_prime + self.l, self.d_prime - self.l)
    }

    /// Monotonicity variable under fixed thermal noise, y = u²d′².
    pub fn y_thermal(&self, link: &LinkPair) -> f64 {
        let u = link.u();
        u * u * self.d_prime * self.d_prime
    }

    /// Monotonicity variable under fixed equivalent noise,
    /// y = √(u²d′² + α²χ²/β²). For τ_A = τ_B this is √(τ²χ²/4 + u²d′²).
    pub fn y_chi(&self, link: &LinkPair, chi: f64) -> f64 {
        let u = link.u();
        let base = link.alpha() * chi / link.beta();
        (u * u * self.d_prime * self.d_prime + base * base).sqrt()
    }
}

/// h(x) = ((x+1)/2)·log₂((x+1)/2) − ((x−1)/2)·log₂((x−1)/2).
///
/// Evaluated as log₂((x+1)/2) + ((x−1)/2)·log₂(1 + 2/(x−1)), which avoids the
/// cancellation between the two large terms for big arguments.
pub fn entropy_h(x: f64) -> Result<f64> {
    if x.is_nan() || x < 1.0 - H_CLAMP_TOL {
        return Err(Error::Domain {
            function: "h",
            value: x,
            reason: "argument below 1",
        });
    }
    if x <= 1.0 {
        return Ok(0.0);
    }
    let half_minus = (x - 1.0) / 2.0;
    Ok(((x + 1.0) / 2.0).log2() + half_minus * (1.0 / half_minus).ln_1p() / LN_2)
}

/// g(x) = log₂((x+1)/(x−1)), the derivative 2·h′(x).
pub fn log_ratio_g(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 1.0 {
        return Err(Error::Domain {
            function: "g",
            value: x,
            reason: "pole at x = 1, requires x > 1",
        });
    }
    Ok((2.0 / (x - 1.0)).ln_1p() / LN_2)
}

/// Symplectic spectrum of the ancilla covariance matrix.
///
/// With Δ = ω_A² + ω_B² + 2gg′ and det σ = (ω_Aω_B − g²)(ω_Aω_B − g′²),
/// ν±² = (Δ ± √(Δ² − 4 det σ))/2. ν₋ is taken from det σ/ν₊² to avoid cancellation.
pub fn symplectic_spectrum(ancilla: &AncillaState) -> Result<SymplecticPair> {
    let AncillaState {
        omega_a,
        omega_b,
        g,
        g_prime,
    } = *ancilla;
    let product = omega_a * omega_b;
    if product <= g * g || product <= g_prime * g_prime {
        return Err(Error::NonPositiveDefinite { product, g, g_prime });
    }
    let sum = omega_a * omega_a + omega_b * omega_b + 2.0 * g * g_prime;
    let det = (product - g * g) * (product - g_prime * g_prime);
    let mut disc = sum * sum - 4.0 * det;
    if disc < 0.0 {
        if disc < -1e-12 * sum * sum {
            return Err(Error::Domain {
                function: "symplectic_spectrum",
                value: disc,
                reason: "negative discriminant",
            });
        }
        disc = 0.0;
    }
    let nu_plus_sq = (sum + disc.sqrt()) / 2.0;
    let nu_minus_sq = det / nu_plus_sq;
    Ok(SymplecticPair {
        nu_minus: nu_minus_sq.sqrt(),
        nu_plus: nu_plus_sq.sqrt(),
    })
}

/// True iff σ is positive definite and ν₋ ≥ 1 (up to [`PHYSICALITY_SLACK`]).
pub fn is_physical(ancilla: &AncillaState) -> bool {
    if !(ancilla.omega_a >= 1.0 && ancilla.omega_b >= 1.0) {
        return false;
    }
    match symplectic_spectrum(ancilla) {
        Ok(pair) => pair.nu_minus >= 1.0 - PHYSICALITY_SLACK,
        Err(_) => false,
    }
}

fn physical_raw(omega_a: f64, omega_b: f64, g: f64, g_prime: f64) -> bool {
    is_physical(&AncillaState {
        omega_a,
        omega_b,
        g,
        g_prime,
    })
}

/// Physicality on the bisector g′ = −g in factored form.
///
/// There Δ − 2 = (ω_A² + ω_B² − 2) − 2g² and Δ² − 4 det σ = (ω_A − ω_B)²((ω_A + ω_B)² − 4g²),
/// so ν₋ ≥ 1 reads Δ − 2 ≥ |ω_A − ω_B|·√((ω_A + ω_B)² − 4g²). Unlike the generic test this
/// has no cancellation near the vacuum, which keeps |g|_max(1, ω) exactly 0.
fn bisector_physical(omega_a: f64, omega_b: f64, g: f64) -> bool {
    let g2 = g * g;
    if omega_a * omega_b <= g2 {
        return false;
    }
    let lhs = (omega_a * omega_a + omega_b * omega_b - 2.0) - 2.0 * g2;
    let spread = (omega_a + omega_b).powi(2) - 4.0 * g2;
    lhs >= 0.0 && lhs * lhs >= (omega_a - omega_b).powi(2) * spread.max(0.0)
}

/// Largest g ≥ 0 such that (ω_A, ω_B, g, −g) is physical, by bisection.
pub fn g_max(omega_a: f64, omega_b: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = (omega_a * omega_b).sqrt();
    if !bisector_physical(omega_a, omega_b, lo) {
        return 0.0;
    }
    while hi - lo > GMAX_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bisector_physical(omega_a, omega_b, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest d′ ≥ 0 such that (d′ + l, d′ − l) stays physical, by bisection.
///
/// Returns `None` when the bisector point (l, −l) itself is not physical.
pub fn d_prime_max(omega_a: f64, omega_b: f64, l: f64) -> Option<f64> {
    if !physical_raw(omega_a, omega_b, l, -l) {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = (omega_a * omega_b).sqrt() + l.abs();
    while hi - lo > GMAX_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if physical_raw(omega_a, omega_b, mid + l, mid - l) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// κ, λ, λ′, δ and χ for an ancilla attacking a pair of links.
pub fn derive_noise(link: &LinkPair, ancilla: &AncillaState) -> Result<DerivedNoise> {
    let u = link.u();
    let beta = link.beta();
    let kappa = (1.0 - link.tau_a()) * ancilla.omega_a + (1.0 - link.tau_b()) * ancilla.omega_b;
    let lambda = kappa - u * ancilla.g;
    let lambda_prime = kappa + u * ancilla.g_prime;
    let l = (ancilla.g - ancilla.g_prime) / 2.0;
    let (a, b) = (beta + lambda, beta + lambda_prime);
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain {
            function: "chi",
            value: a.min(b),
            reason: "(beta + lambda)(beta + lambda') must be positive",
        });
    }
    Ok(DerivedNoise {
        kappa,
        lambda,
        lambda_prime,
        delta: kappa - u * l,
        chi: beta / link.alpha() * (a * b).sqrt(),
    })
}

/// χ = 2(τ_A + τ_B)/(τ_Aτ_B) + ε.
pub fn chi_equivalent(link: &LinkPair, epsilon: f64) -> f64 {
    2.0 * link.beta() / link.alpha() + epsilon
}

/// λ on the bisector (λ = λ′) that produces a given χ: λ = αχ/β − β.
pub fn bisector_lambda(link: &LinkPair, chi: f64) -> f64 {
    link.alpha() * chi / link.beta() - link.beta()
}
