use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An intermediate quantity left the domain of a special function.
    #[error("{function} is undefined at {value} ({reason})")]
    Domain {
        function: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("covariance matrix is not positive definite (omega_a*omega_b = {product}, g = {g}, g' = {g_prime})")]
    NonPositiveDefinite { product: f64, g: f64, g_prime: f64 },

    #[error("ancilla state (omega_a = {omega_a}, omega_b = {omega_b}, g = {g}, g' = {g_prime}) is not physical")]
    NonPhysicalAttack {
        omega_a: f64,
        omega_b: f64,
        g: f64,
        g_prime: f64,
    },

    /// The argument of an entropy term fell below 1, so the noise model is nonphysical.
    #[error("nonphysical noise: {quantity} = {value} < 1")]
    NonPhysicalNoise { quantity: &'static str, value: f64 },

    #[error("link is symmetric (|tau_a - tau_b| = {delta_tau:e}); use the symmetric form")]
    SymmetricDegenerate { delta_tau: f64 },

    #[error("equivalent noise chi = {chi} is outside the domain (requires chi {requirement} {bound})")]
    ChiDomain {
        chi: f64,
        bound: f64,
        requirement: &'static str,
    },

    #[error("lambda = {lambda} must exceed |tau_a - tau_b| = {delta_tau}")]
    LambdaDomain { lambda: f64, delta_tau: f64 },

    /// A pulse reached an optical component in a polarization that cannot take
    /// the required port.
    #[error("{pulse} pulse reached {component} {polarization}-polarized; the {port} port needs {required}")]
    Routing {
        pulse: &'static str,
        component: &'static str,
        polarization: &'static str,
        port: &'static str,
        required: &'static str,
    },

    #[error("no admissible point in the search domain: {0}")]
    EmptyDomain(&'static str),

    #[error("malformed record: {0}")]
    Parse(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
