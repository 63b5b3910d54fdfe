//! Security analysis toolkit for continuous-variable measurement-device-independent
//! quantum key distribution (CV-MDI-QKD).
//!
//! The crate is organised bottom-up:
//!
//! * [`gaussian`] holds the shared domain types, the entropy function `h`, two-mode
//!   symplectic spectra and the noise algebra that maps Eve's ancillas onto the
//!   channel-level quantities (κ, λ, λ′, χ).
//! * [`keyrate`] evaluates the general secret-key rate and all of its closed forms,
//!   including the forms minimized over Eve's correlations.
//! * [`attack`] brute-forces Eve's correlation parameters on the physical domain and
//!   certifies that the minimized closed forms are true lower envelopes.
//! * [`proof`] numerically checks the monotonicity lemmas behind the minimization.
//! * [`sweep`] produces rate surfaces and relay-placement scans with CSV/JSON export.
//! * [`optics`] is a classical-field model of the self-aligned plug-and-play scheme.
//!
//! All quantities are in shot-noise units and all logarithms are base 2.

// Domain checks are written as `!(x > bound)` so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod error;
pub mod gaussian;
pub mod keyrate;
pub mod optics;
pub mod proof;
pub mod sweep;

pub use error::{Error, Result};
pub use gaussian::{AncillaState, AttackCoords, DerivedNoise, LinkPair, ProtocolParams, SymplecticPair};
pub use keyrate::{FormulaTag, KeyRateReport};

/// Compares two values with a relative tolerance, using 1 as the scale floor so
/// that quantities crossing zero are compared absolutely.
pub fn approx_eq_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
