//! Brute-force search over Eve's correlations and rate profiles along d′.
//!
//! The grid search evaluates the general rate at every physical lattice point of
//! the (g, g′) box and compares the minimum with the analytic minimized value.
//! Both sectors g + g′ ≥ 0 and g + g′ < 0 are searched; the reflection
//! symmetry of the rate is checked rather than assumed.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{check_omegas, d_prime_max, g_max, is_physical, AncillaState, LinkPair, ProtocolParams};
use crate::keyrate::{key_rate, key_rate_closed_asym, key_rate_closed_sym, key_rate_min_thermal};

/// Lattice resolution for the coarse pass and the optional refinement pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttackGrid {
    n: usize,
    refine: Option<usize>,
}

impl AttackGrid {
    pub fn new(n: usize, refine: Option<usize>) -> Result<Self> {
        for (name, value) in [("n", Some(n)), ("refine", refine)] {
            if let Some(v) = value {
                if v < 3 || v % 2 == 0 {
                    return Err(Error::InvalidParameter {
                        name,
                        value: v as f64,
                        reason: "grid resolution must be odd and at least 3",
                    });
                }
            }
        }
        Ok(Self { n, refine })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn refine(&self) -> Option<usize> {
        self.refine
    }
}

impl Default for AttackGrid {
    /// 201×201 coarse pass followed by an 801×801 pass around the coarse argmin.
    fn default() -> Self {
        Self {
            n: 201,
            refine: Some(801),
        }
    }
}

/// Closed interval of one correlation axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
}

/// Result of the grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgMinReport {
    pub g_star: f64,
    pub g_prime_star: f64,
    pub rate_star: f64,
    /// |g* + g′*|/√2
    pub bisector_distance: f64,
    /// Analytic minimum over (g, g′) for the same thermal noise.
    pub analytic_rate: f64,
    /// rate_star − analytic_rate
    pub gap: f64,
    pub g_max: f64,
    /// ||g*| − |g|_max|
    pub g_max_distance: f64,
    /// Lattice spacing of the finest pass.
    pub cell_size: f64,
    pub evaluated: usize,
    pub nonphysical: usize,
    pub inadmissible: usize,
}

/// Bounding box of the physical region: |g|, |g′| < √(ω_Aω_B).
pub fn physical_bounds(omega_a: f64, omega_b: f64) -> [AxisRange; 2] {
    let r = (omega_a * omega_b).sqrt();
    [AxisRange { lo: -r, hi: r }; 2]
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    rate: f64,
    off_bisector: f64,
    index: usize,
    g: f64,
    g_prime: f64,
}

impl Candidate {
    fn order(&self, other: &Self) -> Ordering {
        self.rate
            .total_cmp(&other.rate)
            .then(self.off_bisector.total_cmp(&other.off_bisector))
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    best: Option<Candidate>,
    evaluated: usize,
    nonphysical: usize,
    inadmissible: usize,
}

impl Tally {
    fn merge(self, other: Self) -> Self {
        let best = match (self.best, other.best) {
            (Some(a), Some(b)) => Some(if a.order(&b) == Ordering::Greater { b } else { a }),
            (a, b) => a.or(b),
        };
        Self {
            best,
            evaluated: self.evaluated + other.evaluated,
            nonphysical: self.nonphysical + other.nonphysical,
            inadmissible: self.inadmissible + other.inadmissible,
        }
    }
}

/// Outcome of evaluating the general rate at one lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellRate {
    Nonphysical,
    Inadmissible,
    Rate(f64),
}

/// Rate at a single (g, g′), classifying why it is missing when it is.
pub fn cell_rate(
    protocol: &ProtocolParams,
    link: &LinkPair,
    omega_a: f64,
    omega_b: f64,
    g: f64,
    g_prime: f64,
) -> CellRate {
    let ancilla = AncillaState {
        omega_a,
        omega_b,
        g,
        g_prime,
    };
    if !is_physical(&ancilla) {
        return CellRate::Nonphysical;
    }
    match key_rate(protocol, link, &ancilla) {
        Ok(r) if r.rate.is_finite() => CellRate::Rate(r.rate),
        _ => CellRate::Inadmissible,
    }
}

/// Lattice coordinate k of an m-point axis centred on `center` with half-width
/// `half`. Written so that the centre is hit exactly and the axis is
/// antisymmetric about it.
fn axis_point(center: f64, half: f64, k: usize, m: usize) -> f64 {
    let twice = 2 * k as i64 - (m as i64 - 1);
    center + half * twice as f64 / (m - 1) as f64
}

#[allow(clippy::too_many_arguments)]
fn scan(
    protocol: &ProtocolParams,
    link: &LinkPair,
    omega_a: f64,
    omega_b: f64,
    centers: (f64, f64),
    half: f64,
    m: usize,
    index_offset: usize,
) -> Tally {
    (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let g = axis_point(centers.0, half, idx / m, m);
            let g_prime = axis_point(centers.1, half, idx % m, m);
            let mut t = Tally::default();
            match cell_rate(protocol, link, omega_a, omega_b, g, g_prime) {
                CellRate::Nonphysical => t.nonphysical = 1,
                CellRate::Inadmissible => {
                    t.evaluated = 1;
                    t.inadmissible = 1;
                }
                CellRate::Rate(rate) => {
                    t.evaluated = 1;
                    t.best = Some(Candidate {
                        rate,
                        off_bisector: (g + g_prime).abs(),
                        index: index_offset + idx,
                        g,
                        g_prime,
                    });
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge)
}

/// Minimizes the general rate over the physical (g, g′) lattice for fixed
/// thermal noise ω_A, ω_B.
///
/// With refinement enabled, a second lattice spanning ±2 coarse cells around the
/// coarse argmin is searched as well; the reported minimum is over both passes.
/// Ties go to the point closer to the bisector, then to the earlier lattice index,
/// so the result does not depend on the evaluation order.
pub fn min_rate_brute(
    protocol: &ProtocolParams,
    link: &LinkPair,
    omega_a: f64,
    omega_b: f64,
    grid: AttackGrid,
) -> Result<ArgMinReport> {
    check_omegas(omega_a, omega_b)?;
    let [range, _] = physical_bounds(omega_a, omega_b);
    let half = range.hi;
    let mut tally = scan(protocol, link, omega_a, omega_b, (0.0, 0.0), half, grid.n, 0);
    let mut cell_size = 2.0 * half / (grid.n - 1) as f64;
    let coarse_best = tally
        .best
        .ok_or(Error::EmptyDomain("no physical, admissible lattice point"))?;
    if let Some(m) = grid.refine {
        let window = 2.0 * cell_size;
        let fine = scan(
            protocol,
            link,
            omega_a,
            omega_b,
            (coarse_best.g, coarse_best.g_prime),
            window,
            m,
            grid.n * grid.n,
        );
        tally = tally.merge(fine);
        cell_size = 2.0 * window / (m - 1) as f64;
    }
    let best = tally.best.expect("coarse pass produced a candidate");
    let analytic_rate = key_rate_min_thermal(protocol, link, omega_a, omega_b)?.rate;
    let gm = g_max(omega_a, omega_b);
    Ok(ArgMinReport {
        g_star: best.g,
        g_prime_star: best.g_prime,
        rate_star: best.rate,
        bisector_distance: (best.g + best.g_prime).abs() / std::f64::consts::SQRT_2,
        analytic_rate,
        gap: best.rate - analytic_rate,
        g_max: gm,
        g_max_distance: (best.g.abs() - gm).abs(),
        cell_size,
        evaluated: tally.evaluated,
        nonphysical: tally.nonphysical,
        inadmissible: tally.inadmissible,
    })
}

/// What is held fixed while d′ varies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProfileMode {
    /// Known ω_A, ω_B with the bisector coordinate l fixed; y = u²d′².
    Thermal { omega_a: f64, omega_b: f64, l: f64 },
    /// Known χ; y = √(u²d′² + α²χ²/β²).
    Chi { chi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub y: f64,
    pub d_prime: f64,
    pub lambda: f64,
    pub lambda_prime: f64,
    /// `None` where the rate expression is undefined.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateProfile {
    pub mode: ProfileMode,
    /// δ = (λ + λ′)/2 in thermal mode; varies with y in χ mode and is left out.
    pub delta: Option<f64>,
    /// u = 0: y does not depend on d′ and the profile is constant.
    pub degenerate: bool,
    pub points: Vec<ProfilePoint>,
}

impl RateProfile {
    /// (y, rate) pairs at which the rate is defined.
    pub fn defined(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().filter_map(|p| p.rate.map(|r| (p.y, r)))
    }
}

/// Offsets in [0, 1]: 0 followed by `samples − 1` log-spaced values from 1e−6 to 1.
pub(crate) fn log_offsets(samples: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples);
    out.push(0.0);
    let rest = samples.saturating_sub(1);
    for k in 0..rest {
        let t = if rest == 1 { 1.0 } else { k as f64 / (rest - 1) as f64 };
        out.push(10f64.powf(-6.0 * (1.0 - t)));
    }
    out
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
            reason: "a profile needs at least 2 samples",
        });
    }
    Ok(())
}

/// Lower end αχ/β of the fixed-χ y range and the largest y at which the rate is
/// still defined.
struct ChiDomain {
    y_min: f64,
    y_defined: f64,
}

fn chi_domain(link: &LinkPair, chi: f64) -> Result<ChiDomain> {
    let (alpha, beta) = (link.alpha(), link.beta());
    let floor = link.chi_floor();
    if !(chi >= floor) {
        return Err(Error::ChiDomain {
            chi,
            bound: floor,
            requirement: ">=",
        });
    }
    if link.is_symmetric() && !(chi > 4.0) {
        return Err(Error::ChiDomain {
            chi,
            bound: 4.0,
            requirement: ">",
        });
    }
    let c = alpha * chi / beta;
    let y_min = c;
    let y_max = (c * c + beta * beta) / (2.0 * beta);
    let y_defined = if link.is_symmetric() {
        // λλ′ → 0 at y_max and the rate has a pole there.
        y_max - (y_max - y_min) * 1e-4
    } else {
        let d = link.delta_tau();
        // √(λλ′) ≥ |Δτ| and ν ≥ 1.
        let by_eve = (beta * beta + c * c - d * d) / (2.0 * beta);
        let by_nu = c * c / (2.0 * link.tau_b());
        y_max.min(by_eve).min(by_nu)
    };
    if y_defined < y_min {
        let bound = beta * (beta + link.delta_tau()) / alpha;
        return Err(Error::ChiDomain {
            chi,
            bound,
            requirement: ">=",
        });
    }
    Ok(ChiDomain { y_min, y_defined })
}

/// Rate as a function of the monotonicity variable y along d′ ≥ 0.
///
/// Thermal mode samples y ∈ [0, min(u²d′²_max, y_def)], where d′_max is the edge
/// of the physical region at the given l and y_def the largest y at which the
/// rate is still defined. χ mode samples y ∈ [αχ/β, y_def]. The first sample is
/// always the d′ = 0 endpoint; the rest are log-spaced towards the upper end.
pub fn rate_profile_y(
    protocol: &ProtocolParams,
    link: &LinkPair,
    mode: ProfileMode,
    samples: usize,
) -> Result<RateProfile> {
    check_samples(samples)?;
    let u = link.u();
    let degenerate = u == 0.0;
    match mode {
        ProfileMode::Thermal { omega_a, omega_b, l } => {
            check_omegas(omega_a, omega_b)?;
            let d_max = d_prime_max(omega_a, omega_b, l).ok_or(Error::NonPhysicalAttack {
                omega_a,
                omega_b,
                g: l,
                g_prime: -l,
            })?;
            let kappa = (1.0 - link.tau_a()) * omega_a + (1.0 - link.tau_b()) * omega_b;
            let delta = kappa - u * l;
            if !(delta > 0.0) {
                return Err(Error::NonPhysicalNoise {
                    quantity: "delta",
                    value: delta,
                });
            }
            let points: Vec<ProfilePoint> = if degenerate {
                (0..samples)
                    .map(|k| {
                        let d_prime = d_max * k as f64 / (samples - 1) as f64;
                        thermal_point(protocol, link, omega_a, omega_b, l, d_prime, 0.0)
                    })
                    .collect()
            } else {
                let limit = if link.is_symmetric() {
                    delta * delta
                } else {
                    delta * delta - link.delta_tau().powi(2)
                };
                let y_hi = (u * d_max).powi(2).min(limit.max(0.0));
                log_offsets(samples)
                    .into_iter()
                    .map(|t| {
                        let y = y_hi * t;
                        thermal_point(protocol, link, omega_a, omega_b, l, y.sqrt() / u, y)
                    })
                    .collect()
            };
            Ok(RateProfile {
                mode,
                delta: Some(delta),
                degenerate,
                points,
            })
        }
        ProfileMode::Chi { chi } => {
            let dom = chi_domain(link, chi)?;
            let c = dom.y_min;
            let points = if degenerate {
                vec![chi_point(protocol, link, c, 0.0, c); samples]
            } else {
                let span = dom.y_defined - dom.y_min;
                log_offsets(samples)
                    .into_iter()
                    .map(|t| {
                        let y = if t == 0.0 { dom.y_min } else { dom.y_min + span * t };
                        let d_prime = (y * y - c * c).max(0.0).sqrt() / u;
                        chi_point(protocol, link, y, d_prime, c)
                    })
                    .collect()
            };
            Ok(RateProfile {
                mode,
                delta: None,
                degenerate,
                points,
            })
        }
    }
}

fn thermal_point(
    protocol: &ProtocolParams,
    link: &LinkPair,
    omega_a: f64,
    omega_b: f64,
    l: f64,
    d_prime: f64,
    y: f64,
) -> ProfilePoint {
    let (g, g_prime) = (d_prime + l, d_prime - l);
    let kappa = (1.0 - link.tau_a()) * omega_a + (1.0 - link.tau_b()) * omega_b;
    let ancilla = AncillaState {
        omega_a,
        omega_b,
        g,
        g_prime,
    };
    ProfilePoint {
        y,
        d_prime,
        lambda: kappa - link.u() * g,
        lambda_prime: kappa + link.u() * g_prime,
        rate: key_rate(protocol, link, &ancilla).ok().map(|r| r.rate),
    }
}

/// On the fixed-χ curve δ = y − β and u·d′ = √(y² − α²χ²/β²).
fn chi_point(protocol: &ProtocolParams, link: &LinkPair, y: f64, d_prime: f64, c: f64) -> ProfilePoint {
    let delta = y - link.beta();
    let ud = (y * y - c * c).max(0.0).sqrt();
    let (lambda, lambda_prime) = (delta - ud, delta + ud);
    let rate = if link.is_symmetric() {
        key_rate_closed_sym(protocol, 0.5 * link.beta(), lambda, lambda_prime)
    } else {
        key_rate_closed_asym(protocol, link, lambda, lambda_prime)
    };
    ProfilePoint {
        y,
        d_prime,
        lambda,
        lambda_prime,
        rate: rate.ok().map(|r| r.rate),
    }
}
