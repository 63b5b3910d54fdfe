//! Classical mean-field model of the self-aligned plug-and-play scheme.
//!
//! A laser pulse is split at the relay beamsplitter. The left pulse travels
//! fiber A to Alice's Faraday mirror, comes back V-polarized, is routed by the two
//! polarization-maintaining PBSs into fiber B, is flipped back to H and encoded by
//! Bob (with a fixed extra π/2), and returns through fiber B. The right pulse does
//! the mirror image and is encoded by Alice. Both pulses cover both fibers twice,
//! so static fiber drifts cancel in their relative phase.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed phase Bob adds to his encoding.
pub const BOB_EXTRA_PHASE: f64 = FRAC_PI_2;
pub const ALIGNMENT_TOL: f64 = 1e-12;
/// A broken-path trial counts as misaligned above this deviation.
pub const CONTROL_THRESHOLD: f64 = 1e-3;
/// Fraction of broken-path trials that must be misaligned.
pub const CONTROL_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    fn flipped(self) -> Self {
        match self {
            Self::H => Self::V,
            Self::V => Self::H,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::V => "V",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentId {
    SourcePbs,
    Circulator,
    RelayBs,
    PbsA,
    PbsB,
    FiberA,
    FiberB,
    ModulatorA,
    ModulatorB,
    MirrorA,
    MirrorB,
}

impl ComponentId {
    fn name(self) -> &'static str {
        match self {
            Self::SourcePbs => "source PBS",
            Self::Circulator => "circulator",
            Self::RelayBs => "relay beamsplitter",
            Self::PbsA => "PBS A",
            Self::PbsB => "PBS B",
            Self::FiberA => "fiber A",
            Self::FiberB => "fiber B",
            Self::ModulatorA => "modulator A",
            Self::ModulatorB => "modulator B",
            Self::MirrorA => "mirror A",
            Self::MirrorB => "mirror B",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pulse {
    pub polarization: Polarization,
    /// Accumulated propagation (drift) phase, radians.
    pub phase: f64,
    /// Field mean value x + i·p, including encodings.
    pub amplitude: Complex64,
    pub trace: Vec<ComponentId>,
}

impl Pulse {
    fn launched() -> Self {
        Self {
            polarization: Polarization::H,
            phase: 0.0,
            amplitude: Complex64::new(1.0, 0.0),
            trace: vec![ComponentId::SourcePbs, ComponentId::Circulator, ComponentId::RelayBs],
        }
    }

    /// Index of the first visit to `id` in the trace.
    pub fn visit_index(&self, id: ComponentId) -> Option<usize> {
        self.trace.iter().position(|&c| c == id)
    }
}

/// Per-fiber drift: a static one-way phase plus an optional linear drift rate
/// sampled at the start of each pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberDrift {
    pub phase: f64,
    /// Radians per unit time.
    pub rate: f64,
    /// One-way transit time.
    pub transit: f64,
}

impl FiberDrift {
    pub fn fixed(phase: f64) -> Self {
        Self {
            phase,
            rate: 0.0,
            transit: 0.0,
        }
    }

    fn phase_at(&self, t: f64) -> f64 {
        self.phase + self.rate * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub fiber_a: FiberDrift,
    pub fiber_b: FiberDrift,
    pub alice_encoding: Complex64,
    pub bob_encoding: Complex64,
}

impl SchemeConfig {
    pub fn new(phi_fiber_a: f64, phi_fiber_b: f64, alice_encoding: Complex64, bob_encoding: Complex64) -> Result<Self> {
        Self::with_drift(
            FiberDrift::fixed(phi_fiber_a),
            FiberDrift::fixed(phi_fiber_b),
            alice_encoding,
            bob_encoding,
        )
    }

    pub fn with_drift(
        fiber_a: FiberDrift,
        fiber_b: FiberDrift,
        alice_encoding: Complex64,
        bob_encoding: Complex64,
    ) -> Result<Self> {
        let checks = [
            ("phi_fiber_a", fiber_a.phase),
            ("phi_fiber_b", fiber_b.phase),
            ("drift_rate_a", fiber_a.rate),
            ("drift_rate_b", fiber_b.rate),
            ("alice_encoding", alice_encoding.re + alice_encoding.im),
            ("bob_encoding", bob_encoding.re + bob_encoding.im),
        ];
        for (name, value) in checks {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        for (name, value) in [("transit_a", fiber_a.transit), ("transit_b", fiber_b.transit)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "transit time must be non-negative",
                });
            }
        }
        Ok(Self {
            fiber_a,
            fiber_b,
            alice_encoding,
            bob_encoding,
        })
    }

    pub fn bob_extra_phase(&self) -> f64 {
        BOB_EXTRA_PHASE
    }

    /// Relative phase the relay should see: π/2 plus Bob's minus Alice's encoding phase.
    pub fn expected_relative_phase(&self) -> f64 {
        BOB_EXTRA_PHASE + self.bob_encoding.arg() - self.alice_encoding.arg()
    }

    /// Left-minus-right propagation phase when the fibers drift during the
    /// round trip: 4(rate_B·T_A − rate_A·T_B).
    pub fn drift_residual(&self) -> f64 {
        4.0 * (self.fiber_b.rate * self.fiber_a.transit - self.fiber_a.rate * self.fiber_b.transit)
    }
}

impl Default for SchemeConfig {
    /// No drift and identity encodings.
    fn default() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            fiber_a: FiberDrift::fixed(0.0),
            fiber_b: FiberDrift::fixed(0.0),
            alice_encoding: one,
            bob_encoding: one,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorKind {
    /// Reflects and flips H↔V.
    #[default]
    Faraday,
    /// Reflects without changing polarization.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PbsKind {
    /// Transmits H, reflects V.
    #[default]
    Standard,
    /// Transmits V, reflects H.
    Swapped,
}

impl PbsKind {
    fn passes(self, port: Port) -> Polarization {
        match (self, port) {
            (Self::Standard, Port::Transmit) | (Self::Swapped, Port::Reflect) => Polarization::H,
            _ => Polarization::V,
        }
    }
}

/// Component graph, with hooks for deliberate mutations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Layout {
    pub mirror_a: MirrorKind,
    pub mirror_b: MirrorKind,
    pub pbs_a: PbsKind,
    pub pbs_b: PbsKind,
    /// Broken control: the right pulse bypasses fiber A entirely.
    pub right_skips_fiber_a: bool,
}

impl Layout {
    pub fn broken_control() -> Self {
        Self {
            right_skips_fiber_a: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Port {
    Transmit,
    Reflect,
}

impl Port {
    fn name(self) -> &'static str {
        match self {
            Self::Transmit => "transmit",
            Self::Reflect => "reflect",
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Party {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Pbs(ComponentId, Port),
    Fiber(ComponentId),
    Modulator(ComponentId, Option<Party>),
    Mirror(ComponentId),
    RelayBs,
}

/// One visit to a user station: along the fiber, through the idle modulators,
/// off the mirror, back through the modulators (encoding when `encode` is set)
/// and along the fiber again.
fn station(fiber: ComponentId, modulator: ComponentId, mirror: ComponentId, encode: Option<Party>) -> [Step; 5] {
    [
        Step::Fiber(fiber),
        Step::Modulator(modulator, None),
        Step::Mirror(mirror),
        Step::Modulator(modulator, encode),
        Step::Fiber(fiber),
    ]
}

/// Near station first (entered through `near_pbs`), then across both PBSs to the
/// far station and back to the relay.
fn route(near: [Step; 5], near_pbs: ComponentId, far_pbs: ComponentId, far: [Step; 5]) -> Vec<Step> {
    let mut steps = vec![Step::Pbs(near_pbs, Port::Transmit)];
    steps.extend(near);
    steps.push(Step::Pbs(near_pbs, Port::Reflect));
    steps.push(Step::Pbs(far_pbs, Port::Reflect));
    steps.extend(far);
    steps.push(Step::Pbs(far_pbs, Port::Transmit));
    steps.push(Step::RelayBs);
    steps
}

fn left_route() -> Vec<Step> {
    route(
        station(ComponentId::FiberA, ComponentId::ModulatorA, ComponentId::MirrorA, None),
        ComponentId::PbsA,
        ComponentId::PbsB,
        station(
            ComponentId::FiberB,
            ComponentId::ModulatorB,
            ComponentId::MirrorB,
            Some(Party::Bob),
        ),
    )
}

fn right_route(layout: &Layout) -> Vec<Step> {
    let steps = route(
        station(ComponentId::FiberB, ComponentId::ModulatorB, ComponentId::MirrorB, None),
        ComponentId::PbsB,
        ComponentId::PbsA,
        station(
            ComponentId::FiberA,
            ComponentId::ModulatorA,
            ComponentId::MirrorA,
            Some(Party::Alice),
        ),
    );
    if layout.right_skips_fiber_a {
        steps
            .into_iter()
            .filter(|s| !matches!(s, Step::Fiber(ComponentId::FiberA)))
            .collect()
    } else {
        steps
    }
}

fn run(name: &'static str, steps: &[Step], config: &SchemeConfig, layout: &Layout) -> Result<Pulse> {
    let mut pulse = Pulse::launched();
    let mut clock = 0.0;
    for &step in steps {
        match step {
            Step::Pbs(id, port) => {
                let kind = if id == ComponentId::PbsA {
                    layout.pbs_a
                } else {
                    layout.pbs_b
                };
                let required = kind.passes(port);
                if pulse.polarization != required {
                    return Err(Error::Routing {
                        pulse: name,
                        component: id.name(),
                        polarization: pulse.polarization.name(),
                        port: port.name(),
                        required: required.name(),
                    });
                }
                pulse.trace.push(id);
            }
            Step::Fiber(id) => {
                let drift = if id == ComponentId::FiberA {
                    config.fiber_a
                } else {
                    config.fiber_b
                };
                let phi = drift.phase_at(clock);
                clock += drift.transit;
                pulse.phase += phi;
                pulse.amplitude *= Complex64::from_polar(1.0, phi);
                pulse.trace.push(id);
            }
            Step::Mirror(id) => {
                let kind = if id == ComponentId::MirrorA {
                    layout.mirror_a
                } else {
                    layout.mirror_b
                };
                if kind == MirrorKind::Faraday {
                    pulse.polarization = pulse.polarization.flipped();
                }
                pulse.trace.push(id);
            }
            Step::Modulator(id, party) => {
                match party {
                    Some(Party::Alice) => pulse.amplitude *= config.alice_encoding,
                    Some(Party::Bob) => {
                        pulse.amplitude *= config.bob_encoding * Complex64::from_polar(1.0, BOB_EXTRA_PHASE)
                    }
                    None => {}
                }
                pulse.trace.push(id);
            }
            Step::RelayBs => {
                if pulse.polarization != Polarization::H {
                    return Err(Error::Routing {
                        pulse: name,
                        component: ComponentId::RelayBs.name(),
                        polarization: pulse.polarization.name(),
                        port: "interference",
                        required: Polarization::H.name(),
                    });
                }
                pulse.trace.push(ComponentId::RelayBs);
            }
        }
    }
    Ok(pulse)
}

/// Both pulses through the intact scheme.
pub fn propagate(config: &SchemeConfig) -> Result<(Pulse, Pulse)> {
    propagate_with(config, &Layout::default())
}

/// Both pulses through a possibly mutated component graph. Returns the left
/// (Bob-encoded) and right (Alice-encoded) pulses as they reach the relay.
pub fn propagate_with(config: &SchemeConfig, layout: &Layout) -> Result<(Pulse, Pulse)> {
    let left = run("left", &left_route(), config, layout)?;
    let right = run("right", &right_route(layout), config, layout)?;
    Ok((left, right))
}

/// Phase of the left pulse relative to the right one, in (−π, π].
pub fn relative_phase(left: &Pulse, right: &Pulse) -> f64 {
    (left.amplitude * right.amplitude.conj()).arg()
}

/// Distance between two angles on the circle, in [0, π].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsmOutcome {
    pub x_minus: f64,
    pub p_plus: f64,
    pub gamma: Complex64,
}

/// Dual-homodyne mean values: x₋ = (x_A − x_B)/√2, p₊ = (p_A + p_B)/√2,
/// γ = (x₋ + i·p₊)/√2.
pub fn bsm_measure(alpha_a: Complex64, alpha_b: Complex64) -> BsmOutcome {
    let x_minus = (alpha_a.re - alpha_b.re) * FRAC_1_SQRT_2;
    let p_plus = (alpha_a.im + alpha_b.im) * FRAC_1_SQRT_2;
    BsmOutcome {
        x_minus,
        p_plus,
        gamma: Complex64::new(x_minus, p_plus) * FRAC_1_SQRT_2,
    }
}

/// Relay outcome for pulses returned by [`propagate`]: the right pulse carries
/// Alice's field and the left pulse Bob's.
pub fn bsm_from_pulses(left: &Pulse, right: &Pulse) -> BsmOutcome {
    bsm_measure(right.amplitude, left.amplitude)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlReport {
    pub max_phase_error: f64,
    pub min_phase_error: f64,
    /// Fraction of trials whose deviation exceeds the control threshold.
    pub misaligned_fraction: f64,
    /// True when the broken path is detected as drift-sensitive.
    pub detected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub trials: usize,
    pub seed: u64,
    pub max_phase_error: f64,
    /// Largest |left − right| accumulated propagation phase.
    pub max_propagation_mismatch: f64,
    pub polarization_ok: bool,
    pub control: ControlReport,
    pub pass: bool,
}

/// Random static drifts in [0, 2π) and encodings with magnitude in [0.1, 5) and
/// uniform phase. Each trial draws from its own stream.
pub fn random_config(seed: u64, trial: u64) -> SchemeConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let encoding = |rng: &mut ChaCha8Rng| Complex64::from_polar(rng.random_range(0.1..5.0), rng.random_range(-PI..PI));
    let phi_a = rng.random_range(0.0..TAU);
    let phi_b = rng.random_range(0.0..TAU);
    let alice = encoding(&mut rng);
    let bob = encoding(&mut rng);
    SchemeConfig::new(phi_a, phi_b, alice, bob).expect("sampled values are finite")
}

struct Trial {
    error: f64,
    mismatch: f64,
    polarization_ok: bool,
    control_error: f64,
}

fn trial(seed: u64, index: u64) -> Trial {
    let config = random_config(seed, index);
    let expected = config.expected_relative_phase();
    let (error, mismatch, polarization_ok) = match propagate(&config) {
        Ok((l, r)) => (
            angular_distance(relative_phase(&l, &r), expected),
            (l.phase - r.phase).abs(),
            l.polarization == Polarization::H && r.polarization == Polarization::H,
        ),
        Err(_) => (f64::INFINITY, f64::INFINITY, false),
    };
    let control_error = match propagate_with(&config, &Layout::broken_control()) {
        Ok((l, r)) => angular_distance(relative_phase(&l, &r), expected),
        Err(_) => f64::INFINITY,
    };
    Trial {
        error,
        mismatch,
        polarization_ok,
        control_error,
    }
}

/// Runs the intact scheme and the broken control over `trials` random drift
/// configurations. Passes iff every intact trial stays within 1e−12 rad of the
/// expected relative phase and the control is detected as misaligned.
pub fn check_self_alignment(trials: usize, seed: u64) -> Result<AlignmentReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            value: 0.0,
            reason: "at least one trial is required",
        });
    }
    let results: Vec<Trial> = (0..trials as u64).into_par_iter().map(|i| trial(seed, i)).collect();
    let max_phase_error = results.iter().map(|t| t.error).fold(0.0, f64::max);
    let max_propagation_mismatch = results.iter().map(|t| t.mismatch).fold(0.0, f64::max);
    let polarization_ok = results.iter().all(|t| t.polarization_ok);
    let misaligned = results.iter().filter(|t| t.control_error > CONTROL_THRESHOLD).count();
    let misaligned_fraction = misaligned as f64 / trials as f64;
    let control = ControlReport {
        max_phase_error: results.iter().map(|t| t.control_error).fold(0.0, f64::max),
        min_phase_error: results.iter().map(|t| t.control_error).fold(f64::INFINITY, f64::min),
        misaligned_fraction,
        detected: misaligned_fraction >= CONTROL_FRACTION,
    };
    Ok(AlignmentReport {
        trials,
        seed,
        max_phase_error,
        max_propagation_mismatch,
        polarization_ok,
        control,
        pass: max_phase_error <= ALIGNMENT_TOL && polarization_ok && control.detected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_drift_gives_quarter_turn() {
        let (l, r) = propagate(&SchemeConfig::default()).unwrap();
        assert_eq!(relative_phase(&l, &r), FRAC_PI_2);
        assert_eq!((l.phase, r.phase), (0.0, 0.0));
    }

    #[test]
    fn both_pulses_pick_up_both_fibers_twice() {
        let cfg = SchemeConfig::new(1.3, 0.4, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let (l, r) = propagate(&cfg).unwrap();
        let expected = 2.0 * 1.3 + 2.0 * 0.4;
        assert!((l.phase - expected).abs() < 1e-15);
        assert!((r.phase - expected).abs() < 1e-15);
        assert!(angular_distance(relative_phase(&l, &r), FRAC_PI_2) < 1e-12);
        assert_eq!(l.polarization, Polarization::H);
        assert_eq!(r.polarization, Polarization::H);
    }

    #[test]
    fn visit_order() {
        let (l, r) = propagate(&SchemeConfig::default()).unwrap();
        assert!(l.visit_index(ComponentId::MirrorA) < l.visit_index(ComponentId::MirrorB));
        assert!(r.visit_index(ComponentId::MirrorB) < r.visit_index(ComponentId::MirrorA));
        assert_eq!(l.trace.first(), Some(&ComponentId::SourcePbs));
        assert_eq!(l.trace.last(), Some(&ComponentId::RelayBs));
        let fibers = |p: &Pulse, id| p.trace.iter().filter(|&&c| c == id).count();
        for p in [&l, &r] {
            assert_eq!(fibers(p, ComponentId::FiberA), 2);
            assert_eq!(fibers(p, ComponentId::FiberB), 2);
        }
    }

    #[test]
    fn encodings_carry_through() {
        let a = c(0.3, -1.2);
        let b = c(-2.0, 0.5);
        let cfg = SchemeConfig::new(0.0, 0.0, a, b).unwrap();
        let (l, r) = propagate(&cfg).unwrap();
        assert!((r.amplitude - a).norm() < 1e-15);
        assert!((l.amplitude - b * Complex64::i()).norm() < 1e-15);
        assert!(angular_distance(relative_phase(&l, &r), cfg.expected_relative_phase()) < 1e-12);
    }

    #[test]
    fn mutations_are_detected() {
        let cfg = SchemeConfig::default();
        let mutants = [
            Layout {
                mirror_a: MirrorKind::Plain,
                ..Layout::default()
            },
            Layout {
                mirror_b: MirrorKind::Plain,
                ..Layout::default()
            },
            Layout {
                pbs_a: PbsKind::Swapped,
                ..Layout::default()
            },
            Layout {
                pbs_b: PbsKind::Swapped,
                ..Layout::default()
            },
        ];
        for layout in mutants {
            let err = propagate_with(&cfg, &layout).unwrap_err();
            assert!(matches!(err, Error::Routing { .. }), "{layout:?}: {err}");
        }
    }

    #[test]
    fn broken_control_depends_on_fiber_a() {
        let cfg = SchemeConfig::new(0.7, 0.2, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let (l, r) = propagate_with(&cfg, &Layout::broken_control()).unwrap();
        assert!((angular_distance(relative_phase(&l, &r), FRAC_PI_2) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn drift_rate_residual() {
        let fa = FiberDrift {
            phase: 0.3,
            rate: 0.02,
            transit: 1.5,
        };
        let fb = FiberDrift {
            phase: 1.1,
            rate: -0.01,
            transit: 0.8,
        };
        let cfg = SchemeConfig::with_drift(fa, fb, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let (l, r) = propagate(&cfg).unwrap();
        assert!((l.phase - r.phase - cfg.drift_residual()).abs() < 1e-14);
        assert!((cfg.drift_residual() - 4.0 * (-0.01 * 1.5 - 0.02 * 0.8)).abs() < 1e-15);
    }

    #[test]
    fn bsm_examples() {
        let o = bsm_measure(c(1.0, 2.0), c(1.0, -2.0));
        assert_eq!((o.x_minus, o.p_plus, o.gamma), (0.0, 0.0, c(0.0, 0.0)));
        let alpha = c(0.8, -1.7);
        let o = bsm_measure(alpha, c(0.0, 0.0));
        assert!((o.gamma - alpha / 2.0).norm() < 1e-15);
        let o = bsm_measure(c(3.0, 1.0), c(1.0, 1.0));
        assert!((o.x_minus - 2f64.sqrt()).abs() < 1e-15);
        assert!((o.p_plus - 2f64.sqrt()).abs() < 1e-15);
        assert!((o.gamma - c(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn self_alignment_small_run() {
        let rep = check_self_alignment(500, 3).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.control.detected);
        assert_eq!(rep, check_self_alignment(500, 3).unwrap());
        assert!(check_self_alignment(0, 3).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bsm_is_linear(v in proptest::array::uniform8(-10.0f64..10.0)) {
                let (a1, a2, b1, b2) = (c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7]));
                let sum = bsm_measure(a1 + a2, b1 + b2);
                let (p, q) = (bsm_measure(a1, b1), bsm_measure(a2, b2));
                prop_assert!((sum.x_minus - p.x_minus - q.x_minus).abs() < 1e-12);
                prop_assert!((sum.p_plus - p.p_plus - q.p_plus).abs() < 1e-12);
                prop_assert!((sum.gamma - p.gamma - q.gamma).norm() < 1e-12);
            }

            #[test]
            fn common_path_invariance(pa in 0.0..TAU, pb in 0.0..TAU) {
                let (l, r) = propagate(&SchemeConfig::new(pa, pb, c(1.0, 0.0), c(1.0, 0.0)).unwrap()).unwrap();
                prop_assert!((l.phase - r.phase).abs() <= 1e-12);
            }
        }
    }
}
