//! `cvmdi`: key rates, sweeps, attack search, proof verification and the optics
//! simulation from the command line.
//!
//! Machine-readable output goes to stdout (or `--output`), a one-line summary to
//! stderr. Exit status: 0 on success, 1 on a domain error or a failed
//! certification, 2 on invalid flags.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cvmdi::attack::{min_rate_brute, AttackGrid};
use cvmdi::gaussian::{chi_equivalent, LinkPair, ProtocolParams};
use cvmdi::keyrate::{key_rate_min_chi, key_rate_min_thermal};
use cvmdi::optics::check_self_alignment;
use cvmdi::proof::run_suite;
use cvmdi::sweep::{export_string, relay_scan, run_sweep, Axis, Format, Knowledge, SweepConfig};
use cvmdi::Error;

const THREADS_ENV: &str = "CVMDI_THREADS";

#[derive(Parser)]
#[command(
    name = "cvmdi",
    version,
    about = "Security analysis for CV-MDI-QKD under correlated Gaussian attacks"
)]
struct Cli {
    /// Write the machine-readable output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimized secret-key rate for one link pair, as JSON.
    Rate(RateArgs),
    /// Rate surface over a (tau_a, tau_b) lattice, as CSV or JSON.
    Sweep(SweepArgs),
    /// Rates along the contour tau_a * tau_b = total.
    RelayScan(RelayScanArgs),
    /// Brute-force search for Eve's optimal correlations at fixed thermal noise.
    AttackOpt(AttackArgs),
    /// Numerical certification suite for the rate-minimization lemmas.
    Verify(VerifyArgs),
    /// Phase self-alignment check of the plug-and-play optical scheme.
    OpticsSim(OpticsArgs),
}

#[derive(Args, Clone, Copy)]
struct ProtocolArgs {
    /// Reconciliation efficiency, in (0, 1].
    #[arg(long, default_value_t = 0.97, value_parser = unit_interval)]
    xi: f64,
    /// Modulation variance in shot-noise units, > 0.
    #[arg(long, default_value_t = 60.0, value_parser = positive)]
    phi: f64,
    /// Excess noise in shot-noise units, >= 0.
    #[arg(long, default_value_t = 0.01, value_parser = non_negative)]
    epsilon: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KnowledgeArg {
    /// Equivalent noise chi from epsilon; rate minimized at fixed chi.
    Chi,
    /// Known thermal ancillas; rate minimized over their correlations.
    Thermal,
}

#[derive(Args, Clone, Copy)]
struct KnowledgeArgs {
    #[arg(long, value_enum, default_value_t = KnowledgeArg::Chi)]
    knowledge: KnowledgeArg,
    /// Thermal variance of Eve's ancilla toward Alice, >= 1.
    #[arg(long, value_parser = at_least_one, required_if_eq("knowledge", "thermal"))]
    omega_a: Option<f64>,
    /// Thermal variance of Eve's ancilla toward Bob, >= 1.
    #[arg(long, value_parser = at_least_one, required_if_eq("knowledge", "thermal"))]
    omega_b: Option<f64>,
}

impl KnowledgeArgs {
    fn model(&self) -> Knowledge {
        match self.knowledge {
            KnowledgeArg::Chi => Knowledge::ChiFromEpsilon,
            KnowledgeArg::Thermal => Knowledge::Thermal {
                omega_a: self.omega_a.expect("required by clap"),
                omega_b: self.omega_b.expect("required by clap"),
            },
        }
    }
}

#[derive(Args)]
struct RateArgs {
    /// Alice-relay transmissivity, in (0, 1].
    #[arg(long, value_parser = unit_interval)]
    tau_a: f64,
    /// Bob-relay transmissivity, in (0, 1].
    #[arg(long, value_parser = unit_interval)]
    tau_b: f64,
    /// Override the equivalent noise instead of deriving it from epsilon.
    #[arg(long, value_parser = positive, conflicts_with = "omega_a")]
    chi: Option<f64>,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    knowledge: KnowledgeArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    tau_a_min: f64,
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    tau_a_max: f64,
    #[arg(long, default_value_t = 51, value_parser = clap::value_parser!(u32).range(2..))]
    tau_a_steps: u32,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    tau_b_min: f64,
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    tau_b_max: f64,
    #[arg(long, default_value_t = 51, value_parser = clap::value_parser!(u32).range(2..))]
    tau_b_steps: u32,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    knowledge: KnowledgeArgs,
}

#[derive(Args)]
struct RelayScanArgs {
    /// Total transmissivity tau_a * tau_b, in (0, 1].
    #[arg(long, value_parser = unit_interval)]
    total: f64,
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
    steps: u32,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[command(flatten)]
    protocol: ProtocolArgs,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, value_parser = unit_interval)]
    tau_a: f64,
    #[arg(long, value_parser = unit_interval)]
    tau_b: f64,
    #[arg(long, value_parser = at_least_one)]
    omega_a: f64,
    #[arg(long, value_parser = at_least_one)]
    omega_b: f64,
    /// Points per axis of the coarse lattice (odd, >= 3).
    #[arg(long, default_value_t = 201, value_parser = odd_grid)]
    grid: u32,
    /// Points per axis of the refinement lattice (odd, >= 3); 0 disables refinement.
    #[arg(long, default_value_t = 801, value_parser = odd_grid_or_zero)]
    refine: u32,
    #[command(flatten)]
    protocol: ProtocolArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Random scenarios per check.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    scenarios: u32,
    /// Profile samples per scenario.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(3..))]
    samples: u32,
}

#[derive(Args)]
struct OpticsArgs {
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    parse_f64(s).and_then(|v| {
        if v > 0.0 && v <= 1.0 {
            Ok(v)
        } else {
            Err("must lie in (0, 1]".into())
        }
    })
}

fn positive(s: &str) -> Result<f64, String> {
    parse_f64(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err("must be positive".into()) })
}

fn non_negative(s: &str) -> Result<f64, String> {
    parse_f64(s).and_then(|v| {
        if v >= 0.0 {
            Ok(v)
        } else {
            Err("must be non-negative".into())
        }
    })
}

fn at_least_one(s: &str) -> Result<f64, String> {
    parse_f64(s).and_then(|v| {
        if v >= 1.0 {
            Ok(v)
        } else {
            Err("must be at least 1".into())
        }
    })
}

fn odd_grid(s: &str) -> Result<u32, String> {
    let n: u32 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if n >= 3 && n % 2 == 1 {
        Ok(n)
    } else {
        Err("must be odd and at least 3".into())
    }
}

fn odd_grid_or_zero(s: &str) -> Result<u32, String> {
    if s == "0" {
        Ok(0)
    } else {
        odd_grid(s)
    }
}

/// What went wrong, and which exit status it maps to.
enum Failure {
    /// A flag or environment value was rejected before any computation.
    Flag(String),
    /// A module reported a domain error, or a certification did not pass.
    Domain(String),
}

impl Failure {
    fn flag_from(err: Error) -> Self {
        match &err {
            Error::InvalidParameter { name, .. } => Self::Flag(format!("--{}: {err}", name.replace('_', "-"))),
            _ => Self::Flag(err.to_string()),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self::Domain(err.to_string())
    }
}

/// Output of a subcommand: the document body, a summary line and whether the
/// command's verdict (if any) passed.
struct Outcome {
    body: String,
    summary: String,
    pass: bool,
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn protocol(args: &ProtocolArgs) -> Result<ProtocolParams, Failure> {
    ProtocolParams::new(args.xi, args.phi, args.epsilon).map_err(Failure::flag_from)
}

fn rate(args: &RateArgs) -> Result<Outcome, Failure> {
    let protocol = protocol(&args.protocol)?;
    let link = LinkPair::new(args.tau_a, args.tau_b).map_err(Failure::flag_from)?;
    let report = match args.knowledge.model() {
        Knowledge::ChiFromEpsilon => {
            let chi = args.chi.unwrap_or_else(|| chi_equivalent(&link, protocol.epsilon()));
            key_rate_min_chi(&protocol, &link, chi)?
        }
        Knowledge::Thermal { omega_a, omega_b } => key_rate_min_thermal(&protocol, &link, omega_a, omega_b)?,
    };
    Ok(Outcome {
        body: json(&report),
        summary: format!(
            "tau_a={} tau_b={} chi={:.6} rate={:.6} bits/use ({})",
            args.tau_a,
            args.tau_b,
            report.chi,
            report.rate,
            if report.secure { "secure" } else { "insecure" }
        ),
        pass: true,
    })
}

fn sweep(args: &SweepArgs) -> Result<Outcome, Failure> {
    let config = SweepConfig {
        tau_a: Axis::new(args.tau_a_min, args.tau_a_max, args.tau_a_steps as usize).map_err(Failure::flag_from)?,
        tau_b: Axis::new(args.tau_b_min, args.tau_b_max, args.tau_b_steps as usize).map_err(Failure::flag_from)?,
        protocol: protocol(&args.protocol)?,
        knowledge: args.knowledge.model(),
        format: args.format.into(),
    };
    let records = run_sweep(&config);
    let secure = records.iter().filter(|r| r.secure).count();
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    Ok(Outcome {
        body: export_string(&records, config.format)?,
        summary: format!("{} cells, {secure} secure, {failed} undefined", records.len()),
        pass: true,
    })
}

fn relay(args: &RelayScanArgs) -> Result<Outcome, Failure> {
    let protocol = protocol(&args.protocol)?;
    let scan = relay_scan(args.total, &protocol, args.steps as usize).map_err(Failure::flag_from)?;
    let summary = match scan.argmax {
        Some(i) => {
            let r = &scan.records[i];
            format!(
                "argmax at tau_a={:.6} tau_b={:.6} rate={:.6}",
                r.tau_a,
                r.tau_b,
                r.rate.expect("argmax has a rate")
            )
        }
        None => "no defined rate on the contour".into(),
    };
    let body = match args.format {
        FormatArg::Json => json(&scan),
        FormatArg::Csv => export_string(&scan.records, Format::Csv)?,
    };
    Ok(Outcome {
        body,
        summary,
        pass: true,
    })
}

fn attack(args: &AttackArgs) -> Result<Outcome, Failure> {
    let protocol = protocol(&args.protocol)?;
    let link = LinkPair::new(args.tau_a, args.tau_b).map_err(Failure::flag_from)?;
    let refine = (args.refine > 0).then_some(args.refine as usize);
    let grid = AttackGrid::new(args.grid as usize, refine).map_err(Failure::flag_from)?;
    let report = min_rate_brute(&protocol, &link, args.omega_a, args.omega_b, grid)?;
    Ok(Outcome {
        body: json(&report),
        summary: format!(
            "argmin (g, g')=({:.6}, {:.6}) rate={:.9} analytic={:.9} gap={:.3e}",
            report.g_star, report.g_prime_star, report.rate_star, report.analytic_rate, report.gap
        ),
        pass: true,
    })
}

fn verify(args: &VerifyArgs) -> Result<Outcome, Failure> {
    let report = run_suite(args.seed, args.scenarios as usize, args.samples as usize);
    let summary = report
        .checks
        .iter()
        .map(|c| format!("{} {}/{}", c.name, c.passed, c.runs))
        .chain(std::iter::once(format!(
            "classify-lattice {}/{}",
            report.classify_lattice.agreed, report.classify_lattice.points
        )))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        body: json(&report),
        summary: format!("{}: {summary}", if report.pass { "PASS" } else { "FAIL" }),
        pass: report.pass,
    })
}

fn optics(args: &OpticsArgs) -> Result<Outcome, Failure> {
    let report = check_self_alignment(args.trials as usize, args.seed)?;
    Ok(Outcome {
        body: json(&report),
        summary: format!(
            "{}: max phase error {:.3e} rad over {} trials; broken control misaligned in {:.2}% of trials",
            if report.pass { "PASS" } else { "FAIL" },
            report.max_phase_error,
            report.trials,
            100.0 * report.control.misaligned_fraction
        ),
        pass: report.pass,
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Flag(format!("{THREADS_ENV}: `{raw}` is not a positive thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Flag(format!("{THREADS_ENV}: {e}")))
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Rate(a) => rate(a),
        Command::Sweep(a) => sweep(a),
        Command::RelayScan(a) => relay(a),
        Command::AttackOpt(a) => attack(a),
        Command::Verify(a) => verify(a),
        Command::OpticsSim(a) => optics(a),
    }
}

fn emit(cli: &Cli, body: &str) -> Result<(), String> {
    match &cli.output {
        Some(path) => fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| format!("cannot write to stdout: {e}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Err(e) = emit(&cli, &outcome.body) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            eprintln!("{}", outcome.summary);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Flag(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
