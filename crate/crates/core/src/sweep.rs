//! Rate surfaces over (τ_A, τ_B), relay-placement scans and tabular export.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{chi_equivalent, LinkPair, ProtocolParams};
use crate::keyrate::{key_rate_min_chi, key_rate_min_thermal, KeyRateReport};

pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.2;
pub const CSV_HEADER: [&str; 5] = ["tau_a", "tau_b", "chi", "rate", "secure"];

/// τ = 10^(−loss·d/10).
pub fn distance_to_tau(d_km: f64, loss_db_per_km: f64) -> Result<f64> {
    if !(d_km >= 0.0 && d_km.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "distance",
            value: d_km,
            reason: "distance must be non-negative",
        });
    }
    if !(loss_db_per_km > 0.0 && loss_db_per_km.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "loss",
            value: loss_db_per_km,
            reason: "fiber loss must be positive",
        });
    }
    Ok(10f64.powf(-loss_db_per_km * d_km / 10.0))
}

/// Evenly spaced transmissivities from `start` to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        for (name, value) in [("axis start", start), ("axis end", end)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "transmissivity must lie in (0, 1]",
                });
            }
        }
        if steps < 2 {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: steps as f64,
                reason: "an axis needs at least 2 steps",
            });
        }
        Ok(Self { start, end, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.end
                } else {
                    self.start + (self.end - self.start) * k as f64 / last
                }
            })
            .collect()
    }
}

/// What Alice and Bob know about the channel noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Knowledge {
    /// χ = 2(τ_A+τ_B)/(τ_Aτ_B) + ε, rate minimized at fixed χ.
    ChiFromEpsilon,
    /// Known thermal ancillas, rate minimized over the correlations.
    Thermal { omega_a: f64, omega_b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub tau_a: Axis,
    pub tau_b: Axis,
    pub protocol: ProtocolParams,
    pub knowledge: Knowledge,
    pub format: Format,
}

impl Default for SweepConfig {
    /// [0.5, 1]² at 51 × 51 with ξ = 0.97, φ = 60, ε = 0.01.
    fn default() -> Self {
        let axis = Axis {
            start: 0.5,
            end: 1.0,
            steps: 51,
        };
        Self {
            tau_a: axis,
            tau_b: axis,
            protocol: ProtocolParams::default(),
            knowledge: Knowledge::ChiFromEpsilon,
            format: Format::Csv,
        }
    }
}

/// One lattice cell. Cells whose rate is undefined keep `rate = None` and carry
/// the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub tau_a: f64,
    pub tau_b: f64,
    pub chi: Option<f64>,
    pub rate: Option<f64>,
    pub secure: bool,
    pub error: Option<String>,
}

/// Minimized rate for one (τ_A, τ_B) under a knowledge model.
pub fn cell_report(protocol: &ProtocolParams, knowledge: Knowledge, tau_a: f64, tau_b: f64) -> Result<KeyRateReport> {
    let link = LinkPair::new(tau_a, tau_b)?;
    match knowledge {
        Knowledge::ChiFromEpsilon => key_rate_min_chi(protocol, &link, chi_equivalent(&link, protocol.epsilon())),
        Knowledge::Thermal { omega_a, omega_b } => key_rate_min_thermal(protocol, &link, omega_a, omega_b),
    }
}

pub fn evaluate_cell(protocol: &ProtocolParams, knowledge: Knowledge, tau_a: f64, tau_b: f64) -> SweepRecord {
    match cell_report(protocol, knowledge, tau_a, tau_b) {
        Ok(r) => SweepRecord {
            tau_a,
            tau_b,
            chi: Some(r.chi),
            rate: Some(r.rate),
            secure: r.secure,
            error: None,
        },
        Err(e) => SweepRecord {
            tau_a,
            tau_b,
            chi: match knowledge {
                Knowledge::ChiFromEpsilon => LinkPair::new(tau_a, tau_b)
                    .ok()
                    .map(|l| chi_equivalent(&l, protocol.epsilon())),
                Knowledge::Thermal { .. } => None,
            },
            rate: None,
            secure: false,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates every lattice cell, τ_A outer and τ_B inner, both ascending in
/// axis order. Cells are computed in parallel; the output order is fixed.
pub fn run_sweep(config: &SweepConfig) -> Vec<SweepRecord> {
    let cells: Vec<(f64, f64)> = config
        .tau_a
        .values()
        .into_iter()
        .flat_map(|a| config.tau_b.values().into_iter().map(move |b| (a, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(a, b)| evaluate_cell(&config.protocol, config.knowledge, a, b))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelayScan {
    pub total: f64,
    pub records: Vec<SweepRecord>,
    /// Index of the largest defined rate (first one on ties).
    pub argmax: Option<usize>,
}

/// Scans the contour τ_A·τ_B = `total` for τ_A from `total` (relay at Bob) to 1
/// (relay at Alice), with χ from ε.
pub fn relay_scan(total: f64, protocol: &ProtocolParams, steps: usize) -> Result<RelayScan> {
    if !(total > 0.0 && total <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "total",
            value: total,
            reason: "total transmissivity must lie in (0, 1]",
        });
    }
    let axis = Axis::new(total, 1.0, steps)?;
    let records: Vec<SweepRecord> = axis
        .values()
        .par_iter()
        .map(|&a| evaluate_cell(protocol, Knowledge::ChiFromEpsilon, a, (total / a).min(1.0)))
        .collect();
    let argmax = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.rate.map(|v| (i, v)))
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i);
    Ok(RelayScan { total, records, argmax })
}

/// Nine significant digits, printf-`%.9g` style.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_sig9(x: f64) -> f64 {
    format_sig9(x).parse().expect("formatted float parses")
}

fn opt_field(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

/// Serializes records. CSV has the header `tau_a,tau_b,chi,rate,secure` and
/// leaves undefined values empty; JSON is an array of objects with the same keys
/// plus `error`. Numbers carry nine significant digits in both.
pub fn export<W: Write>(records: &[SweepRecord], format: Format, writer: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyDomain("no records to export"));
    }
    let io = |e: std::io::Error| Error::Io {
        path: "<stream>".into(),
        source: e,
    };
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            let csv_err = |e: csv::Error| Error::Parse(e.to_string());
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in records {
                w.write_record([
                    format_sig9(r.tau_a),
                    format_sig9(r.tau_b),
                    opt_field(r.chi),
                    opt_field(r.rate),
                    r.secure.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io)
        }
        Format::Json => {
            let rounded: Vec<SweepRecord> = records
                .iter()
                .map(|r| SweepRecord {
                    tau_a: round_sig9(r.tau_a),
                    tau_b: round_sig9(r.tau_b),
                    chi: r.chi.map(round_sig9),
                    rate: r.rate.map(round_sig9),
                    secure: r.secure,
                    error: r.error.clone(),
                })
                .collect();
            let mut writer = writer;
            serde_json::to_writer_pretty(&mut writer, &rounded).map_err(|e| Error::Parse(e.to_string()))?;
            writer.write_all(b"\n").map_err(io)
        }
    }
}

pub fn export_string(records: &[SweepRecord], format: Format) -> Result<String> {
    let mut buf = Vec::new();
    export(records, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("exporters emit UTF-8"))
}

pub fn export_to_path(records: &[SweepRecord], format: Format, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    export(records, format, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

fn parse_f64(field: &str, name: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("bad {name} value {field:?}")))
}

fn parse_opt(field: &str, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, name).map(Some)
    }
}

pub fn parse(input: &str, format: Format) -> Result<Vec<SweepRecord>> {
    match format {
        Format::Json => serde_json::from_str(input).map_err(|e| Error::Parse(e.to_string())),
        Format::Csv => {
            let mut reader = csv::Reader::from_reader(input.as_bytes());
            let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?;
            if headers.iter().ne(CSV_HEADER) {
                return Err(Error::Parse(format!("unexpected header {headers:?}")));
            }
            reader
                .records()
                .map(|row| {
                    let row = row.map_err(|e| Error::Parse(e.to_string()))?;
                    let secure = match &row[4] {
                        "true" => true,
                        "false" => false,
                        other => return Err(Error::Parse(format!("bad secure value {other:?}"))),
                    };
                    Ok(SweepRecord {
                        tau_a: parse_f64(&row[0], "tau_a")?,
                        tau_b: parse_f64(&row[1], "tau_b")?,
                        chi: parse_opt(&row[2], "chi")?,
                        rate: parse_opt(&row[3], "rate")?,
                        secure,
                        error: None,
                    })
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to_tau(0.0, 0.2).unwrap(), 1.0);
        assert!((distance_to_tau(50.0, 0.2).unwrap() - 0.1).abs() < 1e-15);
        assert!((distance_to_tau(15.0, 0.2).unwrap() - 0.501_187_233_627_272_3).abs() < 1e-15);
        assert!(distance_to_tau(-1.0, 0.2).is_err());
        assert!(distance_to_tau(1.0, 0.0).is_err());
    }

    #[test]
    fn axis_values() {
        let a = Axis::new(0.5, 1.0, 51).unwrap();
        let v = a.values();
        assert_eq!(v.len(), 51);
        assert_eq!((v[0], v[50]), (0.5, 1.0));
        assert!(Axis::new(0.0, 1.0, 5).is_err());
        assert!(Axis::new(0.5, 1.1, 5).is_err());
        assert!(Axis::new(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn corner_sweep() {
        let axis = Axis::new(0.95, 0.98, 2).unwrap();
        let cfg = SweepConfig {
            tau_a: axis,
            tau_b: axis,
            ..SweepConfig::default()
        };
        let recs = run_sweep(&cfg);
        assert_eq!(recs.len(), 4);
        assert_eq!((recs[0].tau_a, recs[0].tau_b), (0.95, 0.95));
        assert_eq!((recs[1].tau_a, recs[1].tau_b), (0.95, 0.98));
        assert!((recs[0].rate.unwrap() - 1.414_760_081_430_468_4).abs() < 1e-12);
    }

    #[test]
    fn sweep_matches_single_calls() {
        let cfg = SweepConfig {
            tau_a: Axis::new(0.5, 1.0, 7).unwrap(),
            tau_b: Axis::new(0.3, 1.0, 5).unwrap(),
            ..SweepConfig::default()
        };
        for r in run_sweep(&cfg) {
            let fresh = cell_report(&cfg.protocol, cfg.knowledge, r.tau_a, r.tau_b).unwrap();
            assert_eq!(r.rate.unwrap().to_bits(), fresh.rate.to_bits());
        }
    }

    #[test]
    fn error_cells_do_not_abort() {
        let cfg = SweepConfig {
            tau_a: Axis::new(0.9, 1.0, 3).unwrap(),
            tau_b: Axis::new(0.9, 1.0, 3).unwrap(),
            knowledge: Knowledge::Thermal {
                omega_a: 1.0,
                omega_b: 1.0,
            },
            ..SweepConfig::default()
        };
        let recs = run_sweep(&cfg);
        assert_eq!(recs.len(), 9);
        assert!(recs.iter().all(|r| r.rate.is_some() || r.error.is_some()));
    }

    #[test]
    fn relay_scan_prefers_alice_end() {
        let scan = relay_scan(0.588, &ProtocolParams::default(), 101).unwrap();
        assert_eq!(scan.argmax, Some(100));
        let end = scan.records.last().unwrap();
        assert_eq!(end.tau_a, 1.0);
        let first = &scan.records[0];
        assert_eq!((first.tau_a, first.tau_b), (0.588, 1.0));
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(4.0), "4");
        assert_eq!(format_sig9(0.379_392_191_958_814), "0.379392192");
        assert_eq!(format_sig9(-1.088_030_056_295_368), "-1.08803006");
        assert_eq!(format_sig9(123_456_789_012.0), "1.23456789e+11");
        assert_eq!(format_sig9(1.5e-7), "1.5e-07");
        assert_eq!(format_sig9(0.0001), "0.0001");
        assert_eq!(format_sig9(999_999_999.6), "1e+09");
    }

    #[test]
    fn single_record_csv() {
        let rec = SweepRecord {
            tau_a: 1.0,
            tau_b: 1.0,
            chi: Some(4.0),
            rate: Some(3.812_3),
            secure: true,
            error: None,
        };
        let out = export_string(&[rec], Format::Csv).unwrap();
        assert_eq!(out, "tau_a,tau_b,chi,rate,secure\n1,1,4,3.8123,true\n");
    }

    #[test]
    fn round_trips_are_byte_identical() {
        let mut recs = run_sweep(&SweepConfig {
            tau_a: Axis::new(0.2, 1.0, 9).unwrap(),
            tau_b: Axis::new(0.2, 1.0, 9).unwrap(),
            ..SweepConfig::default()
        });
        recs.push(SweepRecord {
            tau_a: 0.5,
            tau_b: 0.5,
            chi: None,
            rate: None,
            secure: false,
            error: Some("boom".into()),
        });
        for format in [Format::Csv, Format::Json] {
            let once = export_string(&recs, format).unwrap();
            let twice = export_string(&parse(&once, format).unwrap(), format).unwrap();
            assert_eq!(once, twice);
        }
        assert!(export_string(&[], Format::Csv).is_err());
    }

    #[test]
    fn default_lattice_line_count() {
        let recs = run_sweep(&SweepConfig::default());
        let csv = export_string(&recs, Format::Csv).unwrap();
        assert_eq!(csv.lines().count(), 2602);
    }
}
