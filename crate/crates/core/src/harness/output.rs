use std::io::Write;

use serde::Serialize;

use super::experiment::{summarize, ResultRow, SnrSummary};
use super::scenario::Scenario;
use super::HarnessResult;

pub const CSV_COLUMNS: [&str; 10] = [
    "snr_db",
    "interval",
    "algorithm",
    "objective",
    "spectral_efficiency",
    "upper_bound",
    "ratio",
    "h_evaluations",
    "runtime_ms",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// `%.9g`: nine significant digits, trailing zeros dropped, exponent form
/// below 1e-4 and from 1e9 on.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    trim_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

/// Header plus one record per row.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> HarnessResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let record = |e: csv::Error| std::io::Error::other(e);
    w.write_record(CSV_COLUMNS).map_err(record)?;
    for r in rows {
        w.write_record([
            format_sig9(r.snr_db),
            r.interval.to_string(),
            r.algorithm.name().to_string(),
            format_sig9(r.objective),
            format_sig9(r.spectral_efficiency),
            opt(r.upper_bound),
            opt(r.ratio),
            r.h_evaluations.to_string(),
            opt(r.runtime_ms),
            r.seed.to_string(),
        ])
        .map_err(record)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    channel_model: &'static str,
    noise: &'static str,
    spectral_efficiency: &'static str,
    resource_block: &'static str,
    alphabet: &'static str,
    pf_tau: f64,
    scenario: &'a Scenario,
}

#[derive(Serialize)]
struct Document<'a> {
    metadata: Metadata<'a>,
    summary: Vec<SnrSummary>,
    rows: &'a [ResultRow],
}

/// Rows together with run metadata and per-SNR averages.
pub fn write_json<W: Write>(
    scenario: &Scenario,
    rows: &[ResultRow],
    mut out: W,
) -> HarnessResult<()> {
    let doc = Document {
        metadata: Metadata {
            channel_model: "i.i.d. Rayleigh, CN(0, snr) entries, fresh draw per interval",
            noise: "identity covariance",
            spectral_efficiency: "sum of served rates / number of RBs (bits per RB per use)",
            resource_block: "atomic allocation unit; subcarrier count not modelled",
            alphabet: scenario.alphabet.name(),
            pf_tau: scenario.pf_tau,
            scenario,
        },
        summary: summarize(rows),
        rows,
    };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(std::io::Error::other)?;
    writeln!(out)?;
    Ok(())
}
