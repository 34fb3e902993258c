//! Report rows and their CSV / JSON encodings.
//!
//! Every row passes iff `value <= bound`, so the flag can be recomputed from
//! the row itself. Rows that only record a quantity carry `bound = value`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Format;

pub const CSV_HEADER: [&str; 10] = [
    "experiment",
    "n",
    "statistic",
    "value",
    "ci_low",
    "ci_high",
    "bound",
    "pass",
    "seed",
    "selector_id",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub n: u64,
    pub statistic: String,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub pass: bool,
    pub seed: u64,
    pub selector_id: String,
}

impl ReportRow {
    /// Exact value checked against `bound`.
    pub fn check(experiment: &str, n: usize, statistic: impl Into<String>, value: f64, bound: f64, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            n: n as u64,
            statistic: statistic.into(),
            value,
            ci_low: value,
            ci_high: value,
            bound,
            pass: value <= bound,
            seed,
            selector_id: String::new(),
        }
    }

    /// A recorded quantity with no bound of its own.
    pub fn record(experiment: &str, n: usize, statistic: impl Into<String>, value: f64, seed: u64) -> Self {
        Self::check(experiment, n, statistic, value, value, seed)
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci_low = lo.min(self.value);
        self.ci_high = hi.max(self.value);
        self
    }

    pub fn with_selector(mut self, id: impl Into<String>) -> Self {
        self.selector_id = id.into();
        self
    }

    pub fn is_finite(&self) -> bool {
        [self.value, self.ci_low, self.ci_high, self.bound]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("no rows to emit")]
    Empty,
    #[error("row {index} ({statistic}) has a non-finite numeric field")]
    NonFinite { index: usize, statistic: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `printf("%.17g")`: 17 significant digits, trailing zeros dropped,
/// exponent form outside `[1e-4, 1e17)`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn validate(rows: &[ReportRow]) -> Result<(), EmitError> {
    if rows.is_empty() {
        return Err(EmitError::Empty);
    }
    if let Some((index, r)) = rows.iter().enumerate().find(|(_, r)| !r.is_finite()) {
        return Err(EmitError::NonFinite {
            index,
            statistic: r.statistic.clone(),
        });
    }
    Ok(())
}

pub fn to_csv(rows: &[ReportRow]) -> Result<Vec<u8>, EmitError> {
    validate(rows)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.n.to_string(),
            r.statistic.clone(),
            format_g17(r.value),
            format_g17(r.ci_low),
            format_g17(r.ci_high),
            format_g17(r.bound),
            r.pass.to_string(),
            r.seed.to_string(),
            r.selector_id.clone(),
        ])?;
    }
    w.into_inner().map_err(|e| EmitError::Io(e.into_error()))
}

pub fn to_json(rows: &[ReportRow]) -> Result<Vec<u8>, EmitError> {
    validate(rows)?;
    let mut out = serde_json::to_vec_pretty(rows)?;
    out.push(b'\n');
    Ok(out)
}

pub fn encode(rows: &[ReportRow], format: Format) -> Result<Vec<u8>, EmitError> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    }
}

/// Writes `rows` to `out`.
pub fn emit<W: Write>(rows: &[ReportRow], format: Format, out: &mut W) -> Result<(), EmitError> {
    out.write_all(&encode(rows, format)?)?;
    out.flush()?;
    Ok(())
}

/// Reads rows back from CSV produced by [`to_csv`].
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<ReportRow>, EmitError> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}
