//! Text output of sweep tables: `csv`, `json` and two-column `dat`.
//!
//! All numbers are written with 9 significant digits, and sweep tables are
//! quantized to the same precision, so every format carries identical values.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sweep::SweepTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Dat,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "dat" => Ok(Format::Dat),
            other => Err(Error::Validation(format!(
                "unknown output format `{other}` (expected csv, json or dat)"
            ))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Dat => "dat",
        }
    }
}

/// One output document. Multi-curve `dat` output yields one per curve, each
/// with a suffix such as `_sf0.1` to splice into the file name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFile {
    pub suffix: Option<String>,
    pub contents: String,
}

/// `x` with 9 significant digits, fixed-point for moderate magnitudes.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Rounds `x` to the value its 9-digit text parses back to.
pub fn quantize(x: f64) -> f64 {
    if x.is_finite() {
        format_number(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

pub fn emit(table: &SweepTable, format: Format) -> Result<Vec<EmittedFile>> {
    match format {
        Format::Csv => Ok(vec![EmittedFile { suffix: None, contents: to_csv(table) }]),
        Format::Json => {
            let mut contents = serde_json::to_string_pretty(table)
                .map_err(|e| Error::Numeric(format!("json encoding failed: {e}")))?;
            contents.push('\n');
            Ok(vec![EmittedFile { suffix: None, contents }])
        }
        Format::Dat => Ok(to_dat(table)),
    }
}

fn to_csv(table: &SweepTable) -> String {
    let meta = &table.metadata;
    let mut out = String::new();
    let _ = writeln!(out, "# dipole-cost {}", meta.version);
    let _ = writeln!(out, "# target={}", meta.target);
    let _ = writeln!(out, "# variable={}", meta.variable);
    if let Some(c) = &meta.curve_variable {
        let _ = writeln!(out, "# curve_variable={c}");
    }
    for (k, v) in &meta.params {
        let _ = writeln!(out, "# {k}={v}");
    }
    if let Some(seed) = meta.seed {
        let _ = writeln!(out, "# mc_seed={seed}");
    }
    for d in &meta.dropped {
        let curve = d.curve.map(|c| format!(" curve={}", format_number(c))).unwrap_or_default();
        let _ = writeln!(out, "# dropped x={}{curve}: {}", format_number(d.x), d.reason);
    }
    let _ = writeln!(out, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn to_dat(table: &SweepTable) -> Vec<EmittedFile> {
    let y = table.first_result_column();
    let curve_name = table.metadata.curve_variable.clone().unwrap_or_default();
    table
        .curves()
        .into_iter()
        .map(|(curve, rows)| {
            let mut contents = String::new();
            for row in rows {
                let _ = writeln!(contents, "{} {}", format_number(row[0]), format_number(row[y]));
            }
            EmittedFile {
                suffix: curve.map(|c| format!("_{curve_name}{}", format_number(c))),
                contents,
            }
        })
        .collect()
}

pub fn parse_json(text: &str) -> Result<SweepTable> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid sweep json: {e}")))
}
