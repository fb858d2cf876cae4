//! File formats. Tables are CSV with `# `-prefixed provenance lines;
//! everything else is pretty-printed JSON wrapped in a [`Document`].
//! Floats in tables carry 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelFile, SectorLabel};
use crate::scan::{CircleSample, FoldMethod, Zero};

/// A structured output file: payload plus the provenance shared by every
/// file of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub digest: String,
    pub model: ModelFile,
    pub payload: T,
}

pub fn write_json<T: Serialize>(path: &Path, doc: &Document<T>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Document<T>> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("malformed table: {e}"))
}

/// Provenance lines: digest, then the model and any extra key/value pairs.
pub fn header_lines(digest: &str, model: &ModelFile, extra: &[(&str, String)]) -> Vec<String> {
    let mut lines = vec![format!("digest = \"{digest}\"")];
    lines.extend(toml::to_string(model).expect("model serialises").lines().map(|l| format!("model.{l}")));
    lines.extend(extra.iter().map(|(k, v)| format!("{k} = {v}")));
    lines
}

fn write_table(path: &Path, header: &[String], columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    for line in header {
        writeln!(buf, "# {line}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
    }
    fs::write(path, buf)?;
    Ok(())
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let text = fs::read_to_string(path)?;
    let header = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)?;
    Ok((header, rows))
}

/// The digest recorded in a table's provenance lines.
pub fn table_digest(header: &[String]) -> Option<String> {
    header
        .iter()
        .find_map(|l| l.strip_prefix("digest = "))
        .map(|v| v.trim_matches('"').to_string())
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("not a number: `{s}`")))
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Config(format!("bad field `{s}`")))
}

fn field<'a>(row: &'a csv::StringRecord, i: usize) -> Result<&'a str> {
    row.get(i).ok_or_else(|| Error::Config(format!("row {row:?} has no column {i}")))
}

pub const CIRCLE_COLUMNS: [&str; 6] = ["theta", "sector", "re_e", "im_e", "gap", "fidelity"];

pub fn write_circle_csv(path: &Path, header: &[String], samples: &[CircleSample]) -> Result<()> {
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            vec![
                fmt(s.theta),
                s.sector.map(|q| q.0.to_string()).unwrap_or_default(),
                fmt(s.energy.re),
                fmt(s.energy.im),
                fmt(s.gap),
                s.fidelity.map(fmt).unwrap_or_default(),
            ]
        })
        .collect();
    write_table(path, header, &CIRCLE_COLUMNS, &rows)
}

pub fn read_circle_csv(path: &Path) -> Result<(Vec<String>, Vec<CircleSample>)> {
    let (header, rows) = read_table(path)?;
    let samples = rows
        .iter()
        .map(|r| {
            Ok(CircleSample {
                theta: parse_f64(field(r, 0)?)?,
                sector: parse_opt::<u8>(field(r, 1)?)?.map(SectorLabel),
                energy: Complex64::new(parse_f64(field(r, 2)?)?, parse_f64(field(r, 3)?)?),
                gap: parse_f64(field(r, 4)?)?,
                fidelity: parse_opt::<f64>(field(r, 5)?)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((header, samples))
}

pub const ZERO_COLUMNS: [&str; 7] = ["re_h", "im_h", "theta", "sector_a", "sector_b", "residual", "converged"];

pub fn write_zeros_csv(path: &Path, header: &[String], zeros: &[Zero]) -> Result<()> {
    let rows: Vec<Vec<String>> = zeros
        .iter()
        .map(|z| {
            vec![
                fmt(z.h.re),
                fmt(z.h.im),
                z.theta.map(fmt).unwrap_or_default(),
                z.sectors[0].0.to_string(),
                z.sectors[1].0.to_string(),
                fmt(z.residual),
                z.converged.to_string(),
            ]
        })
        .collect();
    write_table(path, header, &ZERO_COLUMNS, &rows)
}

pub fn read_zeros_csv(path: &Path) -> Result<(Vec<String>, Vec<Zero>)> {
    let (header, rows) = read_table(path)?;
    let zeros = rows
        .iter()
        .map(|r| {
            let sector = |i| -> Result<SectorLabel> {
                parse_opt::<u8>(field(r, i)?)?
                    .map(SectorLabel)
                    .ok_or_else(|| Error::Config("missing sector".into()))
            };
            Ok(Zero {
                h: Complex64::new(parse_f64(field(r, 0)?)?, parse_f64(field(r, 1)?)?),
                theta: parse_opt::<f64>(field(r, 2)?)?,
                sectors: [sector(3)?, sector(4)?],
                residual: parse_f64(field(r, 5)?)?,
                converged: parse_opt::<bool>(field(r, 6)?)?.unwrap_or(false),
            })
        })
        .collect::<Result<_>>()?;
    Ok((header, zeros))
}

/// One size of a finite-size-scaling series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FssRow {
    pub length: usize,
    pub h_l: Complex64,
    pub method: FoldMethod,
    pub evaluations: usize,
}

pub const FSS_COLUMNS: [&str; 5] = ["L", "re_h_l", "im_h_l", "method", "evaluations"];

fn method_name(m: FoldMethod) -> &'static str {
    match m {
        FoldMethod::Newton => "newton",
        FoldMethod::Bisection => "bisection",
    }
}

pub fn write_fss_csv(path: &Path, header: &[String], rows: &[FssRow]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.length.to_string(),
                fmt(r.h_l.re),
                fmt(r.h_l.im),
                method_name(r.method).to_string(),
                r.evaluations.to_string(),
            ]
        })
        .collect();
    write_table(path, header, &FSS_COLUMNS, &rows)
}

pub fn read_fss_csv(path: &Path) -> Result<(Vec<String>, Vec<FssRow>)> {
    let (header, rows) = read_table(path)?;
    let out = rows
        .iter()
        .map(|r| {
            let method = match field(r, 3)? {
                "newton" => FoldMethod::Newton,
                "bisection" => FoldMethod::Bisection,
                other => return Err(Error::Config(format!("unknown fold method `{other}`"))),
            };
            Ok(FssRow {
                length: parse_opt::<usize>(field(r, 0)?)?.ok_or_else(|| Error::Config("missing L".into()))?,
                h_l: Complex64::new(parse_f64(field(r, 1)?)?, parse_f64(field(r, 2)?)?),
                method,
                evaluations: parse_opt::<usize>(field(r, 4)?)?.unwrap_or(0),
            })
        })
        .collect::<Result<_>>()?;
    Ok((header, out))
}
