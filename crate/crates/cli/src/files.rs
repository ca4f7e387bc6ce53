//! File parsing, digests, and report writing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use regsel::simulation::{RestrictionSpec, SimConfig};
use regsel::RestrictionRow;

use crate::CliError;

/// Reruns from a manifest must reproduce outputs byte-for-byte; the manifest
/// therefore embeds the resolved config and digests its canonical
/// serialization rather than the raw input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<SimConfig>,
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            config: None,
            inputs: BTreeMap::new(),
        }
    }

    pub fn digest_input(&mut self, role: &str, bytes: &[u8]) {
        self.inputs
            .insert(role.to_string(), format!("sha256:{}", sha256_hex(bytes)));
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn parse_cell(cell: &str, path: &Path, row: usize, col: usize) -> Result<f64, CliError> {
    let v: f64 = cell.trim().parse().map_err(|_| {
        CliError::Data(format!(
            "{}: row {row}, column {col}: invalid number `{}`",
            path.display(),
            cell.trim()
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::Data(format!(
            "{}: row {row}, column {col}: non-finite value `{}`",
            path.display(),
            cell.trim()
        )));
    }
    Ok(v)
}

/// Headerless CSV matrix, one row per line.
pub fn parse_matrix(bytes: &[u8], path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| CliError::Data(format!("{}: not valid UTF-8", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(CliError::Data(format!(
                    "{}: row {}: expected {} columns, found {}",
                    path.display(),
                    i + 1,
                    w,
                    cells.len()
                )))
            }
            _ => {}
        }
        let parsed = cells
            .iter()
            .enumerate()
            .map(|(j, c)| parse_cell(c, path, i + 1, j + 1))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(parsed);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let (n, p) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

/// Headerless CSV column vector, one value per line.
pub fn parse_vector(bytes: &[u8], path: &Path) -> Result<DVector<f64>, CliError> {
    let m = parse_matrix(bytes, path)?;
    if m.ncols() != 1 {
        return Err(CliError::Data(format!(
            "{}: expected one value per line, found {} columns",
            path.display(),
            m.ncols()
        )));
    }
    Ok(m.column(0).into_owned())
}

/// Restriction file: either `{"R": [[...]], "r": [...]}` or a JSON list of
/// shorthand expressions / explicit rows.
pub fn parse_restrictions(
    bytes: &[u8],
    path: &Path,
    p: usize,
) -> Result<Vec<RestrictionRow>, CliError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| CliError::Data(format!("{}: invalid JSON: {e}", path.display())))?;
    match &value {
        Value::Object(map) if map.contains_key("R") || map.contains_key("r") => {
            let rmat: Vec<Vec<f64>> = serde_json::from_value(
                map.get("R").cloned().unwrap_or(Value::Array(vec![])),
            )
            .map_err(|e| CliError::Data(format!("{}: field `R`: {e}", path.display())))?;
            let rvec: Vec<f64> = serde_json::from_value(
                map.get("r").cloned().unwrap_or(Value::Array(vec![])),
            )
            .map_err(|e| CliError::Data(format!("{}: field `r`: {e}", path.display())))?;
            if rmat.len() != rvec.len() {
                return Err(CliError::Data(format!(
                    "{}: `R` has {} rows but `r` has {} entries",
                    path.display(),
                    rmat.len(),
                    rvec.len()
                )));
            }
            rmat.into_iter()
                .zip(rvec)
                .enumerate()
                .map(|(i, (coeffs, target))| {
                    if coeffs.len() != p {
                        return Err(CliError::Data(format!(
                            "{}: `R` row {} has {} entries, expected {p}",
                            path.display(),
                            i + 1,
                            coeffs.len()
                        )));
                    }
                    Ok(RestrictionRow { coeffs, target })
                })
                .collect()
        }
        Value::Array(_) => {
            let specs: Vec<RestrictionSpec> = serde_json::from_value(value)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            specs
                .iter()
                .map(|s| s.to_row(p).map_err(CliError::from))
                .collect()
        }
        _ => Err(CliError::Data(format!(
            "{}: expected an object with `R`/`r` or a list of restrictions",
            path.display()
        ))),
    }
}

/// Scores as JSON: finite values as numbers, sentinels as "inf"/"-inf".
pub fn score_to_json(v: f64) -> Value {
    if v == f64::INFINITY {
        json!("inf")
    } else if v == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(v)
    }
}

/// Pretty JSON with a trailing newline, to a file or stdout.
pub fn emit_json(out: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let text = format!("{}\n", serde_json::to_string_pretty(value).expect("serializable"));
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}
