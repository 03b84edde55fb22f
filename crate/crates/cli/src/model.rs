//! Model files: a JSON document `{name?, metadata?, n, m, A, B, C, D}` with
//! row-major arrays, or a plain-text file of `A`/`B`/`C`/`D` blocks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use klap_core::linalg;
use klap_core::{KlapError, StateSpaceSystem};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Json,
    Text,
}

impl ModelFormat {
    /// `.json` is JSON, anything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ModelFormat::Json,
            _ => ModelFormat::Text,
        }
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl ModelFile {
    pub fn from_system(sys: &StateSpaceSystem, name: Option<String>) -> Self {
        Self {
            name,
            metadata: BTreeMap::new(),
            n: sys.n(),
            m: sys.m(),
            a: row_major(sys.a()),
            b: row_major(sys.b()),
            c: row_major(sys.c()),
            d: row_major(sys.d()),
        }
    }

    fn field(&self, label: &str) -> (&[f64], usize, usize) {
        let (n, m) = (self.n, self.m);
        match label {
            "A" => (&self.a, n, n),
            "B" => (&self.b, n, m),
            "C" => (&self.c, m, n),
            _ => (&self.d, m, m),
        }
    }

    /// Checks array lengths and finiteness, then builds the system
    /// (stability is checked separately by [`load_model`]).
    pub fn to_system(&self, source: &str) -> Result<StateSpaceSystem, CliError> {
        if self.n == 0 || self.m == 0 {
            return Err(CliError::parse(
                source,
                "n",
                "state and input dimensions must be positive",
            ));
        }
        let mut mats = Vec::with_capacity(4);
        for label in ["A", "B", "C", "D"] {
            let (data, rows, cols) = self.field(label);
            if data.len() != rows * cols {
                return Err(CliError::parse(
                    source,
                    label,
                    format!(
                        "expected {rows}x{cols} = {} entries, found {}",
                        rows * cols,
                        data.len()
                    ),
                ));
            }
            if let Some(i) = data.iter().position(|v| !v.is_finite()) {
                return Err(CliError::parse(source, label, format!("entry {i} is not finite")));
            }
            mats.push(DMatrix::from_row_slice(rows, cols, data));
        }
        let d = mats.pop().unwrap();
        let c = mats.pop().unwrap();
        let b = mats.pop().unwrap();
        let a = mats.pop().unwrap();
        StateSpaceSystem::new_unchecked_stability(a, b, c, d).map_err(|e| CliError::Model {
            path: source.to_string(),
            source: e,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self, CliError> {
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: source.to_string(),
            field: "document".into(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        let obj = doc
            .as_object()
            .ok_or_else(|| CliError::parse(source, "document", "expected a JSON object"))?;
        let dim = |key: &str| {
            obj.get(key)
                .ok_or_else(|| CliError::parse(source, key, "missing"))?
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| CliError::parse(source, key, "expected a nonnegative integer"))
        };
        let array = |key: &str| -> Result<Vec<f64>, CliError> {
            let values = obj
                .get(key)
                .ok_or_else(|| CliError::parse(source, key, "missing"))?
                .as_array()
                .ok_or_else(|| CliError::parse(source, key, "expected an array of numbers"))?;
            values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_f64()
                        .ok_or_else(|| CliError::parse(source, key, format!("entry {i} is not a number")))
                })
                .collect()
        };
        let name = match obj.get("name") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| CliError::parse(source, "name", "expected a string"))?
                    .to_string(),
            ),
        };
        let mut metadata = BTreeMap::new();
        if let Some(meta) = obj.get("metadata") {
            let meta = meta
                .as_object()
                .ok_or_else(|| CliError::parse(source, "metadata", "expected an object of strings"))?;
            for (k, v) in meta {
                let v = v.as_str().ok_or_else(|| {
                    CliError::parse(source, "metadata", format!("value of `{k}` is not a string"))
                })?;
                metadata.insert(k.clone(), v.to_string());
            }
        }
        Ok(Self {
            name,
            metadata,
            n: dim("n")?,
            m: dim("m")?,
            a: array("A")?,
            b: array("B")?,
            c: array("C")?,
            d: array("D")?,
        })
    }

    /// Text format: optional `name <text>` line, then blocks headed by a line
    /// containing only `A`, `B`, `C` or `D`, each followed by its rows.
    /// `#` starts a comment. Entries are written with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(out, "name {name}");
        }
        for label in ["A", "B", "C", "D"] {
            let (data, rows, cols) = self.field(label);
            let _ = writeln!(out, "{label}");
            for i in 0..rows {
                let row: Vec<String> = (0..cols)
                    .map(|j| format!("{:.16e}", data[i * cols + j]))
                    .collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self, CliError> {
        let mut name = None;
        let mut blocks: BTreeMap<char, Vec<(usize, Vec<f64>)>> = BTreeMap::new();
        let mut current: Option<char> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("name ") {
                name = Some(rest.trim().to_string());
                continue;
            }
            if let ["A" | "B" | "C" | "D"] = line.split_whitespace().collect::<Vec<_>>().as_slice() {
                let label = line.chars().next().unwrap();
                if blocks.contains_key(&label) {
                    return Err(CliError::parse_at(
                        source,
                        &label.to_string(),
                        lineno,
                        "block appears twice",
                    ));
                }
                blocks.insert(label, Vec::new());
                current = Some(label);
                continue;
            }
            let Some(label) = current else {
                return Err(CliError::parse_at(
                    source,
                    "document",
                    lineno,
                    "numbers before the first block header",
                ));
            };
            let row = line
                .split_whitespace()
                .map(|tok| tok.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::parse_at(source, &label.to_string(), lineno, e.to_string()))?;
            blocks.get_mut(&label).unwrap().push((lineno, row));
        }
        let mut shapes = BTreeMap::new();
        let mut data = BTreeMap::new();
        for label in ['A', 'B', 'C', 'D'] {
            let rows = blocks
                .remove(&label)
                .ok_or_else(|| CliError::parse(source, &label.to_string(), "block is missing"))?;
            let cols = rows.first().map(|r| r.1.len()).unwrap_or(0);
            if let Some((lineno, r)) = rows.iter().find(|r| r.1.len() != cols) {
                return Err(CliError::parse_at(
                    source,
                    &label.to_string(),
                    *lineno,
                    format!("row has {} entries, expected {cols}", r.len()),
                ));
            }
            shapes.insert(label, (rows.len(), cols));
            data.insert(label, rows.into_iter().flat_map(|r| r.1).collect::<Vec<_>>());
        }
        let (n, n2) = shapes[&'A'];
        let (_, m) = shapes[&'B'];
        for (label, expected) in [('A', (n, n)), ('B', (n, m)), ('C', (m, n)), ('D', (m, m))] {
            if shapes[&label] != expected || n != n2 {
                let (r, c) = shapes[&label];
                return Err(CliError::parse(
                    source,
                    &label.to_string(),
                    format!("block is {r}x{c}, expected {}x{}", expected.0, expected.1),
                ));
            }
        }
        Ok(Self {
            name,
            metadata: BTreeMap::new(),
            n,
            m,
            a: data.remove(&'A').unwrap(),
            b: data.remove(&'B').unwrap(),
            c: data.remove(&'C').unwrap(),
            d: data.remove(&'D').unwrap(),
        })
    }
}

/// Relative distance from the stability boundary below which loading warns.
const BORDERLINE_STABILITY: f64 = 1e-6;

pub fn read_model_file(path: &Path) -> Result<ModelFile, CliError> {
    let source = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: source.clone(),
        message: e.to_string(),
    })?;
    let looks_json = text.trim_start().starts_with('{');
    if ModelFormat::from_path(path) == ModelFormat::Json || looks_json {
        ModelFile::from_json(&text, &source)
    } else {
        ModelFile::from_text(&text, &source)
    }
}

/// Reads and validates a model; rejects unstable `A`, warns when the spectral
/// abscissa is within `1e-6·‖A‖_F` of the imaginary axis.
pub fn load_model(path: &Path) -> Result<StateSpaceSystem, CliError> {
    load_model_file(path).map(|(_, sys)| sys)
}

/// [`load_model`] that also returns the parsed file (name, metadata).
pub fn load_model_file(path: &Path) -> Result<(ModelFile, StateSpaceSystem), CliError> {
    let source = path.display().to_string();
    let file = read_model_file(path)?;
    let sys = file.to_system(&source)?;
    let abscissa = linalg::max_real_part(sys.a()).map_err(|e| CliError::Model {
        path: source.clone(),
        source: e,
    })?;
    let tol = linalg::hurwitz_tolerance(sys.a());
    if abscissa >= -tol {
        return Err(CliError::Model {
            path: source,
            source: KlapError::NotHurwitz {
                abscissa,
                tolerance: tol,
            },
        });
    }
    if abscissa >= -BORDERLINE_STABILITY * sys.a().norm() {
        log::warn!("{source}: spectral abscissa {abscissa:.3e} is close to the imaginary axis");
    }
    Ok((file, sys))
}

pub fn write_model(path: &Path, sys: &StateSpaceSystem, name: Option<String>) -> Result<(), CliError> {
    let file = ModelFile::from_system(sys, name);
    let text = match ModelFormat::from_path(path) {
        ModelFormat::Json => file.to_json(),
        ModelFormat::Text => file.to_text(),
    };
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
