//! JSON run report written next to every passivated model.

use std::path::Path;

use klap_core::klap::{InitStrategy, KlapConfig, KlapResult};
use klap_core::lti::PopovGrid;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct GridEcho {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wmin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wmax: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl GridEcho {
    pub fn new(grid: &PopovGrid) -> Self {
        match grid {
            PopovGrid::Log { wmin, wmax, points } => Self {
                kind: "log".into(),
                wmin: Some(*wmin),
                wmax: Some(*wmax),
                points: Some(*points),
            },
            PopovGrid::Explicit(w) => Self {
                kind: "explicit".into(),
                wmin: None,
                wmax: None,
                points: Some(w.len()),
            },
            PopovGrid::Default => Self {
                kind: "default".into(),
                wmin: None,
                wmax: None,
                points: None,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub grad_tol: f64,
    pub obj_tol: f64,
    pub alpha: f64,
    /// Certificate tolerance actually used.
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_margin: Option<f64>,
    pub init: String,
    pub max_iterations: usize,
    pub max_restarts: usize,
    pub threads: usize,
    pub grid: GridEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedthrough: Option<f64>,
}

impl ConfigEcho {
    pub fn new(config: &KlapConfig, eps: f64, feedthrough: Option<f64>) -> Self {
        Self {
            seed: config.rng_seed,
            grad_tol: config.grad_tol,
            obj_tol: config.obj_rel_tol,
            alpha: config.restart_step,
            eps,
            init_margin: config.init_margin,
            init: match config.init {
                InitStrategy::Are => "are",
                InitStrategy::Random => "random",
                InitStrategy::Given(_) => "given",
            }
            .into(),
            max_iterations: config.max_iterations,
            max_restarts: config.max_restarts,
            threads: config.threads,
            grid: GridEcho::new(&config.popov_grid),
            feedthrough,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub max_abs_real: f64,
    pub max_real: f64,
    pub global_candidate: bool,
    pub vacuous: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub input: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub config: ConfigEcho,
    pub n: usize,
    pub m: usize,
    pub c_hat: Vec<Vec<f64>>,
    pub l_final: Vec<Vec<f64>>,
    pub j_final: f64,
    pub h2_error: f64,
    pub initial_h2_error: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub reinitializations: usize,
    pub converged: bool,
    pub stop_reason: String,
    pub already_passive: bool,
    pub certificate: CertificateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    pub popov_margin_before: f64,
    pub popov_margin_after: f64,
    pub tol_passive: f64,
    pub passive_after: bool,
    pub wall_clock_seconds: f64,
    pub time_per_iteration_seconds: f64,
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Everything the report needs besides the optimizer result.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub input: String,
    pub output: Option<String>,
    pub config: ConfigEcho,
    pub popov_margin_before: f64,
    pub popov_margin_after: f64,
    pub tol_passive: f64,
    pub passive_after: bool,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(result: &KlapResult, ctx: RunContext) -> Self {
        let cert = &result.certificate;
        let per_iter = if result.iterations > 0 {
            ctx.wall_clock_seconds / result.iterations as f64
        } else {
            0.0
        };
        Self {
            input: ctx.input,
            output: ctx.output,
            config: ctx.config,
            n: result.l_final.nrows(),
            m: result.c_hat.nrows(),
            c_hat: rows(&result.c_hat),
            l_final: rows(&result.l_final),
            j_final: result.j_final,
            h2_error: result.h2_error,
            initial_h2_error: result.initial_h2_error,
            iterations: result.iterations,
            restarts: result.restarts,
            reinitializations: result.reinitializations,
            converged: result.converged,
            stop_reason: result
                .stop
                .map(|s| s.as_str())
                .unwrap_or("already-passive")
                .into(),
            already_passive: result.already_passive,
            certificate: CertificateReport {
                max_abs_real: cert.max_abs_real,
                max_real: cert.max_real,
                global_candidate: cert.is_global_candidate,
                vacuous: cert.vacuous,
            },
            delta_d: result.initialization.as_ref().map(|i| i.delta_d),
            lambda_min: result.initialization.as_ref().map(|i| i.lambda_min),
            popov_margin_before: ctx.popov_margin_before,
            popov_margin_after: ctx.popov_margin_after,
            tol_passive: ctx.tol_passive,
            passive_after: ctx.passive_after,
            wall_clock_seconds: ctx.wall_clock_seconds,
            time_per_iteration_seconds: per_iter,
        }
    }

    /// Serializes the report, refusing non-finite numbers (JSON has no NaN).
    pub fn to_json(&self) -> Result<String, CliError> {
        let value = serde_json::to_value(self).map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(path) = first_null(&value, "report") {
            return Err(CliError::Numerical(klap_core::KlapError::NonFinite(path)));
        }
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json()?).map_err(|e| CliError::io(path, e))
    }
}

fn first_null(v: &serde_json::Value, at: &str) -> Option<String> {
    use serde_json::Value;
    match v {
        Value::Null => Some(at.to_string()),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .find_map(|(i, x)| first_null(x, &format!("{at}[{i}]"))),
        Value::Object(map) => map.iter().find_map(|(k, x)| first_null(x, &format!("{at}.{k}"))),
        _ => None,
    }
}
