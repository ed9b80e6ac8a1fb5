//! Machine-readable run report.
//!
//! Layout (all keys required unless marked optional):
//!
//! ```text
//! version        string   tool version
//! format         integer  report layout version
//! input          object   { path?: string, preset?: string, width: int, height: int }
//! seed           integer
//! parameters     object   SegmentConfig (trof with nested rof, init, init_source,
//!                         init_iterations, fuzzifier, seed, tau?)
//! tau0           number[] initial thresholds
//! result         object   { converged, rof_converged: bool, rof_iterations,
//!                           outer_iterations, K: int, tau, m: number[] }
//! trace          array    per iteration { k, tau, m, zeta?, s_k?, K, tau_delta?, cleanup? }
//! metrics        object?  { SA: number, DICE: number[], matched_permutation: int[] }
//! timings_ms     object   { rof, init, trof, total: number }
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::pipeline::{SegmentConfig, SegmentOutput, Timings};
use crate::trof::TrofTrace;

pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InputSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub converged: bool,
    pub rof_converged: bool,
    pub rof_iterations: usize,
    pub outer_iterations: usize,
    #[serde(rename = "K")]
    pub phases: usize,
    pub tau: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub format: u32,
    pub input: InputSource,
    pub seed: u64,
    pub parameters: SegmentConfig,
    pub tau0: Vec<f64>,
    pub result: ResultSummary,
    pub trace: TrofTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    pub timings_ms: Timings,
}

impl RunReport {
    pub fn new(
        input: InputSource,
        config: &SegmentConfig,
        out: &SegmentOutput,
        metrics: Option<MetricReport>,
    ) -> Self {
        let r = &out.result;
        Self {
            version: crate::VERSION.to_string(),
            format: REPORT_FORMAT,
            input,
            seed: config.seed,
            parameters: config.clone(),
            tau0: out.tau0.as_slice().to_vec(),
            result: ResultSummary {
                converged: r.converged,
                rof_converged: r.rof_converged,
                rof_iterations: r.rof_iterations,
                outer_iterations: r.outer_iterations,
                phases: r.partition.phases(),
                tau: r.final_taus.as_slice().to_vec(),
                m: r.final_means.clone(),
            },
            trace: r.trace.clone(),
            metrics,
            timings_ms: out.timings,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a report.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        validate_report(&value)?;
        Ok(serde_json::from_value(value)?)
    }
}

fn schema_err(path: &str, what: &str) -> Error {
    Error::Format(format!("report field `{path}`: {what}"))
}

fn field<'a>(obj: &'a Value, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| schema_err(&format!("{path}.{key}"), "missing"))
}

fn expect_number(v: &Value, path: &str) -> Result<()> {
    v.is_number().then_some(()).ok_or_else(|| schema_err(path, "expected a number"))
}

fn expect_uint(v: &Value, path: &str) -> Result<()> {
    v.is_u64().then_some(()).ok_or_else(|| schema_err(path, "expected a non-negative integer"))
}

fn expect_bool(v: &Value, path: &str) -> Result<()> {
    v.is_boolean().then_some(()).ok_or_else(|| schema_err(path, "expected a boolean"))
}

fn expect_numbers(v: &Value, path: &str) -> Result<()> {
    let arr = v.as_array().ok_or_else(|| schema_err(path, "expected an array"))?;
    for (i, x) in arr.iter().enumerate() {
        expect_number(x, &format!("{path}[{i}]"))?;
    }
    Ok(())
}

fn expect_object<'a>(v: &'a Value, path: &str) -> Result<&'a Value> {
    v.is_object().then_some(v).ok_or_else(|| schema_err(path, "expected an object"))
}

/// Checks the structure documented at the top of this module.
pub fn validate_report(v: &Value) -> Result<()> {
    let root = expect_object(v, "$")?;
    field(root, "$", "version")?
        .as_str()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| schema_err("$.version", "expected a non-empty string"))?;
    expect_uint(field(root, "$", "format")?, "$.format")?;
    expect_uint(field(root, "$", "seed")?, "$.seed")?;

    let input = expect_object(field(root, "$", "input")?, "$.input")?;
    expect_uint(field(input, "$.input", "width")?, "$.input.width")?;
    expect_uint(field(input, "$.input", "height")?, "$.input.height")?;

    let params = expect_object(field(root, "$", "parameters")?, "$.parameters")?;
    let trof = expect_object(field(params, "$.parameters", "trof")?, "$.parameters.trof")?;
    expect_uint(field(trof, "$.parameters.trof", "phases")?, "$.parameters.trof.phases")?;
    expect_number(field(trof, "$.parameters.trof", "eps_tau")?, "$.parameters.trof.eps_tau")?;
    let rof = expect_object(field(trof, "$.parameters.trof", "rof")?, "$.parameters.trof.rof")?;
    for key in ["mu", "rho", "eps_u", "cg_tol"] {
        expect_number(field(rof, "$.parameters.trof.rof", key)?, &format!("$.parameters.trof.rof.{key}"))?;
    }
    field(params, "$.parameters", "init")?
        .as_str()
        .ok_or_else(|| schema_err("$.parameters.init", "expected a string"))?;

    expect_numbers(field(root, "$", "tau0")?, "$.tau0")?;

    let result = expect_object(field(root, "$", "result")?, "$.result")?;
    for key in ["converged", "rof_converged"] {
        expect_bool(field(result, "$.result", key)?, &format!("$.result.{key}"))?;
    }
    for key in ["rof_iterations", "outer_iterations", "K"] {
        expect_uint(field(result, "$.result", key)?, &format!("$.result.{key}"))?;
    }
    for key in ["tau", "m"] {
        expect_numbers(field(result, "$.result", key)?, &format!("$.result.{key}"))?;
    }

    let trace = field(root, "$", "trace")?
        .as_array()
        .ok_or_else(|| schema_err("$.trace", "expected an array"))?;
    for (i, it) in trace.iter().enumerate() {
        let p = format!("$.trace[{i}]");
        expect_object(it, &p)?;
        expect_uint(field(it, &p, "k")?, &format!("{p}.k"))?;
        expect_uint(field(it, &p, "K")?, &format!("{p}.K"))?;
        expect_numbers(field(it, &p, "tau")?, &format!("{p}.tau"))?;
        expect_numbers(field(it, &p, "m")?, &format!("{p}.m"))?;
        match it.get("zeta") {
            None | Some(Value::Null) => {}
            Some(z) => {
                let arr = z.as_array().ok_or_else(|| schema_err(&format!("{p}.zeta"), "expected an array"))?;
                if arr.iter().any(|s| !matches!(s.as_i64(), Some(-1 | 1))) {
                    return Err(schema_err(&format!("{p}.zeta"), "entries must be -1 or 1"));
                }
            }
        }
        if let Some(s) = it.get("s_k").filter(|s| !s.is_null()) {
            expect_uint(s, &format!("{p}.s_k"))?;
        }
    }

    if let Some(m) = root.get("metrics").filter(|m| !m.is_null()) {
        expect_object(m, "$.metrics")?;
        expect_number(field(m, "$.metrics", "SA")?, "$.metrics.SA")?;
        expect_numbers(field(m, "$.metrics", "DICE")?, "$.metrics.DICE")?;
    }

    let t = expect_object(field(root, "$", "timings_ms")?, "$.timings_ms")?;
    for key in ["rof", "init", "trof", "total"] {
        expect_number(field(t, "$.timings_ms", key)?, &format!("$.timings_ms.{key}"))?;
    }
    Ok(())
}
