//! File formats: matrix JSON, simulation config JSON, CSV emission, and the
//! JSON views of analysis results.
//!
//! All floats in CSV output are printed with 17 significant digits
//! (`{:.16e}`), and JSON is emitted through `serde_json::Value` whose object
//! keys are sorted, so identical inputs always produce byte-identical
//! output. Patch indices in every file format are 1-based.

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::aggregate::CompareRow;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::kolmogorov::TransitionMatrix;
use crate::report::AnalysisReport;
use crate::sim::{AgeGrid, PopulationState, SimulationConfig, Trajectory, VitalRates};
use crate::spectral::SpectralReport;
use crate::structure::{NormalForm, StateKind};

/// Formats a float with 17 significant digits (one before the point,
/// sixteen after, exponent form). Round-trips any f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Matrix file: `{"n": ..., "entries": [row-major n² floats]}` or
/// `{"n": ..., "offdiagonal_rates": [row-major n² floats, diagonal ignored]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixInput {
    n: usize,
    #[serde(default)]
    entries: Option<Vec<f64>>,
    #[serde(default)]
    offdiagonal_rates: Option<Vec<f64>>,
}

/// Parses a matrix JSON value and validates it as a Kolmogorov matrix.
pub fn matrix_from_value(value: &Value, tolerance: f64) -> Result<TransitionMatrix> {
    let input: MatrixInput = serde_json::from_value(value.clone())?;
    match (input.entries, input.offdiagonal_rates) {
        (Some(entries), None) => {
            let m = DenseMatrix::from_flat(input.n, entries)?;
            TransitionMatrix::validate(m, tolerance)
        }
        (None, Some(rates)) => {
            let m = DenseMatrix::from_flat(input.n, rates)?;
            TransitionMatrix::from_offdiagonal_rates(&m)
        }
        (Some(_), Some(_)) => Err(Error::InvalidInput(
            "matrix object must not carry both \"entries\" and \"offdiagonal_rates\"".into(),
        )),
        (None, None) => Err(Error::InvalidInput(
            "matrix object needs \"entries\" or \"offdiagonal_rates\"".into(),
        )),
    }
}

/// Loads and validates a matrix JSON file.
pub fn load_matrix(path: &Path, tolerance: f64) -> Result<TransitionMatrix> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    matrix_from_value(&value, tolerance)
}

/// Simulation config file. Rates and the initial profile are given as
/// per-patch piecewise-linear breakpoint lists `[[age, value], ...]` and are
/// resampled onto the grid nodes; the matrix may be inline or a path
/// (resolved relative to the config file).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigInput {
    matrix: Value,
    epsilon: f64,
    age_max: f64,
    grid_count: usize,
    horizon: f64,
    output_stride: usize,
    mortality: Vec<Vec<[f64; 2]>>,
    fertility: Vec<Vec<[f64; 2]>>,
    fertility_cutoff: f64,
    initial: Vec<Vec<[f64; 2]>>,
}

/// Piecewise-linear resampling of breakpoints onto the grid nodes. Ages must
/// be strictly increasing; nodes outside the breakpoint range take the
/// nearest endpoint value.
pub fn resample_breakpoints(breakpoints: &[[f64; 2]], grid: &AgeGrid) -> Result<Vec<f64>> {
    if breakpoints.is_empty() {
        return Err(Error::InvalidInput("empty breakpoint list".into()));
    }
    for pair in breakpoints.windows(2) {
        if !(pair[1][0] > pair[0][0]) {
            return Err(Error::InvalidInput(format!(
                "breakpoint ages must increase strictly: {} then {}",
                pair[0][0], pair[1][0]
            )));
        }
    }
    if breakpoints.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidInput("non-finite breakpoint".into()));
    }
    let mut out = Vec::with_capacity(grid.nodes());
    for j in 0..grid.nodes() {
        let a = grid.age(j);
        let v = if a <= breakpoints[0][0] {
            breakpoints[0][1]
        } else if a >= breakpoints[breakpoints.len() - 1][0] {
            breakpoints[breakpoints.len() - 1][1]
        } else {
            let hi = breakpoints.partition_point(|p| p[0] < a);
            let (a0, v0) = (breakpoints[hi - 1][0], breakpoints[hi - 1][1]);
            let (a1, v1) = (breakpoints[hi][0], breakpoints[hi][1]);
            v0 + (v1 - v0) * (a - a0) / (a1 - a0)
        };
        out.push(v);
    }
    Ok(out)
}

fn resample_tables(tables: &[Vec<[f64; 2]>], grid: &AgeGrid) -> Result<Vec<Vec<f64>>> {
    tables
        .iter()
        .map(|bps| resample_breakpoints(bps, grid))
        .collect()
}

/// Parses a config JSON value into a validated [`SimulationConfig`].
/// `base_dir` anchors matrix file references.
pub fn config_from_value(value: &Value, base_dir: &Path) -> Result<SimulationConfig> {
    let input: ConfigInput = serde_json::from_value(value.clone())?;
    let matrix = match &input.matrix {
        Value::String(rel) => {
            let path = base_dir.join(rel);
            load_matrix(&path, crate::kolmogorov::DEFAULT_TOLERANCE)?
        }
        obj @ Value::Object(_) => {
            matrix_from_value(obj, crate::kolmogorov::DEFAULT_TOLERANCE)?
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "\"matrix\" must be an object or a file path string, got {other}"
            )))
        }
    };
    let grid = AgeGrid::new(input.age_max, input.grid_count)?;
    let rates = VitalRates::new(
        grid,
        resample_tables(&input.mortality, &grid)?,
        resample_tables(&input.fertility, &grid)?,
        input.fertility_cutoff,
    )?;
    let config = SimulationConfig {
        matrix,
        rates,
        epsilon: input.epsilon,
        horizon: input.horizon,
        initial: resample_tables(&input.initial, &grid)?,
        output_stride: input.output_stride,
    };
    config.validate()?;
    Ok(config)
}

/// Loads and validates a simulation config file.
pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config_from_value(&value, base)
}

pub fn state_kind_str(kind: StateKind) -> &'static str {
    match kind {
        StateKind::Closed => "closed",
        StateKind::Transient => "transient",
    }
}

/// `{"permutation": [1-based], "blocks": [{"kind", "original_indices"}], "m"}`
pub fn normal_form_value(nf: &NormalForm) -> Value {
    json!({
        "permutation": nf.permutation.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "blocks": nf.blocks.iter().map(|b| json!({
            "kind": state_kind_str(b.kind),
            "original_indices": b.original_indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "m": nf.m,
    })
}

/// Complex eigenvalues serialize as `{"re": x, "im": y}`.
pub fn spectral_report_value(r: &SpectralReport) -> Value {
    json!({
        "spectrum": r.spectrum.iter().map(|z| json!({"re": z.re, "im": z.im})).collect::<Vec<_>>(),
        "spectral_bound": r.spectral_bound,
        "spectral_radius": r.spectral_radius,
        "right_perron_basis": r.right_perron_basis,
        "default_perron": r.default_perron,
        "left_perron_residual": r.left_perron_residual,
        "zero_multiplicity_geometric": r.zero_multiplicity_geometric,
        "dominant_is_simple": r.dominant_is_simple,
    })
}

pub fn analysis_report_value(rep: &AnalysisReport) -> Value {
    let checks = json!({
        "zero_is_dominant": rep.checks.zero_is_dominant,
        "left_one_residual_ok": rep.checks.left_one_residual_ok,
        "zero_pattern_consistent": rep.checks.zero_pattern_consistent,
        "transient_blocks_negative_bound": rep.checks.transient_blocks_negative_bound,
    });
    json!({
        "n": rep.n,
        "tolerance": rep.tolerance,
        "irreducible": rep.irreducible,
        "normal_form": normal_form_value(&rep.normal_form),
        "spectral": spectral_report_value(&rep.spectral),
        "state_labels": rep.state_labels.iter().map(|k| state_kind_str(*k)).collect::<Vec<_>>(),
        "theorem_checks": checks,
    })
}

/// Trajectory CSV: header `t,total,share_1..share_n`, one row per sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.samples[0].shares.len();
    let mut out = String::from("t,total");
    for i in 1..=n {
        out.push_str(&format!(",share_{i}"));
    }
    out.push('\n');
    for s in &traj.samples {
        out.push_str(&fmt_float(s.time));
        out.push(',');
        out.push_str(&fmt_float(s.total));
        for v in &s.shares {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        out.push('\n');
    }
    out
}

/// Age-profile snapshot CSV: header `age,u_1..u_n`, one row per grid node.
pub fn snapshot_csv(state: &PopulationState) -> String {
    let n = state.patches();
    let mut out = String::from("age");
    for i in 1..=n {
        out.push_str(&format!(",u_{i}"));
    }
    out.push('\n');
    for j in 0..state.grid.nodes() {
        out.push_str(&fmt_float(state.grid.age(j)));
        for profile in &state.values {
            out.push(',');
            out.push_str(&fmt_float(profile[j]));
        }
        out.push('\n');
    }
    out
}

/// Error-report CSV: `t,d_share,d_prof`.
pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("t,d_share,d_prof\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_float(r.time),
            fmt_float(r.d_share),
            fmt_float(r.d_prof)
        ));
    }
    out
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    s.push('\n');
    s
}
