//! File formats.
//!
//! * Paths are CSV with header `t,x1,...,xd`, one row per sample, values
//!   written with 17 significant digits so that `f64` round-trips exactly.
//!   The first row must be `t = 0, x = 0` and times must strictly increase.
//! * Tensors and signatures are JSON objects
//!   `{"format_version": 1, "dim": d, "depth": N, "levels": [[..], ..]}` where
//!   `levels[k]` holds the `d^k` level-`k` coefficients in lexicographic word
//!   order (see [`crate::tensor::word_index`]). Level 0 is included.
//! * Solver results are JSON ([`ResultJson`]) carrying the parameters, the
//!   controls, the sampled path, both signatures and the diagnostics.
//!
//! Every reader reports the file and the row or field at fault.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmp::{SolveResult, SolverParams};
use crate::scalar::Scalar;
use crate::signature::{self, ControlPath, PiecewisePath};
use crate::tensor::TruncatedTensor;
use crate::vartime::{TimeSearchParams, VarTimeResult};

/// Version written by this crate and the only one it reads.
pub const FORMAT_VERSION: u32 = 1;

fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::format(path.display().to_string(), format!("cannot open: {e}")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::format(path.display().to_string(), format!("cannot create: {e}")))
}

// ---------------------------------------------------------------- paths

pub fn write_path<S: Scalar>(path: impl AsRef<Path>, samples: &PiecewisePath<S>) -> Result<()> {
    let mut out = create(path.as_ref())?;
    write_path_to(&mut out, samples)?;
    out.flush()?;
    Ok(())
}

pub fn write_path_to<W: Write, S: Scalar>(writer: W, samples: &PiecewisePath<S>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((1..=samples.dim()).map(|i| format!("x{i}")));
    csv.write_record(&header)?;
    for (t, x) in samples.times().iter().zip(samples.points()) {
        let mut row = vec![fmt_value(t.as_f64())];
        row.extend(x.iter().map(|v| fmt_value(v.as_f64())));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_path<S: Scalar>(path: impl AsRef<Path>) -> Result<PiecewisePath<S>> {
    let path = path.as_ref();
    read_path_from(open(path)?, &path.display().to_string())
}

/// Parses path CSV from `reader`; `source` names the input in error locations.
pub fn read_path_from<R: Read, S: Scalar>(reader: R, source: &str) -> Result<PiecewisePath<S>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    let dim = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=dim).map(|i| format!("x{i}")))
        .collect();
    if dim == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::format(
            format!("{source}: header"),
            format!("expected `t,x1,...,xd`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut times: Vec<S> = Vec::new();
    let mut points = Vec::new();
    for (r, record) in csv.records().enumerate() {
        // data rows are numbered from 1, the header being row 0
        let row = r + 1;
        let record = record.map_err(|e| Error::format(format!("{source}: row {row}"), e.to_string()))?;
        if record.len() != dim + 1 {
            return Err(Error::format(
                format!("{source}: row {row}"),
                format!("expected {} fields, found {}", dim + 1, record.len()),
            ));
        }
        let mut values = Vec::with_capacity(dim + 1);
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(format!("{source}: row {row}, column {}", expected[c]), format!("`{field}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    format!("{source}: row {row}, column {}", expected[c]),
                    "value is not finite",
                ));
            }
            values.push(S::lit(v));
        }
        let t = values[0];
        if row == 1 && (t != S::zero() || values[1..].iter().any(|&x| x != S::zero())) {
            return Err(Error::format(format!("{source}: row 1"), "first sample must be t = 0, x = 0"));
        }
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err(Error::format(
                    format!("{source}: row {row}, column t"),
                    format!("times must strictly increase ({t} after {prev})"),
                ));
            }
        }
        times.push(t);
        points.push(values[1..].to_vec());
    }
    if times.is_empty() {
        return Err(Error::format(format!("{source}: row 1"), "no samples"));
    }
    PiecewisePath::new(times, points)
}

/// Writes a numeric table with the given column names.
pub fn write_table(path: impl AsRef<Path>, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut csv = csv::Writer::from_writer(create(path)?);
    csv.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::format(
                path.display().to_string(),
                format!("row has {} values for {} columns", row.len(), header.len()),
            ));
        }
        csv.write_record(row.iter().map(|&v| fmt_value(v)))?;
    }
    csv.flush()?;
    Ok(())
}

// ----------------------------------------------------------- signatures

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureJson {
    pub format_version: u32,
    pub dim: usize,
    pub depth: usize,
    pub levels: Vec<Vec<f64>>,
}

impl SignatureJson {
    pub fn from_tensor<S: Scalar>(t: &TruncatedTensor<S>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            dim: t.dim(),
            depth: t.depth(),
            levels: t.levels().into_iter().map(|l| l.iter().map(|x| x.as_f64()).collect()).collect(),
        }
    }

    /// Checks version and block lengths; `source` names the input in errors.
    pub fn to_tensor<S: Scalar>(&self, source: &str) -> Result<TruncatedTensor<S>> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::format(
                format!("{source}: format_version"),
                format!("unsupported version {} (expected {FORMAT_VERSION})", self.format_version),
            ));
        }
        if self.dim == 0 || self.depth == 0 {
            return Err(Error::format(
                format!("{source}: dim/depth"),
                format!("dim and depth must be >= 1, got {} and {}", self.dim, self.depth),
            ));
        }
        if self.levels.len() != self.depth + 1 {
            return Err(Error::format(
                format!("{source}: levels"),
                format!("length mismatch: expected {} levels, found {}", self.depth + 1, self.levels.len()),
            ));
        }
        let mut coeffs = Vec::new();
        for (k, block) in self.levels.iter().enumerate() {
            let expected = self
                .dim
                .checked_pow(k as u32)
                .ok_or(Error::InvalidShape { dim: self.dim, depth: self.depth })?;
            if block.len() != expected {
                return Err(Error::format(
                    format!("{source}: levels[{k}]"),
                    format!("length mismatch: expected {expected} entries, found {}", block.len()),
                ));
            }
            coeffs.extend(block.iter().map(|&x| S::lit(x)));
        }
        TruncatedTensor::from_coeffs(self.dim, self.depth, coeffs)
    }
}

pub fn signature_to_string<S: Scalar>(t: &TruncatedTensor<S>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SignatureJson::from_tensor(t))?)
}

pub fn signature_from_str<S: Scalar>(text: &str, source: &str) -> Result<TruncatedTensor<S>> {
    let json: SignatureJson =
        serde_json::from_str(text).map_err(|e| Error::format(source.to_string(), e.to_string()))?;
    json.to_tensor(source)
}

pub fn write_signature<S: Scalar>(path: impl AsRef<Path>, t: &TruncatedTensor<S>) -> Result<()> {
    let mut out = create(path.as_ref())?;
    serde_json::to_writer_pretty(&mut out, &SignatureJson::from_tensor(t))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_signature<S: Scalar>(path: impl AsRef<Path>) -> Result<TruncatedTensor<S>> {
    let path = path.as_ref();
    let mut text = String::new();
    open(path)?.read_to_string(&mut text)?;
    signature_from_str(&text, &path.display().to_string())
}

// -------------------------------------------------------------- results

/// Fixed-horizon solver settings as stored in a result file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParamsJson {
    pub steps: usize,
    pub max_iters: usize,
    pub c0: f64,
    pub c_grow: f64,
    pub c_shrink: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub fp_iters: usize,
    pub fp_tol: f64,
    pub stall_tol: f64,
    pub stall_window: usize,
    pub cost_floor: f64,
    pub mode: String,
    pub gamma: f64,
    pub horizon: f64,
}

impl<S: Scalar> From<&SolverParams<S>> for SolverParamsJson {
    fn from(p: &SolverParams<S>) -> Self {
        Self {
            steps: p.steps,
            max_iters: p.max_iters,
            c0: p.c0.as_f64(),
            c_grow: p.c_grow.as_f64(),
            c_shrink: p.c_shrink.as_f64(),
            c_min: p.c_min.as_f64(),
            c_max: p.c_max.as_f64(),
            fp_iters: p.fp_iters,
            fp_tol: p.fp_tol.as_f64(),
            stall_tol: p.stall_tol.as_f64(),
            stall_window: p.stall_window,
            cost_floor: p.cost_floor.as_f64(),
            mode: p.mode.as_str().to_string(),
            gamma: p.gamma.as_f64(),
            horizon: p.horizon.as_f64(),
        }
    }
}

/// Horizon-search settings as stored in a result file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParamsJson {
    pub t_init: f64,
    pub eps: f64,
    pub grow: f64,
    pub refine_steps: usize,
    pub refine_shrink: f64,
    pub max_expansions: usize,
}

impl<S: Scalar> From<&TimeSearchParams<S>> for SearchParamsJson {
    fn from(p: &TimeSearchParams<S>) -> Self {
        Self {
            t_init: p.t_init.as_f64(),
            eps: p.eps.as_f64(),
            grow: p.grow.as_f64(),
            refine_steps: p.refine_steps,
            refine_shrink: p.refine_shrink.as_f64(),
            max_expansions: p.max_expansions,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryJson {
    pub horizon: f64,
    pub endpoint_error: f64,
    pub length: f64,
    pub scenario: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathJson {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

/// Self-contained record of one reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    pub format_version: u32,
    pub params: SolverParamsJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchParamsJson>,
    pub horizon: f64,
    pub controls: Vec<Vec<f64>>,
    pub path: PathJson,
    pub signature: SignatureJson,
    pub target: SignatureJson,
    pub cost_trace: Vec<f64>,
    pub endpoint_error: f64,
    pub length: f64,
    pub energy: f64,
    pub iterations_used: usize,
    pub rejections: usize,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    #[serde(default)]
    pub history: Vec<HistoryJson>,
    pub wall_time_s: f64,
}

impl ResultJson {
    /// Record of a fixed-horizon solve.
    pub fn from_solve<S: Scalar>(
        result: &SolveResult<S>,
        params: &SolverParams<S>,
        target: &TruncatedTensor<S>,
        wall_time_s: f64,
    ) -> Self {
        let path = signature::path_from_controls(&result.controls);
        Self {
            format_version: FORMAT_VERSION,
            params: params.into(),
            search: None,
            horizon: result.controls.horizon().as_f64(),
            controls: to_f64_rows(result.controls.values()),
            path: PathJson {
                times: path.times().iter().map(|t| t.as_f64()).collect(),
                points: to_f64_rows(path.points()),
            },
            signature: SignatureJson::from_tensor(result.states.endpoint()),
            target: SignatureJson::from_tensor(target),
            cost_trace: result.cost_trace.iter().map(|c| c.as_f64()).collect(),
            endpoint_error: result.endpoint_error.as_f64(),
            length: result.length.as_f64(),
            energy: result.energy.as_f64(),
            iterations_used: result.iterations_used,
            rejections: result.rejections,
            status: result.status.as_str().to_string(),
            t_star: None,
            history: Vec::new(),
            wall_time_s,
        }
    }

    /// Record of a horizon search; `params.inner` is stored at the accepted horizon.
    pub fn from_search<S: Scalar>(
        search: &VarTimeResult<S>,
        params: &TimeSearchParams<S>,
        target: &TruncatedTensor<S>,
        wall_time_s: f64,
    ) -> Self {
        let inner = SolverParams {
            mode: crate::cost::Mode::VariableTime,
            horizon: search.t_star,
            ..params.inner.clone()
        };
        let mut out = Self::from_solve(&search.result, &inner, target, wall_time_s);
        out.search = Some(params.into());
        out.t_star = Some(search.t_star.as_f64());
        out.history = search
            .history
            .iter()
            .map(|h| HistoryJson {
                horizon: h.horizon.as_f64(),
                endpoint_error: h.endpoint_error.as_f64(),
                length: h.length.as_f64(),
                scenario: h.scenario.as_str().to_string(),
            })
            .collect();
        out
    }

    pub fn control_path<S: Scalar>(&self) -> Result<ControlPath<S>> {
        ControlPath::new(
            S::lit(self.horizon),
            self.controls.iter().map(|r| r.iter().map(|&x| S::lit(x)).collect()).collect(),
        )
    }

    pub fn sampled_path<S: Scalar>(&self) -> Result<PiecewisePath<S>> {
        PiecewisePath::new(
            self.path.times.iter().map(|&t| S::lit(t)).collect(),
            self.path.points.iter().map(|r| r.iter().map(|&x| S::lit(x)).collect()).collect(),
        )
    }
}

fn to_f64_rows<S: Scalar>(rows: &[Vec<S>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|x| x.as_f64()).collect()).collect()
}

pub fn write_result(path: impl AsRef<Path>, result: &ResultJson) -> Result<()> {
    let mut out = create(path.as_ref())?;
    serde_json::to_writer_pretty(&mut out, result)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ResultJson> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let result: ResultJson =
        serde_json::from_reader(open(path)?).map_err(|e| Error::format(source.clone(), e.to_string()))?;
    if result.format_version != FORMAT_VERSION {
        return Err(Error::format(
            format!("{source}: format_version"),
            format!("unsupported version {} (expected {FORMAT_VERSION})", result.format_version),
        ));
    }
    Ok(result)
}
