//! File formats: rate-study CSV + JSON manifest pairs, posterior draw
//! tables, dataset dumps, probe records, and schedule serialization.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! persist/load cycle reproduces every f64 bit for bit and identical runs
//! produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ebconc_core::model::{Dataset, ParamPoint, ParamValues, SieveIndex};
use ebconc_core::prior::Schedule;
use ebconc_core::rate::{
    ExponentFit, GridSummary, RateCurve, ReplicateOutcome, ReplicateRow,
};

use crate::config::StudyFileConfig;
use crate::{CliError, Result};

const SCHEMA_VERSION: &str = "1";
const CSV_HEADER: &str = "kind,n,replicate,eps_n,tail_mass,mean_dist_sq,mean_dist,\
tail_mass_se,mean_dist_sq_se,mean_dist_se,failures,error";

/// Manifest sitting next to each study CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyManifest {
    pub schema_version: String,
    pub kind: String,
    pub config: StudyFileConfig,
    pub m: f64,
    pub fit: Option<FitRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitRecord {
    pub response: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_se: f64,
    pub dropped: usize,
    pub residuals: Vec<f64>,
}

impl FitRecord {
    fn from_fit(fit: &ExponentFit) -> Self {
        FitRecord {
            response: fit.response.name().to_string(),
            slope: fit.slope,
            intercept: fit.intercept,
            r2: fit.r2,
            slope_se: fit.slope_se,
            dropped: fit.dropped,
            residuals: fit.residuals.clone(),
        }
    }

    fn to_fit(&self) -> Result<ExponentFit> {
        Ok(ExponentFit {
            response: crate::config::response_from_str(&self.response)?,
            slope: self.slope,
            intercept: self.intercept,
            r2: self.r2,
            slope_se: self.slope_se,
            dropped: self.dropped,
            residuals: self.residuals.clone(),
        })
    }
}

pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn sanitize(text: &str) -> String {
    text.replace([',', '\n', '\r'], ";")
}

/// Write the study as `<path>` (CSV: one row per (n, replicate), then a
/// summary block) plus `<path stem>.manifest.json`.
pub fn persist_rate_study(
    path: &Path,
    config: &StudyFileConfig,
    curve: &RateCurve,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    out.push_str(&format!("schema,{SCHEMA_VERSION},,,,,,,,,,\n"));
    for row in &curve.rows {
        match (&row.outcome, &row.error) {
            (Some(o), None) => out.push_str(&format!(
                "replicate,{},{},,{},{},{},,,,,\n",
                row.n,
                row.replicate,
                fmt_f64(o.tail_mass),
                fmt_f64(o.mean_dist_sq),
                fmt_f64(o.mean_dist),
            )),
            (_, Some(e)) => out.push_str(&format!(
                "replicate,{},{},,,,,,,,,{}\n",
                row.n,
                row.replicate,
                sanitize(e)
            )),
            (None, None) => {
                return Err(CliError::Config(
                    "replicate row carries neither outcome nor error".to_string(),
                ))
            }
        }
    }
    for p in &curve.points {
        out.push_str(&format!(
            "summary,{},,{},{},{},{},{},{},{},{},\n",
            p.n,
            fmt_f64(p.eps_n),
            fmt_f64(p.tail_mass),
            fmt_f64(p.mean_dist_sq),
            fmt_f64(p.mean_dist),
            fmt_f64(p.tail_mass_se),
            fmt_f64(p.mean_dist_sq_se),
            fmt_f64(p.mean_dist_se),
            p.failures,
        ));
    }
    write_atomic(path, out.as_bytes())?;

    let manifest = StudyManifest {
        schema_version: SCHEMA_VERSION.to_string(),
        kind: "ebconc-rate-study".to_string(),
        config: config.clone(),
        m: curve.m,
        fit: curve.fit.as_ref().map(FitRecord::from_fit),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&manifest_path(path), json.as_bytes())?;
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(bytes)?;
    file.flush()?;
    Ok(())
}

fn read_not_found(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::NotFound(path.display().to_string())
        } else {
            CliError::Io(e)
        }
    }
}

/// Load a study pair back; the round trip is lossless.
pub fn load_rate_study(path: &Path) -> Result<(RateCurve, StudyFileConfig)> {
    let text = fs::read_to_string(path).map_err(read_not_found(path))?;
    let mpath = manifest_path(path);
    let mtext = fs::read_to_string(&mpath).map_err(read_not_found(&mpath))?;
    let manifest: StudyManifest =
        serde_json::from_str(&mtext).map_err(|e| CliError::Malformed {
            what: "manifest",
            path: mpath.display().to_string(),
            message: e.to_string(),
        })?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(CliError::VersionMismatch {
            path: mpath.display().to_string(),
            found: manifest.schema_version,
            expected: SCHEMA_VERSION.to_string(),
        });
    }

    let malformed = |message: String| CliError::Malformed {
        what: "rate-study CSV",
        path: path.display().to_string(),
        message,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(malformed("missing or wrong header".to_string())),
    }
    match lines.next() {
        Some(s) if s.starts_with("schema,") => {
            let version = s.split(',').nth(1).unwrap_or_default();
            if version != SCHEMA_VERSION {
                return Err(CliError::VersionMismatch {
                    path: path.display().to_string(),
                    found: version.to_string(),
                    expected: SCHEMA_VERSION.to_string(),
                });
            }
        }
        _ => return Err(malformed("missing schema row".to_string())),
    }

    let parse_f64 = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| malformed(format!("bad float `{s}` in {what}")))
    };
    let parse_usize = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| malformed(format!("bad integer `{s}` in {what}")))
    };

    let mut rows = Vec::new();
    let mut points = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 12 {
            return Err(malformed(format!(
                "expected 12 cells, found {} in `{line}`",
                cells.len()
            )));
        }
        match cells[0] {
            "replicate" => {
                let n = parse_usize(cells[1], "replicate row")?;
                let replicate = parse_usize(cells[2], "replicate row")?;
                if cells[11].is_empty() {
                    rows.push(ReplicateRow {
                        n,
                        replicate,
                        outcome: Some(ReplicateOutcome {
                            tail_mass: parse_f64(cells[4], "tail_mass")?,
                            mean_dist_sq: parse_f64(cells[5], "mean_dist_sq")?,
                            mean_dist: parse_f64(cells[6], "mean_dist")?,
                        }),
                        error: None,
                    });
                } else {
                    rows.push(ReplicateRow {
                        n,
                        replicate,
                        outcome: None,
                        error: Some(cells[11].to_string()),
                    });
                }
            }
            "summary" => {
                points.push(GridSummary {
                    n: parse_usize(cells[1], "summary row")?,
                    eps_n: parse_f64(cells[3], "eps_n")?,
                    tail_mass: parse_f64(cells[4], "tail_mass")?,
                    mean_dist_sq: parse_f64(cells[5], "mean_dist_sq")?,
                    mean_dist: parse_f64(cells[6], "mean_dist")?,
                    tail_mass_se: parse_f64(cells[7], "tail_mass_se")?,
                    mean_dist_sq_se: parse_f64(cells[8], "mean_dist_sq_se")?,
                    mean_dist_se: parse_f64(cells[9], "mean_dist_se")?,
                    failures: parse_usize(cells[10], "failures")?,
                });
            }
            other => return Err(malformed(format!("unknown row kind `{other}`"))),
        }
    }
    let fit = match &manifest.fit {
        Some(f) => Some(f.to_fit()?),
        None => None,
    };
    Ok((
        RateCurve {
            m: manifest.m,
            points,
            rows,
            fit,
        },
        manifest.config,
    ))
}

/// Columnar posterior draws: one draw per row, header naming coordinates.
/// Sparse draws are written densely; coefficient draws are zero-padded to
/// the widest order in the bag.
pub fn write_draws(path: &Path, draws: &[ParamPoint], n: usize) -> Result<()> {
    let mut out = String::new();
    let first = draws.first().ok_or_else(|| {
        CliError::Config("no draws to write".to_string())
    })?;
    match &first.values {
        ParamValues::Location(_) => {
            out.push_str("theta\n");
            for d in draws {
                if let ParamValues::Location(t) = &d.values {
                    out.push_str(&fmt_f64(*t));
                    out.push('\n');
                }
            }
        }
        ParamValues::Simplex(w) => {
            let s = w.len();
            out.push_str(&header("w", s));
            for d in draws {
                if let ParamValues::Simplex(w) = &d.values {
                    push_row(&mut out, w);
                }
            }
        }
        ParamValues::Mixture { .. } | ParamValues::AdaptiveMixture { .. } => {
            let max_s = draws.iter().map(|d| d.sieve.size()).max().unwrap_or(1);
            let with_lambda = matches!(first.values, ParamValues::AdaptiveMixture { .. });
            let mut cols: Vec<String> = (1..=max_s).map(|k| format!("w{k}")).collect();
            cols.extend((1..=max_s).map(|k| format!("mu{k}")));
            if with_lambda {
                cols.push("lambda".to_string());
            }
            out.push_str(&cols.join(","));
            out.push('\n');
            for d in draws {
                let (w, mu, lambda) = match &d.values {
                    ParamValues::Mixture { weights, locations } => (weights, locations, None),
                    ParamValues::AdaptiveMixture {
                        weights,
                        locations,
                        precision,
                    } => (weights, locations, Some(*precision)),
                    _ => continue,
                };
                let mut cells: Vec<String> = Vec::with_capacity(2 * max_s + 1);
                for k in 0..max_s {
                    cells.push(fmt_f64(w.get(k).copied().unwrap_or(0.0)));
                }
                for k in 0..max_s {
                    cells.push(fmt_f64(mu.get(k).copied().unwrap_or(0.0)));
                }
                if let Some(l) = lambda {
                    cells.push(fmt_f64(l));
                }
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        ParamValues::Sparse(_) => {
            out.push_str(&header("theta_", n));
            for d in draws {
                let dense = d.dense_sparse(n).map_err(CliError::Core)?;
                push_row(&mut out, &dense);
            }
        }
        ParamValues::Coefficients(_) => {
            let max_s = draws.iter().map(|d| d.sieve.size()).max().unwrap_or(1);
            out.push_str(&header("theta_", max_s));
            for d in draws {
                if let ParamValues::Coefficients(c) = &d.values {
                    let mut padded = c.clone();
                    padded.resize(max_s, 0.0);
                    push_row(&mut out, &padded);
                }
            }
        }
    }
    write_atomic(path, out.as_bytes())
}

fn header(prefix: &str, k: usize) -> String {
    let cols: Vec<String> = (1..=k).map(|i| format!("{prefix}{i}")).collect();
    let mut h = cols.join(",");
    h.push('\n');
    h
}

fn push_row(out: &mut String, xs: &[f64]) {
    let cells: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// Dataset dump: `index,x` or, with a design, `index,t,y`.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::new();
    match &data.design {
        Some(design) => {
            out.push_str("index,t,y\n");
            for (i, (t, y)) in design.iter().zip(&data.observations).enumerate() {
                out.push_str(&format!("{i},{},{}\n", fmt_f64(*t), fmt_f64(*y)));
            }
        }
        None => {
            out.push_str("index,x\n");
            for (i, x) in data.observations.iter().enumerate() {
                out.push_str(&format!("{i},{}\n", fmt_f64(*x)));
            }
        }
    }
    write_atomic(path, out.as_bytes())
}

/// One condition-probe result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub condition: String,
    pub family: String,
    pub n: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: Option<f64>,
    pub pass: bool,
    /// -log(estimate) / (n eps_n^2), the finite-n constant the estimate implies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_part: Option<f64>,
}

pub fn write_probe_records(path: &Path, records: &[ProbeRecord]) -> Result<()> {
    let mut json = serde_json::to_string_pretty(records)?;
    json.push('\n');
    write_atomic(path, json.as_bytes())
}

/// Schedule as a JSON object with the documented keys.
pub fn schedule_to_json(schedule: &Schedule) -> serde_json::Value {
    serde_json::json!({
        "family": schedule.family.name(),
        "n": schedule.n,
        "beta": schedule.beta,
        "epsilon_n": schedule.eps_n,
        "S": schedule.s,
        "c": schedule.c,
        "delta": schedule.delta,
        "B": schedule.b,
        "psi": schedule.psi,
        "B_l": schedule.b_lower,
        "B_u": schedule.b_upper,
        "gamma": schedule.gamma,
    })
}

/// Fitted point as JSON (for fit-mle output).
pub fn param_point_to_json(point: &ParamPoint) -> serde_json::Value {
    let sieve = match &point.sieve {
        SieveIndex::Dimension(s) => serde_json::json!({"dimension": s}),
        SieveIndex::TruncationOrder(s) => serde_json::json!({"truncation_order": s}),
        SieveIndex::Subset(idx) => serde_json::json!({"subset": idx}),
    };
    let values = match &point.values {
        ParamValues::Location(t) => serde_json::json!({"theta": t}),
        ParamValues::Simplex(w) => serde_json::json!({"weights": w}),
        ParamValues::Mixture { weights, locations } => {
            serde_json::json!({"weights": weights, "locations": locations})
        }
        ParamValues::AdaptiveMixture {
            weights,
            locations,
            precision,
        } => serde_json::json!({
            "weights": weights, "locations": locations, "precision": precision
        }),
        ParamValues::Sparse(vals) => serde_json::json!({"values": vals}),
        ParamValues::Coefficients(c) => serde_json::json!({"coefficients": c}),
    };
    serde_json::json!({"sieve": sieve, "values": values})
}
