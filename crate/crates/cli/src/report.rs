//! Summary table comparing fitted rate exponents against each family's
//! target, with a pass/fail verdict per study file.

use std::path::Path;

use ebconc_core::model::ModelFamily;
use ebconc_core::rate::{default_response, target_slope, RateCurve, RateResponse};

use crate::config::{family_from_str, response_from_str};
use crate::io::load_rate_study;
use crate::Result;

#[derive(Clone, Debug)]
pub struct ReportEntry {
    pub path: String,
    pub family: ModelFamily,
    pub response: RateResponse,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    pub r2: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub m: f64,
    pub pass: bool,
    pub note: String,
}

/// Slope tolerance used by the validation verdict.
fn slope_tolerance(family: ModelFamily) -> f64 {
    match family {
        ModelFamily::GaussianLocation => 0.15,
        ModelFamily::Histogram | ModelFamily::FixedDesignRegression => 0.2,
        ModelFamily::FiniteMixture | ModelFamily::AdaptiveMixture => 0.25,
        ModelFamily::SparseSequence => 0.0,
    }
}

fn sparse_trend_pass(curve: &RateCurve) -> (bool, String) {
    // No power-law target: check that the tail mass never increases by more
    // than two standard errors per grid step and ends below 1/2.
    for w in curve.points.windows(2) {
        let se = (w[0].tail_mass_se.powi(2) + w[1].tail_mass_se.powi(2)).sqrt();
        if w[1].tail_mass > w[0].tail_mass + 2.0 * se.max(1e-9) {
            return (
                false,
                format!(
                    "tail mass rose from {} to {} between n={} and n={}",
                    w[0].tail_mass, w[1].tail_mass, w[0].n, w[1].n
                ),
            );
        }
    }
    let last = curve.points.last().expect("non-empty grid");
    if last.tail_mass >= 0.5 {
        return (
            false,
            format!("tail mass at the largest n is {}", last.tail_mass),
        );
    }
    (true, "tail mass non-increasing".to_string())
}

pub fn evaluate_study(path: &Path) -> Result<ReportEntry> {
    let (curve, config) = load_rate_study(path)?;
    let family = family_from_str(&config.family)?;
    let response = match &config.response {
        Some(r) => response_from_str(r)?,
        None => default_response(family),
    };
    let target = target_slope(family, config.beta);
    let entry = match family {
        ModelFamily::SparseSequence => {
            let (pass, note) = sparse_trend_pass(&curve);
            ReportEntry {
                path: path.display().to_string(),
                family,
                response: RateResponse::TailMass,
                slope: curve.fit.as_ref().map(|f| f.slope),
                slope_se: curve.fit.as_ref().map(|f| f.slope_se),
                r2: curve.fit.as_ref().map(|f| f.r2),
                target: None,
                tolerance: None,
                m: curve.m,
                pass,
                note,
            }
        }
        _ => {
            let tol = slope_tolerance(family);
            let fit = curve.fit.as_ref();
            let slope = fit.map(|f| f.slope);
            let (pass, note) = match (slope, target) {
                (Some(s), Some(t)) => {
                    let gap = (s - t).abs();
                    (
                        gap <= tol,
                        format!("|slope - target| = {gap:.3} (tol {tol})"),
                    )
                }
                (None, _) => (false, "no usable exponent fit".to_string()),
                (_, None) => (false, "no target for this family/config".to_string()),
            };
            ReportEntry {
                path: path.display().to_string(),
                family,
                response,
                slope,
                slope_se: fit.map(|f| f.slope_se),
                r2: fit.map(|f| f.r2),
                target,
                tolerance: Some(tol),
                m: curve.m,
                pass,
                note,
            }
        }
    };
    Ok(entry)
}

fn opt(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.4}"),
        None => "-".to_string(),
    }
}

/// Plain-text table; returns the rendering and whether every study passed.
pub fn render_report(entries: &[ReportEntry]) -> (String, bool) {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<28} {:<17} {:<17} {:>9} {:>9} {:>7} {:>7} {:>5} {:>6}  {}\n",
        "study", "family", "response", "slope", "target", "tol", "r2", "M", "pass", "note"
    ));
    let mut all_pass = true;
    for e in entries {
        all_pass &= e.pass;
        let name = Path::new(&e.path)
            .file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| e.path.clone());
        out.push_str(&format!(
            "{:<28} {:<17} {:<17} {:>9} {:>9} {:>7} {:>7} {:>5} {:>6}  {}\n",
            name,
            e.family.name(),
            e.response.name(),
            opt(e.slope),
            opt(e.target),
            opt(e.tolerance),
            opt(e.r2),
            format!("{:.0}", e.m),
            if e.pass { "PASS" } else { "FAIL" },
            e.note,
        ));
    }
    (out, all_pass)
}

/// CSV rendering of the same table.
pub fn render_report_csv(entries: &[ReportEntry]) -> String {
    let mut out =
        String::from("study,family,response,slope,slope_se,target,tolerance,r2,m,pass,note\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            e.path.replace(',', ";"),
            e.family.name(),
            e.response.name(),
            opt(e.slope),
            opt(e.slope_se),
            opt(e.target),
            opt(e.tolerance),
            opt(e.r2),
            e.m,
            e.pass,
            e.note.replace(',', ";"),
        ));
    }
    out
}
