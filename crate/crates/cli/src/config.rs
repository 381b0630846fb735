//! Strict, flat JSON job configs. Unknown keys are errors (with a nearest-key
//! suggestion); every override is validated against the library's own
//! preconditions when the job is assembled.

use std::path::Path;

use serde::{Deserialize, Serialize};

use ebconc_core::model::{Kernel, ModelFamily};
use ebconc_core::rate::{AlphaPolicy, RateResponse, RateStudyConfig, TruthSpec};
use ebconc_core::sieve::EmConfig;

use crate::{CliError, Result};

/// Study job: one rate study over an n-grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFileConfig {
    pub task: String,
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_locations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_star: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

/// Condition-probe job.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeFileConfig {
    pub task: String,
    /// lp1 | gp1-toy | gp1-finite-dim | gamma-ratio | lp2 | s1
    pub condition: String,
    pub family: String,
    pub n: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// The C in the toy neighborhood-mass construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_const: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_star: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

/// Single-model job: simulate, fit-mle, or posterior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFileConfig {
    pub task: String,
    pub family: String,
    pub n: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_locations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_star: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_terms: Option<usize>,
    /// Sieve dimension / truncation order for fit-mle and posterior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    /// Explicit sparse subset (zero-based indices).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    /// exact | gibbs (sparse posterior only)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em_restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum JobConfig {
    Study(StudyFileConfig),
    Probe(ProbeFileConfig),
    Model(ModelFileConfig),
}

impl JobConfig {
    pub fn task(&self) -> &str {
        match self {
            JobConfig::Study(c) => &c.task,
            JobConfig::Probe(c) => &c.task,
            JobConfig::Model(c) => &c.task,
        }
    }

    pub fn out(&self) -> Option<&str> {
        match self {
            JobConfig::Study(c) => c.out.as_deref(),
            JobConfig::Probe(c) => c.out.as_deref(),
            JobConfig::Model(c) => c.out.as_deref(),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            JobConfig::Study(c) => c.seed = seed,
            JobConfig::Probe(c) => c.seed = seed,
            JobConfig::Model(c) => c.seed = seed,
        }
    }

    pub fn set_out(&mut self, out: String) {
        match self {
            JobConfig::Study(c) => c.out = Some(out),
            JobConfig::Probe(c) => c.out = Some(out),
            JobConfig::Model(c) => c.out = Some(out),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<JobConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::NotFound(path.display().to_string())
        } else {
            CliError::Io(e)
        }
    })?;
    parse_config_str(&text, &path.display().to_string())
}

pub fn parse_config_str(text: &str, label: &str) -> Result<JobConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::ConfigFile {
        path: label.to_string(),
        message: e.to_string(),
    })?;
    let task = value
        .get("task")
        .and_then(|t| t.as_str())
        .ok_or_else(|| CliError::ConfigFile {
            path: label.to_string(),
            message: "missing required key `task`".to_string(),
        })?
        .to_string();
    let strict = |e: serde_json::Error| CliError::ConfigFile {
        path: label.to_string(),
        message: suggest_key(&e.to_string()),
    };
    match task.as_str() {
        "rate-study" => Ok(JobConfig::Study(
            serde_json::from_value(value).map_err(strict)?,
        )),
        "probe-conditions" => Ok(JobConfig::Probe(
            serde_json::from_value(value).map_err(strict)?,
        )),
        "simulate" | "fit-mle" | "posterior" => Ok(JobConfig::Model(
            serde_json::from_value(value).map_err(strict)?,
        )),
        other => Err(CliError::ConfigFile {
            path: label.to_string(),
            message: format!(
                "unknown task `{other}`; expected one of `rate-study`, `probe-conditions`, \
                 `simulate`, `fit-mle`, `posterior`"
            ),
        }),
    }
}

/// Round-trippable emission: parse(emit(cfg)) == cfg.
pub fn emit_config(cfg: &JobConfig) -> String {
    let out = match cfg {
        JobConfig::Study(c) => serde_json::to_string_pretty(c),
        JobConfig::Probe(c) => serde_json::to_string_pretty(c),
        JobConfig::Model(c) => serde_json::to_string_pretty(c),
    };
    out.expect("configs serialize")
}

/// Append a nearest-key hint to serde's unknown-field message.
fn suggest_key(message: &str) -> String {
    let Some(rest) = message.strip_prefix("unknown field `") else {
        return message.to_string();
    };
    let Some(end) = rest.find('`') else {
        return message.to_string();
    };
    let unknown = &rest[..end];
    // The expected keys are listed in the same message, each backtick-quoted.
    let mut candidates = Vec::new();
    let mut scan = &rest[end + 1..];
    while let Some(start) = scan.find('`') {
        scan = &scan[start + 1..];
        if let Some(stop) = scan.find('`') {
            candidates.push(&scan[..stop]);
            scan = &scan[stop + 1..];
        } else {
            break;
        }
    }
    let best = candidates
        .iter()
        .map(|c| (edit_distance(unknown, c), *c))
        .min();
    match best {
        Some((dist, key)) if dist <= 3 => {
            format!("{message}; did you mean `{key}`?")
        }
        _ => message.to_string(),
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn family_from_str(s: &str) -> Result<ModelFamily> {
    Ok(match s {
        "gaussian_location" => ModelFamily::GaussianLocation,
        "histogram" => ModelFamily::Histogram,
        "finite_mixture" => ModelFamily::FiniteMixture,
        "sparse_sequence" => ModelFamily::SparseSequence,
        "regression" => ModelFamily::FixedDesignRegression,
        "adaptive_mixture" => ModelFamily::AdaptiveMixture,
        other => {
            return Err(CliError::Config(format!(
                "unknown family `{other}`; expected one of `gaussian_location`, `histogram`, \
                 `finite_mixture`, `sparse_sequence`, `regression`, `adaptive_mixture`"
            )))
        }
    })
}

pub fn kernel_from_str(s: &str) -> Result<Kernel> {
    Ok(match s {
        "normal" => Kernel::Normal,
        "cauchy" => Kernel::Cauchy,
        other => {
            return Err(CliError::Config(format!(
                "unknown kernel `{other}`; expected `normal` or `cauchy`"
            )))
        }
    })
}

pub fn response_from_str(s: &str) -> Result<RateResponse> {
    Ok(match s {
        "tail_mass" => RateResponse::TailMass,
        "mean_sq_distance" => RateResponse::MeanSqDistance,
        "mean_distance" => RateResponse::MeanDistance,
        other => {
            return Err(CliError::Config(format!(
                "unknown response `{other}`; expected `tail_mass`, `mean_sq_distance`, or \
                 `mean_distance`"
            )))
        }
    })
}

#[allow(clippy::too_many_arguments)] // one slot per flat config key
fn truth_from_fields(
    family: ModelFamily,
    theta_star: Option<f64>,
    truth_slope: Option<f64>,
    truth_bins: Option<usize>,
    truth_weights: &Option<Vec<f64>>,
    truth_locations: &Option<Vec<f64>>,
    truth_precision: Option<f64>,
    s_star: Option<usize>,
    magnitude: Option<f64>,
    decay: Option<f64>,
    truth_terms: Option<usize>,
) -> Result<TruthSpec> {
    let missing = |key: &str| CliError::Config(format!("family `{}` needs `{key}`", family.name()));
    Ok(match family {
        ModelFamily::GaussianLocation => TruthSpec::Gaussian {
            theta: theta_star.ok_or_else(|| missing("theta_star"))?,
        },
        ModelFamily::Histogram => {
            if let Some(w) = truth_weights {
                TruthSpec::HistogramWeights { weights: w.clone() }
            } else {
                TruthSpec::HistogramLinear {
                    slope: truth_slope.ok_or_else(|| missing("truth_slope or truth_weights"))?,
                    bins: truth_bins.unwrap_or(512),
                }
            }
        }
        ModelFamily::FiniteMixture | ModelFamily::AdaptiveMixture => {
            let weights = truth_weights
                .clone()
                .ok_or_else(|| missing("truth_weights"))?;
            let locations = truth_locations
                .clone()
                .ok_or_else(|| missing("truth_locations"))?;
            let precision = match family {
                ModelFamily::AdaptiveMixture => {
                    Some(truth_precision.ok_or_else(|| missing("truth_precision"))?)
                }
                _ => None,
            };
            TruthSpec::Mixture {
                weights,
                locations,
                precision,
            }
        }
        ModelFamily::SparseSequence => TruthSpec::Sparse {
            s_star: s_star.ok_or_else(|| missing("s_star"))?,
            magnitude: magnitude.ok_or_else(|| missing("magnitude"))?,
        },
        ModelFamily::FixedDesignRegression => TruthSpec::SobolevDecay {
            decay: decay.ok_or_else(|| missing("decay"))?,
            terms: truth_terms.unwrap_or(64),
        },
    })
}

fn alpha_policy(p: Option<f64>, alpha: Option<f64>) -> Result<AlphaPolicy> {
    match (p, alpha) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "set at most one of `p` and `alpha`".to_string(),
        )),
        (Some(p), None) => Ok(AlphaPolicy::FromP(p)),
        (None, Some(a)) => Ok(AlphaPolicy::Fixed(a)),
        (None, None) => Ok(AlphaPolicy::Auto),
    }
}

impl StudyFileConfig {
    pub fn to_study(&self) -> Result<RateStudyConfig> {
        let family = family_from_str(&self.family)?;
        let truth = truth_from_fields(
            family,
            self.theta_star,
            self.truth_slope,
            self.truth_bins,
            &self.truth_weights,
            &self.truth_locations,
            self.truth_precision,
            self.s_star,
            self.magnitude,
            self.decay,
            self.truth_terms,
        )?;
        let mut cfg = RateStudyConfig::new(family, truth, self.n_grid.clone(), self.seed);
        if let Some(k) = &self.kernel {
            cfg.kernel = Some(kernel_from_str(k)?);
        }
        if let Some(x) = self.sigma {
            cfg.sigma = x;
        }
        cfg.replicates = self.replicates;
        if let Some(x) = self.posterior_draws {
            cfg.posterior_draws = x;
        }
        cfg.m = self.m;
        cfg.alpha = alpha_policy(self.p, self.alpha)?;
        if let Some(x) = self.gamma {
            cfg.gamma = x;
        }
        if let Some(x) = self.weight_b {
            cfg.weight_b = x;
        }
        if let Some(x) = self.weight_d {
            cfg.weight_d = x;
        }
        if let Some(x) = self.weight_r {
            cfg.weight_r = x;
        }
        if let Some(x) = self.adaptive_b {
            cfg.adaptive_b = x;
        }
        if let Some(x) = self.d {
            cfg.d = x;
        }
        cfg.beta = self.beta;
        if let Some(x) = self.psi {
            cfg.psi = x;
        }
        cfg.s_max = self.s_max;
        cfg.sweeps = self.sweeps;
        cfg.burn_in = self.burn_in;
        cfg.em = em_from_fields(
            self.em_max_iters,
            self.em_tol,
            self.em_restarts,
            None,
        );
        if let Some(r) = &self.response {
            cfg.response = Some(response_from_str(r)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn em_from_fields(
    max_iters: Option<usize>,
    tol: Option<f64>,
    restarts: Option<usize>,
    location_bound: Option<f64>,
) -> EmConfig {
    let mut em = EmConfig::default();
    if let Some(x) = max_iters {
        em.max_iters = x;
    }
    if let Some(x) = tol {
        em.tol = x;
    }
    if let Some(x) = restarts {
        em.restarts = x;
    }
    if let Some(x) = location_bound {
        em.location_bound = x;
    }
    em
}

impl ModelFileConfig {
    pub fn family(&self) -> Result<ModelFamily> {
        family_from_str(&self.family)
    }

    pub fn truth(&self) -> Result<TruthSpec> {
        truth_from_fields(
            self.family()?,
            self.theta_star,
            self.truth_slope,
            self.truth_bins,
            &self.truth_weights,
            &self.truth_locations,
            self.truth_precision,
            self.s_star,
            self.magnitude,
            self.decay,
            self.truth_terms,
        )
    }

    pub fn alpha_policy(&self) -> Result<AlphaPolicy> {
        alpha_policy(self.p, self.alpha)
    }
}
