//! Seeded replicate studies across an n-grid: simulate, fit the sieve MLE,
//! build the empirical prior, form the posterior, and measure how much
//! posterior mass escapes the Hellinger concentration set and how far the
//! draws sit from the truth. Ends with a log-log exponent fit.

#[allow(unused_imports)] // f64 methods come from the trait in no_std builds
use num_traits::Float;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::basis;
use crate::divergence::{hellinger_sq, DivergenceMethod, QuadratureCfg};
use crate::error::Error;
use crate::linalg::{gram, Cholesky};
use crate::model::{simulate, Kernel, ModelFamily, ModelSpec, ParamPoint, SieveIndex};
use crate::posterior::{
    posterior_gaussian_location, posterior_histogram, posterior_mixture_mh, posterior_regression,
    posterior_sparse_mean, PosteriorRep, SparseMode,
};
use crate::prior::{build_prior, EmpiricalPrior, HierarchicalPrior, ModelWeights, Schedule};
use crate::rng::derive_seed;
use crate::sieve::{sieve_mle, EmConfig};
use crate::special::mean_and_se;
use crate::model::bin_counts;
use crate::Result;

/// Data-generating truth for one study.
#[derive(Clone, Debug, PartialEq)]
pub enum TruthSpec {
    /// Location theta*.
    Gaussian { theta: f64 },
    /// Density 1 + slope (x - 1/2) on the unit interval, discretized to `bins`
    /// (the bin probabilities are exact for a linear density).
    HistogramLinear { slope: f64, bins: usize },
    /// Explicit histogram weights.
    HistogramWeights { weights: Vec<f64> },
    /// Finite mixture truth; `precision` only for the adaptive family.
    Mixture {
        weights: Vec<f64>,
        locations: Vec<f64>,
        precision: Option<f64>,
    },
    /// theta*_i = ±magnitude (alternating sign) for i < s_star, else 0.
    Sparse { s_star: usize, magnitude: f64 },
    /// Basis coefficients theta*_j = j^{-decay}, j = 1..terms.
    SobolevDecay { decay: f64, terms: usize },
}

impl TruthSpec {
    pub fn to_param_point(&self, family: ModelFamily) -> Result<ParamPoint> {
        let mismatch = || {
            Err(Error::FamilyMismatch(format!(
                "truth spec does not fit family {}",
                family.name()
            )))
        };
        match (self, family) {
            (TruthSpec::Gaussian { theta }, ModelFamily::GaussianLocation) => {
                Ok(ParamPoint::location(*theta))
            }
            (TruthSpec::HistogramLinear { slope, bins }, ModelFamily::Histogram) => {
                if slope.abs() >= 2.0 || *bins == 0 {
                    return Err(Error::InvalidArgument {
                        name: "slope",
                        reason: "|slope| < 2 keeps the density positive".into(),
                    });
                }
                // Exact bin probabilities of 1 + slope (x - 1/2): the
                // midpoint value times the width.
                let s = *bins as f64;
                let weights = (0..*bins)
                    .map(|k| {
                        let mid = (k as f64 + 0.5) / s;
                        (1.0 + slope * (mid - 0.5)) / s
                    })
                    .collect();
                Ok(ParamPoint::simplex(weights))
            }
            (TruthSpec::HistogramWeights { weights }, ModelFamily::Histogram) => {
                Ok(ParamPoint::simplex(weights.clone()))
            }
            (
                TruthSpec::Mixture {
                    weights,
                    locations,
                    precision: None,
                },
                ModelFamily::FiniteMixture,
            ) => Ok(ParamPoint::mixture(weights.clone(), locations.clone())),
            (
                TruthSpec::Mixture {
                    weights,
                    locations,
                    precision: Some(l),
                },
                ModelFamily::AdaptiveMixture,
            ) => Ok(ParamPoint::adaptive_mixture(
                weights.clone(),
                locations.clone(),
                *l,
            )),
            (TruthSpec::Sparse { s_star, magnitude }, ModelFamily::SparseSequence) => {
                let idx: Vec<usize> = (0..*s_star).collect();
                let vals: Vec<f64> = (0..*s_star)
                    .map(|i| if i % 2 == 0 { *magnitude } else { -magnitude })
                    .collect();
                Ok(ParamPoint::sparse(idx, vals))
            }
            (TruthSpec::SobolevDecay { decay, terms }, ModelFamily::FixedDesignRegression) => {
                let coeffs = (1..=*terms)
                    .map(|j| (j as f64).powf(-decay))
                    .collect();
                Ok(ParamPoint::coefficients(coeffs))
            }
            _ => mismatch(),
        }
    }

    fn sparse_s_star(&self) -> Option<usize> {
        match self {
            TruthSpec::Sparse { s_star, .. } => Some(*s_star),
            _ => None,
        }
    }
}

/// How the likelihood power is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaPolicy {
    /// Full likelihood for the known-rate families, p = 2 (alpha = 1/4)
    /// for the adaptive ones.
    Auto,
    FromP(f64),
    Fixed(f64),
}

impl AlphaPolicy {
    pub fn resolve(&self, family: ModelFamily) -> Result<f64> {
        match self {
            AlphaPolicy::Auto => Ok(match family {
                ModelFamily::GaussianLocation
                | ModelFamily::Histogram
                | ModelFamily::FiniteMixture => 1.0,
                ModelFamily::SparseSequence
                | ModelFamily::FixedDesignRegression
                | ModelFamily::AdaptiveMixture => 0.25,
            }),
            AlphaPolicy::FromP(p) => crate::posterior::alpha_from_p(*p),
            AlphaPolicy::Fixed(alpha) => {
                if *alpha > 0.0 && *alpha <= 1.0 {
                    Ok(*alpha)
                } else {
                    Err(Error::InvalidArgument {
                        name: "alpha",
                        reason: "fixed alpha must lie in (0, 1]".into(),
                    })
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateResponse {
    TailMass,
    MeanSqDistance,
    MeanDistance,
}

impl RateResponse {
    pub fn name(self) -> &'static str {
        match self {
            RateResponse::TailMass => "tail_mass",
            RateResponse::MeanSqDistance => "mean_sq_distance",
            RateResponse::MeanDistance => "mean_distance",
        }
    }
}

/// The response whose log-log slope the family's target rate speaks about.
pub fn default_response(family: ModelFamily) -> RateResponse {
    match family {
        ModelFamily::GaussianLocation
        | ModelFamily::SparseSequence
        | ModelFamily::FixedDesignRegression => RateResponse::MeanSqDistance,
        ModelFamily::Histogram | ModelFamily::FiniteMixture | ModelFamily::AdaptiveMixture => {
            RateResponse::MeanDistance
        }
    }
}

/// Target log-log slope for the family's default response, when the theory
/// pins one (the sparse rate is not a pure power of n). For the adaptive
/// mixture a supplied smoothness sets the target; without one the truth is
/// taken to be a finite mixture, whose target matches the fixed-S family.
pub fn target_slope(family: ModelFamily, beta: Option<f64>) -> Option<f64> {
    match family {
        ModelFamily::GaussianLocation => Some(-1.0),
        ModelFamily::Histogram => beta.map(|b| -b / (2.0 * b + 1.0)),
        ModelFamily::FixedDesignRegression => beta.map(|b| -2.0 * b / (2.0 * b + 1.0)),
        ModelFamily::FiniteMixture => Some(-0.5),
        ModelFamily::AdaptiveMixture => beta.map(|b| -b / (2.0 * b + 1.0)).or(Some(-0.5)),
        ModelFamily::SparseSequence => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateStudyConfig {
    pub family: ModelFamily,
    pub kernel: Option<Kernel>,
    pub sigma: f64,
    pub truth: TruthSpec,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub posterior_draws: usize,
    /// Concentration-set constant; calibrated by a pilot when absent.
    pub m: Option<f64>,
    pub alpha: AlphaPolicy,
    pub gamma: f64,
    /// Constant g in the model weights.
    pub weight_b: f64,
    /// Adaptive-weight constants.
    pub weight_d: f64,
    pub weight_r: f64,
    /// Exponent b of the adaptive precision bounds.
    pub adaptive_b: f64,
    /// Likelihood-neighborhood constant.
    pub d: f64,
    pub beta: Option<f64>,
    /// Gaussian-location prior scale.
    pub psi: f64,
    pub s_max: Option<usize>,
    pub sweeps: Option<usize>,
    pub burn_in: Option<usize>,
    pub em: EmConfig,
    pub seed: u64,
    pub response: Option<RateResponse>,
}

impl RateStudyConfig {
    pub fn new(family: ModelFamily, truth: TruthSpec, n_grid: Vec<usize>, seed: u64) -> Self {
        RateStudyConfig {
            family,
            kernel: None,
            sigma: 1.0,
            truth,
            n_grid,
            replicates: 50,
            posterior_draws: 100,
            m: None,
            alpha: AlphaPolicy::Auto,
            gamma: 0.1,
            weight_b: 1.0,
            weight_d: 1.0,
            weight_r: 2.0,
            adaptive_b: 2.5,
            d: 2.0,
            beta: None,
            psi: 1.0,
            s_max: None,
            sweeps: None,
            burn_in: None,
            em: EmConfig::default(),
            seed,
            response: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument {
                name: "n_grid",
                reason: "the n grid must be non-empty and strictly increasing".into(),
            });
        }
        if self.replicates < 20 {
            return Err(Error::InvalidArgument {
                name: "replicates",
                reason: "rate studies need at least 20 replicates".into(),
            });
        }
        if self.posterior_draws == 0 {
            return Err(Error::InvalidArgument {
                name: "posterior_draws",
                reason: "need at least one posterior draw per replicate".into(),
            });
        }
        if let Some(m) = self.m {
            if !(m > 0.0) {
                return Err(Error::InvalidArgument {
                    name: "m",
                    reason: "M must be positive".into(),
                });
            }
        }
        if matches!(
            self.family,
            ModelFamily::Histogram | ModelFamily::FixedDesignRegression
        ) && self.beta.is_none()
        {
            return Err(Error::InvalidArgument {
                name: "beta",
                reason: "this family's target rate needs the smoothness beta".into(),
            });
        }
        if let TruthSpec::SobolevDecay { terms, .. } = self.truth {
            let n0 = self.n_grid[0];
            if terms >= n0 {
                return Err(Error::InvalidArgument {
                    name: "truth_terms",
                    reason: format!("need truth_terms < smallest n ({n0})"),
                });
            }
        }
        self.alpha.resolve(self.family)?;
        self.em.validate()?;
        // Surface range errors (beta, gamma, b) before any replicate runs.
        let n0 = self.n_grid[0];
        self.model(n0)?;
        self.schedule(n0)?;
        self.truth.to_param_point(self.family)?;
        Ok(())
    }

    fn model(&self, n: usize) -> Result<ModelSpec> {
        let mut model = ModelSpec::new(self.family, n)?;
        if self.family.is_mixture() {
            if let Some(k) = self.kernel {
                model = model.with_kernel(k)?;
            }
        }
        if matches!(
            self.family,
            ModelFamily::GaussianLocation | ModelFamily::FiniteMixture
                | ModelFamily::FixedDesignRegression
        ) {
            model = model.with_sigma(self.sigma)?;
        }
        Ok(model)
    }

    fn schedule(&self, n: usize) -> Result<Schedule> {
        match self.family {
            ModelFamily::GaussianLocation => Schedule::gaussian_location(n, self.psi),
            ModelFamily::Histogram => {
                Schedule::histogram(n, self.beta.expect("validated"))
            }
            ModelFamily::FiniteMixture => Schedule::finite_mixture(n, self.sigma, self.d),
            ModelFamily::SparseSequence => Schedule::sparse_sequence(
                n,
                self.truth.sparse_s_star().unwrap_or(1),
                self.gamma,
            ),
            ModelFamily::FixedDesignRegression => {
                Schedule::regression(n, self.beta.expect("validated"), self.gamma)
            }
            ModelFamily::AdaptiveMixture => {
                Schedule::adaptive_mixture(n, self.adaptive_b, 1, self.beta)
            }
        }
    }

    fn default_s_max(&self, n: usize) -> usize {
        match self.s_max {
            Some(s) => s.min(n - 1),
            None => match self.family {
                ModelFamily::FixedDesignRegression => {
                    (2.0 * (n as f64).sqrt()).ceil() as usize
                }
                ModelFamily::AdaptiveMixture => (2.0 * (n as f64).ln()).ceil() as usize,
                _ => n,
            }
            .clamp(1, n - 1),
        }
    }

    fn chain_lengths(&self) -> (usize, usize) {
        let sweeps = self.sweeps.unwrap_or(self.posterior_draws);
        let burn_in = self.burn_in.unwrap_or((sweeps / 2).max(200));
        (sweeps, burn_in)
    }
}

/// Per-n reusable state shared across replicates.
#[derive(Clone, Debug)]
pub struct StudyContext {
    pub n: usize,
    pub model: ModelSpec,
    pub schedule: Schedule,
    pub truth_point: ParamPoint,
    /// Regression only: Cholesky of the gram over max(s_max, truth terms)
    /// coefficients plus the padded truth, for fast empirical-norm math.
    reg_distance: Option<RegDistance>,
}

#[derive(Clone, Debug)]
struct RegDistance {
    chol: Cholesky,
    dim: usize,
    truth_padded: Vec<f64>,
}

pub fn build_context(cfg: &RateStudyConfig, n: usize) -> Result<StudyContext> {
    let model = cfg.model(n)?;
    let schedule = cfg.schedule(n)?;
    let truth_point = cfg.truth.to_param_point(cfg.family)?;
    truth_point.validate(&model)?;
    let reg_distance = if cfg.family == ModelFamily::FixedDesignRegression {
        let s_max = cfg.default_s_max(n);
        let truth = match &truth_point.values {
            crate::model::ParamValues::Coefficients(c) => c.clone(),
            _ => unreachable!("validated above"),
        };
        let dim = s_max.max(truth.len()).min(n - 1);
        let phi = basis::fourier_design(n, dim);
        let g = gram(&phi, n, dim);
        let chol = Cholesky::factor(&g, dim, dim)?;
        let mut truth_padded = truth;
        truth_padded.resize(dim, 0.0);
        Some(RegDistance {
            chol,
            dim,
            truth_padded,
        })
    } else {
        None
    };
    Ok(StudyContext {
        n,
        model,
        schedule,
        truth_point,
        reg_distance,
    })
}

/// Squared-distance threshold equivalent to membership in the concentration
/// set, in the same units as the per-draw `dist_sq`.
pub fn tail_threshold(ctx: &StudyContext, m: f64) -> f64 {
    let eps = ctx.schedule.eps_n;
    let n = ctx.n as f64;
    let sigma2 = ctx.model.sigma * ctx.model.sigma;
    match ctx.model.family {
        // dist_sq = (theta - theta*)^2.
        ModelFamily::GaussianLocation => 8.0 * sigma2 * m * m * eps * eps,
        // dist_sq = squared marginal Hellinger distance.
        ModelFamily::Histogram | ModelFamily::FiniteMixture | ModelFamily::AdaptiveMixture => {
            -(-(m * m * eps * eps)).exp_m1()
        }
        // dist_sq = squared coordinate norm.
        ModelFamily::SparseSequence => 8.0 * m * m * n * eps * eps,
        // dist_sq = squared empirical norm.
        ModelFamily::FixedDesignRegression => 8.0 * sigma2 * m * m * eps * eps,
    }
}

/// Family-appropriate squared distance of one posterior draw to the truth.
fn draw_dist_sq(ctx: &StudyContext, draw: &ParamPoint) -> Result<f64> {
    match ctx.model.family {
        ModelFamily::GaussianLocation => {
            let (a, b) = match (&draw.values, &ctx.truth_point.values) {
                (
                    crate::model::ParamValues::Location(a),
                    crate::model::ParamValues::Location(b),
                ) => (*a, *b),
                _ => unreachable!(),
            };
            Ok((a - b) * (a - b))
        }
        ModelFamily::Histogram => {
            hellinger_sq(&ctx.model, draw, &ctx.truth_point, DivergenceMethod::ClosedForm)
        }
        ModelFamily::FiniteMixture | ModelFamily::AdaptiveMixture => {
            let cfg = QuadratureCfg::for_kernel(ctx.model.kernel.expect("mixture kernel"));
            hellinger_sq(
                &ctx.model,
                draw,
                &ctx.truth_point,
                DivergenceMethod::Quadrature(cfg),
            )
        }
        ModelFamily::SparseSequence => {
            let a = draw.dense_sparse(ctx.n)?;
            let b = ctx.truth_point.dense_sparse(ctx.n)?;
            Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum())
        }
        ModelFamily::FixedDesignRegression => {
            let rd = ctx.reg_distance.as_ref().expect("regression context");
            let coeffs = match &draw.values {
                crate::model::ParamValues::Coefficients(c) => c,
                _ => unreachable!(),
            };
            let mut diff = vec![0.0; rd.dim];
            for (k, t) in rd.truth_padded.iter().enumerate() {
                diff[k] = coeffs.get(k).copied().unwrap_or(0.0) - t;
            }
            Ok(rd.chol.quad_form_prefix(&diff, rd.dim) / ctx.n as f64)
        }
    }
}

/// One replicate's posterior draws, reduced to squared distances.
fn replicate_dist_sq(
    cfg: &RateStudyConfig,
    ctx: &StudyContext,
    replicate: usize,
    salt: u64,
) -> Result<Vec<f64>> {
    let data_seed = derive_seed(cfg.seed, &[salt, ctx.n as u64, replicate as u64, 0]);
    let draw_seed = derive_seed(cfg.seed, &[salt, ctx.n as u64, replicate as u64, 1]);
    let data = simulate(&ctx.model, &ctx.truth_point, data_seed)?;
    let alpha = cfg.alpha.resolve(cfg.family)?;
    // Exact representations get 10x the draws to suppress Monte Carlo error.
    let exact_draws = cfg.posterior_draws * 10;
    let draws: Vec<ParamPoint> = match cfg.family {
        ModelFamily::GaussianLocation => {
            let fit = sieve_mle(&ctx.model, &SieveIndex::Dimension(1), &data, None)?;
            let prior = match build_prior(&ctx.model, &fit.point, &ctx.schedule)? {
                EmpiricalPrior::Gaussian(g) => g,
                _ => unreachable!(),
            };
            let post = posterior_gaussian_location(&prior, &ctx.model, &data, alpha)?;
            PosteriorRep::ExactGaussian(post).sample_exact(exact_draws, draw_seed)?
        }
        ModelFamily::Histogram => {
            let s = ctx.schedule.s;
            let fit = sieve_mle(&ctx.model, &SieveIndex::Dimension(s), &data, None)?;
            let prior = match build_prior(&ctx.model, &fit.point, &ctx.schedule)? {
                EmpiricalPrior::Dirichlet(d) => d,
                _ => unreachable!(),
            };
            let counts = bin_counts(s, &data.observations);
            let post = posterior_histogram(&prior, &counts)?;
            PosteriorRep::ExactDirichlet(post).sample_exact(exact_draws, draw_seed)?
        }
        ModelFamily::FiniteMixture => {
            let s = ctx.schedule.s;
            let em = EmConfig {
                location_bound: ctx.schedule.b.expect("mixture schedule has B"),
                ..cfg.em.clone()
            };
            let fit = sieve_mle(&ctx.model, &SieveIndex::Dimension(s), &data, Some(&em))?;
            let prior = build_prior(&ctx.model, &fit.point, &ctx.schedule)?;
            let (sweeps, burn_in) = cfg.chain_lengths();
            let bag =
                posterior_mixture_mh(&ctx.model, &data, &prior, alpha, draw_seed, sweeps, burn_in)?;
            bag.draws
        }
        ModelFamily::AdaptiveMixture => {
            let s_max = cfg.default_s_max(ctx.n);
            let prior = HierarchicalPrior::adaptive_mixture(
                &ctx.model,
                &data,
                cfg.adaptive_b,
                cfg.weight_d,
                cfg.weight_r,
                s_max,
                &cfg.em,
            )?;
            let (sweeps, burn_in) = cfg.chain_lengths();
            let bag = posterior_mixture_mh(
                &ctx.model,
                &data,
                &EmpiricalPrior::Hierarchical(prior),
                alpha,
                draw_seed,
                sweeps,
                burn_in,
            )?;
            bag.draws
        }
        ModelFamily::SparseSequence => {
            let weights = ModelWeights::sparse_subset(ctx.n, cfg.weight_b, ctx.n);
            let (sweeps, burn_in) = cfg.chain_lengths();
            let rep = posterior_sparse_mean(
                &data,
                &weights,
                cfg.gamma,
                alpha,
                SparseMode::Gibbs { sweeps, burn_in },
                draw_seed,
            )?;
            match rep {
                PosteriorRep::SampleBag(bag) => bag.draws,
                _ => unreachable!(),
            }
        }
        ModelFamily::FixedDesignRegression => {
            let s_max = cfg.default_s_max(ctx.n);
            let weights = ModelWeights::truncation_order(ctx.n, cfg.weight_b, s_max);
            let post =
                posterior_regression(&ctx.model, &data, &weights, cfg.gamma, alpha, s_max)?;
            PosteriorRep::IndexEnumeration(post).sample_exact(exact_draws, draw_seed)?
        }
    };
    draws.iter().map(|d| draw_dist_sq(ctx, d)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplicateOutcome {
    pub tail_mass: f64,
    pub mean_dist_sq: f64,
    pub mean_dist: f64,
}

/// One fully seeded replicate: posterior draws reduced to the three
/// responses at the given concentration constant.
pub fn run_replicate(
    cfg: &RateStudyConfig,
    ctx: &StudyContext,
    replicate: usize,
    m: f64,
) -> Result<ReplicateOutcome> {
    let dist_sq = replicate_dist_sq(cfg, ctx, replicate, 0)?;
    Ok(outcome_from_dist_sq(&dist_sq, tail_threshold(ctx, m)))
}

fn outcome_from_dist_sq(dist_sq: &[f64], threshold: f64) -> ReplicateOutcome {
    let k = dist_sq.len() as f64;
    let tail = dist_sq.iter().filter(|&&d| d > threshold).count() as f64 / k;
    ReplicateOutcome {
        tail_mass: tail,
        mean_dist_sq: dist_sq.iter().sum::<f64>() / k,
        mean_dist: dist_sq.iter().map(|d| d.sqrt()).sum::<f64>() / k,
    }
}

/// Pilot calibration of M: smallest value in {1, 2, 4, 8} whose tail mass at
/// the largest n falls below 1/2 (the largest value otherwise).
pub fn calibrate_m(cfg: &RateStudyConfig) -> Result<f64> {
    let n = *cfg.n_grid.last().expect("validated non-empty grid");
    let ctx = build_context(cfg, n)?;
    let pilot = cfg.replicates.min(20);
    let mut all: Vec<Vec<f64>> = Vec::with_capacity(pilot);
    for rep in 0..pilot {
        all.push(replicate_dist_sq(cfg, &ctx, rep, 0x9_1107)?);
    }
    let ladder = [1.0, 2.0, 4.0, 8.0];
    for &m in &ladder {
        let threshold = tail_threshold(&ctx, m);
        let mean_tail: f64 = all
            .iter()
            .map(|d| outcome_from_dist_sq(d, threshold).tail_mass)
            .sum::<f64>()
            / pilot as f64;
        if mean_tail < 0.5 {
            return Ok(m);
        }
    }
    Ok(*ladder.last().expect("non-empty ladder"))
}

/// One CSV-able row of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRow {
    pub n: usize,
    pub replicate: usize,
    pub outcome: Option<ReplicateOutcome>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSummary {
    pub n: usize,
    pub eps_n: f64,
    pub tail_mass: f64,
    pub tail_mass_se: f64,
    pub mean_dist_sq: f64,
    pub mean_dist_sq_se: f64,
    pub mean_dist: f64,
    pub mean_dist_se: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFit {
    pub response: RateResponse,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_se: f64,
    /// Grid points dropped for non-positive responses.
    pub dropped: usize,
    pub residuals: Vec<f64>,
}

/// Per-n Monte Carlo summaries plus the fitted log-log exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct RateCurve {
    pub m: f64,
    pub points: Vec<GridSummary>,
    pub rows: Vec<ReplicateRow>,
    pub fit: Option<ExponentFit>,
}

/// Sequential study driver; the std companion crate parallelizes replicates
/// with the same seeds, so outputs agree bit for bit.
pub fn run_rate_study(cfg: &RateStudyConfig) -> Result<RateCurve> {
    cfg.validate()?;
    let m = match cfg.m {
        Some(m) => m,
        None => calibrate_m(cfg)?,
    };
    let mut rows = Vec::with_capacity(cfg.n_grid.len() * cfg.replicates);
    for &n in &cfg.n_grid {
        let ctx = build_context(cfg, n)?;
        for rep in 0..cfg.replicates {
            let row = match run_replicate(cfg, &ctx, rep, m) {
                Ok(outcome) => ReplicateRow {
                    n,
                    replicate: rep,
                    outcome: Some(outcome),
                    error: None,
                },
                Err(e) => ReplicateRow {
                    n,
                    replicate: rep,
                    outcome: None,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    summarize_study(cfg, m, rows)
}

/// Aggregate per-replicate rows into the curve; fails when more than 5% of
/// replicates errored.
pub fn summarize_study(
    cfg: &RateStudyConfig,
    m: f64,
    rows: Vec<ReplicateRow>,
) -> Result<RateCurve> {
    let failed = rows.iter().filter(|r| r.outcome.is_none()).count();
    if 20 * failed > rows.len() {
        return Err(Error::StudyFailure {
            failed,
            total: rows.len(),
        });
    }
    let mut points = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let schedule = cfg.schedule(n)?;
        let ok: Vec<&ReplicateOutcome> = rows
            .iter()
            .filter(|r| r.n == n)
            .filter_map(|r| r.outcome.as_ref())
            .collect();
        let failures = rows.iter().filter(|r| r.n == n && r.outcome.is_none()).count();
        let collect = |f: fn(&ReplicateOutcome) -> f64| -> Vec<f64> {
            ok.iter().map(|o| f(o)).collect()
        };
        let (tail, tail_se) = mean_and_se(&collect(|o| o.tail_mass));
        let (dsq, dsq_se) = mean_and_se(&collect(|o| o.mean_dist_sq));
        let (dist, dist_se) = mean_and_se(&collect(|o| o.mean_dist));
        points.push(GridSummary {
            n,
            eps_n: schedule.eps_n,
            tail_mass: tail,
            tail_mass_se: tail_se,
            mean_dist_sq: dsq,
            mean_dist_sq_se: dsq_se,
            mean_dist: dist,
            mean_dist_se: dist_se,
            failures,
        });
    }
    let mut curve = RateCurve {
        m,
        points,
        rows,
        fit: None,
    };
    let response = cfg.response.unwrap_or_else(|| default_response(cfg.family));
    curve.fit = fit_rate_exponent(&curve, response).ok();
    Ok(curve)
}

/// Ordinary least squares of log(response) on log(n). Non-positive
/// responses are dropped (and counted); fewer than three survivors is an
/// error.
pub fn fit_rate_exponent(curve: &RateCurve, response: RateResponse) -> Result<ExponentFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0usize;
    for p in &curve.points {
        let y = match response {
            RateResponse::TailMass => p.tail_mass,
            RateResponse::MeanSqDistance => p.mean_dist_sq,
            RateResponse::MeanDistance => p.mean_dist,
        };
        if y > 0.0 && y.is_finite() {
            xs.push((p.n as f64).ln());
            ys.push(y.ln());
        } else {
            dropped += 1;
        }
    }
    let k = xs.len();
    if k < 3 {
        return Err(Error::InsufficientFitPoints { usable: k });
    }
    let xbar = xs.iter().sum::<f64>() / k as f64;
    let ybar = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let slope_se = if k > 2 {
        (ss_res / (k as f64 - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(ExponentFit {
        response,
        slope,
        intercept,
        r2,
        slope_se,
        dropped,
        residuals,
    })
}
