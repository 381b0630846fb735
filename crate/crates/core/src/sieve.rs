//! Sieve maximum likelihood: closed forms where they exist, constrained EM
//! for the mixture families, least squares for regression.

#[allow(unused_imports)] // f64 methods come from the trait in no_std builds
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::basis;
use crate::error::Error;
use crate::linalg::{design_t_vec, gram, Cholesky};
use crate::model::{
    bin_counts, kernel_log_density, log_likelihood, Dataset, Kernel, ModelFamily, ModelSpec,
    ParamPoint, ParamValues, SieveIndex,
};
use crate::rng::{derive_seed, Prng};
use crate::Result;

/// EM controls: iteration/restart budget and the box constraints on
/// locations and (for the adaptive family) the common precision.
#[derive(Clone, Debug, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop once the log-likelihood gain falls below this.
    pub tol: f64,
    pub restarts: usize,
    /// Locations are clipped to [-location_bound, location_bound].
    pub location_bound: f64,
    /// Precision clipped to [precision_bounds.0, precision_bounds.1].
    pub precision_bounds: (f64, f64),
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iters: 200,
            tol: 1e-8,
            restarts: 5,
            location_bound: 10.0,
            precision_bounds: (1e-3, 1e3),
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument {
                name: "tol",
                reason: "EM tolerance must be positive".into(),
            });
        }
        if !(self.precision_bounds.0 < self.precision_bounds.1)
            || !(self.precision_bounds.0 > 0.0)
        {
            return Err(Error::InvalidArgument {
                name: "precision_bounds",
                reason: "need 0 < lower < upper".into(),
            });
        }
        if !(self.location_bound > 0.0) {
            return Err(Error::InvalidArgument {
                name: "location_bound",
                reason: "location bound must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Result of a sieve MLE computation. `converged` is false when EM exhausted
/// its iteration budget; the best iterate is still returned.
#[derive(Clone, Debug, PartialEq)]
pub struct MleFit {
    pub point: ParamPoint,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Components whose weight had to be floored during EM.
    pub floored_components: usize,
}

/// Sieve MLE for any family. `em_cfg` is required for the mixture families
/// and ignored elsewhere.
pub fn sieve_mle(
    model: &ModelSpec,
    sieve: &SieveIndex,
    data: &Dataset,
    em_cfg: Option<&EmConfig>,
) -> Result<MleFit> {
    data.validate(model)?;
    sieve.validate(model.n)?;
    let exact = |point: ParamPoint| -> Result<MleFit> {
        let ll = log_likelihood(model, &point, data)?;
        Ok(MleFit {
            point,
            log_likelihood: ll,
            converged: true,
            floored_components: 0,
        })
    };
    match (model.family, sieve) {
        (ModelFamily::GaussianLocation, _) => {
            let mean = data.observations.iter().sum::<f64>() / model.n as f64;
            exact(ParamPoint::location(mean))
        }
        (ModelFamily::Histogram, SieveIndex::Dimension(s)) => {
            let counts = bin_counts(*s, &data.observations);
            let n = model.n as f64;
            exact(ParamPoint::simplex(
                counts.iter().map(|&c| c as f64 / n).collect(),
            ))
        }
        (ModelFamily::SparseSequence, SieveIndex::Subset(idx)) => {
            let values = idx.iter().map(|&i| data.observations[i]).collect();
            exact(ParamPoint::sparse(idx.clone(), values))
        }
        (ModelFamily::FixedDesignRegression, SieveIndex::TruncationOrder(s)) => {
            let phi = basis::fourier_design(model.n, *s);
            let coeffs = least_squares(&phi, &data.observations, model.n, *s)?;
            exact(ParamPoint::coefficients(coeffs))
        }
        (ModelFamily::FiniteMixture | ModelFamily::AdaptiveMixture, SieveIndex::Dimension(s)) => {
            let cfg = em_cfg.ok_or(Error::InvalidArgument {
                name: "em_cfg",
                reason: "mixture families need an EM configuration".into(),
            })?;
            cfg.validate()?;
            em_fit(model, *s, data, cfg)
        }
        _ => Err(Error::FamilyMismatch(
            "sieve index kind does not fit the family".into(),
        )),
    }
}

/// Ordinary least squares through the normal equations (Cholesky).
/// Errors with the offending order when ΦᵀΦ is singular.
pub fn least_squares(design: &[f64], responses: &[f64], n: usize, p: usize) -> Result<Vec<f64>> {
    let g = gram(design, n, p);
    let chol = Cholesky::factor(&g, p, p)?;
    let b = design_t_vec(design, responses, n, p);
    Ok(chol.solve_prefix(&b, p))
}

/// One EM update. Log-likelihood never decreases beyond the clipping
/// tolerance; degenerate component weights are floored at 1e-12.
pub fn em_step(
    model: &ModelSpec,
    point: &ParamPoint,
    data: &Dataset,
    cfg: &EmConfig,
) -> Result<ParamPoint> {
    let (new_point, _) = em_step_counted(model, point, data, cfg)?;
    Ok(new_point)
}

const WEIGHT_FLOOR: f64 = 1e-12;

fn em_step_counted(
    model: &ModelSpec,
    point: &ParamPoint,
    data: &Dataset,
    cfg: &EmConfig,
) -> Result<(ParamPoint, usize)> {
    point.validate(model)?;
    data.validate(model)?;
    let (weights, locations, precision) = match &point.values {
        ParamValues::Mixture { weights, locations } => (weights, locations, None),
        ParamValues::AdaptiveMixture {
            weights,
            locations,
            precision,
        } => (weights, locations, Some(*precision)),
        _ => {
            return Err(Error::FamilyMismatch(
                "EM steps apply to mixture points only".into(),
            ))
        }
    };
    let kernel = model.kernel.expect("mixture model carries a kernel");
    let s = weights.len();
    let n = model.n;
    let obs = &data.observations;
    let scale = match precision {
        Some(l) => (1.0 / l).sqrt(),
        None => model.sigma,
    };

    // E-step: responsibilities, plus (for Cauchy) the scale-mixture weights
    // that make the M-step a weighted mean.
    let mut resp = vec![0.0; n * s];
    let mut tweight = vec![0.0; n * s];
    for i in 0..n {
        let x = obs[i];
        let mut max = f64::NEG_INFINITY;
        let mut logs = vec![f64::NEG_INFINITY; s];
        for k in 0..s {
            if weights[k] > 0.0 {
                logs[k] = weights[k].ln() + kernel_log_density(x, locations[k], scale, kernel);
                max = max.max(logs[k]);
            }
        }
        let mut total = 0.0;
        for k in 0..s {
            let r = (logs[k] - max).exp();
            resp[i * s + k] = r;
            total += r;
        }
        for k in 0..s {
            resp[i * s + k] /= total;
            tweight[i * s + k] = match kernel {
                Kernel::Normal => 1.0,
                // Cauchy = t with one degree of freedom; the latent
                // augmentation weight is 2 / (1 + z²).
                Kernel::Cauchy => {
                    let z = (x - locations[k]) / scale;
                    2.0 / (1.0 + z * z)
                }
            };
        }
    }

    // M-step.
    let mut floored = 0usize;
    let mut new_weights = vec![0.0; s];
    let mut new_locations = locations.clone();
    for k in 0..s {
        let rk: f64 = (0..n).map(|i| resp[i * s + k]).sum();
        new_weights[k] = rk / n as f64;
        let wsum: f64 = (0..n).map(|i| resp[i * s + k] * tweight[i * s + k]).sum();
        if wsum > 0.0 {
            let mean: f64 = (0..n)
                .map(|i| resp[i * s + k] * tweight[i * s + k] * obs[i])
                .sum::<f64>()
                / wsum;
            new_locations[k] = mean.clamp(-cfg.location_bound, cfg.location_bound);
        }
    }
    for w in &mut new_weights {
        if *w < WEIGHT_FLOOR {
            *w = WEIGHT_FLOOR;
            floored += 1;
        }
    }
    let total: f64 = new_weights.iter().sum();
    for w in &mut new_weights {
        *w /= total;
    }

    let new_point = match precision {
        None => ParamPoint::mixture(new_weights, new_locations),
        Some(_) => {
            let mut ss = 0.0;
            for i in 0..n {
                for k in 0..s {
                    let d = obs[i] - new_locations[k];
                    ss += resp[i * s + k] * d * d;
                }
            }
            let lambda = (n as f64 / ss)
                .clamp(cfg.precision_bounds.0, cfg.precision_bounds.1);
            ParamPoint::adaptive_mixture(new_weights, new_locations, lambda)
        }
    };
    Ok((new_point, floored))
}

/// Full EM with deterministic restarts: initial locations sit at data
/// quantiles, later restarts add seeded jitter. Best restart wins; ties go
/// to the lowest restart index.
fn em_fit(model: &ModelSpec, s: usize, data: &Dataset, cfg: &EmConfig) -> Result<MleFit> {
    let mut best: Option<MleFit> = None;
    let mut sorted = data.observations.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite observations"));
    for restart in 0..cfg.restarts.max(1) {
        let init = em_init(model, s, data, &sorted, restart, cfg);
        let fit = em_run(model, &init, data, cfg)?;
        let better = match &best {
            None => true,
            Some(b) => fit.log_likelihood > b.log_likelihood,
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn em_init(
    model: &ModelSpec,
    s: usize,
    data: &Dataset,
    sorted: &[f64],
    restart: usize,
    cfg: &EmConfig,
) -> ParamPoint {
    let n = sorted.len();
    let mut rng = Prng::seed_from(derive_seed(data.seed, &[0x456d, restart as u64]));
    let spread = (sorted[n - 1] - sorted[0]).max(1e-6);
    let mut locations = Vec::with_capacity(s);
    for k in 0..s {
        let q = sorted[((k as f64 + 0.5) / s as f64 * n as f64) as usize];
        let jitter = if restart == 0 {
            0.0
        } else {
            0.2 * spread * rng.normal()
        };
        locations.push((q + jitter).clamp(-cfg.location_bound, cfg.location_bound));
    }
    let weights = vec![1.0 / s as f64; s];
    match model.family {
        ModelFamily::AdaptiveMixture => {
            let mean = data.observations.iter().sum::<f64>() / n as f64;
            let var = data
                .observations
                .iter()
                .map(|&x| (x - mean) * (x - mean))
                .sum::<f64>()
                / n as f64;
            let lambda = (s as f64 / var.max(1e-12))
                .clamp(cfg.precision_bounds.0, cfg.precision_bounds.1);
            ParamPoint::adaptive_mixture(weights, locations, lambda)
        }
        _ => ParamPoint::mixture(weights, locations),
    }
}

fn em_run(model: &ModelSpec, init: &ParamPoint, data: &Dataset, cfg: &EmConfig) -> Result<MleFit> {
    let mut point = init.clone();
    let mut ll = log_likelihood(model, &point, data)?;
    let mut converged = false;
    let mut floored = 0usize;
    for _ in 0..cfg.max_iters {
        let (next, f) = em_step_counted(model, &point, data, cfg)?;
        floored += f;
        let next_ll = log_likelihood(model, &next, data)?;
        let gain = next_ll - ll;
        point = next;
        ll = next_ll;
        if gain.abs() < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(MleFit {
        point,
        log_likelihood: ll,
        converged,
        floored_components: floored,
    })
}
