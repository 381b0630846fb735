//! Data-dependent priors centered on sieve MLEs, their hyperparameter
//! schedules, and the hierarchical mixture-over-models variants.

#[allow(unused_imports)] // f64 methods come from the trait in no_std builds
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::basis;
use crate::error::Error;
use crate::linalg::{gram, Cholesky};
use crate::model::{Dataset, ModelFamily, ModelSpec, ParamPoint, ParamValues, SieveIndex};
use crate::rng::Prng;
use crate::sieve::{sieve_mle, EmConfig};
use crate::special::{inv_normal_cdf, ln_binomial, ln_gamma, log_sum_exp, LN_2PI};
use crate::Result;

/// Every tuned constant of a family's prior at sample size n.
///
/// `s` is the sieve dimension (bins, mixture components, truncation order);
/// for the adaptive mixture family the `c`/`delta`/`psi` entries are the
/// per-dimension values at that `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub family: ModelFamily,
    pub n: usize,
    pub beta: Option<f64>,
    pub eps_n: f64,
    pub s: usize,
    /// Dirichlet concentration multiplier.
    pub c: Option<f64>,
    /// Half-width of the location boxes.
    pub delta: Option<f64>,
    /// Location bound B.
    pub b: Option<f64>,
    /// Gaussian prior scale (location family) or the precision-box
    /// half-width fraction (adaptive mixtures).
    pub psi: Option<f64>,
    pub b_lower: Option<f64>,
    pub b_upper: Option<f64>,
    pub gamma: Option<f64>,
}

fn positive(name: &'static str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidArgument {
            name,
            reason: "must be positive and finite".into(),
        })
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument {
            name: "n",
            reason: "schedules need n >= 3 so that log n is usable".into(),
        });
    }
    Ok(n as f64)
}

impl Schedule {
    pub fn n_eps2(&self) -> f64 {
        self.n as f64 * self.eps_n * self.eps_n
    }

    /// Parametric family: rate n^{-1/2}, normal prior N(mle, (n psi)^{-1}).
    pub fn gaussian_location(n: usize, psi: f64) -> Result<Schedule> {
        let nf = check_n(n)?;
        positive("psi", psi)?;
        Ok(Schedule {
            family: ModelFamily::GaussianLocation,
            n,
            beta: None,
            eps_n: nf.powf(-0.5),
            s: 1,
            c: None,
            delta: None,
            b: None,
            psi: Some(psi),
            b_lower: None,
            b_upper: None,
            gamma: None,
        })
    }

    /// Histogram family under a Hoelder smoothness beta in (0, 1]:
    /// eps = n^{-kappa} (log n)^{kappa} with kappa = beta / (2 beta + 1),
    /// S = floor(n eps^2 / log n), c = n / eps^2.
    pub fn histogram(n: usize, beta: f64) -> Result<Schedule> {
        let nf = check_n(n)?;
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidArgument {
                name: "beta",
                reason: "histogram smoothness must lie in (0, 1]".into(),
            });
        }
        let kappa = beta / (2.0 * beta + 1.0);
        let eps = nf.powf(-kappa) * nf.ln().powf(kappa);
        let s = ((nf * eps * eps / nf.ln()).floor() as usize).max(1);
        Ok(Schedule {
            family: ModelFamily::Histogram,
            n,
            beta: Some(beta),
            eps_n: eps,
            s,
            c: Some(nf / (eps * eps)),
            delta: None,
            b: None,
            psi: None,
            b_lower: None,
            b_upper: None,
            gamma: None,
        })
    }

    /// Compactly supported mixing truth: eps = (log n) n^{-1/2},
    /// S = floor(log n), c = n / eps^2, delta = sqrt(6 (d/2) sigma^2) eps / 2,
    /// B = sqrt(log eps^{-1}).
    pub fn finite_mixture(n: usize, sigma: f64, d: f64) -> Result<Schedule> {
        let nf = check_n(n)?;
        positive("sigma", sigma)?;
        positive("d", d)?;
        let eps = nf.ln() * nf.powf(-0.5);
        let s = (nf.ln().floor() as usize).max(1);
        let delta = 0.5 * (6.0 * (d / 2.0) * sigma * sigma).sqrt() * eps;
        let b = (1.0 / eps).ln().max(f64::EPSILON).sqrt();
        Ok(Schedule {
            family: ModelFamily::FiniteMixture,
            n,
            beta: None,
            eps_n: eps,
            s,
            c: Some(nf / (eps * eps)),
            delta: Some(delta),
            b: Some(b),
            psi: None,
            b_lower: None,
            b_upper: None,
            gamma: None,
        })
    }

    /// Sparse means at sparsity s_star: n eps^2 = s log(n/s) with s = max(s_star, 1).
    pub fn sparse_sequence(n: usize, s_star: usize, gamma: f64) -> Result<Schedule> {
        let nf = check_n(n)?;
        check_gamma(gamma)?;
        if s_star >= n {
            return Err(Error::InvalidArgument {
                name: "s_star",
                reason: "sparsity must be below n".into(),
            });
        }
        let s_eff = s_star.max(1) as f64;
        let eps = (s_eff / nf * (nf / s_eff).ln()).sqrt();
        Ok(Schedule {
            family: ModelFamily::SparseSequence,
            n,
            beta: None,
            eps_n: eps,
            s: s_star.max(1),
            c: None,
            delta: None,
            b: None,
            psi: None,
            b_lower: None,
            b_upper: None,
            gamma: Some(gamma),
        })
    }

    /// Sobolev regression of index beta > 1/2: eps = n^{-beta/(2 beta + 1)},
    /// S_star = floor(n eps^2).
    pub fn regression(n: usize, beta: f64, gamma: f64) -> Result<Schedule> {
        let nf = check_n(n)?;
        check_gamma(gamma)?;
        if !(beta > 0.5) {
            return Err(Error::InvalidArgument {
                name: "beta",
                reason: "regression smoothness must exceed 1/2".into(),
            });
        }
        let eps = nf.powf(-beta / (2.0 * beta + 1.0));
        let s = ((nf * eps * eps).floor() as usize).max(1);
        Ok(Schedule {
            family: ModelFamily::FixedDesignRegression,
            n,
            beta: Some(beta),
            eps_n: eps,
            s,
            c: None,
            delta: None,
            b: None,
            psi: None,
            b_lower: None,
            b_upper: None,
            gamma: Some(gamma),
        })
    }

    /// Adaptive mixture constants at component count s, for an exponent b > 2:
    /// B = (log n)^2, B_l = 1/n, B_u = n^{b-2}, c_s = n^2/s,
    /// delta_s = s^{1/2} n^{-(b+3/2)}, psi_s = s/n. The reported target rate
    /// uses the smoothness when given, with a single log factor.
    pub fn adaptive_mixture(n: usize, b: f64, s: usize, beta: Option<f64>) -> Result<Schedule> {
        let nf = check_n(n)?;
        if !(b > 2.0) {
            return Err(Error::InvalidArgument {
                name: "b",
                reason: "the adaptive mixture exponent needs b > 2".into(),
            });
        }
        if s == 0 {
            return Err(Error::InvalidArgument {
                name: "s",
                reason: "component count must be at least 1".into(),
            });
        }
        if let Some(beta) = beta {
            positive("beta", beta)?;
        }
        let sf = s as f64;
        let eps = match beta {
            Some(beta) => nf.ln() * nf.powf(-beta / (2.0 * beta + 1.0)),
            None => nf.ln() * nf.powf(-0.5),
        };
        Ok(Schedule {
            family: ModelFamily::AdaptiveMixture,
            n,
            beta,
            eps_n: eps,
            s,
            c: Some(nf * nf / sf),
            delta: Some(sf.sqrt() * nf.powf(-(b + 1.5))),
            b: Some(nf.ln() * nf.ln()),
            psi: Some(sf / nf),
            b_lower: Some(1.0 / nf),
            b_upper: Some(nf.powf(b - 2.0)),
            gamma: None,
        })
    }
}

fn check_gamma(gamma: f64) -> Result<f64> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(gamma)
    } else {
        Err(Error::InvalidArgument {
            name: "gamma",
            reason: "the prior spread factor gamma must lie in (0, 1)".into(),
        })
    }
}

/// One-stop schedule builder with per-family defaults
/// (psi = 1, sigma = 1, d = 2, gamma = 0.1; adaptive constants at s = 1).
pub fn compute_schedule(
    family: ModelFamily,
    n: usize,
    beta: Option<f64>,
    b: Option<f64>,
    s_star: Option<usize>,
) -> Result<Schedule> {
    match family {
        ModelFamily::GaussianLocation => Schedule::gaussian_location(n, 1.0),
        ModelFamily::Histogram => {
            let beta = beta.ok_or(Error::InvalidArgument {
                name: "beta",
                reason: "histogram schedules need the smoothness beta".into(),
            })?;
            Schedule::histogram(n, beta)
        }
        ModelFamily::FiniteMixture => Schedule::finite_mixture(n, 1.0, 2.0),
        ModelFamily::SparseSequence => {
            let s_star = s_star.ok_or(Error::InvalidArgument {
                name: "s_star",
                reason: "sparse schedules need the target sparsity".into(),
            })?;
            Schedule::sparse_sequence(n, s_star, 0.1)
        }
        ModelFamily::FixedDesignRegression => {
            let beta = beta.ok_or(Error::InvalidArgument {
                name: "beta",
                reason: "regression schedules need the smoothness beta".into(),
            })?;
            Schedule::regression(n, beta, 0.1)
        }
        ModelFamily::AdaptiveMixture => {
            let b = b.unwrap_or(2.5);
            Schedule::adaptive_mixture(n, b, s_star.unwrap_or(1), beta)
        }
    }
}

/// Prior standard deviation for the toy normal-location prior that pins the
/// neighborhood mass at exp(-C): s = sqrt(2/n) / Phi^{-1}((1 + e^{-C}) / 2).
pub fn toy_prior_sd(c: f64, n: usize) -> Result<f64> {
    positive("C", c)?;
    let nf = n as f64;
    let quantile = inv_normal_cdf(0.5 * (1.0 + (-c).exp()));
    Ok((2.0 / nf).sqrt() / quantile)
}

/// Covariance descriptor for a Gaussian prior or posterior.
#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceKind {
    /// v I.
    Spherical(f64),
    /// kappa^{-1} (L L^T)^{-1} on the leading `order` block, i.e. the
    /// precision is kappa G with G = L L^T.
    ScaledPrecision {
        chol: Cholesky,
        order: usize,
        kappa: f64,
    },
}

impl CovarianceKind {
    pub fn sample_offset(&self, dim: usize, rng: &mut Prng) -> Vec<f64> {
        match self {
            CovarianceKind::Spherical(v) => {
                let sd = v.sqrt();
                (0..dim).map(|_| sd * rng.normal()).collect()
            }
            CovarianceKind::ScaledPrecision { chol, order, kappa } => {
                debug_assert_eq!(dim, *order);
                let z: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
                let mut u = chol.solve_backward_prefix(&z, *order);
                let scale = 1.0 / kappa.sqrt();
                for x in &mut u {
                    *x *= scale;
                }
                u
            }
        }
    }

    pub fn log_density_at_offset(&self, offset: &[f64]) -> f64 {
        let d = offset.len() as f64;
        match self {
            CovarianceKind::Spherical(v) => {
                let q: f64 = offset.iter().map(|x| x * x).sum::<f64>() / v;
                -0.5 * (q + d * (LN_2PI + v.ln()))
            }
            CovarianceKind::ScaledPrecision { chol, order, kappa } => {
                let q = kappa * chol.quad_form_prefix(offset, *order);
                let log_det_prec = d * kappa.ln() + chol.log_det_prefix(*order);
                0.5 * (log_det_prec - q - d * LN_2PI)
            }
        }
    }

    /// Marginal variances (diagonal of the covariance).
    pub fn variance(&self, dim: usize) -> Vec<f64> {
        match self {
            CovarianceKind::Spherical(v) => vec![*v; dim],
            CovarianceKind::ScaledPrecision { chol, order, kappa } => {
                let mut out = Vec::with_capacity(dim);
                for i in 0..dim {
                    let mut e = vec![0.0; dim];
                    e[i] = 1.0;
                    let col = chol.solve_prefix(&e, *order);
                    out.push(col[i] / kappa);
                }
                out
            }
        }
    }
}

/// Gaussian prior (or conditional prior) over the free coordinates of a sieve.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPrior {
    pub family: ModelFamily,
    pub sieve: SieveIndex,
    pub mean: Vec<f64>,
    pub cov: CovarianceKind,
}

impl GaussianPrior {
    pub fn sample(&self, rng: &mut Prng) -> ParamPoint {
        let offset = self.cov.sample_offset(self.mean.len(), rng);
        let values: Vec<f64> = self.mean.iter().zip(&offset).map(|(m, o)| m + o).collect();
        self.wrap(values)
    }

    fn wrap(&self, values: Vec<f64>) -> ParamPoint {
        match (self.family, &self.sieve) {
            (ModelFamily::GaussianLocation, _) => ParamPoint::location(values[0]),
            (ModelFamily::SparseSequence, SieveIndex::Subset(idx)) => {
                ParamPoint::sparse(idx.clone(), values)
            }
            (ModelFamily::FixedDesignRegression, SieveIndex::TruncationOrder(_)) => {
                ParamPoint::coefficients(values)
            }
            _ => panic!("gaussian priors wrap location, sparse, or coefficient points"),
        }
    }

    pub fn log_density(&self, point: &ParamPoint) -> f64 {
        let values = match (&point.values, &point.sieve, &self.sieve) {
            (ParamValues::Location(t), _, _) => vec![*t],
            (ParamValues::Sparse(v), SieveIndex::Subset(a), SieveIndex::Subset(b)) => {
                if a != b {
                    return f64::NEG_INFINITY;
                }
                v.clone()
            }
            (
                ParamValues::Coefficients(v),
                SieveIndex::TruncationOrder(a),
                SieveIndex::TruncationOrder(b),
            ) => {
                if a != b {
                    return f64::NEG_INFINITY;
                }
                v.clone()
            }
            _ => return f64::NEG_INFINITY,
        };
        if values.len() != self.mean.len() {
            return f64::NEG_INFINITY;
        }
        let offset: Vec<f64> = values.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        self.cov.log_density_at_offset(&offset)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletPrior {
    pub alpha: Vec<f64>,
}

impl DirichletPrior {
    /// alpha_s = 1 + c * mle_s; empty bins keep alpha = 1.
    pub fn centered(mle_weights: &[f64], c: f64) -> Self {
        DirichletPrior {
            alpha: mle_weights.iter().map(|&w| 1.0 + c * w).collect(),
        }
    }

    pub fn sample(&self, rng: &mut Prng) -> Vec<f64> {
        rng.dirichlet(&self.alpha)
    }

    /// Log density w.r.t. Lebesgue measure on the S-1 free coordinates.
    pub fn log_density(&self, weights: &[f64]) -> f64 {
        if weights.len() != self.alpha.len() {
            return f64::NEG_INFINITY;
        }
        let mut acc = ln_gamma(self.alpha.iter().sum::<f64>());
        for (&a, &w) in self.alpha.iter().zip(weights) {
            if w <= 0.0 {
                // Interior support only; the boundary carries the sentinel.
                return f64::NEG_INFINITY;
            }
            acc += (a - 1.0) * w.ln() - ln_gamma(a);
        }
        acc
    }

    /// Mode over the simplex when all alpha > 1.
    pub fn mode(&self) -> Option<Vec<f64>> {
        let total: f64 = self.alpha.iter().sum();
        let s = self.alpha.len() as f64;
        if self.alpha.iter().all(|&a| a > 1.0) {
            Some(self.alpha.iter().map(|&a| (a - 1.0) / (total - s)).collect())
        } else {
            None
        }
    }
}

/// Product prior for one mixture model: Dirichlet weights, uniform location
/// boxes, and (adaptive family) a uniform precision box.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureParamPrior {
    pub weights: DirichletPrior,
    pub location_boxes: Vec<(f64, f64)>,
    pub precision_box: Option<(f64, f64)>,
}

impl MixtureParamPrior {
    pub fn sample(&self, rng: &mut Prng) -> ParamPoint {
        let w = self.weights.sample(rng);
        let locs: Vec<f64> = self
            .location_boxes
            .iter()
            .map(|&(lo, hi)| rng.uniform_in(lo, hi))
            .collect();
        match self.precision_box {
            None => ParamPoint::mixture(w, locs),
            Some((lo, hi)) => ParamPoint::adaptive_mixture(w, locs, rng.uniform_in(lo, hi)),
        }
    }

    pub fn log_density(&self, point: &ParamPoint) -> f64 {
        let (w, locs, prec) = match &point.values {
            ParamValues::Mixture { weights, locations } => (weights, locations, None),
            ParamValues::AdaptiveMixture {
                weights,
                locations,
                precision,
            } => (weights, locations, Some(*precision)),
            _ => return f64::NEG_INFINITY,
        };
        if locs.len() != self.location_boxes.len() || prec.is_some() != self.precision_box.is_some()
        {
            return f64::NEG_INFINITY;
        }
        let mut acc = self.weights.log_density(w);
        for (&x, &(lo, hi)) in locs.iter().zip(&self.location_boxes) {
            if x < lo || x > hi {
                return f64::NEG_INFINITY;
            }
            acc -= (hi - lo).ln();
        }
        if let (Some(l), Some((lo, hi))) = (prec, self.precision_box) {
            if l < lo || l > hi {
                return f64::NEG_INFINITY;
            }
            acc -= (hi - lo).ln();
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    /// Subsets of {0..n-1}: w(S) proportional to C(n,|S|)^{-1} e^{-g |S|}.
    SparseSubset,
    /// Integer truncation orders: w(s) proportional to e^{-g s}, s >= 1.
    TruncationOrder,
    /// Component counts: w(S) proportional to e^{-D (log S)^r S}, S >= 1.
    AdaptiveMixture,
}

/// The model-weight function w_n over sieve indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights {
    pub scheme: WeightScheme,
    pub n: usize,
    /// Largest admissible size/order.
    pub t_n: usize,
    /// Constant g for the first two schemes.
    pub g_const: f64,
    /// D and r for the adaptive scheme.
    pub d_const: f64,
    pub r: f64,
}

impl ModelWeights {
    pub fn sparse_subset(n: usize, g_const: f64, t_n: usize) -> Self {
        ModelWeights {
            scheme: WeightScheme::SparseSubset,
            n,
            t_n: t_n.min(n),
            g_const,
            d_const: 0.0,
            r: 2.0,
        }
    }

    pub fn truncation_order(n: usize, g_const: f64, t_n: usize) -> Self {
        ModelWeights {
            scheme: WeightScheme::TruncationOrder,
            n,
            t_n: t_n.min(n),
            g_const,
            d_const: 0.0,
            r: 2.0,
        }
    }

    pub fn adaptive(n: usize, d_const: f64, r: f64, t_n: usize) -> Result<Self> {
        if !(r > 1.0) {
            return Err(Error::InvalidArgument {
                name: "r",
                reason: "the adaptive weight exponent needs r > 1".into(),
            });
        }
        positive("D", d_const)?;
        Ok(ModelWeights {
            scheme: WeightScheme::AdaptiveMixture,
            n,
            t_n: t_n.min(n),
            g_const: 0.0,
            d_const,
            r,
        })
    }

    /// Unnormalized log weight of one index.
    pub fn log_weight(&self, index: &SieveIndex) -> Result<f64> {
        let size = index.size();
        if size > self.t_n {
            return Err(Error::InvalidArgument {
                name: "sieve",
                reason: "index size exceeds T_n".into(),
            });
        }
        match (self.scheme, index) {
            (WeightScheme::SparseSubset, SieveIndex::Subset(_)) => {
                Ok(-ln_binomial(self.n, size) - self.g_const * size as f64)
            }
            (WeightScheme::TruncationOrder, SieveIndex::TruncationOrder(s)) => {
                Ok(-self.g_const * *s as f64)
            }
            (WeightScheme::AdaptiveMixture, SieveIndex::Dimension(s)) => {
                let sf = *s as f64;
                Ok(-self.d_const * sf.ln().powf(self.r) * sf)
            }
            _ => Err(Error::InvalidArgument {
                name: "sieve",
                reason: "index kind does not match the weight scheme".into(),
            }),
        }
    }

    /// Unnormalized log weight of the size/order marginal (the subset scheme
    /// aggregates the C(n,s) equal-weight subsets of each size).
    pub fn log_size_weight(&self, size: usize) -> f64 {
        match self.scheme {
            WeightScheme::SparseSubset | WeightScheme::TruncationOrder => {
                -self.g_const * size as f64
            }
            WeightScheme::AdaptiveMixture => {
                let sf = size as f64;
                -self.d_const * sf.ln().powf(self.r) * sf
            }
        }
    }

    fn size_range(&self) -> core::ops::RangeInclusive<usize> {
        match self.scheme {
            WeightScheme::SparseSubset => 0..=self.t_n,
            _ => 1..=self.t_n,
        }
    }

    /// log Σ w over all admissible indices.
    pub fn log_normalizer(&self) -> f64 {
        let terms: Vec<f64> = self.size_range().map(|s| self.log_size_weight(s)).collect();
        log_sum_exp(&terms)
    }

    /// Normalized log weight.
    pub fn log_weight_normalized(&self, index: &SieveIndex) -> Result<f64> {
        Ok(self.log_weight(index)? - self.log_normalizer())
    }

    /// Draw an index: size from the marginal, then (subsets) a uniform
    /// subset of that size.
    pub fn sample_index(&self, rng: &mut Prng) -> SieveIndex {
        let sizes: Vec<usize> = self.size_range().collect();
        let logs: Vec<f64> = sizes.iter().map(|&s| self.log_size_weight(s)).collect();
        let s = sizes[rng.index_from_log_weights(&logs)];
        match self.scheme {
            WeightScheme::SparseSubset => SieveIndex::Subset(rng.subset(self.n, s)),
            WeightScheme::TruncationOrder => SieveIndex::TruncationOrder(s),
            WeightScheme::AdaptiveMixture => SieveIndex::Dimension(s),
        }
    }
}

/// Unnormalized model weight, evaluated in log space internally.
pub fn model_weight(weights: &ModelWeights, index: &SieveIndex) -> Result<f64> {
    Ok(weights.log_weight(index)?.exp())
}

/// Conditional priors of a hierarchical (mixture-over-models) prior.
#[derive(Clone, Debug, PartialEq)]
pub enum ConditionalPriors {
    /// Given S: N(X_S, gamma^{-1} I).
    SparseGaussian { data: Vec<f64>, gamma: f64 },
    /// Given order s: N(theta_hat_s, gamma^{-1} (Phi_s' Phi_s)^{-1});
    /// `mles[s-1]` holds theta_hat_s and `chol` factors the full-order gram.
    RegressionGaussian {
        mles: Vec<Vec<f64>>,
        chol: Cholesky,
        gamma: f64,
    },
    /// Given S: the product prior around the S-component EM fit.
    MixtureBoxes { per_s: Vec<MixtureParamPrior> },
}

/// Mixture-over-models empirical prior: model weights w_n plus a conditional
/// prior per sieve index.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchicalPrior {
    pub weights: ModelWeights,
    pub conditionals: ConditionalPriors,
}

impl HierarchicalPrior {
    /// Sparse-means prior built on the observed vector.
    pub fn sparse(data: &Dataset, gamma: f64, g_const: f64, t_n: usize) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(HierarchicalPrior {
            weights: ModelWeights::sparse_subset(data.observations.len(), g_const, t_n),
            conditionals: ConditionalPriors::SparseGaussian {
                data: data.observations.clone(),
                gamma,
            },
        })
    }

    /// Regression prior: least-squares centers for every order up to s_max.
    pub fn regression(
        model: &ModelSpec,
        data: &Dataset,
        gamma: f64,
        g_const: f64,
        s_max: usize,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        data.validate(model)?;
        if s_max == 0 || s_max > model.n {
            return Err(Error::InvalidArgument {
                name: "s_max",
                reason: "need 1 <= s_max <= n".into(),
            });
        }
        let phi = basis::fourier_design(model.n, s_max);
        let g = gram(&phi, model.n, s_max);
        let chol = Cholesky::factor(&g, s_max, s_max)?;
        let xty = crate::linalg::design_t_vec(&phi, &data.observations, model.n, s_max);
        let mut mles = Vec::with_capacity(s_max);
        for s in 1..=s_max {
            mles.push(chol.solve_prefix(&xty, s));
        }
        Ok(HierarchicalPrior {
            weights: ModelWeights::truncation_order(model.n, g_const, s_max),
            conditionals: ConditionalPriors::RegressionGaussian { mles, chol, gamma },
        })
    }

    /// Adaptive mixture prior: one EM fit and product prior per component
    /// count up to s_max, with the per-S schedule constants.
    pub fn adaptive_mixture(
        model: &ModelSpec,
        data: &Dataset,
        b: f64,
        d_const: f64,
        r: f64,
        s_max: usize,
        em_cfg: &EmConfig,
    ) -> Result<Self> {
        data.validate(model)?;
        let mut per_s = Vec::with_capacity(s_max);
        for s in 1..=s_max {
            let schedule = Schedule::adaptive_mixture(model.n, b, s, None)?;
            let cfg = EmConfig {
                location_bound: schedule.b.expect("adaptive schedule has B"),
                precision_bounds: (
                    schedule.b_lower.expect("adaptive schedule has B_l"),
                    schedule.b_upper.expect("adaptive schedule has B_u"),
                ),
                ..em_cfg.clone()
            };
            let fit = sieve_mle(model, &SieveIndex::Dimension(s), data, Some(&cfg))?;
            match build_prior(model, &fit.point, &schedule)? {
                EmpiricalPrior::MixtureParam(p) => per_s.push(p),
                _ => unreachable!("adaptive build_prior returns a mixture prior"),
            }
        }
        Ok(HierarchicalPrior {
            weights: ModelWeights::adaptive(model.n, d_const, r, s_max)?,
            conditionals: ConditionalPriors::MixtureBoxes { per_s },
        })
    }

    /// The conditional prior at one index.
    pub fn conditional(&self, index: &SieveIndex) -> Result<EmpiricalPrior> {
        match (&self.conditionals, index) {
            (ConditionalPriors::SparseGaussian { data, gamma }, SieveIndex::Subset(idx)) => {
                let mean: Vec<f64> = idx.iter().map(|&i| data[i]).collect();
                Ok(EmpiricalPrior::Gaussian(GaussianPrior {
                    family: ModelFamily::SparseSequence,
                    sieve: index.clone(),
                    mean,
                    cov: CovarianceKind::Spherical(1.0 / gamma),
                }))
            }
            (
                ConditionalPriors::RegressionGaussian { mles, chol, gamma },
                SieveIndex::TruncationOrder(s),
            ) => {
                if *s == 0 || *s > mles.len() {
                    return Err(Error::InvalidArgument {
                        name: "sieve",
                        reason: "truncation order outside the prepared range".into(),
                    });
                }
                Ok(EmpiricalPrior::Gaussian(GaussianPrior {
                    family: ModelFamily::FixedDesignRegression,
                    sieve: index.clone(),
                    mean: mles[*s - 1].clone(),
                    cov: CovarianceKind::ScaledPrecision {
                        chol: chol.clone(),
                        order: *s,
                        kappa: *gamma,
                    },
                }))
            }
            (ConditionalPriors::MixtureBoxes { per_s }, SieveIndex::Dimension(s)) => {
                if *s == 0 || *s > per_s.len() {
                    return Err(Error::InvalidArgument {
                        name: "sieve",
                        reason: "component count outside the prepared range".into(),
                    });
                }
                Ok(EmpiricalPrior::MixtureParam(per_s[*s - 1].clone()))
            }
            _ => Err(Error::InvalidArgument {
                name: "sieve",
                reason: "index kind does not match the conditional prior family".into(),
            }),
        }
    }

    pub fn sample(&self, rng: &mut Prng) -> Result<ParamPoint> {
        let index = self.weights.sample_index(rng);
        match self.conditional(&index)? {
            EmpiricalPrior::Gaussian(g) => Ok(g.sample(rng)),
            EmpiricalPrior::MixtureParam(m) => Ok(m.sample(rng)),
            _ => unreachable!("conditionals are gaussian or mixture priors"),
        }
    }

    /// Joint log density: normalized model weight (counting measure) plus the
    /// conditional density on the free coordinates (Lebesgue).
    pub fn log_density(&self, point: &ParamPoint) -> Result<f64> {
        let lw = self.weights.log_weight_normalized(&point.sieve)?;
        let cond = self.conditional(&point.sieve)?;
        Ok(lw + log_prior_density(&cond, point))
    }
}

/// A data-built prior supporting sampling and log-density evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum EmpiricalPrior {
    Gaussian(GaussianPrior),
    Dirichlet(DirichletPrior),
    MixtureParam(MixtureParamPrior),
    Hierarchical(HierarchicalPrior),
}

/// Build the family's empirical prior around a sieve MLE using a schedule.
/// For the hierarchical families this is the conditional prior at the MLE's
/// own sieve index; the mixture-over-models objects come from
/// `HierarchicalPrior::{sparse, regression, adaptive_mixture}`.
pub fn build_prior(
    model: &ModelSpec,
    mle: &ParamPoint,
    schedule: &Schedule,
) -> Result<EmpiricalPrior> {
    mle.validate(model)?;
    if schedule.family != model.family {
        return Err(Error::FamilyMismatch(
            "schedule family differs from the model family".into(),
        ));
    }
    match (&mle.values, model.family) {
        (ParamValues::Location(t), ModelFamily::GaussianLocation) => {
            let psi = schedule.psi.ok_or(Error::InvalidArgument {
                name: "psi",
                reason: "location prior needs the scale psi".into(),
            })?;
            Ok(EmpiricalPrior::Gaussian(GaussianPrior {
                family: model.family,
                sieve: SieveIndex::Dimension(1),
                mean: vec![*t],
                cov: CovarianceKind::Spherical(1.0 / (model.n as f64 * psi)),
            }))
        }
        (ParamValues::Simplex(w), ModelFamily::Histogram) => {
            let c = schedule.c.ok_or(Error::InvalidArgument {
                name: "c",
                reason: "histogram prior needs the concentration c".into(),
            })?;
            Ok(EmpiricalPrior::Dirichlet(DirichletPrior::centered(w, c)))
        }
        (ParamValues::Mixture { weights, locations }, ModelFamily::FiniteMixture) => {
            let c = schedule.c.ok_or(Error::InvalidArgument {
                name: "c",
                reason: "mixture prior needs the concentration c".into(),
            })?;
            let delta = schedule.delta.ok_or(Error::InvalidArgument {
                name: "delta",
                reason: "mixture prior needs the box half-width delta".into(),
            })?;
            Ok(EmpiricalPrior::MixtureParam(MixtureParamPrior {
                weights: DirichletPrior::centered(weights, c),
                location_boxes: locations.iter().map(|&m| (m - delta, m + delta)).collect(),
                precision_box: None,
            }))
        }
        (
            ParamValues::AdaptiveMixture {
                weights,
                locations,
                precision,
            },
            ModelFamily::AdaptiveMixture,
        ) => {
            if schedule.s != weights.len() {
                return Err(Error::InvalidArgument {
                    name: "schedule",
                    reason: "adaptive schedule must be built at the MLE's component count".into(),
                });
            }
            let c = schedule.c.expect("adaptive schedule has c");
            let delta = schedule.delta.expect("adaptive schedule has delta");
            let psi = schedule.psi.expect("adaptive schedule has psi");
            Ok(EmpiricalPrior::MixtureParam(MixtureParamPrior {
                weights: DirichletPrior::centered(weights, c),
                location_boxes: locations.iter().map(|&m| (m - delta, m + delta)).collect(),
                precision_box: Some((precision * (1.0 - psi), precision * (1.0 + psi))),
            }))
        }
        (ParamValues::Sparse(vals), ModelFamily::SparseSequence) => {
            let gamma = schedule.gamma.ok_or(Error::InvalidArgument {
                name: "gamma",
                reason: "sparse conditional prior needs gamma".into(),
            })?;
            Ok(EmpiricalPrior::Gaussian(GaussianPrior {
                family: model.family,
                sieve: mle.sieve.clone(),
                mean: vals.clone(),
                cov: CovarianceKind::Spherical(1.0 / gamma),
            }))
        }
        (ParamValues::Coefficients(coeffs), ModelFamily::FixedDesignRegression) => {
            let gamma = schedule.gamma.ok_or(Error::InvalidArgument {
                name: "gamma",
                reason: "regression conditional prior needs gamma".into(),
            })?;
            let s = coeffs.len();
            let phi = basis::fourier_design(model.n, s);
            let g = gram(&phi, model.n, s);
            let chol = Cholesky::factor(&g, s, s)?;
            Ok(EmpiricalPrior::Gaussian(GaussianPrior {
                family: model.family,
                sieve: mle.sieve.clone(),
                mean: coeffs.clone(),
                cov: CovarianceKind::ScaledPrecision {
                    chol,
                    order: s,
                    kappa: gamma,
                },
            }))
        }
        _ => Err(Error::FamilyMismatch(
            "MLE point does not match the model family".into(),
        )),
    }
}

/// A fixed-spread normal prior centered at the MLE (the toy construction).
pub fn toy_prior(center: f64, sd: f64) -> EmpiricalPrior {
    EmpiricalPrior::Gaussian(GaussianPrior {
        family: ModelFamily::GaussianLocation,
        sieve: SieveIndex::Dimension(1),
        mean: vec![center],
        cov: CovarianceKind::Spherical(sd * sd),
    })
}

/// Draw one parameter point from the prior.
pub fn sample_prior(prior: &EmpiricalPrior, seed: u64) -> Result<ParamPoint> {
    let mut rng = Prng::seed_from(seed);
    sample_prior_with(prior, &mut rng)
}

/// Same, reusing a caller-owned stream.
pub fn sample_prior_with(prior: &EmpiricalPrior, rng: &mut Prng) -> Result<ParamPoint> {
    match prior {
        EmpiricalPrior::Gaussian(g) => Ok(g.sample(rng)),
        EmpiricalPrior::Dirichlet(d) => Ok(ParamPoint::simplex(d.sample(rng))),
        EmpiricalPrior::MixtureParam(m) => Ok(m.sample(rng)),
        EmpiricalPrior::Hierarchical(h) => h.sample(rng),
    }
}

/// Log prior density w.r.t. the fixed dominating measure (Lebesgue on the
/// sieve's free coordinates, counting on indices); -inf outside the support.
pub fn log_prior_density(prior: &EmpiricalPrior, point: &ParamPoint) -> f64 {
    match prior {
        EmpiricalPrior::Gaussian(g) => g.log_density(point),
        EmpiricalPrior::Dirichlet(d) => match &point.values {
            ParamValues::Simplex(w) => d.log_density(w),
            _ => f64::NEG_INFINITY,
        },
        EmpiricalPrior::MixtureParam(m) => m.log_density(point),
        EmpiricalPrior::Hierarchical(h) => h.log_density(point).unwrap_or(f64::NEG_INFINITY),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{integrate, QuadratureCfg};
    use crate::model::simulate;
    use crate::rng::derive_seed;
    use crate::special::normal_cdf;

    #[test]
    fn histogram_schedule_numbers() {
        let sch = Schedule::histogram(1000, 1.0).unwrap();
        // kappa = 1/3: eps = n^{-1/3} (log n)^{1/3}.
        assert!((sch.eps_n - 0.190_449_1).abs() < 2e-6, "eps {}", sch.eps_n);
        assert_eq!(sch.s, 5);
        let c = sch.c.unwrap();
        assert!((c - 1000.0 / (sch.eps_n * sch.eps_n)).abs() < 1e-9 * c);
        assert!(Schedule::histogram(1000, 1.5).is_err());
        assert!(Schedule::histogram(2, 1.0).is_err());
    }

    #[test]
    fn mixture_schedule_scales_like_log_n() {
        let n = 22027; // just above e^10
        let sch = Schedule::finite_mixture(n, 1.0, 2.0).unwrap();
        let nf = n as f64;
        assert!((sch.eps_n - nf.ln() * nf.powf(-0.5)).abs() < 1e-12);
        assert_eq!(sch.s, nf.ln().floor() as usize);
        assert_eq!(sch.s, 10);
        let c = sch.c.unwrap();
        assert!((c - nf * nf / (nf.ln() * nf.ln())).abs() < 1e-6 * c);
        // delta obeys the box constraint delta <= sqrt(6 (d/2) sigma^2) eps.
        assert!(sch.delta.unwrap() <= (6.0f64).sqrt() * sch.eps_n);
    }

    #[test]
    fn schedule_monotonicity() {
        let grid = [50usize, 100, 400, 1600, 6400, 25600];
        let mut last_eps = f64::INFINITY;
        let mut last_c = 0.0;
        let mut last_delta = f64::INFINITY;
        for &n in &grid {
            let h = Schedule::histogram(n, 0.7).unwrap();
            assert!(h.eps_n < last_eps);
            assert!(h.c.unwrap() > last_c);
            last_eps = h.eps_n;
            last_c = h.c.unwrap();
            let m = Schedule::finite_mixture(n, 1.0, 2.0).unwrap();
            assert!(m.delta.unwrap() < last_delta);
            last_delta = m.delta.unwrap();
        }
    }

    #[test]
    fn toy_prior_sd_values() {
        // C = log 2: quantile = Phi^{-1}(3/4).
        let s = toy_prior_sd(core::f64::consts::LN_2, 100).unwrap();
        assert!((s - 0.209_671_8).abs() < 1e-5, "s = {s}");
        // Exact n-scaling: s(C, 4n) = s(C, n)/2.
        let s4 = toy_prior_sd(core::f64::consts::LN_2, 400).unwrap();
        assert_eq!(s4, s / 2.0);
        // C large: the prior flattens out.
        assert!(toy_prior_sd(50.0, 100).unwrap() > 1e12);
    }

    #[test]
    fn toy_lp1_mass_is_exactly_exp_minus_c() {
        // The neighborhood is x_bar ± √(2/n) and the prior is N(x_bar, s²),
        // so its mass is 2Φ(√(2/n)/s) − 1 = e^{-C} by construction.
        for &c in &[0.3, core::f64::consts::LN_2, 2.0] {
            for &n in &[10usize, 1000] {
                let s = toy_prior_sd(c, n).unwrap();
                let mass = 2.0 * normal_cdf((2.0 / n as f64).sqrt() / s) - 1.0;
                assert!((mass - (-c).exp()).abs() < 1e-12, "C={c} n={n}");
            }
        }
    }

    #[test]
    fn build_prior_examples() {
        // Histogram: alpha = 1 + c * mle.
        let model = ModelSpec::new(ModelFamily::Histogram, 10).unwrap();
        let mut sch = Schedule::histogram(10, 1.0).unwrap();
        sch.c = Some(10.0);
        sch.s = 2;
        let mle = ParamPoint::simplex(vec![0.3, 0.7]);
        match build_prior(&model, &mle, &sch).unwrap() {
            EmpiricalPrior::Dirichlet(d) => assert_eq!(d.alpha, vec![4.0, 8.0]),
            _ => panic!("expected dirichlet"),
        }

        // Sparse: conditional N(X_S, gamma^{-1} I).
        let smodel = ModelSpec::new(ModelFamily::SparseSequence, 6).unwrap();
        let ssch = Schedule::sparse_sequence(6, 2, 0.1).unwrap();
        let smle = ParamPoint::sparse(vec![1, 4], vec![2.5, -0.7]);
        match build_prior(&smodel, &smle, &ssch).unwrap() {
            EmpiricalPrior::Gaussian(g) => {
                assert_eq!(g.mean, vec![2.5, -0.7]);
                match g.cov {
                    CovarianceKind::Spherical(v) => assert!((v - 10.0).abs() < 1e-12),
                    _ => panic!("expected spherical covariance"),
                }
            }
            _ => panic!("expected gaussian"),
        }

        // Mixture boxes centered at the location MLEs.
        let mmodel = ModelSpec::new(ModelFamily::FiniteMixture, 100).unwrap();
        let mut msch = Schedule::finite_mixture(100, 1.0, 2.0).unwrap();
        msch.c = Some(5.0);
        msch.delta = Some(0.1);
        let mmle = ParamPoint::mixture(vec![0.5, 0.5], vec![-1.0, 1.0]);
        match build_prior(&mmodel, &mmle, &msch).unwrap() {
            EmpiricalPrior::MixtureParam(m) => {
                assert_eq!(m.location_boxes, vec![(-1.1, -0.9), (0.9, 1.1)]);
                assert!(m.precision_box.is_none());
            }
            _ => panic!("expected mixture prior"),
        }
    }

    #[test]
    fn model_weight_examples() {
        // Subsets: w({i,j}) = C(10,2)^{-1} e^{-2} with g = 1.
        let w = ModelWeights::sparse_subset(10, 1.0, 10);
        let idx = SieveIndex::Subset(vec![2, 5]);
        let expect = (-2.0f64).exp() / 45.0;
        assert!((model_weight(&w, &idx).unwrap() - expect).abs() < 1e-15);

        // Truncation orders: successive ratio e^{-B}.
        let t = ModelWeights::truncation_order(50, 1.7, 50);
        let r = model_weight(&t, &SieveIndex::TruncationOrder(6)).unwrap()
            / model_weight(&t, &SieveIndex::TruncationOrder(5)).unwrap();
        assert!((r - (-1.7f64).exp()).abs() < 1e-12);

        // Adaptive: S = 1 has log-weight 0.
        let a = ModelWeights::adaptive(50, 3.0, 2.0, 50).unwrap();
        assert_eq!(a.log_weight(&SieveIndex::Dimension(1)).unwrap(), 0.0);
        assert!(ModelWeights::adaptive(50, 1.0, 1.0, 50).is_err());
    }

    #[test]
    fn subset_weights_normalize_by_enumeration() {
        // Direct sum over all 2^10 subsets against the size-marginal form.
        let n = 10;
        let w = ModelWeights::sparse_subset(n, 1.0, n);
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            total += model_weight(&w, &SieveIndex::Subset(idx)).unwrap();
        }
        assert!((total.ln() - w.log_normalizer()).abs() < 1e-10);
    }

    #[test]
    fn sample_prior_laws() {
        // Dir(1,1) is uniform: mean 1/2 within 3 standard errors.
        let d = EmpiricalPrior::Dirichlet(DirichletPrior {
            alpha: vec![1.0, 1.0],
        });
        let m = 100_000;
        let mut acc = 0.0;
        let mut rng = Prng::seed_from(12);
        for _ in 0..m {
            match sample_prior_with(&d, &mut rng).unwrap().values {
                ParamValues::Simplex(w) => acc += w[0],
                _ => panic!(),
            }
        }
        let mean = acc / m as f64;
        let se = (1.0f64 / 12.0 / m as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}");

        // Gaussian prior: the sample mean approaches the prior mean.
        let g = toy_prior(1.3, 0.4);
        let mut acc = 0.0;
        for _ in 0..m {
            match sample_prior_with(&g, &mut rng).unwrap().values {
                ParamValues::Location(t) => acc += t,
                _ => panic!(),
            }
        }
        let mean = acc / m as f64;
        assert!((mean - 1.3).abs() < 3.0 * 0.4 / (m as f64).sqrt());

        // Uniform boxes: every draw inside.
        let mp = EmpiricalPrior::MixtureParam(MixtureParamPrior {
            weights: DirichletPrior {
                alpha: vec![2.0, 3.0],
            },
            location_boxes: vec![(-1.1, -0.9), (0.9, 1.1)],
            precision_box: Some((0.5, 1.5)),
        });
        for k in 0..500 {
            match sample_prior(&mp, derive_seed(3, &[k])).unwrap().values {
                ParamValues::AdaptiveMixture {
                    locations,
                    precision,
                    ..
                } => {
                    assert!(locations[0] >= -1.1 && locations[0] <= -0.9);
                    assert!(locations[1] >= 0.9 && locations[1] <= 1.1);
                    assert!((0.5..=1.5).contains(&precision));
                }
                _ => panic!(),
            }
        }
    }

    #[test]
    fn log_density_values() {
        // Product of S uniform boxes of width 2 delta.
        let delta = 0.05f64;
        let mp = MixtureParamPrior {
            weights: DirichletPrior {
                alpha: vec![1.0, 1.0],
            },
            location_boxes: vec![(-delta, delta), (1.0 - delta, 1.0 + delta)],
            precision_box: None,
        };
        let inside = ParamPoint::mixture(vec![0.4, 0.6], vec![0.0, 1.0]);
        // Dir(1,1) contributes 0, each box contributes -log(2 delta).
        let expect = -2.0 * (2.0 * delta).ln();
        assert!((mp.log_density(&inside) - expect).abs() < 1e-12);
        let outside = ParamPoint::mixture(vec![0.4, 0.6], vec![0.2, 1.0]);
        assert_eq!(mp.log_density(&outside), f64::NEG_INFINITY);

        // Dir(1,1) is flat at 0 on the interior.
        let d = DirichletPrior {
            alpha: vec![1.0, 1.0],
        };
        assert!(d.log_density(&[0.3, 0.7]).abs() < 1e-12);

        // 1-D gaussian density integrates to 1.
        let g = GaussianPrior {
            family: ModelFamily::GaussianLocation,
            sieve: SieveIndex::Dimension(1),
            mean: vec![0.7],
            cov: CovarianceKind::Spherical(0.09),
        };
        let total = integrate(
            |x| g.log_density(&ParamPoint::location(x)).exp(),
            -5.0,
            6.0,
            &QuadratureCfg::default(),
        )
        .unwrap();
        assert!((total - 1.0).abs() < 1e-6, "total {total}");
    }

    #[test]
    fn prior_density_peaks_at_the_mle() {
        // Histogram prior with all counts positive: mode at the MLE.
        let model = ModelSpec::new(ModelFamily::Histogram, 60).unwrap();
        let truth = ParamPoint::simplex(vec![0.25, 0.4, 0.35]);
        let data = simulate(&model, &truth, 77).unwrap();
        let fit = crate::sieve::sieve_mle(&model, &SieveIndex::Dimension(3), &data, None).unwrap();
        let mut sch = Schedule::histogram(60, 1.0).unwrap();
        sch.s = 3;
        let prior = build_prior(&model, &fit.point, &sch).unwrap();
        let at_mle = log_prior_density(&prior, &fit.point);
        let mut rng = Prng::seed_from(8);
        for _ in 0..200 {
            let probe = ParamPoint::simplex(rng.dirichlet(&[1.0, 1.0, 1.0]));
            assert!(log_prior_density(&prior, &probe) <= at_mle + 1e-9);
        }
        // The Dirichlet mode formula agrees.
        if let EmpiricalPrior::Dirichlet(d) = &prior {
            let mode = d.mode().expect("all counts positive");
            if let ParamValues::Simplex(w) = &fit.point.values {
                for (a, b) in mode.iter().zip(w) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        } else {
            panic!("expected dirichlet");
        }
    }

    #[test]
    fn hierarchical_sparse_prior_draws_and_density() {
        let n = 30;
        let model = ModelSpec::new(ModelFamily::SparseSequence, n).unwrap();
        let truth = ParamPoint::sparse(vec![3], vec![4.0]);
        let data = simulate(&model, &truth, 2).unwrap();
        let prior = HierarchicalPrior::sparse(&data, 0.1, 1.0, n).unwrap();
        let mut rng = Prng::seed_from(5);
        for _ in 0..100 {
            let draw = prior.sample(&mut rng).unwrap();
            let ld = prior.log_density(&draw).unwrap();
            assert!(ld.is_finite());
        }
        // Conditional at a fixed subset is centered at X_S.
        let cond = prior.conditional(&SieveIndex::Subset(vec![1, 4])).unwrap();
        match cond {
            EmpiricalPrior::Gaussian(g) => {
                assert_eq!(g.mean, vec![data.observations[1], data.observations[4]]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn hierarchical_regression_prior_centers_on_least_squares() {
        let n = 40;
        let model = ModelSpec::new(ModelFamily::FixedDesignRegression, n).unwrap();
        let truth = ParamPoint::coefficients(vec![0.5, -0.3]);
        let data = simulate(&model, &truth, 4).unwrap();
        let prior = HierarchicalPrior::regression(&model, &data, 0.2, 1.0, 6).unwrap();
        for s in 1..=6usize {
            let cond = prior.conditional(&SieveIndex::TruncationOrder(s)).unwrap();
            let fit =
                crate::sieve::sieve_mle(&model, &SieveIndex::TruncationOrder(s), &data, None)
                    .unwrap();
            match (cond, &fit.point.values) {
                (EmpiricalPrior::Gaussian(g), ParamValues::Coefficients(c)) => {
                    for (a, b) in g.mean.iter().zip(c) {
                        assert!((a - b).abs() < 1e-10);
                    }
                }
                _ => panic!(),
            }
        }
    }

    #[test]
    fn gamma_range_is_enforced() {
        assert!(Schedule::sparse_sequence(20, 2, 1.0).is_err());
        assert!(Schedule::regression(20, 2.0, 0.0).is_err());
        assert!(Schedule::sparse_sequence(20, 2, 0.5).is_ok());
    }
}
