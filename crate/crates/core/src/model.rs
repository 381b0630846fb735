//! Model families: data simulation, log-likelihoods, likelihood ratios, and
//! membership in the likelihood neighborhood of the sieve MLE.

#[allow(unused_imports)] // f64 methods come from the trait in no_std builds
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;

use crate::basis;
use crate::error::Error;
use crate::rng::Prng;
use crate::special::{normal_logpdf, LN_2PI};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelFamily {
    GaussianLocation,
    Histogram,
    FiniteMixture,
    SparseSequence,
    FixedDesignRegression,
    AdaptiveMixture,
}

impl ModelFamily {
    pub fn is_mixture(self) -> bool {
        matches!(self, ModelFamily::FiniteMixture | ModelFamily::AdaptiveMixture)
    }

    /// Marginal i.i.d. families, as opposed to joint n-dimensional ones.
    pub fn is_iid(self) -> bool {
        !matches!(
            self,
            ModelFamily::SparseSequence | ModelFamily::FixedDesignRegression
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::GaussianLocation => "gaussian_location",
            ModelFamily::Histogram => "histogram",
            ModelFamily::FiniteMixture => "finite_mixture",
            ModelFamily::SparseSequence => "sparse_sequence",
            ModelFamily::FixedDesignRegression => "regression",
            ModelFamily::AdaptiveMixture => "adaptive_mixture",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    Normal,
    Cauchy,
}

/// A model family together with its fixed constants.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub kernel: Option<Kernel>,
    pub sigma: f64,
    pub n: usize,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, n: usize) -> Result<Self> {
        let kernel = if family.is_mixture() {
            Some(Kernel::Normal)
        } else {
            None
        };
        ModelSpec {
            family,
            kernel,
            sigma: 1.0,
            n,
        }
        .validated()
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validated()
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Result<Self> {
        self.kernel = Some(kernel);
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.n == 0 {
            return Err(Error::InvalidArgument {
                name: "n",
                reason: "sample size must be at least 1".into(),
            });
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument {
                name: "sigma",
                reason: "scale must be positive".into(),
            });
        }
        if self.family.is_mixture() != self.kernel.is_some() {
            return Err(Error::InvalidArgument {
                name: "kernel",
                reason: "kernel is set exactly for the mixture families".into(),
            });
        }
        if self.family == ModelFamily::AdaptiveMixture && self.kernel != Some(Kernel::Normal) {
            return Err(Error::InvalidArgument {
                name: "kernel",
                reason: "the adaptive mixture family supports only the normal kernel".into(),
            });
        }
        // The sparse-means and histogram models fix the observation scale.
        if matches!(
            self.family,
            ModelFamily::SparseSequence | ModelFamily::Histogram | ModelFamily::AdaptiveMixture
        ) && self.sigma != 1.0
        {
            return Err(Error::InvalidArgument {
                name: "sigma",
                reason: format!("{} fixes sigma = 1", self.family.name()),
            });
        }
        Ok(self)
    }
}

/// Model-complexity index: a dimension, a subset of coordinates (0-based),
/// or a basis truncation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SieveIndex {
    Dimension(usize),
    Subset(Vec<usize>),
    TruncationOrder(usize),
}

impl SieveIndex {
    /// Number of free coordinates.
    pub fn size(&self) -> usize {
        match self {
            SieveIndex::Dimension(s) | SieveIndex::TruncationOrder(s) => *s,
            SieveIndex::Subset(s) => s.len(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            SieveIndex::Dimension(s) | SieveIndex::TruncationOrder(s) => {
                if *s == 0 {
                    return Err(Error::InvalidArgument {
                        name: "sieve",
                        reason: "dimension/truncation order must be at least 1".into(),
                    });
                }
            }
            SieveIndex::Subset(idx) => {
                for w in idx.windows(2) {
                    if w[0] >= w[1] {
                        return Err(Error::InvalidArgument {
                            name: "sieve",
                            reason: "subset must be sorted and distinct".into(),
                        });
                    }
                }
                if let Some(&last) = idx.last() {
                    if last >= n {
                        return Err(Error::InvalidArgument {
                            name: "sieve",
                            reason: format!("subset index {last} out of range for n = {n}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Family-specific coordinates; entries outside the sieve support are
/// implicitly zero.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamValues {
    Location(f64),
    Simplex(Vec<f64>),
    Mixture {
        weights: Vec<f64>,
        locations: Vec<f64>,
    },
    AdaptiveMixture {
        weights: Vec<f64>,
        locations: Vec<f64>,
        precision: f64,
    },
    /// Values aligned with the `Subset` sieve indices.
    Sparse(Vec<f64>),
    /// Leading basis coefficients.
    Coefficients(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamPoint {
    pub sieve: SieveIndex,
    pub values: ParamValues,
}

const SIMPLEX_TOL: f64 = 1e-12;

impl ParamPoint {
    pub fn location(theta: f64) -> Self {
        ParamPoint {
            sieve: SieveIndex::Dimension(1),
            values: ParamValues::Location(theta),
        }
    }

    pub fn simplex(weights: Vec<f64>) -> Self {
        ParamPoint {
            sieve: SieveIndex::Dimension(weights.len()),
            values: ParamValues::Simplex(weights),
        }
    }

    pub fn mixture(weights: Vec<f64>, locations: Vec<f64>) -> Self {
        ParamPoint {
            sieve: SieveIndex::Dimension(weights.len()),
            values: ParamValues::Mixture { weights, locations },
        }
    }

    pub fn adaptive_mixture(weights: Vec<f64>, locations: Vec<f64>, precision: f64) -> Self {
        ParamPoint {
            sieve: SieveIndex::Dimension(weights.len()),
            values: ParamValues::AdaptiveMixture {
                weights,
                locations,
                precision,
            },
        }
    }

    pub fn sparse(indices: Vec<usize>, values: Vec<f64>) -> Self {
        ParamPoint {
            sieve: SieveIndex::Subset(indices),
            values: ParamValues::Sparse(values),
        }
    }

    pub fn coefficients(coeffs: Vec<f64>) -> Self {
        ParamPoint {
            sieve: SieveIndex::TruncationOrder(coeffs.len()),
            values: ParamValues::Coefficients(coeffs),
        }
    }

    /// The sparse point as a dense length-n vector.
    pub fn dense_sparse(&self, n: usize) -> Result<Vec<f64>> {
        match (&self.sieve, &self.values) {
            (SieveIndex::Subset(idx), ParamValues::Sparse(vals)) => {
                let mut out = alloc::vec![0.0; n];
                for (&i, &v) in idx.iter().zip(vals) {
                    out[i] = v;
                }
                Ok(out)
            }
            _ => Err(Error::FamilyMismatch("expected a sparse point".into())),
        }
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        self.sieve.validate(model.n)?;
        let simplex_ok = |w: &[f64]| -> bool {
            w.iter().all(|&x| x >= 0.0)
                && (w.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL * w.len() as f64
        };
        match (model.family, &self.values, &self.sieve) {
            (ModelFamily::GaussianLocation, ParamValues::Location(t), _) => {
                if !t.is_finite() {
                    return Err(Error::InvalidArgument {
                        name: "theta",
                        reason: "location must be finite".into(),
                    });
                }
            }
            (ModelFamily::Histogram, ParamValues::Simplex(w), SieveIndex::Dimension(s)) => {
                if w.len() != *s || !simplex_ok(w) {
                    return Err(Error::FamilyMismatch(
                        "histogram weights must be a simplex vector matching the sieve".into(),
                    ));
                }
            }
            (
                ModelFamily::FiniteMixture,
                ParamValues::Mixture { weights, locations },
                SieveIndex::Dimension(s),
            ) => {
                if weights.len() != *s || locations.len() != *s || !simplex_ok(weights) {
                    return Err(Error::FamilyMismatch(
                        "mixture weights/locations must match the sieve dimension".into(),
                    ));
                }
            }
            (
                ModelFamily::AdaptiveMixture,
                ParamValues::AdaptiveMixture {
                    weights,
                    locations,
                    precision,
                },
                SieveIndex::Dimension(s),
            ) => {
                if weights.len() != *s || locations.len() != *s || !simplex_ok(weights) {
                    return Err(Error::FamilyMismatch(
                        "mixture weights/locations must match the sieve dimension".into(),
                    ));
                }
                if !(*precision > 0.0) {
                    return Err(Error::InvalidArgument {
                        name: "precision",
                        reason: "precision must be positive".into(),
                    });
                }
            }
            (ModelFamily::SparseSequence, ParamValues::Sparse(vals), SieveIndex::Subset(idx)) => {
                if vals.len() != idx.len() {
                    return Err(Error::FamilyMismatch(
                        "sparse values must align with the subset indices".into(),
                    ));
                }
            }
            (
                ModelFamily::FixedDesignRegression,
                ParamValues::Coefficients(c),
                SieveIndex::TruncationOrder(s),
            ) => {
                if c.len() != *s || *s > model.n {
                    return Err(Error::FamilyMismatch(
                        "coefficient vector must match the truncation order (at most n)".into(),
                    ));
                }
            }
            _ => {
                return Err(Error::FamilyMismatch(format!(
                    "parameter shape does not fit family {}",
                    model.family.name()
                )))
            }
        }
        Ok(())
    }
}

/// Observations plus (for regression) the design points, with seed provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub observations: Vec<f64>,
    pub design: Option<Vec<f64>>,
    pub seed: u64,
}

impl Dataset {
    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if self.observations.len() != model.n {
            return Err(Error::DataMismatch(format!(
                "expected {} observations, got {}",
                model.n,
                self.observations.len()
            )));
        }
        let needs_design = model.family == ModelFamily::FixedDesignRegression;
        if needs_design != self.design.is_some() {
            return Err(Error::DataMismatch(
                "design points are present exactly for the regression family".into(),
            ));
        }
        Ok(())
    }
}

/// Draw a dataset from the family at the given truth. Pure in
/// (model, truth, seed): repeat calls are byte-identical.
pub fn simulate(model: &ModelSpec, truth: &ParamPoint, seed: u64) -> Result<Dataset> {
    truth.validate(model)?;
    let mut rng = Prng::seed_from(seed);
    let n = model.n;
    let mut obs = Vec::with_capacity(n);
    let mut design = None;
    match (&truth.values, model.family) {
        (ParamValues::Location(theta), ModelFamily::GaussianLocation) => {
            for _ in 0..n {
                obs.push(theta + model.sigma * rng.normal());
            }
        }
        (ParamValues::Simplex(w), ModelFamily::Histogram) => {
            let s = w.len() as f64;
            for _ in 0..n {
                let bin = pick_weighted(&mut rng, w);
                obs.push((bin as f64 + rng.uniform()) / s);
            }
        }
        (ParamValues::Mixture { weights, locations }, ModelFamily::FiniteMixture) => {
            let kernel = model.kernel.expect("mixture model carries a kernel");
            for _ in 0..n {
                let c = pick_weighted(&mut rng, weights);
                let noise = match kernel {
                    Kernel::Normal => rng.normal(),
                    Kernel::Cauchy => rng.cauchy(),
                };
                obs.push(locations[c] + model.sigma * noise);
            }
        }
        (
            ParamValues::AdaptiveMixture {
                weights,
                locations,
                precision,
            },
            ModelFamily::AdaptiveMixture,
        ) => {
            let sd = (1.0 / precision).sqrt();
            for _ in 0..n {
                let c = pick_weighted(&mut rng, weights);
                obs.push(locations[c] + sd * rng.normal());
            }
        }
        (ParamValues::Sparse(_), ModelFamily::SparseSequence) => {
            let dense = truth.dense_sparse(n)?;
            for &t in &dense {
                obs.push(t + rng.normal());
            }
        }
        (ParamValues::Coefficients(coeffs), ModelFamily::FixedDesignRegression) => {
            let points = basis::design_points(n);
            for &t in &points {
                obs.push(basis::fourier_sum(coeffs, t) + model.sigma * rng.normal());
            }
            design = Some(points);
        }
        _ => {
            return Err(Error::FamilyMismatch(format!(
                "truth does not match family {}",
                model.family.name()
            )))
        }
    }
    Ok(Dataset {
        observations: obs,
        design,
        seed,
    })
}

fn pick_weighted(rng: &mut Prng, weights: &[f64]) -> usize {
    let u = rng.uniform();
    let mut cum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights.len() - 1
}

/// Bin counts of [0,1)-valued observations over `s` equal-width bins.
pub fn bin_counts(s: usize, observations: &[f64]) -> Vec<usize> {
    let mut counts = alloc::vec![0usize; s];
    for &x in observations {
        let bin = ((x * s as f64) as usize).min(s - 1);
        counts[bin] += 1;
    }
    counts
}

/// Log-likelihood of the parameter point. Support violations (a histogram
/// weight of zero with a nonzero bin count) yield `-inf`, not an error, so
/// samplers can reject uniformly.
pub fn log_likelihood(model: &ModelSpec, point: &ParamPoint, data: &Dataset) -> Result<f64> {
    point.validate(model)?;
    data.validate(model)?;
    let obs = &data.observations;
    let out = match (&point.values, model.family) {
        (ParamValues::Location(theta), ModelFamily::GaussianLocation) => obs
            .iter()
            .map(|&x| normal_logpdf(x, *theta, model.sigma))
            .sum(),
        (ParamValues::Simplex(w), ModelFamily::Histogram) => {
            let s = w.len();
            let counts = bin_counts(s, obs);
            let mut acc = obs.len() as f64 * (s as f64).ln();
            for (ns, &ws) in counts.iter().zip(w) {
                if *ns > 0 {
                    if ws <= 0.0 {
                        return Ok(f64::NEG_INFINITY);
                    }
                    acc += *ns as f64 * ws.ln();
                }
            }
            acc
        }
        (ParamValues::Mixture { weights, locations }, ModelFamily::FiniteMixture) => {
            let kernel = model.kernel.expect("mixture model carries a kernel");
            obs.iter()
                .map(|&x| mixture_log_density(x, weights, locations, model.sigma, kernel))
                .sum()
        }
        (
            ParamValues::AdaptiveMixture {
                weights,
                locations,
                precision,
            },
            ModelFamily::AdaptiveMixture,
        ) => {
            let sd = (1.0 / precision).sqrt();
            obs.iter()
                .map(|&x| mixture_log_density(x, weights, locations, sd, Kernel::Normal))
                .sum()
        }
        (ParamValues::Sparse(_), ModelFamily::SparseSequence) => {
            let dense = point.dense_sparse(model.n)?;
            let ss: f64 = obs
                .iter()
                .zip(&dense)
                .map(|(&x, &t)| (x - t) * (x - t))
                .sum();
            -0.5 * (model.n as f64) * LN_2PI - 0.5 * ss
        }
        (ParamValues::Coefficients(coeffs), ModelFamily::FixedDesignRegression) => {
            let design = data.design.as_ref().expect("validated above");
            obs.iter()
                .zip(design)
                .map(|(&y, &t)| normal_logpdf(y, basis::fourier_sum(coeffs, t), model.sigma))
                .sum()
        }
        _ => {
            return Err(Error::FamilyMismatch(format!(
                "parameter does not match family {}",
                model.family.name()
            )))
        }
    };
    Ok(out)
}

/// Log mixture density at a point; log-sum-exp over components.
pub fn mixture_log_density(
    x: f64,
    weights: &[f64],
    locations: &[f64],
    scale: f64,
    kernel: Kernel,
) -> f64 {
    let term = |s: usize| -> f64 {
        let w = weights[s];
        if w <= 0.0 {
            return f64::NEG_INFINITY;
        }
        w.ln() + kernel_log_density(x, locations[s], scale, kernel)
    };
    let mut max = f64::NEG_INFINITY;
    for s in 0..weights.len() {
        max = max.max(term(s));
    }
    if !max.is_finite() {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for s in 0..weights.len() {
        sum += (term(s) - max).exp();
    }
    max + sum.ln()
}

pub fn kernel_log_density(x: f64, location: f64, scale: f64, kernel: Kernel) -> f64 {
    match kernel {
        Kernel::Normal => normal_logpdf(x, location, scale),
        Kernel::Cauchy => {
            let z = (x - location) / scale;
            -(scale * core::f64::consts::PI).ln() - z.mul_add(z, 0.0).ln_1p()
        }
    }
}

/// log L(a) − log L(b), with fast sufficient-statistic paths where the
/// algebra allows. Antisymmetric whenever both sides are finite; `-inf`
/// sentinels propagate (both infinite gives NaN).
pub fn log_likelihood_ratio(
    model: &ModelSpec,
    point: &ParamPoint,
    reference: &ParamPoint,
    data: &Dataset,
) -> Result<f64> {
    match model.family {
        ModelFamily::GaussianLocation => {
            point.validate(model)?;
            reference.validate(model)?;
            data.validate(model)?;
            let (ta, tb) = match (&point.values, &reference.values) {
                (ParamValues::Location(a), ParamValues::Location(b)) => (*a, *b),
                _ => unreachable!("validated location points"),
            };
            let n = model.n as f64;
            let mean = data.observations.iter().sum::<f64>() / n;
            Ok(n * (ta - tb) * (mean - 0.5 * (ta + tb)) / (model.sigma * model.sigma))
        }
        ModelFamily::SparseSequence => {
            point.validate(model)?;
            reference.validate(model)?;
            data.validate(model)?;
            // ll(θ) differs from ll(0) by θᵢ(xᵢ − θᵢ/2) on the support.
            let contrib = |p: &ParamPoint| -> f64 {
                match (&p.sieve, &p.values) {
                    (SieveIndex::Subset(idx), ParamValues::Sparse(vals)) => idx
                        .iter()
                        .zip(vals)
                        .map(|(&i, &t)| t * (data.observations[i] - 0.5 * t))
                        .sum(),
                    _ => unreachable!("validated sparse points"),
                }
            };
            Ok(contrib(point) - contrib(reference))
        }
        _ => {
            let la = log_likelihood(model, point, data)?;
            let lb = log_likelihood(model, reference, data)?;
            Ok(la - lb)
        }
    }
}

/// Membership in the likelihood neighborhood of the sieve MLE:
/// L(θ) ≥ exp(−d · budget) · L(mle), inclusive at the boundary.
///
/// `budget` is n·εₙ² in the known-rate regime or |S| in the adaptive one;
/// the caller picks.
pub fn in_ln(
    model: &ModelSpec,
    point: &ParamPoint,
    data: &Dataset,
    mle: &ParamPoint,
    d: f64,
    budget: f64,
) -> Result<bool> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument {
            name: "d",
            reason: "neighborhood constant d must be positive".into(),
        });
    }
    let llr = log_likelihood_ratio(model, point, mle, data)?;
    Ok(llr >= -d * budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;

    fn gaussian_model(n: usize) -> ModelSpec {
        ModelSpec::new(ModelFamily::GaussianLocation, n).unwrap()
    }

    #[test]
    fn simulate_is_pure_in_seed() {
        let model = gaussian_model(16);
        let truth = ParamPoint::location(0.3);
        let a = simulate(&model, &truth, 99).unwrap();
        let b = simulate(&model, &truth, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate(&model, &truth, 100).unwrap();
        assert_ne!(a.observations, c.observations);
    }

    #[test]
    fn gaussian_draws_match_marginal_law() {
        let model = gaussian_model(4);
        let truth = ParamPoint::location(0.0);
        // Aggregate across seeds for a crude N(0,1) check.
        let mut all = Vec::new();
        for seed in 0..2000u64 {
            let d = simulate(&model, &truth, derive_seed(1, &[seed])).unwrap();
            all.extend(d.observations);
        }
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|x| x * x).sum::<f64>() / n - mean * mean;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.03);
    }

    #[test]
    fn regression_with_zero_truth_is_pure_noise() {
        // Same seed, same stream: f* = 0 regression must reproduce the
        // Gaussian-location noise path exactly.
        let n = 32;
        let reg = ModelSpec::new(ModelFamily::FixedDesignRegression, n).unwrap();
        let gauss = gaussian_model(n);
        let a = simulate(&reg, &ParamPoint::coefficients(alloc::vec![0.0]), 7).unwrap();
        let b = simulate(&gauss, &ParamPoint::location(0.0), 7).unwrap();
        assert_eq!(a.observations, b.observations);
        assert!(a.design.is_some());
    }

    #[test]
    fn sparse_zero_truth_is_standard_normal_vector() {
        let n = 64;
        let model = ModelSpec::new(ModelFamily::SparseSequence, n).unwrap();
        let truth = ParamPoint::sparse(alloc::vec![], alloc::vec![]);
        let d = simulate(&model, &truth, 5).unwrap();
        let gauss = simulate(&gaussian_model(n), &ParamPoint::location(0.0), 5).unwrap();
        assert_eq!(d.observations, gauss.observations);
    }

    #[test]
    fn gaussian_loglik_at_the_observation() {
        let model = gaussian_model(1);
        let data = Dataset {
            observations: alloc::vec![0.4],
            design: None,
            seed: 0,
        };
        let ll = log_likelihood(&model, &ParamPoint::location(0.4), &data).unwrap();
        assert!((ll + 0.5 * LN_2PI).abs() < 1e-14);
    }

    #[test]
    fn histogram_loglik_hand_case() {
        // S = 2, θ = (1/2, 1/2), counts (3, 1): n log 2 + 4 log(1/2) = 0.
        let model = ModelSpec::new(ModelFamily::Histogram, 4).unwrap();
        let data = Dataset {
            observations: alloc::vec![0.1, 0.2, 0.3, 0.7],
            design: None,
            seed: 0,
        };
        let ll = log_likelihood(&model, &ParamPoint::simplex(alloc::vec![0.5, 0.5]), &data)
            .unwrap();
        assert!(ll.abs() < 1e-13);
    }

    #[test]
    fn histogram_boundary_gives_neg_infinity() {
        let model = ModelSpec::new(ModelFamily::Histogram, 2).unwrap();
        let data = Dataset {
            observations: alloc::vec![0.1, 0.9],
            design: None,
            seed: 0,
        };
        let ll = log_likelihood(&model, &ParamPoint::simplex(alloc::vec![1.0, 0.0]), &data)
            .unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn cauchy_single_component_matches_direct_product() {
        let model = ModelSpec::new(ModelFamily::FiniteMixture, 5)
            .unwrap()
            .with_sigma(1.3)
            .unwrap()
            .with_kernel(Kernel::Cauchy)
            .unwrap();
        let data = Dataset {
            observations: alloc::vec![-0.4, 0.2, 1.5, 2.0, -3.0],
            design: None,
            seed: 0,
        };
        let point = ParamPoint::mixture(alloc::vec![1.0], alloc::vec![0.7]);
        let ll = log_likelihood(&model, &point, &data).unwrap();
        // Independent direct evaluation of the Cauchy density product.
        let direct: f64 = data
            .observations
            .iter()
            .map(|&x| {
                let z = (x - 0.7) / 1.3;
                (1.0 / (core::f64::consts::PI * 1.3 * (1.0 + z * z))).ln()
            })
            .sum();
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn ratio_is_zero_at_equal_points_and_antisymmetric() {
        let model = gaussian_model(10);
        let data = simulate(&model, &ParamPoint::location(0.2), 3).unwrap();
        let a = ParamPoint::location(0.9);
        let b = ParamPoint::location(-0.4);
        let zero = log_likelihood_ratio(&model, &a, &a, &data).unwrap();
        assert_eq!(zero, 0.0);
        let ab = log_likelihood_ratio(&model, &a, &b, &data).unwrap();
        let ba = log_likelihood_ratio(&model, &b, &a, &data).unwrap();
        assert!((ab + ba).abs() < 1e-12);
    }

    #[test]
    fn gaussian_ratio_matches_algebraic_form_and_direct_subtraction() {
        let model = gaussian_model(25);
        let data = simulate(&model, &ParamPoint::location(0.0), 11).unwrap();
        let a = ParamPoint::location(0.8);
        let b = ParamPoint::location(-0.3);
        let fast = log_likelihood_ratio(&model, &a, &b, &data).unwrap();
        let direct = log_likelihood(&model, &a, &data).unwrap()
            - log_likelihood(&model, &b, &data).unwrap();
        assert!((fast - direct).abs() < 1e-9);
    }

    #[test]
    fn sparse_ratio_two_path_equality() {
        let n = 12;
        let model = ModelSpec::new(ModelFamily::SparseSequence, n).unwrap();
        let truth = ParamPoint::sparse(alloc::vec![2, 5], alloc::vec![3.0, -1.0]);
        let data = simulate(&model, &truth, 21).unwrap();
        let a = ParamPoint::sparse(alloc::vec![2, 7], alloc::vec![2.5, 0.4]);
        let b = ParamPoint::sparse(alloc::vec![5], alloc::vec![-0.9]);
        let fast = log_likelihood_ratio(&model, &a, &b, &data).unwrap();
        let direct = log_likelihood(&model, &a, &data).unwrap()
            - log_likelihood(&model, &b, &data).unwrap();
        assert!((fast - direct).abs() < 1e-10);
    }

    #[test]
    fn in_ln_contains_the_mle_and_is_monotone_in_d() {
        let model = gaussian_model(30);
        let data = simulate(&model, &ParamPoint::location(0.5), 2).unwrap();
        let mean = data.observations.iter().sum::<f64>() / 30.0;
        let mle = ParamPoint::location(mean);
        assert!(in_ln(&model, &mle, &data, &mle, 0.5, 1.0).unwrap());
        let probe = ParamPoint::location(mean + 0.4);
        let mut last = false;
        for &d in &[0.1, 0.5, 1.0, 2.0, 5.0, 50.0] {
            let now = in_ln(&model, &probe, &data, &mle, d, 1.0).unwrap();
            assert!(!last || now, "in_ln flipped true -> false as d grew");
            last = now;
        }
    }

    #[test]
    fn in_ln_toy_interval() {
        // d = 1, budget = n εₙ² = 1: the neighborhood is |θ − x̄| < √2 · n^{-1/2}.
        let n = 50;
        let model = gaussian_model(n);
        let data = simulate(&model, &ParamPoint::location(0.0), 8).unwrap();
        let mean = data.observations.iter().sum::<f64>() / n as f64;
        let mle = ParamPoint::location(mean);
        let radius = (2.0f64 / n as f64).sqrt();
        let inside = ParamPoint::location(mean + radius * 0.999);
        let outside = ParamPoint::location(mean + radius * 1.001);
        assert!(in_ln(&model, &inside, &data, &mle, 1.0, 1.0).unwrap());
        assert!(!in_ln(&model, &outside, &data, &mle, 1.0, 1.0).unwrap());
    }

    #[test]
    fn in_ln_boundary_is_inclusive() {
        // Construct a histogram point whose log-ratio is exactly -d·budget.
        let model = ModelSpec::new(ModelFamily::Histogram, 4).unwrap();
        let data = Dataset {
            observations: alloc::vec![0.1, 0.2, 0.3, 0.7],
            design: None,
            seed: 0,
        };
        let mle = ParamPoint::simplex(alloc::vec![0.75, 0.25]);
        let point = ParamPoint::simplex(alloc::vec![0.6, 0.4]);
        let gap = log_likelihood_ratio(&model, &point, &mle, &data).unwrap();
        assert!(gap < 0.0);
        assert!(in_ln(&model, &point, &data, &mle, 1.0, -gap).unwrap());
    }

    #[test]
    fn histogram_mle_dominates_grid() {
        let model = ModelSpec::new(ModelFamily::Histogram, 30).unwrap();
        let truth = ParamPoint::simplex(alloc::vec![0.2, 0.5, 0.3]);
        let data = simulate(&model, &truth, 4).unwrap();
        let counts = bin_counts(3, &data.observations);
        let mle = ParamPoint::simplex(counts.iter().map(|&c| c as f64 / 30.0).collect());
        let ll_mle = log_likelihood(&model, &mle, &data).unwrap();
        let steps = 40;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let w1 = i as f64 / steps as f64;
                let w2 = j as f64 / steps as f64;
                let w3 = (steps - i - j) as f64 / steps as f64;
                let point = ParamPoint::simplex(alloc::vec![w1, w2, w3]);
                let ll = log_likelihood(&model, &point, &data).unwrap();
                assert!(ll <= ll_mle + 1e-12);
            }
        }
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        let model = gaussian_model(3);
        let bad = ParamPoint::simplex(alloc::vec![0.5, 0.5]);
        let data = simulate(&model, &ParamPoint::location(0.0), 1).unwrap();
        assert!(log_likelihood(&model, &bad, &data).is_err());
        assert!(simulate(&model, &bad, 1).is_err());
        assert!(ModelSpec::new(ModelFamily::SparseSequence, 5)
            .unwrap()
            .with_sigma(2.0)
            .is_err());
    }
}
