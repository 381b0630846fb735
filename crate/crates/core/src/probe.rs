//! Monte Carlo probes for the local and global prior-mass conditions, plus
//! the analytic lower bounds they are compared against.
//!
//! Probes report finite-n evidence (estimate plus standard error), never a
//! certificate: the implied constant is -log(estimate) / (n eps_n^2).

#[allow(unused_imports)] // f64 methods come from the trait in no_std builds
use num_traits::Float;

use alloc::vec::Vec;

use crate::divergence::{kl_and_v, DivergenceMethod, KlV};
use crate::error::Error;
use crate::model::{in_ln, simulate, Dataset, ModelFamily, ModelSpec, ParamPoint};
use crate::prior::{sample_prior_with, EmpiricalPrior, HierarchicalPrior};
use crate::rng::{derive_seed, Prng};
use crate::sieve::sieve_mle;
use crate::special::{ln_gamma, normal_logpdf};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

fn binomial_estimate(hits: usize, draws: usize) -> ProbeEstimate {
    let p = hits as f64 / draws as f64;
    ProbeEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / draws as f64).sqrt(),
    }
}

/// Monte Carlo estimate of the prior mass of the likelihood neighborhood
/// of the sieve MLE: draw from the prior, test membership.
#[allow(clippy::too_many_arguments)]
pub fn lp1_mass(
    prior: &EmpiricalPrior,
    model: &ModelSpec,
    data: &Dataset,
    mle: &ParamPoint,
    d: f64,
    budget: f64,
    draws: usize,
    seed: u64,
) -> Result<ProbeEstimate> {
    if draws == 0 {
        return Err(Error::InvalidArgument {
            name: "draws",
            reason: "need at least one draw".into(),
        });
    }
    let mut rng = Prng::seed_from(seed);
    let mut hits = 0usize;
    for _ in 0..draws {
        let point = sample_prior_with(prior, &mut rng)?;
        if in_ln(model, &point, data, mle, d, budget)? {
            hits += 1;
        }
    }
    Ok(binomial_estimate(hits, draws))
}

/// Prior whose spread the 1-D global-mass integral is probed with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gp1Prior {
    /// N(mle, sd^2) with a fixed standard deviation.
    ToyFixedSd { sd: f64 },
    /// N(mle, (n psi)^{-1}).
    FiniteDimPsi { psi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gp1Cfg {
    pub grid_points: usize,
    /// Grid half-width in units of the integrand's effective scale.
    pub half_width: f64,
    pub replicates: usize,
}

impl Default for Gp1Cfg {
    fn default() -> Self {
        Gp1Cfg {
            grid_points: 241,
            half_width: 9.0,
            replicates: 4000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gp1Report {
    pub value: f64,
    /// Set when the grid endpoints still carry noticeable integrand mass.
    pub truncation_flag: bool,
}

/// The global prior-mass integral for the 1-D Gaussian-location family:
/// outer grid over theta, inner Monte Carlo over data replicates of
/// E[pi_n(theta)^p], combined as the integral of the 1/p power.
pub fn gp1_integral_1d(
    prior: Gp1Prior,
    model: &ModelSpec,
    theta_star: f64,
    p: f64,
    cfg: &Gp1Cfg,
    seed: u64,
) -> Result<Gp1Report> {
    if model.family != ModelFamily::GaussianLocation {
        return Err(Error::InvalidArgument {
            name: "model",
            reason: "the 1-D global-mass probe supports the Gaussian-location family".into(),
        });
    }
    if !(p > 1.0) {
        return Err(Error::InvalidArgument {
            name: "p",
            reason: "the probe needs p > 1".into(),
        });
    }
    if cfg.replicates < 2 || cfg.grid_points < 9 {
        return Err(Error::InvalidArgument {
            name: "cfg",
            reason: "need at least 2 replicates and 9 grid points".into(),
        });
    }
    let n = model.n as f64;
    let sd = match prior {
        Gp1Prior::ToyFixedSd { sd } => sd,
        Gp1Prior::FiniteDimPsi { psi } => (1.0 / (n * psi)).sqrt(),
    };
    // Replicate MLEs.
    let truth = ParamPoint::location(theta_star);
    let mut means = Vec::with_capacity(cfg.replicates);
    for k in 0..cfg.replicates {
        let data = simulate(model, &truth, derive_seed(seed, &[k as u64]))?;
        means.push(data.observations.iter().sum::<f64>() / n);
    }
    // The integrand is close to a normal with variance sd^2 + p W, W = sigma^2/n.
    let w = model.sigma * model.sigma / n;
    let scale = (sd * sd + p * w).sqrt();
    let lo = theta_star - cfg.half_width * scale;
    let hi = theta_star + cfg.half_width * scale;
    let h = (hi - lo) / (cfg.grid_points - 1) as f64;
    let mut values = Vec::with_capacity(cfg.grid_points);
    for i in 0..cfg.grid_points {
        let theta = lo + i as f64 * h;
        let mean_pow: f64 = means
            .iter()
            .map(|&m| (p * normal_logpdf(theta, m, sd)).exp())
            .sum::<f64>()
            / cfg.replicates as f64;
        values.push(mean_pow.powf(1.0 / p));
    }
    let mut integral = 0.5 * (values[0] + values[cfg.grid_points - 1]);
    for v in &values[1..cfg.grid_points - 1] {
        integral += v;
    }
    integral *= h;
    let peak = values.iter().copied().fold(0.0, f64::max);
    let truncation_flag = values[0] > 1e-6 * peak || values[cfg.grid_points - 1] > 1e-6 * peak;
    Ok(Gp1Report {
        value: integral,
        truncation_flag,
    })
}

/// Exact closed form of the toy global-mass integral:
/// (1 + p / (n sd^2))^{(p-1)/(2p)}.
pub fn gp1_toy_closed_form(sd: f64, n: usize, p: f64) -> f64 {
    (1.0 + p / (n as f64 * sd * sd)).powf(0.5 * (p - 1.0) / p)
}

/// Exact closed form for the finite-dimensional normal prior at d = 1:
/// (1 + p psi sigma^2)^{(p-1)/(2p)}.
pub fn gp1_finite_dim_closed_form(psi: f64, sigma: f64, p: f64) -> f64 {
    (1.0 + p * psi * sigma * sigma).powf(0.5 * (p - 1.0) / p)
}

/// log of Gamma(c+s+n) / (Gamma(c+s) c^n), evaluated as the exact product
/// sum log(1 + (s+j)/c) so nothing overflows.
pub fn log_gamma_ratio_product(c: f64, s: usize, n: usize) -> f64 {
    (1..=n).map(|j| ((s + j) as f64 / c).ln_1p()).sum()
}

/// The Dirichlet prior-mass sufficient condition:
/// Gamma(c+s+n) / (Gamma(c+s) c^n) <= exp(d n eps_n^2).
pub fn gamma_ratio_check(c: f64, s: usize, n: usize, d: f64, n_eps2: f64) -> bool {
    log_gamma_ratio_product(c, s, n) <= d * n_eps2
}

/// Reverse Markov inequality for Y in (0,1): P(Y > a) >= (E(Y) - a)/(1 - a),
/// floored at zero.
pub fn reverse_markov_bound(expectation: f64, a: f64) -> f64 {
    assert!((0.0..=1.0).contains(&expectation), "expectation in [0,1]");
    assert!(a > 0.0 && a < 1.0, "a in (0,1)");
    ((expectation - a) / (1.0 - a)).max(0.0)
}

/// Analytic lower bound on the Dirichlet prior mass of the likelihood
/// neighborhood: the Gamma-ratio term minus exp(-d n eps_n^2).
pub fn histogram_lp1_lower_bound(c: f64, s: usize, n: usize, d: f64, n_eps2: f64) -> f64 {
    (-log_gamma_ratio_product(c, s, n)).exp() - (-d * n_eps2).exp()
}

/// Gaussian-ball lower bound for the sparse conditional prior mass of the
/// d = 1 neighborhood: gamma^{s/2} e^{-gamma s} s^{s/2} / Gamma(s/2 + 1).
pub fn sparse_ball_lower_bound(gamma: f64, s: usize) -> f64 {
    let sf = s as f64;
    (0.5 * sf * gamma.ln() - gamma * sf + 0.5 * sf * sf.ln() - ln_gamma(0.5 * sf + 1.0)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lp2Report {
    /// Normalized model weight of the target index.
    pub weight_part: f64,
    /// Monte Carlo estimate of the conditional prior mass of the
    /// neighborhood within that model.
    pub mass_part: f64,
    pub mass_se: f64,
}

/// Probe of the adaptive local prior condition: the normalized weight
/// w_n(S*) and the conditional mass of the within-model neighborhood with
/// budget |S*|.
pub fn lp2_mass(
    prior: &HierarchicalPrior,
    model: &ModelSpec,
    data: &Dataset,
    s_star: &crate::model::SieveIndex,
    d: f64,
    draws: usize,
    seed: u64,
) -> Result<Lp2Report> {
    let weight_part = prior.weights.log_weight_normalized(s_star)?.exp();
    let size = s_star.size();
    if size == 0 {
        // The empty model's conditional prior is the point mass at the MLE.
        return Ok(Lp2Report {
            weight_part,
            mass_part: 1.0,
            mass_se: 0.0,
        });
    }
    let conditional = prior.conditional(s_star)?;
    let em = crate::sieve::EmConfig::default();
    let mle = sieve_mle(model, s_star, data, Some(&em))?;
    let est = lp1_mass(
        &conditional,
        model,
        data,
        &mle.point,
        d,
        size as f64,
        draws,
        seed,
    )?;
    Ok(Lp2Report {
        weight_part,
        mass_part: est.estimate,
        mass_se: est.std_error,
    })
}

/// Pseudo-true-point check: both joint divergences against the truth must
/// fit inside the budget n eps_n^2.
pub fn s1_check(
    model: &ModelSpec,
    theta_star: &ParamPoint,
    theta_dagger: &ParamPoint,
    n_eps2: f64,
    method: DivergenceMethod,
) -> Result<(KlV, bool)> {
    let klv = kl_and_v(model, theta_star, theta_dagger, method)?;
    let pass = !klv.support_mismatch && klv.k.max(klv.v) <= n_eps2;
    Ok((klv, pass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::model::SieveIndex;
    use crate::prior::{
        build_prior, toy_prior, toy_prior_sd, DirichletPrior, MixtureParamPrior, ModelWeights,
        Schedule,
    };
    use crate::sieve::EmConfig;

    #[test]
    fn toy_lp1_mass_recovers_exp_minus_c() {
        let c = core::f64::consts::LN_2;
        let n = 100;
        let model = ModelSpec::new(ModelFamily::GaussianLocation, n).unwrap();
        let data = simulate(&model, &ParamPoint::location(0.3), 71).unwrap();
        let mean = data.observations.iter().sum::<f64>() / n as f64;
        let mle = ParamPoint::location(mean);
        let sd = toy_prior_sd(c, n).unwrap();
        let prior = toy_prior(mean, sd);
        let draws = 20_000;
        let est = lp1_mass(&prior, &model, &data, &mle, 1.0, 1.0, draws, 5).unwrap();
        let target = (-c).exp();
        assert!(
            (est.estimate - target).abs() <= 3.0 * est.std_error,
            "estimate {} target {target} se {}",
            est.estimate,
            est.std_error
        );
        // Two disjoint seeds agree within combined error bars.
        let est2 = lp1_mass(&prior, &model, &data, &mle, 1.0, 1.0, draws, 6).unwrap();
        let combined = (est.std_error.powi(2) + est2.std_error.powi(2)).sqrt();
        assert!((est.estimate - est2.estimate).abs() <= 6.0 * combined);
    }

    #[test]
    fn degenerate_prior_has_full_neighborhood_mass() {
        // Boxes of width 2e-9 around the MLE: every draw stays inside the
        // likelihood neighborhood.
        let n = 50;
        let model = ModelSpec::new(ModelFamily::FiniteMixture, n).unwrap();
        let truth = ParamPoint::mixture(vec![1.0], vec![0.4]);
        let data = simulate(&model, &truth, 3).unwrap();
        let em = EmConfig::default();
        let fit = sieve_mle(&model, &SieveIndex::Dimension(1), &data, Some(&em)).unwrap();
        let prior = EmpiricalPrior::MixtureParam(MixtureParamPrior {
            weights: DirichletPrior { alpha: vec![2.0] },
            location_boxes: match &fit.point.values {
                crate::model::ParamValues::Mixture { locations, .. } => {
                    locations.iter().map(|&m| (m - 1e-9, m + 1e-9)).collect()
                }
                _ => panic!(),
            },
            precision_box: None,
        });
        let est = lp1_mass(&prior, &model, &data, &fit.point, 1.0, 1.0, 2000, 9).unwrap();
        assert_eq!(est.estimate, 1.0);
    }

    #[test]
    fn histogram_mass_dominates_the_analytic_bound() {
        let n = 500;
        let s = 5;
        let model = ModelSpec::new(ModelFamily::Histogram, n).unwrap();
        let sch = Schedule::histogram(n, 1.0).unwrap();
        let c = sch.c.unwrap();
        let n_eps2 = sch.n_eps2();
        let d = 2.0;
        let truth = ParamPoint::simplex(vec![0.2; 5]);
        let data = simulate(&model, &truth, 17).unwrap();
        let fit = sieve_mle(&model, &SieveIndex::Dimension(s), &data, None).unwrap();
        let mut sch_s = sch;
        sch_s.s = s;
        let prior = build_prior(&model, &fit.point, &sch_s).unwrap();
        let est = lp1_mass(&prior, &model, &data, &fit.point, d, n_eps2, 10_000, 23).unwrap();
        let bound = histogram_lp1_lower_bound(c, s, n, d, n_eps2);
        assert!(bound > 0.0 && bound < 1.0);
        assert!(
            est.estimate >= bound - 3.0 * est.std_error,
            "estimate {} bound {bound}",
            est.estimate
        );
    }

    #[test]
    fn gp1_matches_toy_closed_form() {
        let n = 50;
        let model = ModelSpec::new(ModelFamily::GaussianLocation, n).unwrap();
        let sd = toy_prior_sd(core::f64::consts::LN_2, n).unwrap();
        let p = 2.0;
        let report = gp1_integral_1d(
            Gp1Prior::ToyFixedSd { sd },
            &model,
            0.2,
            p,
            &Gp1Cfg {
                replicates: 2000,
                ..Default::default()
            },
            31,
        )
        .unwrap();
        let exact = gp1_toy_closed_form(sd, n, p);
        assert!(!report.truncation_flag);
        assert!(
            (report.value / exact - 1.0).abs() < 0.1,
            "mc {} exact {exact}",
            report.value
        );
    }

    #[test]
    fn gp1_matches_finite_dim_closed_form_and_limit() {
        let n = 80;
        let model = ModelSpec::new(ModelFamily::GaussianLocation, n).unwrap();
        let psi = 2.0;
        let report = gp1_integral_1d(
            Gp1Prior::FiniteDimPsi { psi },
            &model,
            -0.5,
            2.0,
            &Gp1Cfg {
                replicates: 2000,
                ..Default::default()
            },
            37,
        )
        .unwrap();
        let exact = gp1_finite_dim_closed_form(psi, 1.0, 2.0);
        assert!((report.value / exact - 1.0).abs() < 0.1);
        // p -> 1: the exponent collapses and the integral tends to 1.
        let p = 1.0 + 1e-6;
        let report = gp1_integral_1d(
            Gp1Prior::FiniteDimPsi { psi },
            &model,
            -0.5,
            p,
            &Gp1Cfg {
                replicates: 1000,
                ..Default::default()
            },
            41,
        )
        .unwrap();
        assert!((report.value - 1.0).abs() < 0.05, "value {}", report.value);
    }

    #[test]
    fn gp1_flags_a_truncated_grid() {
        let n = 50;
        let model = ModelSpec::new(ModelFamily::GaussianLocation, n).unwrap();
        let report = gp1_integral_1d(
            Gp1Prior::FiniteDimPsi { psi: 1.0 },
            &model,
            0.0,
            2.0,
            &Gp1Cfg {
                replicates: 500,
                grid_points: 41,
                half_width: 1.5,
            },
            3,
        )
        .unwrap();
        assert!(report.truncation_flag);
    }

    #[test]
    fn gamma_ratio_examples() {
        // c = n eps^{-2} with s <= n passes at d = 2.
        for &n in &[100usize, 1000] {
            let sch = Schedule::histogram(n, 1.0).unwrap();
            let c = sch.c.unwrap();
            assert!(gamma_ratio_check(c, sch.s, n, 2.0, sch.n_eps2()));
        }
        // Enormous c: product collapses to zero.
        assert!(gamma_ratio_check(1e12, 5, 100, 0.1, 1e-3));
        // Tiny c fails: direct-summation oracle agrees.
        let c = 1.0;
        let direct: f64 = (1..=100).map(|j| (1.0 + (5 + j) as f64 / c).ln()).sum();
        assert!(direct > 1.0);
        assert!(!gamma_ratio_check(c, 5, 100, 1.0, 1.0));
        // Monotone in c: once true, stays true.
        let mut was_true = false;
        for &c in &[1.0, 10.0, 100.0, 1e4, 1e8] {
            let now = gamma_ratio_check(c, 5, 100, 1.0, 1.0);
            assert!(!was_true || now);
            was_true = now;
        }
    }

    #[test]
    fn reverse_markov_cases() {
        assert!((reverse_markov_bound(0.6, 0.2) - 0.5).abs() < 1e-15);
        assert_eq!(reverse_markov_bound(0.2, 0.2), 0.0);
        // Validity on the uniform law: P(Y > a) = 1 - a >= (1/2 - a)/(1 - a).
        for i in 1..99 {
            let a = i as f64 / 100.0;
            assert!(1.0 - a >= reverse_markov_bound(0.5, a) - 1e-15);
        }
    }

    #[test]
    fn lp2_sparse_mass_dominates_gaussian_ball_bound() {
        let n = 100;
        let model = ModelSpec::new(ModelFamily::SparseSequence, n).unwrap();
        let truth = ParamPoint::sparse(vec![0, 1, 2, 3, 4], vec![4.0, -4.0, 4.0, -4.0, 4.0]);
        let data = simulate(&model, &truth, 19).unwrap();
        let gamma = 0.1;
        // The bound needs 1 - 2 gamma + log gamma + log 2 < 0.
        assert!(1.0 - 2.0 * gamma + gamma.ln() + core::f64::consts::LN_2 < 0.0);
        let prior = HierarchicalPrior::sparse(&data, gamma, 1.0, n).unwrap();
        let s_star = SieveIndex::Subset(vec![0, 1, 2, 3, 4]);
        let report = lp2_mass(&prior, &model, &data, &s_star, 1.0, 20_000, 29).unwrap();
        let bound = sparse_ball_lower_bound(gamma, 5);
        assert!(
            report.mass_part >= bound - 3.0 * report.mass_se,
            "mass {} bound {bound}",
            report.mass_part
        );
        assert!(report.weight_part > 0.0 && report.weight_part < 1.0);
    }

    #[test]
    fn lp2_empty_model_has_unit_mass() {
        let n = 20;
        let model = ModelSpec::new(ModelFamily::SparseSequence, n).unwrap();
        let data = simulate(&model, &ParamPoint::sparse(vec![], vec![]), 7).unwrap();
        let prior = HierarchicalPrior::sparse(&data, 0.1, 1.0, n).unwrap();
        let report = lp2_mass(
            &prior,
            &model,
            &data,
            &SieveIndex::Subset(vec![]),
            1.0,
            100,
            3,
        )
        .unwrap();
        assert_eq!(report.mass_part, 1.0);
        assert_eq!(report.mass_se, 0.0);
    }

    #[test]
    fn lp2_weight_part_matches_direct_enumeration() {
        let n = 10;
        let model = ModelSpec::new(ModelFamily::SparseSequence, n).unwrap();
        let data = simulate(&model, &ParamPoint::sparse(vec![], vec![]), 13).unwrap();
        let prior = HierarchicalPrior::sparse(&data, 0.1, 1.0, n).unwrap();
        let s_star = SieveIndex::Subset(vec![2, 7]);
        let report = lp2_mass(&prior, &model, &data, &s_star, 1.0, 100, 5).unwrap();
        // Enumerate all 1024 subsets directly.
        let weights = ModelWeights::sparse_subset(n, 1.0, n);
        let mut total = 0.0;
        let mut target = 0.0;
        for mask in 0u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let w = crate::prior::model_weight(&weights, &SieveIndex::Subset(idx.clone())).unwrap();
            total += w;
            if idx == vec![2, 7] {
                target = w;
            }
        }
        assert!((report.weight_part - target / total).abs() < 1e-12);
    }

    #[test]
    fn s1_check_accepts_truth_and_rejects_far_points() {
        let n = 50;
        let model = ModelSpec::new(ModelFamily::GaussianLocation, n).unwrap();
        let truth = ParamPoint::location(0.0);
        let (klv, pass) = s1_check(
            &model,
            &truth,
            &truth,
            1.0,
            DivergenceMethod::ClosedForm,
        )
        .unwrap();
        assert!(pass);
        assert_eq!(klv.k, 0.0);
        let (_, fail) = s1_check(
            &model,
            &truth,
            &ParamPoint::location(3.0),
            1.0,
            DivergenceMethod::ClosedForm,
        )
        .unwrap();
        assert!(!fail);
    }
}
