//! Execution of the five config-driven jobs, shared by the binary and the
//! integration tests.

use std::path::Path;

use ebconc_core::divergence::DivergenceMethod;
use ebconc_core::model::{simulate, ModelFamily, ModelSpec, ParamPoint, SieveIndex};
use ebconc_core::posterior::{
    posterior_gaussian_location, posterior_histogram, posterior_mixture_mh, posterior_regression,
    posterior_sparse_mean, PosteriorRep, SparseMode,
};
use ebconc_core::prior::{
    build_prior, toy_prior, toy_prior_sd, EmpiricalPrior, HierarchicalPrior, ModelWeights,
    Schedule,
};
use ebconc_core::probe::{
    gamma_ratio_check, gp1_finite_dim_closed_form, gp1_integral_1d, gp1_toy_closed_form,
    histogram_lp1_lower_bound, log_gamma_ratio_product, lp1_mass, lp2_mass, s1_check,
    sparse_ball_lower_bound, Gp1Cfg, Gp1Prior,
};
use ebconc_core::rate::{RateCurve, TruthSpec};
use ebconc_core::rng::derive_seed;
use ebconc_core::sieve::{sieve_mle, EmConfig, MleFit};

use crate::config::{em_from_fields, ModelFileConfig, StudyFileConfig};
use crate::io::{
    param_point_to_json, schedule_to_json, write_dataset, write_draws, ProbeRecord,
};
use crate::{CliError, Result};

fn model_from_cfg(cfg: &ModelFileConfig) -> Result<ModelSpec> {
    let family = cfg.family()?;
    let mut model = ModelSpec::new(family, cfg.n)?;
    if let Some(k) = &cfg.kernel {
        model = model.with_kernel(crate::config::kernel_from_str(k)?)?;
    }
    if let Some(sigma) = cfg.sigma {
        model = model.with_sigma(sigma)?;
    }
    Ok(model)
}

fn em_cfg(cfg: &ModelFileConfig) -> EmConfig {
    em_from_fields(cfg.em_max_iters, cfg.em_tol, cfg.em_restarts, cfg.location_bound)
}

fn sieve_for(cfg: &ModelFileConfig, model: &ModelSpec, schedule: &Schedule) -> Result<SieveIndex> {
    Ok(match model.family {
        ModelFamily::GaussianLocation => SieveIndex::Dimension(1),
        ModelFamily::Histogram | ModelFamily::FiniteMixture | ModelFamily::AdaptiveMixture => {
            SieveIndex::Dimension(cfg.s.unwrap_or(schedule.s))
        }
        ModelFamily::SparseSequence => match &cfg.subset {
            Some(idx) => SieveIndex::Subset(idx.clone()),
            None => {
                return Err(CliError::Config(
                    "sparse MLE needs `subset` (zero-based indices)".to_string(),
                ))
            }
        },
        ModelFamily::FixedDesignRegression => {
            SieveIndex::TruncationOrder(cfg.s.unwrap_or(schedule.s))
        }
    })
}

fn schedule_for(cfg: &ModelFileConfig, model: &ModelSpec) -> Result<Schedule> {
    let gamma = cfg.gamma.unwrap_or(0.1);
    Ok(match model.family {
        ModelFamily::GaussianLocation => Schedule::gaussian_location(model.n, 1.0)?,
        ModelFamily::Histogram => Schedule::histogram(model.n, cfg.beta.unwrap_or(1.0))?,
        ModelFamily::FiniteMixture => Schedule::finite_mixture(model.n, model.sigma, 2.0)?,
        ModelFamily::SparseSequence => {
            Schedule::sparse_sequence(model.n, cfg.s_star.unwrap_or(1), gamma)?
        }
        ModelFamily::FixedDesignRegression => {
            Schedule::regression(model.n, cfg.beta.unwrap_or(2.0), gamma)?
        }
        ModelFamily::AdaptiveMixture => {
            Schedule::adaptive_mixture(model.n, 2.5, cfg.s.unwrap_or(2), cfg.beta)?
        }
    })
}

pub fn run_simulate(cfg: &ModelFileConfig, out: Option<&Path>) -> Result<String> {
    let model = model_from_cfg(cfg)?;
    let truth = cfg.truth()?.to_param_point(model.family)?;
    let data = simulate(&model, &truth, cfg.seed)?;
    if let Some(path) = out {
        write_dataset(path, &data)?;
        Ok(format!(
            "wrote {} observations ({}, seed {}) to {}",
            data.observations.len(),
            model.family.name(),
            cfg.seed,
            path.display()
        ))
    } else {
        let mut s = String::new();
        match &data.design {
            Some(d) => {
                s.push_str("index,t,y\n");
                for (i, (t, y)) in d.iter().zip(&data.observations).enumerate() {
                    s.push_str(&format!("{i},{t},{y}\n"));
                }
            }
            None => {
                s.push_str("index,x\n");
                for (i, x) in data.observations.iter().enumerate() {
                    s.push_str(&format!("{i},{x}\n"));
                }
            }
        }
        Ok(s)
    }
}

fn fit_for(cfg: &ModelFileConfig) -> Result<(ModelSpec, Schedule, MleFit)> {
    let model = model_from_cfg(cfg)?;
    let truth = cfg.truth()?.to_param_point(model.family)?;
    let data = simulate(&model, &truth, cfg.seed)?;
    let schedule = schedule_for(cfg, &model)?;
    let sieve = sieve_for(cfg, &model, &schedule)?;
    let em = em_cfg(cfg);
    let fit = sieve_mle(&model, &sieve, &data, Some(&em))?;
    Ok((model, schedule, fit))
}

pub fn run_fit_mle(cfg: &ModelFileConfig, out: Option<&Path>) -> Result<String> {
    let (_, schedule, fit) = fit_for(cfg)?;
    let doc = serde_json::json!({
        "mle": param_point_to_json(&fit.point),
        "log_likelihood": fit.log_likelihood,
        "converged": fit.converged,
        "schedule": schedule_to_json(&schedule),
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&doc)?);
    if let Some(path) = out {
        std::fs::write(path, &text)?;
        Ok(format!("wrote MLE fit to {}", path.display()))
    } else {
        Ok(text)
    }
}

pub fn run_posterior(cfg: &ModelFileConfig, out: Option<&Path>) -> Result<String> {
    let model = model_from_cfg(cfg)?;
    let truth = cfg.truth()?.to_param_point(model.family)?;
    let data = simulate(&model, &truth, cfg.seed)?;
    let schedule = schedule_for(cfg, &model)?;
    let alpha = cfg.alpha_policy()?.resolve(model.family)?;
    let draws_wanted = cfg.draws.unwrap_or(1000);
    let draw_seed = derive_seed(cfg.seed, &[0xd4a3]);
    let gamma = cfg.gamma.unwrap_or(0.1);
    let weight_b = cfg.weight_b.unwrap_or(1.0);
    let (draws, diag) = match model.family {
        ModelFamily::GaussianLocation => {
            let fit = sieve_mle(&model, &SieveIndex::Dimension(1), &data, None)?;
            let prior = match build_prior(&model, &fit.point, &schedule)? {
                EmpiricalPrior::Gaussian(g) => g,
                _ => unreachable!(),
            };
            let post = posterior_gaussian_location(&prior, &model, &data, alpha)?;
            let rep = PosteriorRep::ExactGaussian(post);
            (rep.sample_exact(draws_wanted, draw_seed)?, String::new())
        }
        ModelFamily::Histogram => {
            let s = cfg.s.unwrap_or(schedule.s);
            let mut schedule = schedule;
            schedule.s = s;
            let fit = sieve_mle(&model, &SieveIndex::Dimension(s), &data, None)?;
            let prior = match build_prior(&model, &fit.point, &schedule)? {
                EmpiricalPrior::Dirichlet(d) => d,
                _ => unreachable!(),
            };
            let counts = ebconc_core::model::bin_counts(s, &data.observations);
            let post = posterior_histogram(&prior, &counts)?;
            let rep = PosteriorRep::ExactDirichlet(post);
            (rep.sample_exact(draws_wanted, draw_seed)?, String::new())
        }
        ModelFamily::FiniteMixture => {
            let s = cfg.s.unwrap_or(schedule.s);
            let mut schedule = schedule;
            schedule.s = s;
            let mut em = em_cfg(cfg);
            if cfg.location_bound.is_none() {
                em.location_bound = schedule.b.expect("mixture schedule has B");
            }
            let fit = sieve_mle(&model, &SieveIndex::Dimension(s), &data, Some(&em))?;
            let prior = build_prior(&model, &fit.point, &schedule)?;
            let burn = cfg.burn_in.unwrap_or(draws_wanted / 2);
            let bag =
                posterior_mixture_mh(&model, &data, &prior, alpha, draw_seed, draws_wanted, burn)?;
            let diag = format!(
                "acceptance_rate={} sweeps={}",
                bag.diagnostics.acceptance_rate, bag.diagnostics.sweeps
            );
            (bag.draws, diag)
        }
        ModelFamily::AdaptiveMixture => {
            let s_max = cfg.s_max.unwrap_or((2.0 * (model.n as f64).ln()).ceil() as usize);
            let prior = HierarchicalPrior::adaptive_mixture(
                &model,
                &data,
                2.5,
                1.0,
                2.0,
                s_max.clamp(1, model.n - 1),
                &em_cfg(cfg),
            )?;
            let burn = cfg.burn_in.unwrap_or(draws_wanted / 2);
            let bag = posterior_mixture_mh(
                &model,
                &data,
                &EmpiricalPrior::Hierarchical(prior),
                alpha,
                draw_seed,
                draws_wanted,
                burn,
            )?;
            let diag = format!(
                "acceptance_rate={} sweeps={}",
                bag.diagnostics.acceptance_rate, bag.diagnostics.sweeps
            );
            (bag.draws, diag)
        }
        ModelFamily::SparseSequence => {
            let weights = ModelWeights::sparse_subset(model.n, weight_b, model.n);
            let mode = match cfg.mode.as_deref() {
                Some("exact") => SparseMode::ExactEnumeration,
                Some("gibbs") | None => SparseMode::Gibbs {
                    sweeps: cfg.sweeps.unwrap_or(draws_wanted),
                    burn_in: cfg.burn_in.unwrap_or(500),
                },
                Some(other) => {
                    return Err(CliError::Config(format!(
                        "unknown mode `{other}`; expected `exact` or `gibbs`"
                    )))
                }
            };
            let rep = posterior_sparse_mean(&data, &weights, gamma, alpha, mode, draw_seed)?;
            match rep {
                PosteriorRep::SampleBag(bag) => {
                    let diag = format!(
                        "flip_rate={} sweeps={}",
                        bag.diagnostics.acceptance_rate, bag.diagnostics.sweeps
                    );
                    (bag.draws, diag)
                }
                exact => (exact.sample_exact(draws_wanted, draw_seed)?, String::new()),
            }
        }
        ModelFamily::FixedDesignRegression => {
            let s_max = cfg
                .s_max
                .unwrap_or((2.0 * (model.n as f64).sqrt()).ceil() as usize)
                .clamp(1, model.n - 1);
            let weights = ModelWeights::truncation_order(model.n, weight_b, s_max);
            let post = posterior_regression(&model, &data, &weights, gamma, alpha, s_max)?;
            let rep = PosteriorRep::IndexEnumeration(post);
            (rep.sample_exact(draws_wanted, draw_seed)?, String::new())
        }
    };
    let path = out.ok_or_else(|| {
        CliError::Config("posterior needs an output path (--out or `out`)".to_string())
    })?;
    write_draws(path, &draws, model.n)?;
    let mut summary = format!(
        "wrote {} posterior draws (alpha = {alpha}) to {}",
        draws.len(),
        path.display()
    );
    if !diag.is_empty() {
        summary.push_str(&format!("\n{diag}"));
    }
    Ok(summary)
}

pub fn run_probe(cfg: &crate::config::ProbeFileConfig) -> Result<Vec<ProbeRecord>> {
    let family = crate::config::family_from_str(&cfg.family)?;
    let n = cfg.n;
    let seed = cfg.seed;
    let draws = cfg.draws.unwrap_or(100_000);
    let record = |estimate: f64,
                  std_error: f64,
                  bound: Option<f64>,
                  pass: bool,
                  n_eps2: Option<f64>,
                  weight_part: Option<f64>| ProbeRecord {
        condition: cfg.condition.clone(),
        family: family.name().to_string(),
        n,
        estimate,
        std_error,
        bound,
        pass,
        implied_constant: n_eps2
            .filter(|&b| b > 0.0 && estimate > 0.0)
            .map(|b| -estimate.ln() / b),
        weight_part,
    };
    match (cfg.condition.as_str(), family) {
        ("lp1", ModelFamily::GaussianLocation) => {
            let c = cfg.mass_c.unwrap_or(core::f64::consts::LN_2);
            let d = cfg.d.unwrap_or(1.0);
            let model = ModelSpec::new(family, n)?;
            let truth = ParamPoint::location(cfg.theta_star.unwrap_or(0.0));
            let data = simulate(&model, &truth, seed)?;
            let mean = data.observations.iter().sum::<f64>() / n as f64;
            let mle = ParamPoint::location(mean);
            let sd = toy_prior_sd(c, n)?;
            let prior = toy_prior(mean, sd);
            let est = lp1_mass(
                &prior,
                &model,
                &data,
                &mle,
                d,
                1.0,
                draws,
                derive_seed(seed, &[1]),
            )?;
            let target = (-c).exp();
            let pass = (est.estimate - target).abs() <= 3.0 * est.std_error;
            Ok(vec![record(
                est.estimate,
                est.std_error,
                Some(target),
                pass,
                Some(1.0),
                None,
            )])
        }
        ("lp1", ModelFamily::Histogram) => {
            let beta = cfg.beta.unwrap_or(1.0);
            let mut schedule = Schedule::histogram(n, beta)?;
            if let Some(s) = cfg.s {
                schedule.s = s;
            }
            let s = schedule.s;
            let d = cfg.d.unwrap_or(2.0);
            let model = ModelSpec::new(family, n)?;
            let truth = ParamPoint::simplex(vec![1.0 / s as f64; s]);
            let data = simulate(&model, &truth, seed)?;
            let fit = sieve_mle(&model, &SieveIndex::Dimension(s), &data, None)?;
            let prior = build_prior(&model, &fit.point, &schedule)?;
            let n_eps2 = schedule.n_eps2();
            let est = lp1_mass(
                &prior,
                &model,
                &data,
                &fit.point,
                d,
                n_eps2,
                draws,
                derive_seed(seed, &[1]),
            )?;
            let bound = histogram_lp1_lower_bound(schedule.c.expect("histogram c"), s, n, d, n_eps2);
            let pass = est.estimate >= bound - 3.0 * est.std_error;
            Ok(vec![record(
                est.estimate,
                est.std_error,
                Some(bound),
                pass,
                Some(n_eps2),
                None,
            )])
        }
        ("gp1-toy", ModelFamily::GaussianLocation) => {
            let c = cfg.mass_c.unwrap_or(core::f64::consts::LN_2);
            let p = cfg.p.unwrap_or(2.0);
            let model = ModelSpec::new(family, n)?;
            let sd = toy_prior_sd(c, n)?;
            let gcfg = Gp1Cfg {
                replicates: cfg.replicates.unwrap_or(4000),
                grid_points: cfg.grid_points.unwrap_or(241),
                ..Default::default()
            };
            let report = gp1_integral_1d(
                Gp1Prior::ToyFixedSd { sd },
                &model,
                cfg.theta_star.unwrap_or(0.0),
                p,
                &gcfg,
                seed,
            )?;
            let bound = gp1_toy_closed_form(sd, n, p);
            let pass = (report.value / bound - 1.0).abs() <= 0.05 && !report.truncation_flag;
            Ok(vec![record(report.value, f64::NAN, Some(bound), pass, None, None)])
        }
        ("gp1-finite-dim", ModelFamily::GaussianLocation) => {
            let p = cfg.p.unwrap_or(2.0);
            let psi = cfg.psi.unwrap_or(1.0);
            let model = ModelSpec::new(family, n)?;
            let gcfg = Gp1Cfg {
                replicates: cfg.replicates.unwrap_or(4000),
                grid_points: cfg.grid_points.unwrap_or(241),
                ..Default::default()
            };
            let report = gp1_integral_1d(
                Gp1Prior::FiniteDimPsi { psi },
                &model,
                cfg.theta_star.unwrap_or(0.0),
                p,
                &gcfg,
                seed,
            )?;
            let bound = gp1_finite_dim_closed_form(psi, model.sigma, p);
            let pass = (report.value / bound - 1.0).abs() <= 0.05 && !report.truncation_flag;
            Ok(vec![record(report.value, f64::NAN, Some(bound), pass, None, None)])
        }
        ("gamma-ratio", ModelFamily::Histogram) => {
            let beta = cfg.beta.unwrap_or(1.0);
            let schedule = Schedule::histogram(n, beta)?;
            let s = cfg.s.unwrap_or(schedule.s);
            let c = cfg.c_const.unwrap_or_else(|| schedule.c.expect("histogram c"));
            let d = cfg.d.unwrap_or(2.0);
            let n_eps2 = schedule.n_eps2();
            let log_prod = log_gamma_ratio_product(c, s, n);
            let pass = gamma_ratio_check(c, s, n, d, n_eps2);
            Ok(vec![record(
                log_prod,
                0.0,
                Some(d * n_eps2),
                pass,
                None,
                None,
            )])
        }
        ("lp2", ModelFamily::SparseSequence) => {
            let s_star = cfg.s_star.ok_or_else(|| {
                CliError::Config("lp2 needs `s_star` (target subset 0..s_star-1)".to_string())
            })?;
            let magnitude = cfg.magnitude.unwrap_or(4.0);
            let gamma = cfg.gamma.unwrap_or(0.1);
            let weight_b = cfg.weight_b.unwrap_or(1.0);
            let d = cfg.d.unwrap_or(1.0);
            let model = ModelSpec::new(family, n)?;
            let truth = TruthSpec::Sparse { s_star, magnitude }.to_param_point(family)?;
            let data = simulate(&model, &truth, seed)?;
            let prior = HierarchicalPrior::sparse(&data, gamma, weight_b, n)?;
            let target = SieveIndex::Subset((0..s_star).collect());
            let report = lp2_mass(
                &prior,
                &model,
                &data,
                &target,
                d,
                draws.min(100_000),
                derive_seed(seed, &[2]),
            )?;
            let bound = if s_star > 0 {
                Some(sparse_ball_lower_bound(gamma, s_star))
            } else {
                None
            };
            let pass = match bound {
                Some(b) => report.mass_part >= b - 3.0 * report.mass_se,
                None => report.mass_part == 1.0,
            };
            let schedule = Schedule::sparse_sequence(n, s_star, gamma)?;
            Ok(vec![ProbeRecord {
                condition: cfg.condition.clone(),
                family: family.name().to_string(),
                n,
                estimate: report.mass_part,
                std_error: report.mass_se,
                bound,
                pass,
                implied_constant: (report.mass_part > 0.0)
                    .then(|| -report.mass_part.ln() / schedule.n_eps2()),
                weight_part: Some(report.weight_part),
            }])
        }
        ("s1", ModelFamily::FixedDesignRegression) => {
            let beta = cfg.beta.ok_or_else(|| {
                CliError::Config("s1 needs `beta` for the target rate".to_string())
            })?;
            let decay = cfg.decay.unwrap_or(beta + 0.5);
            let terms = cfg.truth_terms.unwrap_or(64);
            let model = ModelSpec::new(family, n)?;
            let truth = TruthSpec::SobolevDecay { decay, terms }.to_param_point(family)?;
            let schedule = Schedule::regression(n, beta, 0.1)?;
            let order = cfg.s.unwrap_or(schedule.s).max(1);
            let dagger = match &truth.values {
                ebconc_core::model::ParamValues::Coefficients(c) => ParamPoint::coefficients(
                    c.iter().copied().take(order).collect(),
                ),
                _ => unreachable!(),
            };
            let n_eps2 = schedule.n_eps2();
            let (klv, pass) = s1_check(
                &model,
                &truth,
                &dagger,
                n_eps2,
                DivergenceMethod::ClosedForm,
            )?;
            Ok(vec![record(
                klv.k.max(klv.v),
                0.0,
                Some(n_eps2),
                pass,
                None,
                None,
            )])
        }
        (cond, fam) => Err(CliError::Config(format!(
            "condition `{cond}` is not available for family `{}`; supported: \
             lp1 (gaussian_location, histogram), gp1-toy, gp1-finite-dim (gaussian_location), \
             gamma-ratio (histogram), lp2 (sparse_sequence), s1 (regression)",
            fam.name()
        ))),
    }
}

pub fn study_summary(cfg: &StudyFileConfig, curve: &RateCurve) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "rate study: family={} M={} grid={:?} replicates={}\n",
        cfg.family, curve.m, cfg.n_grid, cfg.replicates
    ));
    out.push_str("n,eps_n,tail_mass,mean_dist_sq,mean_dist,failures\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6e},{:.6e},{}\n",
            p.n, p.eps_n, p.tail_mass, p.mean_dist_sq, p.mean_dist, p.failures
        ));
    }
    if let Some(fit) = &curve.fit {
        out.push_str(&format!(
            "fitted exponent ({}): slope={:.4} (se {:.4}), intercept={:.4}, r2={:.4}\n",
            fit.response.name(),
            fit.slope,
            fit.slope_se,
            fit.intercept,
            fit.r2
        ));
    }
    out
}
