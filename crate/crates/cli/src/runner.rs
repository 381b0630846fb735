//! Rayon-backed study driver. Replicates are independent tasks with derived
//! seeds and collected in index order, so the output is byte-identical to
//! the sequential driver whatever the thread count.

use rayon::prelude::*;

use ebconc_core::rate::{
    build_context, calibrate_m, run_replicate, summarize_study, RateCurve, RateStudyConfig,
    ReplicateRow,
};

use crate::Result;

/// Run a full study with `threads` workers (0 = rayon's default).
pub fn run_rate_study_parallel(cfg: &RateStudyConfig, threads: usize) -> Result<RateCurve> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &RateStudyConfig) -> Result<RateCurve> {
    let m = match cfg.m {
        Some(m) => m,
        None => calibrate_m(cfg)?,
    };
    let mut rows = Vec::with_capacity(cfg.n_grid.len() * cfg.replicates);
    for &n in &cfg.n_grid {
        let ctx = build_context(cfg, n)?;
        let chunk: Vec<ReplicateRow> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| match run_replicate(cfg, &ctx, rep, m) {
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
            })
            .collect();
        rows.extend(chunk);
    }
    Ok(summarize_study(cfg, m, rows)?)
}
