use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ebconc::config::{parse_config, JobConfig};
use ebconc::io::{persist_rate_study, write_probe_records};
use ebconc::jobs;
use ebconc::report::{evaluate_study, render_report, render_report_csv};
use ebconc::runner::run_rate_study_parallel;

/// Empirical-prior Bayes posteriors and Monte Carlo concentration-rate
/// studies for six model families.
#[derive(Parser)]
#[command(name = "ebconc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobArgs {
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores). The flag wins over EBCONC_THREADS.
    #[arg(long, env = "EBCONC_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Persisted rate-study CSV paths.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Also write the table as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from a model family at a configured truth.
    Simulate(JobArgs),
    /// Compute the sieve MLE on a simulated dataset.
    FitMle(JobArgs),
    /// Form the posterior and write its draws.
    Posterior(JobArgs),
    /// Monte Carlo checks of the prior-mass conditions.
    ProbeConditions(JobArgs),
    /// Run a seeded replicate study across an n-grid.
    RateStudy(JobArgs),
    /// Compare fitted exponents against their targets; exit 0 only if all pass.
    Report(ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_job(args: &JobArgs, expected_task: &str) -> ebconc::Result<JobConfig> {
    let mut job = parse_config(&args.config)?;
    if job.task() != expected_task {
        return Err(ebconc::CliError::Config(format!(
            "config task is `{}` but the subcommand expects `{expected_task}`",
            job.task()
        )));
    }
    if let Some(seed) = args.seed {
        job.set_seed(seed);
    }
    if let Some(out) = &args.out {
        job.set_out(out.display().to_string());
    }
    Ok(job)
}

fn run(cli: Cli) -> ebconc::Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => {
            let job = load_job(&args, "simulate")?;
            let cfg = match job {
                JobConfig::Model(c) => c,
                _ => unreachable!("task checked"),
            };
            let out = cfg.out.clone().map(PathBuf::from);
            let summary = jobs::run_simulate(&cfg, out.as_deref())?;
            print!("{summary}");
            if !summary.ends_with('\n') {
                println!();
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::FitMle(args) => {
            let job = load_job(&args, "fit-mle")?;
            let cfg = match job {
                JobConfig::Model(c) => c,
                _ => unreachable!("task checked"),
            };
            let out = cfg.out.clone().map(PathBuf::from);
            let summary = jobs::run_fit_mle(&cfg, out.as_deref())?;
            print!("{summary}");
            if !summary.ends_with('\n') {
                println!();
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Posterior(args) => {
            let job = load_job(&args, "posterior")?;
            let cfg = match job {
                JobConfig::Model(c) => c,
                _ => unreachable!("task checked"),
            };
            let out = cfg.out.clone().map(PathBuf::from);
            let summary = jobs::run_posterior(&cfg, out.as_deref())?;
            println!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
        Command::ProbeConditions(args) => {
            let job = load_job(&args, "probe-conditions")?;
            let cfg = match job {
                JobConfig::Probe(c) => c,
                _ => unreachable!("task checked"),
            };
            let records = jobs::run_probe(&cfg)?;
            let rendered = serde_json::to_string_pretty(&records)?;
            if let Some(path) = &cfg.out {
                write_probe_records(std::path::Path::new(path), &records)?;
                println!("wrote {} probe record(s) to {path}", records.len());
            }
            println!("{rendered}");
            Ok(ExitCode::SUCCESS)
        }
        Command::RateStudy(args) => {
            let job = load_job(&args, "rate-study")?;
            let file_cfg = match job {
                JobConfig::Study(c) => c,
                _ => unreachable!("task checked"),
            };
            let study = file_cfg.to_study()?;
            let out = file_cfg.out.clone().ok_or_else(|| {
                ebconc::CliError::Config(
                    "rate-study needs an output path (--out or `out`)".to_string(),
                )
            })?;
            if args.verbose {
                eprintln!(
                    "running {} study over {:?} with {} replicates",
                    file_cfg.family, file_cfg.n_grid, file_cfg.replicates
                );
            }
            let curve = run_rate_study_parallel(&study, args.threads)?;
            let path = PathBuf::from(&out);
            persist_rate_study(&path, &file_cfg, &curve)?;
            println!("{}", jobs::study_summary(&file_cfg, &curve));
            println!(
                "persisted to {} and {}",
                path.display(),
                ebconc::io::manifest_path(&path).display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report(args) => {
            let mut entries = Vec::with_capacity(args.inputs.len());
            for path in &args.inputs {
                entries.push(evaluate_study(path)?);
            }
            let (table, all_pass) = render_report(&entries);
            print!("{table}");
            if let Some(out) = &args.out {
                std::fs::write(out, render_report_csv(&entries))?;
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
