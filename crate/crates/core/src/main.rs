use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use usma_core::harness::check::{run_checks, run_tiny, summarize, tiny_config, CheckOptions};
use usma_core::harness::emit::{emit, summary_csv};
use usma_core::harness::{
    derive_seed, load_config, ofdma_baseline, simulate, sweep, sweep_with_threads,
};
use usma_core::{Error, ScenarioConfig, SwapRule};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "usma",
    version,
    about = "User-subchannel swap matching for uplink NOMA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its rate report and run statistics as JSON.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Include per-link rates and the final matching.
        #[arg(long)]
        verbose: bool,
    },
    /// Monte Carlo sweep over user counts; writes summary.csv and trials.csv.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated user counts.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "10,20,30,40,50,60,70,80,90,100"
        )]
        n_values: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value = "sweep-results")]
        out: PathBuf,
        /// Also write chart.svg.
        #[arg(long)]
        chart: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Require an explicit --seed.
        #[arg(long)]
        ci: bool,
    },
    /// Optimality gap of USMA against exhaustive search on tiny instances.
    Oracle {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Draw N <= 6, K <= 3, d_v <= 2, d_f <= 2 at random per instance
        /// instead of using the configured sizes.
        #[arg(long)]
        family: bool,
    },
    /// Randomized invariant suite. Exits with 3 if any check fails.
    Check {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 100_000)]
        fuzz_swaps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A JSON config file plus per-field overrides.
#[derive(Args)]
struct ConfigArgs {
    /// JSON file with any subset of the scenario fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_users: Option<usize>,
    #[arg(long)]
    n_subchannels: Option<usize>,
    #[arg(long)]
    d_v: Option<usize>,
    #[arg(long)]
    d_f: Option<usize>,
    #[arg(long)]
    area_side: Option<f64>,
    #[arg(long)]
    carrier_freq: Option<f64>,
    #[arg(long)]
    bs_height: Option<f64>,
    #[arg(long)]
    ms_height: Option<f64>,
    #[arg(long)]
    user_tx_power: Option<f64>,
    #[arg(long)]
    noise_power: Option<f64>,
    #[arg(long)]
    swap_epsilon: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    fading: Option<bool>,
    #[arg(long, value_parser = parse_rule)]
    swap_rule: Option<SwapRule>,
    #[arg(long)]
    min_rate: Option<f64>,
}

fn parse_rule(s: &str) -> Result<SwapRule, String> {
    match s {
        "sum_rate" | "sum-rate" => Ok(SwapRule::SumRate),
        "pareto" => Ok(SwapRule::Pareto),
        _ => Err(format!("unknown swap rule `{s}` (sum_rate | pareto)")),
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ScenarioConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        apply!(
            seed,
            n_users,
            n_subchannels,
            d_v,
            d_f,
            area_side,
            carrier_freq,
            bs_height,
            ms_height,
            user_tx_power,
            noise_power,
            swap_epsilon,
            fading,
            swap_rule,
            min_rate
        );
        if self.max_iterations.is_some() {
            cfg.max_iterations = self.max_iterations;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Error(Error),
    Invariant,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn cmd_run(config: &ConfigArgs, verbose: bool) -> Result<(), Failure> {
    let cfg = config.resolve()?;
    let run = simulate(&cfg)?;
    let (_, baseline) = ofdma_baseline(&run.channel, &cfg)?;
    let report = &run.stats.final_report;
    let mut out = json!({
        "config": cfg,
        "rate_report": {
            "sum_rate": report.sum_rate,
            "scheduled_users": report.scheduled_users,
            "user_rate": report.user_rate,
            "sub_rate": report.sub_rate,
        },
        "run_stats": {
            "iterations": run.stats.iterations,
            "swaps_executed": run.stats.swaps_executed,
            "converged": run.stats.converged,
            "initial_sum_rate": run.stats.initial_sum_rate,
            "sum_rate_trajectory": run.stats.sum_rate_trajectory,
        },
        "ofdma_baseline": {
            "sum_rate": baseline.sum_rate,
            "scheduled_users": baseline.scheduled_users,
        },
    });
    if verbose {
        out["matching"] = json!(run.matching.pairs().collect::<Vec<_>>());
        out["rate_report"]["link_rate"] = json!(report.link_rate);
    }
    print_json(&out);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: &ConfigArgs,
    n_values: &[usize],
    trials: usize,
    out: &Path,
    chart: bool,
    threads: Option<usize>,
    ci: bool,
) -> Result<(), Failure> {
    if ci && config.seed.is_none() {
        return Err(Error::Config {
            field: "seed",
            reason: "--seed is mandatory with --ci".into(),
        }
        .into());
    }
    let cfg = config.resolve()?;
    let result = match threads {
        Some(t) => sweep_with_threads(&cfg, n_values, trials, t)?,
        None => sweep(&cfg, n_values, trials)?,
    };
    for path in emit(&result, out, chart)? {
        eprintln!("wrote {}", path.display());
    }
    print!("{}", summary_csv(&result.rows));
    Ok(())
}

fn cmd_oracle(config: &ConfigArgs, instances: usize, family: bool) -> Result<(), Failure> {
    let cfg = config.resolve()?;
    let outcomes = (0..instances)
        .map(|i| {
            let seed = derive_seed(cfg.seed, 0, i);
            let instance = if family {
                ScenarioConfig {
                    swap_rule: cfg.swap_rule,
                    swap_epsilon: cfg.swap_epsilon,
                    ..tiny_config(seed)
                }
            } else {
                ScenarioConfig {
                    seed,
                    ..cfg.clone()
                }
            };
            run_tiny(&instance)
        })
        .collect::<Result<Vec<_>, _>>()?;
    print_json(&json!({ "summary": summarize(&outcomes) }));
    Ok(())
}

fn cmd_check(instances: usize, fuzz_swaps: usize, seed: u64) -> Result<(), Failure> {
    let opts = CheckOptions {
        instances,
        fuzz_swaps,
        seed,
    };
    let checks = run_checks(&opts)?;
    for c in &checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Invariant)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, verbose } => cmd_run(config, *verbose),
        Command::Sweep {
            config,
            n_values,
            trials,
            out,
            chart,
            threads,
            ci,
        } => cmd_sweep(config, n_values, *trials, out, *chart, *threads, *ci),
        Command::Oracle {
            config,
            instances,
            family,
        } => cmd_oracle(config, *instances, *family),
        Command::Check {
            instances,
            fuzz_swaps,
            seed,
        } => cmd_check(*instances, *fuzz_swaps, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant) => ExitCode::from(EXIT_INVARIANT),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_VALIDATION,
            })
        }
    }
}
