use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use done_bench::studies::theory_registry;
use done_bench::{run_experiment, write_outputs, BenchError, BenchmarkRegistry, ExperimentConfig};
use done_core::engine::per_iteration_cost_probe;
use done_core::theory::SuiteOptions;
use done_core::{DoneConfig, FreqDistribution, SearchBox, SolverOptions};

#[derive(Parser)]
#[command(
    name = "done",
    version,
    about = "Online optimization with random Fourier expansion surrogates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded repetitions of an experiment and write traces plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        benchmark: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Run Monte-Carlo and quadrature checks of the estimator theory.
    ValidateTheory {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the surrogate update at several iteration counts.
    ProbeCost {
        #[arg(long = "D")]
        num_features: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        checkpoints: Vec<usize>,
        /// Iterations averaged per checkpoint.
        #[arg(long, default_value_t = 1000)]
        window: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            benchmark,
            seed,
            out,
            reps,
        } => run(config, benchmark, seed, out, reps),
        Command::ValidateTheory { suite, draws, seed } => validate_theory(&suite, draws, seed),
        Command::ProbeCost {
            num_features,
            checkpoints,
            window,
        } => probe_cost(num_features, &checkpoints, window),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(
    config: PathBuf,
    benchmark: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    reps: Option<usize>,
) -> Result<ExitCode, BenchError> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(b) = benchmark {
        cfg.benchmark = b;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    if let Some(r) = reps {
        cfg.repetitions = r;
    }
    let registry = BenchmarkRegistry::default();
    let outcome = run_experiment(&registry, &cfg)?;
    let files = write_outputs(&outcome, &cfg.output_dir)?;
    let s = &outcome.summary;
    println!(
        "benchmark {} ({} runs, N = {}, D = {})",
        s.benchmark, s.repetitions, s.iterations, s.num_features
    );
    println!("median initial value  {:.6e}", s.median_initial_value);
    println!("median final value    {:.6e}", s.median_final_value);
    if let Some(d) = s.median_final_distance_to_optimum {
        println!("median distance to optimum {d:.6e}");
    }
    println!(
        "median update time {:.3e} s, solve time {:.3e} s",
        s.median_update_seconds, s.median_solve_seconds
    );
    println!(
        "wrote {} files to {}",
        files.len(),
        cfg.output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn validate_theory(suite: &str, draws: usize, seed: u64) -> Result<ExitCode, BenchError> {
    let registry = theory_registry();
    if suite != "all" && registry.get(suite).is_none() {
        return Err(BenchError::Config(format!(
            "unknown suite '{suite}', expected one of: all, {}",
            registry.names().join(", ")
        )));
    }
    let reports = registry.run(suite, &SuiteOptions { draws, seed })?;
    let mut ok = true;
    for report in &reports {
        for c in &report.checks {
            ok &= c.passed;
            println!(
                "{} {}/{}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                report.suite,
                c.name,
                c.detail
            );
        }
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn probe_cost(
    num_features: usize,
    checkpoints: &[usize],
    window: usize,
) -> Result<ExitCode, BenchError> {
    let cfg = DoneConfig {
        num_features,
        lambda: 1e-3,
        sigma_perturb: 0.01,
        sigma_explore: 0.01,
        bounds: SearchBox::uniform(-1.0, 1.0, 2)?,
        iterations: 1,
        freq_dist: FreqDistribution::gaussian(1.0)?,
        seed: 0,
        solver: SolverOptions::default(),
    };
    cfg.validate()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    if checkpoints.iter().any(|&c| c == 0) {
        return Err(BenchError::Config("checkpoints start at 1".into()));
    }
    println!("n,seconds");
    for (n, t) in per_iteration_cost_probe(&cfg, checkpoints, window)? {
        println!("{n},{t:.6e}");
    }
    Ok(ExitCode::SUCCESS)
}
