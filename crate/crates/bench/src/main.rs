use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpf_bench::config::{OrderId, ResamplerId};
use cpf_bench::report::AGGREGATION_NOTE;
use cpf_bench::{emit_results, grid_sweep, BenchError, ExperimentConfig, FilterId, GridResult};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Particle vs coordinate particle filter experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the grid described by a TOML config file.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Run a single (D, rho, filter) cell and print its statistics.
    Cell {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        filter: FilterArg,
        /// Particle-filter particle count (the evaluation budget).
        #[arg(long, default_value_t = 2000)]
        particles: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Block-diagonal scaling scenario over object counts K.
    Blocks {
        #[arg(long = "k", num_args = 1.., value_delimiter = ',', default_values_t = [1usize, 3, 6, 9, 12])]
        k: Vec<usize>,
        #[arg(long, default_value_t = 6)]
        block_size: usize,
        #[arg(long, default_value_t = 0.5)]
        block_rho: f64,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [FilterArg::Pf, FilterArg::CpfDirac])]
        filters: Vec<FilterArg>,
        #[arg(long, default_value_t = 2000)]
        particles: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write CSV tables and heatmaps here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Pf,
    #[value(alias = "cpf_exact")]
    CpfExact,
    #[value(alias = "cpf_dirac")]
    CpfDirac,
    Kf,
}

impl From<FilterArg> for FilterId {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::Pf => FilterId::Pf,
            FilterArg::CpfExact => FilterId::CpfExact,
            FilterArg::CpfDirac => FilterId::CpfDirac,
            FilterArg::Kf => FilterId::Kf,
        }
    }
}

impl std::fmt::Display for FilterArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = self.to_possible_value().expect("no skipped variants");
        f.write_str(name.get_name())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ResamplerArg {
    Multinomial,
    Systematic,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Identity,
    Random,
}

/// Filter settings shared by every subcommand; each overrides the config.
#[derive(Args)]
struct Knobs {
    /// Give coordinate filters as many particles as the particle filter.
    #[arg(long)]
    no_budget_parity: bool,
    /// Only resample at the end of a step.
    #[arg(long)]
    no_intra_resample: bool,
    /// Resample when ESS falls below this fraction of N.
    #[arg(long)]
    ess_fraction: Option<f64>,
    #[arg(long)]
    resampler: Option<ResamplerArg>,
    #[arg(long)]
    dimension_order: Option<OrderArg>,
    /// Worker threads (0 = one per core). Does not affect results.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl Knobs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if self.no_budget_parity {
            cfg.budget_parity = false;
        }
        if self.no_intra_resample {
            cfg.intra_step_resampling = false;
        }
        if let Some(a) = self.ess_fraction {
            cfg.ess_fraction = a;
        }
        if let Some(r) = self.resampler {
            cfg.resampler = match r {
                ResamplerArg::Multinomial => ResamplerId::Multinomial,
                ResamplerArg::Systematic => ResamplerId::Systematic,
            };
        }
        if let Some(o) = self.dimension_order {
            cfg.dimension_order = match o {
                OrderArg::Identity => OrderId::Identity,
                OrderArg::Random => OrderId::Random,
            };
        }
    }
}

fn print_summary(result: &GridResult) {
    println!(
        "{:<14} {:>4} {:>5} {:<10} {:>6} {:>11} {:>11} {:>6} {:>10}",
        "scenario", "D", "rho", "filter", "N", "rmse_mean", "rmse_std", "degen", "evals/step"
    );
    for c in &result.cells {
        println!(
            "{:<14} {:>4} {:>5.2} {:<10} {:>6} {:>11.5} {:>11.5} {:>6} {:>10.0}",
            c.scenario.as_str(),
            c.dim,
            c.rho,
            c.filter.as_str(),
            c.n_particles,
            c.rmse_mean,
            c.rmse_std,
            c.degenerate_steps,
            c.evals_per_step()
        );
    }
    for (a, b) in result.filter_pairs() {
        for w in result
            .win_probabilities
            .iter()
            .filter(|w| w.filter_a == b && w.filter_b == a)
        {
            println!(
                "P(error {b} < error {a}) at D={} rho={:.2}: {:.3}",
                w.dim, w.rho, w.p_a_less_b
            );
        }
    }
    println!("note: {AGGREGATION_NOTE}");
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let (cfg, workers, out) = match cli.command {
        Command::Grid { config, out, knobs } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            knobs.apply(&mut cfg);
            (cfg, knobs.workers, Some(out))
        }
        Command::Cell {
            dim,
            rho,
            filter,
            particles,
            steps,
            runs,
            seed,
            knobs,
        } => {
            let mut cfg = ExperimentConfig {
                dims: vec![dim],
                rhos: vec![rho],
                filters: vec![filter.into()],
                n_pf: particles,
                steps,
                runs,
                master_seed: seed,
                ..ExperimentConfig::default()
            };
            knobs.apply(&mut cfg);
            (cfg, knobs.workers, None)
        }
        Command::Blocks {
            k,
            block_size,
            block_rho,
            filters,
            particles,
            steps,
            runs,
            seed,
            out,
            knobs,
        } => {
            let mut cfg = ExperimentConfig {
                block_counts: k,
                block_size,
                block_rho,
                filters: filters.into_iter().map(Into::into).collect(),
                n_pf: particles,
                steps,
                runs,
                master_seed: seed,
                ..ExperimentConfig::block_default()
            };
            knobs.apply(&mut cfg);
            (cfg, knobs.workers, out)
        }
    };
    let result = grid_sweep(&cfg, workers)?;
    print_summary(&result);
    if let Some(dir) = out {
        for path in emit_results(&result, &dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                BenchError::Config(_) => 2,
                _ => 1,
            })
        }
    }
}
