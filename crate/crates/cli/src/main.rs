//! `gridcomfort`: generate datasets, run experiments, evaluate checkpoints,
//! emit plot data and spot-check PMV from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gridcomfort::comfort::{compute_pmv, ComfortInputs};
use gridcomfort::env::{Dataset, SyntheticParams};
use gridcomfort::harness::{emit_plot_data, evaluate, run_experiment, ExperimentConfig, ExperimentReport};
use gridcomfort::kpi::KPI_NAMES;
use gridcomfort::{ConditionId, Error, Result};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "gridcomfort", version, about = "Reward-shaping experiments on a synthetic battery district")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 8760 hours, 50,000 steps, five seeds.
    Full,
    /// 1344 hours, 5,000 steps, two seeds.
    Desk,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic district dataset as CSV.
    GenerateData {
        #[arg(long, default_value_t = 2022)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        buildings: usize,
        #[arg(long, default_value_t = 8760)]
        horizon: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate the configured conditions across seeds.
    Run {
        /// TOML experiment config; omitted keys take their defaults.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// `all`, one id such as `E5`, or a comma-separated list.
        #[arg(long)]
        condition: Option<String>,
        /// Comma-separated seeds, e.g. `42,0`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Parallel workers; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate a policy checkpoint on a dataset against the rule-based controller.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Write the plot-data tables for a finished run directory.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print PMV and PPD for one set of conditions.
    Pmv {
        #[arg(long, allow_negative_numbers = true)]
        tdb: f64,
        #[arg(long, allow_negative_numbers = true)]
        tr: f64,
        #[arg(long)]
        vr: f64,
        #[arg(long)]
        rh: f64,
        #[arg(long)]
        met: f64,
        #[arg(long)]
        clo: f64,
    },
}

fn parse_conditions(text: &str) -> Result<Vec<ConditionId>> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(ConditionId::ALL.to_vec());
    }
    text.split(',').map(|s| s.trim().parse()).collect()
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Serde(e.to_string())
}

fn print_summary(report: &ExperimentReport) {
    print!("{:<4} {:<15} {:>2}", "id", "condition", "n");
    for k in KPI_NAMES {
        print!(" {k:>17}");
    }
    println!();
    for c in &report.conditions {
        print!("{:<4} {:<15}", c.id.as_str(), c.name);
        let Some(agg) = c.aggregate else {
            println!(" no completed runs");
            continue;
        };
        print!(" {:>2}", agg.n);
        for m in agg.values() {
            match m {
                Some(m) => print!(" {:>9.3} ± {:<5.3}", m.mean, m.std),
                None => print!(" {:>17}", "undefined"),
            }
        }
        println!();
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenerateData {
            seed,
            buildings,
            horizon,
            out,
        } => {
            let dataset = Dataset::synthetic(&SyntheticParams { seed, buildings, horizon })?;
            dataset.save(&out)?;
            eprintln!("wrote {} rows x {} buildings to {}", dataset.len(), buildings, out.display());
        }
        Command::Run {
            config,
            preset,
            condition,
            seeds,
            output,
            workers,
        } => {
            let mut config = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(path)?,
                (None, Some(Preset::Desk)) => ExperimentConfig::desk_scale(),
                (None, _) => ExperimentConfig::default(),
            };
            if let Some(text) = condition {
                config.conditions = parse_conditions(&text)?;
            }
            if let Some(seeds) = seeds {
                config.seeds = seeds;
            }
            if let Some(dir) = output {
                config.output_dir = dir;
            }
            if let Some(w) = workers {
                config.workers = w;
            }
            let report = run_experiment(&config)?;
            print_summary(&report);
            eprintln!("artifacts in {}", config.output_dir.display());
        }
        Command::Evaluate { checkpoint, data } => {
            println!("{}", serde_json::to_string_pretty(&evaluate(checkpoint, data)?).map_err(json_error)?);
        }
        Command::Report { runs, out } => {
            let files = emit_plot_data(&runs, &out)?;
            for p in [files.kpi_ratios, files.daily_peak, files.cost_ramping, files.seasonal_pmv] {
                println!("{}", p.display());
            }
        }
        Command::Pmv {
            tdb,
            tr,
            vr,
            rh,
            met,
            clo,
        } => {
            let result = compute_pmv(&ComfortInputs::new(tdb, tr, vr, rh, met, clo)?)?;
            println!("{}", serde_json::to_string_pretty(&result).map_err(json_error)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
