use std::path::PathBuf;
use std::process::ExitCode;

use beamsched::campaign::{oracle_check, run_campaign, CampaignConfig};
use beamsched::scheduler::{counting, DEFAULT_ENUMERATION_CAP, DEFAULT_ORACLE_CAP};
use beamsched::Result;
use clap::{Parser, Subcommand};

/// Return-link scheduling simulator for multi-beam satellite MIMO.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print search-space sizes for M users per beam and B beams.
    Counts {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        b: u64,
    },
    /// Compare minimum deletion with exhaustive search on random instances.
    Oracle {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            workers,
            out,
        } => {
            let mut cfg = CampaignConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            cfg.validate()?;
            let (output, files) = run_campaign(&cfg)?;
            for c in &output.curves {
                eprintln!(
                    "{}: {} slots, {} schedules, {} evaluations",
                    c.label,
                    c.stats.min_rate_samples.len(),
                    c.stats.n_sched,
                    c.evaluations
                );
            }
            if let Some(o) = &output.oracle {
                println!("{}", o.line());
            }
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Counts { m, b } => {
            let c = counting(m, b);
            println!("users_scheduled {}", c.n_users_sched);
            println!("allocations {}", c.n_alloc);
            println!("paths {}", c.n_paths);
            println!("evaluations_exhaustive {}", c.n_eval_es);
            println!("evaluations_minimum_deletion {}", c.n_eval_bg);
            println!("allocations_free_slot {}", c.n_alloc_fsa);
        }
        Command::Oracle { m, b, trials, seed } => {
            let summary = oracle_check(m, b, trials, seed, (DEFAULT_ENUMERATION_CAP, DEFAULT_ORACLE_CAP))?;
            println!("{}", summary.line());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
