use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cycledger::complexity::{complexity_report, report_csv};
use cycledger::prob::{
    chernoff_bound, failure_sweep_csv, figure_sizes, hypergeom_tail, hypergeom_tail_exact, monte_carlo_committee,
    partial_set_failure_exact, ratio_to_f64, round_failure,
};
use cycledger::sim::{self, sweep::complexity_sweeps, RunConfig};

#[derive(Parser)]
#[command(
    name = "cycledger",
    version,
    about = "Sharded-ledger simulator and security calculators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate rounds of the protocol.
    Run(RunArgs),
    /// Exact committee-failure probabilities.
    Prob {
        #[command(subcommand)]
        calc: ProbCommand,
    },
    /// Monte-Carlo estimate of the single-committee failure rate.
    Mc {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        c: u64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Message-complexity regression over committee size and count.
    Complexity {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        rounds: u64,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    seed: u64,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Setting overrides applied after the file, as KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory receiving chain.txt, metrics.csv, messages.csv and
    /// reputation.csv. Without it the metrics CSV goes to standard output.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write every delivered message to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ProbCommand {
    /// Pr[X >= c/2] for a committee of c drawn from n nodes with t corrupted.
    Tail {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        c: u64,
        /// Print the exact fraction as well.
        #[arg(long)]
        exact: bool,
    },
    /// The exponential bound e^(-c/12).
    Bound {
        #[arg(long)]
        c: f64,
    },
    /// (p/q)^lambda, exactly.
    Partial {
        #[arg(long, default_value_t = 1)]
        p: u64,
        #[arg(long, default_value_t = 3)]
        q: u64,
        #[arg(long)]
        lambda: u32,
    },
    /// m(e^(-c/12) + (1/3)^lambda).
    Round {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        lambda: u32,
    },
    /// CSV of exact tail and bound for c = 30, 60, ..., 300.
    Sweep {
        #[arg(long, default_value_t = 2000)]
        n: u64,
        #[arg(long, default_value_t = 666)]
        t: u64,
    },
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn run(args: RunArgs) -> CliResult {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.apply_text(&text)?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("override `{kv}` is not KEY=VALUE"))?;
        cfg.set(k, v)?;
    }
    cfg.seed = args.seed;
    cfg.validate()?;
    let out = if args.trace.is_some() {
        sim::run_traced(&cfg)?
    } else {
        sim::run(&cfg)?
    };
    if let Some(path) = &args.trace {
        let mut text = out.trace.join("\n");
        text.push('\n');
        write(path, &text)?;
    }
    match &args.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            write(&dir.join("chain.txt"), &out.chain_dump)?;
            write(&dir.join("metrics.csv"), &out.metrics_csv)?;
            write(&dir.join("messages.csv"), &out.messages_csv)?;
            write(&dir.join("reputation.csv"), &out.reputation_csv)?;
        }
        None => print!("{}", out.metrics_csv),
    }
    Ok(())
}

fn prob(calc: ProbCommand) -> CliResult {
    match calc {
        ProbCommand::Tail { n, t, c, exact } => {
            println!("tail,{:.6e}", hypergeom_tail(n, t, c)?);
            if exact {
                let (num, den) = hypergeom_tail_exact(n, t, c)?;
                println!("exact,{num}/{den}");
            }
        }
        ProbCommand::Bound { c } => println!("bound,{:.6e}", chernoff_bound(c)),
        ProbCommand::Partial { p, q, lambda } => {
            let (num, den) = partial_set_failure_exact(p, q, lambda)?;
            println!("partial,{:.6e},{num}/{den}", ratio_to_f64(&num, &den));
        }
        ProbCommand::Round { m, c, lambda } => println!("round,{:.6e}", round_failure(m, c, lambda)),
        ProbCommand::Sweep { n, t } => print!("{}", failure_sweep_csv(n, t, &figure_sizes())?),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Prob { calc } => prob(calc),
        Command::Mc { n, t, c, trials, seed } => {
            let empirical = monte_carlo_committee(n, t, c, trials, seed)?;
            let exact = hypergeom_tail(n, t, c)?;
            let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
            println!("empirical,exact,sigma");
            println!("{empirical:.6e},{exact:.6e},{sigma:.6e}");
            Ok(())
        }
        Command::Complexity { seed, rounds, out } => {
            let (c, m) = complexity_sweeps(seed, rounds)?;
            let csv = report_csv(&complexity_report(&c, &m)?);
            match out {
                Some(path) => write(&path, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
