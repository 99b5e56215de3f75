//! `restake`: command-line analysis of elastic restaking networks.
//!
//! Exit codes: 0 robust (or success), 1 not robust, 2 error or engine
//! disagreement. Set `RAYON_NUM_THREADS` to bound parallelism.

mod check;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use elastic_restaking::experiments::Config;
use elastic_restaking::incentives::{best_response_gains, equilibrium_network};
use elastic_restaking::io::NetworkFile;
use elastic_restaking::Network64;
use log::warn;

use check::{dump_mip, engines, render_verdict, run_engine, CheckOptions};

/// Largest best-response gain accepted at equilibrium.
const GAIN_TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "restake", version, about = "Security and robustness analysis of elastic restaking networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide (f, β)-robustness of a network file.
    Check {
        file: PathBuf,
        /// Adversary budget β.
        #[arg(long, default_value_t = 0.0)]
        budget: f64,
        /// Byzantine fraction f of the non-base service weight.
        #[arg(long, default_value_t = 0.0)]
        fraction: f64,
        /// Cross-check with the brute-force oracle (networks up to 4×4).
        #[arg(long)]
        oracle: bool,
        /// Run the mixed-integer programs even when the network is symmetric.
        #[arg(long)]
        mip: bool,
        /// Write the program in CPLEX LP format to this path.
        #[arg(long, value_name = "PATH")]
        dump_mip: Option<PathBuf>,
    },
    /// Run the sweeps listed in a JSON config and write one CSV each.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Equilibrium allocations of the target-degree reward scheme.
    Incentives {
        file: PathBuf,
        /// Search for profitable deviations at this grid resolution.
        #[arg(long, value_name = "RESOLUTION")]
        verify: Option<usize>,
    },
}

fn read_network(path: &Path) -> Result<(NetworkFile, Network64)> {
    let file = NetworkFile::read(path)?;
    let net = file.network()?;
    Ok((file, net))
}

fn cmd_check(file: &Path, opts: CheckOptions, dump: Option<&Path>) -> Result<ExitCode> {
    anyhow::ensure!(opts.budget >= 0.0, "--budget must be non-negative");
    anyhow::ensure!(opts.fraction >= 0.0, "--fraction must be non-negative");
    let (_, net) = read_network(file)?;
    if let Some(path) = dump {
        std::fs::write(path, dump_mip(&net, &opts)?).with_context(|| format!("cannot write `{}`", path.display()))?;
    }
    println!("fraction: {:.6}", opts.fraction);
    println!("budget: {:.6}", opts.budget);
    let mut verdicts = Vec::new();
    for engine in engines(&net, &opts)? {
        let v = run_engine(engine, &net, &opts)?;
        print!("{}", render_verdict(&v));
        verdicts.push(v);
    }
    let robust = verdicts[0].robust;
    if verdicts.iter().any(|v| v.robust != robust) {
        eprintln!("error: engines disagree:");
        for v in &verdicts {
            eprintln!("  {:?}: {}", v.engine, if v.robust { "robust" } else { "not robust" });
        }
        return Ok(ExitCode::from(2));
    }
    Ok(if robust { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_sweep(config: &Path, out: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config).with_context(|| format!("cannot read `{}`", config.display()))?;
    let config = Config::parse(&text)?;
    if config.sweeps.is_empty() {
        warn!("no sweeps configured; nothing written");
        eprintln!("warning: no sweeps configured; nothing written");
        return Ok(ExitCode::SUCCESS);
    }
    std::fs::create_dir_all(out).with_context(|| format!("cannot create `{}`", out.display()))?;
    for table in config.run()? {
        let path = table.write_csv(out)?;
        println!("{}: {} rows", path.display(), table.rows.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_incentives(file: &Path, verify: Option<usize>) -> Result<ExitCode> {
    let (raw, net) = read_network(file)?;
    let pools = raw.reward_pools(&net)?;
    let eq = equilibrium_network(&net, &pools)?;
    println!("target degree: {:.6}", pools.target_degree);
    println!("validator,{},degree", eq.service_ids().join(","));
    for (v, id) in eq.validator_ids().iter().enumerate() {
        let row: Vec<String> = eq.allocations()[v].iter().map(|w| format!("{w:.6}")).collect();
        println!("{id},{},{:.6}", row.join(","), eq.restaking_degree_at(v));
    }
    if let Some(resolution) = verify {
        let gain = best_response_gains(&eq, &pools, resolution).into_iter().fold(0.0, f64::max);
        println!("max best-response gain: {gain:.6}");
        if gain > GAIN_TOLERANCE {
            eprintln!("error: a validator gains {gain:.6} by deviating");
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { file, budget, fraction, oracle, mip, dump_mip } => {
            cmd_check(&file, CheckOptions { budget, fraction, oracle, mip }, dump_mip.as_deref())
        }
        Command::Sweep { config, out } => cmd_sweep(&config, &out),
        Command::Incentives { file, verify } => cmd_incentives(&file, verify),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
