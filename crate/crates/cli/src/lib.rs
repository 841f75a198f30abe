//! Command-line front end: configuration, experiment orchestration and CSV
//! output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{load_config, parse_grid, ConfigError, ConstellationName, ExperimentConfig, Method, MetricName, PolicyKind};

#[derive(Debug, Parser)]
#[command(name = "dstc", version, about = "Two-relay distributed space-time coding simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Path loss and path gain of the four links.
    Pathloss(RunArgs),
    /// Outage probability against the SNR threshold.
    Outage(RunArgs),
    /// Uncoded bit error rate against the relay-to-destination SNR.
    Ber(RunArgs),
    /// Best on-off threshold for each (threshold, relay SNR) cell.
    Optimize(RunArgs),
    /// One metric of one policy along a chosen parameter.
    Sweep(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pathloss(_) => "pathloss",
            Command::Outage(_) => "outage",
            Command::Ber(_) => "ber",
            Command::Optimize(_) => "optimize",
            Command::Sweep(_) => "sweep",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Pathloss(a)
            | Command::Outage(a)
            | Command::Ber(a)
            | Command::Optimize(a)
            | Command::Sweep(a) => a,
        }
    }
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML config, or a CSV previously written by this tool.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed of the random number streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials per point.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Monte-Carlo or analytic high-SNR outage.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Relay policy; repeat or separate with commas to compare several.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub policy: Vec<PolicyKind>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Source-to-relay SNR in dB, both relays.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_sr_db: Option<f64>,
    /// Relay-to-destination SNR in dB, both relays.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_rd_db: Option<f64>,
    /// Outage threshold on the end-to-end SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_t_db: Option<f64>,
    /// On-off or detect-and-forward threshold in dB on the fading gain.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold_db: Option<f64>,
    /// Piecewise-linear ramp start, in dB on the fading gain.
    #[arg(long, allow_hyphen_values = true)]
    pub tau1_db: Option<f64>,
    /// Piecewise-linear ramp end, in dB on the fading gain.
    #[arg(long, allow_hyphen_values = true)]
    pub tau2_db: Option<f64>,
    /// Hybrid switch to detect-and-forward, in dB on the fading gain.
    #[arg(long, allow_hyphen_values = true)]
    pub t2_db: Option<f64>,
    /// x-axis values: `start:stop:step` or `a,b,c`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Sweep variable: gamma_t_db, snr_rd_db or snr_sr_db.
    #[arg(long)]
    pub variable: Option<String>,
    /// Metric reported by `sweep`.
    #[arg(long, value_enum)]
    pub metric: Option<MetricName>,
    /// Symbol alphabet.
    #[arg(long, value_enum)]
    pub constellation: Option<ConstellationName>,
    /// Pilot estimation error with variance 1/SNR on every link.
    #[arg(long)]
    pub estimation_error: bool,
}

/// Config file merged with command-line overrides.
pub fn merged_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.trials.is_some() {
        cfg.trials = args.trials;
    }
    if args.method.is_some() {
        cfg.method = args.method;
    }
    if !args.policy.is_empty() {
        cfg.policies = Some(args.policy.clone());
    }
    if args.constellation.is_some() {
        cfg.constellation = args.constellation;
    }
    if args.estimation_error {
        cfg.estimation_error = Some(true);
    }
    let link = cfg.link.get_or_insert_with(Default::default);
    if let Some(v) = args.snr_sr_db {
        link.snr_sr_db = Some([v, v]);
    }
    if let Some(v) = args.snr_rd_db {
        link.snr_rd_db = Some([v, v]);
    }
    if args.gamma_t_db.is_some() {
        link.gamma_t_db = args.gamma_t_db;
    }
    let overrides = [args.threshold_db, args.tau1_db, args.tau2_db, args.t2_db];
    if overrides.iter().any(Option::is_some) {
        let p = cfg.policy.get_or_insert_with(Default::default);
        for (slot, v) in [&mut p.threshold_db, &mut p.tau1_db, &mut p.tau2_db, &mut p.t2_db]
            .into_iter()
            .zip(overrides)
        {
            if v.is_some() {
                *slot = v;
            }
        }
    }
    if args.grid.is_some() || args.variable.is_some() || args.metric.is_some() {
        let g = cfg.grid.get_or_insert_with(Default::default);
        if let Some(spec) = &args.grid {
            g.values = Some(parse_grid(spec)?);
        }
        if args.variable.is_some() {
            g.variable = args.variable.clone();
        }
        if args.metric.is_some() {
            g.metric = args.metric;
        }
    }
    Ok(cfg)
}

/// Runs one subcommand and writes its CSV.
pub fn run(cli: &Cli) -> Result<()> {
    let args = cli.command.args();
    let cfg = merged_config(args)?;
    let body = || match cli.command {
        Command::Pathloss(_) => {
            // pathloss uses only its own section
            let only = ExperimentConfig {
                pathloss: cfg.pathloss.clone(),
                ..Default::default()
            };
            commands::pathloss(only)
        }
        Command::Outage(_) => commands::outage(cfg.clone()),
        Command::Ber(_) => commands::ber(cfg.clone()),
        Command::Optimize(_) => commands::optimize(cfg.clone()),
        Command::Sweep(_) => commands::sweep_cmd(cfg.clone()),
    };
    let (resolved, table) = match args.workers {
        Some(n) => dstc_core::sim::with_workers(n, body)??,
        None => body()?,
    };
    match &args.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            output::write_csv(&mut f, cli.command.name(), &resolved, &table)?;
            f.flush()?;
        }
        None => output::write_csv(std::io::stdout().lock(), cli.command.name(), &resolved, &table)?,
    }
    Ok(())
}

/// 2 for configuration errors, 3 when quadrature does not converge, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<dstc_core::Error>() {
            return match e {
                dstc_core::Error::NonConvergence { .. } => 3,
                dstc_core::Error::Config(_) | dstc_core::Error::Domain(_) => 2,
            };
        }
    }
    1
}
