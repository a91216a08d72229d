use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use relay_robust::design::Method;
use relay_robust::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "relay-robust",
    version,
    about = "Outage-constrained relay beamforming experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every method on every (gamma, channel) and append to design.csv.
    Design(Opts),
    /// Satisfaction rates and histograms on commonly feasible channels.
    Validate(Opts),
    /// Feasibility, rank and power tables.
    Tables(Opts),
    /// Re-evaluate nominal designs under mismatched statistics.
    Mismatch(MismatchOpts),
    /// Moment versus Bernstein dominance sweep.
    Tightness(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of NR,M4,M2,B2.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(
        long = "gamma-db",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    gamma_db: Option<Vec<f64>>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    perts: Option<usize>,
}

#[derive(Args)]
struct MismatchOpts {
    #[command(flatten)]
    base: Opts,
    /// Actual relay and destination noise power.
    #[arg(long)]
    actual_sigma2: Option<f64>,
    #[arg(long)]
    actual_eps2: Option<f64>,
    #[arg(long)]
    actual_eta2: Option<f64>,
}

impl Opts {
    fn config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.out {
            cfg.out = v;
        }
        if let Some(v) = self.methods {
            cfg.methods = v;
        }
        if let Some(v) = self.gamma_db {
            cfg.gamma_db = v;
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.eps2 {
            cfg.eps2 = v;
        }
        if let Some(v) = self.eta2 {
            cfg.eta2 = v;
        }
        if let Some(v) = self.channels {
            cfg.channels = v;
        }
        if let Some(v) = self.perts {
            cfg.perts = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Design(o) => {
            let cfg = o.config()?;
            let rows = harness::cmd_design(&cfg)?;
            let ok = rows.iter().filter(|r| r.feasible()).count();
            println!(
                "{} rows ({ok} feasible) in {}",
                rows.len(),
                cfg.out.join("design.csv").display()
            );
        }
        Command::Validate(o) => {
            let cfg = o.config()?;
            let (_, summary) = harness::cmd_validate(&cfg)?;
            for s in summary {
                println!(
                    "{} gamma={}dB channels={} mean={:.4} min={:.4} outage_events={}",
                    s.method,
                    s.gamma_db,
                    s.channels,
                    s.mean_satisfaction,
                    s.min_satisfaction,
                    s.outage_events
                );
            }
        }
        Command::Tables(o) => {
            let cfg = o.config()?;
            let (tables, powers) = harness::cmd_tables(&cfg)?;
            for (t, p) in tables.iter().zip(&powers) {
                println!(
                    "{} gamma={}dB feasibility={:.3} rank1={:.3} mean_power={:.4}",
                    t.method, t.gamma_db, t.feasibility, t.rank1, p.mean_power
                );
            }
        }
        Command::Mismatch(o) => {
            let mut cfg = o.base.config()?;
            cfg.mismatch.sigma2 = o.actual_sigma2.or(cfg.mismatch.sigma2);
            cfg.mismatch.eps2 = o.actual_eps2.or(cfg.mismatch.eps2);
            cfg.mismatch.eta2 = o.actual_eta2.or(cfg.mismatch.eta2);
            cfg.validate()?;
            let (_, summary) = harness::cmd_mismatch(&cfg)?;
            for s in summary {
                println!(
                    "{} {} gamma={}dB channels={} mean={:.4} outage_events={}",
                    s.scenario,
                    s.method,
                    s.gamma_db,
                    s.channels,
                    s.mean_satisfaction,
                    s.outage_events
                );
            }
        }
        Command::Tightness(o) => {
            let cfg = o.config()?;
            for r in harness::cmd_tightness(&cfg)? {
                println!(
                    "rho={:.3e} in_window={} violations={}/{}",
                    r.rho, r.in_window, r.violations, r.instances
                );
            }
        }
    }
    Ok(())
}
