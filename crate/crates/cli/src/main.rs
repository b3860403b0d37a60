use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hlab::harness::{emit, run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hlab", version, about = "BBGKY / Gross–Pitaevskii hierarchy laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve an N-body wavefunction and write its marginals.
    SimulateNbody(Overrides),
    /// Evolve the truncated GP hierarchy from a random mixture.
    SimulateGp(Overrides),
    /// Evolve the truncated N-BBGKY hierarchy from factorized data.
    SimulateBbgky(Overrides),
    /// N-body marginals against the GP hierarchy along the N ladder.
    Convergence(Overrides),
    /// Positivity, admissibility, energy functionals and the window chain.
    Conservation(Overrides),
    /// Main collision term against the contact term along the N ladder.
    CollisionLimit(Overrides),
    /// Duhamel iterate norms and growth exponents.
    DuhamelCheck(Overrides),
    /// Picard fixed point of the BBGKY Duhamel equation.
    Picard(Overrides),
    /// Print the default configuration as TOML.
    DefaultConfig,
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// `gaussian`, `bump`, `delta`, `zero`, or a field file.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    profile_width: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    big_n: Option<u64>,
    /// Comma-separated particle numbers.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<u64>>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    k_marginals: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    atoms: Option<usize>,
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl Overrides {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        set!(self.output => cfg.output);
        set!(self.seed => cfg.seed);
        set!(self.n => cfg.grid.n);
        set!(self.dim => cfg.grid.dim);
        set!(self.profile => cfg.potential.profile);
        set!(self.profile_width => cfg.potential.width);
        set!(self.beta => cfg.potential.beta);
        set!(self.big_n => cfg.potential.big_n);
        set!(self.ladder => cfg.ladder.big_n);
        set!(self.k_max => cfg.ladder.k_max);
        set!(self.k_marginals => cfg.k_marginals);
        set!(self.dt => cfg.time.dt);
        set!(self.t_final => cfg.time.t_final);
        set!(self.samples => cfg.time.samples);
        set!(self.m_max => cfg.conservation.m_max);
        set!(self.windows => cfg.conservation.windows);
        set!(self.window => cfg.conservation.window);
        set!(self.atoms => cfg.conservation.atoms);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (name, overrides) = match cli.command {
        Command::SimulateNbody(o) => ("simulate-nbody", o),
        Command::SimulateGp(o) => ("simulate-gp", o),
        Command::SimulateBbgky(o) => ("simulate-bbgky", o),
        Command::Convergence(o) => ("convergence", o),
        Command::Conservation(o) => ("conservation", o),
        Command::CollisionLimit(o) => ("collision-limit", o),
        Command::DuhamelCheck(o) => ("duhamel-check", o),
        Command::Picard(o) => ("picard", o),
        Command::DefaultConfig => {
            print!("{}", ExperimentConfig::default().to_toml_string()?);
            return Ok(());
        }
    };
    let cfg = overrides.resolve()?;
    let report = run(name, &cfg)?;
    let (csv, manifest) = emit(&report, &cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} rows -> {}", report.rows.len(), csv.display());
    println!("manifest -> {}", manifest.display());
    Ok(())
}
