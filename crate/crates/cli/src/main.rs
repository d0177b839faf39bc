use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stochdelay_cli::{run, CliError, Config, Scenario};

#[derive(Parser)]
#[command(
    name = "stochdelay",
    version,
    about = "Simulate and verify stochastic delay equations"
)]
struct Cli {
    /// Print the scenario registry and exit.
    #[arg(long)]
    list_scenarios: bool,

    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registry scenario to use when no config file is given.
    #[arg(long, default_value = "transport")]
    scenario: String,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the number of refinement levels of `verify`.
    #[arg(long)]
    levels: Option<usize>,
    /// Worker threads; affects speed only, never results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an ensemble and write moments and sample paths.
    Simulate(Common),
    /// Refinement study of the weak / mild / strong residuals plus oracle checks.
    Verify(Common),
    /// Haar-depth sweep of the gamma-norm of the stochastic convolution kernel.
    GammaNorm(Common),
    /// Covariance and gamma-norm oracle suite.
    Oracle(Common),
}

fn load(c: &Common) -> Result<Config, CliError> {
    let mut cfg = match &c.config {
        Some(path) => Config::from_path(path)?,
        None => Config::default_for(Scenario::parse(&c.scenario)?),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(levels) = c.levels {
        cfg.verify.levels = levels;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Cmd) -> Result<u8, CliError> {
    type Command = fn(&Config, &std::path::Path) -> Result<u8, CliError>;
    let (c, f): (Common, Command) = match cmd {
        Cmd::Simulate(c) => (c, run::simulate),
        Cmd::Verify(c) => (c, run::verify),
        Cmd::GammaNorm(c) => (c, run::gamma_norm),
        Cmd::Oracle(c) => (c, run::oracle),
    };
    let cfg = load(&c)?;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    f(&cfg, &c.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_scenarios {
        for s in Scenario::ALL {
            println!("{:<12} {}", s.name(), s.description());
        }
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("no subcommand given; see --help");
        return ExitCode::from(2);
    };
    match execute(cmd) {
        Ok(code) => {
            if code != 0 {
                eprintln!("checks failed (exit code {code}); see the verdict file");
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
