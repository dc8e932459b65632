use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latwalk::cli::{self, Command, Method, RunConfig};

/// Green's functions of finitely perturbed random walks on Z.
#[derive(Parser)]
#[command(name = "latwalk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time-domain Volterra solution (backward and forward routes).
    Solve(CommonArgs),
    /// Laplace-domain solution with numerical inversion.
    Laplace(CommonArgs),
    /// Truncated-generator ground truth.
    Oracle(CommonArgs),
    /// All methods side by side with a max-discrepancy summary.
    Compare(CommonArgs),
    /// Semigroup convergence study over truncation radii.
    Convergence(CommonArgs),
    /// Scaled modified Bessel diagnostic table.
    Bessel(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Walk specification file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for the CSV table and JSON summary.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Restrict `compare` to a single method.
    #[arg(long, value_enum)]
    method: Option<Method>,

    /// Override the time-grid step.
    #[arg(long)]
    h: Option<f64>,

    /// Override the time horizon.
    #[arg(long)]
    t_max: Option<f64>,

    /// Override the truncation window radius.
    #[arg(long)]
    window: Option<i64>,

    /// Override the Talbot node count.
    #[arg(long)]
    talbot_m: Option<usize>,
}

impl CommonArgs {
    fn config(&self) -> latwalk::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Some(method) = self.method {
            config.method = method;
        }
        if let Some(h) = self.h {
            config.h = h;
        }
        if let Some(t_max) = self.t_max {
            config.t_max = t_max;
        }
        if let Some(window) = self.window {
            config.window = window;
        }
        if let Some(m) = self.talbot_m {
            config.talbot_m = m;
        }
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Laplace(a) => (Command::Laplace, a),
        Cmd::Oracle(a) => (Command::Oracle, a),
        Cmd::Compare(a) => (Command::Compare, a),
        Cmd::Convergence(a) => (Command::Convergence, a),
        Cmd::Bessel(a) => (Command::Bessel, a),
    };
    let config = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match cli::run(command, &config, &args.out) {
        Ok(summary) => {
            println!(
                "{}: {} rows -> {}",
                summary.command, summary.rows, summary.csv
            );
            if let Some(disc) = summary.max_discrepancy {
                let verdict = if summary.pass == Some(true) { "pass" } else { "FAIL" };
                println!("max discrepancy {disc:.3e} ({verdict})");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
