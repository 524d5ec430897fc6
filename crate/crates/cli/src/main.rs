use clap::{Parser, Subcommand};
use pentaband_cli::{parse_config, plotdata, resolve, run, CliError, Command};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pentaband", version, about = "Spectral diagnostics for unitary pentadiagonal band matrices")]
struct Cli {
    #[command(subcommand)]
    action: Action,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Action {
    /// Run one computation from a JSON config.
    #[command(flatten)]
    Run(RunAction),
    /// Turn the reports in a run directory into plot tables.
    Plotdata { dir: PathBuf },
}

#[derive(Subcommand)]
enum RunAction {
    /// Determinant, stencil, unitarity and realification checks.
    Verify(RunArgs),
    /// Lyapunov exponent profile over a uniform grid.
    Lyapunov(RunArgs),
    /// Band functions and band arcs of a periodic model.
    Bands(RunArgs),
    /// Half-line discriminant and point eigenvalues.
    Halfline(RunArgs),
    /// Dense spectrum of a truncated window.
    Truncspec(RunArgs),
    /// Eigenvector decay rates of a truncated window.
    Localize(RunArgs),
    /// Characteristic-function factorization of the transfer angles.
    Independence(RunArgs),
    /// Growth ratios along rational approximants.
    Gordon(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunAction {
    fn split(self) -> (Command, RunArgs) {
        match self {
            RunAction::Verify(a) => (Command::Verify, a),
            RunAction::Lyapunov(a) => (Command::Lyapunov, a),
            RunAction::Bands(a) => (Command::Bands, a),
            RunAction::Halfline(a) => (Command::Halfline, a),
            RunAction::Truncspec(a) => (Command::Truncspec, a),
            RunAction::Localize(a) => (Command::Localize, a),
            RunAction::Independence(a) => (Command::Independence, a),
            RunAction::Gordon(a) => (Command::Gordon, a),
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    // dense eigensolves stay sequential so results do not depend on the pool
    faer::set_global_parallelism(faer::Par::Seq);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    configure_threads(cli.threads)?;
    match cli.action {
        Action::Plotdata { dir } => {
            for path in plotdata(&dir)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Action::Run(action) => {
            let (command, args) = action.split();
            let text = std::fs::read_to_string(&args.config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
            let config = parse_config(&text)?;
            let resolved = resolve(command, config, args.out, args.seed)?;
            let outcome = run(&resolved)?;
            for name in &outcome.outputs {
                println!("{}", resolved.out.join(name).display());
            }
            Ok(outcome.passed)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed; see verify.json");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
