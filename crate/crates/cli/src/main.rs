use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use infodesign::SocialUtility;
use infodesign_cli::{
    frontier_points, load_instance, run_pipeline, thread_override, write_frontier_csv, CliError,
    Depth, GridOverrides,
};

/// Social planner workflow: welfare-optimal utility profiles and the
/// information structures that implement them.
#[derive(Debug, Parser)]
#[command(name = "infodesign", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stage 1: the welfare-maximizing implementable profile.
    Plan(Common),
    /// Stages 1 and 2: the profile and an information structure inducing it.
    Design(Common),
    /// Stages 1 and 2, then check the design against a grid-searched principal.
    Verify(Common),
    /// CSV samples of every implementable action's frontier.
    Frontier(Common),
    /// Everything: plan, design, verification and frontier samples.
    Run(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Instance file (JSON).
    #[arg(short, long, value_name = "FILE")]
    input: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Welfare function, overriding the file: usf, nash_product, esf, approx_fairness.
    #[arg(long, value_name = "KIND")]
    welfare: Option<SocialUtility>,
    /// Contract grid step for verification.
    #[arg(long, value_name = "STEP")]
    grid_step: Option<f64>,
    /// Largest transfer on the contract grid.
    #[arg(long, value_name = "T")]
    transfer_max: Option<f64>,
    /// Frontier samples per action.
    #[arg(long, value_name = "N", default_value_t = 101)]
    samples: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = thread_override(std::env::var("INFODESIGN_THREADS").ok().as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
    }
    let (depth, args) = match cli.command {
        Command::Plan(a) => (Depth::Plan, a),
        Command::Design(a) => (Depth::Design, a),
        Command::Verify(a) => (Depth::Verify, a),
        Command::Run(a) => (Depth::Everything, a),
        Command::Frontier(a) => return frontier(a),
    };
    let loaded = load_instance(&args.input)?;
    let kind = args.welfare.or(loaded.welfare).ok_or_else(|| {
        CliError::Usage(
            "no welfare function: set \"welfare\" in the instance file or pass --welfare".into(),
        )
    })?;
    let overrides = GridOverrides {
        step: args.grid_step,
        transfer_max: args.transfer_max,
    };
    let report = run_pipeline(
        &loaded.instance,
        &loaded.attitude,
        kind,
        overrides,
        depth,
        args.samples,
    )?;
    emit(args.output.as_deref(), |w| {
        writeln!(w, "{}", report.to_json())
    })?;
    report.check_verified()
}

fn frontier(args: Common) -> Result<(), CliError> {
    let loaded = load_instance(&args.input)?;
    let points = frontier_points(&loaded.instance, &loaded.attitude, args.samples)?;
    emit(args.output.as_deref(), |w| write_frontier_csv(w, &points))
}

fn emit(
    path: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
