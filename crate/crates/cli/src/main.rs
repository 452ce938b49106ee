use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lf_core::{enumerate_islands, run_pipeline, validate_config, write_islands_csv, Error, RunConfig};

#[derive(Parser)]
#[command(name = "lf-engine", version, about = "GN-model link function and NLI power for Raman-amplified WDM links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve profiles, fit, integrate and write the report files.
    Run(RunArgs),
    /// Print every configuration problem, one per line.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the islands of one CUT as CSV to stdout.
    Islands {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cut: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to `output.dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check every span integral against brute-force quadrature.
    #[arg(long)]
    oracle: bool,
    /// Closed-form path for Raman-free links.
    #[arg(long)]
    no_raman: bool,
    /// RK4 step in meters.
    #[arg(long)]
    dz: Option<f64>,
    /// Fit degree.
    #[arg(long)]
    n_psi: Option<usize>,
    /// Weight exponent.
    #[arg(long)]
    m_w: Option<f64>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    threads: Option<usize>,
}

/// Process exit status by error category.
fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) => 2,
        Error::Io(_) | Error::Csv(_) => 3,
        Error::Shooting { .. }
        | Error::StepSize { .. }
        | Error::FitDegenerate { .. }
        | Error::OracleResolution { .. }
        | Error::Quadrature { .. } => 4,
        Error::Domain(_) | Error::Contract(_) | Error::FrequencyLookup { .. } => 5,
        Error::Context { .. } => 1,
    }
}

fn load(path: &Path) -> Result<RunConfig, Error> {
    RunConfig::load(path)
}

fn run(args: RunArgs) -> Result<(), Error> {
    let mut cfg = load(&args.config)?;
    if let Some(dz) = args.dz {
        cfg.solver.dz_m = dz;
    }
    if let Some(n) = args.n_psi {
        cfg.fit.n_psi = n;
    }
    if let Some(m) = args.m_w {
        cfg.fit.m_w = m;
    }
    if let Some(t) = args.threads {
        cfg.mode.threads = t;
    }
    cfg.mode.oracle |= args.oracle;
    cfg.mode.no_raman |= args.no_raman;
    let out = match (args.out, cfg.output.dir.as_deref()) {
        (Some(dir), _) => dir,
        (None, Some(dir)) => PathBuf::from(dir),
        (None, None) => {
            return Err(Error::Config(vec![
                "no output directory: pass --out or set output.dir".into(),
            ]))
        }
    };
    let outcome = run_pipeline(&cfg, &out)?;
    print!("{}", outcome.report.summary());
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn validate(config: &Path) -> Result<bool, Error> {
    let cfg = load(config)?;
    let problems = validate_config(&cfg);
    for p in &problems {
        println!("{p}");
    }
    if problems.is_empty() {
        println!("ok");
    }
    Ok(problems.is_empty())
}

fn islands(config: &Path, cut: usize) -> Result<(), Error> {
    let cfg = load(config)?;
    let grid = cfg.build_grid()?;
    let list = enumerate_islands(&grid, cut)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    write_islands_csv(&list, &mut lock)?;
    lock.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => match validate(&config) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
        Command::Islands { config, cut } => islands(&config, cut),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
