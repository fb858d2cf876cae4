use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use leeyang::experiment::{cmd_fss, cmd_scan, cmd_verify, fit_report, ExperimentConfig, Format, RunSummary, VerifyOptions};
use leeyang::Error;

#[derive(Parser)]
#[command(name = "leeyang", version, about = "Fidelity zeros of non-Hermitian XYZ and Z3 clock chains")]
struct Cli {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true, env = "LEEYANG_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Structured,
    Both,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver seed, overriding `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Circle or grid scan (or a full FSS run when the config says so).
    Scan(RunArgs),
    /// Finite-size scaling over `scan.L_list`.
    Fss(RunArgs),
    /// Cross-oracle self test.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoZeros | Error::InsufficientData(_) => 4,
        e if e.is_validation() => 2,
        _ => 3,
    }
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), Error> {
    let mut config = ExperimentConfig::from_path(&args.config).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", args.config.display())),
        e => e,
    })?;
    if let Some(seed) = args.seed {
        config.solver.seed = seed;
    }
    if let Some(f) = args.format {
        config.output.formats = match f {
            FormatArg::Csv => vec![Format::Csv],
            FormatArg::Structured => vec![Format::Structured],
            FormatArg::Both => vec![Format::Csv, Format::Structured],
        };
    }
    if let Some(out) = &args.out {
        config.output.directory = out.display().to_string();
    }
    config.validate()?;
    let dir = PathBuf::from(&config.output.directory);
    Ok((config, dir))
}

fn run(command: Command) -> Result<bool, Error> {
    match command {
        Command::Scan(args) => {
            let (config, dir) = load(&args)?;
            let out = cmd_scan(&config, &dir)?;
            print_summary(&out.summary);
            println!("wrote {} files to {}", out.files.len(), dir.display());
            Ok(true)
        }
        Command::Fss(args) => {
            let (config, dir) = load(&args)?;
            let out = cmd_fss(&config, &dir)?;
            print_summary(&out.summary);
            println!("wrote {} files to {}", out.files.len(), dir.display());
            Ok(true)
        }
        Command::Verify { seed } => {
            let mut options = VerifyOptions::default();
            if let Some(s) = seed {
                options.seed = s;
            }
            let report = cmd_verify(&options);
            print!("{}", report.matrix());
            Ok(report.all_passed())
        }
    }
}

fn print_summary(summary: &RunSummary) {
    match summary {
        RunSummary::Circle(results) => {
            for r in results {
                match &r.edge {
                    Some(e) => println!(
                        "g = {}: {} zeros, uniformity ratio {:.3}, edge {}",
                        r.scan.g, e.zero_count, e.uniformity_ratio, e.edge_detected
                    ),
                    None => println!("g = {}: {} zeros, too few for an edge report", r.scan.g, r.zeros.len()),
                }
            }
        }
        RunSummary::Grid(g) => {
            println!("{} zeros", g.plane.zeros.len());
            if let Some(f) = &g.h_l {
                println!("h_L = {:.10} {:+.10}i ({:?})", f.h.re, f.h.im, f.method);
            }
        }
        RunSummary::Fss(f) => print!("{}", fit_report(f)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
