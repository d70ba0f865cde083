use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moverfv_cli::commands::{
    configure_threads, eoc_command, mesh_command, parse_levels, run_command, validate_command, THREADS_VAR,
};
use moverfv_cli::{parse_config, CliError, CliResult, RunConfiguration};

/// Finite volumes for conservation laws on moving surfaces.
#[derive(Parser)]
#[command(name = "moverfv", version)]
struct Cli {
    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the reference mesh of a configuration as VTK.
    Mesh {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configuration, writing a VTK series and report.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study over a level range, writing eoc.csv.
    Eoc {
        /// Defaults to the rotating band problem.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Inclusive level range, e.g. 2..5.
        #[arg(long, default_value = "2..5")]
        levels: String,
    },
    /// Run the invariant suite and the 1D oracle checks.
    Validate,
}

fn load(path: &Path) -> CliResult<RunConfiguration> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

fn out_dir(config: &RunConfiguration, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| config.output.dir.clone())
}

fn execute(cli: Cli) -> CliResult<()> {
    configure_threads(std::env::var(THREADS_VAR).ok().as_deref())?;
    let quiet = cli.quiet;
    match cli.command {
        Command::Mesh { config, out } => {
            let config = load(&config)?;
            let path = mesh_command(&config, &out_dir(&config, out))?;
            if !quiet {
                println!("wrote {}", path.display());
            }
        }
        Command::Run { config, out } => {
            let config = load(&config)?;
            let s = run_command(&config, &out_dir(&config, out))?;
            if !quiet {
                print!("{}", std::fs::read_to_string(&s.report_path).map_err(|e| CliError::io(&s.report_path, e))?);
                println!("wrote {} VTK files and {}", s.vtk_files.len(), s.report_path.display());
            }
        }
        Command::Eoc { config, out, levels } => {
            let levels = parse_levels(&levels)?;
            let config = match config {
                Some(p) => load(&p)?,
                None => parse_config("problem = \"tp1\"")?,
            };
            let (records, path) = eoc_command(&config, levels, &out_dir(&config, out))?;
            if !quiet {
                println!("{:>9} {:>10} {:>12} {:>6}", "elements", "h_bar", "l1_error", "eoc");
                for r in &records {
                    println!("{r}");
                }
                println!("wrote {}", path.display());
            }
        }
        Command::Validate => {
            validate_command(|c| {
                if !quiet {
                    println!("{c}");
                }
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
