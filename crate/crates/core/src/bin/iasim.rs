use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iasim::cli::{self, RunOverrides};

#[derive(Parser)]
#[command(name = "iasim", version = cli::VERSION, about = "Downlink interference alignment system simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo campaign and write CSV results plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long)]
        transmissions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// `NAME` or `NAME:kappa`; repeatable. Replaces the configured list.
        #[arg(long = "scheme")]
        schemes: Vec<String>,
        /// 100 scenarios × 100 transmissions (explicit counts still win).
        #[arg(long)]
        full_scale: bool,
    },
    /// Per-bin SE deltas between schemes of one or more se_vs_sinr.csv files.
    Compare {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Reference scheme when a single file is given.
        #[arg(long)]
        reference: Option<String>,
    },
}

fn main() -> ExitCode {
    match dispatch(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iasim: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(args: Args) -> iasim::Result<()> {
    match args.command {
        Command::Run { config, out, scenarios, transmissions, seed, schemes, full_scale } => {
            let mut plan = cli::parse_config(&config)?;
            RunOverrides { scenarios, transmissions, seed, schemes, full_scale }.apply(&mut plan)?;
            let manifest = cli::run(&plan, &out)?;
            for o in &manifest.outputs {
                println!("{}  {}", o.sha256, out.join(&o.path).display());
            }
            println!("wrote {} in {:.1} s", out.join(cli::MANIFEST_FILE).display(), manifest.wall_clock_s);
        }
        Command::Compare { files, reference } => {
            let tables = files.iter().map(|f| cli::read_se_csv(f)).collect::<iasim::Result<Vec<_>>>()?;
            let deltas = cli::compare(&tables, reference.as_deref())?;
            print!("{}", String::from_utf8_lossy(&cli::deltas_csv(&deltas)?));
        }
    }
    Ok(())
}
