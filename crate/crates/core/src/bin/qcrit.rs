use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcrit::cli;

#[derive(Parser)]
#[command(name = "qcrit", version, about = "Quench dynamics, spin waves and scaling collapse for long-range Ising chains")]
struct Args {
    /// Seed for every random stream (shots, Monte Carlo).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trapped-ion coupling matrix from a trap-parameter JSON.
    Ionchain { config: PathBuf },
    /// Exact quench protocol from a JSON description.
    Quench { protocol: PathBuf },
    /// Collective-spin (LMG) quench with Gaussian reference values.
    Lmg { params: PathBuf },
    /// Bogoliubov spectrum of a coupling-matrix CSV over a field grid lo:hi:step.
    Spinwave {
        matrix: PathBuf,
        #[arg(long, default_value = "0.8:1.5:0.01")]
        fields: String,
    },
    /// Optimal collapse of the CSV series in a directory.
    Collapse {
        dir: PathBuf,
        #[arg(long)]
        options: Option<PathBuf>,
    },
    /// Jackknife correlator estimate from a shot CSV.
    Stats { shots: PathBuf },
    /// Run a pipeline experiment.
    Run {
        #[arg(short, long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let seed = args.seed.unwrap_or(0);
    let result = match &args.cmd {
        Cmd::Ionchain { config } => cli::ionchain(config, &out),
        Cmd::Quench { protocol } => cli::quench(protocol, seed, &out),
        Cmd::Lmg { params } => cli::lmg(params, &out),
        Cmd::Spinwave { matrix, fields } => cli::spinwave(matrix, fields, &out),
        Cmd::Collapse { dir, options } => cli::collapse(dir, options.as_deref(), &out),
        Cmd::Stats { shots } => cli::stats(shots, &out),
        Cmd::Run { config } => cli::run(config, args.seed, args.out.as_deref()),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
