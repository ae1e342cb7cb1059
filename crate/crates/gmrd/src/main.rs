use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gmrd::commands::{self, CliError, Options};

#[derive(Parser)]
#[command(name = "gmrd", version, about = "Information-rate / MMSE trade-off for Gauss-Markov sources")]
struct Cli {
    /// Worker threads for sweeps and Monte Carlo trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Problem document (JSON).
    config: PathBuf,
    /// Output CSV path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Sensor gain C, row-major and comma-separated; a single value means that multiple of I.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gain_override: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the distortion grid and write R(D) with the designed gains.
    RdCurve {
        #[command(flatten)]
        common: Common,
        /// Also write a gnuplot script next to the CSV.
        #[arg(long)]
        gnuplot_stub: bool,
    },
    /// Design a sensor at one budget and check it by Riccati and Monte Carlo.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Distortion budget (overrides distortion.value).
        #[arg(long = "D", allow_negative_numbers = true)]
        d: Option<f64>,
        /// Directory for per-trial path CSVs.
        #[arg(long)]
        dump_paths: Option<PathBuf>,
    },
    /// Run the zero-delay quantize-and-decode experiments.
    Zdsc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gnuplot_stub: bool,
    },
    /// Solve the stationary Riccati equation for --gain-override.
    Care {
        #[command(flatten)]
        common: Common,
    },
}

fn options(common: &Common) -> Options {
    Options {
        out: common.out.clone(),
        seed: common.seed,
        gain_override: common.gain_override.clone(),
        ..Options::default()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(3);
        }
    }

    let mut stdout = std::io::stdout().lock();
    let result: Result<bool, CliError> = match &cli.command {
        Command::RdCurve { common, gnuplot_stub } => {
            let opts = Options { gnuplot_stub: *gnuplot_stub, ..options(common) };
            commands::rd_curve(&common.config, &opts, &mut stdout)
        }
        Command::Validate { common, d, dump_paths } => {
            let opts = Options { distortion: *d, dump_paths: dump_paths.clone(), ..options(common) };
            commands::validate(&common.config, &opts, &mut stdout)
        }
        Command::Zdsc { common, gnuplot_stub } => {
            let opts = Options { gnuplot_stub: *gnuplot_stub, ..options(common) };
            commands::zdsc(&common.config, &opts, &mut stdout)
        }
        Command::Care { common } => commands::care(&common.config, &options(common), &mut stdout),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
