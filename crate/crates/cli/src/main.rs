use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairprobe_cli::{cmd_measure, cmd_run, exit_code, version_text};

#[derive(Parser)]
#[command(
    name = "fairprobe",
    about = "Measure and compare fairness estimators for regression models",
    disable_version_flag = true
)]
struct Cli {
    /// Print estimator versions and exit
    #[arg(long)]
    version: bool,
    /// Override the master seed of the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write the report
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one prediction file
    Measure {
        /// CSV with header row_index,prediction
        #[arg(long)]
        predictions: PathBuf,
        /// e.g. insurance:data/insurance.csv or synthetic:n=2000,dependence=1,seed=7
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value = "P1,P2,P3,P4,C1,C2")]
        methods: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        print!("{}", version_text());
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        Some(Command::Run { config, out }) => cmd_run(&config, &out, cli.seed).map(|written| {
            for p in written {
                println!("{}", p.display());
            }
        }),
        Some(Command::Measure {
            predictions,
            dataset,
            methods,
        }) => cmd_measure(
            &predictions,
            &dataset,
            &methods,
            &mut std::io::stdout().lock(),
        ),
        None => {
            eprintln!("error: no command given; see --help");
            return ExitCode::from(2);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
