use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ubsim::diagnostics;
use ubsim::runner::{self, MethodName, OutputFormat, RunConfig};
use ubsim::{tables, Error};

#[derive(Parser)]
#[command(name = "ubsim", version, about = "Unbiased Monte Carlo for path-dependent SDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sims: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// unbiased, unbiased_constvol or euler
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print integrability and regularity diagnostics for a config.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run one of the reference experiments.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        table: u8,
        #[arg(long, default_value_t = 1_000_000)]
        sims: u64,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            config,
            sims,
            seed,
            method,
            out,
            format,
        } => {
            let mut cfg = RunConfig::from_path(&config)?;
            if let Some(n) = sims {
                cfg.n_sims = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = method {
                cfg.method = MethodName::parse(&m)?;
            }
            if let Some(p) = out {
                cfg.output_path = Some(p);
            }
            if let Some(f) = format {
                cfg.output_format = match f {
                    Format::Json => OutputFormat::Json,
                    Format::Csv => OutputFormat::Csv,
                };
            }
            let result = runner::run(&cfg)?;
            match &cfg.output_path {
                Some(p) => {
                    result.write_to(p, cfg.output_format)?;
                    eprintln!("wrote {}", p.display());
                }
                None => print!("{}", result.render(cfg.output_format)?),
            }
            Ok(())
        }
        Command::Diagnose { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let problem = cfg.problem()?;
            let const_vol = cfg.method == MethodName::UnbiasedConstvol || problem.model.declares_constant_vol();
            // advisory only: numerical trouble is printed, never fatal
            match diagnostics::diagnose(&problem.model, &problem.weight, &problem.dist, const_vol) {
                Ok(d) => println!("{}", serde_json::to_string_pretty(&d).expect("report serialises")),
                Err(e) => println!("{{\"error\": {:?}}}", e.to_string()),
            }
            Ok(())
        }
        Command::Reproduce { table, sims, seed } => {
            let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
            let report = tables::reproduce_table(table, sims, seed, workers)?;
            print!("{report}");
            Ok(())
        }
    }
}
