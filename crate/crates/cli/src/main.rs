use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bicrit_core::harness::{read_csv, run_experiment, slope_fit, write_csv, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bicrit", version, about = "Experiments on online learning with primary and secondary losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algorithm x adversary over a list of seeds and write one CSV row per seed.
    Run(RunArgs),
    /// Fit the growth exponent of mean max(Reg1, Reg2_c) against T.
    Slope {
        #[arg(long = "in", value_name = "CSV")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    /// `a..b`, `a..=b` or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    /// `none`, `every G` or a list of rounds.
    #[arg(long)]
    reactivation: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, String> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        let overrides = [
            ("algorithm", &self.algorithm),
            ("adversary", &self.adversary),
            ("T", &self.horizon),
            ("alpha", &self.alpha),
            ("delta", &self.delta),
            ("c", &self.c),
            ("K", &self.k),
            ("eta", &self.eta),
            ("seeds", &self.seeds),
            ("reactivation", &self.reactivation),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config.set(key, v).map_err(|e| format!("--{key}: {e}"))?;
            }
        }
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

fn run(args: &RunArgs) -> Result<bool, String> {
    let config = args.config()?;
    let rows = run_experiment(&config).map_err(|e| e.to_string())?;
    let sink: Box<dyn Write> = match &config.out {
        Some(path) => Box::new(File::create(path).map_err(|e| format!("{}: {e}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    write_csv(&rows, BufWriter::new(sink)).map_err(|e| e.to_string())?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs did not finish with status ok", rows.len());
    }
    Ok(failed == 0)
}

fn slope(input: &PathBuf) -> Result<bool, String> {
    let file = File::open(input).map_err(|e| format!("{}: {e}", input.display()))?;
    let rows = read_csv(file).map_err(|e| e.to_string())?;
    let fit = slope_fit(&rows).map_err(|e| e.to_string())?;
    println!("exponent,residual");
    println!("{},{}", fit.exponent, fit.residual);
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Slope { input } => slope(input),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("bicrit: {msg}");
            ExitCode::from(2)
        }
    }
}
