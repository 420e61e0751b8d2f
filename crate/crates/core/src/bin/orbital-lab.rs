use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orbital_lab::experiment::{run, ExperimentConfig, Scenario, Status};
use orbital_lab::PrefixDescriptor;

/// Batch runner for orbital-measure experiments.
#[derive(Parser, Debug)]
#[command(name = "orbital-lab", version)]
struct Cli {
    #[command(subcommand)]
    scenario: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace identity, Frobenius and tau inequality audits.
    IdentityAudit(Overrides),
    /// Scaled spectral statistics and a boundedness verdict.
    RadialSurvey(Overrides),
    /// Pairwise distances between orbital pushforwards.
    OrbitalConvergence(Overrides),
    /// Infimum of orbital means over a test family.
    RecurrenceProbe(Overrides),
}

#[derive(Args, Debug)]
struct Overrides {
    /// TOML config file. Without one, a unit-variance Gaussian Hermitian ensemble is used.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides master_seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Result CSV path; plot data and metadata are written next to it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Comma-separated dimensions, e.g. 4,8,16.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    n_schedule: Option<Vec<usize>>,
}

fn build_config(scenario: Scenario, o: Overrides) -> orbital_lab::Result<ExperimentConfig> {
    let mut config = match &o.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(scenario, PrefixDescriptor::GaussianHermitian { sigma: 1.0, seed: None }),
    };
    if let Some(s) = config.scenario.filter(|&s| s != scenario) {
        eprintln!("note: config names scenario {}, running {}", s.as_str(), scenario.as_str());
    }
    config.scenario = Some(scenario);
    if let Some(seed) = o.seed {
        config.master_seed = seed;
    }
    if let Some(out) = o.out {
        config.output_path = Some(out);
    }
    if let Some(samples) = o.samples {
        config.samples = samples;
    }
    if let Some(workers) = o.workers {
        config.workers = workers;
    }
    if let Some(schedule) = o.n_schedule {
        config.n_schedule = schedule;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, overrides) = match cli.scenario {
        Command::IdentityAudit(o) => (Scenario::IdentityAudit, o),
        Command::RadialSurvey(o) => (Scenario::RadialSurvey, o),
        Command::OrbitalConvergence(o) => (Scenario::OrbitalConvergence, o),
        Command::RecurrenceProbe(o) => (Scenario::RecurrenceProbe, o),
    };
    let result = build_config(scenario, overrides).and_then(|config| {
        let table = run(&config)?;
        let out = config
            .output_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("results/{}.csv", scenario.as_str())));
        let paths = table.write(&out)?;
        Ok((table, paths))
    });
    match result {
        Ok((table, paths)) => {
            for p in &paths {
                println!("wrote {}", p.display());
            }
            println!(
                "{} rows: {} pass, {} fail, {} info, {} error",
                table.rows.len(),
                table.count(Status::Pass),
                table.count(Status::Fail),
                table.count(Status::Info),
                table.count(Status::Error)
            );
            if table.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
