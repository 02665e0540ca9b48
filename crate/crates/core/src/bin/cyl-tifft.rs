use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cyl_tifft::scenario::{bench, error_record, exit_code, nlogn_exponent, run, write_bench_csv, RunOptions, Scenario};
use cyl_tifft::Error;

#[derive(Parser)]
#[command(version, about = "Beam scattering from quasi-cylindrical PEC surfaces by cylindrical TI-FFT")]
struct Cli {
    /// Directory for artifacts and reports.
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    /// Treat solver warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or built-in scenario name.
    Run { scenario: String },
    /// Time the TI-FFT and direct modal paths over grid sizes.
    Bench {
        scenario: String,
        /// Node counts N = n_phi * n_z (powers of two); defaults to the scenario's list.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sizes: Vec<usize>,
    },
}

fn execute(cli: &Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Scenario { field: "--threads".into(), message: e.to_string() })?;
    }
    match &cli.command {
        Command::Run { scenario } => {
            let scenario = Scenario::load(scenario)?;
            let report = run(&scenario, &RunOptions { output_dir: cli.output_dir.clone(), strict: cli.strict })?;
            for c in &report.comparisons {
                println!("{}: relative L2 {:.3e}, max dB difference {:.2}", c.name, c.relative_l2, c.max_db_difference);
            }
            for w in &report.warnings {
                println!("warning: {w}");
            }
            println!("{} artifacts in {}", report.artifacts.len(), cli.output_dir.display());
        }
        Command::Bench { scenario, sizes } => {
            let scenario = Scenario::load(scenario)?;
            let config = scenario.bench.clone();
            let sizes = if sizes.is_empty() {
                config.as_ref().map(|b| b.sizes.clone()).ok_or_else(|| Error::Scenario {
                    field: "bench.sizes".into(),
                    message: "no sizes given and none in the scenario".into(),
                })?
            } else {
                sizes.clone()
            };
            let budget = config.as_ref().map_or(120.0, |b| b.direct_budget_s);
            let repeats = config.as_ref().map_or(3, |b| b.repeats);
            let rows = bench(&scenario, &sizes, budget, repeats)?;
            std::fs::create_dir_all(&cli.output_dir)?;
            let path = cli.output_dir.join("bench.csv");
            write_bench_csv(&rows, &path)?;
            println!("{:>8} {:>6} {:>6} {:>12} {:>12} {:>10}", "N", "n_phi", "n_z", "t_TI [s]", "t_DI [s]", "ratio");
            for r in &rows {
                let di = r.t_di.map_or("censored".to_string(), |t| format!("{t:.4e}"));
                let ratio = r.ratio().map_or("-".to_string(), |t| format!("{t:.1}"));
                println!("{:>8} {:>6} {:>6} {:>12.4e} {:>12} {:>10}", r.n, r.n_phi, r.n_z, r.t_ti, di, ratio);
            }
            if rows.len() >= 2 {
                println!("t_TI ~ (N log2 N)^{:.3}", nlogn_exponent(&rows));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = error_record(&err);
            eprintln!("{record}");
            if std::fs::create_dir_all(&cli.output_dir).is_ok() {
                let _ = std::fs::write(cli.output_dir.join("error.json"), record.to_string() + "\n");
            }
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
