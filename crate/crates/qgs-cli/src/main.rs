//! Command-line front end: seeded simulation runs, canned verification
//! suites, regime-map export, and functional-grid dumps.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 runtime
//! failure during a run, 3 verification suite failed its thresholds.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use qgs::harness::{self, verify, ExperimentConfig};
use qgs::Error;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "qgs",
    version,
    about = "Sequential quality-group selection harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config; write checkpoint CSV
    /// and a run manifest.
    Simulate {
        /// Path to the experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (overrides QGS_WORKERS and the config; 0 = auto).
        #[arg(long)]
        workers: Option<usize>,
        /// Output prefix; writes `<prefix>.csv` and `<prefix>.manifest.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named reproduction suite and print each check.
    Verify {
        /// Suite name; see `qgs verify list`.
        suite: String,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify an (alpha, beta) grid and emit it as CSV.
    Regime {
        /// Comma-separated alpha grid, e.g. 0.5,1,2.
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        /// Comma-separated beta grid, e.g. 1,1.5,2,3.
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate x, f(x), G(x) for a config's model.
    DumpGrid {
        /// Path to the experiment config (JSON); only the model is used.
        #[arg(long)]
        config: PathBuf,
        /// Largest G value the table must reach.
        #[arg(long, default_value_t = 10.0)]
        g_max: f64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(cli));
}

/// Worker precedence: command line, then QGS_WORKERS, then the config file
/// (applied inside the harness), then one thread per core.
fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(harness::WORKERS_ENV) {
        Ok(raw) => raw.trim().parse::<usize>().map(Some).map_err(|_| {
            format!(
                "{} must be a non-negative integer, got '{raw}'",
                harness::WORKERS_ENV
            )
        }),
        Err(_) => Ok(None),
    }
}

fn write_or_print(out: Option<&PathBuf>, bytes: &[u8]) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)
        }
    }
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    code
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            workers,
            out,
        } => {
            let workers = match resolve_workers(workers) {
                Ok(w) => w,
                Err(msg) => return fail(1, msg),
            };
            let mut cfg = match ExperimentConfig::from_file(&config) {
                Ok(cfg) => cfg,
                Err(e) => return fail(1, e),
            };
            if let Some(seed) = seed {
                cfg.rule.seed = seed;
            }
            let prefix = out
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("qgs-run"));
            match harness::simulate_to_files(&cfg, workers, &prefix) {
                Ok(manifest) => {
                    println!(
                        "wrote {} ({} rows) and {}; csv sha256 {}",
                        prefix.with_extension("csv").display(),
                        manifest.n_rows,
                        prefix.with_extension("manifest.json").display(),
                        manifest.csv_sha256
                    );
                    0
                }
                Err(e) => fail(2, e),
            }
        }
        Command::Verify { suite, out } => {
            if suite == "list" {
                for name in verify::SUITES {
                    println!("{name}");
                }
                return 0;
            }
            match verify::run_suite(&suite) {
                Ok(report) => {
                    print!("{}", report.render());
                    println!(
                        "suite {}: {}",
                        report.suite,
                        if report.passed { "PASS" } else { "FAIL" }
                    );
                    if let Some(path) = out {
                        let json = match serde_json::to_vec_pretty(&report) {
                            Ok(mut v) => {
                                v.push(b'\n');
                                v
                            }
                            Err(e) => return fail(2, e),
                        };
                        if let Err(e) = std::fs::write(&path, json) {
                            return fail(2, e);
                        }
                    }
                    if report.passed {
                        0
                    } else {
                        3
                    }
                }
                Err(Error::Config(msg)) => fail(1, msg),
                Err(e) => fail(2, e),
            }
        }
        Command::Regime { alpha, beta, out } => {
            let mut buf = Vec::new();
            match harness::write_regime_csv(&mut buf, &alpha, &beta) {
                Ok(()) => match write_or_print(out.as_ref(), &buf) {
                    Ok(()) => 0,
                    Err(e) => fail(2, e),
                },
                Err(e) => fail(1, e),
            }
        }
        Command::DumpGrid { config, g_max, out } => {
            let cfg = match ExperimentConfig::from_file(&config) {
                Ok(cfg) => cfg,
                Err(e) => return fail(1, e),
            };
            let model = match cfg.model.build() {
                Ok(m) => m,
                Err(e) => return fail(1, e),
            };
            let mut buf = Vec::new();
            match harness::write_grid_csv(&mut buf, &model, g_max) {
                Ok(()) => match write_or_print(out.as_ref(), &buf) {
                    Ok(()) => 0,
                    Err(e) => fail(2, e),
                },
                Err(e) => fail(2, e),
            }
        }
    }
}
