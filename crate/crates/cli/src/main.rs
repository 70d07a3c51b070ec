use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rankmin_core::airls::{airls_run, AirlsConfig, RankChoice};
use rankmin_core::harness::{run_experiment, summarize};
use rankmin_core::io::{matrix_to_csv, parse_experiments, trace_to_csv, ProblemFile};
use rankmin_core::irls::{irls_run, GammaSchedule, IrlsConfig};
use rankmin_core::report::{emit_bar, emit_button, outcomes_from_csv, outcomes_to_csv, Geometry};
use rankmin_core::Error;

#[derive(Parser)]
#[command(name = "rankmin", version, about = "Low-rank recovery by iteratively reweighted least squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Irls,
    Airls,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem file; writes the solution matrix as CSV.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "irls")]
        solver: Solver,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        /// Decay factor of gamma per iteration.
        #[arg(long, default_value_t = 0.9)]
        nu: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        /// AIRLS factor rank (default: the rank bound of the problem size).
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Run the experiments of a config file; writes the outcome table.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Outcome CSV; with several experiments, `<stem>-<name>.csv` next to it.
        #[arg(long)]
        out: PathBuf,
        /// Override the base seed of every experiment.
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall times (makes the output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Render an outcome table as bar and button plots (both by default).
    Report {
        results: PathBuf,
        #[arg(long)]
        bar: bool,
        #[arg(long)]
        button: bool,
        /// Directory for the plots (default: next to the results).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Io(_) | Error::Dimension(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { problem, out, trace, solver, p, nu, max_iters, rank } => {
            let file = ProblemFile::parse(&read(&problem)?).map_err(|e| Failure::Usage(format!("{}: {e}", problem.display())))?;
            let dir = problem.parent().unwrap_or(Path::new("."));
            let instance = file.instance(dir)?;
            let schedule = GammaSchedule::constant_rate(nu);
            let (x, rows) = match solver {
                Solver::Irls => {
                    let config = IrlsConfig { p, schedule, max_iters, record_history: true, ..IrlsConfig::default() };
                    let t = irls_run(&instance, &config)?;
                    let rows = t.records.iter().map(|r| (r.iteration, r.gamma, r.residual, r.step)).collect::<Vec<_>>();
                    (t.x, rows)
                }
                Solver::Airls => {
                    let config = AirlsConfig {
                        p,
                        schedule,
                        max_sweeps: max_iters,
                        rank: rank.map_or(RankChoice::Auto, RankChoice::Fixed),
                        record_history: true,
                        ..AirlsConfig::default()
                    };
                    let t = airls_run(&instance, &config)?;
                    let rows = t.records.iter().map(|r| (r.sweep, r.gamma, r.residual, r.step)).collect::<Vec<_>>();
                    (t.x, rows)
                }
            };
            write(&out, &matrix_to_csv(&x))?;
            if let Some(path) = trace {
                write(&path, &trace_to_csv(&rows))?;
            }
            let last = rows.last().expect("trace is never empty");
            println!("iterations {} residual {:.3e}", last.0, last.2);
        }
        Command::Experiment { config, out, seed, timing } => {
            let text = read(&config)?;
            let experiments = parse_experiments(&text).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
            let several = experiments.len() > 1;
            for (name, mut exp) in experiments {
                if let Some(s) = seed {
                    exp.base_seed = s;
                }
                let outcomes = run_experiment(&exp)?;
                let path = if several {
                    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
                    out.with_file_name(format!("{stem}-{name}.csv"))
                } else {
                    out.clone()
                };
                write(&path, &outcomes_to_csv(&outcomes, timing))?;
                let s = summarize(&outcomes);
                println!(
                    "{name}: {} trials, {} improvement, {} success ({} recovered), {} weak fail, {} strong fail",
                    outcomes.len(),
                    s.improvement,
                    s.success,
                    s.recovered,
                    s.weak_fail,
                    s.strong_fail
                );
            }
        }
        Command::Report { results, bar, button, out_dir } => {
            let outcomes = outcomes_from_csv(&read(&results)?).map_err(|e| Failure::Usage(format!("{}: {e}", results.display())))?;
            let (bar, button) = if bar || button { (bar, button) } else { (true, true) };
            let dir = out_dir.unwrap_or_else(|| results.parent().unwrap_or(Path::new(".")).to_path_buf());
            let stem = results.file_stem().and_then(|s| s.to_str()).unwrap_or("results").to_string();
            let mut emitted = Vec::new();
            if bar {
                emitted.push(("bar", emit_bar(&outcomes)));
            }
            if button {
                emitted.push(("button", emit_button(&outcomes, &Geometry::default())));
            }
            for (kind, (svg, csv)) in emitted {
                let svg_path = dir.join(format!("{stem}.{kind}.svg"));
                write(&svg_path, &svg)?;
                write(&dir.join(format!("{stem}.{kind}.csv")), &csv)?;
                println!("{}", svg_path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
