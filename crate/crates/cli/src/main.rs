use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use isoembed::cli_report::{
    conformal_check, dry_run, parse_scenario, run, stage_bench, step_bench, ReportError, RunReport, Scenario,
    EXIT_CONFIG, EXIT_OK,
};
use isoembed::corrugation::{dump_profiles, CorrugationTable};

/// Caps the worker count whatever `--threads` asks for.
const THREAD_CAP_VAR: &str = "ISOEMBED_MAX_THREADS";

#[derive(Parser)]
#[command(name = "isoembed", version, about = "Convex-integration runs and benchmarks for surface metrics")]
struct Cli {
    /// Worker threads (default: all cores, capped by ISOEMBED_MAX_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed; overrides the scenario's seed for `run`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write history, meshes and summary.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Levels per pass; overrides the scenario.
        #[arg(long)]
        depth: Option<usize>,
        /// Report the schedule and a memory estimate only.
        #[arg(long)]
        dry_run: bool,
    },
    /// Defect of one step against frequency, as JSON lines.
    StepBench {
        #[arg(long, default_value_t = 1024)]
        resolution: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [64.0, 128.0, 256.0])]
        lambdas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error of a two-term torus stage against the growth factor, as JSON lines.
    StageBench {
        #[arg(long, default_value_t = 512)]
        resolution: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [8.0, 16.0])]
        k_factors: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conformal coordinates of a random smooth metric; residual statistics as JSON.
    ConformalCheck {
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 0.3)]
        strength: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corrugation profiles along t as CSV.
    CorrugationDump {
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0])]
        amplitudes: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        t_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, ReportError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn json_lines<T: Serialize>(records: &[T], out: &Option<PathBuf>) -> Result<(), ReportError> {
    let mut w = sink(out)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn thread_count(requested: Option<usize>) -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cap = std::env::var(THREAD_CAP_VAR).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&c| c > 0);
    let n = requested.unwrap_or(cores).max(1);
    cap.map_or(n, |c| n.min(c))
}

fn run_scenario(path: &Path, out: &Path, depth: Option<usize>, seed: Option<u64>, dry: bool) -> Result<i32, ReportError> {
    let mut scenario = match parse_scenario(path) {
        Ok(s) => s,
        Err(ReportError::Config(problems)) => {
            let mut s = Scenario::default();
            if let Some(stem) = path.file_stem() {
                s.name = stem.to_string_lossy().into_owned();
            }
            RunReport::config_error(&s, &problems).write_summary(out)?;
            for p in &problems {
                eprintln!("error: {p}");
            }
            return Ok(EXIT_CONFIG);
        }
        Err(e) => return Err(e),
    };
    if let Some(d) = depth {
        scenario.schedule.depth = d;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let report = if dry {
        dry_run(&scenario, out)?
    } else {
        let table = CorrugationTable::with_defaults()?;
        run(&scenario, out, &table)?
    };
    eprintln!(
        "{}: {:?} after {:.1}s, {} history lines, summary in {}",
        report.name,
        report.status,
        report.wall_time,
        report.history_lines,
        out.join("summary.json").display()
    );
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    for f in &report.assertions.failures {
        eprintln!("failed: {f}");
    }
    if let Some(a) = report.suggested_amplitude {
        eprintln!("suggested amplitude: {a:e}");
    }
    Ok(report.exit_code())
}

fn dispatch(cli: Cli) -> Result<i32, ReportError> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            depth,
            dry_run,
        } => run_scenario(&scenario, &out, depth, cli.seed, dry_run),
        Command::StepBench { resolution, lambdas, out } => {
            let table = CorrugationTable::with_defaults()?;
            json_lines(&step_bench(resolution, &lambdas, &table)?, &out)?;
            Ok(EXIT_OK)
        }
        Command::StageBench {
            resolution,
            k_factors,
            out,
        } => {
            let table = CorrugationTable::with_defaults()?;
            json_lines(&stage_bench(resolution, &k_factors, &table)?, &out)?;
            Ok(EXIT_OK)
        }
        Command::ConformalCheck {
            resolution,
            strength,
            out,
        } => {
            let check = conformal_check(resolution, cli.seed.unwrap_or(0), strength)?;
            let mut w = sink(&out)?;
            serde_json::to_writer_pretty(&mut w, &check)?;
            writeln!(w)?;
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::CorrugationDump {
            amplitudes,
            t_points,
            out,
        } => {
            let table = CorrugationTable::with_defaults()?;
            let mut w = sink(&out)?;
            dump_profiles(&table, &amplitudes, t_points, &mut w)?;
            w.flush()?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let threads = thread_count(cli.threads);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("warning: thread pool: {e}");
    }
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
