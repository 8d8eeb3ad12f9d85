use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsbandit::harness::ExperimentSpec;
use nsbandit::hyque::{run_hyque_traced, write_trace_csv};
use nsbandit::plot::{emit_plots, PlotKind};
use nsbandit::{gen_hard_instance, RandomStream, RunConfig, StreamId};

#[derive(Parser)]
#[command(
    version,
    about = "Non-stationary bandit experiments under a feedback budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an experiment spec without running it.
    Validate { spec: PathBuf },
    /// Run an experiment spec and write results.csv and summary.csv.
    Run { spec: PathBuf },
    /// Render an SVG figure from a results file (or an action log for budget_trace).
    Plot {
        results: PathBuf,
        #[arg(long)]
        kind: PlotKind,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Query budget drawn as the cap line of budget_trace.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Generate the batched hard instance described by a run config.
    HardInstance {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run HyQue once and print per-query detection statistics as CSV.
    Trace {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also save the action log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> nsbandit::Result<()> {
    match cli.command {
        Command::Validate { spec } => {
            let spec = ExperimentSpec::load(&spec)?;
            let points = spec.validate()?;
            println!(
                "ok: {} grid points x {} seeds = {} runs",
                points.len(),
                spec.seeds.count,
                spec.run_count()
            );
        }
        Command::Run { spec } => {
            let spec = ExperimentSpec::load(&spec)?;
            let out = nsbandit::run_experiment(&spec)?;
            for row in &out.summary {
                println!(
                    "T={} K={} B={} V={} mean R_T = {:.2} (se {:.2})",
                    row.horizon,
                    row.arms,
                    row.budget,
                    row.variation.map_or("-".into(), |v| v.to_string()),
                    row.mean_regret,
                    row.se_regret
                );
            }
            println!("wrote {}", spec.output_dir.join("results.csv").display());
        }
        Command::Plot {
            results,
            kind,
            out_dir,
            budget,
        } => {
            let summary = emit_plots(&results, kind, out_dir.as_deref(), budget)?;
            match summary.slope {
                Some(s) => println!("wrote {} (slope {s:.3})", summary.path.display()),
                None => println!("wrote {}", summary.path.display()),
            }
        }
        Command::HardInstance { config, out } => {
            let rc = RunConfig::load(&config)?;
            let cfg = rc.validated()?;
            let mut stream = RandomStream::new(rc.seed, StreamId::Environment);
            let (seq, params) = gen_hard_instance(&cfg, &mut stream)?;
            seq.save(&out)?;
            println!(
                "batch length {} ({} batches), gap {:.6}; wrote {}",
                params.batch_length,
                params.batch_count,
                params.gap,
                out.display()
            );
        }
        Command::Trace {
            config,
            seed,
            out,
            log,
        } => {
            let mut rc = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                rc.seed = seed;
            }
            let cfg = rc.validated()?;
            let env = rc.environment.build(&cfg, rc.seed)?;
            let run = run_hyque_traced(&env, &cfg, &rc.hyque, rc.environment.reward_law, rc.seed)?;
            match out {
                Some(path) => write_trace_csv(&run.trace, std::fs::File::create(path)?)?,
                None => write_trace_csv(&run.trace, std::io::stdout().lock())?,
            }
            if let Some(path) = log {
                run.log.save(path)?;
            }
            let mut err = std::io::stderr().lock();
            writeln!(
                err,
                "{} queries, {} on demand, {} restarts",
                run.log.queries(),
                run.stats.on_demand,
                run.stats.restarts
            )?;
        }
    }
    Ok(())
}

fn is_broken_pipe(e: &nsbandit::Error) -> bool {
    let io = match e {
        nsbandit::Error::Io(io) => io,
        nsbandit::Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => io,
            _ => return false,
        },
        _ => return false,
    };
    io.kind() == std::io::ErrorKind::BrokenPipe
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
