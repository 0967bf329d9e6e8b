use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mbd_dualarm::bench::{bench, runs_csv, summarize, summary_csv};
use mbd_dualarm::runner::{emit, prepare, run};
use mbd_dualarm::scenario::{load_scenario, Scenario};
use mbd_dualarm::trace::Method;
use mbd_dualarm::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mbd-dualarm",
    version,
    about = "Minimum-time dual-arm trajectory optimization"
)]
struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mbd,
    Cem,
    Random,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mbd => Method::Mbd,
            MethodArg::Cem => Method::Cem,
            MethodArg::Random => Method::RandomSearch,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one scenario and write result files.
    Solve {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "mbd")]
        method: MethodArg,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Record wall-clock times (output is then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Check a scenario file and its nominal initialization.
    Validate { scenario: PathBuf },
    /// Run every method over several seeds and write comparison tables.
    Bench {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|source| Error::Io { path, source })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Solve {
            scenario,
            method,
            seed,
            out,
            timing,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let bundle = run(&s, method.into())?;
            let files = emit(&bundle, &out, timing)?;
            let f = bundle.final_eval;
            println!(
                "{} {}: V = {:.6} s, E = {:.3e}, R = {:.6}, feasible = {}",
                bundle.scenario, bundle.method, f.v, f.e, f.r, f.feasible
            );
            println!("wrote {}", files.result.display());
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            let (problem, init) = prepare(&s)?;
            println!(
                "{}: n = {}, N = {}, d = {}, latent dim = {}",
                s.name,
                s.n_joints(),
                s.basis.n_segments(),
                s.basis.d(),
                problem.bounds().dim()
            );
            println!("ik max residual = {:.3e}", init.ik_max_residual);
            for (i, r) in &init.ik_failures {
                println!("warning: ik missed tolerance at sample {i} (residual {r:.3e})");
            }
            for (j, k) in &init.sigma_warnings {
                println!("warning: nominal coefficient ({j}, {k}) exceeds its joint-limit budget; exploration disabled there");
            }
        }
        Command::Bench { scenarios, seeds, out } => {
            let loaded: Vec<Scenario> = scenarios.iter().map(load_scenario).collect::<Result<_>>()?;
            let seed_list: Vec<u64> = (0..seeds).collect();
            let runs = bench(&loaded, &seed_list, &Method::ALL)?;
            let summary = summarize(&runs);
            fs::create_dir_all(&out).map_err(|source| Error::Io {
                path: out.clone(),
                source,
            })?;
            write(out.join("runs.csv"), &runs_csv(&runs))?;
            write(out.join("summary.csv"), &summary_csv(&summary))?;
            for s in &summary {
                println!(
                    "{:<16} {:<7} V = {:.4}  E = {:.3e}  feasible = {:>5.1}%  wall = {:.0} ms",
                    s.scenario,
                    s.method.name(),
                    s.mean_v,
                    s.mean_e,
                    100.0 * s.feasibility_rate,
                    s.mean_wall_ms
                );
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
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
