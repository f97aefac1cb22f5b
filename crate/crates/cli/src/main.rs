//! `redqueen`: simulate, analyze, verify and sweep.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error,
//! 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use redqueen::config::SimulationConfig;
use redqueen::diagnostics::classify;
use redqueen::output::{load_run, write_report, write_run, write_text};
use redqueen::verify::{run_suite, Suite, VerifyOptions};
use redqueen::{par, sweep, Error};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Environment variable that replaces the default output root `out`.
const OUT_ENV: &str = "REDQUEEN_OUT";

#[derive(Parser)]
#[command(name = "redqueen", version, about = "Host-pathogen coevolution laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a configured run and write trajectory, snapshots and manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: <root>/<output_dir or config stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every available core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Classify a finished run and write its pulse report.
    Analyze {
        run_dir: PathBuf,
        /// Where to write the report (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and print its pass/fail table.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 2000)]
        kmax: usize,
        #[arg(long, default_value_t = redqueen::series::DEFAULT_B)]
        b: f64,
        #[arg(long = "theta-bar", default_value_t = 0.1)]
        theta_bar: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every available core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Run one simulation per cell of a parameter grid and aggregate verdicts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every available core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn threads(jobs: usize) -> usize {
    if jobs > 0 {
        jobs
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_USAGE })
}

fn simulate(config: &Path, out: Option<PathBuf>, jobs: usize) -> Result<ExitCode, Error> {
    let cfg = SimulationConfig::load(config)?;
    let dir = out.unwrap_or_else(|| out_root().join(cfg.output_dir.clone().unwrap_or_else(|| stem(config))));
    let traj = par::with_threads(threads(jobs), || redqueen::solver::simulate(&cfg))?;
    write_run(&dir, &cfg, &traj)?;
    if let Some(s) = traj.final_sample() {
        println!("t = {}  H = {}  P = {}  xbar = {:?}  ybar = {:?}", s.t, s.h_mass, s.p_mass, s.xbar, s.ybar);
    }
    println!("wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn analyze(run_dir: &Path, out: Option<PathBuf>) -> Result<ExitCode, Error> {
    let (manifest, traj) = load_run(run_dir)?;
    let p = &manifest.config.params;
    let offset: Vec<f64> = p.u().iter().map(|u| p.ell() * u).collect();
    let rep = classify(&traj, &offset, &manifest.config.diagnostics)?;
    let dir = out.unwrap_or_else(|| run_dir.to_path_buf());
    write_report(&dir, &stem(run_dir), &rep)?;
    println!("regime: {}  c = {}  r2 = {}", rep.regime.label(), rep.c_fit, rep.r2);
    if let Some(d) = rep.delay_fit {
        println!("delay = {d}");
    }
    if let (Some(r), Some(w)) = (rep.radius_fit, rep.omega_fit) {
        println!("radius = {r}  omega = {w}");
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(suite: &str, opts: VerifyOptions, out: Option<PathBuf>, jobs: usize) -> Result<ExitCode, Error> {
    let s: Suite = suite.parse()?;
    if !(opts.b.is_finite() && opts.theta_bar > 0.0 && opts.theta_bar.is_finite() && opts.k_max >= 20) {
        return Err(Error::Config("need finite b, theta-bar > 0 and kmax >= 20".into()));
    }
    let rep = par::with_threads(threads(jobs), || run_suite(s, &opts));
    print!("{}", rep.table());
    let dir = out.unwrap_or_else(|| out_root().join(format!("verify-{}", s.name())));
    write_text(&dir.join("checks.csv"), &rep.to_csv())?;
    for (rel, text) in &rep.artifacts {
        write_text(&dir.join(rel), text)?;
    }
    let fails = rep.failures();
    if fails.is_empty() {
        println!("all {} checks passed or skipped", rep.checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} failed:", fails.len());
        for c in fails {
            eprintln!("  {}: {} ({})", c.suite, c.name, c.detail);
        }
        Ok(ExitCode::from(EXIT_VERIFY))
    }
}

fn run_sweep(config: &Path, out: Option<PathBuf>, jobs: usize) -> Result<ExitCode, Error> {
    let (sw, base) = sweep::load_sweep(config)?;
    let dir = out.unwrap_or_else(|| out_root().join(stem(config)));
    let outcomes = sweep::run_sweep(&sw, &base, &dir, threads(jobs))?;
    let mut ok = 0;
    for o in &outcomes {
        match &o.result {
            Ok(r) => {
                ok += 1;
                println!("{:<32} {}", o.key, r.regime.label());
            }
            Err(e) => println!("{:<32} failed: {e}", o.key),
        }
    }
    println!("wrote {}", dir.display());
    Ok(if ok == 0 { ExitCode::from(EXIT_NUMERIC) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Simulate { config, out, jobs } => simulate(&config, out, jobs),
        Cmd::Analyze { run_dir, out } => analyze(&run_dir, out),
        Cmd::Verify { suite, kmax, b, theta_bar, out, jobs } => {
            verify(&suite, VerifyOptions { k_max: kmax, b, theta_bar }, out, jobs)
        }
        Cmd::Sweep { config, out, jobs } => run_sweep(&config, out, jobs),
    };
    res.unwrap_or_else(|e| fail(&e))
}
