//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime error, 2 configuration error, 3 when
//! some solves failed or did not converge (or an audit found violations).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::saved::SavedAllocation;
use super::{figure_recipe, run_sweep, ExperimentSpec, Scheme, SweepResult, FIXED_TAU};
use crate::config::{Duplex, SystemConfig};
use crate::engine::{algorithm1, algorithm2, audit};
use crate::error::{Error, Result};
use crate::scenario::sample_realization;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fdwpcn", version, about = "Sum-rate optimization for full-duplex wireless powered networks")]
struct Cli {
    /// Scenario file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Realization seed for `solve`, first seed for sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Fd,
    Hd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeKind {
    Opt,
    Fixed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one realization and print the report.
    Solve {
        /// Split used by the fixed scheme.
        #[arg(long, default_value_t = FIXED_TAU)]
        tau1: f64,
        /// Write the allocation as JSON for `audit`.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run the sweep described by a spec file and write CSV.
    Sweep { spec: PathBuf },
    /// Run a canned figure sweep and write CSV.
    Figure {
        name: String,
        /// Override the number of realizations.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Check a saved allocation against every constraint.
    Audit { saved: PathBuf },
}

/// Parses `args` (program name first) and runs the command, writing results
/// to `--out` or `stdout`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fdwpcn: {e}");
            match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_ERROR,
            }
        }
    }
}

fn base_config(cli: &Cli) -> Result<SystemConfig> {
    let mut cfg = match &cli.config {
        Some(p) => SystemConfig::from_file(p)?,
        None => SystemConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.duplex = duplex(m);
    }
    Ok(cfg)
}

fn duplex(m: Mode) -> Duplex {
    match m {
        Mode::Fd => Duplex::Fd,
        Mode::Hd => Duplex::Hd,
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    if cli.jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    dispatch(cli, stdout)
}

fn with_output(cli: &Cli, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(stdout)?,
    }
    Ok(())
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Solve { tau1, save } => solve(cli, *tau1, save.as_ref(), stdout),
        Command::Sweep { spec } => {
            let mut spec = ExperimentSpec::from_file(spec)?;
            if cli.config.is_some() {
                return Err(Error::Config("sweep takes its configuration from the spec file".into()));
            }
            restrict(cli, &mut spec)?;
            sweep(cli, &spec, stdout)
        }
        Command::Figure { name, n } => {
            let mut spec = figure_recipe(name)?;
            if cli.config.is_some() {
                spec.base = base_config(cli)?;
                let keep = figure_recipe(name)?.base;
                spec.base.k = keep.k;
                spec.base.m = keep.m;
                spec.base.p_dl_max = keep.p_dl_max;
            }
            if let Some(n) = n {
                spec.n_realizations = *n;
            }
            restrict(cli, &mut spec)?;
            sweep(cli, &spec, stdout)
        }
        Command::Audit { saved } => {
            let text = std::fs::read_to_string(saved)
                .map_err(|e| Error::Config(format!("{}: {e}", saved.display())))?;
            let (cfg, real, alloc) = SavedAllocation::from_json(&text)?.restore()?;
            let report = audit(&alloc, &real, &cfg);
            with_output(cli, stdout, |w| {
                writeln!(w, "feasible = {}", report.passed())?;
                for v in &report.violations {
                    writeln!(w, "violation = {v}")?;
                }
                Ok(())
            })?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_PARTIAL })
        }
    }
}

/// Applies `--mode`, `--scheme` and `--seed` to a sweep.
fn restrict(cli: &Cli, spec: &mut ExperimentSpec) -> Result<()> {
    if let Some(seed) = cli.seed {
        spec.seed0 = seed;
    }
    spec.schemes.retain(|s| {
        cli.mode.is_none_or(|m| s.duplex() == duplex(m))
            && cli.scheme.is_none_or(|k| s.optimal() == matches!(k, SchemeKind::Opt))
    });
    spec.validate()
}

fn sweep(cli: &Cli, spec: &ExperimentSpec, stdout: &mut dyn Write) -> Result<i32> {
    let result: SweepResult = match cli.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?
            .install(|| run_sweep(spec))?,
        None => run_sweep(spec)?,
    };
    with_output(cli, stdout, |w| result.write_csv(w))?;
    Ok(if result.total_failures() > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn join(xs: &[f64], f: impl Fn(f64) -> String) -> String {
    xs.iter().map(|&x| f(x)).collect::<Vec<_>>().join(",")
}

fn solve(cli: &Cli, tau1: f64, save: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<i32> {
    if !(tau1 > 0.0 && tau1 < 1.0) {
        return Err(Error::Config(format!("--tau1 {tau1} outside (0, 1)")));
    }
    let cfg = base_config(cli)?;
    let seed = cli.seed.unwrap_or(1);
    let real = sample_realization(&cfg, seed)?;
    let optimal = !matches!(cli.scheme, Some(SchemeKind::Fixed));
    let scheme = Scheme::from_parts(cfg.duplex, optimal);
    let (alloc, report, evals) = if optimal {
        let (a, r, t) = algorithm2(&cfg, &real)?;
        (a, r, Some(t.evaluations.len()))
    } else {
        let (a, r) = algorithm1(&cfg, &real, tau1)?;
        (a, r, None)
    };
    with_output(cli, stdout, |w| {
        writeln!(w, "scheme = {scheme}")?;
        writeln!(w, "seed = {seed}")?;
        writeln!(w, "tau1 = {}", alloc.tau[0])?;
        writeln!(w, "tau2 = {}", alloc.tau[1])?;
        writeln!(w, "sum_rate = {:.6}", report.sum_rate)?;
        writeln!(w, "per_user_rate = {}", join(&report.per_user_rate, |x| format!("{x:.6}")))?;
        writeln!(w, "per_user_harvest = {}", join(&report.per_user_harvest, |x| format!("{x:.6e}")))?;
        writeln!(w, "snr = {}", join(&report.snr, |x| format!("{x:.6e}")))?;
        let phases: Vec<String> = (0..cfg.k)
            .map(|u| (alloc.assignment.harvest_phase(u).index() + 1).to_string())
            .collect();
        writeln!(w, "harvest_phase = {}", phases.join(","))?;
        writeln!(w, "iterations = {}", report.iterations)?;
        writeln!(w, "converged = {}", report.converged)?;
        if let Some(n) = evals {
            writeln!(w, "tau_evaluations = {n}")?;
        }
        Ok(())
    })?;
    if let Some(path) = save {
        std::fs::write(path, SavedAllocation::new(&alloc, &cfg, seed).to_json())?;
    }
    Ok(if report.converged { EXIT_OK } else { EXIT_PARTIAL })
}
