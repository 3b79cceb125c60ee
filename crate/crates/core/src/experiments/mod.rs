//! Monte Carlo sweeps, figure recipes and the command-line front end.
//!
//! A sweep runs every `(scheme, value, seed)` triple of an [`ExperimentSpec`].
//! All schemes at the same `(value, seed)` see the same channel realization,
//! so scheme comparisons are paired. Seeds run from `seed0` to
//! `seed0 + n_realizations - 1`. Work is spread over rayon threads and reduced
//! in grid order, so the CSV does not depend on the thread count.
//!
//! ```
//! use fdwpcn::experiments::{run_sweep, ExperimentSpec};
//!
//! let spec = ExperimentSpec::parse(
//!     "K = 2\nM = 2\nsweep_variable = p_dl_dbm\nsweep_values = 0\n\
//!      n_realizations = 2\nschemes = FD-fixed,HD-fixed\n",
//! )
//! .unwrap();
//! let result = run_sweep(&spec).unwrap();
//! assert_eq!(result.rows.len(), 2);
//! ```

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{db_to_linear, dbm_to_watts, at_line, kv_lines, Duplex, SystemConfig};
use crate::engine::{algorithm1, algorithm2};
use crate::error::{Error, Result};
use crate::scenario::sample_realization;

pub mod cli;
mod recipes;
pub mod saved;

pub use recipes::{figure_recipe, FIGURES};

/// Time split of the fixed schemes.
pub const FIXED_TAU: f64 = 0.5;

pub const CSV_HEADER: [&str; 8] = [
    "scheme",
    "sweep_var",
    "sweep_value",
    "mean_sum_rate_bits",
    "stderr_bits",
    "mean_harvest_w",
    "mean_iters",
    "n_fail",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    PDlDbm,
    Sigma2RsiDb,
    Sigma2UlDbm,
    K,
    Sigma2E,
    /// Split used by the fixed schemes; the optimal schemes ignore it.
    Tau1Fixed,
}

impl SweepVariable {
    fn name(self) -> &'static str {
        match self {
            SweepVariable::PDlDbm => "p_dl_dbm",
            SweepVariable::Sigma2RsiDb => "sigma2_rsi_db",
            SweepVariable::Sigma2UlDbm => "sigma2_ul_dbm",
            SweepVariable::K => "K",
            SweepVariable::Sigma2E => "sigma2_e",
            SweepVariable::Tau1Fixed => "tau1_fixed",
        }
    }

    /// Copy of `base` with this variable set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        match self {
            SweepVariable::PDlDbm => cfg.p_dl_max = dbm_to_watts(value),
            SweepVariable::Sigma2RsiDb => cfg.sigma2_rsi = db_to_linear(value),
            SweepVariable::Sigma2UlDbm => cfg.sigma2_ul = dbm_to_watts(value),
            SweepVariable::K => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("K sweep value {value} is not a positive integer")));
                }
                cfg.k = value as usize;
            }
            SweepVariable::Sigma2E => cfg.sigma2_e = value,
            SweepVariable::Tau1Fixed => {
                if !(value > 0.0 && value < 1.0) {
                    return Err(Error::Config(format!("tau1 sweep value {value} outside (0, 1)")));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "p_dl_dbm" => SweepVariable::PDlDbm,
            "sigma2_rsi_db" => SweepVariable::Sigma2RsiDb,
            "sigma2_ul_dbm" => SweepVariable::Sigma2UlDbm,
            "K" | "k" => SweepVariable::K,
            "sigma2_e" => SweepVariable::Sigma2E,
            "tau1_fixed" => SweepVariable::Tau1Fixed,
            other => return Err(Error::Config(format!("unknown sweep variable '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    FdOpt,
    FdFixed,
    HdOpt,
    HdFixed,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::FdOpt, Scheme::FdFixed, Scheme::HdOpt, Scheme::HdFixed];

    pub fn duplex(self) -> Duplex {
        match self {
            Scheme::FdOpt | Scheme::FdFixed => Duplex::Fd,
            Scheme::HdOpt | Scheme::HdFixed => Duplex::Hd,
        }
    }

    /// Whether the time split is searched.
    pub fn optimal(self) -> bool {
        matches!(self, Scheme::FdOpt | Scheme::HdOpt)
    }

    pub fn from_parts(duplex: Duplex, optimal: bool) -> Self {
        match (duplex, optimal) {
            (Duplex::Fd, true) => Scheme::FdOpt,
            (Duplex::Fd, false) => Scheme::FdFixed,
            (Duplex::Hd, true) => Scheme::HdOpt,
            (Duplex::Hd, false) => Scheme::HdFixed,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::FdOpt => "FD-opt",
            Scheme::FdFixed => "FD-fixed",
            Scheme::HdOpt => "HD-opt",
            Scheme::HdFixed => "HD-fixed",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown scheme '{}'", s.trim())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub n_realizations: usize,
    pub schemes: Vec<Scheme>,
    pub seed0: u64,
}

impl ExperimentSpec {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines. Sweep keys are `sweep_variable`,
    /// `sweep_values` (comma list), `n_realizations` (default 1000),
    /// `schemes` (comma list, default all four) and `seed0` (default 1);
    /// every other key goes to the base [`SystemConfig`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut base = SystemConfig::default();
        let mut variable = None;
        let mut values = None;
        let mut n_realizations = 1000;
        let mut schemes = Scheme::ALL.to_vec();
        let mut seed0 = 1;
        for item in kv_lines(text) {
            let (line, key, value) = item?;
            let at = |e: Error| at_line(line, e);
            let bad = |what: &str| Error::Config(format!("line {line}: invalid {what} '{value}'"));
            match key {
                "sweep_variable" => variable = Some(value.parse().map_err(at)?),
                "sweep_values" => {
                    values = Some(
                        value
                            .split(',')
                            .map(|v| v.trim().parse::<f64>().map_err(|_| bad("sweep value")))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "n_realizations" => n_realizations = value.parse().map_err(|_| bad("n_realizations"))?,
                "schemes" => {
                    schemes = value
                        .split(',')
                        .map(|s| s.parse().map_err(at))
                        .collect::<Result<Vec<_>>>()?
                }
                "seed0" => seed0 = value.parse().map_err(|_| bad("seed0"))?,
                _ => base.set(key, value).map_err(at)?,
            }
        }
        let spec = ExperimentSpec {
            base,
            sweep_variable: variable.ok_or_else(|| Error::Config("missing sweep_variable".into()))?,
            sweep_values: values.ok_or_else(|| Error::Config("missing sweep_values".into()))?,
            n_realizations,
            schemes,
            seed0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::Config("n_realizations must be at least 1".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::Config("sweep_values is empty".into()));
        }
        if self.sweep_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep_values must be finite".into()));
        }
        let w = &self.sweep_values;
        let up = w.windows(2).all(|p| p[1] > p[0]);
        let down = w.windows(2).all(|p| p[1] < p[0]);
        if !(up || down) {
            return Err(Error::Config("sweep_values must be strictly monotone".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        self.base.validate()?;
        for &v in w {
            self.sweep_variable.apply(&self.base, v)?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n_realizations as u64).map(move |i| self.seed0 + i)
    }
}

/// Outcome of one solve inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub sum_rate: f64,
    /// Mean over users of the harvested power, watts.
    pub mean_harvest: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves one realization with one scheme.
pub fn run_scheme(scheme: Scheme, cfg: &SystemConfig, seed: u64, tau1: f64) -> Result<RunOutcome> {
    let mut cfg = cfg.clone();
    cfg.duplex = scheme.duplex();
    let real = sample_realization(&cfg, seed)?;
    let report = if scheme.optimal() {
        algorithm2(&cfg, &real)?.1
    } else {
        algorithm1(&cfg, &real, tau1)?.1
    };
    let harvest = &report.per_user_harvest;
    Ok(RunOutcome {
        sum_rate: report.sum_rate,
        mean_harvest: harvest.iter().sum::<f64>() / harvest.len() as f64,
        iterations: report.iterations,
        converged: report.converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub value: f64,
    pub mean_sum_rate: f64,
    /// `None` with fewer than two successful runs.
    pub stderr: Option<f64>,
    pub mean_harvest: f64,
    pub mean_iters: f64,
    /// Runs that errored or hit the iteration cap.
    pub n_fail: usize,
    /// Per-seed sum-rates in seed order, `NaN` for errored runs.
    pub per_seed: Vec<f64>,
    /// Per-seed mean harvests in seed order, `NaN` for errored runs.
    pub per_seed_harvest: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    /// Grouped by sweep value, schemes in spec order within a value.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn total_failures(&self) -> usize {
        self.rows.iter().map(|r| r.n_fail).sum()
    }

    pub fn row(&self, scheme: Scheme, value: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.value == value)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.scheme.to_string(),
                self.variable.to_string(),
                format!("{}", r.value),
                format!("{:.6}", r.mean_sum_rate),
                r.stderr.map(|s| format!("{s:.6}")).unwrap_or_default(),
                format!("{:.6e}", r.mean_harvest),
                format!("{:.6}", r.mean_iters),
                r.n_fail.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased standard error of the mean.
pub fn std_error(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((var / n as f64).sqrt())
}

fn aggregate(scheme: Scheme, value: f64, runs: &[Result<RunOutcome>]) -> SweepRow {
    let ok: Vec<&RunOutcome> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let rates: Vec<f64> = ok.iter().map(|r| r.sum_rate).collect();
    let n_fail = runs.len() - ok.len() + ok.iter().filter(|r| !r.converged).count();
    let pick = |f: fn(&RunOutcome) -> f64| -> Vec<f64> {
        runs.iter().map(|r| r.as_ref().map(f).unwrap_or(f64::NAN)).collect()
    };
    let (mean_sum_rate, mean_harvest, mean_iters) = if ok.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            mean(&rates),
            mean(&ok.iter().map(|r| r.mean_harvest).collect::<Vec<_>>()),
            mean(&ok.iter().map(|r| r.iterations as f64).collect::<Vec<_>>()),
        )
    };
    SweepRow {
        scheme,
        value,
        mean_sum_rate,
        stderr: std_error(&rates),
        mean_harvest,
        mean_iters,
        n_fail,
        per_seed: pick(|r| r.sum_rate),
        per_seed_harvest: pick(|r| r.mean_harvest),
    }
}

/// Runs the full `(value, seed, scheme)` grid on the current rayon pool.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let configs = spec
        .sweep_values
        .iter()
        .map(|&v| spec.sweep_variable.apply(&spec.base, v))
        .collect::<Result<Vec<_>>>()?;
    let seeds: Vec<u64> = spec.seeds().collect();
    let jobs: Vec<(usize, u64, Scheme)> = (0..configs.len())
        .flat_map(|i| seeds.iter().flat_map(move |&s| spec.schemes.iter().map(move |&sc| (i, s, sc))))
        .collect();
    let outcomes: Vec<Result<RunOutcome>> = jobs
        .par_iter()
        .map(|&(i, seed, scheme)| {
            let tau1 = match spec.sweep_variable {
                SweepVariable::Tau1Fixed => spec.sweep_values[i],
                _ => FIXED_TAU,
            };
            run_scheme(scheme, &configs[i], seed, tau1)
        })
        .collect();

    let per_value = seeds.len() * spec.schemes.len();
    let mut rows = Vec::with_capacity(configs.len() * spec.schemes.len());
    for (i, &value) in spec.sweep_values.iter().enumerate() {
        let block = &outcomes[i * per_value..(i + 1) * per_value];
        for (j, &scheme) in spec.schemes.iter().enumerate() {
            let runs: Vec<Result<RunOutcome>> = block.iter().skip(j).step_by(spec.schemes.len()).cloned().collect();
            rows.push(aggregate(scheme, value, &runs));
        }
    }
    Ok(SweepResult {
        variable: spec.sweep_variable,
        rows,
    })
}
