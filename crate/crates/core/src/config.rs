//! Scenario constants and the flat `key = value` configuration format.
//!
//! Keys are the [`SystemConfig`] field names. Power-valued keys also accept a
//! `_dbm` suffix (`p_dl_max_dbm = 10`), and `sigma2_rsi` accepts `_db`, so a
//! file can be written in the units a link budget is usually quoted in. All
//! values are held in watts (or linear gain) internally.
//!
//! ```
//! use fdwpcn::config::{SystemConfig, Duplex};
//!
//! let cfg = SystemConfig::parse("K = 2\nM = 2\np_dl_max_dbm = 30\nduplex = hd\n").unwrap();
//! assert_eq!(cfg.k, 2);
//! assert!((cfg.p_dl_max - 1.0).abs() < 1e-12);
//! assert_eq!(cfg.duplex, Duplex::Hd);
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Energy-harvester transfer characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhModel {
    /// `beta * min(P_rx, P_TH)`.
    NonLinear,
    /// `beta * P_rx`.
    Linear,
}

/// Operating mode of the hybrid access point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Duplex {
    Fd,
    Hd,
}

/// How the DL power budget is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlBudget {
    /// Each phase radiates `p_dl_max`.
    PerPhase,
    /// The two phases share `p_dl_max`, half each.
    Split,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => [$($name:literal),+]),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($($name)|+ => Ok($ty::$variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} value '{}'", stringify!($ty), other
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self { $($ty::$variant => [$($name),+][0],)+ };
                f.write_str(name)
            }
        }
    };
}

text_enum!(EhModel { NonLinear => ["nonlinear", "non_linear", "non-linear"], Linear => ["linear"] });
text_enum!(Duplex { Fd => ["fd"], Hd => ["hd"] });
text_enum!(DlBudget { PerPhase => ["per_phase", "per-phase"], Split => ["split"] });

/// All constants describing one network scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of mobile users.
    pub k: usize,
    /// Antennas per array half at the access point.
    pub m: usize,
    /// DL transmit power, watts.
    pub p_dl_max: f64,
    /// UL receiver noise power, watts.
    pub sigma2_ul: f64,
    /// Residual self-interference channel variance (linear gain).
    pub sigma2_rsi: f64,
    /// EH efficiency; one entry broadcasts to every user, otherwise one per user.
    pub beta: Vec<f64>,
    /// EH saturation threshold, watts.
    pub p_th: f64,
    /// Attenuation at the 1 m reference distance, dB (power).
    pub c0_db: f64,
    /// Path-loss exponent.
    pub eps_h: f64,
    /// Deployment radius, meters.
    pub r_t: f64,
    /// Minimum user distance, meters.
    pub d_min: f64,
    /// Channel estimation error variance.
    pub sigma2_e: f64,
    pub eh_model: EhModel,
    pub duplex: Duplex,
    pub dl_budget: DlBudget,
    /// Sum-rate convergence tolerance for the fixed-slot solver, bits.
    pub tol_rate: f64,
    /// Golden-section interval tolerance.
    pub tol_tau: f64,
    pub max_iters: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            k: 4,
            m: 4,
            p_dl_max: dbm_to_watts(0.0),
            sigma2_ul: dbm_to_watts(-80.0),
            sigma2_rsi: db_to_linear(-80.0),
            beta: vec![0.7],
            p_th: dbm_to_watts(7.0),
            c0_db: -10.0,
            eps_h: 3.0,
            r_t: 10.0,
            d_min: 1.0,
            sigma2_e: 0.0,
            eh_model: EhModel::NonLinear,
            duplex: Duplex::Fd,
            dl_budget: DlBudget::PerPhase,
            tol_rate: 1e-4,
            tol_tau: 1e-3,
            max_iters: 50,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: '{value}' is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: '{value}' is not a non-negative integer")))
}

/// Prefixes a parse error with its line number.
pub(crate) fn at_line(line: usize, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("line {line}: {msg}")),
        other => Error::Config(format!("line {line}: {other}")),
    }
}

/// Iterates `key = value` pairs of a flat text file, skipping blanks and `#` comments.
pub(crate) fn kv_lines(text: &str) -> impl Iterator<Item = Result<(usize, &str, &str)>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        Some(match line.split_once('=') {
            Some((k, v)) => Ok((i + 1, k.trim(), v.trim())),
            None => Err(Error::Config(format!("line {}: expected key = value", i + 1))),
        })
    })
}

impl SystemConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Parses a full configuration on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        for item in kv_lines(text) {
            let (line, key, value) = item?;
            cfg.set(key, value)
                .map_err(|e| at_line(line, e))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field by name. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "K" | "k" => self.k = parse_usize(key, value)?,
            "M" | "m" => self.m = parse_usize(key, value)?,
            "p_dl_max" => self.p_dl_max = parse_f64(key, value)?,
            "p_dl_max_dbm" => self.p_dl_max = dbm_to_watts(parse_f64(key, value)?),
            "sigma2_ul" => self.sigma2_ul = parse_f64(key, value)?,
            "sigma2_ul_dbm" => self.sigma2_ul = dbm_to_watts(parse_f64(key, value)?),
            "sigma2_rsi" => self.sigma2_rsi = parse_f64(key, value)?,
            "sigma2_rsi_db" => self.sigma2_rsi = db_to_linear(parse_f64(key, value)?),
            "beta" => {
                self.beta = value
                    .split(',')
                    .map(|v| parse_f64(key, v))
                    .collect::<Result<Vec<_>>>()?
            }
            "p_th" => self.p_th = parse_f64(key, value)?,
            "p_th_dbm" => self.p_th = dbm_to_watts(parse_f64(key, value)?),
            "c0_db" => self.c0_db = parse_f64(key, value)?,
            "eps_h" => self.eps_h = parse_f64(key, value)?,
            "r_t" => self.r_t = parse_f64(key, value)?,
            "d_min" => self.d_min = parse_f64(key, value)?,
            "sigma2_e" => self.sigma2_e = parse_f64(key, value)?,
            "eh_model" => self.eh_model = value.parse()?,
            "duplex" => self.duplex = value.parse()?,
            "dl_budget" => self.dl_budget = value.parse()?,
            "tol_rate" => self.tol_rate = parse_f64(key, value)?,
            "tol_tau" => self.tol_tau = parse_f64(key, value)?,
            "max_iters" => self.max_iters = parse_usize(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k == 0 || self.m == 0 {
            return fail(format!("K and M must be positive (K={}, M={})", self.k, self.m));
        }
        if self.beta.len() != 1 && self.beta.len() != self.k {
            return fail(format!(
                "beta has {} entries, expected 1 or K={}",
                self.beta.len(),
                self.k
            ));
        }
        if let Some(b) = self.beta.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
            return fail(format!("beta {b} outside (0, 1]"));
        }
        for (name, v) in [
            ("p_dl_max", self.p_dl_max),
            ("sigma2_ul", self.sigma2_ul),
            ("sigma2_rsi", self.sigma2_rsi),
            ("p_th", self.p_th),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{name} must be a finite non-negative power, got {v}"));
            }
        }
        if !(self.sigma2_ul > 0.0) {
            return fail("sigma2_ul must be positive".into());
        }
        if !(self.sigma2_e >= 0.0 && self.sigma2_e < 1.0) {
            return fail(format!("sigma2_e {} outside [0, 1)", self.sigma2_e));
        }
        if !(self.d_min >= 1.0) {
            return fail(format!("d_min {} below the 1 m reference distance", self.d_min));
        }
        if self.d_min > self.r_t {
            return fail(format!("d_min {} exceeds r_t {}", self.d_min, self.r_t));
        }
        if !(self.eps_h >= 0.0) || !self.c0_db.is_finite() {
            return fail("path-loss parameters must be finite, eps_h >= 0".into());
        }
        if !(self.tol_rate > 0.0) || !(self.tol_tau > 0.0 && self.tol_tau < 0.5) {
            return fail("tol_rate must be > 0 and tol_tau in (0, 0.5)".into());
        }
        if self.max_iters == 0 {
            return fail("max_iters must be positive".into());
        }
        Ok(())
    }

    pub fn beta_of(&self, user: usize) -> f64 {
        if self.beta.len() == 1 {
            self.beta[0]
        } else {
            self.beta[user]
        }
    }

    /// Power radiated by the energy beam in each phase.
    pub fn per_phase_dl_power(&self) -> f64 {
        match self.dl_budget {
            DlBudget::PerPhase => self.p_dl_max,
            DlBudget::Split => 0.5 * self.p_dl_max,
        }
    }

    /// Amplitude path-loss coefficient `sqrt(C0) * d^(-eps/2)`.
    pub fn amplitude_gain(&self, distance: f64) -> f64 {
        db_to_linear(self.c0_db).sqrt() * distance.powf(-self.eps_h / 2.0)
    }

    /// Serializes to the same `key = value` format accepted by [`SystemConfig::parse`].
    pub fn to_kv_string(&self) -> String {
        let beta = self
            .beta
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "K = {}\nM = {}\np_dl_max = {:e}\nsigma2_ul = {:e}\nsigma2_rsi = {:e}\nbeta = {}\n\
             p_th = {:e}\nc0_db = {}\neps_h = {}\nr_t = {}\nd_min = {}\nsigma2_e = {}\n\
             eh_model = {}\nduplex = {}\ndl_budget = {}\ntol_rate = {:e}\ntol_tau = {:e}\nmax_iters = {}\n",
            self.k,
            self.m,
            self.p_dl_max,
            self.sigma2_ul,
            self.sigma2_rsi,
            beta,
            self.p_th,
            self.c0_db,
            self.eps_h,
            self.r_t,
            self.d_min,
            self.sigma2_e,
            self.eh_model,
            self.duplex,
            self.dl_budget,
            self.tol_rate,
            self.tol_tau,
            self.max_iters
        )
    }
}
