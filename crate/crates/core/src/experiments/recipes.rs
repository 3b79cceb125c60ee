//! Canned sweeps for the simulation figures.
//!
//! Every recipe starts from the defaults (r_T = 10 m, K = M = 4, beta = 0.7,
//! noise -80 dBm, P_TH = 7 dBm, C0 = -10 dB) and uses 1000 realizations.
//! Transmit powers are read as dBm throughout.

use super::{ExperimentSpec, Scheme, SweepVariable};
use crate::config::{dbm_to_watts, SystemConfig};
use crate::error::{Error, Result};

pub const FIGURES: [&str; 8] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"];

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

fn small_network(cfg: &mut SystemConfig) {
    cfg.k = 2;
    cfg.m = 2;
}

/// The sweep behind one figure.
///
/// - `fig3`: sum-rate against the fixed split `tau1` at 10 dBm.
/// - `fig4`, `fig5`: iteration counts of the fixed-split and optimal
///   solvers at -10 and 10 dBm (`mean_iters` column).
/// - `fig6`: per-user harvest against CSI error, K = M = 2, 0 dBm.
/// - `fig7`: per-user harvest against transmit power, K = M = 2.
/// - `fig8`: sum-rate against transmit power, all four schemes.
/// - `fig9`: sum-rate against the self-interference variance at 0 dBm.
/// - `fig10`: sum-rate against the number of users at 0 dBm. The published
///   caption also lists K = 4; the recipe sweeps K.
pub fn figure_recipe(name: &str) -> Result<ExperimentSpec> {
    let mut base = SystemConfig::default();
    let fixed = vec![Scheme::FdFixed, Scheme::HdFixed];
    let opt = vec![Scheme::FdOpt, Scheme::HdOpt];
    let (variable, values, schemes) = match name {
        "fig3" => {
            base.p_dl_max = dbm_to_watts(10.0);
            (SweepVariable::Tau1Fixed, range(0.05, 0.95, 0.05), fixed)
        }
        "fig4" => (SweepVariable::PDlDbm, vec![-10.0, 10.0], fixed),
        "fig5" => (SweepVariable::PDlDbm, vec![-10.0, 10.0], opt),
        "fig6" => {
            small_network(&mut base);
            (SweepVariable::Sigma2E, vec![0.0, 0.01, 0.1], vec![Scheme::FdOpt])
        }
        "fig7" => {
            small_network(&mut base);
            (SweepVariable::PDlDbm, range(0.0, 60.0, 10.0), vec![Scheme::FdOpt])
        }
        "fig8" => (SweepVariable::PDlDbm, range(-20.0, 40.0, 5.0), Scheme::ALL.to_vec()),
        "fig9" => (SweepVariable::Sigma2RsiDb, range(-130.0, -50.0, 10.0), Scheme::ALL.to_vec()),
        "fig10" => (SweepVariable::K, range(2.0, 20.0, 2.0), fixed),
        other => {
            return Err(Error::Config(format!(
                "unknown figure '{other}', expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    Ok(ExperimentSpec {
        base,
        sweep_variable: variable,
        sweep_values: values,
        n_realizations: 1000,
        schemes,
        seed0: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_recipe_is_valid() {
        for name in FIGURES {
            figure_recipe(name).unwrap().validate().unwrap();
        }
        assert!(figure_recipe("fig11").is_err());
    }

    #[test]
    fn harvest_recipes_use_the_small_network() {
        let s = figure_recipe("fig7").unwrap();
        assert_eq!((s.base.k, s.base.m), (2, 2));
        assert_eq!(s.sweep_values.last(), Some(&60.0));
    }
}
