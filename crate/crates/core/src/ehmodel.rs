//! Harvested energy and the resulting UL power budget.
//!
//! With the block length normalized to one second, a user harvesting in slot
//! `l` collects `q = tau_l * beta * f(|h^H w|^2)` joules and can spend it as the
//! average power `q_hat = q / tau_lhat` in the complementary slot, where `f` is
//! either the identity or saturation at `P_TH`.

use crate::config::EhModel;
use crate::error::{Error, Result};
use crate::CVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestResult {
    /// Energy collected in the harvesting slot, joules per unit block.
    pub q: f64,
    /// UL power budget in the complementary slot, watts.
    pub q_hat: f64,
    /// Incident RF power before the harvester, watts.
    pub received_power: f64,
    /// Power delivered by the harvester while harvesting, `beta * f(received)`.
    pub converted_power: f64,
    /// Whether the received power reached `P_TH` (always false for the linear model).
    pub saturated: bool,
}

/// Received RF power `|h^H w|^2` from one beam.
pub fn received_power(h_true: &CVector, w: &CVector) -> f64 {
    h_true.dotc(w).norm_sqr()
}

/// Evaluates the EH transfer curve on a received power.
pub fn transfer(received: f64, beta: f64, p_th: f64, model: EhModel) -> (f64, bool) {
    match model {
        EhModel::NonLinear if received >= p_th => (beta * p_th, true),
        _ => (beta * received, false),
    }
}

/// Energy harvested through the true channel `h_true` from beam `w`.
pub fn harvested_energy(
    h_true: &CVector,
    w: &CVector,
    tau_l: f64,
    tau_lhat: f64,
    beta: f64,
    p_th: f64,
    model: EhModel,
) -> Result<HarvestResult> {
    let in_open_unit = |t: f64| t > 0.0 && t < 1.0;
    if !in_open_unit(tau_l) || !in_open_unit(tau_lhat) || (tau_l + tau_lhat - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "time split ({tau_l}, {tau_lhat}) must lie in (0,1) and sum to 1"
        )));
    }
    let received = received_power(h_true, w);
    let (p, saturated) = transfer(received, beta, p_th, model);
    let q = tau_l * p;
    Ok(HarvestResult {
        q,
        q_hat: q / tau_lhat,
        received_power: received,
        converted_power: p,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::dbm_to_watts;
    use crate::C64;

    fn v(xs: &[f64]) -> CVector {
        CVector::from_iterator(xs.len(), xs.iter().map(|&x| C64::new(x, 0.0)))
    }

    #[test]
    fn no_beam_no_energy() {
        let r = harvested_energy(&v(&[1.0, 2.0]), &v(&[0.0, 0.0]), 0.5, 0.5, 0.7, 1.0, EhModel::NonLinear)
            .unwrap();
        assert_eq!((r.q, r.q_hat), (0.0, 0.0));
    }

    #[test]
    fn saturated_budget_is_beta_times_threshold() {
        let p_th = dbm_to_watts(7.0);
        let r = harvested_energy(&v(&[1.0]), &v(&[1.0]), 0.5, 0.5, 0.7, p_th, EhModel::NonLinear).unwrap();
        assert!(r.saturated);
        assert!((r.q_hat - 3.5083106353909054e-3).abs() < 1e-15);
        let dbm = crate::config::watts_to_dbm(r.q_hat);
        assert!((dbm - 5.451).abs() < 1e-3, "{dbm}");
    }

    #[test]
    fn linear_region_scalar_case() {
        let p: f64 = 1e-3;
        let r = harvested_energy(&v(&[1.0]), &v(&[p.sqrt()]), 0.5, 0.5, 0.7, dbm_to_watts(7.0), EhModel::NonLinear)
            .unwrap();
        assert!(!r.saturated);
        assert!((r.q_hat - 0.7 * p).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_time_split() {
        for (a, b) in [(0.0, 1.0), (0.4, 0.4), (1.2, -0.2)] {
            assert!(harvested_energy(&v(&[1.0]), &v(&[1.0]), a, b, 0.7, 1.0, EhModel::Linear).is_err());
        }
    }

    #[test]
    fn linear_dominates_nonlinear() {
        let h = v(&[0.3, -0.2]);
        for scale in [0.1, 1.0, 3.0, 10.0] {
            let w = v(&[scale, scale]);
            let lin = harvested_energy(&h, &w, 0.3, 0.7, 0.7, 0.1, EhModel::Linear).unwrap();
            let nl = harvested_energy(&h, &w, 0.3, 0.7, 0.7, 0.1, EhModel::NonLinear).unwrap();
            assert!(lin.q >= nl.q);
            assert_eq!(lin.q == nl.q, nl.received_power <= 0.1);
            assert!(nl.q_hat <= 0.7 * 0.1 * 0.3 / 0.7 + 1e-15);
        }
    }
}
