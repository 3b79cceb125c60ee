//! JSON form of a solved allocation.
//!
//! The file carries the configuration and seed it was solved for, so the
//! auditor can regenerate the channels and recheck every constraint.

use serde::{Deserialize, Serialize};

use crate::assign::Assignment;
use crate::beamform::BeamformerSolution;
use crate::config::{Duplex, SystemConfig};
use crate::engine::Allocation;
use crate::error::{Error, Result};
use crate::scenario::{ChannelRealization, Phase};
use crate::wmmse::UlState;
use crate::{CMatrix, CVector, C64};

type Complex = [f64; 2];

fn to_pairs(v: &CVector) -> Vec<Complex> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(v: &[Complex]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|p| C64::new(p[0], p[1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SavedBeam {
    w: Vec<Complex>,
    lambda_dl: f64,
    degenerate: bool,
    /// Row-major.
    b_matrix: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SavedUl {
    v: Vec<Vec<Complex>>,
    theta: Vec<f64>,
    p_ul: Vec<f64>,
    lambda_ul: Vec<f64>,
    q_hat: Vec<f64>,
    c_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedAllocation {
    /// `key = value` configuration text.
    pub config: String,
    pub seed: u64,
    mode: String,
    tau: [f64; 2],
    /// Harvest phase of each user, 1 or 2.
    harvest_phase: Vec<u8>,
    beams: Vec<SavedBeam>,
    ul_state: Vec<SavedUl>,
}

impl SavedAllocation {
    pub fn new(alloc: &Allocation, cfg: &SystemConfig, seed: u64) -> Self {
        let k = alloc.assignment.num_users();
        SavedAllocation {
            config: cfg.to_kv_string(),
            seed,
            mode: alloc.mode.to_string(),
            tau: alloc.tau,
            harvest_phase: (0..k)
                .map(|u| alloc.assignment.harvest_phase(u).index() as u8 + 1)
                .collect(),
            beams: alloc
                .beams
                .iter()
                .map(|b| SavedBeam {
                    w: to_pairs(&b.w),
                    lambda_dl: b.lambda_dl,
                    degenerate: b.degenerate,
                    b_matrix: b.b_matrix.transpose().iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
            ul_state: alloc
                .ul_state
                .iter()
                .map(|s| SavedUl {
                    v: s.v.iter().map(to_pairs).collect(),
                    theta: s.theta.clone(),
                    p_ul: s.p_ul.clone(),
                    lambda_ul: s.lambda_ul.clone(),
                    q_hat: s.q_hat.clone(),
                    c_noise: s.c_noise,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("allocation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("saved allocation: {e}")))
    }

    pub fn config(&self) -> Result<SystemConfig> {
        SystemConfig::parse(&self.config)
    }

    pub fn allocation(&self) -> Result<Allocation> {
        let bad = |msg: &str| Error::Config(format!("saved allocation: {msg}"));
        if self.beams.len() != 2 || self.ul_state.len() != 2 {
            return Err(bad("expected two phases"));
        }
        let harvest = self
            .harvest_phase
            .iter()
            .map(|&p| match p {
                1 => Ok(Phase::One),
                2 => Ok(Phase::Two),
                _ => Err(bad("harvest phase must be 1 or 2")),
            })
            .collect::<Result<Vec<_>>>()?;
        let beam = |b: &SavedBeam| -> Result<BeamformerSolution> {
            let m = b.w.len();
            if b.b_matrix.len() != m * m {
                return Err(bad("B matrix size does not match the beam"));
            }
            Ok(BeamformerSolution {
                w: from_pairs(&b.w),
                lambda_dl: b.lambda_dl,
                degenerate: b.degenerate,
                b_matrix: CMatrix::from_row_iterator(m, m, b.b_matrix.iter().map(|p| C64::new(p[0], p[1]))),
            })
        };
        let ul = |s: &SavedUl| UlState {
            v: s.v.iter().map(|v| from_pairs(v)).collect(),
            theta: s.theta.clone(),
            p_ul: s.p_ul.clone(),
            lambda_ul: s.lambda_ul.clone(),
            q_hat: s.q_hat.clone(),
            c_noise: s.c_noise,
        };
        Ok(Allocation {
            assignment: Assignment::from_harvest_phases(harvest),
            tau: self.tau,
            beams: [beam(&self.beams[0])?, beam(&self.beams[1])?],
            ul_state: [ul(&self.ul_state[0]), ul(&self.ul_state[1])],
            mode: self.mode.parse::<Duplex>()?,
        })
    }

    /// Configuration, channels and allocation, ready for the auditor.
    pub fn restore(&self) -> Result<(SystemConfig, ChannelRealization, Allocation)> {
        let cfg = self.config()?;
        let real = crate::scenario::sample_realization(&cfg, self.seed)?;
        Ok((cfg, real, self.allocation()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{algorithm1, audit};
    use crate::scenario::sample_realization;

    #[test]
    fn json_round_trip_is_exact() {
        let cfg = SystemConfig::default();
        let real = sample_realization(&cfg, 9).unwrap();
        let (alloc, _) = algorithm1(&cfg, &real, 0.5).unwrap();
        let saved = SavedAllocation::new(&alloc, &cfg, 9);
        let back = SavedAllocation::from_json(&saved.to_json()).unwrap();
        let (cfg2, real2, alloc2) = back.restore().unwrap();
        assert_eq!(alloc2, alloc);
        assert_eq!(real2, real);
        assert!(audit(&alloc2, &real2, &cfg2).passed());
    }
}
