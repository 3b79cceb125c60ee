//! User placement and imperfect-CSI channel sampling.
//!
//! Every entry of a user's channel in a phase is `A * zeta` with
//! `A = sqrt(C0) d^(-eps/2)` and `zeta ~ CN(0, 1)`. The access point sees the
//! estimate `h_hat` and the error `h_err = h - h_hat`, where
//!
//! ```text
//! h_hat = A * ((1 - s) zeta + sqrt(s (1 - s)) u),   u ~ CN(0, 1)
//! h_err = A * (s zeta - sqrt(s (1 - s)) u)
//! ```
//!
//! for error variance `s`. The two parts are independent with variances
//! `A^2 (1 - s)` and `A^2 s`, and the true channel `A * zeta` depends only on
//! the seed, so sweeps over `s` see the same physical channels.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::{CVector, C64};

/// One of the two time slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    One,
    Two,
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::One, Phase::Two];

    pub fn index(self) -> usize {
        match self {
            Phase::One => 0,
            Phase::Two => 1,
        }
    }

    /// The complementary phase.
    pub fn other(self) -> Phase {
        match self {
            Phase::One => Phase::Two,
            Phase::Two => Phase::One,
        }
    }

    pub fn from_index(i: usize) -> Result<Phase> {
        match i {
            0 => Ok(Phase::One),
            1 => Ok(Phase::Two),
            _ => Err(Error::Index {
                what: "phase",
                index: i,
                limit: 2,
            }),
        }
    }
}

/// Estimated channels and estimation errors of every user in both phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub distances: Vec<f64>,
    h_hat: [Vec<CVector>; 2],
    h_err: [Vec<CVector>; 2],
    pub seed: u64,
}

impl ChannelRealization {
    /// Builds a realization from explicit vectors, `[phase][user]`.
    pub fn from_parts(
        distances: Vec<f64>,
        h_hat: [Vec<CVector>; 2],
        h_err: [Vec<CVector>; 2],
        seed: u64,
    ) -> Result<Self> {
        let k = distances.len();
        let m = h_hat[0].first().map(|v| v.len()).unwrap_or(0);
        let shapes_ok = h_hat
            .iter()
            .chain(h_err.iter())
            .all(|per_user| per_user.len() == k && per_user.iter().all(|v| v.len() == m));
        if !shapes_ok || m == 0 {
            return Err(Error::Config(
                "channel arrays must be [2][K] vectors of one common length M > 0".into(),
            ));
        }
        Ok(ChannelRealization {
            distances,
            h_hat,
            h_err,
            seed,
        })
    }

    /// Perfect-CSI realization (zero error) from estimated channels.
    pub fn perfect(distances: Vec<f64>, h: [Vec<CVector>; 2]) -> Result<Self> {
        let zeros = [
            h[0].iter().map(|v| CVector::zeros(v.len())).collect(),
            h[1].iter().map(|v| CVector::zeros(v.len())).collect(),
        ];
        Self::from_parts(distances, h, zeros, 0)
    }

    pub fn num_users(&self) -> usize {
        self.distances.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.h_hat[0][0].len()
    }

    pub fn h_hat(&self, k: usize, l: Phase) -> &CVector {
        &self.h_hat[l.index()][k]
    }

    pub fn h_err(&self, k: usize, l: Phase) -> &CVector {
        &self.h_err[l.index()][k]
    }

    /// The physical DL channel `h_hat + h_err`.
    pub fn true_channel(&self, k: usize, l: Phase) -> CVector {
        self.h_hat(k, l) + self.h_err(k, l)
    }

    /// Returns a copy with every channel replaced by `f(h_hat, h_err)`.
    pub fn map_channels(&self, mut f: impl FnMut(&CVector, &CVector) -> (CVector, CVector)) -> Self {
        let mut out = self.clone();
        for l in 0..2 {
            for k in 0..self.num_users() {
                let (a, b) = f(&self.h_hat[l][k], &self.h_err[l][k]);
                out.h_hat[l][k] = a;
                out.h_err[l][k] = b;
            }
        }
        out
    }
}

/// Estimated UL channel `conj(h_hat)` of user `k` in phase `l` (TDD reciprocity).
pub fn ul_estimated_channel(real: &ChannelRealization, k: usize, l: usize) -> Result<CVector> {
    let phase = Phase::from_index(l)?;
    if k >= real.num_users() {
        return Err(Error::Index {
            what: "user",
            index: k,
            limit: real.num_users(),
        });
    }
    Ok(real.h_hat(k, phase).conjugate())
}

fn standard_complex(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws user positions and channels for `cfg` from one ChaCha stream keyed by `seed`.
///
/// Draw order is fixed: K radii, then `(phase, user, antenna)` pairs of
/// `(zeta, u)`. The result does not depend on thread count or call order.
pub fn sample_realization(cfg: &SystemConfig, seed: u64) -> Result<ChannelRealization> {
    if cfg.d_min > cfg.r_t {
        return Err(Error::Config(format!(
            "d_min {} exceeds r_t {}",
            cfg.d_min, cfg.r_t
        )));
    }
    if cfg.k == 0 || cfg.m == 0 {
        return Err(Error::Config("K and M must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r0, r1) = (cfg.d_min * cfg.d_min, cfg.r_t * cfg.r_t);
    let distances: Vec<f64> = (0..cfg.k)
        .map(|_| {
            let u: f64 = rng.random();
            (u * (r1 - r0) + r0).sqrt().clamp(cfg.d_min, cfg.r_t)
        })
        .collect();

    let s = cfg.sigma2_e;
    let mix = (s * (1.0 - s)).sqrt();
    let mut h_hat: [Vec<CVector>; 2] = [Vec::with_capacity(cfg.k), Vec::with_capacity(cfg.k)];
    let mut h_err: [Vec<CVector>; 2] = [Vec::with_capacity(cfg.k), Vec::with_capacity(cfg.k)];
    for l in 0..2 {
        for &d in &distances {
            let a = cfg.amplitude_gain(d);
            let mut est = DVector::zeros(cfg.m);
            let mut err = DVector::zeros(cfg.m);
            for i in 0..cfg.m {
                let zeta = standard_complex(&mut rng);
                let u = standard_complex(&mut rng);
                est[i] = (zeta * (1.0 - s) + u * mix) * a;
                err[i] = (zeta * s - u * mix) * a;
            }
            h_hat[l].push(est);
            h_err[l].push(err);
        }
    }
    Ok(ChannelRealization {
        distances,
        h_hat,
        h_err,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn zero_error_variance_gives_zero_error_vectors() {
        let real = sample_realization(&cfg(), 3).unwrap();
        for l in Phase::ALL {
            for k in 0..4 {
                assert!(real.h_err(k, l).iter().all(|z| z.norm() == 0.0));
            }
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut c = cfg();
        c.sigma2_e = 0.1;
        assert_eq!(
            sample_realization(&c, 99).unwrap(),
            sample_realization(&c, 99).unwrap()
        );
        assert_ne!(
            sample_realization(&c, 99).unwrap(),
            sample_realization(&c, 100).unwrap()
        );
    }

    #[test]
    fn distances_stay_in_the_annulus() {
        let mut c = cfg();
        c.k = 64;
        for seed in 0..20 {
            let real = sample_realization(&c, seed).unwrap();
            assert!(real.distances.iter().all(|&d| d >= c.d_min && d <= c.r_t));
        }
    }

    #[test]
    fn true_channel_is_exact_sum() {
        let mut c = cfg();
        c.sigma2_e = 0.01;
        let real = sample_realization(&c, 5).unwrap();
        for l in Phase::ALL {
            for k in 0..c.k {
                let diff = real.true_channel(k, l) - (real.h_hat(k, l) + real.h_err(k, l));
                assert_eq!(diff.norm(), 0.0);
            }
        }
    }

    #[test]
    fn invalid_geometry_is_a_config_error() {
        let mut c = cfg();
        c.d_min = 11.0;
        assert!(matches!(sample_realization(&c, 0), Err(Error::Config(_))));
    }

    #[test]
    fn ul_channel_is_conjugate_and_checks_indices() {
        let h = CVector::from_vec(vec![C64::new(1.0, 0.0)]);
        let z = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let real = ChannelRealization::perfect(vec![1.0], [vec![h.clone()], vec![h.clone()]]).unwrap();
        let g = ul_estimated_channel(&real, 0, 0).unwrap();
        assert_eq!(g[0], C64::new(1.0, -0.0));
        assert!(ul_estimated_channel(&real, 1, 0).is_err());
        assert!(ul_estimated_channel(&real, 0, 2).is_err());

        let real = ChannelRealization::perfect(vec![1.0], [vec![z.clone()], vec![z]]).unwrap();
        assert!(ul_estimated_channel(&real, 0, 1).unwrap().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn conjugation_is_an_involution() {
        let real = sample_realization(&cfg(), 8).unwrap();
        let g = ul_estimated_channel(&real, 2, 1).unwrap();
        assert_eq!(g.conjugate(), *real.h_hat(2, Phase::Two));
    }
}
