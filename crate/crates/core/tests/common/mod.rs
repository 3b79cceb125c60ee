#![allow(dead_code)]

use fdwpcn::assign::{coordinate_assign, enumerate_assign};
use fdwpcn::config::{Duplex, SystemConfig};
use fdwpcn::engine::{algorithm1, algorithm1_with, Allocation, AssignmentPolicy, AssignmentScorer, SolverOptions, SolveReport};
use fdwpcn::engine::hd_assignment;
use fdwpcn::scenario::{sample_realization, ChannelRealization, Phase};
use fdwpcn::wmmse::mse;
use fdwpcn::{CVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest `|(1 + gamma) e - 1|` over UL users, gamma and e recomputed here
/// from the stored filters.
pub fn rate_mse_gap(alloc: &Allocation, real: &ChannelRealization, cfg: &SystemConfig) -> f64 {
    let mut worst: f64 = 0.0;
    for l in Phase::ALL {
        let members = alloc.assignment.ul_group(l);
        let st = &alloc.ul_state[l.index()];
        let g: Vec<CVector> = members.iter().map(|&u| real.h_hat(u, l).conjugate()).collect();
        let p: Vec<f64> = members.iter().map(|&u| st.p_ul[u]).collect();
        let rsi = match alloc.mode {
            Duplex::Fd => cfg.sigma2_rsi * alloc.beams[l.index()].w.norm_squared(),
            Duplex::Hd => 0.0,
        };
        for (i, &u) in members.iter().enumerate() {
            let v = &st.v[u];
            let mut interference = 0.0;
            for j in 0..members.len() {
                if j != i {
                    interference += p[j] * v.dotc(&g[j]).norm_sqr();
                }
            }
            let den = interference + (rsi + cfg.sigma2_ul) * v.norm_squared();
            let gamma = if den > 0.0 { p[i] * v.dotc(&g[i]).norm_sqr() / den } else { 0.0 };
            let e = mse(v, &g, &p, st.c_noise, i);
            worst = worst.max(((1.0 + gamma) * e - 1.0).abs());
        }
    }
    worst
}

/// Smallest `(w^H B w - P u^H B u) / (P lambda_max)` over `n` random unit
/// vectors `u`, for each phase's beam. Non-negative when the beam is maximal.
pub fn rayleigh_margin(alloc: &Allocation, p_dl: f64, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for beam in &alloc.beams {
        let b = &beam.b_matrix;
        let m = beam.w.len();
        let quad = |x: &CVector| x.dotc(&(b * x)).re;
        let scale = p_dl * beam.lambda_dl.max(f64::MIN_POSITIVE);
        let best = quad(&beam.w);
        for _ in 0..n {
            let u = CVector::from_fn(m, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let u = &u / C64::from(u.norm());
            worst = worst.min((best - p_dl * quad(&u)) / scale);
        }
    }
    worst
}

/// Largest relative increase of the traced WMMSE objective between iterations.
pub fn gamma_u_rise(report: &SolveReport) -> f64 {
    report
        .trace
        .windows(2)
        .map(|w| (w[1].gamma_u - w[0].gamma_u) / w[0].gamma_u.abs().max(1e-300))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `enumerated - swept` score at the solver's output, for an assignment step
/// started from the output assignment. Non-negative when the sweep is
/// bounded by enumeration.
pub fn enumeration_gap(cfg: &SystemConfig, seed: u64) -> f64 {
    let real = sample_realization(cfg, seed).unwrap();
    let (alloc, _) = algorithm1(cfg, &real, 0.5).unwrap();
    let scorer = AssignmentScorer::new(&alloc, &real, cfg).unwrap();
    let (_, swept) = coordinate_assign(&scorer, &alloc.assignment);
    let (_, best) = enumerate_assign(&scorer, cfg.k).unwrap();
    best - swept
}

/// Whether HD equals FD with zero self-interference and the HD grouping, on
/// every field except the mode tag.
pub fn hd_matches_fd_without_rsi(cfg: &SystemConfig, seed: u64, tau1: f64) -> bool {
    let mut hd = cfg.clone();
    hd.duplex = Duplex::Hd;
    let mut fd = cfg.clone();
    fd.duplex = Duplex::Fd;
    fd.sigma2_rsi = 0.0;
    let real = sample_realization(cfg, seed).unwrap();
    let (a_hd, r_hd) = algorithm1(&hd, &real, tau1).unwrap();
    let opts = SolverOptions {
        assignment: AssignmentPolicy::Fixed(hd_assignment(cfg.k)),
        ..SolverOptions::default()
    };
    let (mut a_fd, r_fd) = algorithm1_with(&fd, &real, tau1, &opts).unwrap();
    a_fd.mode = Duplex::Hd;
    a_fd == a_hd && r_fd == r_hd
}

pub fn median(xs: &mut [usize]) -> usize {
    xs.sort_unstable();
    xs[xs.len() / 2]
}
