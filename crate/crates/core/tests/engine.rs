use fdwpcn::config::{dbm_to_watts, Duplex, SystemConfig};
use fdwpcn::engine::{algorithm1, algorithm2, audit};
use fdwpcn::scenario::{sample_realization, ChannelRealization, Phase};
use fdwpcn::{CVector, C64};

fn cv(xs: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(xs.len(), xs.iter().map(|&(a, b)| C64::new(a, b)))
}

/// Conjugated inner product `a^H b` written out as scalar sums.
fn inner(a: &CVector, b: &CVector) -> (f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..a.len() {
        re += a[i].re * b[i].re + a[i].im * b[i].im;
        im += a[i].re * b[i].im - a[i].im * b[i].re;
    }
    (re, im)
}

fn abs2(z: (f64, f64)) -> f64 {
    z.0 * z.0 + z.1 * z.1
}

#[test]
fn two_user_solve_matches_scalar_recomputation() {
    let h1 = [cv(&[(0.02, 0.01), (-0.015, 0.03)]), cv(&[(0.004, -0.002), (0.001, 0.006)])];
    let h2 = [cv(&[(-0.01, 0.025), (0.02, 0.005)]), cv(&[(0.003, 0.004), (-0.005, 0.002)])];
    let real = ChannelRealization::perfect(
        vec![2.0, 5.0],
        [vec![h1[0].clone(), h1[1].clone()], vec![h2[0].clone(), h2[1].clone()]],
    )
    .unwrap();
    let mut cfg = SystemConfig::default();
    cfg.k = 2;
    cfg.m = 2;
    cfg.p_dl_max = dbm_to_watts(20.0);
    let tau = [0.4, 0.6];
    let (alloc, rep) = algorithm1(&cfg, &real, tau[0]).unwrap();
    assert!(audit(&alloc, &real, &cfg).passed());

    let beta = 0.7;
    let p_th = dbm_to_watts(7.0);
    let mut total = 0.0;
    for u in 0..2 {
        let hl = alloc.assignment.harvest_phase(u);
        let ul = hl.other();
        let h = real.h_hat(u, hl);
        let w = &alloc.beams[hl.index()].w;
        let received = abs2(inner(h, w));
        let q = tau[hl.index()] * beta * received.min(p_th);
        let q_hat = q / tau[ul.index()];
        let p = alloc.p_ul(u);
        assert!(p <= q_hat * (1.0 + 1e-12));
        assert!((rep.per_user_harvest[u] - beta * received.min(p_th)).abs() <= 1e-15 * p_th);

        // SNR from the stored filter, interference from the other UL user if any.
        let st = &alloc.ul_state[ul.index()];
        let v = &st.v[u];
        let g = h_conj(real.h_hat(u, ul));
        let mut den = cfg.sigma2_ul * abs2_norm(v) + cfg.sigma2_rsi * abs2_norm(v) * abs2_norm(&alloc.beams[ul.index()].w);
        for j in 0..2 {
            if j != u && alloc.assignment.ul_phase(j) == ul {
                den += st.p_ul[j] * abs2(inner(v, &h_conj(real.h_hat(j, ul))));
            }
        }
        let gamma = p * abs2(inner(v, &g)) / den;
        let rate = tau[ul.index()] * (1.0 + gamma).log2();
        assert!((rate - rep.per_user_rate[u]).abs() <= 1e-9 * rate.max(1.0), "user {u}: {rate} vs {}", rep.per_user_rate[u]);
        total += rate;
    }
    assert!((total - rep.sum_rate).abs() <= 1e-9 * total.max(1.0));
}

fn h_conj(h: &CVector) -> CVector {
    h.map(|z| z.conj())
}

fn abs2_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.re * z.re + z.im * z.im).sum()
}

#[test]
fn hd_puts_everyone_in_one_group_and_ignores_rsi() {
    let mut cfg = SystemConfig::default();
    cfg.duplex = Duplex::Hd;
    let real = sample_realization(&cfg, 11).unwrap();
    let (alloc, _) = algorithm1(&cfg, &real, 0.5).unwrap();
    assert!(alloc.assignment.harvest_group(Phase::Two).is_empty());
    assert_eq!(alloc.ul_state[0].c_noise, cfg.sigma2_ul);
    assert_eq!(alloc.ul_state[1].c_noise, cfg.sigma2_ul);
    let mut louder = cfg.clone();
    louder.sigma2_rsi = 1.0;
    let (_, a) = algorithm1(&cfg, &real, 0.5).unwrap();
    let (_, b) = algorithm1(&louder, &real, 0.5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csi_error_does_not_help_on_average() {
    let mut perfect = SystemConfig::default();
    perfect.p_dl_max = dbm_to_watts(10.0);
    let mut noisy = perfect.clone();
    noisy.sigma2_e = 0.1;
    let (mut a, mut b) = (0.0, 0.0);
    for seed in 1..=200 {
        a += algorithm1(&perfect, &sample_realization(&perfect, seed).unwrap(), 0.5).unwrap().1.sum_rate;
        b += algorithm1(&noisy, &sample_realization(&noisy, seed).unwrap(), 0.5).unwrap().1.sum_rate;
    }
    assert!(b <= a, "mean with error {} vs perfect {}", b / 200.0, a / 200.0);
}

#[test]
fn coarse_golden_search_needs_ten_reductions() {
    let mut cfg = SystemConfig::default();
    cfg.tol_tau = 1e-2;
    cfg.p_dl_max = dbm_to_watts(10.0);
    for seed in 1..=10 {
        let real = sample_realization(&cfg, seed).unwrap();
        let (_, rep, trace) = algorithm2(&cfg, &real).unwrap();
        assert!(trace.iterations <= 10);
        assert_eq!(rep.sum_rate, trace.f_star);
        assert_eq!(trace.evaluations[0].0, 0.5);
    }
}

#[test]
fn converges_within_ten_iterations_at_10_dbm() {
    let mut cfg = SystemConfig::default();
    cfg.p_dl_max = dbm_to_watts(10.0);
    let mut iters: Vec<usize> = (1..=100)
        .map(|seed| {
            let real = sample_realization(&cfg, seed).unwrap();
            let (_, rep) = algorithm1(&cfg, &real, 0.5).unwrap();
            assert!(rep.converged);
            rep.iterations
        })
        .collect();
    iters.sort_unstable();
    let over = iters.iter().filter(|&&i| i > 10).count();
    assert!(iters[50] <= 5, "median {}", iters[50]);
    assert_eq!(over, 0, "{over} runs needed more than 10 iterations (max {})", iters[99]);
}

#[test]
fn non_convergence_is_reported_not_raised() {
    let mut cfg = SystemConfig::default();
    cfg.max_iters = 1;
    cfg.tol_rate = 1e-300;
    let real = sample_realization(&cfg, 3).unwrap();
    let (alloc, rep) = algorithm1(&cfg, &real, 0.5).unwrap();
    assert_eq!(rep.iterations, 1);
    assert!(!rep.converged || rep.trace[1].sum_rate == rep.trace[0].sum_rate);
    assert!(audit(&alloc, &real, &cfg).passed());
}

#[test]
fn mismatched_realization_is_a_config_error() {
    let cfg = SystemConfig::default();
    let mut other = cfg.clone();
    other.k = 3;
    let real = sample_realization(&other, 1).unwrap();
    assert!(matches!(algorithm1(&cfg, &real, 0.5), Err(fdwpcn::Error::Config(_))));
}
