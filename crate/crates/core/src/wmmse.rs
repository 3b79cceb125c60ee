//! WMMSE block: receive filters, MSEs, weights, UL duals and UL powers.
//!
//! Every function here works on one UL group: the users transmitting in a
//! given phase. Slices are indexed by group member and `k` selects the member
//! being updated. `c_noise` is the filtered noise floor of the phase,
//! `sigma2_rsi * ||w||^2 + sigma2` in FD and `sigma2` in HD.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// UL-side iterate of one phase, indexed by user (entries of users that do
/// not transmit in the phase are zero, with unit weight).
#[derive(Debug, Clone, PartialEq)]
pub struct UlState {
    pub v: Vec<CVector>,
    pub theta: Vec<f64>,
    pub p_ul: Vec<f64>,
    pub lambda_ul: Vec<f64>,
    /// UL power budget available in this phase.
    pub q_hat: Vec<f64>,
    pub c_noise: f64,
}

impl UlState {
    pub fn empty(k: usize, m: usize, c_noise: f64) -> Self {
        UlState {
            v: vec![CVector::zeros(m); k],
            theta: vec![1.0; k],
            p_ul: vec![0.0; k],
            lambda_ul: vec![0.0; k],
            q_hat: vec![0.0; k],
            c_noise,
        }
    }
}

fn covariance(g_hats: &[CVector], p_uls: &[f64], c_noise: f64) -> CMatrix {
    let m = g_hats.first().map(|g| g.len()).unwrap_or(0);
    let mut a = CMatrix::identity(m, m) * C64::new(c_noise, 0.0);
    for (g, &p) in g_hats.iter().zip(p_uls) {
        if p > 0.0 {
            a.gerc(C64::new(p, 0.0), g, g, C64::new(1.0, 0.0));
        }
    }
    a
}

fn check_noise(c_noise: f64) -> Result<()> {
    if c_noise > 0.0 && c_noise.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("noise floor c = {c_noise} must be positive")))
    }
}

fn solve_hermitian(a: CMatrix, rhs: &[CVector]) -> Vec<CVector> {
    match Cholesky::new(a.clone()) {
        Some(chol) => rhs.iter().map(|b| chol.solve(b)).collect(),
        None => {
            let lu = a.lu();
            rhs.iter()
                .map(|b| lu.solve(b).unwrap_or_else(|| CVector::zeros(b.len())))
                .collect()
        }
    }
}

/// MMSE receive filters of every group member from one factorization.
pub fn mmse_filters(g_hats: &[CVector], p_uls: &[f64], c_noise: f64) -> Result<Vec<CVector>> {
    check_noise(c_noise)?;
    if g_hats.is_empty() {
        return Ok(Vec::new());
    }
    let rhs: Vec<CVector> = g_hats
        .iter()
        .zip(p_uls)
        .map(|(g, &p)| g * C64::new(p.max(0.0).sqrt(), 0.0))
        .collect();
    let mut out = solve_hermitian(covariance(g_hats, p_uls, c_noise), &rhs);
    for (v, &p) in out.iter_mut().zip(p_uls) {
        if p <= 0.0 {
            v.fill(C64::new(0.0, 0.0));
        }
    }
    Ok(out)
}

/// MMSE filter `(sum_j p_j g_j g_j^H + c I)^-1 sqrt(p_k) g_k` of member `k`.
pub fn mmse_filter(g_hats: &[CVector], p_uls: &[f64], c_noise: f64, k: usize) -> Result<CVector> {
    check_noise(c_noise)?;
    if k >= g_hats.len() {
        return Err(Error::Index {
            what: "group member",
            index: k,
            limit: g_hats.len(),
        });
    }
    let m = g_hats[k].len();
    if p_uls[k] <= 0.0 {
        return Ok(CVector::zeros(m));
    }
    let rhs = &g_hats[k] * C64::new(p_uls[k].sqrt(), 0.0);
    Ok(solve_hermitian(covariance(g_hats, p_uls, c_noise), &[rhs]).remove(0))
}

/// Mean square error of member `k`'s symbol estimate through filter `v`.
pub fn mse(v: &CVector, g_hats: &[CVector], p_uls: &[f64], c_noise: f64, k: usize) -> f64 {
    let own = C64::new(1.0, 0.0) - v.dotc(&g_hats[k]) * p_uls[k].sqrt();
    let interference: f64 = g_hats
        .iter()
        .zip(p_uls)
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, (g, &p))| p * v.dotc(g).norm_sqr())
        .sum();
    own.norm_sqr() + interference + c_noise * v.norm_squared()
}

/// MSE-optimal weight `1 / e`.
pub fn optimal_weight(e: f64) -> Result<f64> {
    if e > 0.0 && e.is_finite() {
        Ok(1.0 / e)
    } else {
        Err(Error::Domain(format!("MSE {e} must be positive")))
    }
}

/// `sum_j a_j theta_j |v_j^H g_k|^2`, the curvature of the WMMSE objective in
/// `sqrt(p_k)`.
fn power_curvature(thetas: &[f64], vs: &[CVector], g_k: &CVector, a: &[bool]) -> f64 {
    thetas
        .iter()
        .zip(vs)
        .zip(a)
        .filter(|(_, &on)| on)
        .map(|((&t, v), _)| t * v.dotc(g_k).norm_sqr())
        .sum()
}

/// Dual variable of member `k`'s UL budget `p_k <= q_hat`.
///
/// Stationarity of `x^2 D - 2 x N + lambda (x^2 - q_hat)` at `x = sqrt(q_hat)`
/// gives `lambda = N / sqrt(q_hat) - D`, clamped at zero when the budget is
/// slack. A user with no budget or not transmitting has `lambda = 0`.
pub fn dual_lambda(
    thetas: &[f64],
    vs: &[CVector],
    g_hats: &[CVector],
    a: &[bool],
    q_hat: f64,
    k: usize,
) -> f64 {
    if !a[k] || q_hat <= 0.0 {
        return 0.0;
    }
    let d = power_curvature(thetas, vs, &g_hats[k], a);
    let n = thetas[k] * vs[k].dotc(&g_hats[k]).re;
    (n / q_hat.sqrt() - d).max(0.0)
}

/// UL power of member `k`: the unconstrained WMMSE minimizer
/// `(theta_k Re(v_k^H g_k) / D)^2`, projected onto `[0, q_hat]`.
pub fn ul_power(
    thetas: &[f64],
    vs: &[CVector],
    g_hats: &[CVector],
    a: &[bool],
    q_hat: f64,
    k: usize,
) -> f64 {
    if !a[k] || q_hat <= 0.0 {
        return 0.0;
    }
    let d = power_curvature(thetas, vs, &g_hats[k], a);
    let n = (thetas[k] * vs[k].dotc(&g_hats[k]).re).max(0.0);
    if d <= 0.0 {
        return if n > 0.0 { q_hat } else { 0.0 };
    }
    let x = n / d;
    (x * x).min(q_hat)
}

/// `sum_k weight_k (theta_k e_k - ln theta_k - 1)` over a group.
///
/// The constant `-1` makes the value equal to `-ln 2` times the weighted rate
/// at MMSE filters and MSE weights; it does not move any minimizer.
pub fn wmmse_objective(
    weights: &[f64],
    thetas: &[f64],
    vs: &[CVector],
    g_hats: &[CVector],
    p_uls: &[f64],
    c_noise: f64,
) -> f64 {
    (0..g_hats.len())
        .map(|k| {
            let e = mse(&vs[k], g_hats, p_uls, c_noise, k);
            weights[k] * (thetas[k] * e - thetas[k].ln() - 1.0)
        })
        .sum()
}
