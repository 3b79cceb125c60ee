//! Energy beamforming for the harvesting group of one phase.
//!
//! Holding every other variable fixed, the beam that maximizes the
//! dual-weighted harvested power
//!
//! ```text
//! B = (tau_l / tau_lhat) * sum_{j in S_l} lambda_j beta_j h_hat_j h_hat_j^H
//! ```
//!
//! is `sqrt(P) u_1`, with `u_1` the unit-norm eigenvector of the largest
//! eigenvalue of `B`. The dual of the DL power constraint equals that
//! eigenvalue. A single beam serves the whole group.

use nalgebra::SymmetricEigen;

use crate::{CMatrix, CVector, C64};

/// Above this many antennas the dominant eigenvector comes from power iteration.
pub const DENSE_EIGEN_MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    /// Energy beam, `||w||^2 = P`.
    pub w: CVector,
    /// Dual variable of the DL power budget, `lambda_max(B)`.
    pub lambda_dl: f64,
    /// The weighted covariance the beam was derived from.
    pub b_matrix: CMatrix,
    /// `B` was zero, so the direction is the arbitrary `e_1`.
    pub degenerate: bool,
}

impl BeamformerSolution {
    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }
}

/// Builds the dual-weighted channel covariance of a harvesting group.
///
/// `duals`, `betas` and `h_hat_dl` are indexed by group member. An empty group
/// yields the zero matrix of dimension `m`.
pub fn build_b(
    tau_l: f64,
    tau_lhat: f64,
    duals: &[f64],
    betas: &[f64],
    h_hat_dl: &[&CVector],
    m: usize,
) -> CMatrix {
    debug_assert_eq!(duals.len(), h_hat_dl.len());
    debug_assert_eq!(betas.len(), h_hat_dl.len());
    let ratio = tau_l / tau_lhat;
    let mut b = CMatrix::zeros(m, m);
    for ((&lambda, &beta), h) in duals.iter().zip(betas).zip(h_hat_dl) {
        let weight = ratio * lambda * beta;
        if weight == 0.0 {
            continue;
        }
        b.gerc(C64::new(weight, 0.0), h, h, C64::new(1.0, 0.0));
    }
    (&b + b.adjoint()) * C64::new(0.5, 0.0)
}

/// Rotates `u` so its largest-magnitude entry is real and non-negative.
pub fn fix_phase(u: &mut CVector) {
    let mut best = 0usize;
    let mut best_mag = -1.0;
    for (i, z) in u.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag > 0.0 {
        let rot = u[best].conj() / best_mag;
        u.iter_mut().for_each(|z| *z *= rot);
        u[best] = C64::new(u[best].re.abs(), 0.0);
    }
}

fn dense_dominant(b: &CMatrix) -> (f64, CVector) {
    let m = b.nrows();
    let eig = SymmetricEigen::new(b.clone());
    let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-10 * lambda_max.abs().max(f64::MIN_POSITIVE);
    let top: Vec<usize> = (0..m)
        .filter(|&i| eig.eigenvalues[i] >= lambda_max - tol)
        .collect();
    // Within a repeated top eigenvalue, pick the projection of the first
    // standard basis vector that is not orthogonal to the eigenspace.
    for axis in 0..m {
        let mut u = CVector::zeros(m);
        for &i in &top {
            let col = eig.eigenvectors.column(i);
            u += col * col[axis].conj();
        }
        let n = u.norm();
        if n > 1e-8 {
            return (lambda_max, u / C64::new(n, 0.0));
        }
    }
    let col = eig.eigenvectors.column(top[0]).into_owned();
    (lambda_max, col)
}

fn power_iteration_dominant(b: &CMatrix) -> (f64, CVector) {
    let m = b.nrows();
    let start = (0..m)
        .max_by(|&i, &j| b[(i, i)].re.total_cmp(&b[(j, j)].re))
        .unwrap_or(0);
    let mut x: CVector = b.column(start).into_owned();
    if x.norm() == 0.0 {
        x = CVector::from_element(m, C64::new(1.0, 0.0));
    }
    x /= C64::new(x.norm(), 0.0);
    let scale = b.norm().max(f64::MIN_POSITIVE);
    let mut rayleigh = 0.0;
    for _ in 0..100_000 {
        let y = b * &x;
        rayleigh = x.dotc(&y).re;
        let residual = (&y - &x * C64::new(rayleigh, 0.0)).norm();
        if residual <= 1e-13 * scale {
            break;
        }
        let n = y.norm();
        if n == 0.0 {
            break;
        }
        x = y / C64::new(n, 0.0);
    }
    (rayleigh, x)
}

/// Largest eigenvalue of a Hermitian PSD matrix and a unit eigenvector for it,
/// phase-normalized by [`fix_phase`].
pub fn dominant_eigenpair(b: &CMatrix) -> (f64, CVector) {
    let (lambda, mut u) = if b.nrows() <= DENSE_EIGEN_MAX_DIM {
        dense_dominant(b)
    } else {
        power_iteration_dominant(b)
    };
    fix_phase(&mut u);
    (lambda, u)
}

/// Optimal energy beam `sqrt(p_dl_max) u_1(B)`.
///
/// A zero `B` has no preferred direction; the beam then points along `e_1`,
/// `lambda_dl` is zero and the solution is flagged degenerate.
pub fn optimal_beamformer(b: &CMatrix, p_dl_max: f64) -> BeamformerSolution {
    let m = b.nrows();
    let amplitude = C64::new(p_dl_max.sqrt(), 0.0);
    if b.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        let mut w = CVector::zeros(m);
        w[0] = amplitude;
        return BeamformerSolution {
            w,
            lambda_dl: 0.0,
            b_matrix: b.clone(),
            degenerate: true,
        };
    }
    let (lambda, u) = dominant_eigenpair(b);
    BeamformerSolution {
        w: u * amplitude,
        lambda_dl: lambda.max(0.0),
        b_matrix: b.clone(),
        degenerate: false,
    }
}
