//! Golden-section search over the time split and a concavity diagnostic.
//!
//! The search maximizes `f(tau1)` on `[tol, 1 - tol]`. It starts from the
//! incumbent `tau1 = 0.5` (the equal split), shrinks the bracket by the
//! inverse golden ratio per iteration until it is narrower than `tol`, then
//! evaluates the bracket midpoint. The returned `tau_star` is the best point
//! evaluated, with earlier points winning ties, so the result is never worse
//! than the equal split.
//!
//! ```
//! use fdwpcn::timesearch::golden_search;
//!
//! let trace = golden_search(|t| -(t - 0.3) * (t - 0.3), 1e-3, 64).unwrap();
//! assert!((trace.tau_star - 0.3).abs() < 1e-3);
//! ```

use rayon::prelude::*;

use crate::error::{Error, Result};

/// `(sqrt(5) - 1) / 2`.
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Initial point of every search.
pub const INCUMBENT_TAU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TauSearchTrace {
    /// `(tau1, f(tau1))` in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
    pub tau_star: f64,
    pub f_star: f64,
    /// Number of bracket reductions.
    pub iterations: usize,
    /// Bracket after the last reduction.
    pub bracket: (f64, f64),
}

fn checked<F: FnMut(f64) -> f64>(f: &mut F, tau: f64, log: &mut Vec<(f64, f64)>) -> Result<f64> {
    let value = f(tau);
    if !value.is_finite() {
        return Err(Error::NonFinite { tau, value });
    }
    log.push((tau, value));
    Ok(value)
}

/// Golden-section maximization of `f` over `[tol_tau, 1 - tol_tau]`.
pub fn golden_search<F: FnMut(f64) -> f64>(
    mut f: F,
    tol_tau: f64,
    max_evals: usize,
) -> Result<TauSearchTrace> {
    if !(tol_tau > 0.0 && tol_tau < 0.5) {
        return Err(Error::Domain(format!("tol_tau {tol_tau} outside (0, 0.5)")));
    }
    if max_evals < 4 {
        return Err(Error::Domain("golden search needs at least 4 evaluations".into()));
    }
    let mut log = Vec::new();
    checked(&mut f, INCUMBENT_TAU, &mut log)?;

    let (mut a, mut b) = (tol_tau, 1.0 - tol_tau);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = checked(&mut f, c, &mut log)?;
    let mut fd = checked(&mut f, d, &mut log)?;
    let mut iterations = 0;
    while b - a >= tol_tau && log.len() + 1 < max_evals {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = checked(&mut f, c, &mut log)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = checked(&mut f, d, &mut log)?;
        }
        iterations += 1;
    }
    checked(&mut f, 0.5 * (a + b), &mut log)?;

    let (tau_star, f_star) = log
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, (t, v)| if v > best.1 { (t, v) } else { best });
    Ok(TauSearchTrace {
        evaluations: log,
        tau_star,
        f_star,
        iterations,
        bracket: (a, b),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub concave: bool,
    /// Largest second central difference on the grid.
    pub max_second_difference: f64,
    /// Allowed positive curvature, `1e-6 * max |f|`.
    pub tolerance: f64,
    pub points: Vec<(f64, f64)>,
}

/// Evaluates `f` on the interior grid `step, 2 step, ...` of (0, 1) and checks
/// that every second central difference is at most `1e-6 * max |f|`.
pub fn concavity_probe<F: Fn(f64) -> f64 + Sync>(f: F, grid_step: f64) -> Result<ConcavityReport> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Domain(format!("grid step {grid_step} outside (0, 0.1]")));
    }
    let n = ((1.0 / grid_step) - 1e-9).floor() as usize;
    let points: Vec<(f64, f64)> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * grid_step;
            (t, f(t))
        })
        .filter(|(t, _)| *t < 1.0)
        .collect();
    let scale = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let tolerance = 1e-6 * scale;
    let max_second_difference = points
        .windows(3)
        .map(|w| w[0].1 - 2.0 * w[1].1 + w[2].1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ConcavityReport {
        concave: max_second_difference <= tolerance,
        max_second_difference,
        tolerance,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_peak() {
        let t = golden_search(|x| -(x - 0.3).powi(2), 1e-3, 100).unwrap();
        assert!((t.tau_star - 0.3).abs() <= 1e-3);
        let t = golden_search(|x| -(x - 0.91).powi(2), 1e-3, 100).unwrap();
        assert!((t.tau_star - 0.91).abs() <= 1e-3);
    }

    #[test]
    fn flat_function_keeps_equal_split() {
        let t = golden_search(|_| 1.25, 1e-3, 100).unwrap();
        assert_eq!(t.tau_star, 0.5);
    }

    #[test]
    fn bracket_shrinks_geometrically() {
        let t = golden_search(|x| (3.0 * x).sin(), 1e-3, 1000).unwrap();
        let width = t.bracket.1 - t.bracket.0;
        let expected = (1.0 - 2e-3) * INV_PHI.powi(t.iterations as i32);
        assert!((width - expected).abs() < 1e-12);
        assert!(width < 1e-3);
        assert_eq!(t.iterations, 15);
        let (a, b) = t.bracket;
        let f = |x: f64| (3.0 * x).sin();
        assert!(t.f_star >= f(a) && t.f_star >= f(b));
    }

    #[test]
    fn coarse_tolerance_needs_ten_reductions() {
        let t = golden_search(|x| -(x - 0.42).powi(2), 1e-2, 1000).unwrap();
        assert_eq!(t.iterations, 10);
    }

    #[test]
    fn eval_budget_is_respected() {
        let t = golden_search(|x| -(x - 0.2).powi(2), 1e-9, 10).unwrap();
        assert!(t.evaluations.len() <= 10);
    }

    #[test]
    fn non_finite_value_is_reported_with_tau() {
        let err = golden_search(|x| if x < 0.4 { f64::NAN } else { -x }, 1e-3, 100).unwrap_err();
        match err {
            Error::NonFinite { tau, .. } => assert!(tau < 0.4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn concavity_probe_examples() {
        assert!(concavity_probe(|t| t * (1.0 - t), 0.02).unwrap().concave);
        assert!(!concavity_probe(|t| (t - 0.5).abs(), 0.02).unwrap().concave);
        assert!(concavity_probe(|t| t, 0.5).is_err());
        assert_eq!(concavity_probe(|t| t, 0.1).unwrap().points.len(), 9);
    }
}
