//! Elementary lattice sums and scalar bounds.

use crate::error::{GhoError, Result};
use crate::lattice::LatticePoint;

/// Relative size of the neglected tail in [`lattice_exp_sum`].
pub const TAIL_TOLERANCE: f64 = 1e-13;

/// Upper bound on `sum_{k >= first} 8 k x^k`, the contribution of sup-norm
/// rings `k >= first` when every point of ring k weighs at most `x^k`.
fn ring_tail(x: f64, first: usize) -> f64 {
    let k = first as f64;
    8.0 * x.powf(k) * (k - (k - 1.0) * x) / ((1.0 - x) * (1.0 - x))
}

/// `sum_{y in Z^2, |y|_2 > r_min} exp(-rate |y|_2)` summed ring by ring in
/// the sup norm until the remaining tail is below [`TAIL_TOLERANCE`] of the
/// partial sum; the returned value includes the tail bound and therefore
/// never underestimates the series.
pub fn lattice_exp_sum(rate: f64, r_min: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(GhoError::invalid(format!("decay rate must be positive, got {rate}")));
    }
    let x = (-rate).exp();
    let mut sum = 0.0;
    let mut k: i64 = 0;
    loop {
        let ring = if k == 0 {
            if r_min < 0.0 { 1.0 } else { 0.0 }
        } else {
            let mut s = 0.0;
            for j in -k..k {
                for p in [
                    LatticePoint::new(k, j),
                    LatticePoint::new(-k, -j),
                    LatticePoint::new(-j, k),
                    LatticePoint::new(j, -k),
                ] {
                    let r = p.norm2();
                    if r > r_min {
                        s += (-rate * r).exp();
                    }
                }
            }
            s
        };
        sum += ring;
        let tail = ring_tail(x, k as usize + 1);
        if (k as f64) > r_min && (tail <= TAIL_TOLERANCE * sum || tail < 1e-300) {
            return Ok(sum + tail);
        }
        k += 1;
    }
}

/// `sum_y exp(-beta |y| / 2)`, the Schur row sum dominating `||A||`.
pub fn schur_row_sum(beta: f64) -> Result<f64> {
    lattice_exp_sum(beta / 2.0, -1.0)
}

/// `C sum_y exp(-beta |y|)`, a bound on the norm of every operator whose
/// kernel is declared with decay constants (C, beta).
pub fn norm_bound_h(c: f64, beta: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(GhoError::invalid(format!("C must be positive, got {c}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(GhoError::invalid(format!("beta must lie in (0, 1], got {beta}")));
    }
    Ok(c * lattice_exp_sum(beta, -1.0)?)
}

/// `C sum_{|y| > R} exp(-beta |y|)`: norm error from cutting the kernel at radius R.
pub fn cutoff_tail_bound(c: f64, beta: f64, cutoff: u32) -> Result<f64> {
    Ok(c * lattice_exp_sum(beta, cutoff as f64)?)
}

/// `sup_{x > 0} x^m exp(-alpha x) = (m / alpha)^m exp(-m)`.
pub fn sup_xm_exp(m: f64, alpha: f64) -> Result<f64> {
    if !(m > 0.0 && alpha > 0.0) {
        return Err(GhoError::invalid(format!("need m > 0 and alpha > 0, got m={m}, alpha={alpha}")));
    }
    Ok((m / alpha).powf(m) * (-m).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn brute(rate: f64, r_min: f64, r: i64) -> f64 {
        let mut s = 0.0;
        for a in -r..=r {
            for b in -r..=r {
                let d = LatticePoint::new(a, b).norm2();
                if d > r_min {
                    s += (-rate * d).exp();
                }
            }
        }
        s
    }

    #[test]
    fn lattice_sum_matches_brute_force() {
        let s = lattice_exp_sum(1.0, -1.0).unwrap();
        let b = brute(1.0, -1.0, 60);
        assert!((s - b).abs() <= 1e-12 * b, "{s} {b}");
        let t = lattice_exp_sum(1.0, 18.0).unwrap();
        let bt = brute(1.0, 18.0, 80);
        assert!((t - bt).abs() <= 1e-12 * bt, "{t} {bt}");
    }

    #[test]
    fn schur_sum_at_beta_two() {
        // sum_y exp(-|y|), frozen from a brute-force sum over |y|_inf <= 60
        let s = schur_row_sum(2.0).unwrap();
        let b = brute(1.0, -1.0, 60);
        assert!((s - b).abs() <= 1e-12 * b);
        assert!((s - 6.507_241_686_138).abs() < 1e-10, "{s}");
    }

    #[test]
    fn schur_sum_monotone_and_scaled() {
        assert!(schur_row_sum(0.5).unwrap() > schur_row_sum(1.0).unwrap());
        let ratios: Vec<f64> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&b| b * b * schur_row_sum(b).unwrap())
            .collect();
        // beta^2 * sum -> 8 pi as beta -> 0
        for r in &ratios {
            assert!(*r < 8.0 * std::f64::consts::PI + 1.0, "{ratios:?}");
        }
    }

    #[test]
    fn norm_bound_linear_and_monotone() {
        let a = norm_bound_h(1.0, 1.0).unwrap();
        assert!((norm_bound_h(2.0, 1.0).unwrap() - 2.0 * a).abs() <= 1e-14 * a);
        assert!(norm_bound_h(1.0, 0.5).unwrap() > a);
        assert!(norm_bound_h(E, 1.0).unwrap() >= 4.0);
        assert!(norm_bound_h(1.0, 2.0).is_err());
    }

    #[test]
    fn sup_xm_exp_values() {
        assert!((sup_xm_exp(1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-16);
        assert!((sup_xm_exp(2.0, 1.0).unwrap() - 4.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((sup_xm_exp(1.0, 2.0).unwrap() - 0.5 * (-1.0f64).exp()).abs() < 1e-16);
    }
}
