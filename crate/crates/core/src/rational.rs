//! Rational approximation of the flux per plaquette.

use serde::Serialize;

use crate::error::{GhoError, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Reduced fraction `p / q` with `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Ratio {
    pub p: i64,
    pub q: u64,
}

impl Ratio {
    pub fn new(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(GhoError::invalid("zero denominator"));
        }
        let g = gcd(p.unsigned_abs(), q).max(1);
        Ok(Self { p: p / g as i64, q: q / g })
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Continued-fraction terms of the simplest rational in `[lo, hi]`, `0 <= lo <= hi`.
fn simplest_terms(mut lo: f64, mut hi: f64, max_terms: usize) -> Vec<u64> {
    let mut terms = Vec::new();
    loop {
        let fl = lo.floor();
        if fl == lo || terms.len() >= max_terms {
            terms.push(fl as u64);
            return terms;
        }
        if fl + 1.0 <= hi {
            terms.push(fl as u64 + 1);
            return terms;
        }
        terms.push(fl as u64);
        (lo, hi) = (1.0 / (hi - fl), 1.0 / (lo - fl));
    }
}

/// The rational with the smallest denominator in `[lo, hi]` (smallest
/// numerator magnitude among those).
pub fn simplest_in(lo: f64, hi: f64) -> Result<Ratio> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(GhoError::invalid(format!("bad interval [{lo}, {hi}]")));
    }
    if lo <= 0.0 && hi >= 0.0 {
        return Ratio::new(0, 1);
    }
    if hi < 0.0 {
        let r = simplest_in(-hi, -lo)?;
        return Ratio::new(-r.p, r.q);
    }
    let terms = simplest_terms(lo, hi, 64);
    let (mut num, mut den) = (1u128, 0u128);
    for &a in terms.iter().rev() {
        (num, den) = (a as u128 * num + den, num);
    }
    if num > i64::MAX as u128 || den > u64::MAX as u128 {
        return Err(GhoError::invalid("approximant overflow"));
    }
    Ratio::new(num as i64, den as u64)
}

/// Simplest rational within `tol` of `target`, rejected when its
/// denominator exceeds `q_max`.
pub fn rational_approximant(target: f64, tol: f64, q_max: u64) -> Result<Ratio> {
    if !(tol >= 0.0) {
        return Err(GhoError::invalid("tolerance must be nonnegative"));
    }
    let r = simplest_in(target - tol, target + tol)?;
    if r.q > q_max {
        return Err(GhoError::NoApproximant { target, tol, q_max });
    }
    Ok(r)
}

/// Reduced fractions with denominator `<= q_max` in `[lo, hi]`, ascending.
pub fn farey_in(q_max: u64, lo: f64, hi: f64) -> Vec<Ratio> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        let p_lo = (lo * q as f64).ceil() as i64;
        let p_hi = (hi * q as f64).floor() as i64;
        for p in p_lo..=p_hi {
            if gcd(p.unsigned_abs(), q) == 1 {
                out.push(Ratio { p, q });
            }
        }
    }
    out.sort_by(|a, b| (a.p as i128 * b.q as i128).cmp(&(b.p as i128 * a.q as i128)));
    out
}
