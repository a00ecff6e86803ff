//! Modulus-of-continuity certificates for almost convex functions.
//!
//! If `sup F - inf F <= 2P` and `F(x) - (F(x+eta) + F(x-eta))/2 <= N eta^alpha`
//! for `0 < eta <= 1/2`, then for `u = |x - y| <= 1/2`:
//!
//! * `alpha > 1`: `|F(x) - F(y)| <= (4P + 3N / (1 - 2^(1-alpha))) u`
//! * `alpha = 1`: `|F(x) - F(y)| <= (4P + 6N) u |ln u|`
//! * `alpha < 1`: `|F(x) - F(y)| <= (4P + 2N / (1 - 2^(alpha-1))) u^alpha`

use std::io::Read;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GhoError, Result};

/// Number of rungs `eta_max 2^-k`, `k = 0..12`, in the defect ladder.
pub const ETA_LADDER: u32 = 13;

/// Writes `u = a / 2^n` with `a` in (1/2, 1] and `n >= 1`.
pub fn dyadic_decompose(u: f64) -> Result<(f64, u32)> {
    if !(u > 0.0 && u <= 0.5) {
        return Err(GhoError::invalid(format!("u must lie in (0, 1/2], got {u}")));
    }
    let (mut a, mut n) = (u, 0u32);
    while a <= 0.5 {
        a *= 2.0;
        n += 1;
    }
    Ok((a, n))
}

/// The certified bound for separation `u`.
pub fn modulus_bound(p: f64, n: f64, alpha: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 0.5) {
        return Err(GhoError::invalid(format!("u must lie in (0, 1/2], got {u}")));
    }
    if !(p >= 0.0 && n >= 0.0) {
        return Err(GhoError::invalid("P and N must be nonnegative"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(GhoError::invalid(format!("alpha must be positive, got {alpha}")));
    }
    Ok(if alpha == 1.0 {
        (4.0 * p + 6.0 * n) * u * u.ln().abs()
    } else if alpha > 1.0 {
        (4.0 * p + 3.0 * n / (1.0 - 2f64.powf(1.0 - alpha))) * u
    } else {
        (4.0 * p + 2.0 * n / (1.0 - 2f64.powf(alpha - 1.0))) * u.powf(alpha)
    })
}

/// Function values from a two-column table, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl SampledFunction {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(GhoError::Data("need at least two (x, F(x)) samples of equal length".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GhoError::Data("x values must be strictly increasing".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(GhoError::Data("non-finite sample".into()));
        }
        Ok(Self { xs, ys })
    }

    /// Reads `x,F(x)` rows; a header line is skipped when it does not parse.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| GhoError::Data(e.to_string()))?;
            if rec.len() != 2 {
                return Err(GhoError::Data(format!("row {}: expected 2 columns, got {}", line + 1, rec.len())));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if line == 0 => continue,
                _ => return Err(GhoError::Data(format!("row {}: not numeric", line + 1))),
            }
        }
        Self::new(xs, ys)
    }

    pub fn grid(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    /// Linear interpolation inside the sampled range.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let t = (x - x0) / (x1 - x0);
        Some(self.ys[i - 1] + t * (self.ys[i] - self.ys[i - 1]))
    }
}

/// Largest normalized defect found at each rung of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectRung {
    pub eta: f64,
    pub max_ratio: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    pub p: f64,
    pub n_defect: f64,
    pub ladder: Vec<DefectRung>,
}

fn check_grid(grid: &[f64], eta_max: f64, alpha: f64) -> Result<()> {
    if grid.len() < 3 {
        return Err(GhoError::invalid("grid needs at least 3 points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(GhoError::invalid("grid must be strictly increasing"));
    }
    if !(eta_max > 0.0 && eta_max <= 0.5) {
        return Err(GhoError::invalid(format!("eta_max must lie in (0, 1/2], got {eta_max}")));
    }
    if !(alpha > 0.0) {
        return Err(GhoError::invalid("alpha must be positive"));
    }
    Ok(())
}

/// `P = (max - min)/2` on the grid and `N = max [F(x) - (F(x+eta)+F(x-eta))/2] / eta^alpha`
/// over the ladder, floored at 0. Only `x +- eta` inside the grid span are used.
pub fn estimate_constants(f: &(dyn Fn(f64) -> f64 + Sync), grid: &[f64], eta_max: f64, alpha: f64) -> Result<Constants> {
    check_grid(grid, eta_max, alpha)?;
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let ladder: Vec<DefectRung> = (0..ETA_LADDER)
        .map(|k| {
            let eta = eta_max * 2f64.powi(-(k as i32));
            let mut max_ratio = f64::NEG_INFINITY;
            let mut samples = 0;
            for (&x, &fx) in grid.iter().zip(&vals) {
                if x - eta < lo || x + eta > hi {
                    continue;
                }
                samples += 1;
                let defect = fx - 0.5 * (f(x + eta) + f(x - eta));
                max_ratio = max_ratio.max(defect / eta.powf(alpha));
            }
            DefectRung { eta, max_ratio, samples }
        })
        .collect();
    let n_defect = ladder.iter().filter(|r| r.samples > 0).map(|r| r.max_ratio).fold(0.0, f64::max);
    Ok(Constants { p: 0.5 * (max - min), n_defect, ladder })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub x: f64,
    pub y: f64,
    pub difference: f64,
    pub bound: f64,
}

/// Constants, the checked pairs and any violated pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessCertificate {
    pub p: f64,
    pub n_defect: f64,
    pub alpha: f64,
    pub pairs_checked: usize,
    /// Largest `|F(x) - F(y)| / bound` over the checked pairs.
    pub max_usage: f64,
    pub ladder: Vec<DefectRung>,
    pub violations: Vec<Violation>,
}

impl SmoothnessCertificate {
    pub fn bound(&self, u: f64) -> Result<f64> {
        modulus_bound(self.p, self.n_defect, self.alpha, u)
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Estimates (P, N) and checks the bound on all grid pairs `0 < |x - y| <= 1/2`.
pub fn certify(f: &(dyn Fn(f64) -> f64 + Sync), grid: &[f64], eta_max: f64, alpha: f64) -> Result<SmoothnessCertificate> {
    let c = estimate_constants(f, grid, eta_max, alpha)?;
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let rows: Vec<(usize, f64, Vec<Violation>)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut count = 0;
            let mut usage = 0.0f64;
            let mut bad = Vec::new();
            for j in i + 1..grid.len() {
                let u = grid[j] - grid[i];
                if u > 0.5 {
                    break;
                }
                count += 1;
                let bound = modulus_bound(c.p, c.n_defect, alpha, u).expect("validated");
                let diff = (vals[i] - vals[j]).abs();
                if bound > 0.0 {
                    usage = usage.max(diff / bound);
                } else if diff > 0.0 {
                    usage = f64::INFINITY;
                }
                if diff > bound + 1e-12 * (1.0 + bound) {
                    bad.push(Violation { x: grid[i], y: grid[j], difference: diff, bound });
                }
            }
            (count, usage, bad)
        })
        .collect();
    let mut out = SmoothnessCertificate {
        p: c.p,
        n_defect: c.n_defect,
        alpha,
        pairs_checked: 0,
        max_usage: 0.0,
        ladder: c.ladder,
        violations: Vec::new(),
    };
    for (count, usage, bad) in rows {
        out.pairs_checked += count;
        out.max_usage = out.max_usage.max(usage);
        out.violations.extend(bad);
    }
    Ok(out)
}

/// `lo, lo + step, ...` up to and including `hi` (within rounding).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dyadic_examples() {
        assert_eq!(dyadic_decompose(0.3).unwrap(), (0.6, 1));
        assert_eq!(dyadic_decompose(0.5).unwrap(), (1.0, 1));
        assert_eq!(dyadic_decompose(0.125).unwrap(), (1.0, 3));
        assert!(dyadic_decompose(0.0).is_err());
        assert!(dyadic_decompose(0.51).is_err());
    }

    #[test]
    fn modulus_bound_cases() {
        let v = modulus_bound(1.0, 0.0, 1.0, 0.25).unwrap();
        assert!((v - 4.0 * 0.25 * 4f64.ln()).abs() < 1e-15);
        assert!((v - 1.386_294_361_1).abs() < 1e-10);
        assert!((modulus_bound(1.0, 1.0, 2.0, 0.3).unwrap() - 3.0).abs() < 1e-14);
        let c = 4.0 + 2.0 / (1.0 - 0.5f64.sqrt());
        assert!((c - 10.828_427_124_7).abs() < 1e-9);
        assert!((modulus_bound(1.0, 1.0, 0.5, 0.16).unwrap() - c * 0.4).abs() < 1e-12);
    }

    #[test]
    fn constant_function_certificate() {
        let grid = uniform_grid(-1.0, 1.0, 0.01);
        let cert = certify(&|_| 2.0, &grid, 0.5, 2.0).unwrap();
        assert_eq!((cert.p, cert.n_defect), (0.0, 0.0));
        assert!(cert.is_valid());
        assert_eq!(cert.bound(0.3).unwrap(), 0.0);
    }

    #[test]
    fn convex_function_has_no_defect() {
        let grid = uniform_grid(-1.0, 1.0, 0.01);
        let c = estimate_constants(&|x: f64| x.abs(), &grid, 0.5, 1.0).unwrap();
        assert_eq!(c.n_defect, 0.0);
        assert!((c.p - 0.5).abs() < 1e-12);
        assert!(certify(&|x: f64| x.abs(), &grid, 0.5, 1.0).unwrap().is_valid());
    }

    #[test]
    fn sine_defect_and_certificate() {
        let grid = uniform_grid(-PI, PI, 0.01);
        let c = estimate_constants(&f64::sin, &grid, 0.5, 2.0).unwrap();
        assert!(c.n_defect <= 0.5 + 1e-6, "{}", c.n_defect);
        let cert = certify(&f64::sin, &grid, 0.5, 2.0).unwrap();
        assert!(cert.is_valid());
        assert!(cert.pairs_checked > 20_000);
    }

    #[test]
    fn sampled_function_interpolates() {
        let f = SampledFunction::from_csv("x,F\n0,0\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(f.eval(0.5), Some(1.0));
        assert_eq!(f.eval(2.0), Some(3.0));
        assert_eq!(f.eval(3.0), Some(4.0));
        assert_eq!(f.eval(3.5), None);
        assert!(SampledFunction::from_csv("0,0\n0,1\n".as_bytes()).is_err());
        assert!(SampledFunction::from_csv("0,0\n1,x\n".as_bytes()).is_err());
    }
}
