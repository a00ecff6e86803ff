//! Resolvent kernels on finite boxes: exponential decay, tilted operators,
//! the phase-twisted parametrix and the Riesz gap operator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GhoError, Result};
use crate::lattice::{BoxRegion, LatticePoint};
use crate::linalg::{eigh, eigvalsh, hermiticity_defect, inverse, max_abs, max_abs_diff, spectral_norm, CMat, ONE, ZERO};
use crate::model::{GhoModel, KernelSpec};
use crate::operator::{assemble_with, AssemblyOptions, TruncatedOperator};
use crate::spectral::{eigen_spectrum, Gap};

/// Smallest admissible distance from `z` to the spectrum.
pub const MIN_DISTANCE: f64 = 1e-8;

/// `(h - z)^{-1}` on the box with the distance `d` from `z` to the spectrum.
#[derive(Debug, Clone)]
pub struct ResolventKernel {
    pub region: BoxRegion,
    pub z: Complex64,
    pub g: CMat,
    pub d: f64,
    /// `max |(h - z) G - I|`.
    pub residual: f64,
}

impl ResolventKernel {
    pub fn entry(&self, x: LatticePoint, y: LatticePoint) -> Option<Complex64> {
        Some(self.g[(self.region.index_of(x)?, self.region.index_of(y)?)])
    }
}

fn distance_to(values: &[f64], z: Complex64) -> f64 {
    values.iter().map(|&l| (Complex64::new(l, 0.0) - z).norm()).fold(f64::INFINITY, f64::min)
}

/// `max |(h - z) G - I|` using the sparsity of `h`.
fn identity_residual(h: &[Vec<(usize, Complex64)>], z: Complex64, g: &CMat, rhs: Option<(&CMat, f64)>) -> f64 {
    let n = g.nrows();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0f64;
            for j in 0..n {
                let mut v = -z * g[(i, j)];
                for &(k, hik) in &h[i] {
                    v += hik * g[(k, j)];
                }
                if i == j {
                    v -= ONE;
                }
                if let Some((t, eps)) = rhs {
                    v -= t[(i, j)] * eps;
                }
                worst = worst.max(v.norm());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

pub fn resolvent_kernel(op: &TruncatedOperator, z: Complex64) -> Result<ResolventKernel> {
    let spectrum = eigen_spectrum(op)?;
    let d = distance_to(&spectrum.values, z);
    if !(d > MIN_DISTANCE) {
        return Err(GhoError::NearSpectrum { distance: d });
    }
    let g = inverse(&crate::linalg::shifted(&op.entries, z));
    let residual = identity_residual(&op.sparse_rows(), z, &g, None);
    Ok(ResolventKernel { region: op.region, z, g, d, residual })
}

pub fn admissible_mu(beta: f64, d: f64, b: f64) -> Result<f64> {
    if !(beta > 0.0 && d > 0.0 && b >= 0.0) {
        return Err(GhoError::invalid("beta and d must be positive and b nonnegative"));
    }
    Ok(if b == 0.0 { beta / 2.0 } else { (beta / 2.0).min(d / (2.0 * b)) })
}

/// `h_mu = e^{mu|.-x0|} h e^{-mu|.-x0|}` on a box, as weights and the tilted matrix.
fn weights(region: &BoxRegion, mu: f64, x0: LatticePoint) -> Vec<f64> {
    region.points().into_iter().map(|x| mu * x.dist(x0)).collect()
}

/// `B = (h_mu - h) / mu` built from the kernel on the box.
pub fn tilted_b_matrix(kernel: &KernelSpec, mu: f64, x0: LatticePoint, region: &BoxRegion) -> Result<CMat> {
    let half = kernel.beta() / 2.0;
    if !(mu > 0.0 && mu <= half) {
        return Err(GhoError::invalid(format!("mu must lie in (0, {half}], got {mu}")));
    }
    let n = region.len();
    let w = weights(region, mu, x0);
    let offsets = kernel.candidate_offsets();
    let mut b = CMat::zeros(n, n);
    for i in 0..n {
        let x = region.point_at(i);
        for &c in &offsets {
            let y = x - c;
            let Some(j) = region.index_of(y) else { continue };
            let h = kernel.evaluate(x, y);
            if h != ZERO {
                b[(i, j)] = h * ((w[i] - w[j]).exp_m1() / mu);
            }
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltedB {
    pub mu: f64,
    pub b: f64,
    /// `sup_x sum_y |h(x,y)| |x-y| e^{mu |x-y|}` on the box.
    pub row_sum_bound: f64,
}

/// Operator norm of `B` (by SVD) and the elementary row-sum bound.
pub fn tilted_b_estimate(kernel: &KernelSpec, mu: f64, x0: LatticePoint, region: &BoxRegion) -> Result<TiltedB> {
    let b = tilted_b_matrix(kernel, mu, x0, region)?;
    let norm = spectral_norm(&b)?;
    let offsets = kernel.candidate_offsets();
    let row_sum_bound = region
        .points()
        .into_iter()
        .map(|x| {
            offsets
                .iter()
                .map(|&c| {
                    let r = c.norm2();
                    kernel.evaluate(x, x - c).norm() * r * (mu * r).exp()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(TiltedB { mu, b: norm, row_sum_bound })
}

/// `b` at `mu = beta/2` as the largest norm over a few tilt centers on an
/// `N = radius` box. Since `b` grows with `mu`, `min(beta/2, d/(2b))` computed
/// from it is admissible for every smaller `mu` as well.
pub fn estimate_b(kernel: &KernelSpec, radius: u32) -> Result<f64> {
    let region = BoxRegion::centered(radius);
    let r = radius as i64;
    let centers = [
        LatticePoint::ORIGIN,
        LatticePoint::new(r / 2, 0),
        LatticePoint::new(r / 2, r / 3),
        LatticePoint::new(-r, r),
    ];
    centers
        .par_iter()
        .map(|&x0| tilted_b_estimate(kernel, kernel.beta() / 2.0, x0, &region).map(|t| t.b))
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    pub mu: f64,
    pub d: f64,
    /// `max |G(x,y)| d e^{mu |x-y|} / 2` over pairs in the interior sub-box.
    pub max_ratio: f64,
    /// Same quantity with `x != y` only.
    pub max_offdiag_ratio: f64,
    /// Boundary layer excluded from the check.
    pub margin: u32,
    pub interior_sites: usize,
    pub pass: bool,
}

/// Checks `|G(x,y)| <= (2/d) e^{-mu|x-y|}` away from a boundary layer of width `1/mu`.
pub fn decay_check(rk: &ResolventKernel, mu: f64) -> Result<DecayReport> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(GhoError::invalid("mu must be positive"));
    }
    let margin = (1.0 / mu).ceil().min(u32::MAX as f64) as u32;
    let interior: Vec<(usize, LatticePoint)> = rk
        .region
        .points()
        .into_iter()
        .enumerate()
        .filter(|&(_, x)| rk.region.depth(x) >= margin as i64)
        .collect();
    let (max_ratio, max_off) = interior
        .par_iter()
        .map(|&(i, x)| {
            let (mut all, mut off) = (0.0f64, 0.0f64);
            for &(j, y) in &interior {
                let r = rk.g[(i, j)].norm() * rk.d * (mu * x.dist(y)).exp() / 2.0;
                all = all.max(r);
                if i != j {
                    off = off.max(r);
                }
            }
            (all, off)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(DecayReport {
        mu,
        d: rk.d,
        max_ratio,
        max_offdiag_ratio: max_off,
        margin,
        interior_sites: interior.len(),
        pass: !interior.is_empty() && max_ratio <= 1.0 + 1e-6,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugationReport {
    pub mu: f64,
    /// Relative max-entry difference between `W G W^{-1}` and `(h_mu - z)^{-1}`.
    pub identity_error: f64,
    pub tilted_resolvent_norm: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Compares the weighted resolvent with the resolvent of the tilted operator,
/// and the latter's norm with `2/d`.
pub fn conjugation_check(op: &TruncatedOperator, z: Complex64, mu: f64, x0: LatticePoint) -> Result<ConjugationReport> {
    let rk = resolvent_kernel(op, z)?;
    let w = weights(&op.region, mu, x0);
    let n = op.dim();
    let weighted = CMat::from_fn(n, n, |i, j| rk.g[(i, j)] * (w[i] - w[j]).exp());
    let tilted = CMat::from_fn(n, n, |i, j| {
        let v = op.entries[(i, j)] * (w[i] - w[j]).exp();
        if i == j { v - z } else { v }
    });
    let tilted_inv = inverse(&tilted);
    let identity_error = max_abs_diff(&weighted, &tilted_inv) / max_abs(&weighted).max(1.0);
    let tilted_resolvent_norm = spectral_norm(&tilted_inv)?;
    let bound = 2.0 / rk.d;
    Ok(ConjugationReport {
        mu,
        identity_error,
        tilted_resolvent_norm,
        bound,
        pass: identity_error <= 1e-8 && tilted_resolvent_norm <= bound + 1e-6,
    })
}

/// `S = e^{i eps phi} G0` and the remainder `T` with `(h_eps - z) S = I + eps T`.
#[derive(Debug, Clone)]
pub struct Parametrix {
    pub epsilon: f64,
    pub z: Complex64,
    pub s: CMat,
    pub t: CMat,
    /// `max |(h_eps - z) S - I - eps T|`.
    pub residual: f64,
    /// `sup_y sum_x |T(x,y)|`.
    pub t_column_sum: f64,
    pub d: f64,
}

pub fn twisted_parametrix(model: &GhoModel, epsilon: f64, z: Complex64, region: BoxRegion) -> Result<Parametrix> {
    let opts = AssemblyOptions::with_max_dim(region.len().max(crate::operator::DEFAULT_MAX_DIM));
    let op0 = assemble_with(model, 0.0, region, &opts)?;
    let rk = resolvent_kernel(&op0, z)?;
    twisted_parametrix_from(model, &op0, &rk, epsilon)
}

/// Same as [`twisted_parametrix`] reusing an `eps = 0` operator and its resolvent.
pub fn twisted_parametrix_from(model: &GhoModel, op0: &TruncatedOperator, rk: &ResolventKernel, epsilon: f64) -> Result<Parametrix> {
    let region = op0.region;
    let n = op0.dim();
    let pts = region.points();
    let phase = &model.phase;
    let phi = |i: usize, j: usize| phase.evaluate(pts[i], pts[j]);
    let s = CMat::from_fn(n, n, |i, j| rk.g[(i, j)] * Complex64::from_polar(1.0, epsilon * phi(i, j)));
    let mut t = CMat::zeros(n, n);
    if epsilon != 0.0 {
        let rows = op0.sparse_rows();
        let cols: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let mut acc = ZERO;
                        for &(u, h) in &rows[i] {
                            // F(x,u,y) = phi(x,u) + phi(u,y) + phi(y,x); e^{i th} - 1 = 2i sin(th/2) e^{i th/2}
                            let th = epsilon * (phi(i, u) + phi(u, j) + phi(j, i));
                            let q = Complex64::from_polar(2.0 * (th / 2.0).sin(), th / 2.0) * Complex64::i() / epsilon;
                            acc += q * h * rk.g[(u, j)];
                        }
                        acc * Complex64::from_polar(1.0, epsilon * phi(i, j))
                    })
                    .collect()
            })
            .collect();
        for (j, col) in cols.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                t[(i, j)] = v;
            }
        }
    }
    let opts = AssemblyOptions::with_max_dim(n.max(crate::operator::DEFAULT_MAX_DIM));
    let op_eps = assemble_with(model, epsilon, region, &opts)?;
    let residual = identity_residual(&op_eps.sparse_rows(), rk.z, &s, Some((&t, epsilon)));
    let t_column_sum = crate::linalg::max_column_abs_sum(&t);
    Ok(Parametrix { epsilon, z: rk.z, s, t, residual, t_column_sum, d: rk.d })
}

/// Confocal ellipse around a spectral interval; the trapezoid rule on it
/// converges geometrically for integrands analytic near the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapContour {
    pub center: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub nodes: usize,
}

impl GapContour {
    /// Ellipse with foci at `lo`, `hi` crossing the real axis `reach` beyond each end.
    pub fn around(lo: f64, hi: f64, reach: f64, nodes: usize) -> Result<Self> {
        if !(hi >= lo && reach > 0.0 && nodes >= 4) {
            return Err(GhoError::invalid("contour needs lo <= hi, reach > 0 and at least 4 nodes"));
        }
        let half = 0.5 * (hi - lo);
        let semi_major = half + reach;
        Ok(Self { center: 0.5 * (lo + hi), semi_major, semi_minor: (semi_major * semi_major - half * half).sqrt(), nodes })
    }

    /// Nodes `z_k` and weights `w_k` with `sum f(z_k) w_k ~ (i / 2 pi) oint f dz` counterclockwise.
    pub fn quadrature(&self) -> Vec<(Complex64, Complex64)> {
        let m = self.nodes as f64;
        (0..self.nodes)
            .map(|k| {
                let th = 2.0 * PI * (k as f64 + 0.5) / m;
                let z = Complex64::new(self.center + self.semi_major * th.cos(), self.semi_minor * th.sin());
                let dz = Complex64::new(-self.semi_major * th.sin(), self.semi_minor * th.cos());
                (z, Complex64::i() * dz / m)
            })
            .collect()
    }

    /// Smallest distance from a node to the given real points.
    pub fn clearance(&self, values: &[f64]) -> f64 {
        self.quadrature().iter().map(|&(z, _)| distance_to(values, z)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RieszMethod {
    Projection,
    Contour { nodes: usize },
}

#[derive(Debug, Clone)]
pub struct RieszOperator {
    pub h1: CMat,
    /// `sup sigma(h1)`.
    pub e1: f64,
    /// Largest eigenvalue at or below the gap, from the spectrum directly.
    pub e1_direct: f64,
    pub hermiticity_defect: f64,
    /// Smallest node distance to the spectrum (contour method only).
    pub clearance: Option<f64>,
}

/// `h1 = h P1 + (lambda - 1) P2` with `P1`, `P2` the spectral projections
/// below and above the gap.
pub fn riesz_gap_operator(op: &TruncatedOperator, gap: &Gap, lambda: f64, method: RieszMethod) -> Result<RieszOperator> {
    let values = eigvalsh(&op.entries)?;
    if values.is_empty() {
        return Err(GhoError::Empty("operator"));
    }
    if !(lambda < values[0]) {
        return Err(GhoError::invalid(format!("lambda = {lambda} must lie below the spectrum (min {})", values[0])));
    }
    // Split at the gap midpoint so edge eigenvalues are not sensitive to rounding.
    let mid = gap.midpoint();
    let below: Vec<f64> = values.iter().copied().filter(|&v| v < mid).collect();
    let above: Vec<f64> = values.iter().copied().filter(|&v| v >= mid).collect();
    let (Some(&e1_direct), Some(&e2)) = (below.last(), above.first()) else {
        return Err(GhoError::NoGap { required: 4.0 * gap.d, detail: "spectrum lies on one side of the gap".into() });
    };
    if e2 - e1_direct < 4.0 * gap.d * (1.0 - 1e-9) {
        return Err(GhoError::NoGap {
            required: 4.0 * gap.d,
            detail: format!("eigenvalues {e1_direct} and {e2} around the gap ({}, {})", gap.lower, gap.upper),
        });
    }
    let n = op.dim();
    let lam = Complex64::new(lambda - 1.0, 0.0);
    let (h1, clearance) = match method {
        RieszMethod::Projection => {
            let (vals, vecs) = eigh(&op.entries)?;
            let mut h1 = CMat::zeros(n, n);
            for (k, &v) in vals.iter().enumerate() {
                let w = if v < mid { Complex64::new(v, 0.0) } else { lam };
                for j in 0..n {
                    let c = vecs[(j, k)].conj() * w;
                    for i in 0..n {
                        h1[(i, j)] += vecs[(i, k)] * c;
                    }
                }
            }
            (h1, None)
        }
        RieszMethod::Contour { nodes } => {
            let reach = 2.0 * gap.d;
            let g1 = GapContour::around(values[0], e1_direct, reach, nodes)?;
            let g2 = GapContour::around(e2, *values.last().unwrap(), reach, nodes)?;
            let clearance = g1.clearance(&values).min(g2.clearance(&values));
            let terms: Vec<(Complex64, Complex64, bool)> = g1
                .quadrature()
                .into_iter()
                .map(|(z, w)| (z, w, true))
                .chain(g2.quadrature().into_iter().map(|(z, w)| (z, w, false)))
                .collect();
            let parts: Vec<CMat> = terms
                .par_iter()
                .map(|&(z, w, first)| {
                    let r = inverse(&crate::linalg::shifted(&op.entries, z));
                    let coef = if first { z * w } else { lam * w };
                    CMat::from_fn(n, n, |i, j| r[(i, j)] * coef)
                })
                .collect();
            // Ascending node order for a reproducible sum.
            let mut h1 = CMat::zeros(n, n);
            for p in &parts {
                for j in 0..n {
                    for i in 0..n {
                        h1[(i, j)] += p[(i, j)];
                    }
                }
            }
            (h1, Some(clearance))
        }
    };
    let defect = hermiticity_defect(&h1);
    let e1 = *eigvalsh(&hermitize(&h1))?.last().unwrap();
    Ok(RieszOperator { h1, e1, e1_direct, hermiticity_defect: defect, clearance })
}

fn hermitize(a: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GhoModel;
    use crate::operator::assemble;

    fn diag_op(values: &[f64], region: BoxRegion) -> TruncatedOperator {
        let n = region.len();
        let m = CMat::from_fn(n, n, |i, j| if i == j { Complex64::new(values[i], 0.0) } else { ZERO });
        TruncatedOperator::from_matrix(region, 0.0, m).unwrap()
    }

    #[test]
    fn admissible_mu_examples() {
        assert_eq!(admissible_mu(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert!((admissible_mu(0.2, 10.0, 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((admissible_mu(1.0, 0.1, 5.0).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(admissible_mu(1.0, 1.0, 0.0).unwrap(), 0.5);
        assert!(admissible_mu(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_operator_resolvent() {
        let region = BoxRegion::centered(1);
        let op = diag_op(&[0.0; 9], region);
        let rk = resolvent_kernel(&op, Complex64::new(-1.0, 0.0)).unwrap();
        assert!(max_abs_diff(&rk.g, &CMat::identity(9, 9)) < 1e-15);
        assert_eq!(rk.d, 1.0);
        assert!(resolvent_kernel(&op, Complex64::new(1e-10, 0.0)).is_err());
    }

    #[test]
    fn diagonal_resolvent_and_decay() {
        let region = BoxRegion::centered(1);
        let vals: Vec<f64> = (1..=9).map(|k| k as f64).collect();
        let op = diag_op(&vals, region);
        let rk = resolvent_kernel(&op, Complex64::new(0.0, 0.0)).unwrap();
        assert!((rk.g[(0, 0)].re - 1.0).abs() < 1e-15 && (rk.g[(1, 1)].re - 0.5).abs() < 1e-15);
        let rep = decay_check(&rk, 1.0).unwrap();
        assert_eq!(rep.max_offdiag_ratio, 0.0);
    }

    #[test]
    fn zero_kernel_has_zero_b() {
        let t = tilted_b_estimate(&KernelSpec::zero(), 0.5, LatticePoint::ORIGIN, &BoxRegion::centered(3)).unwrap();
        assert_eq!(t.b, 0.0);
        assert!(tilted_b_estimate(&KernelSpec::zero(), 0.6, LatticePoint::ORIGIN, &BoxRegion::centered(3)).is_err());
    }

    #[test]
    fn harper_b_small_mu_stable_and_translation_covariant() {
        let k = crate::model::harper(1.0).unwrap();
        let region = BoxRegion::centered(8);
        let b5 = tilted_b_estimate(&k, 1e-5, LatticePoint::ORIGIN, &region).unwrap();
        let b6 = tilted_b_estimate(&k, 1e-6, LatticePoint::ORIGIN, &region).unwrap();
        assert!((b5.b - b6.b).abs() <= 0.01 * b5.b);
        assert!(b5.b <= b5.row_sum_bound);
        let a = tilted_b_estimate(&k, 0.5, LatticePoint::ORIGIN, &region).unwrap();
        let c = tilted_b_estimate(&k, 0.5, LatticePoint::new(2, -1), &region).unwrap();
        assert!((a.b - c.b).abs() <= 0.05 * a.b, "{} {}", a.b, c.b);
    }

    #[test]
    fn conjugation_identity_small_box() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let op = assemble(&model, 0.7, BoxRegion::centered(5)).unwrap();
        let z = Complex64::new(5.0, 0.0);
        let b = estimate_b(&model.kernel, 5).unwrap();
        let mu = admissible_mu(1.0, 1.0, b).unwrap();
        let rep = conjugation_check(&op, z, mu, LatticePoint::new(1, 2)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn parametrix_trivial_twist_and_identity() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let region = BoxRegion::centered(5);
        let z = Complex64::new(5.0, 0.0);
        let p0 = twisted_parametrix(&model, 0.0, z, region).unwrap();
        let op0 = assemble(&model, 0.0, region).unwrap();
        let rk = resolvent_kernel(&op0, z).unwrap();
        assert_eq!(max_abs_diff(&p0.s, &rk.g), 0.0);
        assert_eq!(max_abs(&p0.t), 0.0);
        let p = twisted_parametrix_from(&model, &op0, &rk, 0.3).unwrap();
        assert!(p.residual <= 1e-10, "{}", p.residual);
        assert!(p.t_column_sum > 0.0);
    }

    #[test]
    fn riesz_diagonal_example() {
        // Four values do not fit a box, so the matrix is wrapped directly.
        let m = CMat::from_fn(4, 4, |i, j| if i == j { Complex64::new([0.0, 1.0, 5.0, 6.0][i], 0.0) } else { ZERO });
        let op = TruncatedOperator { region: BoxRegion::centered(0), epsilon: 0.0, entries: m, meta: diag_meta() };
        let gap = Gap::new(1.0, 5.0).unwrap();
        for method in [RieszMethod::Projection, RieszMethod::Contour { nodes: 256 }] {
            let r = riesz_gap_operator(&op, &gap, -1.0, method).unwrap();
            let want = [0.0, 1.0, -2.0, -2.0];
            for (i, &wi) in want.iter().enumerate() {
                for j in 0..4 {
                    let w = if i == j { wi } else { 0.0 };
                    assert!((r.h1[(i, j)] - Complex64::new(w, 0.0)).norm() < 1e-10, "{method:?}");
                }
            }
            assert!((r.e1 - 1.0).abs() < 1e-10);
            assert_eq!(r.e1_direct, 1.0);
        }
        assert!(riesz_gap_operator(&op, &gap, 0.0, RieszMethod::Projection).is_err());
        let bad = Gap::new(0.5, 5.0).unwrap();
        assert!(riesz_gap_operator(&op, &bad, -1.0, RieszMethod::Projection).is_err());
    }

    fn diag_meta() -> crate::operator::AssemblyMeta {
        crate::operator::AssemblyMeta { max_asymmetry: 0.0, asymmetry_warning: false, cutoff_tail_bound: 0.0 }
    }
}
