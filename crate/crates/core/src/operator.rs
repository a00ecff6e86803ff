//! Finite-volume matrices of a model on a lattice box.

use num_complex::Complex64;
use serde::Serialize;

use crate::bounds::cutoff_tail_bound;
use crate::error::{GhoError, Result};
use crate::lattice::{BoxRegion, LatticePoint};
use crate::linalg::{CMat, ZERO};
use crate::model::{GhoModel, PhaseSpec};

/// Default cap on the matrix dimension `(2N+1)^2`.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Asymmetry above which assembly flags an inexact kernel rule.
pub const ASYMMETRY_WARNING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub max_dim: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { max_dim: DEFAULT_MAX_DIM }
    }
}

impl AssemblyOptions {
    pub fn with_max_dim(max_dim: usize) -> Self {
        Self { max_dim }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssemblyMeta {
    /// Largest `|H_ij - conj(H_ji)|` before symmetrization.
    pub max_asymmetry: f64,
    pub asymmetry_warning: bool,
    /// Norm error bound from the kernel cutoff.
    pub cutoff_tail_bound: f64,
}

/// Dense Hermitian matrix of a model on `C(a, N)`, rows indexed
/// lexicographically by (x1, x2).
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub region: BoxRegion,
    pub epsilon: f64,
    pub entries: CMat,
    pub meta: AssemblyMeta,
}

impl TruncatedOperator {
    /// Wraps an arbitrary Hermitian matrix whose dimension matches the box.
    pub fn from_matrix(region: BoxRegion, epsilon: f64, entries: CMat) -> Result<Self> {
        if entries.nrows() != region.len() || entries.ncols() != region.len() {
            return Err(GhoError::invalid(format!(
                "matrix is {}x{}, box needs {}",
                entries.nrows(),
                entries.ncols(),
                region.len()
            )));
        }
        let max_asymmetry = crate::linalg::hermiticity_defect(&entries);
        Ok(Self {
            region,
            epsilon,
            entries,
            meta: AssemblyMeta { max_asymmetry, asymmetry_warning: max_asymmetry > ASYMMETRY_WARNING, cutoff_tail_bound: 0.0 },
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn points(&self) -> Vec<LatticePoint> {
        self.region.points()
    }

    pub fn entry(&self, x: LatticePoint, y: LatticePoint) -> Option<Complex64> {
        Some(self.entries[(self.region.index_of(x)?, self.region.index_of(y)?)])
    }

    /// Nonzero entries of every row as `(column, value)` lists.
    pub fn sparse_rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let v = self.entries[(i, j)];
                        (v != ZERO).then_some((j, v))
                    })
                    .collect()
            })
            .collect()
    }

    /// Maximum absolute row sum (a bound on the operator norm).
    pub fn max_row_sum(&self) -> f64 {
        crate::linalg::max_row_abs_sum(&self.entries)
    }
}

/// Assembles `exp(i eps phi(x,y)) h(x,y)` on the box with the default size limit.
pub fn assemble(model: &GhoModel, epsilon: f64, region: BoxRegion) -> Result<TruncatedOperator> {
    assemble_with(model, epsilon, region, &AssemblyOptions::default())
}

pub fn assemble_with(
    model: &GhoModel,
    epsilon: f64,
    region: BoxRegion,
    opts: &AssemblyOptions,
) -> Result<TruncatedOperator> {
    let n = region.len();
    if n > opts.max_dim {
        return Err(GhoError::DimensionLimit { dim: n, limit: opts.max_dim, radius: region.radius });
    }
    let kernel = &model.kernel;
    let offsets = kernel.candidate_offsets();
    let mut h = CMat::zeros(n, n);
    for i in 0..n {
        let x = region.point_at(i);
        for &c in &offsets {
            let y = x - c;
            let Some(j) = region.index_of(y) else { continue };
            let v = kernel.evaluate(x, y);
            if v == ZERO {
                continue;
            }
            h[(i, j)] = v * Complex64::from_polar(1.0, epsilon * model.phase.evaluate(x, y));
        }
    }
    let mut max_asymmetry = 0.0f64;
    for j in 0..n {
        let d = h[(j, j)];
        max_asymmetry = max_asymmetry.max(2.0 * d.im.abs());
        h[(j, j)] = Complex64::new(d.re, 0.0);
        for i in j + 1..n {
            let a = h[(i, j)];
            let b = h[(j, i)].conj();
            if a == b {
                continue;
            }
            max_asymmetry = max_asymmetry.max((a - b).norm());
            let m = (a + b) * 0.5;
            h[(i, j)] = m;
            h[(j, i)] = m.conj();
        }
    }
    Ok(TruncatedOperator {
        region,
        epsilon,
        entries: h,
        meta: AssemblyMeta {
            max_asymmetry,
            asymmetry_warning: max_asymmetry > ASYMMETRY_WARNING,
            cutoff_tail_bound: cutoff_tail_bound(kernel.c(), kernel.beta(), kernel.cutoff())?,
        },
    })
}

/// `U* h U` with `U = exp(i eps phi(., c))`: entries pick up
/// `exp(i eps (phi(y,c) - phi(x,c)))`, turning the phase `phi(x,y)` into
/// the flux `F(x, y, c)`.
pub fn gauge_conjugate(op: &TruncatedOperator, c: LatticePoint, phase: &PhaseSpec) -> TruncatedOperator {
    let n = op.dim();
    let eps = op.epsilon;
    let g: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0, eps * phase.evaluate(op.region.point_at(i), c)))
        .collect();
    let mut out = op.entries.clone();
    for j in 0..n {
        for i in 0..n {
            let v = out[(i, j)];
            if v != ZERO {
                out[(i, j)] = g[i].conj() * v * g[j];
            }
        }
    }
    TruncatedOperator { region: op.region, epsilon: eps, entries: out, meta: op.meta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvalsh, hermiticity_defect};
    use crate::model::{constant_field, harper, triangle_flux};

    fn p(a: i64, b: i64) -> LatticePoint {
        LatticePoint::new(a, b)
    }

    #[test]
    fn harper_zero_flux_adjacency() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let op = assemble(&model, 0.0, BoxRegion::centered(1)).unwrap();
        assert_eq!(op.dim(), 9);
        let center = op.region.index_of(LatticePoint::ORIGIN).unwrap();
        let ones = (0..9).filter(|&j| op.entries[(center, j)] == Complex64::new(1.0, 0.0)).count();
        assert_eq!(ones, 4);
        for i in 0..9 {
            assert_eq!(op.entries[(i, i)], ZERO);
        }
    }

    #[test]
    fn harper_row_sums_bounded_by_four() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        for (eps, n) in [(0.0, 3), (0.7, 5), (2.1, 4)] {
            let op = assemble(&model, eps, BoxRegion::centered(n)).unwrap();
            assert!(op.max_row_sum() <= 4.0 + 1e-15);
            assert_eq!(op.meta.max_asymmetry, 0.0);
            assert!(hermiticity_defect(&op.entries) <= 1e-12);
        }
    }

    #[test]
    fn dimension_limit_enforced() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let err = assemble(&model, 0.0, BoxRegion::centered(32)).unwrap_err();
        assert!(matches!(err, GhoError::DimensionLimit { dim: 4225, limit: 4096, .. }));
        assert!(assemble(&model, 0.0, BoxRegion::centered(31)).is_ok());
    }

    #[test]
    fn gauge_identity_at_zero_flux() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let op = assemble(&model, 0.0, BoxRegion::centered(3)).unwrap();
        let g = gauge_conjugate(&op, p(2, -1), &model.phase);
        assert_eq!(crate::linalg::max_abs_diff(&g.entries, &op.entries), 0.0);
    }

    #[test]
    fn gauge_entry_formula() {
        let model = GhoModel::new(harper(1.0).unwrap(), constant_field(1.0).unwrap(), "h");
        let op = assemble(&model, 0.3, BoxRegion::centered(2)).unwrap();
        let c = p(1, 1);
        let g = gauge_conjugate(&op, c, &model.phase);
        let (x, y) = (p(0, 0), p(1, 0));
        let phi = |a, b| model.phase.evaluate(a, b);
        let expected = Complex64::from_polar(1.0, 0.3 * (phi(x, y) - phi(x, c) + phi(y, c)));
        assert!((g.entry(x, y).unwrap() - expected).norm() < 1e-15);
        let flux = Complex64::from_polar(1.0, 0.3 * triangle_flux(&model.phase, x, y, c));
        assert!((g.entry(x, y).unwrap() - flux).norm() < 1e-14);
    }

    #[test]
    fn gauge_preserves_spectrum() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let op = assemble(&model, 1.1, BoxRegion::centered(4)).unwrap();
        let g = gauge_conjugate(&op, p(3, 7), &model.phase);
        let (a, b) = (eigvalsh(&op.entries).unwrap(), eigvalsh(&g.entries).unwrap());
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
