//! Dense Hermitian eigendecomposition of box truncations.
//!
//! When the assembled matrix is invariant under the quarter turn about the
//! box center, `H[R i, R j] = H[i, j]`, the problem splits into four
//! sectors `k = 0..3` spanned by `b_{k,r} = (1/2) sum_s (-i)^{ks} e_{R^s r}`,
//! one per orbit `r`; the center site belongs to sector 0. Each sector is a
//! quarter of the size, which cuts the cost of a full solve sixteenfold
//! overall.

use num_complex::Complex64;
use serde::Serialize;

use super::{FilterMeta, Method, SampleMeta, SpectrumSample};
use crate::error::{GhoError, Result};
use crate::lattice::{BoxRegion, LatticePoint};
use crate::linalg::{self, CMat, ZERO};
use crate::operator::TruncatedOperator;

/// `(-i)^n`.
fn minus_i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenOptions {
    /// Use the quarter-turn sector reduction when the matrix allows it.
    pub use_symmetry: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { use_symmetry: true }
    }
}

#[derive(Debug, Clone)]
enum Layout {
    Full,
    Sector { k: usize, center: Option<usize>, orbits: Vec<[usize; 4]> },
}

#[derive(Debug, Clone)]
struct Block {
    vectors: CMat,
    layout: Layout,
}

/// Eigenvalues in ascending order with eigenvectors stored per block and
/// lifted to box coordinates on demand.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    dim: usize,
    values: Vec<f64>,
    blocks: Vec<Block>,
    order: Vec<(usize, usize)>,
}

impl Eigensystem {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sectors(&self) -> usize {
        self.blocks.len()
    }

    /// Unit eigenvector of the i-th eigenvalue in box coordinates.
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        let (b, col) = self.order[i];
        let block = &self.blocks[b];
        let mut v = vec![ZERO; self.dim];
        match &block.layout {
            Layout::Full => {
                for (r, vr) in v.iter_mut().enumerate() {
                    *vr = block.vectors[(r, col)];
                }
            }
            Layout::Sector { k, center, orbits } => {
                let offset = usize::from(center.is_some());
                if let Some(c) = center {
                    v[*c] = block.vectors[(0, col)];
                }
                for (r, orbit) in orbits.iter().enumerate() {
                    let y = block.vectors[(r + offset, col)] * 0.5;
                    for (s, &site) in orbit.iter().enumerate() {
                        v[site] = y * minus_i_pow(k * s);
                    }
                }
            }
        }
        v
    }

    /// Squared norm of the i-th eigenvector on the sites flagged in `mask`.
    pub fn mass_on(&self, i: usize, mask: &[bool]) -> f64 {
        let (b, col) = self.order[i];
        let block = &self.blocks[b];
        match &block.layout {
            Layout::Full => (0..self.dim)
                .filter(|&r| mask[r])
                .map(|r| block.vectors[(r, col)].norm_sqr())
                .sum(),
            Layout::Sector { center, orbits, .. } => {
                let offset = usize::from(center.is_some());
                let mut m = 0.0;
                if let Some(c) = center {
                    if mask[*c] {
                        m += block.vectors[(0, col)].norm_sqr();
                    }
                }
                for (r, orbit) in orbits.iter().enumerate() {
                    let hits = orbit.iter().filter(|&&s| mask[s]).count();
                    if hits > 0 {
                        m += 0.25 * hits as f64 * block.vectors[(r + offset, col)].norm_sqr();
                    }
                }
                m
            }
        }
    }

    /// `||(H - lambda_i) v_i||`.
    pub fn residual(&self, op: &TruncatedOperator, i: usize) -> f64 {
        let v = self.vector(i);
        let h = &op.entries;
        let lam = self.values[i];
        (0..self.dim)
            .map(|r| {
                let mut s = -v[r] * lam;
                for (c, vc) in v.iter().enumerate() {
                    s += h[(r, c)] * vc;
                }
                s.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Quarter-turn permutation of the box indices.
fn rotation_map(region: &BoxRegion) -> Vec<usize> {
    (0..region.len())
        .map(|i| {
            let x = region.point_at(i).rotate_about(region.center);
            region.index_of(x).expect("box is rotation invariant")
        })
        .collect()
}

/// Whether the operator commutes with the quarter turn about the box center.
pub fn c4_symmetric(op: &TruncatedOperator) -> bool {
    let n = op.dim();
    if n < 9 {
        return false;
    }
    let rot = rotation_map(&op.region);
    let h = &op.entries;
    let tol = 1e-14 * (1.0 + linalg::max_abs(h));
    for j in 0..n {
        let rj = rot[j];
        for i in 0..n {
            if (h[(rot[i], rj)] - h[(i, j)]).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Orbit representatives `v1 >= 1, v2 >= 0` relative to the center, each
/// listed as `[r, R r, R^2 r, R^3 r]`.
fn orbits(region: &BoxRegion) -> (usize, Vec<[usize; 4]>) {
    let n = region.radius as i64;
    let a = region.center;
    let center = region.index_of(a).expect("center in box");
    let mut out = Vec::with_capacity((n * (n + 1)) as usize);
    for v1 in 1..=n {
        for v2 in 0..=n {
            let mut x = a + LatticePoint::new(v1, v2);
            let mut orbit = [0usize; 4];
            for slot in orbit.iter_mut() {
                *slot = region.index_of(x).expect("in box");
                x = x.rotate_about(a);
            }
            out.push(orbit);
        }
    }
    (center, out)
}

fn sector_matrix(h: &CMat, k: usize, center: usize, orbits: &[[usize; 4]]) -> CMat {
    let offset = usize::from(k == 0);
    let dim = orbits.len() + offset;
    let phases: [Complex64; 4] = std::array::from_fn(|u| minus_i_pow(k * u));
    let mut m = CMat::zeros(dim, dim);
    if k == 0 {
        m[(0, 0)] = h[(center, center)];
        for (r, o) in orbits.iter().enumerate() {
            m[(r + 1, 0)] = h[(o[0], center)] * 2.0;
            m[(0, r + 1)] = h[(center, o[0])] * 2.0;
        }
    }
    for (c, oc) in orbits.iter().enumerate() {
        for (r, or) in orbits.iter().enumerate() {
            let row = or[0];
            let mut s = ZERO;
            for u in 0..4 {
                let v = h[(row, oc[u])];
                if v != ZERO {
                    s += phases[u] * v;
                }
            }
            m[(r + offset, c + offset)] = s;
        }
    }
    m
}

/// Eigenvalue tagged with its block and the index inside that block.
type Tagged = (f64, usize, usize);

fn solve_blocks(op: &TruncatedOperator, opts: &EigenOptions, vectors: bool) -> Result<(Vec<Tagged>, Vec<Block>)> {
    let run = |m: &CMat| -> Result<(Vec<f64>, Option<CMat>)> {
        if vectors {
            let (v, u) = linalg::eigh(m)?;
            Ok((v, Some(u)))
        } else {
            Ok((linalg::eigvalsh(m)?, None))
        }
    };
    let mut tagged = Vec::with_capacity(op.dim());
    let mut blocks = Vec::new();
    if opts.use_symmetry && c4_symmetric(op) {
        let (center, orbs) = orbits(&op.region);
        let results: Vec<Result<(Vec<f64>, Option<CMat>)>> = {
            use rayon::prelude::*;
            (0..4usize)
                .into_par_iter()
                .map(|k| run(&sector_matrix(&op.entries, k, center, &orbs)))
                .collect()
        };
        for (k, res) in results.into_iter().enumerate() {
            let (vals, u) = res.map_err(|e| match e {
                GhoError::Eigensolver { detail, .. } => GhoError::Eigensolver { dim: op.dim(), detail: format!("sector {k}: {detail}") },
                other => other,
            })?;
            tagged.extend(vals.iter().enumerate().map(|(c, &v)| (v, k, c)));
            blocks.push(Block {
                vectors: u.unwrap_or_else(|| CMat::zeros(0, 0)),
                layout: Layout::Sector { k, center: (k == 0).then_some(center), orbits: orbs.clone() },
            });
        }
    } else {
        let (vals, u) = run(&op.entries)?;
        tagged.extend(vals.iter().enumerate().map(|(c, &v)| (v, 0, c)));
        blocks.push(Block { vectors: u.unwrap_or_else(|| CMat::zeros(0, 0)), layout: Layout::Full });
    }
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok((tagged, blocks))
}

fn truncation_meta(op: &TruncatedOperator, sectors: usize) -> SampleMeta {
    SampleMeta {
        box_radius: Some(op.region.radius),
        effective_epsilon: Some(op.epsilon),
        symmetry_sectors: Some(sectors),
        ..SampleMeta::default()
    }
}

/// All eigenvalues of the truncation.
pub fn eigen_spectrum(op: &TruncatedOperator) -> Result<SpectrumSample> {
    eigen_spectrum_with(op, &EigenOptions::default())
}

pub fn eigen_spectrum_with(op: &TruncatedOperator, opts: &EigenOptions) -> Result<SpectrumSample> {
    let (tagged, blocks) = solve_blocks(op, opts, false)?;
    Ok(SpectrumSample::new(
        tagged.into_iter().map(|t| t.0).collect(),
        Method::Truncation,
        op.epsilon,
        truncation_meta(op, blocks.len()),
    ))
}

/// Eigenvalues and eigenvectors of the truncation.
pub fn eigen_system(op: &TruncatedOperator) -> Result<Eigensystem> {
    eigen_system_with(op, &EigenOptions::default())
}

pub fn eigen_system_with(op: &TruncatedOperator, opts: &EigenOptions) -> Result<Eigensystem> {
    let (tagged, blocks) = solve_blocks(op, opts, true)?;
    Ok(Eigensystem {
        dim: op.dim(),
        values: tagged.iter().map(|t| t.0).collect(),
        order: tagged.iter().map(|t| (t.1, t.2)).collect(),
        blocks,
    })
}

/// Sites within `margin` of the box boundary: `N - |x - a|_inf < margin`.
pub fn edge_layer_mask(region: &BoxRegion, margin: u32) -> Vec<bool> {
    (0..region.len())
        .map(|i| region.depth(region.point_at(i)) < margin as i64)
        .collect()
}

/// Boundary-layer filter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeFilter {
    pub margin: u32,
    pub threshold: f64,
}

impl EdgeFilter {
    /// `margin = max(2, N/5)`, `threshold = 0.5`.
    pub fn default_for(radius: u32) -> Self {
        Self { margin: (radius / 5).max(2), threshold: 0.5 }
    }
}

/// Drops eigenvalues whose eigenvector has more than `threshold` of its
/// squared norm in the boundary layer of width `margin`.
pub fn filter_edge_states(op: &TruncatedOperator, es: &Eigensystem, filter: EdgeFilter) -> Result<SpectrumSample> {
    let n = op.region.radius;
    if filter.margin == 0 || filter.margin >= n {
        return Err(GhoError::invalid(format!("margin must satisfy 0 < margin < N = {n}, got {}", filter.margin)));
    }
    if !(filter.threshold > 0.0 && filter.threshold <= 1.0) {
        return Err(GhoError::invalid(format!("threshold must lie in (0, 1], got {}", filter.threshold)));
    }
    if es.dim != op.dim() {
        return Err(GhoError::invalid("eigensystem does not match the operator"));
    }
    let mask = edge_layer_mask(&op.region, filter.margin);
    let kept: Vec<f64> = (0..es.len())
        .filter(|&i| es.mass_on(i, &mask) <= filter.threshold)
        .map(|i| es.values[i])
        .collect();
    let mut meta = truncation_meta(op, es.sectors());
    meta.filter = Some(FilterMeta {
        margin: filter.margin,
        threshold: filter.threshold,
        removed: es.len() - kept.len(),
        kept: kept.len(),
        all_removed: kept.is_empty(),
    });
    Ok(SpectrumSample::new(kept, Method::Truncation, op.epsilon, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bump_field, constant_field, harper, GhoModel, KernelSpec, PhaseSpec};
    use crate::operator::assemble;

    #[test]
    fn one_by_one_and_pauli() {
        let region = BoxRegion::centered(0);
        let op = TruncatedOperator::from_matrix(region, 0.0, CMat::from_fn(1, 1, |_, _| Complex64::new(2.5, 0.0))).unwrap();
        assert_eq!(eigen_spectrum(&op).unwrap().values, vec![2.5]);
        let m = CMat::from_fn(2, 2, |i, j| if i != j { Complex64::new(1.0, 0.0) } else { ZERO });
        let (v, _) = linalg::eigh(&m).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sectors_match_full_solve() {
        for (model, eps) in [
            (GhoModel::harper(1.0, 1.0).unwrap(), 0.9),
            (GhoModel::new(harper(1.0).unwrap(), bump_field(1.0, 0.5, 2.0).unwrap(), "bump"), 1.7),
        ] {
            let op = assemble(&model, eps, BoxRegion::centered(5)).unwrap();
            assert!(c4_symmetric(&op));
            let fast = eigen_system(&op).unwrap();
            assert_eq!(fast.sectors(), 4);
            let slow = eigen_system_with(&op, &EigenOptions { use_symmetry: false }).unwrap();
            for (a, b) in fast.values().iter().zip(slow.values()) {
                assert!((a - b).abs() < 1e-12, "{a} {b}");
            }
            for i in [0, 17, 60, 120] {
                let v = fast.vector(i);
                let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-12);
                assert!(fast.residual(&op, i) < 1e-12);
                let mask = edge_layer_mask(&op.region, 2);
                let direct: f64 = v.iter().zip(&mask).filter(|(_, &m)| m).map(|(z, _)| z.norm_sqr()).sum();
                assert!((fast.mass_on(i, &mask) - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn off_center_box_falls_back_to_full_solve() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let op = assemble(&model, 0.9, BoxRegion::new(LatticePoint::new(3, 1), 3)).unwrap();
        assert!(!c4_symmetric(&op));
        assert_eq!(eigen_system(&op).unwrap().sectors(), 1);
    }

    #[test]
    fn corner_state_is_filtered() {
        let region = BoxRegion::centered(4);
        let corner = LatticePoint::new(4, 4);
        let k = KernelSpec::custom(
            move |x, y| if x == y && x == corner { Complex64::new(10.0, 0.0) } else { ZERO },
            10.0,
            1.0,
        )
        .unwrap();
        let model = GhoModel::new(k, PhaseSpec::zero(), "corner");
        let op = assemble(&model, 0.0, region).unwrap();
        let es = eigen_system(&op).unwrap();
        let f = filter_edge_states(&op, &es, EdgeFilter { margin: 1, threshold: 0.5 }).unwrap();
        assert!(!f.values.contains(&10.0));
        let all = filter_edge_states(&op, &es, EdgeFilter { margin: 1, threshold: 1.0 }).unwrap();
        assert_eq!(all.len(), op.dim());
        assert_eq!(all.meta.filter.unwrap().removed, 0);
    }

    #[test]
    fn filter_argument_checks() {
        let model = GhoModel::new(harper(1.0).unwrap(), constant_field(1.0).unwrap(), "h");
        let op = assemble(&model, 0.0, BoxRegion::centered(3)).unwrap();
        let es = eigen_system(&op).unwrap();
        assert!(filter_edge_states(&op, &es, EdgeFilter { margin: 3, threshold: 0.5 }).is_err());
        assert!(filter_edge_states(&op, &es, EdgeFilter { margin: 1, threshold: 0.0 }).is_err());
    }
}
