//! Greedy partition of unity adapted to a finitely supported state, and the
//! localization identities used with it.

use std::collections::BTreeMap;
use std::io::Read;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use crate::bounds::{norm_bound_h, schur_row_sum, sup_xm_exp};
use crate::error::{GhoError, Result};
use crate::lattice::{BoxRegion, LatticePoint};
use crate::linalg::{hermitian_norm, CMat, ZERO};
use crate::operator::TruncatedOperator;

/// A state with finitely many nonzero amplitudes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiniteState {
    support: BTreeMap<LatticePoint, Complex64>,
}

impl FiniteState {
    /// Exact zeros are dropped; repeated points add up.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (LatticePoint, Complex64)>) -> Self {
        let mut support = BTreeMap::new();
        for (x, v) in pairs {
            *support.entry(x).or_insert(ZERO) += v;
        }
        support.retain(|_, v| *v != ZERO);
        Self { support }
    }

    /// State whose amplitudes are `values` indexed like the box.
    pub fn from_vector(region: &BoxRegion, values: &[Complex64]) -> Result<Self> {
        if values.len() != region.len() {
            return Err(GhoError::invalid(format!("vector has {} entries, box has {}", values.len(), region.len())));
        }
        Ok(Self::from_pairs(region.points().into_iter().zip(values.iter().copied())))
    }

    /// Rows `x1,x2,re,im`; a non-numeric first row is taken as a header.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut pairs = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| GhoError::Data(e.to_string()))?;
            if rec.len() != 4 {
                return Err(GhoError::Data(format!("row {}: expected x1,x2,re,im", line + 1)));
            }
            let parsed = (rec[0].parse::<i64>(), rec[1].parse::<i64>(), rec[2].parse::<f64>(), rec[3].parse::<f64>());
            match parsed {
                (Ok(x1), Ok(x2), Ok(re), Ok(im)) if re.is_finite() && im.is_finite() => {
                    pairs.push((LatticePoint::new(x1, x2), Complex64::new(re, im)));
                }
                _ if line == 0 => continue,
                _ => return Err(GhoError::Data(format!("row {}: not a valid x1,x2,re,im row", line + 1))),
            }
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, x: LatticePoint) -> Complex64 {
        self.support.get(&x).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, Complex64)> + '_ {
        self.support.iter().map(|(&x, &v)| (x, v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.support.values().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `(min, max)` corners of the support.
    pub fn bounding_box(&self) -> Option<(LatticePoint, LatticePoint)> {
        let mut it = self.support.keys();
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| {
            (LatticePoint::new(lo.x1.min(x.x1), lo.x2.min(x.x2)), LatticePoint::new(hi.x1.max(x.x1), hi.x2.max(x.x2)))
        }))
    }

    /// Amplitudes laid out on the box; errors if the support leaves it.
    pub fn to_vector(&self, region: &BoxRegion) -> Result<Vec<Complex64>> {
        let mut v = vec![ZERO; region.len()];
        for (x, a) in self.iter() {
            let i = region.index_of(x).ok_or_else(|| GhoError::Data(format!("state has support at {x:?} outside the box")))?;
            v[i] = a;
        }
        Ok(v)
    }
}

/// `clamp(2 - |x - a|_inf / N, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Plateau {
    pub center: LatticePoint,
    pub n: u32,
}

impl Plateau {
    pub fn eval(&self, x: LatticePoint) -> f64 {
        let d = x.dist_sup(self.center) as f64;
        (2.0 - d / self.n as f64).clamp(0.0, 1.0)
    }
}

pub fn plateau_function(n: u32, a: LatticePoint) -> Result<Plateau> {
    if n == 0 {
        return Err(GhoError::invalid("plateau radius must be positive"));
    }
    Ok(Plateau { center: a, n })
}

/// Sum of plateau functions at a set of centers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionFunction {
    pub n: u32,
    pub centers: Vec<LatticePoint>,
}

impl PartitionFunction {
    pub fn eval(&self, x: LatticePoint) -> f64 {
        let n = self.n;
        self.centers.iter().map(|&center| Plateau { center, n }.eval(x)).sum()
    }
}

/// Greedy centers: repeatedly take the lexicographically first `a` that
/// maximizes the residual mass in `C(a, N)`, then delete `C(a, 9N)` from the residual.
pub fn greedy_centers(phi: &FiniteState, n: u32) -> Result<Vec<LatticePoint>> {
    if n == 0 {
        return Err(GhoError::invalid("N must be positive"));
    }
    if phi.is_zero() {
        return Err(GhoError::Empty("state is identically zero"));
    }
    let r = n as i64;
    let mut residual: BTreeMap<LatticePoint, f64> = phi.iter().map(|(x, v)| (x, v.norm_sqr())).collect();
    let mut centers = Vec::new();
    while !residual.is_empty() {
        // Every center with positive box mass lies in the support's bounding box inflated by N.
        let mut mass: BTreeMap<LatticePoint, f64> = BTreeMap::new();
        for (&x, &m) in &residual {
            for d1 in -r..=r {
                for d2 in -r..=r {
                    *mass.entry(LatticePoint::new(x.x1 + d1, x.x2 + d2)).or_insert(0.0) += m;
                }
            }
        }
        let max = mass.values().copied().fold(0.0, f64::max);
        let a = *mass.iter().find(|(_, &m)| m >= max * (1.0 - 1e-12)).expect("nonempty residual").0;
        residual.retain(|x, _| x.dist_sup(a) > 9 * r);
        centers.push(a);
    }
    Ok(centers)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionOptions {
    /// Decay rate used in the exponential interaction sum.
    pub beta: f64,
    pub lipschitz_pairs: usize,
    pub seed: u64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self { beta: 1.0, lipschitz_pairs: 10_000, seed: 7 }
    }
}

/// Measured geometry of a partition and the pass flag of each inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionCertificate {
    pub n: u32,
    pub centers: Vec<LatticePoint>,
    /// Euclidean; `None` for a single center.
    pub min_center_distance: Option<f64>,
    pub min_center_distance_sup: Option<i64>,
    /// Smallest Euclidean distance between the plateau supports `C(a_j, 2N)`.
    pub min_support_distance: Option<f64>,
    /// `max_j sum_{l != j} exp(-beta rho_{j,l})`.
    pub exp_sum: f64,
    /// `exp_sum / (exp(-beta N) / beta^2)`, an empirical constant.
    pub exp_ratio: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub max_lipschitz_ratio: f64,
    pub mass_ratio: f64,
    pub center_distance_ok: bool,
    pub support_distance_ok: bool,
    pub supports_disjoint: bool,
    pub range_ok: bool,
    pub lipschitz_ok: bool,
    pub mass_ok: bool,
}

impl PartitionCertificate {
    pub fn pass(&self) -> bool {
        self.center_distance_ok
            && self.support_distance_ok
            && self.supports_disjoint
            && self.range_ok
            && self.lipschitz_ok
            && self.mass_ok
    }
}

/// Euclidean distance between the lattice boxes `C(a, 2N)` and `C(b, 2N)`.
pub fn support_distance(a: LatticePoint, b: LatticePoint, n: u32) -> f64 {
    let w = 4 * n as i64;
    let g1 = ((a.x1 - b.x1).abs() - w).max(0) as f64;
    let g2 = ((a.x2 - b.x2).abs() - w).max(0) as f64;
    g1.hypot(g2)
}

pub fn verify_partition(phi: &FiniteState, n: u32, centers: &[LatticePoint], opts: &PartitionOptions) -> Result<PartitionCertificate> {
    if n == 0 {
        return Err(GhoError::invalid("N must be positive"));
    }
    if centers.is_empty() {
        return Err(GhoError::Empty("no centers"));
    }
    if !(opts.beta > 0.0) {
        return Err(GhoError::invalid("beta must be positive"));
    }
    let nf = n as f64;
    let f = PartitionFunction { n, centers: centers.to_vec() };

    let mut min_c: Option<f64> = None;
    let mut min_sup: Option<i64> = None;
    let mut min_rho: Option<f64> = None;
    let mut disjoint = true;
    let mut exp_sum = 0.0f64;
    for (j, &a) in centers.iter().enumerate() {
        let mut row = 0.0;
        for (l, &b) in centers.iter().enumerate() {
            if l == j {
                continue;
            }
            let rho = support_distance(a, b, n);
            row += (-opts.beta * rho).exp();
            if l > j {
                min_c = Some(min_c.map_or(a.dist(b), |m| m.min(a.dist(b))));
                min_sup = Some(min_sup.map_or(a.dist_sup(b), |m| m.min(a.dist_sup(b))));
                min_rho = Some(min_rho.map_or(rho, |m| m.min(rho)));
                disjoint &= a.dist_sup(b) > 4 * n as i64;
            }
        }
        exp_sum = exp_sum.max(row);
    }
    let exp_ratio = exp_sum / ((-opts.beta * nf).exp() / (opts.beta * opts.beta));

    // Range of f on every plateau support plus a ring around it.
    let (mut f_min, mut f_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &a in centers {
        for x in BoxRegion::new(a, 2 * n + 1).points() {
            let v = f.eval(x);
            f_min = f_min.min(v);
            f_max = f_max.max(v);
        }
    }

    // Lipschitz spot check: half the pairs within sup distance 3N, half anywhere in the window.
    let lo1 = centers.iter().map(|c| c.x1).min().unwrap() - 3 * n as i64;
    let hi1 = centers.iter().map(|c| c.x1).max().unwrap() + 3 * n as i64;
    let lo2 = centers.iter().map(|c| c.x2).min().unwrap() - 3 * n as i64;
    let hi2 = centers.iter().map(|c| c.x2).max().unwrap() + 3 * n as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut max_lip = 0.0f64;
    let near = 3 * n as i64;
    for k in 0..opts.lipschitz_pairs {
        let x = LatticePoint::new(rng.gen_range(lo1..=hi1), rng.gen_range(lo2..=hi2));
        let y = if k % 2 == 0 {
            x + LatticePoint::new(rng.gen_range(-near..=near), rng.gen_range(-near..=near))
        } else {
            LatticePoint::new(rng.gen_range(lo1..=hi1), rng.gen_range(lo2..=hi2))
        };
        let d = x.dist_sup(y);
        if d == 0 {
            continue;
        }
        max_lip = max_lip.max((f.eval(x) - f.eval(y)).abs() * nf / d as f64);
    }

    let total = phi.norm();
    let mass_ratio = if total > 0.0 {
        phi.iter().map(|(x, v)| v.norm_sqr() * f.eval(x).powi(2)).sum::<f64>().sqrt() / total
    } else {
        0.0
    };

    Ok(PartitionCertificate {
        n,
        centers: centers.to_vec(),
        min_center_distance: min_c,
        min_center_distance_sup: min_sup,
        min_support_distance: min_rho,
        exp_sum,
        exp_ratio,
        f_min,
        f_max,
        max_lipschitz_ratio: max_lip,
        mass_ratio,
        center_distance_ok: min_c.is_none_or(|d| d >= 8.0 * nf),
        support_distance_ok: min_rho.is_none_or(|d| d >= 2.0 * nf),
        supports_disjoint: disjoint,
        range_ok: f_min >= 0.0 && f_max <= 1.0,
        lipschitz_ok: max_lip <= 1.0 + 1e-12,
        mass_ok: mass_ratio >= 1.0 / 9.0 - 1e-12,
    })
}

pub fn partition_function(phi: &FiniteState, n: u32) -> Result<(PartitionFunction, PartitionCertificate)> {
    partition_function_with(phi, n, &PartitionOptions::default())
}

pub fn partition_function_with(
    phi: &FiniteState,
    n: u32,
    opts: &PartitionOptions,
) -> Result<(PartitionFunction, PartitionCertificate)> {
    let centers = greedy_centers(phi, n)?;
    let cert = verify_partition(phi, n, &centers, opts)?;
    Ok((PartitionFunction { n, centers }, cert))
}

/// `[f, h](x, y) = (f(x) - f(y)) h(x, y)` on the operator's box.
pub fn localization_commutator(f: &dyn Fn(LatticePoint) -> f64, op: &TruncatedOperator) -> CMat {
    let fv: Vec<f64> = op.points().into_iter().map(f).collect();
    let n = op.dim();
    CMat::from_fn(n, n, |i, j| op.entries[(i, j)] * (fv[i] - fv[j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub norm: f64,
    /// `C / (N_f beta^3)`.
    pub reference: f64,
    pub ratio: f64,
}

/// Norm of `[f, h]` against the scale `C / (N_f beta^3)`.
pub fn commutator_report(comm: &CMat, c: f64, beta: f64, n_f: u32) -> Result<CommutatorReport> {
    // i[f, h] is Hermitian when f is real.
    let herm = CMat::from_fn(comm.nrows(), comm.ncols(), |i, j| comm[(i, j)] * Complex64::i());
    let norm = hermitian_norm(&herm)?;
    let reference = c / (n_f as f64 * beta.powi(3));
    Ok(CommutatorReport { norm, reference, ratio: norm / reference })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImsReport {
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Residual of `<f phi, (h-E) f phi> = Re <f phi, f (h-E) phi> - 1/2 <phi, [f,[f,h]] phi>`.
pub fn ims_identity_check(phi: &FiniteState, f: &dyn Fn(LatticePoint) -> f64, op: &TruncatedOperator, e: f64) -> Result<ImsReport> {
    let v = phi.to_vector(&op.region)?;
    let fv: Vec<f64> = op.points().into_iter().map(f).collect();
    let n = op.dim();
    let h = &op.entries;
    let fphi: Vec<Complex64> = v.iter().zip(&fv).map(|(a, &w)| a * w).collect();
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        (0..n).map(|i| (0..n).map(|j| h[(i, j)] * x[j]).sum::<Complex64>() - x[i] * e).collect()
    };
    let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>();
    let h_fphi = apply(&fphi);
    let h_phi = apply(&v);
    let lhs = dot(&fphi, &h_fphi).re;
    let f_h_phi: Vec<Complex64> = h_phi.iter().zip(&fv).map(|(a, &w)| a * w).collect();
    let cross = dot(&fphi, &f_h_phi).re;
    let mut double = Complex64::new(0.0, 0.0);
    for i in 0..n {
        if v[i] == ZERO {
            continue;
        }
        let mut row = ZERO;
        for j in 0..n {
            let d = fv[i] - fv[j];
            row += h[(i, j)] * (d * d) * v[j];
        }
        double += v[i].conj() * row;
    }
    let residual = (lhs - cross + 0.5 * double.re).abs();
    let tolerance = 1e-10 * (hermitian_norm(h)? + e.abs()) * phi.norm_sqr();
    Ok(ImsReport { residual, tolerance, pass: residual <= tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GhoModel;
    use crate::operator::assemble;

    fn unit(x: i64, y: i64) -> (LatticePoint, Complex64) {
        (LatticePoint::new(x, y), Complex64::new(1.0, 0.0))
    }

    #[test]
    fn plateau_values() {
        let p = plateau_function(4, LatticePoint::new(1, 1)).unwrap();
        assert_eq!(p.eval(LatticePoint::new(5, -3)), 1.0);
        assert_eq!(p.eval(LatticePoint::new(7, 1)), 0.5);
        assert_eq!(p.eval(LatticePoint::new(9, 1)), 0.0);
        assert_eq!(p.eval(LatticePoint::new(1, 20)), 0.0);
        assert!(plateau_function(0, LatticePoint::ORIGIN).is_err());
    }

    #[test]
    fn single_mass() {
        let phi = FiniteState::from_pairs([unit(0, 0)]);
        let (f, cert) = partition_function(&phi, 3).unwrap();
        assert_eq!(cert.centers.len(), 1);
        assert!(cert.centers[0].dist_sup(LatticePoint::ORIGIN) <= 3);
        assert_eq!(cert.exp_sum, 0.0);
        assert_eq!(cert.min_center_distance, None);
        assert!(cert.pass());
        let p = Plateau { center: cert.centers[0], n: 3 };
        for x in BoxRegion::new(LatticePoint::ORIGIN, 10).points() {
            assert_eq!(f.eval(x), p.eval(x));
        }
    }

    #[test]
    fn two_masses() {
        let phi = FiniteState::from_pairs([unit(0, 0), unit(100, 0)]);
        let centers = greedy_centers(&phi, 3).unwrap();
        assert_eq!(centers, vec![LatticePoint::new(-3, -3), LatticePoint::new(97, -3)]);
        let cert = verify_partition(&phi, 3, &centers, &PartitionOptions::default()).unwrap();
        assert_eq!(cert.min_center_distance, Some(100.0));
        assert_eq!(cert.min_support_distance, Some(88.0));
        assert!(cert.pass());
        assert!((cert.mass_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn close_centers_fail_distance_check() {
        let phi = FiniteState::from_pairs([unit(0, 0)]);
        let centers = [LatticePoint::new(0, 0), LatticePoint::new(12, 0)];
        let cert = verify_partition(&phi, 3, &centers, &PartitionOptions::default()).unwrap();
        assert!(!cert.center_distance_ok);
        assert!(!cert.supports_disjoint);
        assert!(!cert.pass());
    }

    #[test]
    fn zero_state_rejected() {
        assert!(greedy_centers(&FiniteState::default(), 2).is_err());
        let phi = FiniteState::from_pairs([(LatticePoint::ORIGIN, ZERO)]);
        assert!(phi.is_zero());
    }

    #[test]
    fn csv_state() {
        let phi = FiniteState::from_csv("x1,x2,re,im\n0,0,1,0\n3,-2,0,2\n".as_bytes()).unwrap();
        assert_eq!(phi.len(), 2);
        assert!((phi.norm() - 5f64.sqrt()).abs() < 1e-15);
        assert!(FiniteState::from_csv("0,0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn commutator_entries_and_constant_f() {
        let op = assemble(&GhoModel::harper(1.0, 1.0).unwrap(), 0.4, BoxRegion::centered(4)).unwrap();
        let zero = localization_commutator(&|_| 0.7, &op);
        assert_eq!(crate::linalg::max_abs(&zero), 0.0);
        let p = Plateau { center: LatticePoint::ORIGIN, n: 2 };
        let comm = localization_commutator(&|x| p.eval(x), &op);
        let pts = op.points();
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                assert_eq!(comm[(i, j)], op.entries[(i, j)] * (p.eval(pts[i]) - p.eval(pts[j])));
            }
        }
    }

    #[test]
    fn ims_trivial_and_shift() {
        let op = assemble(&GhoModel::harper(1.0, 1.0).unwrap(), 0.9, BoxRegion::centered(5)).unwrap();
        let phi = FiniteState::from_pairs(
            op.points().into_iter().enumerate().map(|(i, x)| (x, Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))),
        );
        assert!(ims_identity_check(&phi, &|_| 1.0, &op, 0.3).unwrap().residual <= 1e-12);
        let p = Plateau { center: LatticePoint::new(1, 0), n: 2 };
        let r0 = ims_identity_check(&phi, &|x| p.eval(x), &op, 0.0).unwrap();
        let r1 = ims_identity_check(&phi, &|x| p.eval(x), &op, 2.5).unwrap();
        assert!(r0.pass && r1.pass);
        assert!((r0.residual - r1.residual).abs() <= 1e-12);
    }

    #[test]
    fn ims_rejects_state_outside_box() {
        let op = assemble(&GhoModel::harper(1.0, 1.0).unwrap(), 0.0, BoxRegion::centered(2)).unwrap();
        let phi = FiniteState::from_pairs([unit(5, 0)]);
        assert!(ims_identity_check(&phi, &|_| 1.0, &op, 0.0).is_err());
    }
}
