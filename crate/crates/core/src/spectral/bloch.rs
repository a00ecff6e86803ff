//! Magnetic Bloch reduction at rational flux.
//!
//! For a translation-invariant kernel `t(x - y)` in the constant field
//! `phi(x,y) = (B/2)(x2 y1 - x1 y2)`, the flux per plaquette is
//! `alpha = eps B / (2 pi)`. Conjugating by `exp(i eps (B/2) x1 x2)` moves
//! to the Landau gauge `(B/2)(x1 + y1)(x2 - y2)`, which is periodic with
//! period q in x1 and 1 in x2 when `alpha = p/q`. The Bloch matrix is
//!
//! `H(k)[j, (j - c1) mod q] += t(c) exp(i (2 pi alpha j c2 - pi alpha c1 c2)) exp(-i k.c)`.
//!
//! A unit magnetic translation in x1 shifts k2 by `2 pi p / q`, so sampling
//! `k` in `[0, 2 pi / q)^2` already covers the spectrum.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{Method, SampleMeta, SpectrumSample};
use crate::error::{GhoError, Result};
use crate::linalg::{self, CMat};
use crate::model::{GhoModel, HoppingTable};
use crate::rational::gcd;

/// Denominator up to which [`KGrid::Adaptive`] keeps the full grid.
pub const ADAPTIVE_FULL_Q: u64 = 64;

/// Quasi-momentum grid per axis, uniform and endpoint-exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KGrid {
    Fixed(usize),
    /// `m` points for `q <= 64`, `max(2, ceil(64 m / q))` beyond; bands
    /// flatten as q grows so fewer samples resolve them.
    Adaptive(usize),
}

impl KGrid {
    pub fn size(&self, q: u64) -> usize {
        match *self {
            KGrid::Fixed(m) => m,
            KGrid::Adaptive(m) if q <= ADAPTIVE_FULL_Q => m,
            KGrid::Adaptive(m) => (m as u64 * ADAPTIVE_FULL_Q).div_ceil(q).max(2).min(m as u64) as usize,
        }
    }
}

/// The q bands sampled on an `m x m` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStructure {
    pub p: i64,
    pub q: u64,
    pub m: usize,
    pub epsilon: f64,
    /// `bands[j]` holds the j-th eigenvalue at every grid point.
    pub bands: Vec<Vec<f64>>,
}

impl BandStructure {
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.bands.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn to_sample(&self) -> SpectrumSample {
        self.to_sample_at(self.epsilon)
    }

    /// Sample labelled with a requested flux (the band flux is recorded as effective).
    pub fn to_sample_at(&self, requested: f64) -> SpectrumSample {
        SpectrumSample::new(
            self.values(),
            Method::Bloch,
            requested,
            SampleMeta {
                p: Some(self.p),
                q: Some(self.q),
                k_grid: Some(self.m),
                effective_epsilon: Some(self.epsilon),
                ..SampleMeta::default()
            },
        )
    }
}

/// Bloch matrix at `alpha = p/q` and quasi-momentum `(k1, k2)`.
pub fn bloch_matrix(table: &HoppingTable, p: i64, q: u64, k1: f64, k2: f64) -> CMat {
    let qi = q as i64;
    let mut h = CMat::zeros(q as usize, q as usize);
    for &(c, t) in table.entries() {
        let bloch = Complex64::from_polar(1.0, -(k1 * c.x1 as f64 + k2 * c.x2 as f64));
        // pi alpha c1 c2 reduced modulo 2 pi: numerator p c1 c2 mod 2q
        let cross = (p as i128 * c.x1 as i128 * c.x2 as i128).rem_euclid(2 * q as i128) as f64;
        let base = t * bloch * Complex64::from_polar(1.0, -PI * cross / q as f64);
        for j in 0..qi {
            let col = (j - c.x1).rem_euclid(qi) as usize;
            let num = (p as i128 * j as i128 * c.x2 as i128).rem_euclid(q as i128) as f64;
            h[(j as usize, col)] += base * Complex64::from_polar(1.0, TAU * num / q as f64);
        }
    }
    h
}

/// Bands of a translation-invariant model in a constant field at
/// `eps = 2 pi p / (q B)`, sampled on an `m x m` grid.
pub fn bloch_bands(model: &GhoModel, p: i64, q: u64, m: usize) -> Result<BandStructure> {
    bloch_bands_with(model, p, q, KGrid::Fixed(m))
}

pub fn bloch_bands_with(model: &GhoModel, p: i64, q: u64, grid: KGrid) -> Result<BandStructure> {
    if q == 0 {
        return Err(GhoError::invalid("denominator q must be positive"));
    }
    if gcd(p.unsigned_abs(), q) != 1 {
        return Err(GhoError::NotCoprime { p, q });
    }
    let table = model.kernel.translation_invariant_table().ok_or(GhoError::NotTranslationInvariant)?;
    let b = model.phase.constant_field_strength().ok_or(GhoError::UnsupportedPhase)?;
    if b == 0.0 && p != 0 {
        return Err(GhoError::invalid("zero field only admits p = 0"));
    }
    let m = grid.size(q);
    if m == 0 {
        return Err(GhoError::invalid("k-grid size must be positive"));
    }
    let epsilon = if b == 0.0 { 0.0 } else { TAU * p as f64 / (q as f64 * b) };
    let step = TAU / (q as f64 * m as f64);
    let per_k: Vec<Result<Vec<f64>>> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let (i1, i2) = (idx / m, idx % m);
            linalg::eigvalsh(&bloch_matrix(&table, p, q, i1 as f64 * step, i2 as f64 * step))
        })
        .collect();
    let mut bands = vec![Vec::with_capacity(m * m); q as usize];
    for vals in per_k {
        for (band, v) in bands.iter_mut().zip(vals?) {
            band.push(v);
        }
    }
    Ok(BandStructure { p, q, m, epsilon, bands })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermiticity_defect;
    use crate::model::{random_translation_invariant, constant_field};

    #[test]
    fn zero_flux_harper_is_cosine_symbol() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let bs = bloch_bands(&model, 0, 1, 8).unwrap();
        assert_eq!(bs.bands.len(), 1);
        let v = bs.values();
        assert!((v[0] + 4.0).abs() < 1e-14 && (v[v.len() - 1] - 4.0).abs() < 1e-14);
        let step = TAU / 8.0;
        let direct = 2.0 * (3.0 * step).cos() + 2.0 * (5.0 * step).cos();
        assert!((bs.bands[0][3 * 8 + 5] - direct).abs() < 1e-14);
    }

    #[test]
    fn half_flux_is_symmetric() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let bs = bloch_bands(&model, 1, 2, 16).unwrap();
        for (a, b) in bs.bands[0].iter().zip(&bs.bands[1]) {
            assert!((a + b).abs() < 1e-13);
        }
        // lambda(k) = sqrt(4 cos^2 k2 + |1 + e^{2 i k1}|^2) in this gauge; spot check k = 0
        assert!((bs.bands[1][0] - 8f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bloch_matrices_are_hermitian() {
        let k = random_translation_invariant(7, 2, 1.0, 0.8).unwrap();
        let table = k.translation_invariant_table().unwrap();
        for (p, q) in [(1, 3), (2, 5), (3, 7)] {
            assert!(hermiticity_defect(&bloch_matrix(&table, p, q, 0.3, 1.1)) < 1e-14);
        }
        let model = GhoModel::new(k, constant_field(1.0).unwrap(), "r");
        assert_eq!(bloch_bands(&model, 2, 5, 4).unwrap().bands.len(), 5);
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        assert!(matches!(bloch_bands(&model, 2, 4, 4), Err(GhoError::NotCoprime { .. })));
        let bump = GhoModel::new(crate::model::harper(1.0).unwrap(), crate::model::bump_field(1.0, 0.1, 2.0).unwrap(), "b");
        assert!(matches!(bloch_bands(&bump, 1, 3, 4), Err(GhoError::UnsupportedPhase)));
        let modk = crate::model::modulated(&crate::model::harper(1.0).unwrap(), 0.2, [1.0, 0.0]).unwrap();
        let m2 = GhoModel::new(modk, constant_field(1.0).unwrap(), "m");
        assert!(matches!(bloch_bands(&m2, 1, 3, 4), Err(GhoError::NotTranslationInvariant)));
    }

    #[test]
    fn adaptive_grid_sizes() {
        assert_eq!(KGrid::Adaptive(64).size(13), 64);
        assert_eq!(KGrid::Adaptive(64).size(64), 64);
        assert_eq!(KGrid::Adaptive(64).size(65), 64);
        assert_eq!(KGrid::Adaptive(64).size(1040), 4);
        assert_eq!(KGrid::Adaptive(64).size(2081), 2);
        assert_eq!(KGrid::Adaptive(8).size(640), 2);
    }
}
