//! Spectra of truncated operators and Bloch-reduced band structures.

mod bloch;
mod eigen;

use serde::Serialize;

use crate::error::{GhoError, Result};

pub use bloch::{bloch_bands, bloch_bands_with, bloch_matrix, BandStructure, KGrid, ADAPTIVE_FULL_Q};
pub use eigen::{
    c4_symmetric, edge_layer_mask, eigen_spectrum, eigen_spectrum_with, eigen_system, eigen_system_with,
    filter_edge_states, EdgeFilter, EigenOptions, Eigensystem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Truncation,
    Bloch,
}

/// Result of edge-state filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterMeta {
    pub margin: u32,
    pub threshold: f64,
    pub removed: usize,
    pub kept: usize,
    /// Every eigenvalue was removed.
    pub all_removed: bool,
}

/// How a spectrum sample was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SampleMeta {
    pub box_radius: Option<u32>,
    pub p: Option<i64>,
    pub q: Option<u64>,
    pub k_grid: Option<usize>,
    /// Flux actually used (differs from the requested value for rational approximants).
    pub effective_epsilon: Option<f64>,
    pub filter: Option<FilterMeta>,
    pub symmetry_sectors: Option<usize>,
}

/// Sorted eigenvalues with provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSample {
    pub values: Vec<f64>,
    pub method: Method,
    pub epsilon: f64,
    pub meta: SampleMeta,
}

impl SpectrumSample {
    pub fn new(mut values: Vec<f64>, method: Method, epsilon: f64, meta: SampleMeta) -> Self {
        values.sort_by(f64::total_cmp);
        Self { values, method, epsilon, meta }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self::new(values, Method::Truncation, 0.0, SampleMeta::default())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// `sup sigma`: the largest value.
pub fn sup_spectrum(s: &SpectrumSample) -> Result<f64> {
    s.max().ok_or(GhoError::Empty("spectrum sample"))
}

/// An open spectral gap `(a, b)` with `d = (b - a) / 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gap {
    pub lower: f64,
    pub upper: f64,
    pub d: f64,
    /// Number of sample values at or below `lower` (the size of sigma_1).
    pub below: usize,
}

impl Gap {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(upper > lower) {
            return Err(GhoError::invalid(format!("gap edges must satisfy b > a, got ({lower}, {upper})")));
        }
        Ok(Self { lower, upper, d: (upper - lower) / 4.0, below: 0 })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Maximal open intervals between consecutive values longer than `delta`,
/// ordered by lower edge.
pub fn detect_gaps(s: &SpectrumSample, delta: f64) -> Result<Vec<Gap>> {
    if s.is_empty() {
        return Err(GhoError::Empty("spectrum sample"));
    }
    Ok(s.values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] > delta)
        .map(|(i, w)| Gap { lower: w[0], upper: w[1], d: (w[1] - w[0]) / 4.0, below: i + 1 })
        .collect())
}

/// The widest gap; near-ties (relative 1e-9) go to the lowest one.
pub fn largest_gap(gaps: &[Gap]) -> Option<Gap> {
    let widest = gaps.iter().map(Gap::width).fold(f64::NEG_INFINITY, f64::max);
    gaps.iter().copied().find(|g| g.width() >= widest * (1.0 - 1e-9))
}
