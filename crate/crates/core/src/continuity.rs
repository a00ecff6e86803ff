//! Hausdorff distances between spectra, scaling series and their fits.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GhoError, Result};
use crate::lattice::BoxRegion;
use crate::model::GhoModel;
use crate::operator::{assemble_with, AssemblyOptions};
use crate::rational::rational_approximant;
use crate::spectral::{
    bloch_bands_with, detect_gaps, eigen_spectrum, eigen_system, filter_edge_states, EdgeFilter, Gap, KGrid,
    SpectrumSample,
};

/// Observations at or below this level are dropped from log-log fits.
pub const NOISE_FLOOR: f64 = 1e-9;

/// `max_{a in A} min_{b in B} |a - b|` for sorted `b`.
fn directed(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .map(|&x| {
            let i = b.partition_point(|&y| y < x);
            let right = b.get(i).map_or(f64::INFINITY, |&y| y - x);
            let left = if i > 0 { x - b[i - 1] } else { f64::INFINITY };
            right.min(left)
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two finite point sets (sorted copies are made
/// when needed).
pub fn hausdorff_points(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(GhoError::Empty("point set"));
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (sa, sb) = (sorted(a), sorted(b));
    Ok(directed(&sa, &sb).max(directed(&sb, &sa)))
}

pub fn hausdorff_distance(a: &SpectrumSample, b: &SpectrumSample) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(GhoError::Empty("spectrum sample"));
    }
    Ok(directed(&a.values, &b.values).max(directed(&b.values, &a.values)))
}

/// How rational approximants are chosen for the Bloch oracle.
///
/// At scale `delta` the flux `eps` is replaced by the simplest `eps'` with
/// `|eps' - eps| <= max(rel_tol * delta, abs_tol)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxPolicy {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub q_max: u64,
}

impl Default for ApproxPolicy {
    fn default() -> Self {
        Self { rel_tol: 1.0 / 32.0, abs_tol: 1e-12, q_max: 4096 }
    }
}

/// Numerical route to `sigma(h_eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SpectrumMethod {
    Bloch { m: usize, adaptive: bool, approx: ApproxPolicy },
    Truncation { radius: u32, max_dim: usize, filter: Option<EdgeFilter> },
}

impl SpectrumMethod {
    pub fn bloch_default() -> Self {
        SpectrumMethod::Bloch { m: 64, adaptive: true, approx: ApproxPolicy::default() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpectrumMethod::Bloch { .. } => "bloch",
            SpectrumMethod::Truncation { .. } => "truncation",
        }
    }
}

/// Spectrum at `eps`; `scale` sets the approximant tolerance for Bloch.
pub fn sample_spectrum(model: &GhoModel, eps: f64, method: &SpectrumMethod, scale: f64) -> Result<SpectrumSample> {
    let wrap = |e: GhoError| GhoError::AtEpsilon { epsilon: eps, cause: Box::new(e) };
    match *method {
        SpectrumMethod::Bloch { m, adaptive, approx } => {
            let b = model.phase.constant_field_strength().ok_or(GhoError::UnsupportedPhase).map_err(wrap)?;
            let tol_eps = (approx.rel_tol * scale).max(approx.abs_tol);
            let (p, q) = if b == 0.0 {
                (0, 1)
            } else {
                let r = rational_approximant(eps * b / TAU, tol_eps * b.abs() / TAU, approx.q_max).map_err(wrap)?;
                (r.p, r.q)
            };
            let grid = if adaptive { KGrid::Adaptive(m) } else { KGrid::Fixed(m) };
            Ok(bloch_bands_with(model, p, q, grid).map_err(wrap)?.to_sample_at(eps))
        }
        SpectrumMethod::Truncation { radius, max_dim, filter } => {
            let op = assemble_with(model, eps, BoxRegion::centered(radius), &AssemblyOptions::with_max_dim(max_dim))
                .map_err(wrap)?;
            match filter {
                None => eigen_spectrum(&op).map_err(wrap),
                Some(f) => {
                    let es = eigen_system(&op).map_err(wrap)?;
                    filter_edge_states(&op, &es, f).map_err(wrap)
                }
            }
        }
    }
}

/// One spectrum per flux value, in input order.
pub fn spectral_sweep(model: &GhoModel, epsilons: &[f64], method: &SpectrumMethod) -> Result<Vec<SpectrumSample>> {
    if epsilons.is_empty() {
        return Err(GhoError::Empty("epsilon list"));
    }
    epsilons.par_iter().map(|&e| sample_spectrum(model, e, method, 0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesContext {
    pub eps0: f64,
    pub label: String,
    pub method: String,
}

/// Observations indexed by strictly decreasing positive deltas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSeries {
    pub deltas: Vec<f64>,
    pub observations: Vec<f64>,
    pub context: SeriesContext,
}

impl ScalingSeries {
    pub fn new(deltas: Vec<f64>, observations: Vec<f64>, context: SeriesContext) -> Result<Self> {
        if deltas.len() != observations.len() {
            return Err(GhoError::invalid("deltas and observations differ in length"));
        }
        if deltas.iter().any(|&d| !(d > 0.0)) {
            return Err(GhoError::invalid("deltas must be positive"));
        }
        if deltas.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(GhoError::invalid("deltas must be strictly decreasing"));
        }
        if observations.iter().any(|&o| !(o >= 0.0)) {
            return Err(GhoError::invalid("observations must be nonnegative"));
        }
        Ok(Self { deltas, observations, context })
    }

    pub fn synthetic(deltas: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let obs = deltas.iter().map(|&d| f(d)).collect();
        Self::new(deltas, obs, SeriesContext { eps0: 0.0, label: "synthetic".into(), method: "exact".into() })
    }
}

/// `delta_k = 2^-k` for k in `from..=to`, decreasing.
pub fn dyadic_deltas(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

/// Log-log least-squares fit `observation ~ constant * delta^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub exponent: f64,
    pub constant: f64,
    /// Largest absolute deviation in log space.
    pub residual: f64,
    pub points_used: usize,
    pub points_dropped: usize,
}

pub fn holder_fit(series: &ScalingSeries) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = series
        .deltas
        .iter()
        .zip(&series.observations)
        .filter(|(_, &o)| o > NOISE_FLOOR)
        .map(|(&d, &o)| (d.ln(), o.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return Err(GhoError::TooFewPoints { usable: n });
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(GhoError::invalid("all deltas coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    Ok(FitResult {
        exponent: slope,
        constant: intercept.exp(),
        residual,
        points_used: n,
        points_dropped: series.deltas.len() - n,
    })
}

/// `F(eps0) - (F(eps0 + eps) + F(eps0 - eps)) / 2`.
pub fn midpoint_defect(f: impl Fn(f64) -> f64, eps0: f64, eps: f64) -> Result<f64> {
    if eps.abs() > 0.5 {
        return Err(GhoError::invalid(format!("|eps| must be <= 1/2, got {eps}")));
    }
    Ok(f(eps0) - 0.5 * (f(eps0 + eps) + f(eps0 - eps)))
}

/// Per-delta record of a Hausdorff series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffPoint {
    pub delta: f64,
    pub distance: f64,
    pub effective_epsilon: Option<f64>,
    pub q: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffStudy {
    pub points: Vec<HausdorffPoint>,
    pub series: ScalingSeries,
}

/// `dist_H(sigma(eps0), sigma(eps0 + delta))` for each delta.
pub fn hausdorff_series(model: &GhoModel, eps0: f64, deltas: &[f64], method: &SpectrumMethod) -> Result<HausdorffStudy> {
    check_deltas(deltas)?;
    let base = sample_spectrum(model, eps0, method, 0.0)?;
    let points: Vec<HausdorffPoint> = deltas
        .par_iter()
        .map(|&d| {
            let s = sample_spectrum(model, eps0 + d, method, d)?;
            Ok(HausdorffPoint {
                delta: d,
                distance: hausdorff_distance(&base, &s)?,
                effective_epsilon: s.meta.effective_epsilon,
                q: s.meta.q,
            })
        })
        .collect::<Result<_>>()?;
    let series = ScalingSeries::new(
        deltas.to_vec(),
        points.iter().map(|p| p.distance).collect(),
        SeriesContext { eps0, label: model.label.clone(), method: method.name().into() },
    )?;
    Ok(HausdorffStudy { points, series })
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(GhoError::Empty("delta list"));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0 && d <= 0.5)) {
        return Err(GhoError::invalid(format!("deltas must lie in (0, 1/2], got {d}")));
    }
    if deltas.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(GhoError::invalid("deltas must be strictly decreasing"));
    }
    Ok(())
}

/// `E+` at `eps0` and `eps0 +- delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EPlusStudy {
    pub eps0: f64,
    pub e0: f64,
    pub deltas: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    /// Signed midpoint defects.
    pub defects: Vec<f64>,
    pub context: SeriesContext,
}

impl EPlusStudy {
    /// Midpoint defects as a series; negative defects (locally convex) are
    /// recorded as 0 and fall below the fit's noise floor.
    pub fn defect_series(&self) -> Result<ScalingSeries> {
        ScalingSeries::new(
            self.deltas.clone(),
            self.defects.iter().map(|&d| d.max(0.0)).collect(),
            self.context.clone(),
        )
    }

    /// `|E+(eps0 + delta) - E+(eps0)|`.
    pub fn difference_series(&self) -> Result<ScalingSeries> {
        ScalingSeries::new(
            self.deltas.clone(),
            self.e_plus.iter().map(|&e| (e - self.e0).abs()).collect(),
            self.context.clone(),
        )
    }
}

pub fn eplus_study(model: &GhoModel, eps0: f64, deltas: &[f64], method: &SpectrumMethod) -> Result<EPlusStudy> {
    check_deltas(deltas)?;
    let sup = |eps: f64, scale: f64| -> Result<f64> {
        crate::spectral::sup_spectrum(&sample_spectrum(model, eps, method, scale)?)
    };
    let e0 = sup(eps0, 0.0)?;
    let pairs: Vec<(f64, f64)> = deltas
        .par_iter()
        .map(|&d| Ok((sup(eps0 + d, d)?, sup(eps0 - d, d)?)))
        .collect::<Result<_>>()?;
    let (e_plus, e_minus): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let defects = e_plus.iter().zip(&e_minus).map(|(p, m)| e0 - 0.5 * (p + m)).collect();
    Ok(EPlusStudy {
        eps0,
        e0,
        deltas: deltas.to_vec(),
        e_plus,
        e_minus,
        defects,
        context: SeriesContext { eps0, label: model.label.clone(), method: method.name().into() },
    })
}

/// One row of a gap-edge track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapTrackRow {
    pub delta: f64,
    pub e1_plus: f64,
    pub e2_plus: f64,
    pub e1_minus: f64,
    pub e2_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTrack {
    pub eps0: f64,
    pub gap: Gap,
    /// Rows in input order.
    pub rows: Vec<GapTrackRow>,
}

impl GapTrack {
    /// `|E1(eps0 + delta) - E1(eps0)|` (`upper = false`) or the E2 analogue,
    /// using the larger of the two sides.
    pub fn edge_series(&self, upper: bool, label: &str, method: &str) -> Result<ScalingSeries> {
        let mut rows: Vec<GapTrackRow> = self.rows.iter().copied().filter(|r| r.delta > 0.0).collect();
        rows.sort_by(|a, b| b.delta.total_cmp(&a.delta));
        let obs = rows
            .iter()
            .map(|r| {
                if upper {
                    (r.e2_plus - self.gap.upper).abs().max((r.e2_minus - self.gap.upper).abs())
                } else {
                    (r.e1_plus - self.gap.lower).abs().max((r.e1_minus - self.gap.lower).abs())
                }
            })
            .collect();
        ScalingSeries::new(
            rows.iter().map(|r| r.delta).collect(),
            obs,
            SeriesContext { eps0: self.eps0, label: label.into(), method: method.into() },
        )
    }
}

/// Follows the edges `E1 = sup sigma_1`, `E2 = inf sigma_2` of `gap` as the
/// flux moves to `eps0 +- delta`, stepping |delta| upward from 0 and
/// matching gaps of width `> 2d` by nearest midpoint. The matched gap must
/// contain the previous midpoint; otherwise the gap is declared closed.
pub fn gap_edge_track(
    model: &GhoModel,
    eps0: f64,
    gap: Gap,
    deltas: &[f64],
    method: &SpectrumMethod,
) -> Result<GapTrack> {
    if !(gap.d > 0.0) {
        return Err(GhoError::invalid("gap must have d > 0"));
    }
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[a].abs().total_cmp(&deltas[b].abs()));
    let nonzero: Vec<f64> = order.iter().map(|&i| deltas[i].abs()).filter(|&d| d > 0.0).collect();
    let spectra: Vec<(SpectrumSample, SpectrumSample)> = nonzero
        .par_iter()
        .map(|&d| Ok((sample_spectrum(model, eps0 + d, method, d)?, sample_spectrum(model, eps0 - d, method, d)?)))
        .collect::<Result<_>>()?;
    let min_width = 2.0 * gap.d;
    let follow = |s: &SpectrumSample, prev_mid: f64, delta: f64| -> Result<(f64, f64)> {
        let candidates = detect_gaps(s, min_width)?;
        let closed = || {
            let i = s.values.partition_point(|&v| v < prev_mid);
            let width = match (i.checked_sub(1).map(|j| s.values[j]), s.values.get(i)) {
                (Some(a), Some(&b)) => b - a,
                _ => f64::INFINITY,
            };
            GhoError::GapClosed { delta, width, min_width }
        };
        let best = candidates
            .iter()
            .min_by(|a, b| (a.midpoint() - prev_mid).abs().total_cmp(&(b.midpoint() - prev_mid).abs()))
            .ok_or_else(closed)?;
        if !(best.lower < prev_mid && prev_mid < best.upper) {
            return Err(closed());
        }
        Ok((best.lower, best.upper))
    };
    let mut rows = vec![None; deltas.len()];
    let (mut mid_p, mut mid_m) = (gap.midpoint(), gap.midpoint());
    let mut next = 0;
    for &i in &order {
        let d = deltas[i].abs();
        if d == 0.0 {
            rows[i] = Some(GapTrackRow { delta: 0.0, e1_plus: gap.lower, e2_plus: gap.upper, e1_minus: gap.lower, e2_minus: gap.upper });
            continue;
        }
        let (sp, sm) = &spectra[next];
        next += 1;
        let (a_p, b_p) = follow(sp, mid_p, d)?;
        let (a_m, b_m) = follow(sm, mid_m, -d)?;
        mid_p = 0.5 * (a_p + b_p);
        mid_m = 0.5 * (a_m + b_m);
        rows[i] = Some(GapTrackRow { delta: d, e1_plus: a_p, e2_plus: b_p, e1_minus: a_m, e2_minus: b_m });
    }
    Ok(GapTrack { eps0, gap, rows: rows.into_iter().map(|r| r.expect("filled")).collect() })
}

/// Reference profile for [`modulus_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", content = "alpha", rename_all = "snake_case")]
pub enum ModulusShape {
    Sqrt,
    LinearLog,
    Pow(f64),
}

impl ModulusShape {
    pub fn eval(&self, delta: f64) -> f64 {
        match *self {
            ModulusShape::Sqrt => delta.sqrt(),
            ModulusShape::LinearLog => delta * delta.ln().abs(),
            ModulusShape::Pow(a) => delta.powf(a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusReport {
    pub k_min: f64,
    pub pass: bool,
}

/// Smallest K with `observation <= K shape(delta)` on the series.
pub fn modulus_check(series: &ScalingSeries, shape: ModulusShape) -> Result<ModulusReport> {
    if let Some(d) = series.deltas.iter().find(|&&d| d > 0.5) {
        return Err(GhoError::invalid(format!("deltas must be <= 1/2, got {d}")));
    }
    let k_min = series
        .deltas
        .iter()
        .zip(&series.observations)
        .map(|(&d, &o)| o / shape.eval(d))
        .fold(0.0, f64::max);
    Ok(ModulusReport { k_min, pass: k_min.is_finite() })
}
