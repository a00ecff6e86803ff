//! Hopping kernels, magnetic phases and the models built from them.
//!
//! A model pairs a Hermitian kernel `h(x, y)` obeying
//! `|h(x, y)| <= C exp(-beta |x - y|)` with a real antisymmetric phase
//! `phi(x, y)` whose triangle flux is bounded by `B` times the triangle
//! area. The flux parameter `epsilon` is not part of the model; it is
//! supplied at assembly.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GhoError, Result};
use crate::lattice::{triangle_area, LatticePoint};

pub type KernelFn = Arc<dyn Fn(LatticePoint, LatticePoint) -> Complex64 + Send + Sync>;
pub type PhaseFn = Arc<dyn Fn(LatticePoint, LatticePoint) -> f64 + Send + Sync>;

/// Default tail cutoff radius `ceil(18 / beta)`.
pub fn default_cutoff(beta: f64) -> u32 {
    (18.0 / beta).ceil() as u32
}

/// Hopping amplitudes `t(c)` of a translation-invariant kernel, keyed by
/// the offset `c = x - y`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingTable {
    entries: Vec<(LatticePoint, Complex64)>,
    index: HashMap<LatticePoint, usize>,
}

impl HoppingTable {
    /// Builds the table; zero amplitudes are dropped and entries sorted by offset.
    pub fn new(mut entries: Vec<(LatticePoint, Complex64)>) -> Self {
        entries.retain(|(_, t)| *t != Complex64::new(0.0, 0.0));
        entries.sort_by_key(|(c, _)| *c);
        entries.dedup_by_key(|(c, _)| *c);
        let index = entries.iter().enumerate().map(|(i, (c, _))| (*c, i)).collect();
        Self { entries, index }
    }

    pub fn get(&self, c: LatticePoint) -> Complex64 {
        self.index
            .get(&c)
            .map(|&i| self.entries[i].1)
            .unwrap_or_default()
    }

    pub fn entries(&self) -> &[(LatticePoint, Complex64)] {
        &self.entries
    }

    pub fn offsets(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.entries.iter().map(|(c, _)| *c)
    }
}

/// Real multiplier `m(x) = 1 + amp cos(k . x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub amp: f64,
    pub wave: [f64; 2],
}

impl Modulation {
    pub fn eval(&self, x: LatticePoint) -> f64 {
        1.0 + self.amp * (self.wave[0] * x.x1 as f64 + self.wave[1] * x.x2 as f64).cos()
    }

    pub fn sup(&self) -> f64 {
        1.0 + self.amp.abs()
    }
}

#[derive(Clone)]
pub enum KernelRule {
    Zero,
    /// `h(x, y) = t(x - y)`.
    Hopping(HoppingTable),
    /// `h(x, y) = t(x - y) m(x) m(y)`.
    Modulated { table: HoppingTable, modulation: Modulation },
    Custom(KernelFn),
}

impl fmt::Debug for KernelRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelRule::Zero => write!(f, "Zero"),
            KernelRule::Hopping(t) => write!(f, "Hopping({} offsets)", t.entries.len()),
            KernelRule::Modulated { table, modulation } => {
                write!(f, "Modulated({} offsets, {:?})", table.entries.len(), modulation)
            }
            KernelRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A hopping kernel with its declared decay constants.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    rule: KernelRule,
    c: f64,
    beta: f64,
    cutoff: u32,
    name: String,
}

impl KernelSpec {
    /// Checks `C > 0` and `beta` in (0, 1]; the cutoff defaults to `ceil(18/beta)`.
    pub fn new(rule: KernelRule, c: f64, beta: f64, name: impl Into<String>) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(GhoError::invalid(format!("decay prefactor C must be positive, got {c}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(GhoError::invalid(format!("decay rate beta must lie in (0, 1], got {beta}")));
        }
        Ok(Self { rule, c, beta, cutoff: default_cutoff(beta), name: name.into() })
    }

    pub fn custom(
        f: impl Fn(LatticePoint, LatticePoint) -> Complex64 + Send + Sync + 'static,
        c: f64,
        beta: f64,
    ) -> Result<Self> {
        Self::new(KernelRule::Custom(Arc::new(f)), c, beta, "custom")
    }

    pub fn zero() -> Self {
        Self { rule: KernelRule::Zero, c: 1.0, beta: 1.0, cutoff: default_cutoff(1.0), name: "zero".into() }
    }

    pub fn with_cutoff(mut self, cutoff: u32) -> Result<Self> {
        if cutoff == 0 {
            return Err(GhoError::invalid("cutoff radius must be positive"));
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rule(&self) -> &KernelRule {
        &self.rule
    }

    pub fn evaluate(&self, x: LatticePoint, y: LatticePoint) -> Complex64 {
        let c = x - y;
        if c.norm2() > self.cutoff as f64 {
            return Complex64::new(0.0, 0.0);
        }
        match &self.rule {
            KernelRule::Zero => Complex64::new(0.0, 0.0),
            KernelRule::Hopping(t) => t.get(c),
            KernelRule::Modulated { table, modulation } => {
                table.get(c) * (modulation.eval(x) * modulation.eval(y))
            }
            KernelRule::Custom(f) => f(x, y),
        }
    }

    /// Offsets `x - y` that can carry a nonzero value, when known in advance.
    pub fn support_offsets(&self) -> Option<Vec<LatticePoint>> {
        let r = self.cutoff as f64;
        match &self.rule {
            KernelRule::Zero => Some(Vec::new()),
            KernelRule::Hopping(t) | KernelRule::Modulated { table: t, .. } => {
                Some(t.offsets().filter(|c| c.norm2() <= r).collect())
            }
            KernelRule::Custom(_) => None,
        }
    }

    /// Every offset within the cutoff radius.
    pub fn candidate_offsets(&self) -> Vec<LatticePoint> {
        self.support_offsets().unwrap_or_else(|| {
            let r = self.cutoff as i64;
            (-r..=r)
                .flat_map(|a| (-r..=r).map(move |b| LatticePoint::new(a, b)))
                .filter(|c| c.norm2() <= self.cutoff as f64)
                .collect()
        })
    }

    /// The hopping table of a translation-invariant kernel, cut at the radius.
    pub fn translation_invariant_table(&self) -> Option<HoppingTable> {
        let r = self.cutoff as f64;
        match &self.rule {
            KernelRule::Zero => Some(HoppingTable::new(Vec::new())),
            KernelRule::Hopping(t) => Some(HoppingTable::new(
                t.entries().iter().copied().filter(|(c, _)| c.norm2() <= r).collect(),
            )),
            _ => None,
        }
    }
}

#[derive(Clone)]
pub enum PhaseRule {
    Zero,
    /// `phi(x, y) = (B/2)(x2 y1 - x1 y2)`.
    ConstantField { b: f64 },
    /// Line integral of the symmetric-gauge potential of
    /// `b(u) = b0 + amp exp(-|u|^2 / width^2)` along the segment from y to x.
    BumpField { b0: f64, amp: f64, width: f64 },
    Custom(PhaseFn),
}

impl fmt::Debug for PhaseRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseRule::Zero => write!(f, "Zero"),
            PhaseRule::ConstantField { b } => write!(f, "ConstantField {{ b: {b} }}"),
            PhaseRule::BumpField { b0, amp, width } => {
                write!(f, "BumpField {{ b0: {b0}, amp: {amp}, width: {width} }}")
            }
            PhaseRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Eight-point Gauss-Legendre rule on [-1, 1] as (node, weight) for the positive nodes.
const GAUSS_LEGENDRE_8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// A magnetic phase with its declared flux bound `B`.
#[derive(Debug, Clone)]
pub struct PhaseSpec {
    rule: PhaseRule,
    flux_bound: f64,
    name: String,
}

impl PhaseSpec {
    pub fn new(rule: PhaseRule, flux_bound: f64, name: impl Into<String>) -> Result<Self> {
        if !(flux_bound >= 0.0 && flux_bound.is_finite()) {
            return Err(GhoError::invalid(format!("flux bound must be nonnegative, got {flux_bound}")));
        }
        Ok(Self { rule, flux_bound, name: name.into() })
    }

    pub fn zero() -> Self {
        Self { rule: PhaseRule::Zero, flux_bound: 0.0, name: "zero".into() }
    }

    pub fn custom(f: impl Fn(LatticePoint, LatticePoint) -> f64 + Send + Sync + 'static, flux_bound: f64) -> Result<Self> {
        Self::new(PhaseRule::Custom(Arc::new(f)), flux_bound, "custom")
    }

    pub fn flux_bound(&self) -> f64 {
        self.flux_bound
    }

    pub fn rule(&self) -> &PhaseRule {
        &self.rule
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Field strength of a constant-field phase.
    pub fn constant_field_strength(&self) -> Option<f64> {
        match self.rule {
            PhaseRule::ConstantField { b } => Some(b),
            PhaseRule::Zero => Some(0.0),
            _ => None,
        }
    }

    pub fn evaluate(&self, x: LatticePoint, y: LatticePoint) -> f64 {
        match &self.rule {
            PhaseRule::Zero => 0.0,
            PhaseRule::ConstantField { b } => 0.5 * b * y.cross(x) as f64,
            PhaseRule::BumpField { b0, amp, width } => {
                // Evaluate on the lexicographically smaller ordering so that
                // antisymmetry holds bit for bit.
                if x > y {
                    -bump_phase(*b0, *amp, *width, y, x)
                } else {
                    bump_phase(*b0, *amp, *width, x, y)
                }
            }
            PhaseRule::Custom(f) => f(x, y),
        }
    }
}

/// Angular profile `g(r)` with `A(u) = g(|u|) (-u2, u1)`.
fn bump_profile(b0: f64, amp: f64, width: f64, r: f64) -> f64 {
    let s = r * r / (width * width);
    let ratio = if s < 1e-8 { 1.0 - 0.5 * s } else { -(-s).exp_m1() / s };
    0.5 * b0 + 0.5 * amp * ratio
}

fn bump_phase(b0: f64, amp: f64, width: f64, x: LatticePoint, y: LatticePoint) -> f64 {
    let cross = y.cross(x);
    if cross == 0 {
        return 0.0;
    }
    let (dx1, dx2) = ((x.x1 - y.x1) as f64, (x.x2 - y.x2) as f64);
    let at = |t: f64| {
        let u1 = y.x1 as f64 + t * dx1;
        let u2 = y.x2 as f64 + t * dx2;
        bump_profile(b0, amp, width, u1.hypot(u2))
    };
    // Panels no longer than width/2 keep the rule at rounding-level accuracy.
    let panels = (2.0 * dx1.hypot(dx2) / width).ceil().max(1.0) as usize;
    let h = 1.0 / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for &(node, weight) in &GAUSS_LEGENDRE_8 {
            sum += weight * (at(mid - 0.5 * h * node) + at(mid + 0.5 * h * node));
        }
    }
    cross as f64 * sum * 0.5 * h
}

/// Flux through the triangle (x, y, z): `phi(x,y) + phi(y,z) + phi(z,x)`.
pub fn triangle_flux(phase: &PhaseSpec, x: LatticePoint, y: LatticePoint, z: LatticePoint) -> f64 {
    phase.evaluate(x, y) + phase.evaluate(y, z) + phase.evaluate(z, x)
}

/// Kernel and phase together; `epsilon` enters only at assembly.
#[derive(Debug, Clone)]
pub struct GhoModel {
    pub kernel: KernelSpec,
    pub phase: PhaseSpec,
    pub label: String,
}

impl GhoModel {
    pub fn new(kernel: KernelSpec, phase: PhaseSpec, label: impl Into<String>) -> Self {
        Self { kernel, phase, label: label.into() }
    }

    /// Nearest-neighbor hopping in a constant field.
    pub fn harper(t: f64, b: f64) -> Result<Self> {
        Ok(Self::new(harper(t)?, constant_field(b)?, format!("harper(t={t}) in constant_field(B={b})")))
    }
}

/// Nearest-neighbor kernel of amplitude `t`, declared with `C = t e`, `beta = 1`.
pub fn harper(t: f64) -> Result<KernelSpec> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(GhoError::invalid(format!("harper amplitude must be positive, got {t}")));
    }
    let amp = Complex64::new(t, 0.0);
    let table = HoppingTable::new(
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .map(|c| (LatticePoint::from(c), amp))
            .collect(),
    );
    KernelSpec::new(KernelRule::Hopping(table), t * std::f64::consts::E, 1.0, format!("harper(t={t})"))
}

/// `phi(x, y) = (B/2)(x2 y1 - x1 y2)`, flux exactly `B` times the signed area.
pub fn constant_field(b: f64) -> Result<PhaseSpec> {
    if !b.is_finite() {
        return Err(GhoError::invalid("field strength must be finite"));
    }
    PhaseSpec::new(PhaseRule::ConstantField { b }, b.abs(), format!("constant_field(B={b})"))
}

/// Seeded random translation-invariant kernel supported on `|c|_inf <= range`.
///
/// Each amplitude is `C exp(-beta |c|) u` with `u` drawn from the unit disk
/// (real for `c = 0`); `t(-c)` is the conjugate of `t(c)`.
pub fn random_translation_invariant(seed: u64, range: u32, c: f64, beta: f64) -> Result<KernelSpec> {
    if range == 0 {
        return Err(GhoError::invalid("random kernel range must be positive"));
    }
    if !(c > 0.0) || !(beta > 0.0 && beta <= 1.0) {
        return Err(GhoError::invalid(format!("need C > 0 and beta in (0, 1], got C={c}, beta={beta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = range as i64;
    let mut entries = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            let off = LatticePoint::new(a, b);
            if off < -off {
                continue;
            }
            let scale = c * (-beta * off.norm2()).exp();
            let (rad, theta): (f64, f64) = (rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
            if off == LatticePoint::ORIGIN {
                entries.push((off, Complex64::new(scale * (2.0 * rng.gen::<f64>() - 1.0), 0.0)));
                continue;
            }
            let t = Complex64::from_polar(scale * rad, theta);
            entries.push((off, t));
            entries.push((-off, t.conj()));
        }
    }
    KernelSpec::new(
        KernelRule::Hopping(HoppingTable::new(entries)),
        c,
        beta,
        format!("random_ti(seed={seed}, range={range}, C={c}, beta={beta})"),
    )
}

/// `h(x, y) = t(x - y) m(x) m(y)` with `m(x) = 1 + amp cos(k . x)`.
///
/// The decay prefactor becomes `C (1 + |amp|)^2`.
pub fn modulated(base: &KernelSpec, amp: f64, wave: [f64; 2]) -> Result<KernelSpec> {
    let table = base.translation_invariant_table().ok_or(GhoError::NotTranslationInvariant)?;
    if !amp.is_finite() || !wave.iter().all(|w| w.is_finite()) {
        return Err(GhoError::invalid("modulation parameters must be finite"));
    }
    let modulation = Modulation { amp, wave };
    let c = base.c() * modulation.sup().powi(2);
    KernelSpec::new(
        KernelRule::Modulated { table, modulation },
        c,
        base.beta(),
        format!("modulated({}, amp={amp}, wave=[{}, {}])", base.name(), wave[0], wave[1]),
    )?
    .with_cutoff(base.cutoff())
}

/// Phase of the field `b0 + amp exp(-|u|^2/width^2)`; flux bound `|b0| + |amp|`.
pub fn bump_field(b0: f64, amp: f64, width: f64) -> Result<PhaseSpec> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(GhoError::invalid(format!("bump width must be positive, got {width}")));
    }
    if !b0.is_finite() || !amp.is_finite() {
        return Err(GhoError::invalid("bump field parameters must be finite"));
    }
    PhaseSpec::new(
        PhaseRule::BumpField { b0, amp, width },
        b0.abs() + amp.abs(),
        format!("bump_field(B0={b0}, amp={amp}, width={width})"),
    )
}

/// One representative of every builtin kernel and phase family.
pub fn builtin_models() -> Vec<GhoModel> {
    let h = harper(1.0).expect("valid");
    let cf = constant_field(1.0).expect("valid");
    vec![
        GhoModel::new(h.clone(), cf.clone(), "harper"),
        GhoModel::new(random_translation_invariant(42, 2, 1.0, 1.0).expect("valid"), cf.clone(), "random_ti"),
        GhoModel::new(modulated(&h, 0.3, [0.7, 1.3]).expect("valid"), cf, "modulated"),
        GhoModel::new(h, bump_field(1.0, 0.5, 4.0).expect("valid"), "harper_bump"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelReport {
    pub hermiticity_max_violation: f64,
    pub decay_max_ratio: f64,
    pub pass: bool,
}

/// Checks hermiticity and the declared exponential decay on sample pairs.
pub fn verify_kernel(kernel: &KernelSpec, pairs: &[(LatticePoint, LatticePoint)]) -> Result<KernelReport> {
    if pairs.is_empty() {
        return Err(GhoError::Empty("kernel sample pairs"));
    }
    let mut herm = 0.0f64;
    let mut ratio = 0.0f64;
    for &(x, y) in pairs {
        let hxy = kernel.evaluate(x, y);
        herm = herm.max((hxy - kernel.evaluate(y, x).conj()).norm());
        let envelope = kernel.c() * (-kernel.beta() * x.dist(y)).exp();
        ratio = ratio.max(hxy.norm() / envelope);
    }
    Ok(KernelReport {
        hermiticity_max_violation: herm,
        decay_max_ratio: ratio,
        pass: herm <= 1e-12 && ratio <= 1.0 + 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseReport {
    pub antisymmetry_max_violation: f64,
    pub flux_max_excess: f64,
    pub pass: bool,
}

/// Checks antisymmetry and `|F| <= B area` on sample triples.
pub fn verify_phase(
    phase: &PhaseSpec,
    triples: &[(LatticePoint, LatticePoint, LatticePoint)],
) -> Result<PhaseReport> {
    if triples.is_empty() {
        return Err(GhoError::Empty("phase sample triples"));
    }
    let b = phase.flux_bound();
    let mut anti = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    let mut flux_ok = true;
    for &(x, y, z) in triples {
        for (p, q) in [(x, y), (y, z), (z, x)] {
            anti = anti.max((phase.evaluate(p, q) + phase.evaluate(q, p)).abs());
        }
        for p in [x, y, z] {
            anti = anti.max(phase.evaluate(p, p).abs());
        }
        let allowed = b * triangle_area(x, y, z);
        let e = triangle_flux(phase, x, y, z).abs() - allowed;
        excess = excess.max(e);
        if e > 1e-9 * (1.0 + allowed) {
            flux_ok = false;
        }
    }
    Ok(PhaseReport {
        antisymmetry_max_violation: anti,
        flux_max_excess: excess,
        pass: anti <= 1e-12 && flux_ok,
    })
}

/// Kernel section of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelFile {
    /// `{"type": "harper", "t": 1.0}`
    Harper { t: f64 },
    /// `{"type": "random_ti", "seed": 42, "range": 2, "c": 1.0, "beta": 1.0}`
    RandomTi { seed: u64, range: u32, c: f64, beta: f64 },
    /// `{"type": "modulated", "base": {...}, "amp": 0.3, "wave": [0.7, 1.3]}`
    Modulated { base: Box<KernelFile>, amp: f64, wave: [f64; 2] },
}

/// Phase section of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseFile {
    /// `{"type": "constant_field", "b": 1.0}`
    ConstantField { b: f64 },
    /// `{"type": "bump_field", "b0": 1.0, "amp": 0.5, "width": 4.0}`
    BumpField { b0: f64, amp: f64, width: f64 },
}

/// JSON model file: `{"kernel": {...}, "phase": {...}, "label": "..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kernel: KernelFile,
    pub phase: PhaseFile,
    pub label: String,
}

impl KernelFile {
    pub fn build(&self) -> Result<KernelSpec> {
        match self {
            KernelFile::Harper { t } => harper(*t),
            KernelFile::RandomTi { seed, range, c, beta } => random_translation_invariant(*seed, *range, *c, *beta),
            KernelFile::Modulated { base, amp, wave } => modulated(&base.build()?, *amp, *wave),
        }
    }
}

impl PhaseFile {
    pub fn build(&self) -> Result<PhaseSpec> {
        match self {
            PhaseFile::ConstantField { b } => constant_field(*b),
            PhaseFile::BumpField { b0, amp, width } => bump_field(*b0, *amp, *width),
        }
    }
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GhoError::ModelSpec(e.to_string()))
    }

    pub fn build(&self) -> Result<GhoModel> {
        Ok(GhoModel::new(self.kernel.build()?, self.phase.build()?, self.label.clone()))
    }
}

/// Parses and builds a model from JSON text.
pub fn model_from_json(text: &str) -> Result<GhoModel> {
    ModelFile::from_json(text)?.build()
}
