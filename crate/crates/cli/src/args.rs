use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gho", version, about = "Spectra and continuity checks for generalized Harper operators")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model file (JSON); the Harper operator with t = 1, B = 1 when omitted.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Output path. With csv format a JSON report is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to the available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodKind {
    Bloch,
    Truncation,
}

/// How spectra are computed for sweeps.
#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodKind::Bloch)]
    pub method: MethodKind,
    /// k-points per direction for Bloch sampling.
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    /// Use the requested k-grid for every denominator.
    #[arg(long)]
    pub fixed_grid: bool,
    /// Largest approximant denominator for Bloch sampling.
    #[arg(long, default_value_t = 4096)]
    pub q_max: u64,
    /// Box radius for truncations.
    #[arg(long, default_value_t = 12)]
    pub radius: u32,
    /// Boundary layer width for the edge-state filter (truncation only).
    #[arg(long)]
    pub filter_margin: Option<u32>,
    #[arg(long, default_value_t = 0.5)]
    pub filter_threshold: f64,
}

/// Offsets `delta`, either listed or as dyadic exponents.
#[derive(Debug, Args)]
pub struct DeltaArgs {
    /// Comma-separated deltas in (0, 1/2].
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
    pub deltas: Option<Vec<f64>>,
    /// First dyadic exponent k (delta = 2^-k).
    #[arg(long)]
    pub from: Option<i32>,
    /// Last dyadic exponent.
    #[arg(long)]
    pub to: Option<i32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum against flux: CSV rows `epsilon,value`.
    Butterfly {
        #[arg(long, default_value_t = 0.0)]
        eps_min: f64,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        eps_max: f64,
        /// Flux values for truncation mode (Bloch mode enumerates rationals).
        #[arg(long, default_value_t = 65)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = MethodKind::Bloch)]
        method: MethodKind,
        /// Largest denominator in Bloch mode.
        #[arg(long, default_value_t = 10)]
        q_max: u64,
        /// k-points per direction in Bloch mode.
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 8)]
        radius: u32,
    },
    /// Hausdorff distance between spectra at eps0 and eps0 + delta, with a power-law fit.
    Hausdorff {
        #[arg(long, default_value_t = std::f64::consts::TAU / 3.0)]
        eps0: f64,
        #[command(flatten)]
        deltas: DeltaArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, default_value_t = 0.45)]
        min_exponent: f64,
        #[arg(long, default_value_t = 0.5)]
        max_residual: f64,
        /// Fit an exact square-root law instead of computing spectra.
        #[arg(long)]
        self_test: bool,
    },
    /// Edges of a spectral gap as the flux moves away from eps0.
    GapTrack {
        #[arg(long, default_value_t = std::f64::consts::TAU / 3.0)]
        eps0: f64,
        #[command(flatten)]
        deltas: DeltaArgs,
        #[command(flatten)]
        method: MethodArgs,
        /// Gap edges `lower,upper`; the widest gap at eps0 when omitted.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        gap: Option<Vec<f64>>,
        /// Smallest width for the automatically chosen gap.
        #[arg(long, default_value_t = 0.05)]
        min_gap: f64,
        #[arg(long, default_value_t = 0.9)]
        min_exponent: f64,
    },
    /// Midpoint defects of the top of the spectrum around eps0.
    Midpoint {
        #[arg(long, default_value_t = std::f64::consts::TAU * 0.3)]
        eps0: f64,
        #[command(flatten)]
        deltas: DeltaArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, default_value_t = 0.9)]
        min_defect_exponent: f64,
        #[arg(long, default_value_t = 0.6)]
        min_difference_exponent: f64,
    },
    /// Greedy partition of unity for a finitely supported state.
    PartitionDemo {
        /// CSV rows `x1,x2,re,im`.
        #[arg(long)]
        state: std::path::PathBuf,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Modulus-of-continuity certificate for sampled function values.
    Certify {
        /// CSV rows `x,F(x)` with strictly increasing x.
        #[arg(long)]
        samples: std::path::PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        eta_max: f64,
    },
    /// Exponential decay of the resolvent kernel on a box.
    DecayCheck {
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 25)]
        radius: u32,
        /// Distance of z above the top of the spectrum.
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Box radius used to estimate the tilt constant b.
        #[arg(long, default_value_t = 12)]
        b_radius: u32,
        /// Use this decay rate instead of the admissible one (report only).
        #[arg(long)]
        force_mu: Option<f64>,
    },
    /// Identity `(h_eps - z) S = I + eps T` for the twisted parametrix.
    ParametrixCheck {
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.3")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        z: f64,
        #[arg(long, default_value_t = 20)]
        radius: u32,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
}
