//! Mask-based convolutional (WPD) and single-tap (MPDR, MVDR) beamforming.
//!
//! All filters are time-invariant over an utterance: one covariance pair and
//! one weight vector per frequency bin. Bins are processed independently and
//! in parallel; every frame reduction runs in a fixed order so results do not
//! depend on the thread count.

mod covariance;
mod filters;
mod pipeline;
mod stack;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub use covariance::{
    averaged_mask, estimate_lambda, observation_covariance, target_covariance, weighted_covariance,
    wpd_covariances, TargetCovariance, WeightedCovariances,
};
pub use filters::{
    apply_filter, mpdr_filter, mvdr_filter, oracle_rtf, rtf_weights, stack_steering,
    trace_normalized_weights, wpd_filter, wpd_rtf_filter,
};
pub use pipeline::{enhance, EnhanceConfig, Enhanced, LambdaMode, MaskSource};
pub use stack::{stack_delayed, StackedObservation};

use crate::error::{Error, Result};

/// Relative diagonal loading applied to every covariance that gets inverted.
pub const DIAGONAL_LOADING: f64 = 1e-6;
/// `lambda` is floored at this fraction of its maximum over the utterance.
pub const LAMBDA_FLOOR: f64 = 1e-10;
/// The averaged-mask normalizer is floored at this fraction of the frame count.
pub const MASK_SUM_FLOOR: f64 = 1e-8;
/// A trace smaller than this fraction of `||R^-1 H||_F` is treated as zero.
pub const TRACE_TOLERANCE: f64 = 1e-12;

/// Prediction delay and number of delayed taps of the convolutional filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapConfig {
    pub delay: usize,
    pub taps: usize,
}

impl Default for TapConfig {
    fn default() -> Self {
        Self { delay: 3, taps: 3 }
    }
}

impl TapConfig {
    pub fn new(delay: usize, taps: usize) -> Result<Self> {
        if delay == 0 {
            return Err(Error::InvalidConfig("prediction delay must be at least one frame".into()));
        }
        Ok(Self { delay, taps })
    }

    /// Default taps for an array of `channels` microphones: 5 for up to two
    /// channels, 3 otherwise.
    pub fn for_channels(channels: usize) -> Self {
        Self { delay: 3, taps: if channels <= 2 { 5 } else { 3 } }
    }

    /// Single-tap configuration (no delayed frames).
    pub fn single() -> Self {
        Self { delay: 1, taps: 0 }
    }

    pub fn stacked_dim(&self, channels: usize) -> usize {
        channels * (self.taps + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BeamformerKind {
    Wpd,
    /// WPD with an explicit steering vector (distortionless-constrained form).
    WpdRtf,
    Mpdr,
    Mvdr,
    Passthrough,
}

impl BeamformerKind {
    pub fn name(self) -> &'static str {
        match self {
            BeamformerKind::Wpd => "wpd",
            BeamformerKind::WpdRtf => "wpd-rtf",
            BeamformerKind::Mpdr => "mpdr",
            BeamformerKind::Mvdr => "mvdr",
            BeamformerKind::Passthrough => "passthrough",
        }
    }

    pub fn is_convolutional(self) -> bool {
        matches!(self, BeamformerKind::Wpd | BeamformerKind::WpdRtf)
    }
}

impl std::fmt::Display for BeamformerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BeamformerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wpd" => Ok(Self::Wpd),
            "wpd-rtf" | "wpd_rtf" => Ok(Self::WpdRtf),
            "mpdr" => Ok(Self::Mpdr),
            "mvdr" => Ok(Self::Mvdr),
            "passthrough" => Ok(Self::Passthrough),
            other => Err(Error::InvalidConfig(format!("unknown beamformer `{other}`"))),
        }
    }
}

/// Outcome of the filter computation at one frequency bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinStatus {
    Ok,
    /// The averaged target mask sums to zero over the utterance.
    DegenerateMask,
    /// `Trace[R^-1 H]` vanished relative to `||R^-1 H||_F`.
    DegenerateTrace,
    /// `b^H R^-1 b` vanished.
    DegenerateSteering,
    /// The loaded covariance could not be factorized.
    Singular,
}

impl BinStatus {
    pub fn is_fallback(self) -> bool {
        self != BinStatus::Ok
    }
}

/// One complex filter per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    /// `bins x D`
    pub w: Array2<Complex64>,
    pub kind: BeamformerKind,
    pub reference_channel: usize,
    pub status: Vec<BinStatus>,
}

impl BeamformerWeights {
    pub fn num_bins(&self) -> usize {
        self.w.nrows()
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn fallback_bins(&self) -> usize {
        self.status.iter().filter(|s| s.is_fallback()).count()
    }

    pub fn passthrough(bins: usize, dim: usize, reference: usize, kind: BeamformerKind) -> Self {
        let mut w = Array2::zeros((bins, dim));
        w.column_mut(reference).fill(Complex64::new(1.0, 0.0));
        Self { w, kind, reference_channel: reference, status: vec![BinStatus::Ok; bins] }
    }

    fn from_bins(
        bins: Vec<(Array1<Complex64>, BinStatus)>,
        dim: usize,
        kind: BeamformerKind,
        reference: usize,
    ) -> Self {
        let mut w = Array2::zeros((bins.len(), dim));
        let mut status = Vec::with_capacity(bins.len());
        for (f, (wf, st)) in bins.into_iter().enumerate() {
            w.row_mut(f).assign(&wf);
            status.push(st);
        }
        Self { w, kind, reference_channel: reference, status }
    }
}

/// One-hot vector of length `dim` at `reference`.
pub fn unit_vector(dim: usize, reference: usize) -> Array1<Complex64> {
    let mut u = Array1::zeros(dim);
    u[reference] = Complex64::new(1.0, 0.0);
    u
}
