//! Multi-channel speech enhancement with mask-based beamformers.
//!
//! The central piece is the closed-form weighted power minimization
//! distortionless response (WPD) convolutional beamformer, which dereverberates
//! and denoises in one filter. MPDR and MVDR baselines, oracle masks,
//! SDR-family metrics and a deterministic scene simulator complete the
//! toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod error;
mod fftconv;
pub mod linalg;
pub mod masks;
pub mod metrics;
pub mod simulate;
pub mod stft;

pub use beamform::{
    enhance, BeamformerKind, BeamformerWeights, BinStatus, EnhanceConfig, Enhanced, LambdaMode, MaskSource,
    TapConfig,
};
pub use error::{Error, Result};
pub use masks::{read_mask, write_mask, TimeFreqMask};
pub use metrics::{ci_sdr, sdr, si_sdr, CiSdrConfig, MetricReport};
pub use simulate::{builtin_source, generate_scene, NoiseKind, SceneOutput, SceneSpec, SourceKind};
pub use stft::{istft, stft, MultichannelWaveform, Spectrogram, StftConfig};
