use log::{info, warn};
use ndarray::Array2;

use super::{
    apply_filter, estimate_lambda, mpdr_filter, mvdr_filter, oracle_rtf, stack_delayed, stack_steering,
    target_covariance, weighted_covariance, wpd_filter, wpd_rtf_filter, BeamformerKind, BeamformerWeights,
    TapConfig,
};
use crate::error::{Error, Result};
use crate::masks::{oracle_ibm, oracle_irm, TimeFreqMask};
use crate::stft::{istft, stft, MultichannelWaveform, StftConfig};

/// Where the time-frequency masks come from.
#[derive(Debug, Clone)]
pub enum MaskSource<'a> {
    /// Ratio mask computed from the clean source image and the interference
    /// (late reverberation plus noise).
    OracleIrm { source_image: &'a MultichannelWaveform, interference: &'a MultichannelWaveform },
    /// Binary mask with a local-SNR threshold in dB.
    OracleIbm {
        source_image: &'a MultichannelWaveform,
        interference: &'a MultichannelWaveform,
        threshold_db: f64,
    },
    /// Externally estimated masks. The noise mask defaults to `1 - speech`.
    Given { speech: TimeFreqMask, noise: Option<TimeFreqMask> },
}

impl MaskSource<'_> {
    fn source_image(&self) -> Option<&MultichannelWaveform> {
        match self {
            MaskSource::OracleIrm { source_image, .. } | MaskSource::OracleIbm { source_image, .. } => {
                Some(source_image)
            }
            MaskSource::Given { .. } => None,
        }
    }
}

/// Weighting of the convolutional covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaMode {
    /// Channel-averaged masked power.
    #[default]
    Masked,
    /// `lambda = 1` everywhere.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceConfig {
    pub beamformer: BeamformerKind,
    pub taps: TapConfig,
    pub stft: StftConfig,
    pub reference: usize,
    pub lambda: LambdaMode,
}

impl EnhanceConfig {
    pub fn new(beamformer: BeamformerKind, taps: TapConfig) -> Self {
        Self { beamformer, taps, stft: StftConfig::default(), reference: 0, lambda: LambdaMode::Masked }
    }
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    /// One-channel enhanced waveform, same length as the input.
    pub output: MultichannelWaveform,
    /// `None` for pass-through.
    pub weights: Option<BeamformerWeights>,
}

impl Enhanced {
    pub fn fallback_bins(&self) -> usize {
        self.weights.as_ref().map_or(0, BeamformerWeights::fallback_bins)
    }
}

fn check_component(name: &str, c: &MultichannelWaveform, mix: &MultichannelWaveform) -> Result<()> {
    if c.num_channels() != mix.num_channels() || c.len() != mix.len() {
        return Err(Error::Shape(format!(
            "{name} is {}x{}, mixture is {}x{}",
            c.num_channels(),
            c.len(),
            mix.num_channels(),
            mix.len()
        )));
    }
    Ok(())
}

/// STFT, mask, covariance estimation, filter design, filtering and iSTFT.
pub fn enhance(
    mixture: &MultichannelWaveform,
    masks: &MaskSource<'_>,
    cfg: &EnhanceConfig,
) -> Result<Enhanced> {
    if mixture.is_empty() {
        return Err(Error::InvalidInput("empty mixture".into()));
    }
    let m = mixture.num_channels();
    if cfg.reference >= m {
        return Err(Error::InvalidInput(format!(
            "reference channel {} out of range for {m} channels",
            cfg.reference
        )));
    }
    if cfg.beamformer == BeamformerKind::Passthrough {
        return Ok(Enhanced { output: mixture.select_channel(cfg.reference), weights: None });
    }

    let x = stft(mixture, &cfg.stft)?;
    let (speech_mask, noise_mask) = match masks {
        MaskSource::OracleIrm { source_image, interference } => {
            check_component("source image", source_image, mixture)?;
            check_component("interference", interference, mixture)?;
            let s = stft(source_image, &cfg.stft)?;
            let v = stft(interference, &cfg.stft)?;
            (oracle_irm(&s, &v)?, None)
        }
        MaskSource::OracleIbm { source_image, interference, threshold_db } => {
            check_component("source image", source_image, mixture)?;
            check_component("interference", interference, mixture)?;
            let s = stft(source_image, &cfg.stft)?;
            let v = stft(interference, &cfg.stft)?;
            (oracle_ibm(&s, &v, *threshold_db)?, None)
        }
        MaskSource::Given { speech, noise } => (speech.clone(), noise.clone()),
    };
    speech_mask.check_matches(&x)?;
    if let Some(n) = &noise_mask {
        n.check_matches(&x)?;
    }

    let taps = if cfg.beamformer.is_convolutional() { cfg.taps } else { TapConfig::single() };
    let y = stack_delayed(&x, taps)?;
    let weights = match cfg.beamformer {
        BeamformerKind::Wpd | BeamformerKind::WpdRtf => {
            let lambda = match cfg.lambda {
                LambdaMode::Masked => estimate_lambda(&x, &speech_mask)?,
                LambdaMode::Constant => Array2::from_elem((x.num_frames(), x.num_bins()), 1.0),
            };
            let r = weighted_covariance(&y, &lambda)?;
            if cfg.beamformer == BeamformerKind::Wpd {
                let h = target_covariance(&x, &speech_mask, taps)?;
                wpd_filter(&r, &h.h, Some(&h.degenerate), cfg.reference)?
            } else {
                let image = masks.source_image().ok_or_else(|| {
                    Error::InvalidInput("steering-vector WPD needs the clean source image".into())
                })?;
                let s1 = stft(&image.select_channel(cfg.reference), &cfg.stft)?;
                let rtf = oracle_rtf(&x, &s1, Some(&lambda))?;
                wpd_rtf_filter(&r, &stack_steering(&rtf, y.dim()), cfg.reference)?
            }
        }
        BeamformerKind::Mpdr => mpdr_filter(&x, &speech_mask, cfg.reference)?,
        BeamformerKind::Mvdr => mvdr_filter(&x, &speech_mask, noise_mask.as_ref(), cfg.reference)?,
        BeamformerKind::Passthrough => unreachable!(),
    };

    let fallback = weights.fallback_bins();
    if fallback > 0 {
        warn!("{}: {fallback} of {} bins fell back to pass-through", cfg.beamformer, weights.num_bins());
    } else {
        info!("{}: all {} bins filtered", cfg.beamformer, weights.num_bins());
    }
    let enhanced = apply_filter(&weights, &y)?;
    let output = istft(&enhanced, mixture.len())?;
    Ok(Enhanced { output, weights: Some(weights) })
}
