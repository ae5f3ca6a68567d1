//! Deterministic multi-channel scene generator.
//!
//! A single source on a uniform linear array, convolved with per-microphone
//! impulse responses that are split at a fixed boundary after the direct path
//! into a source image and late reverberation, plus independent sensor noise
//! scaled to a target SNR at the reference microphone.

mod rir;
mod source;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use rir::{
    generate_rir, mic_distance, mic_position, source_position, ImpulseResponse, SINC_HALF_WIDTH,
    SPEED_OF_SOUND, TAIL_GAIN,
};
pub use source::{builtin_source, SourceKind, SOURCE_RMS};

use crate::error::{Error, Result};
use crate::fftconv::FftConv;
use crate::stft::MultichannelWaveform;

/// Microphone whose source image is the enhancement target.
pub const REFERENCE_MIC: usize = 0;

const TAIL_STREAM: u64 = 1 << 32;
const NOISE_STREAM: u64 = 2 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    White,
    Pink,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub num_mics: usize,
    /// metres
    pub array_spacing: f64,
    /// degrees from broadside
    pub source_azimuth: f64,
    /// metres
    pub source_distance: f64,
    /// seconds
    pub t60: f64,
    #[serde(default = "default_early_ms")]
    pub direct_to_early_ms: f64,
    pub snr_db: f64,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    /// seconds
    pub duration: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    pub seed: u64,
}

fn default_early_ms() -> f64 {
    50.0
}

fn default_sample_rate() -> u32 {
    16000
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            num_mics: 6,
            array_spacing: 0.05,
            source_azimuth: 30.0,
            source_distance: 1.0,
            t60: 0.3,
            direct_to_early_ms: default_early_ms(),
            snr_db: 0.0,
            noise_kind: NoiseKind::White,
            duration: 4.0,
            sample_rate: default_sample_rate(),
            seed: 0,
        }
    }
}

impl SceneSpec {
    /// Checks every field; the error message names the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str, value: String| {
            Err(Error::InvalidConfig(format!("field `{field}` {why} (got {value})")))
        };
        if self.num_mics < 1 {
            return bad("num_mics", "must be at least 1", self.num_mics.to_string());
        }
        if !(self.array_spacing > 0.0 && self.array_spacing.is_finite()) {
            return bad("array_spacing", "must be positive", self.array_spacing.to_string());
        }
        if !self.source_azimuth.is_finite() {
            return bad("source_azimuth", "must be finite", self.source_azimuth.to_string());
        }
        if !(self.source_distance > 0.0 && self.source_distance.is_finite()) {
            return bad("source_distance", "must be positive", self.source_distance.to_string());
        }
        if !(self.t60 >= 0.0 && self.t60.is_finite()) {
            return bad("t60", "must be >= 0", self.t60.to_string());
        }
        if !(self.direct_to_early_ms > 0.0 && self.direct_to_early_ms.is_finite()) {
            return bad("direct_to_early_ms", "must be positive", self.direct_to_early_ms.to_string());
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db", "must be finite", self.snr_db.to_string());
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration", "must be positive", self.duration.to_string());
        }
        if self.sample_rate == 0 {
            return bad("sample_rate", "must be positive", self.sample_rate.to_string());
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        (self.duration * self.sample_rate as f64).round() as usize
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Impulse response of microphone `mic` with its tail drawn from the
    /// scene's seeded per-microphone stream.
    pub fn rir(&self, mic: usize) -> ImpulseResponse {
        generate_rir(self, mic, &mut self.rng(TAIL_STREAM + mic as u64))
    }
}

/// Simulated components. `mixture = source_image + late_reverb + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneOutput {
    pub mixture: MultichannelWaveform,
    pub source_image: MultichannelWaveform,
    pub late_reverb: MultichannelWaveform,
    pub noise: MultichannelWaveform,
    /// Source image at the reference microphone.
    pub reference_clean: MultichannelWaveform,
}

impl SceneOutput {
    /// Late reverberation plus noise.
    pub fn interference(&self) -> MultichannelWaveform {
        let sum = self.late_reverb.samples() + self.noise.samples();
        MultichannelWaveform::new(sum, self.mixture.sample_rate()).expect("finite components")
    }
}

pub fn generate_scene(spec: &SceneSpec, source: &[f64]) -> Result<SceneOutput> {
    spec.validate()?;
    let n = spec.num_samples();
    if source.len() < n {
        return Err(Error::InvalidInput(format!("source has {} samples, scene needs {n}", source.len())));
    }
    if source.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite source sample".into()));
    }
    let source = &source[..n];
    let m = spec.num_mics;

    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|mic| {
            let h = spec.rir(mic);
            let mut conv = FftConv::new(n + h.taps.len());
            let fs = conv.spectrum(source);
            let mut early = conv.convolve_with_spectrum(&fs, n, h.early());
            early.truncate(n);
            let late = if h.late().is_empty() {
                vec![0.0; n]
            } else {
                // the late part starts at `split`; shift its convolution accordingly
                let mut late = vec![0.0; n];
                let tail = conv.convolve_with_spectrum(&fs, n, h.late());
                for (i, v) in tail.into_iter().enumerate() {
                    if i + h.split < n {
                        late[i + h.split] = v;
                    }
                }
                late
            };
            early.resize(n, 0.0);
            (early, late)
        })
        .collect();

    let raw_noise: Vec<Vec<f64>> = (0..m)
        .map(|mic| {
            let mut rng = spec.rng(NOISE_STREAM + mic as u64);
            let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            match spec.noise_kind {
                NoiseKind::White => white,
                NoiseKind::Pink => pink_filter(&white),
            }
        })
        .collect();

    let ref_energy: f64 = parts[REFERENCE_MIC].0.iter().map(|v| v * v).sum();
    let noise_energy: f64 = raw_noise[REFERENCE_MIC].iter().map(|v| v * v).sum();
    let gain = if ref_energy > 0.0 && noise_energy > 0.0 {
        (ref_energy / (noise_energy * 10f64.powf(spec.snr_db / 10.0))).sqrt()
    } else {
        0.0
    };

    let mut image = Array2::zeros((m, n));
    let mut late = Array2::zeros((m, n));
    let mut noise = Array2::zeros((m, n));
    let mut mixture = Array2::zeros((m, n));
    for mic in 0..m {
        for i in 0..n {
            let s = parts[mic].0[i];
            let r = parts[mic].1[i];
            let x = (s + r) + gain * raw_noise[mic][i];
            image[[mic, i]] = s;
            late[[mic, i]] = r;
            mixture[[mic, i]] = x;
            // defined so that mixture - image - late - noise is exactly zero
            noise[[mic, i]] = (x - s) - r;
        }
    }
    let fs = spec.sample_rate;
    let source_image = MultichannelWaveform::new(image, fs)?;
    Ok(SceneOutput {
        reference_clean: source_image.select_channel(REFERENCE_MIC),
        mixture: MultichannelWaveform::new(mixture, fs)?,
        source_image,
        late_reverb: MultichannelWaveform::new(late, fs)?,
        noise: MultichannelWaveform::new(noise, fs)?,
    })
}

/// Approximate 1/f shaping of white noise (sum of first-order sections).
fn pink_filter(white: &[f64]) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    white
        .iter()
        .map(|&w| {
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let out = b[..6].iter().sum::<f64>() + b[6] + w * 0.5362;
            b[6] = w * 0.115926;
            out
        })
        .collect()
}

/// The fixed ten-scene regression set: six microphones, 0.3 s T60, 0 dB SNR.
pub fn standard_scene_set() -> Vec<SceneSpec> {
    (0..10)
        .map(|i| SceneSpec {
            num_mics: 6,
            array_spacing: 0.05,
            source_azimuth: -60.0 + 13.0 * i as f64,
            source_distance: 1.0 + 0.1 * (i % 4) as f64,
            t60: 0.3,
            direct_to_early_ms: 50.0,
            snr_db: 0.0,
            noise_kind: if i % 2 == 0 { NoiseKind::White } else { NoiseKind::Pink },
            duration: 8.0,
            sample_rate: 16000,
            seed: 1000 + i as u64,
        })
        .collect()
}
