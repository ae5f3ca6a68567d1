//! STFT analysis and overlap-add synthesis.
//!
//! Frames are taken from the (optionally centre-padded) signal at multiples of
//! `hop`, windowed with a periodic Hann window, zero-padded to `fft_len` and
//! transformed to a one-sided spectrum. Synthesis divides the overlap-added,
//! window-weighted frames by the summed squared-window envelope, which is the
//! canonical dual window, so reconstruction is exact for any `hop` whose
//! envelope stays positive.

use std::sync::Arc;

use ndarray::{Array2, Array3, ArrayView1, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

/// Maximum deviation of `sum(analysis * synthesis)` from one over a hop period.
pub const COLA_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
}

impl Window {
    /// Periodic window of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
    pub window: Window,
    pub center_pad: bool,
}

impl Default for StftConfig {
    /// 400-sample Hann window, 128-sample hop, 512-point DFT.
    fn default() -> Self {
        Self { window_len: 400, hop: 128, fft_len: 512, window: Window::Hann, center_pad: true }
    }
}

impl StftConfig {
    pub fn new(window_len: usize, hop: usize, fft_len: usize) -> Result<Self> {
        let cfg = Self { window_len, hop, fft_len, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn num_bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    fn pad(&self) -> usize {
        if self.center_pad {
            self.window_len / 2
        } else {
            0
        }
    }

    /// Number of frames produced for a signal of `len` samples.
    ///
    /// With padding `p` on each side the padded length is `len + 2p`; frames
    /// are added until the last one reaches the end of the padded signal.
    pub fn num_frames(&self, len: usize) -> usize {
        let padded = len + 2 * self.pad();
        1 + padded.saturating_sub(self.window_len).div_ceil(self.hop)
    }

    /// Checks the ordering constraints and that the analysis/dual-window pair
    /// overlap-adds to one at this hop.
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.hop == 0 {
            return Err(Error::InvalidConfig("window_len and hop must be positive".into()));
        }
        if !(self.hop <= self.window_len && self.window_len <= self.fft_len) {
            return Err(Error::InvalidConfig(format!(
                "require hop <= window_len <= fft_len, got hop={} window_len={} fft_len={}",
                self.hop, self.window_len, self.fft_len
            )));
        }
        let w = self.window.coefficients(self.window_len);
        let env = steady_state_envelope(&w, self.hop);
        let peak = env.iter().cloned().fold(0.0, f64::max);
        let floor = env.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(floor > COLA_TOLERANCE * peak) {
            return Err(Error::InvalidConfig(format!(
                "window envelope vanishes at hop {} (min {:e}, max {:e})",
                self.hop, floor, peak
            )));
        }
        for (phase, &e) in env.iter().enumerate() {
            let sum: f64 = (phase..self.window_len).step_by(self.hop).map(|n| w[n] * (w[n] / e)).sum();
            if (sum - 1.0).abs() > COLA_TOLERANCE {
                return Err(Error::InvalidConfig(format!(
                    "overlap-add deviates from one by {:e} at phase {}",
                    (sum - 1.0).abs(),
                    phase
                )));
            }
        }
        Ok(())
    }
}

/// Summed squared window over all shifts by `hop`, indexed by phase.
fn steady_state_envelope(w: &[f64], hop: usize) -> Vec<f64> {
    (0..hop).map(|phase| (phase..w.len()).step_by(hop).map(|n| w[n] * w[n]).sum()).collect()
}

/// Real time-domain samples, `channels x length`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelWaveform {
    samples: Array2<f64>,
    sample_rate: u32,
}

impl MultichannelWaveform {
    pub fn new(samples: Array2<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(idx) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at flat index {idx}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn from_channels(channels: &[Vec<f64>], sample_rate: u32) -> Result<Self> {
        let len = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::Shape("channels have different lengths".into()));
        }
        let flat: Vec<f64> = channels.iter().flatten().copied().collect();
        let samples =
            Array2::from_shape_vec((channels.len(), len), flat).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(samples, sample_rate)
    }

    pub fn zeros(channels: usize, len: usize, sample_rate: u32) -> Self {
        Self { samples: Array2::zeros((channels, len)), sample_rate }
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn channel(&self, ch: usize) -> ArrayView1<'_, f64> {
        self.samples.row(ch)
    }

    pub fn num_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Single-channel waveform holding channel `ch`.
    pub fn select_channel(&self, ch: usize) -> Self {
        Self {
            samples: self.samples.slice(ndarray::s![ch..ch + 1, ..]).to_owned(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { samples: &self.samples * factor, sample_rate: self.sample_rate }
    }

    pub fn into_samples(self) -> Array2<f64> {
        self.samples
    }
}

/// Complex one-sided STFT, `channels x frames x bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Array3<Complex64>,
    config: StftConfig,
    sample_rate: u32,
}

impl Spectrogram {
    /// Wraps raw STFT data. Only the bin count is checked against `config`.
    pub fn new(data: Array3<Complex64>, config: StftConfig, sample_rate: u32) -> Result<Self> {
        if data.shape()[2] != config.num_bins() {
            return Err(Error::Shape(format!(
                "spectrogram has {} bins, config implies {}",
                data.shape()[2],
                config.num_bins()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite spectrogram value".into()));
        }
        Ok(Self { data, config, sample_rate })
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn num_frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn num_bins(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.num_channels(), self.num_frames(), self.num_bins()]
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { data: self.data.mapv(|z| z * factor), ..*self }
    }
}

/// Forward STFT of every channel.
pub fn stft(wave: &MultichannelWaveform, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    if wave.is_empty() {
        return Err(Error::InvalidInput("empty waveform".into()));
    }
    if wave.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let frames = cfg.num_frames(wave.len());
    let bins = cfg.num_bins();
    let pad = cfg.pad();
    let window = cfg.window.coefficients(cfg.window_len);
    let fft: Arc<dyn RealToComplex<f64>> = RealFftPlanner::<f64>::new().plan_fft_forward(cfg.fft_len);

    let per_channel: Vec<Vec<Complex64>> = (0..wave.num_channels())
        .into_par_iter()
        .map(|ch| {
            let signal = wave.samples.row(ch);
            let len = signal.len();
            let mut input = fft.make_input_vec();
            let mut output = fft.make_output_vec();
            let mut scratch = fft.make_scratch_vec();
            let mut out = Vec::with_capacity(frames * bins);
            for t in 0..frames {
                input.iter_mut().for_each(|v| *v = 0.0);
                let start = t * cfg.hop;
                for (n, &w) in window.iter().enumerate() {
                    // index into the unpadded signal
                    let idx = (start + n) as isize - pad as isize;
                    if idx >= 0 && (idx as usize) < len {
                        input[n] = w * signal[idx as usize];
                    }
                }
                fft.process_with_scratch(&mut input, &mut output, &mut scratch)
                    .expect("fft buffer sizes are fixed by the plan");
                out.extend_from_slice(&output);
            }
            out
        })
        .collect();

    let flat: Vec<Complex64> = per_channel.into_iter().flatten().collect();
    let data = Array3::from_shape_vec((wave.num_channels(), frames, bins), flat)
        .expect("frame buffer matches shape");
    Ok(Spectrogram { data, config: *cfg, sample_rate: wave.sample_rate })
}

/// Inverse STFT by weighted overlap-add, trimmed or zero-extended to `out_len`.
pub fn istft(spec: &Spectrogram, out_len: usize) -> Result<MultichannelWaveform> {
    let cfg = spec.config;
    cfg.validate()?;
    let frames = spec.num_frames();
    let pad = cfg.pad();
    let window = cfg.window.coefficients(cfg.window_len);
    let total = (frames.saturating_sub(1)) * cfg.hop + cfg.window_len;
    let mut envelope = vec![0.0; total];
    for t in 0..frames {
        for (n, &w) in window.iter().enumerate() {
            envelope[t * cfg.hop + n] += w * w;
        }
    }
    let env_peak = envelope.iter().cloned().fold(0.0, f64::max);
    let ifft: Arc<dyn ComplexToReal<f64>> = RealFftPlanner::<f64>::new().plan_fft_inverse(cfg.fft_len);
    let scale = 1.0 / cfg.fft_len as f64;
    let nyquist = if cfg.fft_len.is_multiple_of(2) { Some(cfg.num_bins() - 1) } else { None };

    let channels: Vec<Vec<f64>> = (0..spec.num_channels())
        .into_par_iter()
        .map(|ch| {
            let chan = spec.data.index_axis(Axis(0), ch);
            let mut acc = vec![0.0; total];
            let mut input = ifft.make_input_vec();
            let mut output = ifft.make_output_vec();
            let mut scratch = ifft.make_scratch_vec();
            for (t, frame) in chan.axis_iter(Axis(0)).enumerate() {
                for (dst, src) in input.iter_mut().zip(frame.iter()) {
                    *dst = *src;
                }
                // a real signal has real DC and Nyquist bins
                input[0].im = 0.0;
                if let Some(k) = nyquist {
                    input[k].im = 0.0;
                }
                ifft.process_with_scratch(&mut input, &mut output, &mut scratch)
                    .expect("ifft buffer sizes are fixed by the plan");
                let base = t * cfg.hop;
                for (n, &w) in window.iter().enumerate() {
                    acc[base + n] += w * output[n] * scale;
                }
            }
            (0..out_len)
                .map(|i| {
                    let idx = i + pad;
                    if idx < total && envelope[idx] > COLA_TOLERANCE * env_peak {
                        acc[idx] / envelope[idx]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    MultichannelWaveform::from_channels(&channels, spec.sample_rate)
}
