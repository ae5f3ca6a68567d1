use ndarray::{s, Array3};
use num_complex::Complex64;

use super::TapConfig;
use crate::error::{Error, Result};
use crate::stft::{Spectrogram, StftConfig};

/// Current frame stacked with `taps` frames starting `delay` frames back:
/// `[x(t), x(t - delay), ..., x(t - delay - taps + 1)]` per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedObservation {
    /// `frames x bins x M(taps + 1)`
    pub y: Array3<Complex64>,
    pub channels: usize,
    pub taps: TapConfig,
    pub config: StftConfig,
    pub sample_rate: u32,
}

impl StackedObservation {
    pub fn num_frames(&self) -> usize {
        self.y.shape()[0]
    }

    pub fn num_bins(&self) -> usize {
        self.y.shape()[1]
    }

    pub fn dim(&self) -> usize {
        self.y.shape()[2]
    }
}

pub fn stack_delayed(spec: &Spectrogram, taps: TapConfig) -> Result<StackedObservation> {
    let [m, frames, bins] = spec.shape();
    if m == 0 || frames == 0 {
        return Err(Error::Shape(format!("cannot stack a {m}x{frames}x{bins} spectrogram")));
    }
    if taps.taps > 0 && taps.delay == 0 {
        return Err(Error::InvalidConfig("prediction delay must be at least one frame".into()));
    }
    let dim = taps.stacked_dim(m);
    let x = spec.data();
    let mut y = Array3::zeros((frames, bins, dim));
    for t in 0..frames {
        // block 0 is the current frame, block k >= 1 is frame t - delay - (k - 1)
        for k in 0..=taps.taps {
            let src = if k == 0 { Some(t) } else { t.checked_sub(taps.delay + k - 1) };
            let Some(src) = src else { continue };
            for ch in 0..m {
                y.slice_mut(s![t, .., k * m + ch]).assign(&x.slice(s![ch, src, ..]));
            }
        }
    }
    Ok(StackedObservation { y, channels: m, taps, config: *spec.config(), sample_rate: spec.sample_rate() })
}
