use rand::Rng;
use rand_distr::StandardNormal;

use super::SceneSpec;

pub const SPEED_OF_SOUND: f64 = 343.0;
/// Half-width in samples of the windowed-sinc fractional-delay kernel.
pub const SINC_HALF_WIDTH: usize = 32;
/// Standard deviation of the late tail at emission time, relative to a unit
/// direct-path amplitude at 1 m.
pub const TAIL_GAIN: f64 = 0.1;

/// Impulse response split into the part that belongs to the source image
/// (`taps[..split]`) and the late reverberation (`taps[split..]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub taps: Vec<f64>,
    pub split: usize,
    /// Direct-path delay in (fractional) samples.
    pub delay: f64,
}

impl ImpulseResponse {
    pub fn early(&self) -> &[f64] {
        &self.taps[..self.split.min(self.taps.len())]
    }

    pub fn late(&self) -> &[f64] {
        &self.taps[self.split.min(self.taps.len())..]
    }
}

/// Microphone position on a uniform linear array centred at the origin
/// along the x axis.
pub fn mic_position(spec: &SceneSpec, mic: usize) -> (f64, f64) {
    let offset = mic as f64 - (spec.num_mics as f64 - 1.0) / 2.0;
    (offset * spec.array_spacing, 0.0)
}

/// Source position; azimuth is measured from broadside (the y axis).
pub fn source_position(spec: &SceneSpec) -> (f64, f64) {
    let az = spec.source_azimuth.to_radians();
    (spec.source_distance * az.sin(), spec.source_distance * az.cos())
}

pub fn mic_distance(spec: &SceneSpec, mic: usize) -> f64 {
    let (mx, my) = mic_position(spec, mic);
    let (sx, sy) = source_position(spec);
    ((sx - mx).powi(2) + (sy - my).powi(2)).sqrt()
}

/// Direct path with `1/r` amplitude at a fractional delay, followed by a
/// Gaussian tail whose energy decays by 60 dB every `t60` seconds, starting
/// `direct_to_early_ms` after the direct-path arrival.
pub fn generate_rir<R: Rng + ?Sized>(spec: &SceneSpec, mic: usize, rng: &mut R) -> ImpulseResponse {
    let fs = spec.sample_rate as f64;
    let r = mic_distance(spec, mic);
    let delay = r / SPEED_OF_SOUND * fs;
    let split = (delay + spec.direct_to_early_ms * 1e-3 * fs).ceil() as usize;
    let direct_end = delay.floor() as usize + SINC_HALF_WIDTH + 1;
    let len =
        if spec.t60 > 0.0 { split.max(direct_end) + (spec.t60 * fs).ceil() as usize } else { direct_end };
    let mut taps = vec![0.0; len];

    let lo = (delay - SINC_HALF_WIDTH as f64).ceil().max(0.0) as usize;
    for (n, tap) in taps.iter_mut().enumerate().take(direct_end).skip(lo) {
        let x = n as f64 - delay;
        if x.abs() < SINC_HALF_WIDTH as f64 {
            let window = 0.5 * (1.0 + (std::f64::consts::PI * x / SINC_HALF_WIDTH as f64).cos());
            *tap = sinc(x) * window / r;
        }
    }

    if spec.t60 > 0.0 {
        // amplitude falls by 60 dB (factor 1e-3) per t60
        let decay = 3.0 * std::f64::consts::LN_10 / (spec.t60 * fs);
        for (n, tap) in taps.iter_mut().enumerate().skip(split) {
            let g: f64 = rng.sample(StandardNormal);
            *tap += TAIL_GAIN * (-decay * n as f64).exp() * g;
        }
    }
    ImpulseResponse { taps, split, delay }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}
