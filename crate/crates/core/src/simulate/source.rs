use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Built-in deterministic test signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// Voiced/unvoiced excitation through random formant resonators, gated
    /// into syllables separated by pauses.
    #[default]
    SpeechLike,
    /// 440 Hz tone with two decaying harmonics.
    Tones,
    /// Gated white-noise bursts.
    NoiseBurst,
}

impl std::str::FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "speech_like" | "speech-like" => Ok(Self::SpeechLike),
            "tones" => Ok(Self::Tones),
            "noise_burst" | "noise-burst" => Ok(Self::NoiseBurst),
            other => Err(format!("unknown source kind `{other}`")),
        }
    }
}

/// Output RMS of every built-in source.
pub const SOURCE_RMS: f64 = 0.1;

pub fn builtin_source(kind: SourceKind, duration: f64, sample_rate: u32, seed: u64) -> Vec<f64> {
    let len = (duration * sample_rate as f64).round() as usize;
    let fs = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = match kind {
        SourceKind::SpeechLike => speech_like(len, fs, &mut rng),
        SourceKind::Tones => {
            let phases: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            (0..len)
                .map(|n| {
                    let t = n as f64 / fs;
                    (0..3)
                        .map(|k| {
                            let f = 440.0 * (k + 1) as f64;
                            0.5f64.powi(k as i32) * (std::f64::consts::TAU * f * t + phases[k]).sin()
                        })
                        .sum()
                })
                .collect()
        }
        SourceKind::NoiseBurst => {
            let mut out = vec![0.0; len];
            let mut n = 0;
            let mut on = rng.gen_bool(0.5);
            while n < len {
                let seg = (rng.gen_range(0.1..0.4) * fs) as usize;
                let end = (n + seg).min(len);
                if on {
                    for v in &mut out[n..end] {
                        *v = rng.sample(StandardNormal);
                    }
                }
                on = !on;
                n = end;
            }
            out
        }
    };
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt();
    if rms > 0.0 {
        let g = SOURCE_RMS / rms;
        x.iter_mut().for_each(|v| *v *= g);
    }
    x
}

/// Two-pole resonator coefficients for centre `freq` and bandwidth `bw` (Hz).
fn resonator(freq: f64, bw: f64, fs: f64) -> (f64, f64) {
    let r = (-std::f64::consts::PI * bw / fs).exp();
    let theta = std::f64::consts::TAU * freq / fs;
    (2.0 * r * theta.cos(), -r * r)
}

fn speech_like(len: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut n = rng.gen_range(0..(0.2 * fs) as usize);
    let mut phase = 0.0;
    while n < len {
        let syl = ((rng.gen_range(0.12..0.35)) * fs) as usize;
        let end = (n + syl).min(len);
        let voiced = rng.gen_bool(0.8);
        let f0 = rng.gen_range(90.0..220.0);
        let formants = [
            (rng.gen_range(300.0..900.0), 90.0),
            (rng.gen_range(900.0..2300.0), 120.0),
            (rng.gen_range(2300.0..3500.0), 180.0),
        ];
        let coeffs: Vec<(f64, f64)> = formants.iter().map(|&(f, b)| resonator(f, b, fs)).collect();
        let mut state = [[0.0f64; 2]; 3];
        for (j, slot) in out[n..end].iter_mut().enumerate() {
            let excitation = if voiced {
                // glottal pulse train with mild frequency drift
                phase += f0 * (1.0 + 0.05 * (j as f64 / syl as f64)) / fs;
                let pulse = if phase >= 1.0 {
                    phase -= 1.0;
                    1.0
                } else {
                    0.0
                };
                pulse + 0.02 * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.3 * rng.sample::<f64, _>(StandardNormal)
            };
            let mut y = 0.0;
            for (k, (a1, a2)) in coeffs.iter().enumerate() {
                let v = excitation + a1 * state[k][0] + a2 * state[k][1];
                state[k][1] = state[k][0];
                state[k][0] = v;
                y += v / (k + 1) as f64;
            }
            // raised-cosine syllable envelope
            let pos = j as f64 / syl as f64;
            let env = 0.5 - 0.5 * (std::f64::consts::TAU * pos).cos();
            *slot = env * y;
        }
        n = end + (rng.gen_range(0.05..0.3) * fs) as usize;
    }
    out
}
