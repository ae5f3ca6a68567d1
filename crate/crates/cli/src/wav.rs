use std::path::Path;

use convbeam_core::MultichannelWaveform;
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use ndarray::Array2;

use crate::error::{CliError, CliResult};

/// Reads 32-bit float or integer PCM (8 to 32 bits) into `[-1, 1)` samples.
pub fn read_wav(path: &Path) -> CliResult<MultichannelWaveform> {
    let mut reader = WavReader::open(path).map_err(|e| CliError::io(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float if spec.bits_per_sample == 32 => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::io(path, e))?,
        SampleFormat::Int if (8..=32).contains(&spec.bits_per_sample) => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::io(path, e))?
        }
        _ => {
            return Err(CliError::Input(format!(
                "{}: unsupported sample format {:?} with {} bits",
                path.display(),
                spec.sample_format,
                spec.bits_per_sample
            )))
        }
    };
    if channels == 0 || interleaved.is_empty() {
        return Err(CliError::Input(format!("{}: no audio samples", path.display())));
    }
    let frames = interleaved.len() / channels;
    let samples = Array2::from_shape_fn((channels, frames), |(ch, n)| interleaved[n * channels + ch]);
    MultichannelWaveform::new(samples, spec.sample_rate)
        .map_err(|e| CliError::from(e).context(path.display()))
}

/// Writes interleaved 32-bit float samples.
pub fn write_wav(path: &Path, wave: &MultichannelWaveform) -> CliResult<()> {
    let spec = WavSpec {
        channels: wave.num_channels() as u16,
        sample_rate: wave.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| CliError::io(path, e))?;
    let samples = wave.samples();
    for n in 0..wave.len() {
        for ch in 0..wave.num_channels() {
            writer.write_sample(samples[[ch, n]] as f32).map_err(|e| CliError::io(path, e))?;
        }
    }
    writer.finalize().map_err(|e| CliError::io(path, e))
}
