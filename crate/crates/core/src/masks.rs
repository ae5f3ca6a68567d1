//! Oracle time-frequency masks and the `MSK1` mask file format.
//!
//! File layout (little-endian): magic `b"MSK1"`, `u32` version, `u32`
//! channels, `u32` frames, `u32` bins, then `channels * frames * bins` `f32`
//! values in channel-major, frame-major, bin order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array3, Zip};

use crate::error::{Error, Result};
use crate::stft::Spectrogram;

pub const MASK_MAGIC: [u8; 4] = *b"MSK1";
pub const MASK_VERSION: u32 = 1;

/// Relative floor added to the IRM denominator, scaled by the largest cell power.
pub const IRM_FLOOR: f64 = 1e-10;

/// Real mask in `[0, 1]`, `channels x frames x bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFreqMask {
    values: Array3<f64>,
}

impl TimeFreqMask {
    pub fn new(values: Array3<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("mask value {v} outside [0, 1]")));
        }
        Ok(Self { values })
    }

    pub fn constant(shape: [usize; 3], value: f64) -> Result<Self> {
        Self::new(Array3::from_elem(shape, value))
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn shape(&self) -> [usize; 3] {
        let s = self.values.shape();
        [s[0], s[1], s[2]]
    }

    /// `1 - mask`, cell-wise.
    pub fn complement(&self) -> Self {
        Self { values: self.values.mapv(|v| 1.0 - v) }
    }

    pub fn check_matches(&self, spec: &Spectrogram) -> Result<()> {
        if self.shape() != spec.shape() {
            return Err(Error::Shape(format!(
                "mask shape {:?} does not match spectrogram shape {:?}",
                self.shape(),
                spec.shape()
            )));
        }
        Ok(())
    }
}

fn check_same_shape(a: &Spectrogram, b: &Spectrogram) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "speech shape {:?} vs interference shape {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Ideal ratio mask `|S|^2 / (|S|^2 + |V|^2 + eps)`.
pub fn oracle_irm(speech: &Spectrogram, interference: &Spectrogram) -> Result<TimeFreqMask> {
    check_same_shape(speech, interference)?;
    let max_power =
        speech.data().iter().chain(interference.data().iter()).map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let eps = IRM_FLOOR * max_power;
    let mut values = Array3::zeros(speech.data().raw_dim());
    Zip::from(&mut values).and(speech.data()).and(interference.data()).for_each(|m, s, v| {
        let ps = s.norm_sqr();
        let den = ps + v.norm_sqr() + eps;
        *m = if den > 0.0 { ps / den } else { 0.0 };
    });
    Ok(TimeFreqMask { values })
}

/// Binary mask: 1 where the local SNR strictly exceeds `threshold_db`.
///
/// A cell exactly at the threshold is excluded. Cells with zero interference
/// and nonzero speech count as infinite SNR.
pub fn oracle_ibm(
    speech: &Spectrogram,
    interference: &Spectrogram,
    threshold_db: f64,
) -> Result<TimeFreqMask> {
    check_same_shape(speech, interference)?;
    let mut values = Array3::zeros(speech.data().raw_dim());
    Zip::from(&mut values).and(speech.data()).and(interference.data()).for_each(|m, s, v| {
        let snr = 10.0 * (s.norm_sqr() / v.norm_sqr()).log10();
        *m = if snr > threshold_db { 1.0 } else { 0.0 };
    });
    Ok(TimeFreqMask { values })
}

/// Writes `mask` as `MSK1`. Values are stored as `f32`.
pub fn write_mask(mask: &TimeFreqMask, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let [c, t, f] = mask.shape();
    w.write_all(&MASK_MAGIC)?;
    for v in [MASK_VERSION, dim_u32(c)?, dim_u32(t)?, dim_u32(f)?] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in mask.values.iter() {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn dim_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("dimension {n} exceeds u32")))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<TimeFreqMask> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_mask(&bytes)
}

pub fn decode_mask(bytes: &[u8]) -> Result<TimeFreqMask> {
    if bytes.len() < 20 {
        return Err(Error::Format(format!("header truncated ({} bytes)", bytes.len())));
    }
    if bytes[..4] != MASK_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4]))));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let version = word(1);
    if version != MASK_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (c, t, f) = (word(2) as usize, word(3) as usize, word(4) as usize);
    let count = c
        .checked_mul(t)
        .and_then(|n| n.checked_mul(f))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let payload = &bytes[20..];
    if payload.len() != count * 4 {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {}",
            payload.len(),
            count * 4
        )));
    }
    let mut values = Vec::with_capacity(count);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Format(format!("mask value {v} outside [0, 1]")));
        }
        values.push(v);
    }
    let values = Array3::from_shape_vec((c, t, f), values).expect("length checked");
    Ok(TimeFreqMask { values })
}
