//! Signal-to-distortion metrics: plain SDR, scale-invariant SDR and the
//! convolutive-transfer-function-invariant CI-SDR.
//!
//! CI-SDR projects the estimate onto the span of causally filtered copies of
//! the reference (filter length `L`, full linear convolution) and reports the
//! energy ratio of that projection to the residual. SI-SDR is the `L = 1`
//! case. All values are clamped to `[-cap_db, cap_db]`.

use crate::error::{Error, Result};
use crate::fftconv::FftConv;
use crate::linalg::cholesky_solve_real;

pub const DEFAULT_CAP_DB: f64 = 60.0;
/// Diagonal loading (relative to `r(0)`) used when the Toeplitz system is singular.
pub const TOEPLITZ_LOADING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiSdrConfig {
    pub filter_len: usize,
    pub cap_db: f64,
}

impl Default for CiSdrConfig {
    fn default() -> Self {
        Self { filter_len: 512, cap_db: DEFAULT_CAP_DB }
    }
}

impl CiSdrConfig {
    pub fn with_filter_len(filter_len: usize) -> Self {
        Self { filter_len, ..Self::default() }
    }
}

/// Per-utterance metrics in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub sdr_db: f64,
    pub si_sdr_db: f64,
    pub ci_sdr_db: f64,
}

impl MetricReport {
    pub fn compute(reference: &[f64], estimate: &[f64], cfg: &CiSdrConfig) -> Result<Self> {
        Ok(Self {
            sdr_db: sdr_capped(reference, estimate, cfg.cap_db)?,
            si_sdr_db: si_sdr_capped(reference, estimate, cfg.cap_db)?,
            ci_sdr_db: ci_sdr(reference, estimate, cfg)?,
        })
    }
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn check_pair(reference: &[f64], estimate: &[f64]) -> Result<()> {
    if reference.len() != estimate.len() {
        return Err(Error::Shape(format!(
            "reference has {} samples, estimate {}",
            reference.len(),
            estimate.len()
        )));
    }
    if estimate.iter().chain(reference).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    if !(energy(reference) > 0.0) {
        return Err(Error::InvalidReference);
    }
    Ok(())
}

/// `10 log10(signal / distortion)` clamped to `[-cap, cap]`. A zero distortion
/// gives `cap`, a zero signal gives `-cap`.
fn ratio_db(signal: f64, distortion: f64, cap: f64) -> f64 {
    if !(signal > 0.0) {
        return -cap;
    }
    if !(distortion > 0.0) {
        return cap;
    }
    (10.0 * (signal / distortion).log10()).clamp(-cap, cap)
}

pub fn sdr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    sdr_capped(reference, estimate, DEFAULT_CAP_DB)
}

pub fn sdr_capped(reference: &[f64], estimate: &[f64], cap_db: f64) -> Result<f64> {
    check_pair(reference, estimate)?;
    let err: f64 = reference.iter().zip(estimate).map(|(s, e)| (e - s).powi(2)).sum();
    Ok(ratio_db(energy(reference), err, cap_db))
}

pub fn si_sdr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    si_sdr_capped(reference, estimate, DEFAULT_CAP_DB)
}

pub fn si_sdr_capped(reference: &[f64], estimate: &[f64], cap_db: f64) -> Result<f64> {
    check_pair(reference, estimate)?;
    let alpha = dot(estimate, reference) / energy(reference);
    let target: Vec<f64> = reference.iter().map(|s| alpha * s).collect();
    let err: f64 = estimate.iter().zip(&target).map(|(e, t)| (e - t).powi(2)).sum();
    Ok(ratio_db(energy(&target), err, cap_db))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares FIR filter `h` (length `L`) minimizing `||h * reference - estimate||`.
pub fn distortion_filter(reference: &[f64], estimate: &[f64], filter_len: usize) -> Result<Vec<f64>> {
    let l = filter_len;
    let mut corr = FftConv::new(reference.len() + l);
    let auto = corr.cross(reference, reference, l);
    // c(j) = sum_n estimate(n) reference(n - j)
    let cross = corr.cross(reference, estimate, l);
    let toeplitz = |load: f64| {
        let mut g = vec![0.0; l * l];
        for i in 0..l {
            for j in 0..l {
                g[i * l + j] = auto[i.abs_diff(j)];
            }
            g[i * l + i] += load;
        }
        g
    };
    let mut h = cross.clone();
    if cholesky_solve_real(&mut toeplitz(0.0), &mut h).is_err() || h.iter().any(|v| !v.is_finite()) {
        h = cross;
        cholesky_solve_real(&mut toeplitz(TOEPLITZ_LOADING * auto[0]), &mut h)?;
    }
    Ok(h)
}

/// CI-SDR in dB.
pub fn ci_sdr(reference: &[f64], estimate: &[f64], cfg: &CiSdrConfig) -> Result<f64> {
    check_pair(reference, estimate)?;
    let l = cfg.filter_len;
    if l == 0 {
        return Err(Error::InvalidConfig("CI-SDR filter length must be at least 1".into()));
    }
    if reference.len() <= l {
        return Err(Error::InvalidInput(format!(
            "signal length {} must exceed the filter length {l}",
            reference.len()
        )));
    }
    let h = distortion_filter(reference, estimate, l)?;
    let target = FftConv::new(reference.len() + l).convolve(reference, &h);
    let mut err = 0.0;
    for (n, t) in target.iter().enumerate() {
        let e = estimate.get(n).copied().unwrap_or(0.0);
        err += (e - t).powi(2);
    }
    Ok(ratio_db(energy(&target), err, cfg.cap_db))
}
