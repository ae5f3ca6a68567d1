use ndarray::{s, Array1, Array2, Array3, ArrayView1};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{
    observation_covariance, target_covariance, unit_vector, BeamformerKind, BeamformerWeights, BinStatus,
    StackedObservation, TapConfig, DIAGONAL_LOADING, TRACE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::linalg::{diagonal_load, frobenius_norm, Cholesky};
use crate::masks::TimeFreqMask;
use crate::stft::Spectrogram;

/// `w = R^-1 H u / Trace[R^-1 H]` for one bin.
///
/// Falls back to the pass-through filter `u` when `R` cannot be factorized or
/// the trace vanishes.
pub fn trace_normalized_weights(
    r: &Array2<Complex64>,
    h: &Array2<Complex64>,
    reference: usize,
) -> (Array1<Complex64>, BinStatus) {
    let dim = r.nrows();
    let Ok(chol) = Cholesky::factor(r.view()) else {
        return (unit_vector(dim, reference), BinStatus::Singular);
    };
    let rh = chol.solve_mat(h.view());
    let tr: Complex64 = rh.diag().iter().sum();
    let scale = frobenius_norm(rh.view());
    if !(tr.norm() > TRACE_TOLERANCE * scale) || !tr.re.is_finite() || !tr.im.is_finite() {
        return (unit_vector(dim, reference), BinStatus::DegenerateTrace);
    }
    (rh.column(reference).mapv(|z| z / tr), BinStatus::Ok)
}

fn check_reference(reference: usize, channels: usize) -> Result<()> {
    if reference >= channels {
        return Err(Error::InvalidInput(format!(
            "reference channel {reference} out of range for {channels} channels"
        )));
    }
    Ok(())
}

fn check_square(mats: &[Array2<Complex64>], dim: usize, what: &str) -> Result<()> {
    if let Some((f, m)) = mats.iter().enumerate().find(|(_, m)| m.dim() != (dim, dim)) {
        return Err(Error::Shape(format!("{what} at bin {f} is {:?}, expected {dim}x{dim}", m.dim())));
    }
    Ok(())
}

/// Closed-form WPD filter from the weighted covariance `r` and target
/// covariance `h`. Bins listed in `degenerate` get the pass-through filter.
pub fn wpd_filter(
    r: &[Array2<Complex64>],
    h: &[Array2<Complex64>],
    degenerate: Option<&[bool]>,
    reference: usize,
) -> Result<BeamformerWeights> {
    if r.len() != h.len() || r.is_empty() {
        return Err(Error::Shape(format!("{} R matrices vs {} H matrices", r.len(), h.len())));
    }
    let dim = r[0].nrows();
    check_square(r, dim, "R")?;
    check_square(h, dim, "H")?;
    check_reference(reference, dim)?;
    let bins: Vec<_> = (0..r.len())
        .into_par_iter()
        .map(|f| {
            if degenerate.is_some_and(|d| d[f]) {
                (unit_vector(dim, reference), BinStatus::DegenerateMask)
            } else {
                trace_normalized_weights(&r[f], &h[f], reference)
            }
        })
        .collect();
    Ok(BeamformerWeights::from_bins(bins, dim, BeamformerKind::Wpd, reference))
}

/// Distortionless solution `w = R^-1 b / (b^H R^-1 b)` for one bin.
pub fn rtf_weights(r: &Array2<Complex64>, b: ArrayView1<'_, Complex64>) -> Result<Array1<Complex64>> {
    if r.dim() != (b.len(), b.len()) {
        return Err(Error::Shape(format!("R is {:?}, steering has {} entries", r.dim(), b.len())));
    }
    let chol = Cholesky::factor(r.view())?;
    let rb = chol.solve_vec(b);
    let den: Complex64 = b.iter().zip(rb.iter()).map(|(bi, ri)| bi.conj() * ri).sum();
    let bnorm: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if !(den.norm() > 0.0) || !(bnorm > 0.0) || !den.re.is_finite() {
        return Err(Error::DegenerateSteering(den.norm()));
    }
    Ok(rb.mapv(|z| z / den.conj()))
}

/// WPD with an explicit steering vector per bin (`bins x D`, zero beyond the
/// first `M` entries). Degenerate bins fall back to pass-through.
pub fn wpd_rtf_filter(
    r: &[Array2<Complex64>],
    steering: &Array2<Complex64>,
    reference: usize,
) -> Result<BeamformerWeights> {
    if r.len() != steering.nrows() || r.is_empty() {
        return Err(Error::Shape(format!("{} R matrices vs {} steering vectors", r.len(), steering.nrows())));
    }
    let dim = steering.ncols();
    check_square(r, dim, "R")?;
    check_reference(reference, dim)?;
    let bins: Vec<_> = (0..r.len())
        .into_par_iter()
        .map(|f| match rtf_weights(&r[f], steering.row(f)) {
            Ok(w) => (w, BinStatus::Ok),
            Err(Error::NotPositiveDefinite { .. }) => (unit_vector(dim, reference), BinStatus::Singular),
            Err(_) => (unit_vector(dim, reference), BinStatus::DegenerateSteering),
        })
        .collect();
    Ok(BeamformerWeights::from_bins(bins, dim, BeamformerKind::WpdRtf, reference))
}

/// Single-tap MPDR: unweighted observation covariance against the
/// mask-weighted target covariance.
pub fn mpdr_filter(spec: &Spectrogram, mask: &TimeFreqMask, reference: usize) -> Result<BeamformerWeights> {
    check_reference(reference, spec.num_channels())?;
    let r = observation_covariance(spec)?;
    let target = target_covariance(spec, mask, TapConfig::single())?;
    let mut weights = wpd_filter(&r, &target.h, Some(&target.degenerate), reference)?;
    weights.kind = BeamformerKind::Mpdr;
    Ok(weights)
}

/// Single-tap MVDR: noise-mask-weighted covariance against the
/// speech-mask-weighted covariance. The noise mask defaults to
/// `1 - speech_mask`.
pub fn mvdr_filter(
    spec: &Spectrogram,
    speech_mask: &TimeFreqMask,
    noise_mask: Option<&TimeFreqMask>,
    reference: usize,
) -> Result<BeamformerWeights> {
    check_reference(reference, spec.num_channels())?;
    let complement;
    let noise_mask = match noise_mask {
        Some(m) => m,
        None => {
            complement = speech_mask.complement();
            &complement
        }
    };
    let speech = target_covariance(spec, speech_mask, TapConfig::single())?;
    let noise = target_covariance(spec, noise_mask, TapConfig::single())?;
    let dim = spec.num_channels();
    let bins: Vec<_> = (0..spec.num_bins())
        .into_par_iter()
        .map(|f| {
            if speech.degenerate[f] || noise.degenerate[f] {
                return (unit_vector(dim, reference), BinStatus::DegenerateMask);
            }
            let mut phi_n = noise.h[f].clone();
            diagonal_load(&mut phi_n, DIAGONAL_LOADING);
            trace_normalized_weights(&phi_n, &speech.h[f], reference)
        })
        .collect();
    Ok(BeamformerWeights::from_bins(bins, dim, BeamformerKind::Mvdr, reference))
}

/// `s(t,f) = w^H(f) y(t,f)` as a one-channel spectrogram.
pub fn apply_filter(w: &BeamformerWeights, y: &StackedObservation) -> Result<Spectrogram> {
    if w.dim() != y.dim() || w.num_bins() != y.num_bins() {
        return Err(Error::Shape(format!(
            "filter is {} bins x {}, observation is {} bins x {}",
            w.num_bins(),
            w.dim(),
            y.num_bins(),
            y.dim()
        )));
    }
    let frames = y.num_frames();
    let bins = y.num_bins();
    let mut out = Array3::zeros((1, frames, bins));
    for t in 0..frames {
        for f in 0..bins {
            let wf = w.w.row(f);
            let yf = y.y.slice(s![t, f, ..]);
            out[[0, t, f]] = wf.iter().zip(yf.iter()).map(|(a, b)| a.conj() * b).sum();
        }
    }
    Spectrogram::new(out, y.config, y.sample_rate)
}

/// Relative transfer function of the target at each bin, `bins x M`.
///
/// Each observed channel is regressed (weighted least squares, per-frame
/// weights `1 / lambda`) on the clean target at the reference microphone, so
/// the model residual is orthogonal to the target under the same weighting
/// used by the WPD covariance.
pub fn oracle_rtf(
    observation: &Spectrogram,
    reference_target: &Spectrogram,
    lambda: Option<&Array2<f64>>,
) -> Result<Array2<Complex64>> {
    let [m, frames, bins] = observation.shape();
    if reference_target.shape() != [1, frames, bins] {
        return Err(Error::Shape(format!(
            "reference target is {:?}, expected [1, {frames}, {bins}]",
            reference_target.shape()
        )));
    }
    if let Some(l) = lambda {
        if l.dim() != (frames, bins) {
            return Err(Error::Shape(format!("lambda is {:?}, expected ({frames}, {bins})", l.dim())));
        }
    }
    let x = observation.data();
    let s1 = reference_target.data();
    let mut a = Array2::zeros((bins, m));
    for f in 0..bins {
        let mut den = 0.0;
        let mut num = vec![Complex64::new(0.0, 0.0); m];
        for t in 0..frames {
            let wt = lambda.map_or(1.0, |l| 1.0 / l[[t, f]]);
            let r = s1[[0, t, f]];
            den += wt * r.norm_sqr();
            for (ch, acc) in num.iter_mut().enumerate() {
                *acc += x[[ch, t, f]] * r.conj() * wt;
            }
        }
        if den > 0.0 {
            for ch in 0..m {
                a[[f, ch]] = num[ch] / den;
            }
        }
    }
    Ok(a)
}

/// Embeds per-bin `M`-dimensional steering vectors into the stacked
/// dimension `D`, zero-filling the delayed blocks.
pub fn stack_steering(rtf: &Array2<Complex64>, dim: usize) -> Array2<Complex64> {
    let mut b = Array2::zeros((rtf.nrows(), dim));
    b.slice_mut(s![.., ..rtf.ncols()]).assign(rtf);
    b
}
