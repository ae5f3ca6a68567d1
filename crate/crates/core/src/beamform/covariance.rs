use ndarray::{s, Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{stack_delayed, StackedObservation, TapConfig, DIAGONAL_LOADING, LAMBDA_FLOOR, MASK_SUM_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::{diagonal_load, hermitian_symmetrize};
use crate::masks::TimeFreqMask;
use crate::stft::Spectrogram;

/// Channel-averaged masked power, `frames x bins`, floored at
/// `LAMBDA_FLOOR * max`. An all-zero estimate is replaced by ones.
pub fn estimate_lambda(spec: &Spectrogram, mask: &TimeFreqMask) -> Result<Array2<f64>> {
    mask.check_matches(spec)?;
    let [m, frames, bins] = spec.shape();
    let x = spec.data();
    let mv = mask.values();
    let mut lambda = Array2::<f64>::zeros((frames, bins));
    for t in 0..frames {
        for f in 0..bins {
            let mut acc = 0.0;
            for ch in 0..m {
                acc += mv[[ch, t, f]] * x[[ch, t, f]].norm_sqr();
            }
            lambda[[t, f]] = acc / m as f64;
        }
    }
    let peak = lambda.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        lambda.fill(1.0);
        return Ok(lambda);
    }
    let floor = LAMBDA_FLOOR * peak;
    lambda.mapv_inplace(|v| v.max(floor));
    Ok(lambda)
}

/// Outer-product sum `sum_t weight(t) y y^H` over the frames of one bin,
/// accumulated in frame order. Only the lower triangle is summed; the upper
/// triangle is its conjugate mirror.
fn weighted_outer_sum(
    y: &StackedObservation,
    bin: usize,
    dim: usize,
    weight: impl Fn(usize) -> f64,
) -> Array2<Complex64> {
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    for t in 0..y.num_frames() {
        let wt = weight(t);
        if wt == 0.0 {
            continue;
        }
        let v = y.y.slice(s![t, bin, ..dim]);
        for i in 0..dim {
            let vi = v[i] * wt;
            for j in 0..=i {
                acc[[i, j]] += vi * v[j].conj();
            }
        }
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            acc[[i, j]] = acc[[j, i]].conj();
        }
    }
    acc
}

/// `R(f) = sum_t y y^H / lambda`, symmetrized and diagonally loaded.
pub fn weighted_covariance(y: &StackedObservation, lambda: &Array2<f64>) -> Result<Vec<Array2<Complex64>>> {
    if lambda.dim() != (y.num_frames(), y.num_bins()) {
        return Err(Error::Shape(format!(
            "lambda is {:?}, observation has {} frames x {} bins",
            lambda.dim(),
            y.num_frames(),
            y.num_bins()
        )));
    }
    if lambda.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("lambda must be floored and positive".into()));
    }
    let dim = y.dim();
    (0..y.num_bins())
        .into_par_iter()
        .map(|f| {
            let mut r = weighted_outer_sum(y, f, dim, |t| 1.0 / lambda[[t, f]]);
            if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Numerical(format!("non-finite covariance at bin {f}")));
            }
            hermitian_symmetrize(&mut r);
            diagonal_load(&mut r, DIAGONAL_LOADING);
            Ok(r)
        })
        .collect()
}

/// Unweighted sample covariance `(1/T) sum_t x x^H` of the spectrogram,
/// diagonally loaded.
pub fn observation_covariance(spec: &Spectrogram) -> Result<Vec<Array2<Complex64>>> {
    let y = stack_delayed(spec, TapConfig::single())?;
    let inv_t = 1.0 / y.num_frames() as f64;
    let dim = y.dim();
    Ok((0..y.num_bins())
        .into_par_iter()
        .map(|f| {
            let mut r = weighted_outer_sum(&y, f, dim, |_| inv_t);
            diagonal_load(&mut r, DIAGONAL_LOADING);
            r
        })
        .collect())
}

/// Channel average of the mask, `frames x bins`.
pub fn averaged_mask(mask: &TimeFreqMask) -> Array2<f64> {
    mask.values().mean_axis(Axis(0)).expect("mask has at least one channel")
}

/// Mask-weighted target covariance per bin, embedded in the top-left
/// `M x M` block of a `D x D` matrix.
#[derive(Debug, Clone)]
pub struct TargetCovariance {
    pub h: Vec<Array2<Complex64>>,
    /// Bins whose averaged mask sums to zero.
    pub degenerate: Vec<bool>,
}

/// `H(f) = sum_t m(t,f) x x^H / sum_t m(t,f)` with `m` the channel-averaged
/// mask. A normalizer below `MASK_SUM_FLOOR * T` (but nonzero) is floored.
pub fn target_covariance(
    spec: &Spectrogram,
    mask: &TimeFreqMask,
    taps: TapConfig,
) -> Result<TargetCovariance> {
    mask.check_matches(spec)?;
    let m = spec.num_channels();
    let dim = taps.stacked_dim(m);
    let current = stack_delayed(spec, TapConfig::single())?;
    let avg = averaged_mask(mask);
    let frames = spec.num_frames();
    let (h, degenerate): (Vec<_>, Vec<_>) = (0..spec.num_bins())
        .into_par_iter()
        .map(|f| {
            let mut total = 0.0;
            for t in 0..frames {
                total += avg[[t, f]];
            }
            let mut h = Array2::<Complex64>::zeros((dim, dim));
            if !(total > 0.0) {
                return (h, true);
            }
            let norm = total.max(MASK_SUM_FLOOR * frames as f64);
            let block = weighted_outer_sum(&current, f, m, |t| avg[[t, f]] / norm);
            h.slice_mut(s![..m, ..m]).assign(&block);
            (h, false)
        })
        .unzip();
    Ok(TargetCovariance { h, degenerate })
}

/// Everything the closed-form WPD filter needs.
#[derive(Debug, Clone)]
pub struct WeightedCovariances {
    pub r: Vec<Array2<Complex64>>,
    pub h: TargetCovariance,
    pub lambda: Array2<f64>,
}

pub fn wpd_covariances(
    spec: &Spectrogram,
    mask: &TimeFreqMask,
    taps: TapConfig,
) -> Result<(StackedObservation, WeightedCovariances)> {
    let y = stack_delayed(spec, taps)?;
    let lambda = estimate_lambda(spec, mask)?;
    let r = weighted_covariance(&y, &lambda)?;
    let h = target_covariance(spec, mask, taps)?;
    Ok((y, WeightedCovariances { r, h, lambda }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stft::StftConfig;
    use ndarray::Array3;

    fn spec(data: Array3<Complex64>) -> Spectrogram {
        Spectrogram::new(data, StftConfig::new(8, 4, 8).unwrap(), 16000).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lambda_identity_mask_single_channel() {
        let data = Array3::from_shape_fn((1, 3, 5), |(_, t, f)| c(t as f64 + 1.0, f as f64));
        let s = spec(data.clone());
        let lam = estimate_lambda(&s, &TimeFreqMask::constant(s.shape(), 1.0).unwrap()).unwrap();
        for t in 0..3 {
            for f in 0..5 {
                assert_eq!(lam[[t, f]], data[[0, t, f]].norm_sqr());
            }
        }
    }

    #[test]
    fn lambda_direct_evaluation() {
        // powers 4 and 2 with mask 0.5 and 1.0
        let mut data = Array3::zeros((2, 1, 5));
        data[[0, 0, 0]] = c(2.0, 0.0);
        data[[1, 0, 0]] = c(1.0, 1.0);
        let mut mv = Array3::zeros((2, 1, 5));
        mv[[0, 0, 0]] = 0.5;
        mv[[1, 0, 0]] = 1.0;
        let s = spec(data);
        let lam = estimate_lambda(&s, &TimeFreqMask::new(mv).unwrap()).unwrap();
        assert!((lam[[0, 0]] - 2.0).abs() < 1e-15);
        assert_eq!(lam[[0, 1]], 2.0 * LAMBDA_FLOOR);
    }

    #[test]
    fn lambda_zero_mask_is_positive() {
        let s = spec(Array3::from_elem((2, 3, 5), c(1.0, -1.0)));
        let lam = estimate_lambda(&s, &TimeFreqMask::constant(s.shape(), 0.0).unwrap()).unwrap();
        assert!(lam.iter().all(|v| *v > 0.0 && v.is_finite()));
    }

    #[test]
    fn single_frame_covariance_is_outer_product() {
        let data = Array3::from_shape_fn((2, 1, 5), |(m, _, f)| c(m as f64 + 1.0, f as f64 - 2.0));
        let s = spec(data.clone());
        let y = stack_delayed(&s, TapConfig::single()).unwrap();
        let lam = Array2::from_elem((1, 5), 1.0);
        let r = weighted_covariance(&y, &lam).unwrap();
        for f in 0..5 {
            let x = [data[[0, 0, f]], data[[1, 0, f]]];
            let tr = x[0].norm_sqr() + x[1].norm_sqr();
            for i in 0..2 {
                for j in 0..2 {
                    let mut expect = x[i] * x[j].conj();
                    if i == j {
                        expect += DIAGONAL_LOADING * tr / 2.0;
                    }
                    assert!((r[f][[i, j]] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn target_covariance_flags_zero_mask_bin() {
        let s = spec(Array3::from_elem((2, 4, 5), c(0.3, 0.1)));
        let mut mv = Array3::from_elem((2, 4, 5), 1.0);
        mv.slice_mut(s![.., .., 2]).fill(0.0);
        let h = target_covariance(&s, &TimeFreqMask::new(mv).unwrap(), TapConfig::default()).unwrap();
        assert_eq!(h.degenerate, vec![false, false, true, false, false]);
        assert_eq!(h.h[0].dim(), (8, 8));
        // only the top-left block is populated
        assert!(h.h[0].slice(s![2.., ..]).iter().all(|z| z.norm() == 0.0));
        assert!((h.h[0][[0, 0]] - c(0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn weighted_covariance_rejects_unfloored_lambda() {
        let s = spec(Array3::from_elem((1, 2, 5), c(1.0, 0.0)));
        let y = stack_delayed(&s, TapConfig::single()).unwrap();
        let lam = Array2::zeros((2, 5));
        assert!(weighted_covariance(&y, &lam).is_err());
    }
}
