#![allow(dead_code)]

use convbeam_core::{MultichannelWaveform, Spectrogram, StftConfig};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cplx(rng: &mut impl Rng) -> C {
    C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_vec(dim: usize, rng: &mut impl Rng) -> Array1<C> {
    Array1::from_shape_fn(dim, |_| cplx(rng))
}

/// `A A^H / 2D + 0.1 I` with Gaussian-ish `A` of size `D x 2D`.
pub fn random_pd(dim: usize, rng: &mut impl Rng) -> Array2<C> {
    let a = Array2::from_shape_fn((dim, 2 * dim), |_| cplx(rng));
    let mut r = Array2::<C>::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = C::new(0.0, 0.0);
            for k in 0..2 * dim {
                acc += a[[i, k]] * a[[j, k]].conj();
            }
            r[[i, j]] = acc / (2 * dim) as f64;
        }
        r[[i, i]] += 0.1;
    }
    r
}

pub fn random_wave(channels: usize, len: usize, seed: u64) -> MultichannelWaveform {
    let mut rng = rng(seed);
    let data: Vec<Vec<f64>> =
        (0..channels).map(|_| (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    MultichannelWaveform::from_channels(&data, 16000).unwrap()
}

pub fn random_spec(channels: usize, frames: usize, seed: u64) -> Spectrogram {
    let cfg = StftConfig::new(8, 4, 8).unwrap();
    let mut rng = rng(seed);
    let data = Array3::from_shape_fn((channels, frames, cfg.num_bins()), |_| cplx(&mut rng));
    Spectrogram::new(data, cfg, 16000).unwrap()
}

pub fn to_dmatrix(a: &Array2<C>) -> DMatrix<C> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn max_abs_diff(a: &Array2<C>, b: &Array2<C>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn rel_l2(estimate: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = estimate.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

pub fn rel_l2_complex<'a>(
    estimate: impl IntoIterator<Item = &'a C>,
    reference: impl IntoIterator<Item = &'a C>,
) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in estimate.into_iter().zip(reference) {
        num += (a - b).norm_sqr();
        den += b.norm_sqr();
    }
    (num / den).sqrt()
}

/// Minimizes `w^H R w` subject to `w^H b = 1` by solving the full KKT system
/// `[R b; b^H 0] [w; mu] = [0; 1]` with a dense LU.
pub fn kkt_oracle(r: &Array2<C>, b: &Array1<C>) -> Array1<C> {
    let d = b.len();
    let mut k = DMatrix::<C>::zeros(d + 1, d + 1);
    for i in 0..d {
        for j in 0..d {
            k[(i, j)] = r[[i, j]];
        }
        k[(i, d)] = b[i];
        k[(d, i)] = b[i].conj();
    }
    let mut rhs = nalgebra::DVector::<C>::zeros(d + 1);
    rhs[d] = C::new(1.0, 0.0);
    let sol = k.lu().solve(&rhs).expect("KKT system is nonsingular");
    Array1::from_shape_fn(d, |i| sol[i])
}
