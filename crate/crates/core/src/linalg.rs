//! Small dense linear algebra for per-bin covariance work.
//!
//! Matrices are `ndarray::Array2<Complex64>` (row-major, square). The only
//! factorization needed is Cholesky for Hermitian positive-definite systems;
//! explicit inverses are never formed.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L L^H`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<Complex64>,
}

impl Cholesky {
    /// Factorizes a Hermitian positive-definite matrix. Only the lower triangle is read.
    pub fn factor(a: ArrayView2<'_, Complex64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Shape(format!("cholesky of {}x{} matrix", n, a.ncols())));
        }
        let mut l = Array2::<Complex64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]].re;
            for k in 0..j {
                d -= l[[j, k]].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, value: d });
            }
            let d = d.sqrt();
            l[[j, j]] = Complex64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]].conj();
                }
                l[[i, j]] = s / d;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solves `A x = b`.
    pub fn solve_vec(&self, b: ArrayView1<'_, Complex64>) -> Array1<Complex64> {
        let n = self.dim();
        let l = &self.lower;
        let mut x = b.to_owned();
        // forward: L z = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[[i, k]] * x[k];
            }
            x[i] = s / l[[i, i]].re;
        }
        // backward: L^H x = z
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[[k, i]].conj() * x[k];
            }
            x[i] = s / l[[i, i]].re;
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: ArrayView2<'_, Complex64>) -> Array2<Complex64> {
        let mut out = Array2::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.solve_vec(col));
        }
        out
    }
}

/// Replaces `a` by `(a + a^H) / 2`.
pub fn hermitian_symmetrize(a: &mut Array2<Complex64>) {
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]] = Complex64::new(a[[i, i]].re, 0.0);
        for j in (i + 1)..n {
            let v = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            a[[i, j]] = v;
            a[[j, i]] = v.conj();
        }
    }
}

pub fn trace(a: ArrayView2<'_, Complex64>) -> Complex64 {
    a.diag().iter().sum()
}

/// Adds `eps * Re(trace(a)) / n` to the diagonal. An all-zero matrix is loaded
/// with the identity so the result stays positive definite.
pub fn diagonal_load(a: &mut Array2<Complex64>, eps: f64) {
    let n = a.nrows();
    if n == 0 {
        return;
    }
    let mut load = eps * trace(a.view()).re / n as f64;
    if !(load > 0.0) {
        load = 1.0;
    }
    for i in 0..n {
        a[[i, i]] += load;
    }
}

pub fn frobenius_norm(a: ArrayView2<'_, Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the real symmetric positive-definite system `A x = b` in place.
/// `a` is `n x n` row-major and is overwritten by its Cholesky factor.
pub fn cholesky_solve_real(a: &mut [f64], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, value: d });
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}
