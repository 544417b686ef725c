//! Small dense linear algebra over any [`Scalar`].
//!
//! nalgebra is used for the `f64` analysis routines (SVD, eigenvalues); the
//! model itself has to run on dual numbers, so it goes through this module.

use crate::dual::Scalar;

/// Row-major square-or-rectangular matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    /// Set `(r, c)` and `(c, r)`.
    #[inline]
    pub fn set_sym(&mut self, r: usize, c: usize, v: S) {
        self.set(r, c, v);
        self.set(c, r, v);
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter()
                    .zip(x)
                    .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn to_real(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c).re())
    }
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting on the real
/// part. Returns `None` when a pivot underflows `1e-300` in magnitude.
pub fn solve<S: Scalar>(a: &Mat<S>, b: &[S]) -> Option<Vec<S>> {
    let n = a.rows;
    assert_eq!(a.cols, n, "solve needs a square matrix");
    assert_eq!(b.len(), n);
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k * n + k].re().abs();
        for r in (k + 1)..n {
            let v = m[r * n + k].re().abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > 1e-300) {
            return None;
        }
        if piv != k {
            for c in 0..n {
                m.swap(k * n + c, piv * n + c);
            }
            x.swap(k, piv);
        }
        let inv = S::one() / m[k * n + k];
        for r in (k + 1)..n {
            let f = m[r * n + k] * inv;
            if f.re() == 0.0 && f == S::zero() {
                continue;
            }
            for c in (k + 1)..n {
                let t = m[k * n + c];
                m[r * n + c] -= f * t;
            }
            let t = x[k];
            x[r] -= f * t;
        }
    }
    for k in (0..n).rev() {
        let mut acc = x[k];
        for c in (k + 1)..n {
            acc -= m[k * n + c] * x[c];
        }
        x[k] = acc / m[k * n + k];
    }
    Some(x)
}

/// Numerical rank of a real matrix from its singular values, relative to the
/// largest one.
pub fn numerical_rank(m: &nalgebra::DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// 2-norm condition number (`inf` for a singular matrix).
pub fn condition_number(m: &nalgebra::DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
