//! Small dense symmetric positive-definite solver used by the readout and the search.

use ndarray::{Array2, ArrayView2};

use crate::scalar::Real;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Array2<T>,
}

impl<T: Real> Cholesky<T> {
    /// Returns `None` when a pivot falls below `n * eps * max(diag)`, i.e. the
    /// matrix is singular or indefinite at working precision.
    pub fn new(a: ArrayView2<T>) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky needs a square matrix");
        let max_diag = (0..n).map(|i| a[[i, i]].abs()).fold(T::zero(), T::max);
        let tol = T::lit(n.max(1) as f64) * T::epsilon() * max_diag;
        let mut l = Array2::<T>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > tol) {
                return None;
            }
            let d = d.sqrt();
            l[[j, j]] = d;
            for i in j + 1..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / d;
            }
        }
        Some(Self { l })
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: ArrayView2<T>) -> Array2<T> {
        let n = self.l.nrows();
        assert_eq!(b.nrows(), n);
        let mut x = b.to_owned();
        for mut col in x.columns_mut() {
            for i in 0..n {
                let mut s = col[i];
                for k in 0..i {
                    s -= self.l[[i, k]] * col[k];
                }
                col[i] = s / self.l[[i, i]];
            }
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in i + 1..n {
                    s -= self.l[[k, i]] * col[k];
                }
                col[i] = s / self.l[[i, i]];
            }
        }
        x
    }
}
