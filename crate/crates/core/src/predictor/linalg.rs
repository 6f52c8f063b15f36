//! Dense symmetric positive definite solve for the normal equations.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub(crate) struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.n + c] = self.data[r * self.n + c] + v;
    }

    /// Solves `A x = b` by Cholesky factorisation. Returns the index of the
    /// first pivot that is not safely positive when `A` is (numerically) singular.
    pub fn cholesky_solve(&self, b: &[T]) -> Result<Vec<T>, usize> {
        let n = self.n;
        let max_diag = (0..n)
            .map(|i| self.get(i, i).abs())
            .fold(T::zero(), |a, b| a.max(b));
        let floor = T::epsilon() * T::of(100.0 * n as f64) * max_diag.max(T::one());

        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d = d - l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return Err(j);
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }

        // forward: L y = b
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s = s - l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        // back: L^T x = y
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s = s - l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Ok(x)
    }
}
