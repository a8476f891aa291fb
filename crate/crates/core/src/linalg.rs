//! Small dense linear algebra: row-major matrices, complex LU with partial
//! pivoting and a real Cholesky factorization. Sized for the direct-solve
//! reference paths (MNA oracle, small loop systems), not for large systems.

use crate::{cast, Error, Result, Scalar};
use num_complex::Complex;
use rayon::prelude::*;

/// Dense row-major matrix.
#[derive(Clone, Debug)]
pub struct DMat<S> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<S>,
}

impl<S: Copy + Default> DMat<S> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DMat {
            n_rows,
            n_cols,
            data: vec![S::default(); n_rows * n_cols],
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.n_cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.n_cols + c] = v;
    }

    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: S)
    where
        S: std::ops::AddAssign,
    {
        self.data[r * self.n_cols + c] += v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn memory_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<S>()
    }
}

pub type CMat<T> = DMat<Complex<T>>;

impl<T: Scalar> CMat<T> {
    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x.iter())
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// LU factorization with partial pivoting of a dense complex matrix.
pub struct LuFactor<T: Scalar> {
    lu: CMat<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> LuFactor<T> {
    /// Factor `a` in place (consumed). Fails with [`Error::SingularY`] when a
    /// pivot underflows.
    pub fn factor(mut a: CMat<T>) -> Result<Self> {
        let n = a.n_rows();
        assert_eq!(n, a.n_cols());
        let mut pivots = vec![0usize; n];
        let mut scale = T::zero();
        for v in a.data.iter() {
            scale = scale.max(v.norm_sqr());
        }
        let tiny = scale * cast::<T>(1e-28) + T::min_positive_value();
        for k in 0..n {
            // pivot search on column k
            let mut p = k;
            let mut best = a.get(k, k).norm_sqr();
            for r in k + 1..n {
                let m = a.get(r, k).norm_sqr();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            if best <= tiny {
                return Err(Error::SingularY);
            }
            pivots[k] = p;
            if p != k {
                let (lo, hi) = (k.min(p), k.max(p));
                let (head, tail) = a.data.split_at_mut(hi * n);
                head[lo * n..lo * n + n].swap_with_slice(&mut tail[..n]);
            }
            let inv_pivot = Complex::new(T::one(), T::zero()) / a.get(k, k);
            let (pivot_rows, rest) = a.data.split_at_mut((k + 1) * n);
            let row_k = &pivot_rows[k * n..(k + 1) * n];
            let update = |row_r: &mut [Complex<T>]| {
                let l = row_r[k] * inv_pivot;
                row_r[k] = l;
                for (c, &akc) in row_k.iter().enumerate().skip(k + 1) {
                    row_r[c] = row_r[c] - l * akc;
                }
            };
            if n - k > 256 {
                rest.par_chunks_mut(n).for_each(update);
            } else {
                rest.chunks_mut(n).for_each(update);
            }
        }
        Ok(LuFactor { lu: a, pivots })
    }

    pub fn solve_in_place(&self, b: &mut [Complex<T>]) {
        let n = self.lu.n_rows();
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            let bk = b[k];
            if bk != Complex::new(T::zero(), T::zero()) {
                for r in k + 1..n {
                    let l = self.lu.get(r, k);
                    b[r] = b[r] - l * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            let row = self.lu.row(k);
            for c in k + 1..n {
                acc = acc - row[c] * b[c];
            }
            b[k] = acc / row[k];
        }
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Invert a small dense complex matrix (used for the port admittance block).
pub fn invert<T: Scalar>(a: &CMat<T>) -> Result<CMat<T>> {
    let n = a.n_rows();
    let lu = LuFactor::factor(a.clone())?;
    let mut inv = CMat::zeros(n, n);
    let mut col = vec![Complex::new(T::zero(), T::zero()); n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = Complex::new(T::zero(), T::zero()));
        col[j] = Complex::new(T::one(), T::zero());
        lu.solve_in_place(&mut col);
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    Ok(inv)
}

/// Cholesky factorization attempt of a dense symmetric real matrix.
/// Returns false when the matrix is not positive definite.
pub fn cholesky_is_spd<T: Scalar>(a: &DMat<T>) -> bool {
    let n = a.n_rows();
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

/// 2-norm of a complex vector.
pub fn norm2<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Relative 2-norm distance ‖a−b‖/‖b‖.
pub fn rel_dist<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    assert_eq!(a.len(), b.len());
    let num = a
        .iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).norm_sqr())
        .sum::<T>()
        .sqrt();
    let den = norm2(b);
    if den == T::zero() {
        num
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_complex_system() {
        let mut a = CMat::<f64>::zeros(3, 3);
        let c = Complex::new;
        let rows = [
            [c(2.0, 1.0), c(0.5, 0.0), c(0.0, -1.0)],
            [c(0.0, 0.3), c(-1.0, 2.0), c(1.0, 0.0)],
            [c(1.0, 0.0), c(0.0, 0.0), c(3.0, -0.5)],
        ];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                a.set(i, j, v);
            }
        }
        let x_true = vec![c(1.0, -2.0), c(0.0, 1.0), c(-3.0, 0.5)];
        let b = a.mul_vec(&x_true);
        let lu = LuFactor::factor(a).unwrap();
        let x = lu.solve(&b);
        for (xa, xb) in x.iter().zip(x_true.iter()) {
            assert!((xa - xb).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = CMat::<f64>::zeros(2, 2);
        assert!(matches!(LuFactor::factor(a), Err(Error::SingularY)));
    }

    #[test]
    fn cholesky_detects_spd() {
        let mut a = DMat::<f64>::zeros(2, 2);
        a.set(0, 0, 2.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 2.0);
        assert!(cholesky_is_spd(&a));
        a.set(0, 0, -1.0);
        assert!(!cholesky_is_spd(&a));
    }
}
