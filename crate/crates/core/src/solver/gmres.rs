//! Restarted GMRES with optional left preconditioning, modified
//! Gram-Schmidt orthogonalization and complex Givens rotations.

use crate::{cast, Scalar};
use num_complex::Complex;

/// Anything that can play the system matrix.
pub trait LinearOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]);
}

/// Left preconditioner: in-place application of `M⁻¹`.
pub trait Preconditioner<T: Scalar>: Sync {
    fn solve_in_place(&self, x: &mut [Complex<T>]);
}

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions<T> {
    /// Relative preconditioned residual target.
    pub tol: T,
    /// Krylov dimension per restart cycle.
    pub restart: usize,
    /// Total iteration (matvec) budget.
    pub max_iterations: usize,
}

impl<T: Scalar> Default for GmresOptions<T> {
    fn default() -> Self {
        GmresOptions {
            tol: cast(1e-3),
            restart: 100,
            max_iterations: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome<T: Scalar> {
    pub x: Vec<Complex<T>>,
    pub iterations: usize,
    pub residual: T,
    /// Relative preconditioned residual after each iteration.
    pub residual_history: Vec<T>,
    pub converged: bool,
}

fn norm2<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Solve `A x = b` (preconditioned: `M⁻¹A x = M⁻¹b`).
pub fn gmres<T: Scalar>(
    op: &dyn LinearOperator<T>,
    precond: Option<&dyn Preconditioner<T>>,
    b: &[Complex<T>],
    opts: &GmresOptions<T>,
) -> GmresOutcome<T> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    let zero = Complex::new(T::zero(), T::zero());

    let mut pb = b.to_vec();
    if let Some(m) = precond {
        m.solve_in_place(&mut pb);
    }
    let b_norm = norm2(&pb);
    if b_norm == T::zero() {
        return GmresOutcome {
            x: vec![zero; n],
            iterations: 0,
            residual: T::zero(),
            residual_history: Vec::new(),
            converged: true,
        };
    }

    let m = opts.restart.max(1).min(n.max(1));
    let mut x = vec![zero; n];
    let mut iterations = 0usize;
    let mut history = Vec::new();
    let mut scratch = vec![zero; n];

    loop {
        // residual of the current iterate
        op.apply(&x, &mut scratch);
        let mut r: Vec<Complex<T>> = b
            .iter()
            .zip(scratch.iter())
            .map(|(&bi, &ai)| bi - ai)
            .collect();
        if let Some(mp) = precond {
            mp.solve_in_place(&mut r);
        }
        let beta = norm2(&r);
        let rel = beta / b_norm;
        if rel <= opts.tol {
            return GmresOutcome {
                x,
                iterations,
                residual: rel,
                residual_history: history,
                converged: true,
            };
        }
        if iterations >= opts.max_iterations {
            return GmresOutcome {
                x,
                iterations,
                residual: rel,
                residual_history: history,
                converged: false,
            };
        }

        let inv_beta = T::one() / beta;
        let mut basis: Vec<Vec<Complex<T>>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|&z| z * inv_beta).collect());
        let mut h_cols: Vec<Vec<Complex<T>>> = Vec::with_capacity(m);
        let mut cs: Vec<Complex<T>> = Vec::with_capacity(m);
        let mut sn: Vec<Complex<T>> = Vec::with_capacity(m);
        let mut g = vec![zero; m + 1];
        g[0] = Complex::new(beta, T::zero());
        let mut k_done = 0;

        for k in 0..m {
            iterations += 1;
            // w = M⁻¹ A v_k
            op.apply(&basis[k], &mut scratch);
            let mut w = scratch.clone();
            if let Some(mp) = precond {
                mp.solve_in_place(&mut w);
            }
            // modified Gram-Schmidt
            let mut h = vec![zero; k + 2];
            for (j, vj) in basis.iter().enumerate().take(k + 1) {
                let hjk: Complex<T> = vj
                    .iter()
                    .zip(w.iter())
                    .map(|(&v, &wv)| v.conj() * wv)
                    .sum();
                h[j] = hjk;
                for (wi, &vi) in w.iter_mut().zip(vj.iter()) {
                    *wi -= hjk * vi;
                }
            }
            let w_norm = norm2(&w);
            h[k + 1] = Complex::new(w_norm, T::zero());

            // apply accumulated Givens rotations to the new column
            for j in 0..k {
                let tmp = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j].conj() * h[j] + cs[j] * h[j + 1];
                h[j] = tmp;
            }
            // new rotation annihilating h[k+1]
            let (c, s) = givens(h[k], h[k + 1]);
            let hk = c * h[k] + s * h[k + 1];
            h[k] = hk;
            h[k + 1] = zero;
            let gk = g[k];
            g[k] = c * gk;
            g[k + 1] = -s.conj() * gk;
            cs.push(c);
            sn.push(s);
            h_cols.push(h);
            k_done = k + 1;

            let est = g[k + 1].norm() / b_norm;
            history.push(est);
            if est <= opts.tol || iterations >= opts.max_iterations {
                break;
            }
            if w_norm == T::zero() {
                break; // exact breakdown: solution lies in the current space
            }
            let inv = T::one() / w_norm;
            basis.push(w.iter().map(|&z| z * inv).collect());
        }

        // back-substitute y from the triangularized least-squares system
        let mut y = vec![zero; k_done];
        for i in (0..k_done).rev() {
            let mut acc = g[i];
            for j in i + 1..k_done {
                acc -= h_cols[j][i] * y[j];
            }
            y[i] = acc / h_cols[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, &vi) in x.iter_mut().zip(basis[j].iter()) {
                *xi += *yj * vi;
            }
        }
    }
}

/// Complex Givens rotation zeroing `b`: returns (c real-as-complex, s)
/// with `c·a + s·b = r`, `−s̄·a + c·b = 0`.
fn givens<T: Scalar>(a: Complex<T>, b: Complex<T>) -> (Complex<T>, Complex<T>) {
    let zero = T::zero();
    if b.norm_sqr() == zero {
        return (Complex::new(T::one(), zero), Complex::new(zero, zero));
    }
    if a.norm_sqr() == zero {
        return (Complex::new(zero, zero), Complex::new(T::one(), zero));
    }
    let am = a.norm();
    let t = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = Complex::new(am / t, zero);
    let s = (a / am) * b.conj() / t;
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct DenseOp(Vec<Vec<Complex<f64>>>);

    impl LinearOperator<f64> for DenseOp {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[Complex<f64>], y: &mut [Complex<f64>]) {
            for (yi, row) in y.iter_mut().zip(self.0.iter()) {
                *yi = row.iter().zip(x.iter()).map(|(&a, &b)| a * b).sum();
            }
        }
    }

    struct DiagPrecond(Vec<Complex<f64>>);

    impl Preconditioner<f64> for DiagPrecond {
        fn solve_in_place(&self, x: &mut [Complex<f64>]) {
            for (xi, d) in x.iter_mut().zip(self.0.iter()) {
                *xi = *xi / d;
            }
        }
    }

    fn test_matrix(n: usize) -> Vec<Vec<Complex<f64>>> {
        let mut a = vec![vec![Complex::new(0.0, 0.0); n]; n];
        for i in 0..n {
            a[i][i] = Complex::new(3.0 + i as f64, 1.0);
            if i + 1 < n {
                a[i][i + 1] = Complex::new(0.5, -0.2);
                a[i + 1][i] = Complex::new(0.5, -0.2);
            }
        }
        a
    }

    #[test]
    fn zero_rhs_returns_zero_in_zero_iterations() {
        let op = DenseOp(test_matrix(8));
        let b = vec![Complex::new(0.0, 0.0); 8];
        let out = gmres(&op, None, &b, &GmresOptions::default());
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert!(out.x.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn solves_small_system() {
        let a = test_matrix(12);
        let op = DenseOp(a.clone());
        let x_true: Vec<Complex<f64>> = (0..12)
            .map(|i| Complex::new(1.0 - 0.2 * i as f64, 0.1 * i as f64))
            .collect();
        let mut b = vec![Complex::new(0.0, 0.0); 12];
        op.apply(&x_true, &mut b);
        let out = gmres(
            &op,
            None,
            &b,
            &GmresOptions {
                tol: 1e-12,
                restart: 12,
                max_iterations: 100,
            },
        );
        assert!(out.converged);
        for (g, w) in out.x.iter().zip(&x_true) {
            assert!((g - w).norm() < 1e-9);
        }
    }

    #[test]
    fn exact_diagonal_preconditioner_converges_in_one_iteration() {
        let n = 20;
        let mut a = vec![vec![Complex::new(0.0, 0.0); n]; n];
        let mut d = Vec::new();
        for (i, row) in a.iter_mut().enumerate() {
            let v = Complex::new(1.0 + i as f64, 0.5 * i as f64 - 2.0);
            row[i] = v;
            d.push(v);
        }
        let op = DenseOp(a);
        let b: Vec<Complex<f64>> = (0..n).map(|i| Complex::new(i as f64, -1.0)).collect();
        let out = gmres(
            &op,
            Some(&DiagPrecond(d)),
            &b,
            &GmresOptions {
                tol: 1e-10,
                restart: 30,
                max_iterations: 50,
            },
        );
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn residual_history_monotone_within_cycle() {
        let op = DenseOp(test_matrix(30));
        let b: Vec<Complex<f64>> = (0..30)
            .map(|i| Complex::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let out = gmres(
            &op,
            None,
            &b,
            &GmresOptions {
                tol: 1e-13,
                restart: 30,
                max_iterations: 30,
            },
        );
        for w in out.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }
}
