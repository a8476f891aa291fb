//! Sparse LDLᵀ factorization of complex symmetric matrices (no conjugation,
//! no pivoting) with reverse Cuthill-McKee preordering. The loop
//! preconditioner `P = A·diag(Zb)·Aᵀ` has positive-semidefinite real and
//! imaginary parts, for which the unpivoted factorization exists whenever no
//! loop consists solely of zero-impedance branches.
//!
//! Up-looking algorithm with elimination-tree pattern discovery, after
//! Davis's LDL. Symbolic analysis is separated from the numeric factorization
//! so a frequency sweep re-factors cheaply on a fixed pattern.

use crate::{cast, Error, Result, Scalar};
use num_complex::Complex;
use std::collections::VecDeque;

/// Reusable symbolic side: ordering, permuted upper-triangular pattern,
/// elimination tree and column counts.
pub struct LdlPlan {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// Upper-triangular pattern (including diagonal) in permuted indices,
    /// compressed by column.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// For each input triplet: destination slot in `row_idx` order, or
    /// `usize::MAX` for the discarded mirror of an off-diagonal entry.
    slot_of_triplet: Vec<usize>,
    parent: Vec<isize>,
    l_col_ptr: Vec<usize>,
}

/// Numeric factors L (unit diagonal, stored strictly lower) and D.
pub struct LdlFactors<T: Scalar> {
    l_row_idx: Vec<usize>,
    l_values: Vec<Complex<T>>,
    d: Vec<Complex<T>>,
}

impl LdlPlan {
    /// Build the symbolic plan from the structural pattern of a symmetric
    /// matrix given as ordered (row, col) pairs; both orders of an
    /// off-diagonal entry must be present (they are merged).
    pub fn new(n: usize, pattern: &[(usize, usize)]) -> Self {
        let perm = rcm_order(n, pattern);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // permuted upper entries, unique, column-sorted
        let mut entries: Vec<(usize, usize)> = pattern
            .iter()
            .filter_map(|&(i, j)| {
                let (pi, pj) = (iperm[i], iperm[j]);
                (pi <= pj).then_some((pj, pi)) // (col, row)
            })
            .collect();
        entries.sort_unstable();
        entries.dedup();
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        for &(c, r) in &entries {
            col_ptr[c + 1] += 1;
            row_idx.push(r);
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }

        // map each input triplet to its slot
        let slot_lookup: std::collections::HashMap<(usize, usize), usize> = entries
            .iter()
            .enumerate()
            .map(|(s, &(c, r))| ((c, r), s))
            .collect();
        let slot_of_triplet = pattern
            .iter()
            .map(|&(i, j)| {
                let (pi, pj) = (iperm[i], iperm[j]);
                if pi <= pj {
                    slot_lookup[&(pj, pi)]
                } else {
                    usize::MAX
                }
            })
            .collect();

        // elimination tree and column counts of L
        let mut parent = vec![-1isize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_nz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in col_ptr[k]..col_ptr[k + 1] {
                let mut i = row_idx[p];
                while i < k && flag[i] != k {
                    if parent[i] == -1 {
                        parent[i] = k as isize;
                    }
                    l_nz[i] += 1;
                    flag[i] = k;
                    i = parent[i] as usize;
                }
            }
        }
        let mut l_col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            l_col_ptr[k + 1] = l_col_ptr[k] + l_nz[k];
        }

        LdlPlan {
            n,
            perm,
            col_ptr,
            row_idx,
            slot_of_triplet,
            parent,
            l_col_ptr,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_nnz(&self) -> usize {
        self.l_col_ptr[self.n]
    }

    /// Numeric factorization. `triplet_values` must align with the pattern
    /// the plan was built from; duplicate slots are summed.
    pub fn factor<T: Scalar>(&self, triplet_values: &[Complex<T>]) -> Result<LdlFactors<T>> {
        assert_eq!(triplet_values.len(), self.slot_of_triplet.len());
        let n = self.n;
        let zero = Complex::new(T::zero(), T::zero());
        let mut a_values = vec![zero; self.row_idx.len()];
        for (v, &slot) in triplet_values.iter().zip(&self.slot_of_triplet) {
            if slot != usize::MAX {
                a_values[slot] += *v;
            }
        }

        let mut l_row_idx = vec![0usize; self.l_nnz()];
        let mut l_values = vec![zero; self.l_nnz()];
        let mut d = vec![zero; n];
        let mut y = vec![zero; n];
        let mut pattern = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_fill = vec![0usize; n];

        let mut d_scale = T::zero();
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                let entry_row = self.row_idx[p]; // ≤ k in the upper pattern
                y[entry_row] += a_values[p];
                let mut len = 0;
                let mut i = entry_row;
                // climb the elimination tree; the chain from any entry of
                // column k reaches a node already flagged k (ultimately k
                // itself), so parent lookups stay in bounds
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = self.parent[i] as usize;
                }
                // stack the path in topological order
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    stack[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = zero;
            for &i in &stack[top..n] {
                let yi = y[i];
                y[i] = zero;
                let lo = self.l_col_ptr[i];
                let hi = lo + l_fill[i];
                for p in lo..hi {
                    y[l_row_idx[p]] -= l_values[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                l_row_idx[hi] = k;
                l_values[hi] = l_ki;
                l_fill[i] += 1;
            }
            let mag = d[k].norm_sqr();
            d_scale = d_scale.max(mag);
            if !mag.is_finite() || mag <= d_scale * cast::<T>(1e-28) {
                return Err(Error::SingularPreconditioner {
                    pivot: self.perm[k],
                });
            }
        }
        Ok(LdlFactors {
            l_row_idx,
            l_values,
            d,
        })
    }

    /// Solve `A x = b` in place using factors produced by this plan.
    pub fn solve_in_place<T: Scalar>(&self, factors: &LdlFactors<T>, b: &mut [Complex<T>]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<Complex<T>> = (0..n).map(|i| b[self.perm[i]]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                x[factors.l_row_idx[p]] -= factors.l_values[p] * xj;
            }
        }
        for j in 0..n {
            x[j] = x[j] / factors.d[j];
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                acc -= factors.l_values[p] * x[factors.l_row_idx[p]];
            }
            x[j] = acc;
        }
        for i in 0..n {
            b[self.perm[i]] = x[i];
        }
    }
}

/// Reverse Cuthill-McKee ordering of a symmetric pattern; returns
/// `perm[new] = old`.
fn rcm_order(n: usize, pattern: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in pattern {
        if i != j {
            adj[i].push(j);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.sort_by_key(|&v| (degree[v], v));
    for &seed in &nodes {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut start = seed;
    for _ in 0..2 {
        // BFS to the last level, pick its min-degree node
        let mut dist = vec![usize::MAX; adj.len()];
        dist[start] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(start);
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &u in &adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        let far = dist[last];
        let mut best = last;
        for (v, &dv) in dist.iter().enumerate() {
            if dv == far && degree[v] < degree[best] {
                best = v;
            }
        }
        if best == start {
            break;
        }
        start = best;
    }
    start
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_from(n: usize, trips: &[(usize, usize, Complex<f64>)]) -> Vec<Vec<Complex<f64>>> {
        let mut m = vec![vec![Complex::new(0.0, 0.0); n]; n];
        for &(i, j, v) in trips {
            m[i][j] += v;
        }
        m
    }

    #[test]
    fn factors_and_solves_complex_symmetric() {
        // A = B + iC with B SPD-ish, C PSD: diagonally dominant symmetric
        let n = 6;
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, i, Complex::new(4.0 + i as f64, 2.0)));
        }
        for (i, j, re, im) in [
            (0usize, 1usize, 0.7, 0.2),
            (1, 2, -0.5, 0.1),
            (2, 3, 0.3, -0.4),
            (3, 4, 0.8, 0.3),
            (4, 5, -0.2, 0.6),
            (0, 5, 0.4, 0.0),
            (1, 4, 0.1, 0.5),
        ] {
            trips.push((i, j, Complex::new(re, im)));
            trips.push((j, i, Complex::new(re, im)));
        }
        let pattern: Vec<(usize, usize)> = trips.iter().map(|&(i, j, _)| (i, j)).collect();
        let values: Vec<Complex<f64>> = trips.iter().map(|&(_, _, v)| v).collect();
        let plan = LdlPlan::new(n, &pattern);
        let factors = plan.factor(&values).unwrap();

        let a = dense_from(n, &trips);
        let x_true: Vec<Complex<f64>> = (0..n)
            .map(|i| Complex::new(i as f64 - 2.5, 0.3 * i as f64))
            .collect();
        let mut b: Vec<Complex<f64>> = (0..n)
            .map(|i| {
                a[i].iter()
                    .zip(&x_true)
                    .map(|(aij, xj)| aij * xj)
                    .sum::<Complex<f64>>()
            })
            .collect();
        plan.solve_in_place(&factors, &mut b);
        for (got, want) in b.iter().zip(&x_true) {
            assert!((got - want).norm() < 1e-11, "{got} vs {want}");
        }
    }

    #[test]
    fn reports_singularity() {
        // 2x2 singular: [[1, 1], [1, 1]]
        let trips = [
            (0usize, 0usize, Complex::new(1.0, 0.0)),
            (0, 1, Complex::new(1.0, 0.0)),
            (1, 0, Complex::new(1.0, 0.0)),
            (1, 1, Complex::new(1.0, 0.0)),
        ];
        let pattern: Vec<(usize, usize)> = trips.iter().map(|&(i, j, _)| (i, j)).collect();
        let values: Vec<Complex<f64>> = trips.iter().map(|&(_, _, v)| v).collect();
        let plan = LdlPlan::new(2, &pattern);
        assert!(matches!(
            plan.factor(&values),
            Err(Error::SingularPreconditioner { .. })
        ));
    }
}
