//! Precorrected-FFT acceleration of the inductive matrix-vector product.
//!
//! The dense product `Lb·x` is replaced by
//!
//! ```text
//! Lb x ≈ L_d x + Bᵀ (H ∗ (B x))        (three Cartesian components)
//! ```
//!
//! where `B` projects each edge basis onto a small stencil of uniform grid
//! nodes, `H` is the grid kernel `μ0/(4π r)` applied as a three-level
//! Toeplitz convolution via zero-padded FFTs, the interpolation matrix is
//! `Bᵀ` (Galerkin), and `L_d` holds precorrected near interactions: for every
//! pair of edges with overlapping (or nearly overlapping) stencils the exact
//! Galerkin entry is kept and the grid-mediated contribution subtracted.

mod fft3;

pub use fft3::next_smooth;

use crate::assembly::{edge_pair_entry, quadrature, rwg, AssemblyOptions, MomentCache};
use crate::geom::Vec3;
use crate::mesh::{EdgeSet, SurfaceMesh};
use crate::sparse::Csr;
use crate::{cast, mu0, Error, Result, Scalar};
use fft3::Fft3;
use num_complex::Complex;
use rayon::prelude::*;
use std::collections::HashMap;

/// Build options for the precorrected operator.
#[derive(Clone, Copy, Debug)]
pub struct PfftOptions<T> {
    /// Grid spacing; `None` picks the mean edge-support diameter.
    pub spacing: Option<T>,
    /// Stencil order `O_s`: each edge projects onto `(O_s+1)³` nodes.
    pub order: usize,
    /// Cap on padded FFT grid nodes.
    pub grid_cap: usize,
    /// Extra near-field margin in grid cells beyond stencil overlap.
    pub near_margin: usize,
}

impl<T: Scalar> Default for PfftOptions<T> {
    fn default() -> Self {
        PfftOptions {
            spacing: None,
            order: 2,
            grid_cap: 50_000_000,
            // two cells beyond stencil overlap: overlap alone leaves matvec
            // errors just above 1e-3 on the benchmark geometries, one extra
            // cell sits at ~1e-3 on large plates
            near_margin: 2,
        }
    }
}

/// Uniform grid with per-edge stencil assignments.
#[derive(Clone, Debug)]
pub struct PfftGrid<T> {
    pub origin: Vec3<T>,
    pub h: T,
    pub dims: [usize; 3],
    pub order: usize,
    /// Per-edge stencil base node (lowest corner of the (O_s+1)³ cube).
    bases: Vec<[usize; 3]>,
}

impl<T: Scalar> PfftGrid<T> {
    #[inline]
    pub fn stencil_nodes_per_edge(&self) -> usize {
        (self.order + 1).pow(3)
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn base(&self, edge: usize) -> [usize; 3] {
        self.bases[edge]
    }

    pub fn node_position(&self, idx: [usize; 3]) -> Vec3<T> {
        self.origin
            + Vec3::new(
                cast::<T>(idx[0] as f64) * self.h,
                cast::<T>(idx[1] as f64) * self.h,
                cast::<T>(idx[2] as f64) * self.h,
            )
    }
}

/// Lay a uniform grid over the mesh with stencil-radius padding and assign
/// each edge the `(O_s+1)³` grid nodes nearest its support centroid.
pub fn build_grid<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    edges: &EdgeSet<T>,
    opts: &PfftOptions<T>,
) -> Result<PfftGrid<T>> {
    assert!(opts.order >= 1, "stencil order must be at least 1");
    let k = opts.order + 1;
    let h = match opts.spacing {
        Some(h) if h > T::zero() => h,
        _ => {
            let mut sum = T::zero();
            for e in 0..edges.len() {
                sum += edges.support_diameter(mesh, e);
            }
            sum / cast::<T>(edges.len() as f64)
        }
    };
    let (lo, hi) = mesh.bounding_box();
    let pad = cast::<T>(k as f64) * h;
    let origin = lo - Vec3::new(pad, pad, pad);
    let mut dims = [0usize; 3];
    for (axis, d) in dims.iter_mut().enumerate() {
        let span = (hi.comp(axis) - origin.comp(axis)) / h + cast::<T>(k as f64);
        *d = span.ceil().to_usize().unwrap_or(usize::MAX).max(k) + 1;
    }
    let padded: usize = dims
        .iter()
        .map(|&d| next_smooth(2 * d - 1))
        .product();
    if padded > opts.grid_cap {
        return Err(Error::GridTooLarge {
            nodes: padded,
            cap: opts.grid_cap,
        });
    }
    let half = cast::<T>((k - 1) as f64 * 0.5);
    let bases = (0..edges.len())
        .map(|e| {
            let c = edges.support_centroid(mesh, e);
            let mut base = [0usize; 3];
            for (axis, b) in base.iter_mut().enumerate() {
                let u = (c.comp(axis) - origin.comp(axis)) / h - half;
                let i = u.round().to_isize().unwrap_or(0);
                *b = i.clamp(0, (dims[axis] - k) as isize) as usize;
            }
            base
        })
        .collect();
    Ok(PfftGrid {
        origin,
        h,
        dims,
        order: opts.order,
        bases,
    })
}

/// 1D Lagrange weights on the integer nodes `0..k` for local coordinate `u`.
#[inline]
pub fn lagrange_1d<T: Scalar>(k: usize, u: T) -> [T; 4] {
    debug_assert!(k <= 4);
    let mut w = [T::zero(); 4];
    for m in 0..k {
        let mut prod = T::one();
        for j in 0..k {
            if j != m {
                prod = prod * (u - cast::<T>(j as f64)) / cast::<T>(m as f64 - j as f64);
            }
        }
        w[m] = prod;
    }
    w
}

/// Stencil weights reproducing a unit point source at local offset `u`
/// (in grid-spacing units, relative to the stencil base node).
pub fn point_stencil_weights<T: Scalar>(order: usize, u: Vec3<T>) -> Vec<T> {
    let k = order + 1;
    let wx = lagrange_1d(k, u.x);
    let wy = lagrange_1d(k, u.y);
    let wz = lagrange_1d(k, u.z);
    let mut out = Vec::with_capacity(k * k * k);
    for iz in 0..k {
        for iy in 0..k {
            for ix in 0..k {
                out.push(wx[ix] * wy[iy] * wz[iz]);
            }
        }
    }
    out
}

/// Projection matrix `B`: per edge and Cartesian component, stencil weights
/// `w_g = ∫ f_c(r) ℓ_g(r) dA` with tensor-product Lagrange polynomials
/// `ℓ_g`. This reproduces all source moments up to tensor degree `O_s`, and a
/// point source on a grid node projects to a single unit weight.
pub struct Projection<T> {
    /// `[edge][component][node]` flattened; node index z-major as in
    /// [`point_stencil_weights`].
    weights: Vec<T>,
    k3: usize,
}

impl<T: Scalar> Projection<T> {
    pub fn build(
        mesh: &SurfaceMesh<T>,
        edges: &EdgeSet<T>,
        grid: &PfftGrid<T>,
    ) -> Result<Self> {
        let k = grid.order + 1;
        let k3 = k * k * k;
        let n = edges.len();
        let mut weights = vec![T::zero(); n * 3 * k3];
        let res: Result<Vec<()>> = weights
            .par_chunks_mut(3 * k3)
            .enumerate()
            .map(|(e, chunk)| {
                let edge = edges.edge(e);
                let base = grid.base(e);
                for &t in &[edge.tri_plus, edge.tri_minus] {
                    let v = mesh.triangle_vertices(t);
                    let area = mesh.triangle_area(t);
                    for node in &quadrature::TRI_GAUSS_16 {
                        let r = quadrature::bary_point(&v, node);
                        let f = rwg::value_on_triangle(mesh, edges, e, t, r);
                        let w_quad = cast::<T>(node.w) * area;
                        let mut u = [T::zero(); 3];
                        for axis in 0..3 {
                            u[axis] = (r.comp(axis) - grid.origin.comp(axis)) / grid.h
                                - cast::<T>(base[axis] as f64);
                        }
                        let wx = lagrange_1d(k, u[0]);
                        let wy = lagrange_1d(k, u[1]);
                        let wz = lagrange_1d(k, u[2]);
                        let fc = [f.x, f.y, f.z];
                        for iz in 0..k {
                            for iy in 0..k {
                                for ix in 0..k {
                                    let l = wx[ix] * wy[iy] * wz[iz] * w_quad;
                                    let node_idx = (iz * k + iy) * k + ix;
                                    for (c, &f_c) in fc.iter().enumerate() {
                                        chunk[c * k3 + node_idx] += f_c * l;
                                    }
                                }
                            }
                        }
                    }
                }
                if chunk.iter().any(|w| !w.is_finite()) {
                    return Err(Error::SingularFit { edge: e });
                }
                Ok(())
            })
            .collect();
        res?;
        Ok(Projection { weights, k3 })
    }

    #[inline]
    pub fn edge_component(&self, e: usize, c: usize) -> &[T] {
        let s = (e * 3 + c) * self.k3;
        &self.weights[s..s + self.k3]
    }

    /// Zeroth moment of the projected sources for one edge (all components).
    pub fn moment0(&self, e: usize) -> Vec3<T> {
        Vec3::new(
            self.edge_component(e, 0).iter().copied().sum(),
            self.edge_component(e, 1).iter().copied().sum(),
            self.edge_component(e, 2).iter().copied().sum(),
        )
    }

    pub fn memory_bytes(&self) -> usize {
        self.weights.len() * std::mem::size_of::<T>()
    }
}

/// Toeplitz grid kernel `μ0/(4π h |Δ|)` with zero self term, stored as the
/// FFT of its zero-padded circular embedding.
pub struct GridKernel<T: Scalar> {
    padded: [usize; 3],
    spectrum: Vec<Complex<T>>,
    fft: Fft3<T>,
}

impl<T: Scalar> GridKernel<T> {
    pub fn build(dims: [usize; 3], h: T) -> Self {
        let padded = [
            next_smooth(2 * dims[0] - 1),
            next_smooth(2 * dims[1] - 1),
            next_smooth(2 * dims[2] - 1),
        ];
        let fft = Fft3::new(padded);
        let n = fft.len();
        let mut spectrum = vec![Complex::new(T::zero(), T::zero()); n];
        let coef = mu0::<T>() / (cast::<T>(4.0) * T::PI() * h);
        let disp = |m: usize, p: usize, lim: usize| -> Option<i64> {
            let d = if m <= p / 2 { m as i64 } else { m as i64 - p as i64 };
            (d.unsigned_abs() as usize <= lim - 1).then_some(d)
        };
        for mz in 0..padded[2] {
            let dz = disp(mz, padded[2], dims[2]);
            for my in 0..padded[1] {
                let dy = disp(my, padded[1], dims[1]);
                for mx in 0..padded[0] {
                    let dx = disp(mx, padded[0], dims[0]);
                    if let (Some(dx), Some(dy), Some(dz)) = (dx, dy, dz) {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue; // grid self term lives in L_d
                        }
                        let r = cast::<T>(
                            ((dx * dx + dy * dy + dz * dz) as f64).sqrt(),
                        );
                        spectrum[(mz * padded[1] + my) * padded[0] + mx] =
                            Complex::new(coef / r, T::zero());
                    }
                }
            }
        }
        fft.forward(&mut spectrum);
        // fold the inverse-FFT normalization into the spectrum
        let inv_n = T::one() / cast::<T>(n as f64);
        for s in spectrum.iter_mut() {
            *s = *s * inv_n;
        }
        GridKernel {
            padded,
            spectrum,
            fft,
        }
    }

    pub fn memory_bytes(&self) -> usize {
        self.spectrum.len() * std::mem::size_of::<Complex<T>>()
    }

    /// Convolve grid charges with the Toeplitz kernel: the circular product
    /// on the zero-padded grid equals the aperiodic Toeplitz product on the
    /// original `dims` region.
    pub fn convolve(&self, dims: [usize; 3], q: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(q.len(), dims[0] * dims[1] * dims[2]);
        let [px, py, _pz] = self.padded;
        let zero = Complex::new(T::zero(), T::zero());
        let mut buf = vec![zero; self.fft.len()];
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                let src = (z * dims[1] + y) * dims[0];
                let dst = (z * py + y) * px;
                buf[dst..dst + dims[0]].copy_from_slice(&q[src..src + dims[0]]);
            }
        }
        self.fft.forward(&mut buf);
        for (v, s) in buf.iter_mut().zip(self.spectrum.iter()) {
            *v = *v * *s;
        }
        self.fft.inverse(&mut buf);
        let mut out = vec![zero; q.len()];
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                let dst = (z * dims[1] + y) * dims[0];
                let src = (z * py + y) * px;
                out[dst..dst + dims[0]].copy_from_slice(&buf[src..src + dims[0]]);
            }
        }
        out
    }
}

/// Kernel value between two grid nodes (direct evaluation, same convention
/// as the Toeplitz table: zero at zero displacement).
pub fn grid_kernel_direct<T: Scalar>(h: T, a: [usize; 3], b: [usize; 3]) -> T {
    let dx = a[0] as f64 - b[0] as f64;
    let dy = a[1] as f64 - b[1] as f64;
    let dz = a[2] as f64 - b[2] as f64;
    let r2 = dx * dx + dy * dy + dz * dz;
    if r2 == 0.0 {
        return T::zero();
    }
    mu0::<T>() / (cast::<T>(4.0) * T::PI() * h * cast::<T>(r2.sqrt()))
}

/// The assembled fast operator.
pub struct PrecorrectedOperator<T: Scalar> {
    grid: PfftGrid<T>,
    projection: Projection<T>,
    kernel: GridKernel<T>,
    /// Sparse precorrected near-field block (exact − grid on near pairs).
    l_d: Csr<T>,
    near_pairs: Vec<(usize, usize)>,
    exact_diag: Vec<T>,
    near_reach: usize,
    n_edges: usize,
}

impl<T: Scalar> PrecorrectedOperator<T> {
    pub fn build(
        mesh: &SurfaceMesh<T>,
        edges: &EdgeSet<T>,
        asm_opts: &AssemblyOptions<T>,
        opts: &PfftOptions<T>,
    ) -> Result<Self> {
        let grid = build_grid(mesh, edges, opts)?;
        let projection = Projection::build(mesh, edges, &grid)?;
        let kernel = GridKernel::build(grid.dims, grid.h);
        let near_pairs = find_near_pairs(&grid, opts.near_margin);
        let cache = MomentCache::build(mesh, asm_opts);

        let k = grid.order + 1;
        let entries: Vec<(usize, usize, T, T)> = near_pairs
            .par_iter()
            .map(|&(i, j)| {
                let exact = edge_pair_entry(mesh, edges, i, j, asm_opts, Some(&cache));
                let grid_part = grid_pair_contribution(&grid, &projection, i, j, k);
                (i, j, exact, exact - grid_part)
            })
            .collect();

        let mut exact_diag = vec![T::zero(); edges.len()];
        let mut triplets = Vec::with_capacity(entries.len() * 2);
        for &(i, j, exact, corrected) in &entries {
            if i == j {
                exact_diag[i] = exact;
                triplets.push((i, j, corrected));
            } else {
                triplets.push((i, j, corrected));
                triplets.push((j, i, corrected));
            }
        }
        let n = edges.len();
        let l_d = Csr::from_triplets(n, n, triplets);
        Ok(PrecorrectedOperator {
            grid,
            projection,
            kernel,
            l_d,
            near_pairs,
            exact_diag,
            near_reach: opts.order + opts.near_margin,
            n_edges: n,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n_edges
    }

    pub fn grid(&self) -> &PfftGrid<T> {
        &self.grid
    }

    pub fn projection(&self) -> &Projection<T> {
        &self.projection
    }

    pub fn near_pairs(&self) -> &[(usize, usize)] {
        &self.near_pairs
    }

    pub fn l_d(&self) -> &Csr<T> {
        &self.l_d
    }

    /// Exact Galerkin diagonal (also used by the loop preconditioner).
    pub fn exact_diagonal(&self) -> &[T] {
        &self.exact_diag
    }

    /// Grid-mediated (IHB) contribution of one edge pair, evaluated directly
    /// on the stencils; `L_d + grid_pair` reproduces exact near entries.
    pub fn grid_pair(&self, i: usize, j: usize) -> T {
        grid_pair_contribution(&self.grid, &self.projection, i, j, self.grid.order + 1)
    }

    pub fn kernel(&self) -> &GridKernel<T> {
        &self.kernel
    }

    /// Near-pair reach in stencil-base cells (stencil overlap plus margin).
    pub fn near_reach(&self) -> usize {
        self.near_reach
    }

    /// `y = (L_d + Bᵀ H B) x`.
    pub fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        assert_eq!(x.len(), self.n_edges);
        assert_eq!(y.len(), self.n_edges);
        let [px, py, _pz] = self.kernel.padded;
        let k = self.grid.order + 1;
        let zero = Complex::new(T::zero(), T::zero());
        self.l_d.mul_vec_into(x, y);
        let mut buf = vec![zero; self.kernel.fft.len()];
        for c in 0..3 {
            buf.iter_mut().for_each(|v| *v = zero);
            // scatter: Q = B x
            for e in 0..self.n_edges {
                let xe = x[e];
                if xe == zero {
                    continue;
                }
                let w = self.projection.edge_component(e, c);
                let b = self.grid.base(e);
                for iz in 0..k {
                    for iy in 0..k {
                        let row = ((b[2] + iz) * py + b[1] + iy) * px + b[0];
                        for ix in 0..k {
                            buf[row + ix] += xe * w[(iz * k + iy) * k + ix];
                        }
                    }
                }
            }
            // convolve on the padded grid
            self.kernel.fft.forward(&mut buf);
            buf.par_iter_mut()
                .zip(self.kernel.spectrum.par_iter())
                .for_each(|(v, s)| *v = *v * *s);
            self.kernel.fft.inverse(&mut buf);
            // gather: y += Bᵀ φ
            let buf_ref = &buf;
            y.par_iter_mut().enumerate().for_each(|(e, out)| {
                let w = self.projection.edge_component(e, c);
                let b = self.grid.base(e);
                let mut acc = zero;
                for iz in 0..k {
                    for iy in 0..k {
                        let row = ((b[2] + iz) * py + b[1] + iy) * px + b[0];
                        for ix in 0..k {
                            acc += buf_ref[row + ix] * w[(iz * k + iy) * k + ix];
                        }
                    }
                }
                *out += acc;
            });
        }
    }

    /// Persistent memory of the operator (stencils, kernel spectrum, near
    /// block) plus the one scratch grid an apply needs.
    pub fn memory_bytes(&self) -> usize {
        self.projection.memory_bytes()
            + self.kernel.memory_bytes()
            + self.l_d.memory_bytes()
            + self.grid.bases.len() * std::mem::size_of::<[usize; 3]>()
            + self.exact_diag.len() * std::mem::size_of::<T>()
            + self.kernel.fft.len() * std::mem::size_of::<Complex<T>>()
    }
}

/// Grid-mediated contribution between two edges, evaluated exactly on their
/// stencil nodes (what `IHB` produces for this pair).
fn grid_pair_contribution<T: Scalar>(
    grid: &PfftGrid<T>,
    projection: &Projection<T>,
    i: usize,
    j: usize,
    k: usize,
) -> T {
    let (bi, bj) = (grid.base(i), grid.base(j));
    let mut acc = T::zero();
    for c in 0..3 {
        let wi = projection.edge_component(i, c);
        let wj = projection.edge_component(j, c);
        for az in 0..k {
            for ay in 0..k {
                for ax in 0..k {
                    let wa = wi[(az * k + ay) * k + ax];
                    if wa == T::zero() {
                        continue;
                    }
                    let na = [bi[0] + ax, bi[1] + ay, bi[2] + az];
                    for bz in 0..k {
                        for by in 0..k {
                            for bx in 0..k {
                                let wb = wj[(bz * k + by) * k + bx];
                                let nb = [bj[0] + bx, bj[1] + by, bj[2] + bz];
                                acc += wa * wb * grid_kernel_direct(grid.h, na, nb);
                            }
                        }
                    }
                }
            }
        }
    }
    acc
}

/// Edge pairs whose stencil cubes overlap (within `margin` extra cells),
/// listed deterministically with `i ≤ j`.
fn find_near_pairs<T: Scalar>(grid: &PfftGrid<T>, margin: usize) -> Vec<(usize, usize)> {
    let k1 = grid.order; // k − 1
    let reach = (k1 + margin) as i64;
    let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (e, b) in grid.bases.iter().enumerate() {
        buckets
            .entry((b[0] as i64, b[1] as i64, b[2] as i64))
            .or_default()
            .push(e);
    }
    let mut pairs = Vec::new();
    for (i, b) in grid.bases.iter().enumerate() {
        let (cx, cy, cz) = (b[0] as i64, b[1] as i64, b[2] as i64);
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if let Some(list) = buckets.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &j in list {
                            if j >= i {
                                pairs.push((i, j));
                            }
                        }
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}
