//! Galerkin assembly of the branch impedance operator.
//!
//! The branch system splits into a sparse resistive part
//! `Rb = Zs · ∫ fᵢ·fⱼ` (overlap of bases sharing a triangle, scaled by the
//! surface impedance) and a dense inductive part
//! `Lb[i,j] = (μ0/4π) ∬ fᵢ(r)·fⱼ(r′) / |r − r′|` stored in henries; the
//! `jω` factor is applied at matvec time so one assembly serves a whole
//! frequency sweep.
//!
//! Triangle-pair double integrals use 7-point Gauss × 7-point Gauss for
//! separated pairs and an adaptive outer rule with the analytic inner `1/R`
//! integral for coincident, adjacent and close pairs.

pub mod quadrature;
pub mod rwg;
pub mod singular;

use crate::geom::Vec3;
use crate::linalg::DMat;
use crate::mesh::{EdgeSet, SurfaceMesh};
use crate::sparse::Csr;
use crate::{cast, mu0, Error, Result, Scalar};
use num_complex::Complex;
use quadrature::{bary_point, TRI_GAUSS_7};
use rayon::prelude::*;
use std::collections::HashMap;

/// Conductor material.
#[derive(Clone, Copy, Debug)]
pub struct Material<T> {
    /// Conductivity σ in S/m. `+∞` models a perfect electric conductor.
    pub conductivity: T,
    /// Permeability μ in H/m.
    pub permeability: T,
}

impl<T: Scalar> Material<T> {
    pub fn new(conductivity: T, permeability: T) -> Self {
        Material {
            conductivity,
            permeability,
        }
    }

    /// Non-magnetic conductor (μ = μ0).
    pub fn conductor(conductivity: T) -> Self {
        Material::new(conductivity, mu0())
    }

    /// Annealed copper, σ = 5.8·10⁷ S/m.
    pub fn copper() -> Self {
        Material::conductor(cast(5.8e7))
    }

    /// Perfect electric conductor: zero surface impedance at any frequency.
    pub fn pec() -> Self {
        Material::conductor(T::infinity())
    }

    /// Surface impedance `√(jωμ/σ)` in Ω per square, principal root
    /// (phase +45°).
    pub fn surface_impedance(&self, omega: T) -> Result<Complex<T>> {
        if omega <= T::zero() {
            return Err(Error::NonPositiveFrequency(
                omega.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if self.conductivity.is_infinite() {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        let x = omega * self.permeability / self.conductivity;
        let half = (x * cast::<T>(0.5)).sqrt();
        Ok(Complex::new(half, half))
    }

    /// Skin depth `√(2/(ωμσ))` in meters.
    pub fn skin_depth(&self, omega: T) -> Result<T> {
        if omega <= T::zero() {
            return Err(Error::NonPositiveFrequency(
                omega.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if self.conductivity.is_infinite() {
            return Ok(T::zero());
        }
        Ok((cast::<T>(2.0) / (omega * self.permeability * self.conductivity)).sqrt())
    }
}

/// Static free-space Green's function `1/(4π|r−r′|)`.
pub fn greens_static<T: Scalar>(r: Vec3<T>, rp: Vec3<T>) -> Result<T> {
    let d = r.dist(rp);
    if d == T::zero() {
        return Err(Error::CoincidentPoints);
    }
    Ok(T::one() / (cast::<T>(4.0) * T::PI() * d))
}

/// Assembly tuning knobs.
#[derive(Clone, Copy, Debug)]
pub struct AssemblyOptions<T> {
    /// Triangle pairs closer than `near_factor × max(circumradius)` (centroid
    /// distance) take the singularity-extracted path.
    pub near_factor: T,
    /// Relative tolerance of the adaptive outer integration.
    pub adaptive_tol: T,
    /// Maximum subdivision depth of the adaptive outer integration.
    pub max_depth: usize,
    /// Hard cap on the dense inductive matrix dimension.
    pub dense_cap: usize,
}

impl<T: Scalar> Default for AssemblyOptions<T> {
    fn default() -> Self {
        AssemblyOptions {
            near_factor: cast(2.0),
            adaptive_tol: cast(3e-9),
            max_depth: 12,
            dense_cap: 20_000,
        }
    }
}

/// The four reduced moments of a triangle pair (α, β):
/// `∬ 1/R`, `∬ r/R` (r in α), `∬ r′/R` (r′ in β) and `∬ (r·r′)/R`.
/// Every Galerkin entry between bases living on α and β is a linear
/// combination of these.
#[derive(Clone, Copy, Debug)]
pub struct PairMoments<T> {
    t0: T,
    tr_a: Vec3<T>,
    tr_b: Vec3<T>,
    trr: T,
}

impl<T: Scalar> PairMoments<T> {
    /// `∬ (r − p)·(r′ − q)/R` for free vertices p (on α) and q (on β).
    #[inline]
    fn block(&self, p: Vec3<T>, q: Vec3<T>) -> T {
        self.trr - q.dot(self.tr_a) - p.dot(self.tr_b) + p.dot(q) * self.t0
    }
}

/// Compute the pair moments for the canonical orientation (outer = `a`,
/// inner = `b`, requires `a <= b` for the deterministic symmetric path).
pub fn pair_moments<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    a: usize,
    b: usize,
    opts: &AssemblyOptions<T>,
) -> PairMoments<T> {
    debug_assert!(a <= b);
    let va = mesh.triangle_vertices(a);
    let vb = mesh.triangle_vertices(b);
    if a == b {
        return coincident_moments(&va, opts);
    }
    if pair_is_near(mesh, a, b, opts) {
        near_moments(&va, &vb, opts)
    } else {
        far_moments(&va, &vb)
    }
}

fn pair_is_near<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    a: usize,
    b: usize,
    opts: &AssemblyOptions<T>,
) -> bool {
    let (ta, tb) = (mesh.triangles()[a], mesh.triangles()[b]);
    if ta.iter().any(|v| tb.contains(v)) {
        return true;
    }
    let d = mesh.triangle_centroid(a).dist(mesh.triangle_centroid(b));
    let r = mesh
        .triangle_circumradius(a)
        .max(mesh.triangle_circumradius(b));
    d < opts.near_factor * r
}

/// Separated pair: tensor Gauss.
fn far_moments<T: Scalar>(va: &[Vec3<T>; 3], vb: &[Vec3<T>; 3]) -> PairMoments<T> {
    let area_a = crate::geom::triangle_area(va[0], va[1], va[2]);
    let area_b = crate::geom::triangle_area(vb[0], vb[1], vb[2]);
    let mut m = PairMoments {
        t0: T::zero(),
        tr_a: Vec3::zero(),
        tr_b: Vec3::zero(),
        trr: T::zero(),
    };
    for na in &TRI_GAUSS_7 {
        let ra = bary_point(va, na);
        let wa = cast::<T>(na.w) * area_a;
        for nb in &TRI_GAUSS_7 {
            let rb = bary_point(vb, nb);
            let w = wa * cast::<T>(nb.w) * area_b;
            let g = w / ra.dist(rb);
            m.t0 += g;
            m.tr_a += ra * g;
            m.tr_b += rb * g;
            m.trr += ra.dot(rb) * g;
        }
    }
    m
}

/// Touching or close pair: adaptive outer over α, analytic inner over β.
fn near_moments<T: Scalar>(
    va: &[Vec3<T>; 3],
    vb: &[Vec3<T>; 3],
    opts: &AssemblyOptions<T>,
) -> PairMoments<T> {
    let vb = *vb;
    let vals = quadrature::integrate_adaptive(
        *va,
        &move |r: Vec3<T>| {
            let pot = singular::potential_integrals(&vb, r);
            let j1 = pot.moment();
            [
                pot.i0,
                r.x * pot.i0,
                r.y * pot.i0,
                r.z * pot.i0,
                j1.x,
                j1.y,
                j1.z,
                r.dot(j1),
            ]
        },
        opts.adaptive_tol,
        opts.max_depth,
    );
    PairMoments {
        t0: vals[0],
        tr_a: Vec3::new(vals[1], vals[2], vals[3]),
        tr_b: Vec3::new(vals[4], vals[5], vals[6]),
        trr: vals[7],
    }
}

/// Coincident pair: like `near_moments`, but `∬ r/R` and `∬ r′/R` are the
/// same integral by symmetry of the domain; using one value for both keeps
/// the assembled block exactly symmetric.
fn coincident_moments<T: Scalar>(
    va: &[Vec3<T>; 3],
    opts: &AssemblyOptions<T>,
) -> PairMoments<T> {
    let mut m = near_moments(va, va, opts);
    m.tr_a = m.tr_b;
    m
}

/// Closed-form `∫_T (r − p)·(r − q) dA` for constant points p, q.
fn overlap_poly<T: Scalar>(v: &[Vec3<T>; 3], area: T, p: Vec3<T>, q: Vec3<T>) -> T {
    let sixth = area / cast::<T>(6.0);
    let mut rr = T::zero();
    for i in 0..3 {
        rr += v[i].norm_sq();
        for j in i + 1..3 {
            rr += v[i].dot(v[j]);
        }
    }
    let c = crate::geom::centroid(v[0], v[1], v[2]);
    sixth * rr - (p + q).dot(c) * area + p.dot(q) * area
}

/// Frequency-independent basis overlap Gramian `O[i,j] = ∫ fᵢ·fⱼ`; sparse
/// with entries only between bases sharing a triangle. `Rb = Zs(ω) · O`.
pub fn assemble_overlap<T: Scalar>(mesh: &SurfaceMesh<T>, edges: &EdgeSet<T>) -> Csr<T> {
    let n = edges.len();
    let mut triplets = Vec::with_capacity(mesh.n_triangles() * 9);
    for t in 0..mesh.n_triangles() {
        let v = mesh.triangle_vertices(t);
        let area = mesh.triangle_area(t);
        let refs = edges.triangle_edges(t);
        for ei in refs {
            let p = mesh.vertices()[edges.free_vertex(ei.edge, t)];
            let si = edges.sign_of(ei.edge, t);
            for ej in refs {
                let q = mesh.vertices()[edges.free_vertex(ej.edge, t)];
                let sj = edges.sign_of(ej.edge, t);
                let val = si * sj / (cast::<T>(4.0) * area * area)
                    * overlap_poly(&v, area, p, q);
                triplets.push((ei.edge, ej.edge, val));
            }
        }
    }
    Csr::from_triplets(n, n, triplets)
}

const MU0_OVER_4PI: f64 = 1e-7;

/// Single dense inductive entry between edges `i` and `j`, identical (up to
/// summation order roundoff) to what [`assemble_lb_dense`] produces. Used by
/// the precorrection and for operator diagonals.
pub fn edge_pair_entry<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    edges: &EdgeSet<T>,
    i: usize,
    j: usize,
    opts: &AssemblyOptions<T>,
    cache: Option<&MomentCache<T>>,
) -> T {
    let (ei, ej) = (edges.edge(i), edges.edge(j));
    let kappa = cast::<T>(MU0_OVER_4PI);
    let mut acc = T::zero();
    for &ta in &[ei.tri_plus, ei.tri_minus] {
        for &tb in &[ej.tri_plus, ej.tri_minus] {
            let (alpha, beta) = (ta.min(tb), ta.max(tb));
            let m = match cache.and_then(|c| c.get(alpha, beta)) {
                Some(m) => m,
                None => pair_moments(mesh, alpha, beta, opts),
            };
            let p_i = mesh.vertices()[edges.free_vertex(i, ta)];
            let q_j = mesh.vertices()[edges.free_vertex(j, tb)];
            let block = if ta <= tb {
                m.block(p_i, q_j)
            } else {
                m.block(q_j, p_i)
            };
            let scale = edges.sign_of(i, ta) * edges.sign_of(j, tb)
                / (cast::<T>(4.0) * mesh.triangle_area(ta) * mesh.triangle_area(tb));
            acc += kappa * scale * block;
        }
    }
    acc
}

/// Cache of pair moments for touching triangle pairs, built in parallel with
/// a deterministic pair list.
pub struct MomentCache<T> {
    map: HashMap<(usize, usize), PairMoments<T>>,
}

impl<T: Scalar> MomentCache<T> {
    /// Precompute moments for all coincident and vertex-sharing pairs.
    pub fn build(mesh: &SurfaceMesh<T>, opts: &AssemblyOptions<T>) -> Self {
        let nt = mesh.n_triangles();
        let mut vertex_tris: HashMap<usize, Vec<usize>> = HashMap::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &v in tri {
                vertex_tris.entry(v).or_default().push(t);
            }
        }
        let mut pairs: Vec<(usize, usize)> = (0..nt).map(|t| (t, t)).collect();
        for tris in vertex_tris.values() {
            for (k, &a) in tris.iter().enumerate() {
                for &b in &tris[k + 1..] {
                    pairs.push((a.min(b), a.max(b)));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let moments: Vec<PairMoments<T>> = pairs
            .par_iter()
            .map(|&(a, b)| pair_moments(mesh, a, b, opts))
            .collect();
        MomentCache {
            map: pairs.into_iter().zip(moments).collect(),
        }
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> Option<PairMoments<T>> {
        self.map.get(&(a, b)).copied()
    }
}

/// Dense inductive matrix (H). Symmetric by construction: each unordered
/// triangle pair is integrated once and scattered to both entry orders.
pub fn assemble_lb_dense<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    edges: &EdgeSet<T>,
    opts: &AssemblyOptions<T>,
) -> Result<DMat<T>> {
    let n = edges.len();
    if n > opts.dense_cap {
        return Err(Error::OutOfMemory {
            dim: n,
            cap: opts.dense_cap,
        });
    }
    let nt = mesh.n_triangles();
    let kappa = cast::<T>(MU0_OVER_4PI);
    let mut lb = DMat::zeros(n, n);
    // Chunked over outer triangles: parallel integration, serial scatter.
    let chunk = 128usize;
    let mut contributions: Vec<Vec<(usize, usize, T)>> = Vec::new();
    for a0 in (0..nt).step_by(chunk) {
        let hi = (a0 + chunk).min(nt);
        (a0..hi)
            .into_par_iter()
            .map(|a| {
                let mut local = Vec::with_capacity((nt - a) * 18);
                let refs_a = edges.triangle_edges(a);
                let area_a = mesh.triangle_area(a);
                for b in a..nt {
                    let m = pair_moments(mesh, a, b, opts);
                    let refs_b = edges.triangle_edges(b);
                    let area_b = mesh.triangle_area(b);
                    let denom = cast::<T>(4.0) * area_a * area_b;
                    for ri in refs_a {
                        let p = mesh.vertices()[edges.free_vertex(ri.edge, a)];
                        let si = edges.sign_of(ri.edge, a);
                        for rj in refs_b {
                            let q = mesh.vertices()[edges.free_vertex(rj.edge, b)];
                            let sj = edges.sign_of(rj.edge, b);
                            let c = kappa * si * sj / denom * m.block(p, q);
                            local.push((ri.edge, rj.edge, c));
                            if a != b {
                                // the swapped-role double integral has the
                                // same value; mirroring keeps Lb symmetric
                                // to the bit
                                local.push((rj.edge, ri.edge, c));
                            }
                        }
                    }
                }
                local
            })
            .collect_into_vec(&mut contributions);
        for local in &contributions {
            for &(i, j, c) in local {
                lb.add_to(i, j, c);
            }
        }
    }
    Ok(lb)
}

/// Storage backend of the inductive part.
pub enum LbBackend<T: Scalar> {
    Dense(DMat<T>),
    Pfft(crate::pfft::PrecorrectedOperator<T>),
}

impl<T: Scalar> LbBackend<T> {
    /// `y = Lb · x` (values in H, no `jω`).
    pub fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        match self {
            LbBackend::Dense(m) => {
                let n = m.n_rows();
                debug_assert_eq!(x.len(), n);
                y.par_iter_mut().enumerate().for_each(|(r, out)| {
                    let row = m.row(r);
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (v, xi) in row.iter().zip(x.iter()) {
                        acc += xi * *v;
                    }
                    *out = acc;
                });
            }
            LbBackend::Pfft(op) => op.apply(x, y),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LbBackend::Dense(m) => m.n_rows(),
            LbBackend::Pfft(op) => op.dim(),
        }
    }

    pub fn memory_bytes(&self) -> usize {
        match self {
            LbBackend::Dense(m) => m.memory_bytes(),
            LbBackend::Pfft(op) => op.memory_bytes(),
        }
    }
}

/// Frequency-independent assembled operators: overlap Gramian, inductive
/// backend and the exact inductive diagonal (needed by the preconditioner in
/// either backend).
pub struct BranchAssembly<T: Scalar> {
    overlap: Csr<T>,
    lb: LbBackend<T>,
    lb_diag: Vec<T>,
    n_edges: usize,
}

impl<T: Scalar> BranchAssembly<T> {
    /// Assemble with a dense inductive matrix.
    pub fn dense(
        mesh: &SurfaceMesh<T>,
        edges: &EdgeSet<T>,
        opts: &AssemblyOptions<T>,
    ) -> Result<Self> {
        let overlap = assemble_overlap(mesh, edges);
        let lb = assemble_lb_dense(mesh, edges, opts)?;
        let lb_diag = (0..edges.len()).map(|i| lb.get(i, i)).collect();
        Ok(BranchAssembly {
            overlap,
            lb: LbBackend::Dense(lb),
            lb_diag,
            n_edges: edges.len(),
        })
    }

    /// Assemble with the precorrected-FFT inductive operator.
    pub fn pfft(
        mesh: &SurfaceMesh<T>,
        edges: &EdgeSet<T>,
        opts: &AssemblyOptions<T>,
        pfft_opts: &crate::pfft::PfftOptions<T>,
    ) -> Result<Self> {
        let overlap = assemble_overlap(mesh, edges);
        let op = crate::pfft::PrecorrectedOperator::build(mesh, edges, opts, pfft_opts)?;
        let lb_diag = op.exact_diagonal().to_vec();
        Ok(BranchAssembly {
            overlap,
            lb: LbBackend::Pfft(op),
            lb_diag,
            n_edges: edges.len(),
        })
    }

    pub fn from_parts(overlap: Csr<T>, lb: LbBackend<T>, lb_diag: Vec<T>) -> Self {
        let n_edges = lb.dim();
        BranchAssembly {
            overlap,
            lb,
            lb_diag,
            n_edges,
        }
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn overlap(&self) -> &Csr<T> {
        &self.overlap
    }

    pub fn lb(&self) -> &LbBackend<T> {
        &self.lb
    }

    pub fn lb_diag(&self) -> &[T] {
        &self.lb_diag
    }

    pub fn memory_bytes(&self) -> usize {
        self.overlap.memory_bytes() + self.lb.memory_bytes() + self.lb_diag.len() * 8
    }

    /// Materialize the per-frequency branch operator `Zb = Rb + jω Lb`.
    pub fn at_frequency(
        &self,
        material: &Material<T>,
        omega: T,
    ) -> Result<BranchOperator<'_, T>> {
        let zs = material.surface_impedance(omega)?;
        let rb = self.overlap.map(|v| zs * v);
        Ok(BranchOperator {
            assembly: self,
            rb,
            omega,
            zs,
        })
    }
}

/// Branch impedance operator at one frequency.
pub struct BranchOperator<'a, T: Scalar> {
    assembly: &'a BranchAssembly<T>,
    rb: Csr<Complex<T>>,
    omega: T,
    zs: Complex<T>,
}

impl<'a, T: Scalar> BranchOperator<'a, T> {
    #[inline]
    pub fn n_edges(&self) -> usize {
        self.assembly.n_edges
    }

    #[inline]
    pub fn omega(&self) -> T {
        self.omega
    }

    #[inline]
    pub fn surface_impedance(&self) -> Complex<T> {
        self.zs
    }

    /// Sparse resistive part `Rb = Zs · ∫ fᵢ·fⱼ`.
    pub fn rb(&self) -> &Csr<Complex<T>> {
        &self.rb
    }

    pub fn assembly(&self) -> &'a BranchAssembly<T> {
        self.assembly
    }

    /// `y = Zb x = Rb x + jω (Lb x)` on edge-space vectors.
    pub fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        debug_assert_eq!(x.len(), self.assembly.n_edges);
        let mut lx = vec![Complex::new(T::zero(), T::zero()); x.len()];
        self.assembly.lb.apply(x, &mut lx);
        self.rb.mul_vec_into(x, y);
        let jw = Complex::new(T::zero(), self.omega);
        for (yi, li) in y.iter_mut().zip(lx.iter()) {
            *yi += *li * jw;
        }
    }

    /// Diagonal of `Zb`, the seed of the loop preconditioner.
    pub fn diagonal(&self) -> Vec<Complex<T>> {
        let jw = Complex::new(T::zero(), self.omega);
        (0..self.assembly.n_edges)
            .map(|i| self.rb.get(i, i) + jw * self.assembly.lb_diag[i])
            .collect()
    }

    /// Materialize the full `Zb = Rb + jω Lb` on the edge space. Only
    /// possible on the dense backend; direct-solve reference paths use this.
    pub fn dense_matrix(&self) -> Option<crate::linalg::CMat<T>> {
        let lb = match &self.assembly.lb {
            LbBackend::Dense(m) => m,
            LbBackend::Pfft(_) => return None,
        };
        let n = self.assembly.n_edges;
        let jw = Complex::new(T::zero(), self.omega);
        let mut zb = crate::linalg::CMat::zeros(n, n);
        for i in 0..n {
            let row = zb.row_mut(i);
            for (slot, v) in row.iter_mut().zip(lb.row(i)) {
                *slot = jw * *v;
            }
        }
        for (i, j, v) in self.rb.iter() {
            zb.add_to(i, j, v);
        }
        Some(zb)
    }
}
