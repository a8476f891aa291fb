//! Shared helpers for the integration suites: geometry conversion, seeded
//! random vectors and small numeric utilities.
#![allow(dead_code)]

use num_complex::Complex;
use parex::geom::Vec3;
use parex::mesh::{build_edges, EdgeSet, SurfaceMesh};
use parex_testmesh::TriMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

/// Convert a generated test geometry into a validated surface mesh.
pub fn surface(m: &TriMesh) -> SurfaceMesh<f64> {
    let vertices = m.vertices.iter().map(|&p| Vec3::from_f64(p)).collect();
    SurfaceMesh::build(vertices, m.triangles.clone(), 1e-12).expect("test geometry is closed")
}

pub fn mesh_and_edges(m: &TriMesh) -> (SurfaceMesh<f64>, EdgeSet<f64>) {
    let mesh = surface(m);
    let edges = build_edges(&mesh);
    (mesh, edges)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_vec(n: usize, seed: u64) -> Vec<C64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| Complex::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect()
}

pub fn random_real_vec(n: usize, seed: u64) -> Vec<C64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| Complex::new(r.gen_range(-1.0..1.0), 0.0))
        .collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

pub fn rel_err_c(got: C64, want: C64) -> f64 {
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}

/// Relative 2-norm deviation between complex vectors.
pub fn rel_vec(got: &[C64], want: &[C64]) -> f64 {
    let num: f64 = got
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = want.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Max relative entry deviation between two dense complex matrices, scaled
/// by the largest magnitude of the reference.
pub fn mat_rel_dev(got: &parex::linalg::CMat<f64>, want: &parex::linalg::CMat<f64>) -> f64 {
    let mut scale = 0.0f64;
    for j in 0..want.n_cols() {
        for i in 0..want.n_rows() {
            scale = scale.max(want.get(i, j).norm());
        }
    }
    let mut dev = 0.0f64;
    for j in 0..want.n_cols() {
        for i in 0..want.n_rows() {
            dev = dev.max((got.get(i, j) - want.get(i, j)).norm() / scale);
        }
    }
    dev
}
