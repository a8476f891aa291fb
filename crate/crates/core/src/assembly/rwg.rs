//! Modified RWG edge basis: the classic Rao-Wilton-Glisson function without
//! the edge-length factor, so a unit coefficient carries exactly 1 A across
//! its edge.
//!
//! On the plus triangle `f = (r − p⁺)/(2A⁺)`, on the minus triangle
//! `f = (p⁻ − r)/(2A⁻)` with `p±` the free (opposite) vertices; zero outside.

use crate::geom::Vec3;
use crate::mesh::{EdgeSet, SurfaceMesh};
use crate::{cast, Error, Result, Scalar};

/// Value of basis `e` restricted to triangle `t` (assumed to be in its
/// support) at point `r` in that triangle.
#[inline]
pub fn value_on_triangle<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    edges: &EdgeSet<T>,
    e: usize,
    t: usize,
    r: Vec3<T>,
) -> Vec3<T> {
    let free = mesh.vertices()[edges.free_vertex(e, t)];
    let scale = edges.sign_of(e, t) / (cast::<T>(2.0) * mesh.triangle_area(t));
    (r - free) * scale
}

/// Surface divergence of basis `e` on triangle `t`: `+1/A⁺` or `−1/A⁻`.
#[inline]
pub fn divergence_on<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    edges: &EdgeSet<T>,
    e: usize,
    t: usize,
) -> T {
    edges.sign_of(e, t) / mesh.triangle_area(t)
}

/// Evaluate basis `e` at a point that must lie in its support.
pub fn evaluate<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    edges: &EdgeSet<T>,
    e: usize,
    r: Vec3<T>,
) -> Result<Vec3<T>> {
    let edge = edges.edge(e);
    for t in [edge.tri_plus, edge.tri_minus] {
        if point_in_triangle(mesh, t, r) {
            return Ok(value_on_triangle(mesh, edges, e, t, r));
        }
    }
    Err(Error::PointOutsideSupport { edge: e })
}

/// First moment `∫ f dA` over the support; closed form from the triangle
/// centroids: `(c⁺ − p⁺ + p⁻ − c⁻)/2`.
pub fn dipole_moment<T: Scalar>(
    mesh: &SurfaceMesh<T>,
    edges: &EdgeSet<T>,
    e: usize,
) -> Vec3<T> {
    let edge = edges.edge(e);
    let cp = mesh.triangle_centroid(edge.tri_plus);
    let cm = mesh.triangle_centroid(edge.tri_minus);
    let pp = mesh.vertices()[edge.opposite_plus];
    let pm = mesh.vertices()[edge.opposite_minus];
    (cp - pp + pm - cm) * cast::<T>(0.5)
}

fn point_in_triangle<T: Scalar>(mesh: &SurfaceMesh<T>, t: usize, r: Vec3<T>) -> bool {
    let [a, b, c] = mesh.triangle_vertices(t);
    let n = (b - a).cross(c - a);
    let nn = n.norm_sq();
    // out of plane?
    let d = (r - a).dot(n);
    if d * d > nn * nn.sqrt() * cast::<T>(1e-10) {
        return false;
    }
    let tol = -cast::<T>(1e-12);
    let u = (b - a).cross(r - a).dot(n) / nn;
    let v = (c - b).cross(r - b).dot(n) / nn;
    let w = (a - c).cross(r - c).dot(n) / nn;
    u >= tol && v >= tol && w >= tol
}
