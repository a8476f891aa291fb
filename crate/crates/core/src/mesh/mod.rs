//! Surface mesh ingestion and topology.
//!
//! A conductor surface is a closed, consistently oriented 2-manifold
//! triangulation. Construction welds coincident vertices, rejects degenerate
//! triangles, checks that every edge is shared by exactly two triangles with
//! opposite traversal, and labels connected components (separate conductors).

mod msh;
mod stl;

use crate::geom::{self, Vec3};
use crate::{cast, Error, Result, Scalar};
use std::collections::HashMap;
use std::path::Path;

/// Default absolute vertex weld tolerance in meters. Geometries are µm-scale,
/// so this merges only true duplicates.
pub const DEFAULT_WELD_TOL: f64 = 1e-12;

/// Mesh file formats accepted by [`load_mesh`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    MshAscii,
    StlAscii,
    StlBinary,
}

impl std::str::FromStr for MeshFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "msh-ascii" => Ok(MeshFormat::MshAscii),
            "stl-ascii" => Ok(MeshFormat::StlAscii),
            "stl-binary" => Ok(MeshFormat::StlBinary),
            other => Err(format!(
                "unknown mesh format `{other}` (expected msh-ascii, stl-ascii or stl-binary)"
            )),
        }
    }
}

/// Validated closed conductor surface.
#[derive(Clone, Debug)]
pub struct SurfaceMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<T>,
    conductor: Vec<usize>,
    n_conductors: usize,
}

impl<T: Scalar> SurfaceMesh<T> {
    /// Build from a vertex/triangle list: weld, validate manifoldness and
    /// orientation, label conductors.
    pub fn build(
        vertices: Vec<Vec3<T>>,
        triangles: Vec<[usize; 3]>,
        weld_tol: T,
    ) -> Result<Self> {
        let (welded, remap) = weld(&vertices, weld_tol);
        let mut tris = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let v = [remap[tri[0]], remap[tri[1]], remap[tri[2]]];
            if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    message: "repeated vertex after welding".into(),
                });
            }
            tris.push(v);
        }
        let mut areas = Vec::with_capacity(tris.len());
        for (t, tri) in tris.iter().enumerate() {
            let [a, b, c] = [welded[tri[0]], welded[tri[1]], welded[tri[2]]];
            let area = geom::triangle_area(a, b, c);
            let lmax = (a.dist(b)).max(b.dist(c)).max(a.dist(c));
            if area <= lmax * lmax * cast::<T>(1e-14) {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    message: "zero area".into(),
                });
            }
            areas.push(area);
        }

        // Edge incidence: every (unordered) vertex pair must appear in exactly
        // two triangles, traversed in opposite directions.
        let incidence = edge_incidence(&tris)?;
        let (conductor, n_conductors) = label_components(tris.len(), &incidence);

        Ok(SurfaceMesh {
            vertices: welded,
            triangles: tris,
            areas,
            conductor,
            n_conductors,
        })
    }

    /// Build from a triangle soup (e.g. STL facets).
    pub fn from_soup(soup: Vec<[Vec3<T>; 3]>, weld_tol: T) -> Result<Self> {
        let mut vertices = Vec::with_capacity(soup.len() * 3);
        let mut triangles = Vec::with_capacity(soup.len());
        for tri in soup {
            let base = vertices.len();
            vertices.extend_from_slice(&tri);
            triangles.push([base, base + 1, base + 2]);
        }
        Self::build(vertices, triangles, weld_tol)
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    #[inline]
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn triangle_area(&self, t: usize) -> T {
        self.areas[t]
    }

    #[inline]
    pub fn triangle_vertices(&self, t: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_centroid(&self, t: usize) -> Vec3<T> {
        let [a, b, c] = self.triangle_vertices(t);
        geom::centroid(a, b, c)
    }

    /// Unit outward normal (right-hand rule on the stored vertex order).
    pub fn triangle_normal(&self, t: usize) -> Vec3<T> {
        let [a, b, c] = self.triangle_vertices(t);
        geom::area_vector(a, b, c).normalized()
    }

    pub fn triangle_circumradius(&self, t: usize) -> T {
        let [a, b, c] = self.triangle_vertices(t);
        geom::circumradius(a, b, c)
    }

    /// Conductor (connected component) id of a triangle.
    #[inline]
    pub fn conductor(&self, t: usize) -> usize {
        self.conductor[t]
    }

    /// Number of fully separated conductors.
    #[inline]
    pub fn connected_components(&self) -> usize {
        self.n_conductors
    }

    /// Euler characteristic `V − E + F` of one conductor. `2 − 2g` for a
    /// closed orientable surface of genus `g`.
    pub fn euler_characteristic(&self, conductor: usize) -> isize {
        let mut verts = std::collections::HashSet::new();
        let mut faces = 0isize;
        let mut half_edges = 0isize;
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.conductor[t] == conductor {
                faces += 1;
                half_edges += 3;
                verts.extend(tri.iter().copied());
            }
        }
        verts.len() as isize - half_edges / 2 + faces
    }

    pub fn bounding_box(&self) -> (Vec3<T>, Vec3<T>) {
        let mut lo = Vec3::new(T::infinity(), T::infinity(), T::infinity());
        let mut hi = Vec3::new(
            T::neg_infinity(),
            T::neg_infinity(),
            T::neg_infinity(),
        );
        for v in &self.vertices {
            lo = Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
            hi = Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
        }
        (lo, hi)
    }
}

/// One interior edge: current crosses from `tri_plus` into `tri_minus`.
#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub vertex_a: usize,
    pub vertex_b: usize,
    pub tri_plus: usize,
    pub tri_minus: usize,
    /// Vertex of `tri_plus` opposite the edge (free vertex of the plus side).
    pub opposite_plus: usize,
    /// Vertex of `tri_minus` opposite the edge.
    pub opposite_minus: usize,
}

/// Reference from a triangle to one of its edges; `positive` when the
/// triangle is the plus side.
#[derive(Clone, Copy, Debug)]
pub struct EdgeRef {
    pub edge: usize,
    pub positive: bool,
}

/// All interior edges of a mesh plus the triangle→edge map.
#[derive(Clone, Debug)]
pub struct EdgeSet<T> {
    edges: Vec<Edge>,
    tri_edges: Vec<[EdgeRef; 3]>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> EdgeSet<T> {
    #[inline]
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    #[inline]
    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The three edges of a triangle with plus/minus flags.
    #[inline]
    pub fn triangle_edges(&self, t: usize) -> &[EdgeRef; 3] {
        &self.tri_edges[t]
    }

    /// Sign of triangle `t` for edge `e`: +1 when `t` is the plus triangle.
    pub fn sign_of(&self, e: usize, t: usize) -> T {
        let edge = &self.edges[e];
        if edge.tri_plus == t {
            T::one()
        } else {
            debug_assert_eq!(edge.tri_minus, t);
            -T::one()
        }
    }

    /// Free vertex of the basis on triangle `t` of edge `e`.
    pub fn free_vertex(&self, e: usize, t: usize) -> usize {
        let edge = &self.edges[e];
        if edge.tri_plus == t {
            edge.opposite_plus
        } else {
            edge.opposite_minus
        }
    }

    /// Midpoint of the shared edge.
    pub fn edge_midpoint(&self, mesh: &SurfaceMesh<T>, e: usize) -> Vec3<T> {
        let edge = &self.edges[e];
        (mesh.vertices[edge.vertex_a] + mesh.vertices[edge.vertex_b]) * cast::<T>(0.5)
    }

    /// Diameter of the two-triangle support (max pairwise vertex distance).
    pub fn support_diameter(&self, mesh: &SurfaceMesh<T>, e: usize) -> T {
        let edge = &self.edges[e];
        let pts = [
            mesh.vertices[edge.vertex_a],
            mesh.vertices[edge.vertex_b],
            mesh.vertices[edge.opposite_plus],
            mesh.vertices[edge.opposite_minus],
        ];
        let mut d = T::zero();
        for i in 0..4 {
            for j in i + 1..4 {
                d = d.max(pts[i].dist(pts[j]));
            }
        }
        d
    }

    /// Area-weighted centroid of the support.
    pub fn support_centroid(&self, mesh: &SurfaceMesh<T>, e: usize) -> Vec3<T> {
        let edge = &self.edges[e];
        let (ap, am) = (
            mesh.triangle_area(edge.tri_plus),
            mesh.triangle_area(edge.tri_minus),
        );
        (mesh.triangle_centroid(edge.tri_plus) * ap
            + mesh.triangle_centroid(edge.tri_minus) * am)
            / (ap + am)
    }
}

/// Build the interior edge set. Edges are ordered by first encounter while
/// scanning triangles in index order; the lower-index triangle is the plus
/// side, so the assignment is deterministic for identical input.
pub fn build_edges<T: Scalar>(mesh: &SurfaceMesh<T>) -> EdgeSet<T> {
    let tris = mesh.triangles();
    let mut map: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::with_capacity(tris.len() * 3 / 2);
    let mut tri_edges: Vec<[EdgeRef; 3]> = vec![
        [EdgeRef {
            edge: usize::MAX,
            positive: false,
        }; 3];
        tris.len()
    ];
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let opposite = tri[(k + 2) % 3];
            let key = (a.min(b), a.max(b));
            match map.get(&key) {
                None => {
                    let e = edges.len();
                    map.insert(key, e);
                    edges.push(Edge {
                        vertex_a: a,
                        vertex_b: b,
                        tri_plus: t,
                        tri_minus: usize::MAX,
                        opposite_plus: opposite,
                        opposite_minus: usize::MAX,
                    });
                    tri_edges[t][k] = EdgeRef {
                        edge: e,
                        positive: true,
                    };
                }
                Some(&e) => {
                    let edge = &mut edges[e];
                    debug_assert_eq!(edge.tri_minus, usize::MAX, "mesh validated manifold");
                    edge.tri_minus = t;
                    edge.opposite_minus = opposite;
                    tri_edges[t][k] = EdgeRef {
                        edge: e,
                        positive: false,
                    };
                }
            }
        }
    }
    debug_assert!(edges.iter().all(|e| e.tri_minus != usize::MAX));
    EdgeSet {
        edges,
        tri_edges,
        _marker: std::marker::PhantomData,
    }
}

/// Load and validate a mesh file.
pub fn load_mesh<T: Scalar>(path: &Path, format: MeshFormat) -> Result<SurfaceMesh<T>> {
    load_mesh_with(path, format, cast(DEFAULT_WELD_TOL))
}

/// [`load_mesh`] with an explicit weld tolerance.
pub fn load_mesh_with<T: Scalar>(
    path: &Path,
    format: MeshFormat,
    weld_tol: T,
) -> Result<SurfaceMesh<T>> {
    match format {
        MeshFormat::MshAscii => {
            let text = std::fs::read_to_string(path)?;
            let (vertices, triangles) = msh::parse_msh_ascii(&text, path)?;
            SurfaceMesh::build(vertices, triangles, weld_tol)
        }
        MeshFormat::StlAscii => {
            let text = std::fs::read_to_string(path)?;
            let soup = stl::parse_stl_ascii(&text, path)?;
            SurfaceMesh::from_soup(soup, weld_tol)
        }
        MeshFormat::StlBinary => {
            let bytes = std::fs::read(path)?;
            let soup = stl::parse_stl_binary(&bytes, path)?;
            SurfaceMesh::from_soup(soup, weld_tol)
        }
    }
}

/// Weld vertices within an absolute tolerance. First occurrence wins; the
/// result order follows first occurrences, so welding is deterministic.
fn weld<T: Scalar>(vertices: &[Vec3<T>], tol: T) -> (Vec<Vec3<T>>, Vec<usize>) {
    let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut out: Vec<Vec3<T>> = Vec::new();
    let mut remap = Vec::with_capacity(vertices.len());
    let inv = T::one() / tol;
    let cell_of = |v: Vec3<T>| -> (i64, i64, i64) {
        (
            (v.x * inv).floor().to_i64().unwrap_or(0),
            (v.y * inv).floor().to_i64().unwrap_or(0),
            (v.z * inv).floor().to_i64().unwrap_or(0),
        )
    };
    let tol_sq = tol * tol;
    for &v in vertices {
        let (cx, cy, cz) = cell_of(v);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &idx in list {
                            if (out[idx] - v).norm_sq() <= tol_sq {
                                found = Some(idx);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        let idx = match found {
            Some(idx) => idx,
            None => {
                out.push(v);
                cells.entry((cx, cy, cz)).or_default().push(out.len() - 1);
                out.len() - 1
            }
        };
        remap.push(idx);
    }
    (out, remap)
}

/// Per-edge incidence `(tri, forward)` where `forward` is true when the
/// triangle traverses the edge from the lower to the higher vertex index.
fn edge_incidence(
    triangles: &[[usize; 3]],
) -> Result<HashMap<(usize, usize), Vec<(usize, bool)>>> {
    let mut map: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            map.entry((a.min(b), a.max(b)))
                .or_default()
                .push((t, a < b));
        }
    }
    for (&(a, b), inc) in &map {
        if inc.len() != 2 {
            return Err(Error::OpenSurface {
                a,
                b,
                count: inc.len(),
            });
        }
        if inc[0].1 == inc[1].1 {
            return Err(Error::InconsistentOrientation { a, b });
        }
    }
    Ok(map)
}

fn label_components(
    n_triangles: usize,
    incidence: &HashMap<(usize, usize), Vec<(usize, bool)>>,
) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..n_triangles).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for inc in incidence.values() {
        let (a, b) = (inc[0].0, inc[1].0);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label = vec![usize::MAX; n_triangles];
    let mut next = 0usize;
    for t in 0..n_triangles {
        let r = find(&mut parent, t);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        label[t] = label[r];
    }
    (label, next)
}
