//! Closed triangulated test geometries plus STL/MSH writers.
//!
//! Everything here produces consistently outward-oriented, watertight
//! triangulations in meters. Used by the parex test suites and benchmarks;
//! not part of the extraction library itself.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

/// Indexed triangle mesh in f64 meters.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn translated(mut self, d: [f64; 3]) -> Self {
        for v in &mut self.vertices {
            v[0] += d[0];
            v[1] += d[1];
            v[2] += d[2];
        }
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for v in &mut self.vertices {
            v[0] *= s;
            v[1] *= s;
            v[2] *= s;
        }
        self
    }

    /// Append another mesh (disjoint union).
    pub fn merge(mut self, other: &TriMesh) -> Self {
        let off = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(
            other
                .triangles
                .iter()
                .map(|t| [t[0] + off, t[1] + off, t[2] + off]),
        );
        self
    }

    /// Signed volume via the divergence theorem; positive for outward
    /// orientation.
    pub fn signed_volume(&self) -> f64 {
        let mut six_v = 0.0;
        for t in &self.triangles {
            let a = self.vertices[t[0]];
            let b = self.vertices[t[1]];
            let c = self.vertices[t[2]];
            six_v += a[0] * (b[1] * c[2] - b[2] * c[1])
                - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]);
        }
        six_v / 6.0
    }

    pub fn centroid_of(&self, t: usize) -> [f64; 3] {
        let [i, j, k] = self.triangles[t];
        let (a, b, c) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        [
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
            (a[2] + b[2] + c[2]) / 3.0,
        ]
    }

    /// Triangle indices whose centroid falls inside the axis-aligned box.
    pub fn triangles_in_box(&self, min: [f64; 3], max: [f64; 3]) -> Vec<usize> {
        (0..self.triangles.len())
            .filter(|&t| {
                let c = self.centroid_of(t);
                (0..3).all(|k| c[k] >= min[k] && c[k] <= max[k])
            })
            .collect()
    }

    /// One uniform midpoint refinement step (each triangle into four).
    pub fn refined(&self) -> TriMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for t in &self.triangles {
            let [a, b, c] = *t;
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([b, bc, ab]);
            triangles.push([c, ca, bc]);
            triangles.push([ab, bc, ca]);
        }
        TriMesh {
            vertices,
            triangles,
        }
    }
}

/// Regular tetrahedron with the given edge-sphere radius, centered at origin.
pub fn tetrahedron(radius: f64) -> TriMesh {
    let s = radius / 3.0_f64.sqrt();
    let vertices = vec![
        [s, s, s],
        [s, -s, -s],
        [-s, s, -s],
        [-s, -s, s],
    ];
    let triangles = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    let m = TriMesh {
        vertices,
        triangles,
    };
    debug_assert!(m.signed_volume() > 0.0);
    m
}

/// Icosahedron with unit circumradius scaled by `radius`.
pub fn icosahedron(radius: f64) -> TriMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let norm = (1.0 + phi * phi).sqrt();
    let vertices = raw
        .iter()
        .map(|v| {
            [
                v[0] / norm * radius,
                v[1] / norm * radius,
                v[2] / norm * radius,
            ]
        })
        .collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let m = TriMesh {
        vertices,
        triangles,
    };
    debug_assert!(m.signed_volume() > 0.0);
    m
}

/// Icosphere: icosahedron subdivided `subdiv` times, vertices projected to the
/// sphere of the given radius.
pub fn icosphere(radius: f64, subdiv: usize) -> TriMesh {
    let mut m = icosahedron(radius);
    for _ in 0..subdiv {
        m = m.refined();
        for v in &mut m.vertices {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let s = radius / r;
            v[0] *= s;
            v[1] *= s;
            v[2] *= s;
        }
    }
    m
}

fn xorshift(mut x: u64) -> u64 {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    x
}

/// Icosphere with deterministic radial noise; stays closed and manifold for
/// `amplitude` well below 1.
pub fn noisy_sphere(radius: f64, subdiv: usize, amplitude: f64, seed: u64) -> TriMesh {
    let mut m = icosphere(radius, subdiv);
    for (i, v) in m.vertices.iter_mut().enumerate() {
        let h = xorshift(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5bf0_3635);
        let u = (h >> 11) as f64 / (1u64 << 53) as f64; // [0, 1)
        let s = 1.0 + amplitude * (2.0 * u - 1.0);
        v[0] *= s;
        v[1] *= s;
        v[2] *= s;
    }
    m
}

/// Axis-aligned closed box `[0,lx]×[0,ly]×[0,lz]` with per-axis face grids.
pub fn box_grid(lengths: [f64; 3], divisions: [usize; 3]) -> TriMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut cache: HashMap<(u64, u64, u64), usize> = HashMap::new();
    let coord = |axis: usize, i: usize| -> f64 {
        lengths[axis] * (i as f64 / divisions[axis] as f64)
    };
    let mut vertex = |p: [f64; 3], vertices: &mut Vec<[f64; 3]>| -> usize {
        let key = (p[0].to_bits(), p[1].to_bits(), p[2].to_bits());
        *cache.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    // Each face: fixed axis at 0 or max, parametrized over (u_axis, v_axis)
    // ordered so that u × v points outward.
    let faces: [(usize, usize, usize, bool); 6] = [
        (0, 1, 2, true),  // x = lx, (y, z)
        (0, 2, 1, false), // x = 0,  (z, y)
        (1, 2, 0, true),  // y = ly, (z, x)
        (1, 0, 2, false), // y = 0,  (x, z)
        (2, 0, 1, true),  // z = lz, (x, y)
        (2, 1, 0, false), // z = 0,  (y, x)
    ];
    for &(fixed, ua, va, at_max) in &faces {
        let fixed_val = if at_max { lengths[fixed] } else { 0.0 };
        let (nu, nv) = (divisions[ua], divisions[va]);
        for iu in 0..nu {
            for iv in 0..nv {
                let mut corner = |du: usize, dv: usize, vertices: &mut Vec<[f64; 3]>| {
                    let mut p = [0.0; 3];
                    p[fixed] = fixed_val;
                    p[ua] = coord(ua, iu + du);
                    p[va] = coord(va, iv + dv);
                    vertex(p, vertices)
                };
                let p00 = corner(0, 0, &mut vertices);
                let p10 = corner(1, 0, &mut vertices);
                let p11 = corner(1, 1, &mut vertices);
                let p01 = corner(0, 1, &mut vertices);
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
            }
        }
    }
    let m = TriMesh {
        vertices,
        triangles,
    };
    debug_assert!(m.signed_volume() > 0.0);
    m
}

/// Triangular prism: equilateral cross-section of side `side` extruded by
/// `height` along z. Exactly 8 triangles and 12 interior edges.
pub fn prism(side: f64, height: f64) -> TriMesh {
    let h = side * 3.0_f64.sqrt() / 2.0;
    let base = [[0.0, 0.0], [side, 0.0], [side / 2.0, h]];
    let mut vertices = Vec::new();
    for z in [0.0, height] {
        for p in base {
            vertices.push([p[0], p[1], z]);
        }
    }
    // bottom (0,1,2) at z=0 faces -z; top (3,4,5) faces +z
    let mut triangles = vec![[0, 2, 1], [3, 4, 5]];
    for e in 0..3 {
        let (a, b) = (e, (e + 1) % 3);
        let (a1, b1) = (a + 3, b + 3);
        triangles.push([a, b, b1]);
        triangles.push([a, b1, a1]);
    }
    let m = TriMesh {
        vertices,
        triangles,
    };
    debug_assert!(m.signed_volume() > 0.0);
    m
}

/// Full torus (genus 1): major radius `r_major` in the xy-plane, tube radius
/// `r_minor`, `nu × nv` quads.
pub fn torus(r_major: f64, r_minor: f64, nu: usize, nv: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let th = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let ph = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            vertices.push(tube_point(th, ph, r_major, r_minor));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        let i1 = (i + 1) % nu;
        for j in 0..nv {
            let j1 = (j + 1) % nv;
            let p00 = i * nv + j;
            let p10 = i1 * nv + j;
            let p11 = i1 * nv + j1;
            let p01 = i * nv + j1;
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    let m = TriMesh {
        vertices,
        triangles,
    };
    debug_assert!(m.signed_volume() > 0.0);
    m
}

fn tube_point(theta: f64, phi: f64, r_major: f64, r_minor: f64) -> [f64; 3] {
    let er = [theta.cos(), theta.sin(), 0.0];
    let r = r_major + r_minor * phi.cos();
    [r * er[0], r * er[1], r_minor * phi.sin()]
}

/// Nearly closed circular wire loop: a tube bent along a circular arc that
/// stops `gap_angle` radians short of closing, with flat end caps. Genus 0;
/// source/sink contacts go on the two caps.
pub fn wire_loop(
    r_major: f64,
    r_minor: f64,
    gap_angle: f64,
    nu: usize,
    nv: usize,
) -> TriMesh {
    let th0 = gap_angle / 2.0;
    let th1 = 2.0 * std::f64::consts::PI - gap_angle / 2.0;
    let mut vertices = Vec::new();
    for i in 0..=nu {
        let th = th0 + (th1 - th0) * i as f64 / nu as f64;
        for j in 0..nv {
            let ph = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            vertices.push(tube_point(th, ph, r_major, r_minor));
        }
    }
    let c0 = vertices.len();
    vertices.push([r_major * th0.cos(), r_major * th0.sin(), 0.0]);
    let c1 = vertices.len();
    vertices.push([r_major * th1.cos(), r_major * th1.sin(), 0.0]);
    let mut triangles = Vec::new();
    for i in 0..nu {
        for j in 0..nv {
            let j1 = (j + 1) % nv;
            let p00 = i * nv + j;
            let p10 = (i + 1) * nv + j;
            let p11 = (i + 1) * nv + j1;
            let p01 = i * nv + j1;
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    for j in 0..nv {
        let j1 = (j + 1) % nv;
        // start cap faces -tangent(th0), end cap faces +tangent(th1)
        triangles.push([c0, j, j1]);
        triangles.push([c1, nu * nv + j1, nu * nv + j]);
    }
    let m = TriMesh {
        vertices,
        triangles,
    };
    debug_assert!(m.signed_volume() > 0.0);
    m
}

/// Write ASCII STL.
pub fn write_stl_ascii(path: &Path, mesh: &TriMesh, name: &str) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "solid {name}")?;
    for t in &mesh.triangles {
        let (a, b, c) = (
            mesh.vertices[t[0]],
            mesh.vertices[t[1]],
            mesh.vertices[t[2]],
        );
        let n = facet_normal(a, b, c);
        writeln!(f, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2])?;
        writeln!(f, "    outer loop")?;
        for v in [a, b, c] {
            writeln!(f, "      vertex {:e} {:e} {:e}", v[0], v[1], v[2])?;
        }
        writeln!(f, "    endloop")?;
        writeln!(f, "  endfacet")?;
    }
    writeln!(f, "endsolid {name}")?;
    Ok(())
}

/// Write binary STL (80-byte header, 50-byte facet records).
pub fn write_stl_binary(path: &Path, mesh: &TriMesh) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = [0u8; 80];
    header[..12].copy_from_slice(b"parex-tstmsh");
    f.write_all(&header)?;
    f.write_all(&(mesh.triangles.len() as u32).to_le_bytes())?;
    for t in &mesh.triangles {
        let (a, b, c) = (
            mesh.vertices[t[0]],
            mesh.vertices[t[1]],
            mesh.vertices[t[2]],
        );
        let n = facet_normal(a, b, c);
        for v in [n, a, b, c] {
            for x in v {
                f.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        f.write_all(&0u16.to_le_bytes())?;
    }
    Ok(())
}

/// Write Gmsh MSH 2.2 ASCII (nodes + 3-node triangle elements).
pub fn write_msh22(path: &Path, mesh: &TriMesh) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "$MeshFormat")?;
    writeln!(f, "2.2 0 8")?;
    writeln!(f, "$EndMeshFormat")?;
    writeln!(f, "$Nodes")?;
    writeln!(f, "{}", mesh.vertices.len())?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        writeln!(f, "{} {:e} {:e} {:e}", i + 1, v[0], v[1], v[2])?;
    }
    writeln!(f, "$EndNodes")?;
    writeln!(f, "$Elements")?;
    writeln!(f, "{}", mesh.triangles.len())?;
    for (i, t) in mesh.triangles.iter().enumerate() {
        writeln!(
            f,
            "{} 2 2 0 1 {} {} {}",
            i + 1,
            t[0] + 1,
            t[1] + 1,
            t[2] + 1
        )?;
    }
    writeln!(f, "$EndElements")?;
    Ok(())
}

fn facet_normal(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len == 0.0 {
        [0.0, 0.0, 0.0]
    } else {
        [n[0] / len, n[1] / len, n[2] / len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_outward_closed() {
        for m in [
            tetrahedron(1.0),
            icosahedron(1.0),
            icosphere(1.0, 2),
            noisy_sphere(1.0, 2, 0.2, 7),
            box_grid([1.0, 2.0, 3.0], [2, 3, 4]),
            prism(1.0, 2.0),
            torus(2.0, 0.5, 16, 8),
            wire_loop(1.0, 0.1, 0.1, 24, 8),
        ] {
            assert!(m.signed_volume() > 0.0);
            // closed manifold: every undirected edge appears exactly twice,
            // once per direction
            let mut counts: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
            for t in &m.triangles {
                for e in 0..3 {
                    let (a, b) = (t[e], t[(e + 1) % 3]);
                    let entry = counts.entry((a.min(b), a.max(b))).or_insert((0, 0));
                    if a < b {
                        entry.0 += 1;
                    } else {
                        entry.1 += 1;
                    }
                }
            }
            for (_, (fwd, rev)) in counts {
                assert_eq!((fwd, rev), (1, 1));
            }
        }
    }

    #[test]
    fn prism_has_eight_triangles() {
        let m = prism(1.0, 2.0);
        assert_eq!(m.triangles.len(), 8);
        assert_eq!(m.vertices.len(), 6);
    }

    #[test]
    fn bar_428() {
        let m = box_grid([5e-6, 7.5e-6, 200e-6], [1, 1, 53]);
        assert_eq!(m.triangles.len(), 428);
    }
}
