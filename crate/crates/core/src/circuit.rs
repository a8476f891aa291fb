//! Circuit view of the discretized surface: each triangle is a node, each
//! interior edge a branch. Ports add two virtual terminal nodes joined to
//! their contact triangles by zero-impedance contact branches plus one
//! voltage-source branch between the terminals.
//!
//! A breadth-first spanning forest (contact branches preferred as twigs,
//! source branches never twigs) yields the fundamental loops: one loop per
//! link, row signs ±1. The loop transfer matrix `A` satisfies `D·Aᵀ = 0`
//! exactly in integer arithmetic, which is the discrete charge conservation
//! statement the magneto-quasi-static model requires.

use crate::mesh::{EdgeSet, SurfaceMesh};
use crate::{Error, Result, Scalar};
use num_complex::Complex;
use std::collections::VecDeque;

/// A port: disjoint sets of source and sink contact triangles.
#[derive(Clone, Debug)]
pub struct PortSpec {
    pub name: String,
    pub source_triangles: Vec<usize>,
    pub sink_triangles: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    /// Interior mesh edge; index equals the edge index.
    Interior,
    /// Zero-impedance connection between a terminal and a contact triangle.
    Contact,
    /// Voltage-source branch from sink terminal to source terminal.
    Source,
}

/// Directed branch from `tail` to `head`; positive current flows tail→head
/// and the branch voltage is `φ(tail) − φ(head)`.
#[derive(Clone, Copy, Debug)]
pub struct Branch {
    pub tail: usize,
    pub head: usize,
    pub kind: BranchKind,
}

#[derive(Clone, Copy, Debug)]
pub struct PortNodes {
    pub source_terminal: usize,
    pub sink_terminal: usize,
    pub source_branch: usize,
}

/// Node-branch graph with port attachments.
#[derive(Clone, Debug)]
pub struct CircuitGraph {
    n_nodes: usize,
    n_mesh_nodes: usize,
    n_edges: usize,
    branches: Vec<Branch>,
    ports: Vec<PortNodes>,
    port_names: Vec<String>,
    n_components: usize,
    /// Conductor/component id per node (terminals inherit their conductor).
    node_component: Vec<usize>,
}

impl CircuitGraph {
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    #[inline]
    pub fn n_mesh_nodes(&self) -> usize {
        self.n_mesh_nodes
    }

    /// Interior edge count (interior branch `i` is edge `i`).
    #[inline]
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    #[inline]
    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    /// Degree of separation: number of fully separated conductors.
    #[inline]
    pub fn n_components(&self) -> usize {
        self.n_components
    }

    #[inline]
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    #[inline]
    pub fn port(&self, k: usize) -> &PortNodes {
        &self.ports[k]
    }

    pub fn port_name(&self, k: usize) -> &str {
        &self.port_names[k]
    }

    pub fn node_component(&self, node: usize) -> usize {
        self.node_component[node]
    }

    /// Nodal current residual `D·I_b` (sum of currents leaving each node).
    pub fn incidence_apply<S>(&self, branch_flow: &[S]) -> Vec<S>
    where
        S: Copy + std::ops::AddAssign + std::ops::SubAssign + num_traits::Zero,
    {
        assert_eq!(branch_flow.len(), self.branches.len());
        let mut nodal = vec![S::zero(); self.n_nodes];
        for (b, br) in self.branches.iter().enumerate() {
            nodal[br.tail] += branch_flow[b];
            nodal[br.head] -= branch_flow[b];
        }
        nodal
    }

    /// Branch voltages `Dᵀ·φ` from node potentials.
    pub fn potential_drop<S>(&self, phi: &[S]) -> Vec<S>
    where
        S: Copy + std::ops::Sub<Output = S>,
    {
        assert_eq!(phi.len(), self.n_nodes);
        self.branches
            .iter()
            .map(|br| phi[br.tail] - phi[br.head])
            .collect()
    }

    /// Build the port-augmented graph from a validated mesh and edge set.
    pub fn build<T: Scalar>(
        mesh: &SurfaceMesh<T>,
        edges: &EdgeSet<T>,
        ports: &[PortSpec],
    ) -> Result<Self> {
        let nt = mesh.n_triangles();
        let mut used = vec![false; nt];
        for (k, port) in ports.iter().enumerate() {
            if port.source_triangles.is_empty() || port.sink_triangles.is_empty() {
                return Err(Error::EmptyPort { port: k });
            }
            let mut conductor: Option<usize> = None;
            for &t in port.source_triangles.iter().chain(&port.sink_triangles) {
                if t >= nt {
                    return Err(Error::PortTriangleOutOfRange {
                        port: k,
                        triangle: t,
                        count: nt,
                    });
                }
                if used[t] {
                    return Err(Error::OverlappingPorts { triangle: t });
                }
                used[t] = true;
                match conductor {
                    None => conductor = Some(mesh.conductor(t)),
                    Some(c) if c != mesh.conductor(t) => {
                        return Err(Error::PortSpansConductors {
                            port: k,
                            a: c,
                            b: mesh.conductor(t),
                        });
                    }
                    _ => {}
                }
            }
        }

        let n_nodes = nt + 2 * ports.len();
        let mut branches: Vec<Branch> = (0..edges.len())
            .map(|e| {
                let edge = edges.edge(e);
                Branch {
                    tail: edge.tri_plus,
                    head: edge.tri_minus,
                    kind: BranchKind::Interior,
                }
            })
            .collect();
        let mut port_nodes = Vec::with_capacity(ports.len());
        for (k, port) in ports.iter().enumerate() {
            let source_terminal = nt + 2 * k;
            let sink_terminal = nt + 2 * k + 1;
            for &t in &port.source_triangles {
                branches.push(Branch {
                    tail: source_terminal,
                    head: t,
                    kind: BranchKind::Contact,
                });
            }
            for &t in &port.sink_triangles {
                branches.push(Branch {
                    tail: sink_terminal,
                    head: t,
                    kind: BranchKind::Contact,
                });
            }
            port_nodes.push(PortNodes {
                source_terminal,
                sink_terminal,
                source_branch: usize::MAX, // filled below
            });
        }
        let first_source = branches.len();
        for (k, pn) in port_nodes.iter_mut().enumerate() {
            pn.source_branch = first_source + k;
            branches.push(Branch {
                tail: pn.sink_terminal,
                head: pn.source_terminal,
                kind: BranchKind::Source,
            });
        }

        let mut node_component = vec![usize::MAX; n_nodes];
        for t in 0..nt {
            node_component[t] = mesh.conductor(t);
        }
        for (k, port) in ports.iter().enumerate() {
            let c = mesh.conductor(port.source_triangles[0]);
            node_component[nt + 2 * k] = c;
            node_component[nt + 2 * k + 1] = c;
        }

        Ok(CircuitGraph {
            n_nodes,
            n_mesh_nodes: nt,
            n_edges: edges.len(),
            branches,
            ports: port_nodes,
            port_names: ports.iter().map(|p| p.name.clone()).collect(),
            n_components: mesh.connected_components(),
            node_component,
        })
    }

    /// Bare graph without a mesh, for unit tests and synthetic circuits.
    pub fn from_branches(n_nodes: usize, branches: Vec<Branch>) -> Self {
        let mut parent: Vec<usize> = (0..n_nodes).collect();
        fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for br in &branches {
            let (a, b) = (find(&mut parent, br.tail), find(&mut parent, br.head));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut label = vec![usize::MAX; n_nodes];
        let mut n_components = 0;
        for x in 0..n_nodes {
            let r = find(&mut parent, x);
            if label[r] == usize::MAX {
                label[r] = n_components;
                n_components += 1;
            }
            label[x] = label[r];
        }
        let n_edges = branches
            .iter()
            .filter(|b| b.kind == BranchKind::Interior)
            .count();
        let ports = branches
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BranchKind::Source)
            .map(|(i, b)| PortNodes {
                source_terminal: b.head,
                sink_terminal: b.tail,
                source_branch: i,
            })
            .collect::<Vec<_>>();
        let port_names = (0..ports.len()).map(|k| format!("p{k}")).collect();
        CircuitGraph {
            n_nodes,
            n_mesh_nodes: n_nodes,
            n_edges,
            branches,
            ports,
            port_names,
            n_components,
            node_component: label,
        }
    }
}

/// Spanning forest: breadth-first per component from the lowest-index node;
/// contact branches are visited before interior ones, source branches never
/// enter the forest.
#[derive(Clone, Debug)]
pub struct SpanningForest {
    /// Per node: the (parent node, branch to parent) pair, None for roots.
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    twig: Vec<bool>,
    n_twigs: usize,
    /// Nodes in breadth-first visit order (parents before children).
    visit_order: Vec<usize>,
}

impl SpanningForest {
    #[inline]
    pub fn n_twigs(&self) -> usize {
        self.n_twigs
    }

    #[inline]
    pub fn is_twig(&self, branch: usize) -> bool {
        self.twig[branch]
    }

    #[inline]
    pub fn parent(&self, node: usize) -> Option<(usize, usize)> {
        self.parent[node]
    }

    #[inline]
    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    /// Nodes ordered so every parent precedes its children.
    #[inline]
    pub fn visit_order(&self) -> &[usize] {
        &self.visit_order
    }
}

pub fn spanning_forest(graph: &CircuitGraph) -> SpanningForest {
    let n = graph.n_nodes();
    // adjacency sorted so contacts come first, then by branch index
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (b, br) in graph.branches().iter().enumerate() {
        if br.kind == BranchKind::Source {
            continue;
        }
        adjacency[br.tail].push((b, br.head));
        adjacency[br.head].push((b, br.tail));
    }
    let rank = |b: usize| -> (u8, usize) {
        match graph.branches()[b].kind {
            BranchKind::Contact => (0, b),
            _ => (1, b),
        }
    };
    for adj in adjacency.iter_mut() {
        adj.sort_by_key(|&(b, _)| rank(b));
    }

    let mut parent = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut twig = vec![false; graph.n_branches()];
    let mut n_twigs = 0;
    let mut visit_order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        queue.push_back(root);
        while let Some(node) = queue.pop_front() {
            visit_order.push(node);
            for &(b, other) in &adjacency[node] {
                if !visited[other] {
                    visited[other] = true;
                    parent[other] = Some((node, b));
                    depth[other] = depth[node] + 1;
                    twig[b] = true;
                    n_twigs += 1;
                    queue.push_back(other);
                }
            }
        }
    }
    SpanningForest {
        parent,
        depth,
        twig,
        n_twigs,
        visit_order,
    }
}

/// Fundamental-loop basis: one loop per link, `A` stored row-wise with ±1
/// signs. Loop `i` traverses its link in the branch direction, so the link
/// columns restricted to their own loops form an identity.
#[derive(Clone, Debug)]
pub struct LoopBasis {
    loops: Vec<Vec<(usize, i8)>>,
    link_of_loop: Vec<usize>,
    source_loop_of_port: Vec<usize>,
    n_branches: usize,
    n_edges: usize,
}

impl LoopBasis {
    #[inline]
    pub fn n_loops(&self) -> usize {
        self.loops.len()
    }

    #[inline]
    pub fn n_branches(&self) -> usize {
        self.n_branches
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    #[inline]
    pub fn loop_branches(&self, l: usize) -> &[(usize, i8)] {
        &self.loops[l]
    }

    #[inline]
    pub fn link_of_loop(&self, l: usize) -> usize {
        self.link_of_loop[l]
    }

    /// Loop containing the source branch of port `k`.
    #[inline]
    pub fn source_loop(&self, k: usize) -> usize {
        self.source_loop_of_port[k]
    }

    /// `I_b = Aᵀ I_l`: superpose loop currents onto branches.
    pub fn to_branch<T: Scalar>(&self, loop_values: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(loop_values.len(), self.loops.len());
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.n_branches];
        for (l, branches) in self.loops.iter().enumerate() {
            let v = loop_values[l];
            for &(b, s) in branches {
                if s > 0 {
                    out[b] += v;
                } else {
                    out[b] -= v;
                }
            }
        }
        out
    }

    /// `V_l = A V_b`: sum branch voltages around each loop.
    pub fn to_loop<T: Scalar>(&self, branch_values: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(branch_values.len(), self.n_branches);
        self.loops
            .iter()
            .map(|branches| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for &(b, s) in branches {
                    if s > 0 {
                        acc += branch_values[b];
                    } else {
                        acc -= branch_values[b];
                    }
                }
                acc
            })
            .collect()
    }

    /// Loop excitation vector for per-port source voltages: the loop closed
    /// by port k's source branch gets `+V_k`, every other loop 0.
    pub fn loop_voltage<T: Scalar>(
        &self,
        excitations: &[Complex<T>],
    ) -> Result<Vec<Complex<T>>> {
        if excitations.len() != self.source_loop_of_port.len() {
            return Err(Error::DimensionMismatch {
                expected: self.source_loop_of_port.len(),
                got: excitations.len(),
            });
        }
        let mut v = vec![Complex::new(T::zero(), T::zero()); self.loops.len()];
        for (k, &l) in self.source_loop_of_port.iter().enumerate() {
            v[l] = excitations[k];
        }
        Ok(v)
    }

    /// Exact integer check of `D·Aᵀ = 0` (charge conservation of every loop).
    pub fn incidence_product_is_zero(&self, graph: &CircuitGraph) -> bool {
        for branches in &self.loops {
            let mut nodal = std::collections::HashMap::new();
            for &(b, s) in branches {
                let br = graph.branches()[b];
                *nodal.entry(br.tail).or_insert(0i64) += s as i64;
                *nodal.entry(br.head).or_insert(0i64) -= s as i64;
            }
            if nodal.values().any(|&v| v != 0) {
                return false;
            }
        }
        true
    }
}

pub fn fundamental_loops(graph: &CircuitGraph, forest: &SpanningForest) -> LoopBasis {
    let mut loops = Vec::new();
    let mut link_of_loop = Vec::new();
    let mut source_loop_of_port = vec![usize::MAX; graph.n_ports()];
    for (b, br) in graph.branches().iter().enumerate() {
        if forest.is_twig(b) {
            continue;
        }
        // traverse: tail --link--> head --tree--> tail
        let mut row = vec![(b, 1i8)];
        let (mut up_head, mut up_tail) = (br.head, br.tail);
        let mut head_part: Vec<(usize, i8)> = Vec::new();
        let mut tail_part: Vec<(usize, i8)> = Vec::new();
        // climb to equal depth, then in lockstep to the common ancestor
        while forest.depth[up_head] > forest.depth[up_tail] {
            let (p, pb) = forest.parent[up_head].expect("non-root has parent");
            head_part.push((pb, walk_sign(graph, pb, up_head)));
            up_head = p;
        }
        while forest.depth[up_tail] > forest.depth[up_head] {
            let (p, pb) = forest.parent[up_tail].expect("non-root has parent");
            tail_part.push((pb, walk_sign(graph, pb, up_tail)));
            up_tail = p;
        }
        while up_head != up_tail {
            let (ph, bh) = forest.parent[up_head].expect("link endpoints share a tree");
            head_part.push((bh, walk_sign(graph, bh, up_head)));
            up_head = ph;
            let (pt, bt) = forest.parent[up_tail].expect("link endpoints share a tree");
            tail_part.push((bt, walk_sign(graph, bt, up_tail)));
            up_tail = pt;
        }
        row.extend(head_part);
        // the tail side is traversed towards the link tail: reverse and flip
        row.extend(tail_part.into_iter().rev().map(|(b, s)| (b, -s)));
        if let BranchKind::Source = graph.branches()[b].kind {
            let k = graph
                .ports
                .iter()
                .position(|p| p.source_branch == b)
                .expect("source branch belongs to a port");
            source_loop_of_port[k] = loops.len();
        }
        link_of_loop.push(b);
        loops.push(row);
    }
    LoopBasis {
        loops,
        link_of_loop,
        source_loop_of_port,
        n_branches: graph.n_branches(),
        n_edges: graph.n_edges(),
    }
}

/// Sign of walking branch `b` from `child` towards its parent: +1 when the
/// walk follows the branch direction.
#[inline]
fn walk_sign(graph: &CircuitGraph, b: usize, child: usize) -> i8 {
    if graph.branches()[b].tail == child {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Open chain of 4 nodes: a tree, so no loops at all.
    #[test]
    fn path_graph_has_no_links() {
        let branches = (0..3)
            .map(|i| Branch {
                tail: i,
                head: i + 1,
                kind: BranchKind::Interior,
            })
            .collect();
        let g = CircuitGraph::from_branches(4, branches);
        let f = spanning_forest(&g);
        assert_eq!(f.n_twigs(), 3);
        let basis = fundamental_loops(&g, &f);
        assert_eq!(basis.n_loops(), 0);
    }

    /// Two-node circuit with an impedance branch and a port, the smallest
    /// possible extraction.
    #[test]
    fn two_node_port_circuit() {
        let branches = vec![
            Branch {
                tail: 0,
                head: 1,
                kind: BranchKind::Interior,
            },
            Branch {
                tail: 2,
                head: 0,
                kind: BranchKind::Contact,
            },
            Branch {
                tail: 3,
                head: 1,
                kind: BranchKind::Contact,
            },
            Branch {
                tail: 3,
                head: 2,
                kind: BranchKind::Source,
            },
        ];
        let g = CircuitGraph::from_branches(4, branches);
        let f = spanning_forest(&g);
        assert_eq!(f.n_twigs(), 3);
        let basis = fundamental_loops(&g, &f);
        assert_eq!(basis.n_loops(), 1);
        assert!(basis.incidence_product_is_zero(&g));
        let row = basis.loop_branches(0);
        assert_eq!(row.len(), 4);
        let signs: std::collections::HashMap<usize, i8> = row.iter().copied().collect();
        assert_eq!(signs[&3], 1); // source link along its direction
        assert_eq!(signs[&1], 1); // contact 2→0 walked 2→0
        assert_eq!(signs[&0], 1); // interior 0→1 walked 0→1
        assert_eq!(signs[&2], -1); // contact 3→1 walked 1→3
    }

    #[test]
    fn kcl_kvl_identities() {
        // two components, extra chord in the first
        let mut branches = Vec::new();
        for (t, h) in [(0, 1), (1, 2), (2, 0), (0, 3), (3, 1)] {
            branches.push(Branch {
                tail: t,
                head: h,
                kind: BranchKind::Interior,
            });
        }
        for (t, h) in [(4, 5), (5, 6), (6, 4)] {
            branches.push(Branch {
                tail: t,
                head: h,
                kind: BranchKind::Interior,
            });
        }
        let g = CircuitGraph::from_branches(7, branches);
        assert_eq!(g.n_components(), 2);
        let f = spanning_forest(&g);
        assert_eq!(f.n_twigs(), 7 - 2);
        let basis = fundamental_loops(&g, &f);
        assert_eq!(basis.n_loops(), 8 - 7 + 2);
        assert!(basis.incidence_product_is_zero(&g));

        // KCL: D(Aᵀ x) = 0 for arbitrary loop currents
        let x: Vec<Complex<f64>> = (0..basis.n_loops())
            .map(|i| Complex::new(1.3 * i as f64 - 0.7, 0.4 * i as f64))
            .collect();
        let ib = basis.to_branch(&x);
        let nodal = g.incidence_apply(&ib);
        for v in nodal {
            assert!(v.norm() < 1e-14);
        }

        // KVL: A(Dᵀ φ) = 0 for arbitrary potentials
        let phi: Vec<Complex<f64>> = (0..g.n_nodes())
            .map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.5).cos()))
            .collect();
        let vb = g.potential_drop(&phi);
        for v in basis.to_loop(&vb) {
            assert!(v.norm() < 1e-14);
        }
    }
}
