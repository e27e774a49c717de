//! Lagrange element families and their degree-of-freedom layout.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::mesh::{BoundaryTag, Mesh, Point};

/// Scalar element family on triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementFamily {
    P1,
    P2,
    /// Linear element enriched with the cubic bubble `27 l1 l2 l3`.
    P1Bubble,
}

/// Maximum number of local basis functions of any family.
pub const MAX_LOCAL: usize = 6;

impl ElementFamily {
    pub fn local_size(self) -> usize {
        match self {
            ElementFamily::P1 => 3,
            ElementFamily::P2 => 6,
            ElementFamily::P1Bubble => 4,
        }
    }

    /// Basis values at barycentric point `l`.
    pub fn values(self, l: [f64; 3], out: &mut [f64; MAX_LOCAL]) {
        out[..3].copy_from_slice(&l);
        match self {
            ElementFamily::P1 => {}
            ElementFamily::P2 => {
                for i in 0..3 {
                    out[i] = l[i] * (2.0 * l[i] - 1.0);
                }
                for e in 0..3 {
                    out[3 + e] = 4.0 * l[e] * l[(e + 1) % 3];
                }
            }
            ElementFamily::P1Bubble => out[3] = 27.0 * l[0] * l[1] * l[2],
        }
    }

    /// Physical basis gradients given the (constant) barycentric gradients.
    pub fn gradients(self, l: [f64; 3], gl: &[[f64; 2]; 3], out: &mut [[f64; 2]; MAX_LOCAL]) {
        match self {
            ElementFamily::P1 => out[..3].copy_from_slice(gl),
            ElementFamily::P2 => {
                for i in 0..3 {
                    let s = 4.0 * l[i] - 1.0;
                    out[i] = [s * gl[i][0], s * gl[i][1]];
                }
                for e in 0..3 {
                    let (i, j) = (e, (e + 1) % 3);
                    out[3 + e] = [
                        4.0 * (l[j] * gl[i][0] + l[i] * gl[j][0]),
                        4.0 * (l[j] * gl[i][1] + l[i] * gl[j][1]),
                    ];
                }
            }
            ElementFamily::P1Bubble => {
                out[..3].copy_from_slice(gl);
                let mut g = [0.0; 2];
                for k in 0..2 {
                    g[k] = 27.0
                        * (l[1] * l[2] * gl[0][k] + l[0] * l[2] * gl[1][k] + l[0] * l[1] * gl[2][k]);
                }
                out[3] = g;
            }
        }
    }
}

/// Velocity/pressure element pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StokesElement {
    /// Taylor-Hood P2-P1.
    P2P1,
    /// MINI: P1 + bubble velocity, P1 pressure.
    Mini,
}

impl StokesElement {
    pub fn velocity_family(self) -> ElementFamily {
        match self {
            StokesElement::P2P1 => ElementFamily::P2,
            StokesElement::Mini => ElementFamily::P1Bubble,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StokesElement::P2P1 => "p2p1",
            StokesElement::Mini => "mini",
        }
    }
}

impl fmt::Display for StokesElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StokesElement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p2p1" | "taylor-hood" | "taylorhood" => Ok(StokesElement::P2P1),
            "mini" => Ok(StokesElement::Mini),
            other => Err(format!("unknown element '{other}' (expected p2p1 or mini)")),
        }
    }
}

/// Scalar or vector Lagrange space on a mesh.
///
/// Scalar nodes are numbered vertices first, then edges (P2) or cells
/// (bubble). Vector dofs are interleaved: `dof = components * node + comp`.
#[derive(Clone, Debug)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    family: ElementFamily,
    components: usize,
    cell_nodes: Vec<[usize; MAX_LOCAL]>,
    node_coords: Vec<Point>,
    node_tags: Vec<Vec<BoundaryTag>>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, family: ElementFamily, components: usize) -> Self {
        assert!(components >= 1);
        let nv = mesh.num_vertices();
        let mut node_coords: Vec<Point> = mesh.vertices().to_vec();
        let mut cell_nodes = Vec::with_capacity(mesh.num_cells());
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();

        for (c, cell) in mesh.cells().iter().enumerate() {
            let mut nodes = [usize::MAX; MAX_LOCAL];
            nodes[..3].copy_from_slice(cell);
            match family {
                ElementFamily::P1 => {}
                ElementFamily::P2 => {
                    for e in 0..3 {
                        let (a, b) = (cell[e], cell[(e + 1) % 3]);
                        let key = (a.min(b), a.max(b));
                        let id = *edges.entry(key).or_insert_with(|| {
                            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                            node_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                            node_coords.len() - 1
                        });
                        nodes[3 + e] = id;
                    }
                }
                ElementFamily::P1Bubble => {
                    let p = mesh.cell_points(c);
                    node_coords.push([
                        (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                        (p[0][1] + p[1][1] + p[2][1]) / 3.0,
                    ]);
                    nodes[3] = nv + c;
                }
            }
            cell_nodes.push(nodes);
        }

        let mut node_tags = vec![Vec::new(); node_coords.len()];
        let mut add = |node: usize, tag: BoundaryTag| {
            if !node_tags[node].contains(&tag) {
                node_tags[node].push(tag);
            }
        };
        for f in mesh.facets() {
            let [a, b] = f.vertices;
            add(a, f.tag);
            add(b, f.tag);
            if family == ElementFamily::P2 {
                add(edges[&(a.min(b), a.max(b))], f.tag);
            }
        }

        FunctionSpace {
            mesh,
            family,
            components,
            cell_nodes,
            node_coords,
            node_tags,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn family(&self) -> ElementFamily {
        self.family
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.components * self.num_nodes()
    }

    pub fn local_size(&self) -> usize {
        self.family.local_size()
    }

    /// Scalar node indices of cell `c`.
    pub fn cell_nodes(&self, c: usize) -> &[usize] {
        &self.cell_nodes[c][..self.family.local_size()]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    /// Boundary tags of the facets that touch `node` (empty for interior nodes).
    pub fn node_tags(&self, node: usize) -> &[BoundaryTag] {
        &self.node_tags[node]
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        self.components * node + comp
    }

    /// Nodal interpolant of `f`. Bubble coefficients are set to zero.
    pub fn interpolate(&self, f: impl Fn(Point) -> Vec<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dofs()];
        let n_lagrange = match self.family {
            ElementFamily::P1Bubble => self.mesh.num_vertices(),
            _ => self.num_nodes(),
        };
        for node in 0..n_lagrange {
            let v = f(self.node_coords[node]);
            for comp in 0..self.components {
                out[self.dof(node, comp)] = v[comp];
            }
        }
        out
    }
}

/// Per-cell geometry and basis tabulation at the quadrature points.
pub struct CellValues {
    pub n_local: usize,
    /// Physical quadrature weights (reference weight times Jacobian).
    pub weights: Vec<f64>,
    pub points: Vec<Point>,
    pub values: Vec<[f64; MAX_LOCAL]>,
    pub grads: Vec<[[f64; 2]; MAX_LOCAL]>,
}

/// Gradients of the barycentric coordinates and twice the signed area.
pub fn barycentric_gradients(p: &[Point; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let g = [
        [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
        [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
        [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
    ];
    (g, det)
}

impl CellValues {
    pub fn new(mesh: &Mesh, c: usize, family: ElementFamily, quad: &super::QuadratureRule) -> Self {
        let p = mesh.cell_points(c);
        let (gl, det) = barycentric_gradients(&p);
        let nq = quad.len();
        let mut cv = CellValues {
            n_local: family.local_size(),
            weights: Vec::with_capacity(nq),
            points: Vec::with_capacity(nq),
            values: Vec::with_capacity(nq),
            grads: Vec::with_capacity(nq),
        };
        for (l, w) in quad.points().iter().zip(quad.weights()) {
            cv.weights.push(w * det);
            cv.points.push([
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ]);
            let mut v = [0.0; MAX_LOCAL];
            family.values(*l, &mut v);
            cv.values.push(v);
            let mut g = [[0.0; 2]; MAX_LOCAL];
            family.gradients(*l, &gl, &mut g);
            cv.grads.push(g);
        }
        cv
    }
}
