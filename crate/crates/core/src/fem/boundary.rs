//! Velocity boundary constraints: Dirichlet values and free-slip (impenetrability)
//! conditions imposed through a local rotation of the nodal velocity frame.
//!
//! A slip node's two dofs are replaced by its normal and tangential components
//! `(u.n, u.t)` with `t = (-n_y, n_x)`. Writing `Q` for the block rotation, the
//! rotated system reads `Q A Q^T`, `B Q^T`, `Q F`, and the normal component is
//! then a homogeneous Dirichlet dof.

use sprs::TriMat;

use super::space::FunctionSpace;
use crate::error::{Error, Result};
use crate::linalg::sparse::CsrMatrix;
use crate::mesh::{BoundaryTag, Point};

/// Dirichlet velocity data `g(x)`.
pub type DirichletData = dyn Fn(Point) -> [f64; 2] + Sync;

#[derive(Clone, Debug)]
pub struct Constraints {
    n_dofs: usize,
    fixed: Vec<usize>,
    values: Vec<f64>,
    is_fixed: Vec<bool>,
    slip: Vec<(usize, [f64; 2])>,
}

impl Constraints {
    /// Builds the constraints of a velocity space from the boundary tags:
    /// `DirichletAll` and `Bed` nodes take the value of `g`, nodes touching
    /// `Lake` but not `Bed` get a slip condition, `Surface` is stress free.
    pub fn new(space: &FunctionSpace, g: &DirichletData) -> Result<Self> {
        if space.components() != 2 {
            return Err(Error::Dimension("constraints need a 2-component space".into()));
        }
        let mesh = space.mesh();
        let mut normals = vec![[0.0f64; 2]; space.num_nodes()];
        for (fi, f) in mesh.facets().iter().enumerate() {
            if f.tag != BoundaryTag::Lake {
                continue;
            }
            let (n, _) = mesh.facet_normal(fi);
            for node in facet_nodes(space, fi) {
                normals[node][0] += n[0];
                normals[node][1] += n[1];
            }
        }

        let mut fixed = Vec::new();
        let mut values = Vec::new();
        let mut slip = Vec::new();
        for (node, &x) in space.node_coords().iter().enumerate() {
            let tags = space.node_tags(node);
            if tags.contains(&BoundaryTag::DirichletAll) || tags.contains(&BoundaryTag::Bed) {
                let v = g(x);
                for comp in 0..2 {
                    fixed.push(space.dof(node, comp));
                    values.push(v[comp]);
                }
            } else if tags.contains(&BoundaryTag::Lake) {
                let n = normals[node];
                let len = n[0].hypot(n[1]);
                if len < 1e-12 {
                    return Err(Error::Geometry(format!("degenerate slip normal at node {node}")));
                }
                let n = [n[0] / len, n[1] / len];
                fixed.push(space.dof(node, 0));
                values.push(0.0);
                slip.push((node, n));
            }
        }
        let n_dofs = space.num_dofs();
        let mut is_fixed = vec![false; n_dofs];
        for &d in &fixed {
            is_fixed[d] = true;
        }
        Ok(Constraints {
            n_dofs,
            fixed,
            values,
            is_fixed,
            slip,
        })
    }

    /// Constrained dofs (in the rotated frame).
    pub fn fixed_dofs(&self) -> &[usize] {
        &self.fixed
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.is_fixed[dof]
    }

    /// Slip nodes with their unit outward normals.
    pub fn slip_nodes(&self) -> &[(usize, [f64; 2])] {
        &self.slip
    }

    pub fn num_free(&self) -> usize {
        self.n_dofs - self.fixed.len()
    }

    /// `Q v`: Cartesian to rotated frame.
    pub fn rotate(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for &(node, n) in &self.slip {
            let (x, y) = (v[2 * node], v[2 * node + 1]);
            out[2 * node] = n[0] * x + n[1] * y;
            out[2 * node + 1] = -n[1] * x + n[0] * y;
        }
        out
    }

    /// `Q^T v`: rotated to Cartesian frame.
    pub fn unrotate(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for &(node, n) in &self.slip {
            let (a, b) = (v[2 * node], v[2 * node + 1]);
            out[2 * node] = n[0] * a - n[1] * b;
            out[2 * node + 1] = n[1] * a + n[0] * b;
        }
        out
    }

    fn rotation_matrix(&self) -> CsrMatrix {
        let mut slip_of = vec![None; self.n_dofs / 2];
        for &(node, n) in &self.slip {
            slip_of[node] = Some(n);
        }
        let mut tri = TriMat::new((self.n_dofs, self.n_dofs));
        for (node, s) in slip_of.iter().enumerate() {
            match s {
                None => {
                    tri.add_triplet(2 * node, 2 * node, 1.0);
                    tri.add_triplet(2 * node + 1, 2 * node + 1, 1.0);
                }
                Some(n) => {
                    tri.add_triplet(2 * node, 2 * node, n[0]);
                    tri.add_triplet(2 * node, 2 * node + 1, n[1]);
                    tri.add_triplet(2 * node + 1, 2 * node, -n[1]);
                    tri.add_triplet(2 * node + 1, 2 * node + 1, n[0]);
                }
            }
        }
        tri.to_csr()
    }

    /// `Q A Q^T` and `B Q^T`.
    pub fn rotate_system(&self, a: &CsrMatrix, b: &CsrMatrix) -> (CsrMatrix, CsrMatrix) {
        if self.slip.is_empty() {
            return (a.clone(), b.clone());
        }
        let q = self.rotation_matrix();
        let qt: CsrMatrix = q.transpose_view().to_csr();
        let a_rot: CsrMatrix = &(&q * a) * &qt;
        let b_rot: CsrMatrix = b * &qt;
        (a_rot, b_rot)
    }

    /// Target values of the constrained dofs minus the current iterate, i.e.
    /// the prescribed values of an update `delta` with `u_k + delta`
    /// satisfying the constraints. `u_k` is given in the Cartesian frame.
    pub fn increments(&self, u_k: &[f64]) -> Vec<f64> {
        let r = self.rotate(u_k);
        self.fixed
            .iter()
            .zip(&self.values)
            .map(|(&d, &v)| v - r[d])
            .collect()
    }

    /// The prescribed values of the constrained dofs (rotated frame).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Symmetric elimination of the constrained dofs from the rotated
    /// saddle-point system `[A B^T; B 0] [x; y] = [f; g]` with prescribed
    /// values `d` on the fixed dofs. Fixed rows and columns of `A` are
    /// replaced by the identity, fixed columns of `B` are removed, and the
    /// known values are moved to the right-hand side.
    pub fn eliminate(
        &self,
        a: &CsrMatrix,
        b: &CsrMatrix,
        f: &mut [f64],
        g: &mut [f64],
        d: &[f64],
    ) -> Result<(CsrMatrix, CsrMatrix)> {
        if d.len() != self.fixed.len() || f.len() != self.n_dofs || a.rows() != self.n_dofs {
            return Err(Error::Dimension("constraint data does not match system".into()));
        }
        let mut dval = vec![0.0; self.n_dofs];
        for (&i, &v) in self.fixed.iter().zip(d) {
            dval[i] = v;
        }

        let mut ta = TriMat::with_capacity((self.n_dofs, self.n_dofs), a.nnz());
        for (i, row) in a.outer_iterator().enumerate() {
            if self.is_fixed[i] {
                ta.add_triplet(i, i, 1.0);
                continue;
            }
            for (j, &v) in row.iter() {
                if self.is_fixed[j] {
                    f[i] -= v * dval[j];
                } else {
                    ta.add_triplet(i, j, v);
                }
            }
        }
        for &i in &self.fixed {
            f[i] = dval[i];
        }

        let mut tb = TriMat::with_capacity((b.rows(), b.cols()), b.nnz());
        for (q, row) in b.outer_iterator().enumerate() {
            for (j, &v) in row.iter() {
                if self.is_fixed[j] {
                    g[q] -= v * dval[j];
                } else {
                    tb.add_triplet(q, j, v);
                }
            }
        }
        Ok((ta.to_csr(), tb.to_csr()))
    }

    /// Zeroes the fixed entries of a rotated-frame residual.
    pub fn zero_fixed(&self, r: &mut [f64]) {
        for &i in &self.fixed {
            r[i] = 0.0;
        }
    }
}

fn facet_nodes(space: &FunctionSpace, fi: usize) -> Vec<usize> {
    let mesh = space.mesh();
    let f = &mesh.facets()[fi];
    let mut nodes = f.vertices.to_vec();
    if space.family() == super::space::ElementFamily::P2 {
        let c = mesh.facet_cell(fi);
        let cell = mesh.cells()[c];
        let local = space.cell_nodes(c);
        for e in 0..3 {
            let (a, b) = (cell[e], cell[(e + 1) % 3]);
            if (a == f.vertices[0] && b == f.vertices[1]) || (a == f.vertices[1] && b == f.vertices[0]) {
                nodes.push(local[3 + e]);
            }
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::space::ElementFamily;
    use crate::linalg::sparse::{mul_vec, to_dense};
    use crate::mesh::{extruded_glacier_mesh, square_mesh, GlacierProfile, SyntheticProfile};
    use std::sync::Arc;

    #[test]
    fn square_constrains_all_boundary_nodes() {
        let m = Arc::new(square_mesh(3, [0.0, 0.0], [1.0, 1.0]).unwrap());
        let s = FunctionSpace::new(m, ElementFamily::P2, 2);
        let c = Constraints::new(&s, &|x| [x[0], 2.0]).unwrap();
        // P2 on a 3x3 grid: 7x7 nodes, 24 on the boundary
        assert_eq!(c.fixed_dofs().len(), 48);
        assert!(c.slip_nodes().is_empty());
        let u = s.interpolate(|x| vec![x[0], 2.0]);
        assert!(c.increments(&u).iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn rotation_roundtrip_and_lake_normals() {
        let prof = GlacierProfile::synthetic(&SyntheticProfile::default()).unwrap();
        let m = Arc::new(extruded_glacier_mesh(&prof, 20, 3, Some((2000.0, 3000.0))).unwrap());
        let s = FunctionSpace::new(m, ElementFamily::P2, 2);
        let c = Constraints::new(&s, &|_| [0.0, 0.0]).unwrap();
        assert!(!c.slip_nodes().is_empty());
        for &(_, n) in c.slip_nodes() {
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
            assert!(n[1] < 0.0, "lake normal must point downwards");
        }
        let v: Vec<f64> = (0..s.num_dofs()).map(|i| (i as f64).sin()).collect();
        let back = c.unrotate(&c.rotate(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn elimination_reproduces_constrained_solution() {
        use nalgebra::DVector;
        let m = Arc::new(square_mesh(2, [0.0, 0.0], [1.0, 1.0]).unwrap());
        let s = FunctionSpace::new(m, ElementFamily::P1, 2);
        let c = Constraints::new(&s, &|x| [x[1], -x[0]]).unwrap();
        let n = s.num_dofs();
        let mut tri = TriMat::new((n, n));
        for i in 0..n {
            tri.add_triplet(i, i, 4.0);
            if i + 1 < n {
                tri.add_triplet(i, i + 1, -1.0);
                tri.add_triplet(i + 1, i, -1.0);
            }
        }
        let a: CsrMatrix = tri.to_csr();
        let b: CsrMatrix = TriMat::<f64>::new((0, n)).to_csr();
        let f0: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let mut f = f0.clone();
        let mut g = vec![];
        let (ae, _) = c.eliminate(&a, &b, &mut f, &mut g, c.values()).unwrap();
        let x = to_dense(&ae).lu().solve(&DVector::from_vec(f)).unwrap();
        for (&d, &v) in c.fixed_dofs().iter().zip(c.values()) {
            assert!((x[d] - v).abs() < 1e-14);
        }
        let ax = mul_vec(&a, x.as_slice());
        for i in 0..n {
            if !c.is_fixed(i) {
                assert!((ax[i] - f0[i]).abs() < 1e-12);
            }
        }
        assert!(ae.outer_iterator().all(|r| r.nnz() > 0));
    }
}
