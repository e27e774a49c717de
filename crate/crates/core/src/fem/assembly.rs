//! Assembly of the matrices and vectors of the linearized p-Stokes system.
//!
//! All integrals are evaluated with the same quadrature rule, so the discrete
//! inner products used by the viscous operator, the divergence matrix and the
//! (scaled) pressure mass matrices are mutually consistent.

use rayon::prelude::*;
use sprs::TriMat;

use super::quadrature::QuadratureRule;
use super::rheology::{viscosity, PhysicalParams, SymTensor2};
use super::space::{CellValues, FunctionSpace, MAX_LOCAL};
use crate::error::{Error, Result};
use crate::linalg::sparse::{mul_transpose_vec, mul_vec, CsrMatrix};
use crate::mesh::Point;

/// Body force density `f(x)`.
pub type BodyForce = dyn Fn(Point) -> Result<[f64; 2]> + Send + Sync;

/// Velocity gradient `g[i][j] = d u_i / d x_j` at one quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub cell: usize,
    pub weight: f64,
    pub point: Point,
    pub grad: [[f64; 2]; 2],
}

impl QuadPoint {
    pub fn strain(&self) -> SymTensor2 {
        SymTensor2::sym(self.grad)
    }

    pub fn divergence(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }
}

fn check_velocity(space: &FunctionSpace, u: &[f64]) -> Result<()> {
    if space.components() != 2 {
        return Err(Error::Dimension("expected a 2-component velocity space".into()));
    }
    if u.len() != space.num_dofs() {
        return Err(Error::Dimension(format!(
            "velocity vector has {} entries, space has {}",
            u.len(),
            space.num_dofs()
        )));
    }
    Ok(())
}

fn local_velocity(space: &FunctionSpace, c: usize, u: &[f64]) -> [[f64; 2]; MAX_LOCAL] {
    let mut out = [[0.0; 2]; MAX_LOCAL];
    for (a, &node) in space.cell_nodes(c).iter().enumerate() {
        out[a] = [u[2 * node], u[2 * node + 1]];
    }
    out
}

fn gradient_at(cv: &CellValues, k: usize, coeffs: &[[f64; 2]; MAX_LOCAL]) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for a in 0..cv.n_local {
        let ga = cv.grads[k][a];
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] += coeffs[a][i] * ga[j];
            }
        }
    }
    g
}

fn value_at(cv: &CellValues, k: usize, coeffs: &[[f64; 2]; MAX_LOCAL]) -> [f64; 2] {
    let mut v = [0.0; 2];
    for a in 0..cv.n_local {
        v[0] += coeffs[a][0] * cv.values[k][a];
        v[1] += coeffs[a][1] * cv.values[k][a];
    }
    v
}

/// Strain-rate tensor of the vector basis function `psi_a e_comp`.
fn basis_strain(g: [f64; 2], comp: usize) -> SymTensor2 {
    if comp == 0 {
        SymTensor2::new(g[0], 0.0, 0.5 * g[1])
    } else {
        SymTensor2::new(0.0, g[1], 0.5 * g[0])
    }
}

/// Evaluates the gradient of a velocity field at every quadrature point,
/// cell by cell.
pub fn velocity_gradients(space: &FunctionSpace, quad: &QuadratureRule, u: &[f64]) -> Result<Vec<QuadPoint>> {
    check_velocity(space, u)?;
    let mesh = space.mesh();
    let per_cell: Vec<Vec<QuadPoint>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let cv = CellValues::new(mesh, c, space.family(), quad);
            let coeffs = local_velocity(space, c, u);
            (0..quad.len())
                .map(|k| QuadPoint {
                    cell: c,
                    weight: cv.weights[k],
                    point: cv.points[k],
                    grad: gradient_at(&cv, k, &coeffs),
                })
                .collect()
        })
        .collect();
    Ok(per_cell.into_iter().flatten().collect())
}

/// Velocity values at every quadrature point (same ordering as
/// [`velocity_gradients`]).
pub fn velocity_values(space: &FunctionSpace, quad: &QuadratureRule, u: &[f64]) -> Result<Vec<[f64; 2]>> {
    check_velocity(space, u)?;
    let mesh = space.mesh();
    let mut out = Vec::with_capacity(mesh.num_cells() * quad.len());
    for c in 0..mesh.num_cells() {
        let cv = CellValues::new(mesh, c, space.family(), quad);
        let coeffs = local_velocity(space, c, u);
        out.extend((0..quad.len()).map(|k| value_at(&cv, k, &coeffs)));
    }
    Ok(out)
}

/// Values of a scalar field at every quadrature point.
pub fn scalar_values(space: &FunctionSpace, quad: &QuadratureRule, p: &[f64]) -> Result<Vec<f64>> {
    if space.components() != 1 || p.len() != space.num_dofs() {
        return Err(Error::Dimension("scalar field does not match space".into()));
    }
    let mesh = space.mesh();
    let mut out = Vec::with_capacity(mesh.num_cells() * quad.len());
    for c in 0..mesh.num_cells() {
        let cv = CellValues::new(mesh, c, space.family(), quad);
        let nodes = space.cell_nodes(c);
        for k in 0..quad.len() {
            out.push(nodes.iter().enumerate().map(|(a, &n)| p[n] * cv.values[k][a]).sum());
        }
    }
    Ok(out)
}

/// Maximum of `|D u|` over all quadrature points.
pub fn strain_rate_maxnorm(u: &[f64], space: &FunctionSpace, quad: &QuadratureRule) -> Result<f64> {
    Ok(velocity_gradients(space, quad, u)?
        .iter()
        .map(|q| q.strain().norm_sq().sqrt())
        .fold(0.0, f64::max))
}

/// Assembles a sparse matrix from per-cell dense blocks. The local block is
/// row-major `rows.local_size()*rows.components()` by
/// `cols.local_size()*cols.components()` with dof `comp + components*a`.
/// Local blocks are computed in parallel and scattered in cell order, so the
/// result does not depend on the thread count.
fn assemble_matrix<F>(rows: &FunctionSpace, cols: &FunctionSpace, local: F) -> Result<CsrMatrix>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
{
    let mesh = rows.mesh();
    let nr = rows.local_size() * rows.components();
    let nc = cols.local_size() * cols.components();
    let blocks: Vec<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let mut block = vec![0.0; nr * nc];
            local(c, &mut block)?;
            Ok(block)
        })
        .collect::<Result<_>>()?;

    let mut tri = TriMat::with_capacity((rows.num_dofs(), cols.num_dofs()), blocks.len() * nr * nc);
    for (c, block) in blocks.iter().enumerate() {
        let rn = rows.cell_nodes(c);
        let cn = cols.cell_nodes(c);
        for (a, &na) in rn.iter().enumerate() {
            for ca in 0..rows.components() {
                let i = ca + rows.components() * a;
                let gi = rows.dof(na, ca);
                for (b, &nb) in cn.iter().enumerate() {
                    for cb in 0..cols.components() {
                        let j = cb + cols.components() * b;
                        let v = block[i * nc + j];
                        if v != 0.0 {
                            tri.add_triplet(gi, cols.dof(nb, cb), v);
                        }
                    }
                }
            }
        }
    }
    Ok(tri.to_csr())
}

/// Linearized viscous operator at `u_k`:
///
/// `A_ij = int nu_k D phi_j : D phi_i
///        + gamma (p-2) int nu0 (eps^2+|Du_k|^2)^((p-4)/2) (Du_k : D phi_j)(Du_k : D phi_i)`.
pub fn assemble_operator(
    u_k: &[f64],
    space: &FunctionSpace,
    params: &PhysicalParams,
    quad: &QuadratureRule,
) -> Result<CsrMatrix> {
    check_velocity(space, u_k)?;
    let mesh = space.mesh();
    let nl = space.local_size();
    let n = 2 * nl;
    assemble_matrix(space, space, |c, block| {
        let cv = CellValues::new(mesh, c, space.family(), quad);
        let coeffs = local_velocity(space, c, u_k);
        let mut strains = [SymTensor2::default(); 2 * MAX_LOCAL];
        let mut proj = [0.0; 2 * MAX_LOCAL];
        for k in 0..quad.len() {
            let du = SymTensor2::sym(gradient_at(&cv, k, &coeffs));
            let (nu, c2) = params.viscosity_and_derivative(&du)?;
            for a in 0..nl {
                for comp in 0..2 {
                    let s = basis_strain(cv.grads[k][a], comp);
                    strains[comp + 2 * a] = s;
                    proj[comp + 2 * a] = du.ddot(&s);
                }
            }
            let w = cv.weights[k];
            for i in 0..n {
                for j in 0..n {
                    block[i * n + j] +=
                        w * (nu * strains[i].ddot(&strains[j]) + c2 * proj[i] * proj[j]);
                }
            }
        }
        Ok(())
    })
}

/// Vector Laplacian `int grad phi_j : grad phi_i` (H^1 seminorm Gram matrix).
pub fn assemble_vector_laplacian(space: &FunctionSpace, quad: &QuadratureRule) -> Result<CsrMatrix> {
    let mesh = space.mesh();
    let nl = space.local_size();
    let n = 2 * nl;
    assemble_matrix(space, space, |c, block| {
        let cv = CellValues::new(mesh, c, space.family(), quad);
        for k in 0..quad.len() {
            let w = cv.weights[k];
            for a in 0..nl {
                for b in 0..nl {
                    let ga = cv.grads[k][a];
                    let gb = cv.grads[k][b];
                    let v = w * (ga[0] * gb[0] + ga[1] * gb[1]);
                    block[(2 * a) * n + 2 * b] += v;
                    block[(2 * a + 1) * n + 2 * b + 1] += v;
                }
            }
        }
        Ok(())
    })
}

/// Divergence matrix `B_ij = -int psi_i div phi_j` (pressure rows, velocity columns).
pub fn assemble_divergence(space_v: &FunctionSpace, space_q: &FunctionSpace, quad: &QuadratureRule) -> Result<CsrMatrix> {
    if space_q.components() != 1 || space_v.components() != 2 {
        return Err(Error::Dimension("divergence needs vector velocity and scalar pressure".into()));
    }
    let mesh = space_v.mesh();
    let nv = 2 * space_v.local_size();
    assemble_matrix(space_q, space_v, |c, block| {
        let cv_v = CellValues::new(mesh, c, space_v.family(), quad);
        let cv_q = CellValues::new(mesh, c, space_q.family(), quad);
        for k in 0..quad.len() {
            let w = cv_v.weights[k];
            for i in 0..space_q.local_size() {
                let psi = cv_q.values[k][i];
                for a in 0..space_v.local_size() {
                    for comp in 0..2 {
                        block[i * nv + comp + 2 * a] -= w * psi * cv_v.grads[k][a][comp];
                    }
                }
            }
        }
        Ok(())
    })
}

fn weighted_mass<F>(space_q: &FunctionSpace, quad: &QuadratureRule, weight: F) -> Result<CsrMatrix>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let mesh = space_q.mesh();
    let nl = space_q.local_size();
    assemble_matrix(space_q, space_q, |c, block| {
        let cv = CellValues::new(mesh, c, space_q.family(), quad);
        for k in 0..quad.len() {
            let w = cv.weights[k] * weight(c, k)?;
            for i in 0..nl {
                for j in 0..nl {
                    block[i * nl + j] += w * cv.values[k][i] * cv.values[k][j];
                }
            }
        }
        Ok(())
    })
}

/// Pressure mass matrix `M_ij = int psi_i psi_j`.
pub fn assemble_mass(space_q: &FunctionSpace, quad: &QuadratureRule) -> Result<CsrMatrix> {
    weighted_mass(space_q, quad, |_, _| Ok(1.0))
}

/// Viscosity at every quadrature point of `u_k`, indexed `[cell * nq + k]`.
pub fn viscosity_field(
    u_k: &[f64],
    space_v: &FunctionSpace,
    params: &PhysicalParams,
    quad: &QuadratureRule,
) -> Result<Vec<f64>> {
    velocity_gradients(space_v, quad, u_k)?
        .iter()
        .map(|q| viscosity(&q.strain(), params))
        .collect()
}

/// Viscosity-scaled mass matrix `M_nu,ij = int nu_k^-1 psi_i psi_j`.
pub fn assemble_scaled_mass(
    space_q: &FunctionSpace,
    space_v: &FunctionSpace,
    u_k: &[f64],
    params: &PhysicalParams,
    quad: &QuadratureRule,
) -> Result<CsrMatrix> {
    let nu = viscosity_field(u_k, space_v, params, quad)?;
    let nq = quad.len();
    weighted_mass(space_q, quad, |c, k| Ok(1.0 / nu[c * nq + k]))
}

/// Load vector `w_i = int weight(x_q) psi_i` for a weight given at the
/// quadrature points (indexed as in [`viscosity_field`]).
pub fn assemble_weighted_load(space_q: &FunctionSpace, quad: &QuadratureRule, weight: &[f64]) -> Result<Vec<f64>> {
    let mesh = space_q.mesh();
    let nq = quad.len();
    if weight.len() != mesh.num_cells() * nq {
        return Err(Error::Dimension("weight field does not match quadrature".into()));
    }
    let mut out = vec![0.0; space_q.num_dofs()];
    for c in 0..mesh.num_cells() {
        let cv = CellValues::new(mesh, c, space_q.family(), quad);
        for k in 0..nq {
            for (i, &node) in space_q.cell_nodes(c).iter().enumerate() {
                out[node] += cv.weights[k] * weight[c * nq + k] * cv.values[k][i];
            }
        }
    }
    Ok(out)
}

/// `(f, phi_i)` for every velocity dof.
pub fn assemble_body_force<F>(space_v: &FunctionSpace, quad: &QuadratureRule, force: &F) -> Result<Vec<f64>>
where
    F: Fn(Point) -> Result<[f64; 2]> + Sync + ?Sized,
{
    let mesh = space_v.mesh();
    let blocks: Vec<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let cv = CellValues::new(mesh, c, space_v.family(), quad);
            let mut block = vec![0.0; 2 * cv.n_local];
            for k in 0..quad.len() {
                let f = force(cv.points[k])?;
                for a in 0..cv.n_local {
                    let w = cv.weights[k] * cv.values[k][a];
                    block[2 * a] += w * f[0];
                    block[2 * a + 1] += w * f[1];
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; space_v.num_dofs()];
    for (c, block) in blocks.iter().enumerate() {
        for (a, &node) in space_v.cell_nodes(c).iter().enumerate() {
            out[2 * node] += block[2 * a];
            out[2 * node + 1] += block[2 * a + 1];
        }
    }
    Ok(out)
}

/// Nonlinear viscous residual `a(u_k)(phi_i) = int nu(Du_k) Du_k : D phi_i`.
pub fn assemble_viscous_residual(
    u_k: &[f64],
    space_v: &FunctionSpace,
    params: &PhysicalParams,
    quad: &QuadratureRule,
) -> Result<Vec<f64>> {
    check_velocity(space_v, u_k)?;
    let mesh = space_v.mesh();
    let blocks: Vec<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let cv = CellValues::new(mesh, c, space_v.family(), quad);
            let coeffs = local_velocity(space_v, c, u_k);
            let mut block = vec![0.0; 2 * cv.n_local];
            for k in 0..quad.len() {
                let du = SymTensor2::sym(gradient_at(&cv, k, &coeffs));
                let nu = viscosity(&du, params)?;
                for a in 0..cv.n_local {
                    for comp in 0..2 {
                        block[comp + 2 * a] +=
                            cv.weights[k] * nu * du.ddot(&basis_strain(cv.grads[k][a], comp));
                    }
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; space_v.num_dofs()];
    for (c, block) in blocks.iter().enumerate() {
        for (a, &node) in space_v.cell_nodes(c).iter().enumerate() {
            out[2 * node] += block[2 * a];
            out[2 * node + 1] += block[2 * a + 1];
        }
    }
    Ok(out)
}

/// Right-hand side of the Newton/Picard update equations at `(u_k, p_k)`:
///
/// `F = (f, phi) - a(u_k)(phi) - B^T p_k`, `G = -B u_k`.
///
/// Natural (stress-free) boundary terms are omitted. Constraints are applied
/// separately.
pub fn assemble_rhs<F>(
    u_k: &[f64],
    p_k: &[f64],
    space_v: &FunctionSpace,
    b: &CsrMatrix,
    params: &PhysicalParams,
    force: &F,
    quad: &QuadratureRule,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(Point) -> Result<[f64; 2]> + Sync + ?Sized,
{
    if p_k.len() != b.rows() {
        return Err(Error::Dimension("pressure vector does not match B".into()));
    }
    let mut f = assemble_body_force(space_v, quad, force)?;
    let visc = assemble_viscous_residual(u_k, space_v, params, quad)?;
    let btp = mul_transpose_vec(b, p_k);
    for i in 0..f.len() {
        f[i] -= visc[i] + btp[i];
    }
    let g = mul_vec(b, u_k).into_iter().map(|v| -v).collect();
    Ok((f, g))
}
