//! Runtime checks of the norm and coercivity inequalities that underpin the
//! eigenvalue bounds.
//!
//! Each check is reported as a pair `lhs <= rhs` so callers can decide on
//! a tolerance and print the margin.

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_operator, velocity_gradients};
use crate::fem::{FunctionSpace, Linearization, PhysicalParams, QuadratureRule};
use crate::linalg::sparse::quadratic_form;

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl InequalityCheck {
    /// `lhs <= rhs` up to `rel` times the larger magnitude.
    pub fn holds(&self, rel: f64) -> bool {
        self.lhs <= self.rhs + rel * self.lhs.abs().max(self.rhs.abs())
    }
}

/// Squared L2 norms of the divergence, symmetric gradient and full gradient
/// of a velocity field, integrated with `quad`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityNorms {
    pub div_sq: f64,
    pub strain_sq: f64,
    pub grad_sq: f64,
}

pub fn velocity_norms(space: &FunctionSpace, quad: &QuadratureRule, v: &[f64]) -> Result<VelocityNorms> {
    let mut out = VelocityNorms {
        div_sq: 0.0,
        strain_sq: 0.0,
        grad_sq: 0.0,
    };
    for q in velocity_gradients(space, quad, v)? {
        let g = q.grad;
        out.div_sq += q.weight * q.divergence().powi(2);
        out.strain_sq += q.weight * q.strain().norm_sq();
        out.grad_sq += q.weight * (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2));
    }
    Ok(out)
}

/// Norm inequalities for a field `v` that vanishes on the Dirichlet boundary:
/// `||div v|| <= ||Dv|| <= ||grad v||`.
pub fn norm_inequalities(space: &FunctionSpace, quad: &QuadratureRule, v: &[f64]) -> Result<Vec<InequalityCheck>> {
    let n = velocity_norms(space, quad, v)?;
    Ok(vec![
        InequalityCheck {
            name: "div <= strain",
            lhs: n.div_sq.sqrt(),
            rhs: n.strain_sq.sqrt(),
        },
        InequalityCheck {
            name: "strain <= grad",
            lhs: n.strain_sq.sqrt(),
            rhs: n.grad_sq.sqrt(),
        },
    ])
}

/// Pointwise `(div v)^2 <= d |Dv|^2` (worst quadrature point) and its
/// viscosity-weighted integral form with `nu` evaluated at `u_k`.
pub fn divergence_inequalities(
    space: &FunctionSpace,
    quad: &QuadratureRule,
    params: &PhysicalParams,
    u_k: &[f64],
    v: &[f64],
) -> Result<Vec<InequalityCheck>> {
    let d = 2.0;
    let gv = velocity_gradients(space, quad, v)?;
    let gu = velocity_gradients(space, quad, u_k)?;
    let mut worst = InequalityCheck {
        name: "pointwise div^2 <= d |Dv|^2",
        lhs: 0.0,
        rhs: 0.0,
    };
    let mut worst_gap = f64::NEG_INFINITY;
    let (mut wdiv, mut wstrain) = (0.0, 0.0);
    for (qv, qu) in gv.iter().zip(&gu) {
        let lhs = qv.divergence().powi(2);
        let rhs = d * qv.strain().norm_sq();
        let gap = (lhs - rhs) / lhs.abs().max(rhs).max(f64::MIN_POSITIVE);
        if gap > worst_gap {
            worst_gap = gap;
            worst.lhs = lhs;
            worst.rhs = rhs;
        }
        let nu = params.viscosity_and_derivative(&qu.strain())?.0;
        wdiv += qv.weight * nu * lhs;
        wstrain += qv.weight * nu * qv.strain().norm_sq();
    }
    Ok(vec![
        worst,
        InequalityCheck {
            name: "||nu^1/2 div v|| <= sqrt(d) ||nu^1/2 Dv||",
            lhs: wdiv.sqrt(),
            rhs: (d * wstrain).sqrt(),
        },
    ])
}

/// Coercivity and continuity of the linearized operators at `u_k`:
/// `(p-1) a_P(v,v) <= a_N(v,v) <= a_P(v,v) <= nu_max ||Dv||^2`.
pub fn operator_inequalities(
    space: &FunctionSpace,
    quad: &QuadratureRule,
    params: &PhysicalParams,
    u_k: &[f64],
    v: &[f64],
) -> Result<Vec<InequalityCheck>> {
    if v.len() != space.num_dofs() {
        return Err(Error::Dimension("test field has wrong length".into()));
    }
    let a_p = assemble_operator(u_k, space, &params.with_linearization(Linearization::Picard), quad)?;
    let a_n = assemble_operator(u_k, space, &params.with_linearization(Linearization::Newton), quad)?;
    let qp = quadratic_form(&a_p, v);
    let qn = quadratic_form(&a_n, v);
    let strain_sq = velocity_norms(space, quad, v)?.strain_sq;
    Ok(vec![
        InequalityCheck {
            name: "(p-1) a_P <= a_N",
            lhs: (params.p_power - 1.0) * qp,
            rhs: qn,
        },
        InequalityCheck {
            name: "a_N <= a_P",
            lhs: qn,
            rhs: qp,
        },
        InequalityCheck {
            name: "a_P <= nu_max ||Dv||^2",
            lhs: qp,
            rhs: params.nu_max() * strain_sq,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::StokesElement;
    use crate::mesh::square_mesh;
    use std::sync::Arc;

    #[test]
    fn rigid_rotation_has_zero_strain() {
        let mesh = Arc::new(square_mesh(2, [0.0, 0.0], [1.0, 1.0]).unwrap());
        let space = FunctionSpace::new(mesh, StokesElement::P2P1.velocity_family(), 2);
        let quad = QuadratureRule::with_degree(5).unwrap();
        let v = space.interpolate(|x| vec![-x[1], x[0]]);
        let n = velocity_norms(&space, &quad, &v).unwrap();
        assert!(n.div_sq.abs() < 1e-24);
        assert!(n.strain_sq.abs() < 1e-24);
        // |grad v|^2 = 2 on the unit square
        assert!((n.grad_sq - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_saturates_pointwise_bound() {
        let mesh = Arc::new(square_mesh(2, [0.0, 0.0], [1.0, 1.0]).unwrap());
        let space = FunctionSpace::new(mesh, StokesElement::P2P1.velocity_family(), 2);
        let quad = QuadratureRule::with_degree(5).unwrap();
        let v = space.interpolate(|x| vec![x[0], x[1]]);
        let params = PhysicalParams::new(1.0, 4.0 / 3.0, 0.1, Linearization::Newton).unwrap();
        let checks = divergence_inequalities(&space, &quad, &params, &v, &v).unwrap();
        // div v = 2 and |Dv|^2 = 2, so both sides equal 4
        assert!((checks[0].lhs - 4.0).abs() < 1e-12);
        assert!((checks[0].rhs - 4.0).abs() < 1e-12);
        assert!(checks.iter().all(|c| c.holds(1e-12)));
    }
}
