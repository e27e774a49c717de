//! Block-triangular preconditioning of the saddle-point system
//!
//! ```text
//! [A  B^T] [du]   [f]        P = [A~  0  ]
//! [B  0  ] [dp] = [g]            [B  -S~ ]
//! ```
//!
//! with `A~ = A` applied by sparse Cholesky and `S~` either the pressure mass
//! matrix or its viscosity-scaled variant.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::gmres::{gmres, GmresConfig};
use crate::linalg::sparse::{dot, spmv, spmv_transpose_add, CsrMatrix};
use crate::linalg::SparseCholesky;

/// Choice of the Schur-complement approximation `S~`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchurChoice {
    /// Pressure mass matrix `M`.
    Mass,
    /// Viscosity-scaled pressure mass matrix `M_nu`.
    ScaledMass,
}

impl SchurChoice {
    pub fn name(self) -> &'static str {
        match self {
            SchurChoice::Mass => "m",
            SchurChoice::ScaledMass => "mnu",
        }
    }

    pub const ALL: [SchurChoice; 2] = [SchurChoice::Mass, SchurChoice::ScaledMass];
}

impl fmt::Display for SchurChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchurChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m" | "mass" => Ok(SchurChoice::Mass),
            "mnu" | "m_nu" | "scaled" => Ok(SchurChoice::ScaledMass),
            other => Err(format!("unknown Schur approximation '{other}' (expected m or mnu)")),
        }
    }
}

/// Projection `q <- q - (w.q / w.1) 1` removing the constant pressure mode
/// while keeping `w.q = 0`.
#[derive(Clone, Debug)]
pub struct ConstantProjection {
    w: Vec<f64>,
    w_sum: f64,
}

impl ConstantProjection {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        let w_sum: f64 = w.iter().sum();
        if !(w_sum.abs() > 0.0) {
            return Err(Error::InvalidArgument("projection weight has zero sum".into()));
        }
        Ok(ConstantProjection { w, w_sum })
    }

    pub fn apply(&self, q: &mut [f64]) {
        let s = dot(&self.w, q) / self.w_sum;
        for qi in q.iter_mut() {
            *qi -= s;
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockPreconditioner {
    a_solver: Arc<SparseCholesky>,
    s_solver: SparseCholesky,
    b: CsrMatrix,
    projection: Option<ConstantProjection>,
}

impl BlockPreconditioner {
    pub fn new(a: &CsrMatrix, b: &CsrMatrix, s_tilde: &CsrMatrix, projection: Option<ConstantProjection>) -> Result<Self> {
        Self::with_factor(Arc::new(SparseCholesky::new(a)?), b, s_tilde, projection)
    }

    /// Reuses an existing factorization of `A`.
    pub fn with_factor(
        a_solver: Arc<SparseCholesky>,
        b: &CsrMatrix,
        s_tilde: &CsrMatrix,
        projection: Option<ConstantProjection>,
    ) -> Result<Self> {
        if b.cols() != a_solver.dim() || s_tilde.rows() != b.rows() || s_tilde.cols() != b.rows() {
            return Err(Error::Dimension("preconditioner blocks have inconsistent sizes".into()));
        }
        Ok(BlockPreconditioner {
            a_solver,
            s_solver: SparseCholesky::new(s_tilde)?,
            b: b.clone(),
            projection,
        })
    }

    pub fn n(&self) -> usize {
        self.b.cols()
    }

    pub fn m(&self) -> usize {
        self.b.rows()
    }

    pub fn a_solver(&self) -> &Arc<SparseCholesky> {
        &self.a_solver
    }

    /// `z_u = A~^-1 r_u`, `z_p = S~^-1 (B z_u - r_p)`, then the constant mode
    /// is projected out of `z_p` when a projection is configured.
    pub fn apply(&self, r_u: &[f64], r_p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z_u = self.a_solver.solve(r_u);
        let mut t = vec![0.0; self.m()];
        spmv(&self.b, &z_u, &mut t);
        for (ti, ri) in t.iter_mut().zip(r_p) {
            *ti -= ri;
        }
        let mut z_p = self.s_solver.solve(&t);
        if let Some(proj) = &self.projection {
            proj.apply(&mut z_p);
        }
        (z_u, z_p)
    }

    fn apply_stacked(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n();
        let (zu, zp) = self.apply(&r[..n], &r[n..]);
        z[..n].copy_from_slice(&zu);
        z[n..].copy_from_slice(&zp);
    }
}

/// Outcome of one preconditioned Krylov solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Final preconditioned relative residual.
    pub residual: f64,
    pub converged: bool,
    pub breakdown: bool,
}

/// `y = [A B^T; B 0] x`.
pub fn saddle_apply(a: &CsrMatrix, b: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    let n = a.rows();
    let (xu, xp) = x.split_at(n);
    let (yu, yp) = y.split_at_mut(n);
    spmv(a, xu, yu);
    spmv_transpose_add(b, xp, yu);
    spmv(b, xu, yp);
}

/// Solves the saddle-point system with left-preconditioned GMRES.
pub fn gmres_solve(
    a: &CsrMatrix,
    b: &CsrMatrix,
    f: &[f64],
    g: &[f64],
    pc: &BlockPreconditioner,
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, Vec<f64>, KrylovReport)> {
    let n = a.rows();
    if f.len() != n || g.len() != b.rows() || b.cols() != n || pc.n() != n || pc.m() != b.rows() {
        return Err(Error::Dimension("saddle-point system sizes are inconsistent".into()));
    }
    let rhs: Vec<f64> = f.iter().chain(g).copied().collect();
    let out = gmres(
        |x, y| saddle_apply(a, b, x, y),
        |r, z| pc.apply_stacked(r, z),
        &rhs,
        None,
        cfg,
    );
    if !out.x.iter().all(|v| v.is_finite()) {
        return Err(Error::LinearSolver("GMRES produced non-finite values".into()));
    }
    let du = out.x[..n].to_vec();
    let mut dp = out.x[n..].to_vec();
    if let Some(proj) = &pc.projection {
        proj.apply(&mut dp);
    }
    Ok((
        du,
        dp,
        KrylovReport {
            iterations: out.iterations,
            residual: out.residual,
            converged: out.converged,
            breakdown: out.breakdown,
        },
    ))
}
