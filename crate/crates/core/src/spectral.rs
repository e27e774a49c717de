//! Dense spectral analysis of the preconditioned Schur complement and the
//! discrete inf-sup constants.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_vector_laplacian, assemble_weighted_load, strain_rate_maxnorm, viscosity_field};
use crate::fem::{Linearization, PhysicalParams, StokesElement};
use crate::linalg::dense::{generalized_eigs, summarize_spectrum, DEFAULT_DENSE_CAP};
use crate::linalg::sparse::{mul_vec, to_dense, CsrMatrix};
use crate::linalg::SparseCholesky;
use crate::precond::SchurChoice;
use crate::solver::{nonlinear_solve, NonlinearState, Problem, SolverConfig};

/// Pressure-space vectors whose Euclidean orthogonal complement is the space
/// on which an eigenproblem is posed. A vector `w` with `w_i = int c psi_i`
/// encodes the constraint `(q, c) = 0`.
#[derive(Clone, Debug, Default)]
pub struct DeflationSet {
    vectors: Vec<DVector<f64>>,
}

impl DeflationSet {
    pub fn empty() -> Self {
        DeflationSet::default()
    }

    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let vectors: Vec<DVector<f64>> = vectors.into_iter().map(DVector::from_vec).collect();
        if let Some(first) = vectors.first() {
            if vectors.iter().any(|v| v.len() != first.len()) {
                return Err(Error::Dimension("deflation vectors differ in length".into()));
            }
        }
        // Gram determinant test for independence
        let k = vectors.len();
        if k > 0 {
            let gram = DMatrix::from_fn(k, k, |i, j| vectors[i].dot(&vectors[j]) / (vectors[i].norm() * vectors[j].norm()));
            if gram.determinant() < 1e-12 {
                return Err(Error::InvalidArgument("deflation vectors are linearly dependent".into()));
            }
        }
        Ok(DeflationSet { vectors })
    }

    /// `w = W 1` for a pressure Gram matrix `W` (`M` or `M_nu`).
    pub fn constant(weight: &CsrMatrix) -> Self {
        DeflationSet {
            vectors: vec![DVector::from_vec(mul_vec(weight, &vec![1.0; weight.cols()]))],
        }
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn check_cap(m: usize, cap: usize) -> Result<()> {
    if m > cap {
        Err(Error::DenseCapExceeded { size: m, cap })
    } else {
        Ok(())
    }
}

/// `S = B A^-1 B^T` with an existing factorization of `A`, symmetrized.
pub fn schur_complement_with(a: &SparseCholesky, b: &CsrMatrix, cap: usize) -> Result<DMatrix<f64>> {
    let m = b.rows();
    check_cap(m, cap)?;
    if b.cols() != a.dim() {
        return Err(Error::Dimension("B and A have incompatible sizes".into()));
    }
    let rows: Vec<Vec<(usize, f64)>> = b
        .outer_iterator()
        .map(|r| r.iter().map(|(j, &v)| (j, v)).collect())
        .collect();
    let columns: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|entries| mul_vec(b, &a.solve_sparse(entries)))
        .collect();
    let mut s = DMatrix::zeros(m, m);
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            s[(i, j)] = *v;
        }
    }
    Ok((&s + s.transpose()) * 0.5)
}

pub fn schur_complement(a: &CsrMatrix, b: &CsrMatrix, cap: usize) -> Result<DMatrix<f64>> {
    check_cap(b.rows(), cap)?;
    schur_complement_with(&SparseCholesky::new(a)?, b, cap)
}

/// Ascending eigenvalues of `S x = lambda S~ x` on the complement of the
/// deflation set.
pub fn eigenvalues(s: &DMatrix<f64>, s_tilde: &CsrMatrix, deflation: &DeflationSet) -> Result<Vec<f64>> {
    generalized_eigs(s, &to_dense(s_tilde), deflation.vectors())
}

/// Theoretical eigenvalue bounds for `S~^-1 S`.
///
/// For `S~ = M`: `c0^2 eps^(2-p) / nu0` and
/// `(eps^2 + max_strain^2)^((2-p)/2) / (nu0 (1 + gamma (p-2)))`.
/// For `S~ = M_nu`: `c_nu^2` and `d / (1 + gamma (p-2))`.
pub fn theoretical_bounds(
    params: &PhysicalParams,
    c0: f64,
    c_nu: f64,
    max_strain: f64,
    schur: SchurChoice,
    d: usize,
) -> (f64, f64) {
    let p = params.p_power;
    let factor = params.newton_factor();
    match schur {
        SchurChoice::Mass => (
            c0 * c0 * params.eps.powf(2.0 - p) / params.nu0,
            (params.eps * params.eps + max_strain * max_strain).powf(0.5 * (2.0 - p)) / (params.nu0 * factor),
        ),
        SchurChoice::ScaledMass => (c_nu * c_nu, d as f64 / factor),
    }
}

/// `sqrt(lambda_min)` of `B K^-1 B^T q = lambda M_Q q` on the complement of
/// the deflation set (near-kernel eigenvalues ignored).
pub fn infsup_constant(k: &CsrMatrix, b: &CsrMatrix, m_q: &CsrMatrix, deflation: &DeflationSet, cap: usize) -> Result<f64> {
    let s = schur_complement(k, b, cap)?;
    let vals = eigenvalues(&s, m_q, deflation)?;
    Ok(summarize_spectrum(&vals)?.lambda_min_nonzero.sqrt())
}

/// Which constraints define the pressure space of `c_nu`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CnuDeflation {
    /// Only `(q, nu^-1) = 0`, the complement of the kernel of `S` in the
    /// `M_nu` inner product.
    Kernel,
    /// Both `(q, nu^-1) = 0` and `(q, nu^-1/2) = 0`.
    Both,
}

/// `c0` from the vector Laplacian and the pressure mass matrix.
pub fn infsup_c0(problem: &Problem, cap: usize) -> Result<f64> {
    let lap = assemble_vector_laplacian(&problem.space_v, &problem.quad)?;
    let (k, b) = problem.constrain(&lap)?;
    let defl = if problem.has_pressure_kernel() {
        DeflationSet::constant(&problem.mass)
    } else {
        DeflationSet::empty()
    };
    infsup_constant(&k, &b, &problem.mass, &defl, cap)
}

/// `c_nu` from the Picard operator and `M_nu` at the velocity `u_k`.
pub fn infsup_cnu(problem: &Problem, u_k: &[f64], mode: CnuDeflation, cap: usize) -> Result<f64> {
    let (k, b) = problem.operator(u_k, Linearization::Picard)?;
    let m_nu = problem.scaled_mass(u_k)?;
    let defl = cnu_deflation(problem, u_k, &m_nu, mode)?;
    infsup_constant(&k, &b, &m_nu, &defl, cap)
}

fn cnu_deflation(problem: &Problem, u_k: &[f64], m_nu: &CsrMatrix, mode: CnuDeflation) -> Result<DeflationSet> {
    if !problem.has_pressure_kernel() {
        return Ok(DeflationSet::empty());
    }
    let mut set = DeflationSet::constant(m_nu);
    if mode == CnuDeflation::Both {
        let nu = viscosity_field(u_k, &problem.space_v, &problem.params, &problem.quad)?;
        let w: Vec<f64> = nu.iter().map(|v| v.powf(-0.5)).collect();
        let rep = assemble_weighted_load(&problem.space_q, &problem.quad, &w)?;
        set.vectors.push(DVector::from_vec(rep));
    }
    Ok(set)
}

/// Spectral data of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    pub eps: f64,
    pub schur: SchurChoice,
    pub method: Linearization,
    pub element: StokesElement,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    pub c0: f64,
    pub c_nu: f64,
    pub max_strain: f64,
    pub nonlinear_iters: usize,
    pub gmres_iters_mean: f64,
    pub converged: bool,
    /// All eigenvalues of the deflated pencil, ascending.
    pub eigenvalues: Vec<f64>,
}

impl SpectralReport {
    /// Whether the extremes lie within the bounds up to relative slack `rel`.
    pub fn contained(&self, rel: f64) -> bool {
        self.lambda_min >= self.bound_lower * (1.0 - rel) && self.lambda_max <= self.bound_upper * (1.0 + rel)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub dense_cap: usize,
    pub cnu_deflation: CnuDeflation,
    pub dim: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            dense_cap: DEFAULT_DENSE_CAP,
            cnu_deflation: CnuDeflation::Both,
            dim: 2,
        }
    }
}

/// Spectra of the preconditioned Schur complement at a given iterate.
#[derive(Clone, Debug)]
pub struct IterateSpectra {
    pub max_strain: f64,
    pub c_nu: f64,
    /// `(choice, eigenvalues)` for each requested choice.
    pub spectra: Vec<(SchurChoice, Vec<f64>)>,
}

/// Assembles `S = B A^-1 B^T` at `u` with the given linearization and
/// computes the requested spectra and `c_nu`.
pub fn spectra_at(
    problem: &Problem,
    u: &[f64],
    method: Linearization,
    choices: &[SchurChoice],
    options: &SweepOptions,
) -> Result<IterateSpectra> {
    let (a, b) = problem.operator(u, method)?;
    let s = schur_complement(&a, &b, options.dense_cap)?;
    let m_nu = problem.scaled_mass(u)?;
    let kernel = problem.has_pressure_kernel();
    let mut spectra = Vec::with_capacity(choices.len());
    for &choice in choices {
        let s_tilde = match choice {
            SchurChoice::Mass => &problem.mass,
            SchurChoice::ScaledMass => &m_nu,
        };
        let defl = if kernel {
            DeflationSet::constant(s_tilde)
        } else {
            DeflationSet::empty()
        };
        spectra.push((choice, eigenvalues(&s, s_tilde, &defl)?));
    }
    let c_nu = infsup_cnu(problem, u, options.cnu_deflation, options.dense_cap)?;
    Ok(IterateSpectra {
        max_strain: strain_rate_maxnorm(u, &problem.space_v, &problem.quad)?,
        c_nu,
        spectra,
    })
}

/// Result of one sweep point: the nonlinear state of the first requested
/// Schur choice and one report per choice.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub eps: f64,
    pub state: NonlinearState,
    pub reports: Vec<SpectralReport>,
}

/// Solves the problem at one `eps` and reports the spectra of `S~^-1 S` at
/// the final iterate. For every choice of `S~` a separate nonlinear solve
/// preconditioned with that choice supplies the iteration counts; the
/// spectra of all choices are evaluated at the iterate of the first solve.
pub fn sweep_point(
    problem: &Problem,
    eps: f64,
    choices: &[SchurChoice],
    config: &SolverConfig,
    c0: f64,
    options: &SweepOptions,
) -> Result<SweepPoint> {
    if choices.is_empty() {
        return Err(Error::InvalidArgument("no Schur approximation selected".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let prob = problem.with_eps(eps)?;
    let mut states: Vec<NonlinearState> = choices
        .iter()
        .map(|&schur| nonlinear_solve(&prob, &SolverConfig { schur, ..*config }))
        .collect::<Result<_>>()?;
    let spec = spectra_at(&prob, &states[0].u, config.method, choices, options)?;
    let params = prob.params.with_linearization(config.method);
    let mut reports = Vec::with_capacity(choices.len());
    for ((choice, vals), state) in spec.spectra.into_iter().zip(&states) {
        let summary = summarize_spectrum(&vals)?;
        let (lo, hi) = theoretical_bounds(&params, c0, spec.c_nu, spec.max_strain, choice, options.dim);
        reports.push(SpectralReport {
            eps,
            schur: choice,
            method: config.method,
            element: prob.element,
            lambda_min: summary.lambda_min_nonzero,
            lambda_max: summary.lambda_max,
            bound_lower: lo,
            bound_upper: hi,
            c0,
            c_nu: spec.c_nu,
            max_strain: spec.max_strain,
            nonlinear_iters: state.iterations,
            gmres_iters_mean: state.gmres_iters_mean(),
            converged: state.converged,
            eigenvalues: vals,
        });
    }
    Ok(SweepPoint {
        eps,
        state: states.swap_remove(0),
        reports,
    })
}

/// [`sweep_point`] for every entry of `eps_list`, in order.
pub fn spectral_sweep(
    problem: &Problem,
    eps_list: &[f64],
    choices: &[SchurChoice],
    config: &SolverConfig,
    c0: f64,
    options: &SweepOptions,
) -> Result<Vec<SweepPoint>> {
    eps_list
        .iter()
        .map(|&eps| sweep_point(problem, eps, choices, config, c0, options))
        .collect()
}
