//! Outer Picard/Newton iteration for the p-Stokes problem and the
//! manufactured solution used to verify it.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::assembly::{
    assemble_divergence, assemble_mass, assemble_operator, assemble_rhs, assemble_scaled_mass, velocity_gradients,
};
use crate::fem::boundary::{Constraints, DirichletData};
use crate::fem::{FunctionSpace, Linearization, PhysicalParams, QuadratureRule, StokesElement};
use crate::fem::space::ElementFamily;
use crate::linalg::gmres::GmresConfig;
use crate::linalg::sparse::{mul_vec, norm, CsrMatrix};
use crate::mesh::{BoundaryTag, Mesh, Point};
use crate::precond::{gmres_solve, BlockPreconditioner, ConstantProjection, KrylovReport, SchurChoice};

/// Body force that may depend on the material parameters.
pub type ForceField = dyn Fn(Point, &PhysicalParams) -> Result<[f64; 2]> + Send + Sync;

/// Dirichlet data for the velocity.
pub type VelocityField = dyn Fn(Point) -> [f64; 2] + Send + Sync;

/// A discretized p-Stokes problem: spaces, boundary conditions, material law
/// and the iterate-independent matrices.
#[derive(Clone)]
pub struct Problem {
    pub element: StokesElement,
    pub space_v: FunctionSpace,
    pub space_q: FunctionSpace,
    pub quad: QuadratureRule,
    pub params: PhysicalParams,
    pub constraints: Constraints,
    force: Arc<ForceField>,
    /// Divergence matrix in the Cartesian frame, without constraints.
    pub b: CsrMatrix,
    pub mass: CsrMatrix,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("element", &self.element)
            .field("n_velocity", &self.space_v.num_dofs())
            .field("n_pressure", &self.space_q.num_dofs())
            .field("params", &self.params)
            .finish()
    }
}

/// The constrained linear system of one nonlinear step at `(u_k, p_k)`, in
/// the rotated frame.
#[derive(Clone, Debug)]
pub struct LinearizedSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Euclidean norm of `(f, g)`.
    pub residual: f64,
}

impl Problem {
    pub fn new(
        mesh: Arc<Mesh>,
        element: StokesElement,
        params: PhysicalParams,
        force: Arc<ForceField>,
        dirichlet: &DirichletData,
        quad: QuadratureRule,
    ) -> Result<Self> {
        params.validate()?;
        let space_v = FunctionSpace::new(mesh.clone(), element.velocity_family(), 2);
        let space_q = FunctionSpace::new(mesh, ElementFamily::P1, 1);
        let constraints = Constraints::new(&space_v, dirichlet)?;
        let b = assemble_divergence(&space_v, &space_q, &quad)?;
        let mass = assemble_mass(&space_q, &quad)?;
        Ok(Problem {
            element,
            space_v,
            space_q,
            quad,
            params,
            constraints,
            force,
            b,
            mass,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.space_v.mesh()
    }

    pub fn with_params(&self, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        let mut out = self.clone();
        out.params = params;
        Ok(out)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        self.with_params(self.params.with_eps(eps))
    }

    /// The pressure is determined up to a constant iff no part of the
    /// boundary is traction free.
    pub fn has_pressure_kernel(&self) -> bool {
        !self.mesh().has_tag(BoundaryTag::Surface)
    }

    pub fn force_at(&self, x: Point) -> Result<[f64; 2]> {
        (self.force)(x, &self.params)
    }

    /// `w = M 1`, the representer of `q -> int q`.
    pub fn mean_weight(&self) -> Vec<f64> {
        mul_vec(&self.mass, &vec![1.0; self.mass.cols()])
    }

    pub fn scaled_mass(&self, u_k: &[f64]) -> Result<CsrMatrix> {
        assemble_scaled_mass(&self.space_q, &self.space_v, u_k, &self.params, &self.quad)
    }

    /// Rotates and eliminates the constraints (homogeneous values) from a
    /// velocity operator, returning the constrained `(A, B)`.
    pub fn constrain(&self, a: &CsrMatrix) -> Result<(CsrMatrix, CsrMatrix)> {
        let (ar, br) = self.constraints.rotate_system(a, &self.b);
        let mut f = vec![0.0; ar.rows()];
        let mut g = vec![0.0; br.rows()];
        let zeros = vec![0.0; self.constraints.fixed_dofs().len()];
        self.constraints.eliminate(&ar, &br, &mut f, &mut g, &zeros)
    }

    /// Initial velocity: zero in the interior, Dirichlet values on the
    /// constrained dofs.
    pub fn initial_velocity(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.space_v.num_dofs()];
        for (&d, &v) in self.constraints.fixed_dofs().iter().zip(self.constraints.values()) {
            r[d] = v;
        }
        self.constraints.unrotate(&r)
    }

    /// Assembles the constrained update system at `(u_k, p_k)`.
    pub fn linearize(&self, u_k: &[f64], p_k: &[f64], lin: Linearization) -> Result<LinearizedSystem> {
        let params = self.params.with_linearization(lin);
        let a = assemble_operator(u_k, &self.space_v, &params, &self.quad)?;
        let force = |x: Point| (self.force)(x, &params);
        let (f, mut g) = assemble_rhs(u_k, p_k, &self.space_v, &self.b, &params, &force, &self.quad)?;
        let (ar, br) = self.constraints.rotate_system(&a, &self.b);
        let mut f = self.constraints.rotate(&f);
        let d = self.constraints.increments(u_k);
        let (a, b) = self.constraints.eliminate(&ar, &br, &mut f, &mut g, &d)?;
        if self.has_pressure_kernel() {
            // the range of the constrained B is orthogonal to the constants
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            for gi in g.iter_mut() {
                *gi -= mean;
            }
        }
        let residual = f.iter().chain(&g).map(|v| v * v).sum::<f64>().sqrt();
        Ok(LinearizedSystem { a, b, f, g, residual })
    }

    /// Constrained operator at `u_k` without right-hand side.
    pub fn operator(&self, u_k: &[f64], lin: Linearization) -> Result<(CsrMatrix, CsrMatrix)> {
        let a = assemble_operator(u_k, &self.space_v, &self.params.with_linearization(lin), &self.quad)?;
        self.constrain(&a)
    }

    fn projection(&self) -> Result<Option<ConstantProjection>> {
        if self.has_pressure_kernel() {
            Ok(Some(ConstantProjection::new(self.mean_weight())?))
        } else {
            Ok(None)
        }
    }

    /// Solves one linearized step with the block preconditioner, returning
    /// the Cartesian-frame velocity and pressure updates.
    pub fn solve_step(
        &self,
        sys: &LinearizedSystem,
        u_k: &[f64],
        schur: SchurChoice,
        gmres: &GmresConfig,
    ) -> Result<(Vec<f64>, Vec<f64>, KrylovReport)> {
        let s_tilde = match schur {
            SchurChoice::Mass => self.mass.clone(),
            SchurChoice::ScaledMass => self.scaled_mass(u_k)?,
        };
        let pc = BlockPreconditioner::new(&sys.a, &sys.b, &s_tilde, self.projection()?)?;
        let (du, dp, rep) = gmres_solve(&sys.a, &sys.b, &sys.f, &sys.g, &pc, gmres)?;
        Ok((self.constraints.unrotate(&du), dp, rep))
    }

    /// Shifts a pressure to zero mean when it is only defined up to a constant.
    pub fn normalize_pressure(&self, p: &mut [f64]) {
        if self.has_pressure_kernel() {
            let w = self.mean_weight();
            let s = crate::linalg::sparse::dot(&w, p) / w.iter().sum::<f64>();
            for pi in p.iter_mut() {
                *pi -= s;
            }
        }
    }
}

/// Initial iterations before the configured method takes over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WarmStart {
    Zero,
    /// At most `count` Picard steps, stopping early once the residual has
    /// dropped by `r_tol` relative to the initial one.
    PicardSteps { count: usize, r_tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Linearization,
    pub r_tol: f64,
    pub a_tol: f64,
    pub max_iters: usize,
    pub warm_start: WarmStart,
    pub schur: SchurChoice,
    pub gmres: GmresConfig,
}

impl SolverConfig {
    /// Defaults for a method: Newton is warm started with five Picard steps
    /// at relative tolerance 1e-2.
    pub fn for_method(method: Linearization) -> Self {
        let warm_start = match method {
            Linearization::Picard => WarmStart::Zero,
            Linearization::Newton => WarmStart::PicardSteps { count: 5, r_tol: 1e-2 },
        };
        SolverConfig {
            method,
            r_tol: 1e-6,
            a_tol: 1e-10,
            max_iters: 200,
            warm_start,
            schur: SchurChoice::ScaledMass,
            gmres: GmresConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_tol > 0.0 && self.a_tol > 0.0 && self.gmres.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if let WarmStart::PicardSteps { r_tol, .. } = self.warm_start {
            if !(r_tol > 0.0) {
                return Err(Error::InvalidArgument("warm start tolerance must be positive".into()));
            }
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::for_method(Linearization::Newton)
    }
}

/// Iterate and history of the nonlinear solve.
#[derive(Clone, Debug)]
pub struct NonlinearState {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Number of updates applied.
    pub iterations: usize,
    /// Residual norm at every visited iterate, starting with the initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// GMRES iterations per update.
    pub krylov: Vec<KrylovReport>,
    /// Updates performed with the Picard warm start.
    pub warm_start_steps: usize,
}

impl NonlinearState {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }

    pub fn relative_residual(&self) -> f64 {
        self.final_residual() / self.residual_history[0]
    }

    pub fn gmres_iters_mean(&self) -> f64 {
        if self.krylov.is_empty() {
            return 0.0;
        }
        self.krylov.iter().map(|k| k.iterations as f64).sum::<f64>() / self.krylov.len() as f64
    }
}

/// Runs the Picard or Newton iteration from the initial velocity of the
/// problem and zero pressure. Non-convergence is reported through
/// `converged = false`, not as an error.
pub fn nonlinear_solve(problem: &Problem, config: &SolverConfig) -> Result<NonlinearState> {
    nonlinear_solve_from(problem, config, problem.initial_velocity(), vec![0.0; problem.space_q.num_dofs()])
}

pub fn nonlinear_solve_from(problem: &Problem, config: &SolverConfig, u0: Vec<f64>, p0: Vec<f64>) -> Result<NonlinearState> {
    config.validate()?;
    let mut state = NonlinearState {
        u: u0,
        p: p0,
        iterations: 0,
        residual_history: Vec::new(),
        converged: false,
        krylov: Vec::new(),
        warm_start_steps: 0,
    };
    let (warm_count, warm_tol) = match config.warm_start {
        WarmStart::Zero => (0, 0.0),
        WarmStart::PicardSteps { count, r_tol } => (count, r_tol),
    };
    let mut warm = warm_count > 0 && config.method != Linearization::Picard;
    let mut r0 = f64::NAN;
    loop {
        if warm && state.warm_start_steps >= warm_count {
            warm = false;
        }
        let lin = if warm { Linearization::Picard } else { config.method };
        let sys = problem.linearize(&state.u, &state.p, lin)?;
        if state.residual_history.is_empty() {
            r0 = sys.residual;
        }
        state.residual_history.push(sys.residual);
        if sys.residual <= (config.r_tol * r0).max(config.a_tol) {
            state.converged = true;
            break;
        }
        if warm && sys.residual <= warm_tol * r0 {
            // warm start target reached; re-linearize with the main method
            warm = false;
            state.residual_history.pop();
            continue;
        }
        if state.iterations >= config.max_iters {
            break;
        }
        let (du, dp, rep) = problem.solve_step(&sys, &state.u, config.schur, &config.gmres)?;
        for (u, d) in state.u.iter_mut().zip(&du) {
            *u += d;
        }
        for (p, d) in state.p.iter_mut().zip(&dp) {
            *p += d;
        }
        state.krylov.push(rep);
        state.iterations += 1;
        if warm {
            state.warm_start_steps += 1;
        }
    }
    problem.normalize_pressure(&mut state.p);
    Ok(state)
}

/// Manufactured solution `u = r^(a-1) (y, -x)`, `pi = r^b` on a domain
/// containing the origin, with `a = 1 + delta` and `b = -1 + 2/p + delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedSolution {
    pub delta: f64,
    pub p_power: f64,
}

impl ManufacturedSolution {
    pub fn new(delta: f64, p_power: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        if !(p_power > 1.0 && p_power <= 2.0) {
            return Err(Error::InvalidArgument(format!("p must lie in (1, 2], got {p_power}")));
        }
        Ok(ManufacturedSolution { delta, p_power })
    }

    pub fn a(&self) -> f64 {
        1.0 + self.delta
    }

    pub fn b(&self) -> f64 {
        -1.0 + 2.0 / self.p_power + self.delta
    }
}

/// Exact velocity and pressure.
pub fn ms_exact(x: f64, y: f64, ms: &ManufacturedSolution) -> Result<([f64; 2], f64)> {
    let r = x.hypot(y);
    let alpha = ms.a() - 1.0;
    if r == 0.0 {
        if ms.b() < 0.0 || alpha < 0.0 {
            return Err(Error::SingularPoint("manufactured solution evaluated at the origin".into()));
        }
        let pi = if ms.b() == 0.0 { 1.0 } else { 0.0 };
        return Ok(([0.0, 0.0], pi));
    }
    let ra = r.powf(alpha);
    Ok(([ra * y, -ra * x], r.powf(ms.b())))
}

/// Exact velocity gradient `g[i][j] = d u_i / d x_j`.
pub fn ms_gradient(x: f64, y: f64, ms: &ManufacturedSolution) -> Result<[[f64; 2]; 2]> {
    let r = x.hypot(y);
    if r == 0.0 {
        return Err(Error::SingularPoint("velocity gradient at the origin".into()));
    }
    let alpha = ms.a() - 1.0;
    let ra = r.powf(alpha);
    let k = alpha * ra / (r * r);
    Ok([[k * x * y, k * y * y + ra], [-k * x * x - ra, -k * x * y]])
}

/// `f = grad pi - div(nu(Du) Du)` for the manufactured solution.
pub fn ms_body_force(x: f64, y: f64, ms: &ManufacturedSolution, params: &PhysicalParams) -> Result<[f64; 2]> {
    let r = x.hypot(y);
    if r == 0.0 {
        return Err(Error::SingularPoint("body force at the origin".into()));
    }
    let alpha = ms.a() - 1.0;
    let p = params.p_power;
    // Du = K(r) T(x, y) with T = [[xy, (y^2-x^2)/2], [., -xy]], div T = 2 (y, -x),
    // T (x, y)^T = r^2/2 (y, -x), so div(phi T) = (phi' r / 2 + 2 phi) (y, -x)
    let k = alpha * r.powf(alpha - 2.0);
    let dk = alpha * (alpha - 2.0) * r.powf(alpha - 3.0);
    let q = params.eps * params.eps + 0.5 * alpha * alpha * r.powf(2.0 * alpha);
    if q == 0.0 && p != 2.0 {
        return Err(Error::SingularViscosity);
    }
    let nu = if p == 2.0 { params.nu0 } else { params.nu0 * q.powf(0.5 * (p - 2.0)) };
    let dnu = if p == 2.0 {
        0.0
    } else {
        nu * 0.5 * (p - 2.0) * alpha.powi(3) * r.powf(2.0 * alpha - 1.0) / q
    };
    let phi = nu * k;
    let dphi = dnu * k + nu * dk;
    let c = 0.5 * dphi * r + 2.0 * phi;
    let b = ms.b();
    let gp = b * r.powf(b - 2.0);
    Ok([gp * x - c * y, gp * y + c * x])
}

/// Builds the manufactured-solution problem on a given mesh.
pub fn manufactured_problem(
    mesh: Arc<Mesh>,
    element: StokesElement,
    params: PhysicalParams,
    ms: ManufacturedSolution,
    quad: QuadratureRule,
) -> Result<Problem> {
    let force: Arc<ForceField> = Arc::new(move |x: Point, prm: &PhysicalParams| ms_body_force(x[0], x[1], &ms, prm));
    let dirichlet = move |x: Point| ms_exact(x[0], x[1], &ms).map(|v| v.0).unwrap_or([0.0, 0.0]);
    Problem::new(mesh, element, params, force, &dirichlet, quad)
}

/// Errors of a discrete solution against the manufactured solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    /// `|grad (u_h - u)|_{L^2}`.
    pub velocity_h1: f64,
    /// `|p_h - pi - mean|_{L^2}` with the mean difference removed.
    pub pressure_l2: f64,
}

pub fn error_norms(u: &[f64], p: &[f64], problem: &Problem, ms: &ManufacturedSolution) -> Result<ErrorNorms> {
    let quad = &problem.quad;
    let grads = velocity_gradients(&problem.space_v, quad, u)?;
    let mut h1 = 0.0;
    for g in &grads {
        let ge = ms_gradient(g.point[0], g.point[1], ms)?;
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += (g.grad[i][j] - ge[i][j]).powi(2);
            }
        }
        h1 += g.weight * s;
    }
    let ph = crate::fem::assembly::scalar_values(&problem.space_q, quad, p)?;
    let mut diffs = Vec::with_capacity(ph.len());
    let mut area = 0.0;
    let mut mean = 0.0;
    for (g, &v) in grads.iter().zip(&ph) {
        let (_, pi) = ms_exact(g.point[0], g.point[1], ms)?;
        let d = v - pi;
        diffs.push(d);
        mean += g.weight * d;
        area += g.weight;
    }
    mean /= area;
    let l2: f64 = grads
        .iter()
        .zip(&diffs)
        .map(|(g, d)| g.weight * (d - mean).powi(2))
        .sum();
    Ok(ErrorNorms {
        velocity_h1: h1.sqrt(),
        pressure_l2: l2.sqrt(),
    })
}

/// Glacier problem with gravity-driven body force `rho g` and homogeneous
/// velocity constraints.
pub fn glacier_problem(
    mesh: Arc<Mesh>,
    element: StokesElement,
    params: PhysicalParams,
    rho: f64,
    gravity: [f64; 2],
    quad: QuadratureRule,
) -> Result<Problem> {
    let f = [rho * gravity[0], rho * gravity[1]];
    let force: Arc<ForceField> = Arc::new(move |_: Point, _: &PhysicalParams| Ok(f));
    Problem::new(mesh, element, params, force, &|_| [0.0, 0.0], quad)
}

/// `|B u|` after removing the component along the constants (the only part
/// a consistent discrete solution may carry when boundary data has nonzero
/// discrete flux).
pub fn divergence_defect(problem: &Problem, u: &[f64]) -> f64 {
    let mut bu = mul_vec(&problem.b, u);
    if problem.has_pressure_kernel() {
        let mean = bu.iter().sum::<f64>() / bu.len() as f64;
        for v in bu.iter_mut() {
            *v -= mean;
        }
    }
    norm(&bu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms() -> ManufacturedSolution {
        ManufacturedSolution::new(0.01, 4.0 / 3.0).unwrap()
    }

    #[test]
    fn exponents() {
        let m = ms();
        assert!((m.a() - 1.01).abs() < 1e-15);
        assert!((m.b() - 0.51).abs() < 1e-14);
    }

    #[test]
    fn exact_velocity_hand_values() {
        let m = ManufacturedSolution::new(1.0, 2.0).unwrap();
        assert_eq!(m.a(), 2.0);
        let (u, pi) = ms_exact(1.0, 0.0, &m).unwrap();
        assert_eq!(u, [0.0, -1.0]);
        assert_eq!(pi, 1.0);
        let (u, _) = ms_exact(0.0, 2.0, &m).unwrap();
        assert_eq!(u, [4.0, 0.0]);
        assert_eq!(ms_exact(0.0, 0.0, &m).unwrap(), ([0.0, 0.0], 0.0));
        assert!(ms_gradient(0.0, 0.0, &m).is_err());
    }

    #[test]
    fn newtonian_force_hand_value() {
        // a = 2, p = 2, nu0 = 1: div S = 3/(2r) (y, -x), grad pi = (x, y)/r
        let m = ManufacturedSolution::new(1.0, 2.0).unwrap();
        let params = PhysicalParams::new(1.0, 2.0, 0.3, Linearization::Picard).unwrap();
        let f = ms_body_force(1.0, 1.0, &m, &params).unwrap();
        assert!((f[0] + 0.353_553_390_593_273_73).abs() < 1e-15);
        assert!((f[1] - 1.767_766_952_966_368_7).abs() < 1e-15);
    }

    #[test]
    fn origin_is_singular_for_force() {
        let params = PhysicalParams::new(1.0, 4.0 / 3.0, 0.1, Linearization::Picard).unwrap();
        assert!(matches!(ms_body_force(0.0, 0.0, &ms(), &params), Err(Error::SingularPoint(_))));
    }
}
