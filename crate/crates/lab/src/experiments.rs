//! Experiment drivers. Each driver builds its problem from a [`Config`],
//! runs the spectral sweep and returns a [`RunReport`]; writing files is
//! left to [`crate::report`] and [`crate::plot`].

use std::sync::Arc;

use log::{info, warn};
use pstokes_core::fem::StokesElement;
use pstokes_core::mesh::{
    extruded_glacier_mesh, load_mesh, load_profile, mesh_quality, square_mesh, GlacierProfile, Mesh,
};
use pstokes_core::solver::{
    error_norms, glacier_problem, manufactured_problem, nonlinear_solve, ErrorNorms, ManufacturedSolution, Problem,
    SolverConfig,
};
use pstokes_core::spectral::{infsup_c0, infsup_cnu, spectral_sweep, SpectralReport};

use crate::config::{Config, Experiment};
use crate::error::{LabError, Result};

/// Discretization error of one manufactured-solution sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub eps: f64,
    pub norms: ErrorNorms,
    pub converged: bool,
}

/// One mesh of an inf-sup table.
#[derive(Clone, Debug, PartialEq)]
pub struct InfsupColumn {
    pub domain: String,
    pub element: StokesElement,
    pub cells: usize,
    pub min_angle_deg: f64,
    pub c0: f64,
    pub c_nu: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: Config,
    /// Spectral rows, ordered by `eps` and then by Schur choice.
    pub rows: Vec<SpectralReport>,
    pub errors: Vec<ErrorRow>,
    pub infsup: Vec<InfsupColumn>,
    /// Free-form summary lines (mesh quality, speeds, convergence flags).
    pub notes: Vec<String>,
}

impl RunReport {
    fn new(config: &Config) -> Self {
        RunReport {
            config: config.clone(),
            rows: Vec::new(),
            errors: Vec::new(),
            infsup: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn flag_unconverged(&mut self) {
        let flags: Vec<String> = self
            .rows
            .iter()
            .filter(|r| !r.converged)
            .map(|r| format!("not converged: eps = {:e}, schur = {}", r.eps, r.schur))
            .collect();
        for f in &flags {
            warn!("{f}");
        }
        self.notes.extend(flags);
    }
}

pub fn run(config: &Config) -> Result<RunReport> {
    match config.experiment {
        Experiment::Ms => run_ms(config),
        Experiment::Glacier => run_glacier(config),
        Experiment::Infsup => run_infsup(config),
    }
}

fn unit_square(nx: usize) -> Result<Mesh> {
    Ok(square_mesh(nx, [-1.0, -1.0], [1.0, 1.0])?)
}

fn ms_problem(config: &Config, mesh: Arc<Mesh>, eps: f64) -> Result<(Problem, ManufacturedSolution)> {
    let ms = ManufacturedSolution::new(config.delta, config.p_power)?;
    let problem = manufactured_problem(mesh, config.element, config.ms_params(eps)?, ms, config.quadrature()?)?;
    Ok((problem, ms))
}

fn quality_note(mesh: &Mesh) -> String {
    let q = mesh_quality(mesh);
    format!(
        "mesh: {} vertices, {} cells, min angle {:.3} deg, min/max angle ratio {:.4}",
        mesh.num_vertices(),
        mesh.num_cells(),
        q.min_angle.to_degrees(),
        q.angle_ratio
    )
}

/// Manufactured-solution experiment on `[-1, 1]^2`.
pub fn run_ms(config: &Config) -> Result<RunReport> {
    config.validate()?;
    let mesh = Arc::new(unit_square(config.nx)?);
    let eps_list = config.eps_values();
    let (problem, ms) = ms_problem(config, mesh.clone(), eps_list[0])?;
    let mut report = RunReport::new(config);
    report.notes.push(quality_note(&mesh));

    let c0 = infsup_c0(&problem, config.dense_cap)?;
    info!("ms: c0 = {c0:.6}");
    let points = spectral_sweep(
        &problem,
        &eps_list,
        &config.schur.choices(),
        &config.solver_config(),
        c0,
        &config.sweep_options(),
    )?;
    for pt in points {
        let prob = problem.with_eps(pt.eps)?;
        report.errors.push(ErrorRow {
            eps: pt.eps,
            norms: error_norms(&pt.state.u, &pt.state.p, &prob, &ms)?,
            converged: pt.state.converged,
        });
        info!("ms: eps = {:e} done in {} iterations", pt.eps, pt.state.iterations);
        report.rows.extend(pt.reports);
    }
    report.flag_unconverged();
    Ok(report)
}

fn glacier_mesh(config: &Config, n_columns: usize) -> Result<Mesh> {
    if let Some(path) = &config.mesh {
        return Ok(load_mesh(path)?);
    }
    let profile = match &config.profile {
        Some(path) => load_profile(path)?,
        None => GlacierProfile::synthetic(&config.synthetic)?,
    };
    Ok(extruded_glacier_mesh(&profile, n_columns, config.n_layers, config.lake)?)
}

fn glacier_from_mesh(config: &Config, mesh: Arc<Mesh>, eps: f64) -> Result<Problem> {
    Ok(glacier_problem(
        mesh,
        config.element,
        config.glacier_params(eps)?,
        config.rho,
        config.gravity,
        config.quadrature()?,
    )?)
}

/// Largest nodal speed over the mesh vertices.
fn max_vertex_speed(problem: &Problem, u: &[f64]) -> f64 {
    (0..problem.mesh().num_vertices())
        .map(|n| u[2 * n].hypot(u[2 * n + 1]))
        .fold(0.0, f64::max)
}

/// Valley-glacier experiment driven by gravity.
pub fn run_glacier(config: &Config) -> Result<RunReport> {
    config.validate()?;
    let mesh = Arc::new(glacier_mesh(config, config.n_columns)?);
    let eps_list = config.eps_values();
    let problem = glacier_from_mesh(config, mesh.clone(), eps_list[0])?;
    let mut report = RunReport::new(config);
    report.notes.push(quality_note(&mesh));
    report.notes.push(format!(
        "nu0 = {:.6e} (Glen rate factor {:e}), p = {}",
        problem.params.nu0, config.rate_factor, problem.params.p_power
    ));

    let c0 = infsup_c0(&problem, config.dense_cap)?;
    info!("glacier: c0 = {c0:.6}");
    let points = spectral_sweep(
        &problem,
        &eps_list,
        &config.schur.choices(),
        &config.solver_config(),
        c0,
        &config.sweep_options(),
    )?;
    for pt in points {
        report.notes.push(format!(
            "eps = {:e}: max speed {:.3}",
            pt.eps,
            max_vertex_speed(&problem, &pt.state.u)
        ));
        report.rows.extend(pt.reports);
    }
    report.flag_unconverged();
    Ok(report)
}

fn infsup_column(domain: String, problem: &Problem, config: &Config) -> Result<InfsupColumn> {
    let c0 = infsup_c0(problem, config.dense_cap)?;
    let solver = SolverConfig {
        schur: config.schur.choices()[0],
        ..config.solver_config()
    };
    let state = nonlinear_solve(problem, &solver)?;
    if !state.converged {
        warn!("{domain}: nonlinear solve did not converge; c_nu uses the last iterate");
    }
    let c_nu = infsup_cnu(problem, &state.u, config.cnu_deflation, config.dense_cap)?;
    let mesh = problem.mesh();
    info!("{domain}: c0 = {c0:.6}, c_nu = {c_nu:.6}");
    Ok(InfsupColumn {
        domain,
        element: config.element,
        cells: mesh.num_cells(),
        min_angle_deg: mesh_quality(mesh).min_angle.to_degrees(),
        c0,
        c_nu,
    })
}

/// Inf-sup constants `c0` and `c_nu` over a family of meshes. `c_nu` is
/// evaluated at the converged velocity for `infsup_eps` (scaled for the
/// glacier like the sweep values).
pub fn run_infsup(config: &Config) -> Result<RunReport> {
    config.validate()?;
    let mut report = RunReport::new(config);
    if config.infsup_domain.square() {
        for &nx in &config.nx_list {
            let mesh = Arc::new(unit_square(nx)?);
            let (problem, _) = ms_problem(config, mesh, config.infsup_eps)?;
            report.infsup.push(infsup_column(format!("square nx={nx}"), &problem, config)?);
        }
    }
    if config.infsup_domain.glacier() {
        let eps = config.infsup_eps * config.eps_scale;
        let mut meshes: Vec<(String, Mesh)> = Vec::new();
        for &cols in &config.columns_list {
            let cfg = Config {
                mesh: None,
                ..config.clone()
            };
            meshes.push((format!("glacier columns={cols}"), glacier_mesh(&cfg, cols)?));
        }
        for path in &config.mesh_files {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .ok_or_else(|| LabError::InvalidConfig(format!("mesh file '{}' has no name", path.display())))?;
            meshes.push((format!("glacier {name}"), load_mesh(path)?));
        }
        for (name, mesh) in meshes {
            let problem = glacier_from_mesh(config, Arc::new(mesh), eps)?;
            report.infsup.push(infsup_column(name, &problem, config)?);
        }
    }
    if report.infsup.is_empty() {
        return Err(LabError::InvalidConfig("no meshes selected for the inf-sup table".into()));
    }
    Ok(report)
}
