//! Plain-text run configuration.
//!
//! A configuration file holds one `key = value` pair per line. Blank lines
//! and lines starting with `#` are ignored, lists are comma separated. Every
//! experiment starts from its own defaults and the file (and command-line
//! overrides) only replace the keys they mention.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pstokes_core::fem::{glen_law, Linearization, PhysicalParams, QuadratureRule, StokesElement};
use pstokes_core::linalg::GmresConfig;
use pstokes_core::mesh::SyntheticProfile;
use pstokes_core::precond::SchurChoice;
use pstokes_core::solver::{SolverConfig, WarmStart};
use pstokes_core::spectral::{CnuDeflation, SweepOptions};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Ms,
    Glacier,
    Infsup,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Ms => "ms",
            Experiment::Glacier => "glacier",
            Experiment::Infsup => "infsup",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ms" => Ok(Experiment::Ms),
            "glacier" => Ok(Experiment::Glacier),
            "infsup" => Ok(Experiment::Infsup),
            other => Err(format!("unknown experiment '{other}' (expected ms, glacier or infsup)")),
        }
    }
}

/// Which Schur-complement approximations a run analyses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchurSelection {
    Mass,
    ScaledMass,
    Both,
}

impl SchurSelection {
    pub fn choices(self) -> Vec<SchurChoice> {
        match self {
            SchurSelection::Mass => vec![SchurChoice::Mass],
            SchurSelection::ScaledMass => vec![SchurChoice::ScaledMass],
            SchurSelection::Both => SchurChoice::ALL.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchurSelection::Mass => "m",
            SchurSelection::ScaledMass => "mnu",
            SchurSelection::Both => "both",
        }
    }
}

impl FromStr for SchurSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "both" => Ok(SchurSelection::Both),
            other => match other.parse::<SchurChoice>()? {
                SchurChoice::Mass => Ok(SchurSelection::Mass),
                SchurChoice::ScaledMass => Ok(SchurSelection::ScaledMass),
            },
        }
    }
}

/// Meshes covered by an inf-sup table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfsupDomain {
    Square,
    Glacier,
    Both,
}

impl InfsupDomain {
    pub fn name(self) -> &'static str {
        match self {
            InfsupDomain::Square => "square",
            InfsupDomain::Glacier => "glacier",
            InfsupDomain::Both => "both",
        }
    }

    pub fn square(self) -> bool {
        matches!(self, InfsupDomain::Square | InfsupDomain::Both)
    }

    pub fn glacier(self) -> bool {
        matches!(self, InfsupDomain::Glacier | InfsupDomain::Both)
    }
}

impl FromStr for InfsupDomain {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(InfsupDomain::Square),
            "glacier" => Ok(InfsupDomain::Glacier),
            "both" => Ok(InfsupDomain::Both),
            other => Err(format!("unknown infsup domain '{other}' (expected square, glacier or both)")),
        }
    }
}

/// Default regularization sweep (dimensionless; scaled for the glacier).
pub const DEFAULT_EPS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub element: StokesElement,
    pub method: Linearization,
    pub schur: SchurSelection,
    /// Nominal regularization values; the glacier multiplies them by
    /// `eps_scale`.
    pub eps: Vec<f64>,
    pub p_power: f64,
    pub quad_degree: usize,
    pub r_tol: f64,
    pub a_tol: f64,
    pub max_iters: usize,
    /// Picard steps before Newton takes over (0 disables the warm start).
    pub warm_start_steps: usize,
    pub warm_start_rtol: f64,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
    pub dense_cap: usize,
    pub cnu_deflation: CnuDeflation,
    pub out: PathBuf,

    pub nx: usize,
    pub nu0: f64,
    pub delta: f64,

    /// Glen rate factor `A` in Pa^-3 a^-1 (for `p = 4/3`).
    pub rate_factor: f64,
    pub rho: f64,
    pub gravity: [f64; 2],
    pub n_columns: usize,
    pub n_layers: usize,
    pub lake: Option<(f64, f64)>,
    /// Characteristic strain rate (a^-1) multiplying the nominal `eps`.
    pub eps_scale: f64,
    pub profile: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub synthetic: SyntheticProfile,

    pub infsup_domain: InfsupDomain,
    pub nx_list: Vec<usize>,
    pub columns_list: Vec<usize>,
    pub mesh_files: Vec<PathBuf>,
    /// Nominal `eps` of the iterate at which `c_nu` is evaluated.
    pub infsup_eps: f64,
}

impl Config {
    pub fn defaults(experiment: Experiment) -> Self {
        let glacier = experiment == Experiment::Glacier;
        Config {
            experiment,
            element: StokesElement::P2P1,
            method: Linearization::Newton,
            schur: SchurSelection::Both,
            eps: DEFAULT_EPS.to_vec(),
            p_power: 4.0 / 3.0,
            quad_degree: 5,
            r_tol: 1e-6,
            a_tol: 1e-10,
            max_iters: 200,
            // the glacier starts both methods from zero
            warm_start_steps: if glacier { 0 } else { 5 },
            warm_start_rtol: 1e-2,
            gmres_tol: 1e-10,
            gmres_restart: 200,
            gmres_max_iters: 2000,
            dense_cap: pstokes_core::linalg::dense::DEFAULT_DENSE_CAP,
            cnu_deflation: CnuDeflation::Both,
            out: PathBuf::from("out"),
            nx: 32,
            nu0: 1.0,
            delta: 0.01,
            rate_factor: 5e-18,
            rho: 910.0,
            gravity: [0.0, -9.81],
            n_columns: 128,
            n_layers: 7,
            lake: Some((2200.0, 2800.0)),
            eps_scale: 0.1,
            profile: None,
            mesh: None,
            synthetic: SyntheticProfile::default(),
            infsup_domain: InfsupDomain::Both,
            nx_list: vec![8, 16, 32],
            columns_list: vec![32, 64, 128],
            mesh_files: Vec::new(),
            infsup_eps: 1e-3,
        }
    }

    /// Parses a configuration file on top of the experiment defaults.
    pub fn parse(text: &str, path: &Path, experiment: Experiment) -> Result<Self> {
        let mut cfg = Config::defaults(experiment);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| LabError::Config {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected 'key = value', got '{line}'")))?;
            cfg.set(key.trim(), value.trim()).map_err(parse_err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, experiment: Experiment) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Config::parse(&text, path, experiment)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let s = &mut self.synthetic;
        match key {
            "experiment" => {
                let e: Experiment = value.parse()?;
                if e != self.experiment {
                    return Err(format!("configuration is for '{e}' but the run is '{}'", self.experiment));
                }
            }
            "element" => self.element = value.parse()?,
            "method" => self.method = value.parse()?,
            "schur" => self.schur = value.parse()?,
            "eps" => self.eps = parse_list(value)?,
            "p_power" => self.p_power = parse_num(value)?,
            "quad_degree" => self.quad_degree = parse_num(value)?,
            "r_tol" => self.r_tol = parse_num(value)?,
            "a_tol" => self.a_tol = parse_num(value)?,
            "max_iters" => self.max_iters = parse_num(value)?,
            "warm_start_steps" => self.warm_start_steps = parse_num(value)?,
            "warm_start_rtol" => self.warm_start_rtol = parse_num(value)?,
            "gmres_tol" => self.gmres_tol = parse_num(value)?,
            "gmres_restart" => self.gmres_restart = parse_num(value)?,
            "gmres_max_iters" => self.gmres_max_iters = parse_num(value)?,
            "dense_cap" => self.dense_cap = parse_num(value)?,
            "cnu_deflation" => {
                self.cnu_deflation = match value.to_ascii_lowercase().as_str() {
                    "kernel" => CnuDeflation::Kernel,
                    "both" => CnuDeflation::Both,
                    other => return Err(format!("unknown cnu_deflation '{other}' (expected kernel or both)")),
                }
            }
            "out" => self.out = PathBuf::from(value),
            "nx" => self.nx = parse_num(value)?,
            "nu0" => self.nu0 = parse_num(value)?,
            "delta" => self.delta = parse_num(value)?,
            "rate_factor" => self.rate_factor = parse_num(value)?,
            "rho" => self.rho = parse_num(value)?,
            "gravity" => {
                let g: Vec<f64> = parse_list(value)?;
                self.gravity = <[f64; 2]>::try_from(g.as_slice()).map_err(|_| "gravity needs two components".to_string())?;
            }
            "n_columns" => self.n_columns = parse_num(value)?,
            "n_layers" => self.n_layers = parse_num(value)?,
            "lake" => {
                self.lake = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    let v: Vec<f64> = parse_list(value)?;
                    match v.as_slice() {
                        &[a, b] => Some((a, b)),
                        _ => return Err("lake needs 'start, end' or 'none'".into()),
                    }
                }
            }
            "eps_scale" => self.eps_scale = parse_num(value)?,
            "profile" => self.profile = parse_path(value),
            "mesh" => self.mesh = parse_path(value),
            "length" => s.length = parse_num(value)?,
            "max_thickness" => s.max_thickness = parse_num(value)?,
            "bed_slope" => s.bed_slope = parse_num(value)?,
            "head_elevation" => s.head_elevation = parse_num(value)?,
            "overdeepening_depth" => s.overdeepening_depth = parse_num(value)?,
            "overdeepening_center" => s.overdeepening_center = parse_num(value)?,
            "overdeepening_width" => s.overdeepening_width = parse_num(value)?,
            "profile_samples" => s.samples = parse_num(value)?,
            "infsup_domain" => self.infsup_domain = value.parse()?,
            "nx_list" => self.nx_list = parse_list(value)?,
            "columns_list" => self.columns_list = parse_list(value)?,
            "mesh_files" => {
                self.mesh_files = if value.is_empty() || value.eq_ignore_ascii_case("none") {
                    Vec::new()
                } else {
                    value.split(',').map(|p| PathBuf::from(p.trim())).collect()
                }
            }
            "infsup_eps" => self.infsup_eps = parse_num(value)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(LabError::InvalidConfig(msg.to_string()));
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return bad("eps must be a non-empty list of positive numbers");
        }
        if !(self.p_power > 1.0 && self.p_power <= 2.0) {
            return bad("p_power must lie in (1, 2]");
        }
        if self.nx == 0 || self.n_columns == 0 || self.n_layers == 0 {
            return bad("mesh sizes must be positive");
        }
        if !(self.nu0 > 0.0 && self.rate_factor > 0.0 && self.delta > 0.0 && self.eps_scale > 0.0 && self.infsup_eps > 0.0) {
            return bad("nu0, rate_factor, delta, eps_scale and infsup_eps must be positive");
        }
        if self.gmres_restart == 0 || self.max_iters == 0 {
            return bad("gmres_restart and max_iters must be positive");
        }
        if let Some((a, b)) = self.lake {
            if !(b > a) {
                return bad("lake interval must have start < end");
            }
        }
        if self.nx_list.contains(&0) || self.columns_list.contains(&0) {
            return bad("mesh sizes in nx_list and columns_list must be positive");
        }
        QuadratureRule::with_degree(self.quad_degree)?;
        self.solver_config().validate()?;
        Ok(())
    }

    pub fn quadrature(&self) -> Result<QuadratureRule> {
        Ok(QuadratureRule::with_degree(self.quad_degree)?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let warm_start = if self.method == Linearization::Newton && self.warm_start_steps > 0 {
            WarmStart::PicardSteps {
                count: self.warm_start_steps,
                r_tol: self.warm_start_rtol,
            }
        } else {
            WarmStart::Zero
        };
        SolverConfig {
            method: self.method,
            r_tol: self.r_tol,
            a_tol: self.a_tol,
            max_iters: self.max_iters,
            warm_start,
            schur: self.schur.choices()[0],
            gmres: GmresConfig {
                tol: self.gmres_tol,
                restart: self.gmres_restart,
                max_iters: self.gmres_max_iters,
            },
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            dense_cap: self.dense_cap,
            cnu_deflation: self.cnu_deflation,
            ..SweepOptions::default()
        }
    }

    /// Regularization values actually used by the run.
    pub fn eps_values(&self) -> Vec<f64> {
        let scale = self.eps_scale_for_run();
        self.eps.iter().map(|e| e * scale).collect()
    }

    fn eps_scale_for_run(&self) -> f64 {
        match self.experiment {
            Experiment::Glacier => self.eps_scale,
            _ => 1.0,
        }
    }

    /// Material parameters of the manufactured-solution experiment.
    pub fn ms_params(&self, eps: f64) -> Result<PhysicalParams> {
        Ok(PhysicalParams::new(self.nu0, self.p_power, eps, self.method)?)
    }

    /// Material parameters of the glacier, with `nu0` from Glen's law.
    pub fn glacier_params(&self, eps: f64) -> Result<PhysicalParams> {
        let (nu0, p) = glen_law(self.rate_factor, 1.0 / (self.p_power - 1.0))?;
        Ok(PhysicalParams::new(nu0, p, eps, self.method)?)
    }

    /// Canonical `key = value` listing of the keys that affect this run.
    /// Parsing the listing reproduces the configuration.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("experiment", self.experiment.to_string());
        kv("element", self.element.to_string());
        kv("method", self.method.to_string());
        if self.experiment != Experiment::Infsup {
            kv("schur", self.schur.name().into());
            kv("eps", join_nums(&self.eps));
        }
        kv("p_power", num(self.p_power));
        kv("quad_degree", self.quad_degree.to_string());
        kv("r_tol", num(self.r_tol));
        kv("a_tol", num(self.a_tol));
        kv("max_iters", self.max_iters.to_string());
        kv("warm_start_steps", self.warm_start_steps.to_string());
        kv("warm_start_rtol", num(self.warm_start_rtol));
        kv("gmres_tol", num(self.gmres_tol));
        kv("gmres_restart", self.gmres_restart.to_string());
        kv("gmres_max_iters", self.gmres_max_iters.to_string());
        kv("dense_cap", self.dense_cap.to_string());
        kv(
            "cnu_deflation",
            match self.cnu_deflation {
                CnuDeflation::Kernel => "kernel",
                CnuDeflation::Both => "both",
            }
            .into(),
        );
        let square = match self.experiment {
            Experiment::Ms => true,
            Experiment::Glacier => false,
            Experiment::Infsup => self.infsup_domain.square(),
        };
        let glacier = match self.experiment {
            Experiment::Ms => false,
            Experiment::Glacier => true,
            Experiment::Infsup => self.infsup_domain.glacier(),
        };
        if self.experiment == Experiment::Ms {
            kv("nx", self.nx.to_string());
        }
        if square {
            kv("nu0", num(self.nu0));
            kv("delta", num(self.delta));
        }
        if glacier {
            kv("rate_factor", num(self.rate_factor));
            kv("rho", num(self.rho));
            kv("gravity", join_nums(&self.gravity));
            if self.experiment == Experiment::Glacier {
                kv("n_columns", self.n_columns.to_string());
            }
            kv("n_layers", self.n_layers.to_string());
            kv(
                "lake",
                self.lake.map(|(a, b)| join_nums(&[a, b])).unwrap_or_else(|| "none".into()),
            );
            kv("eps_scale", num(self.eps_scale));
            let path_or_none = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "none".into());
            kv("profile", path_or_none(&self.profile));
            if self.experiment == Experiment::Glacier {
                kv("mesh", path_or_none(&self.mesh));
            }
            if self.profile.is_none() {
                let s = &self.synthetic;
                kv("length", num(s.length));
                kv("max_thickness", num(s.max_thickness));
                kv("bed_slope", num(s.bed_slope));
                kv("head_elevation", num(s.head_elevation));
                kv("overdeepening_depth", num(s.overdeepening_depth));
                kv("overdeepening_center", num(s.overdeepening_center));
                kv("overdeepening_width", num(s.overdeepening_width));
                kv("profile_samples", s.samples.to_string());
            }
        }
        if self.experiment == Experiment::Infsup {
            kv("infsup_domain", self.infsup_domain.name().into());
            if square {
                kv("nx_list", join(&self.nx_list));
            }
            if glacier {
                kv("columns_list", join(&self.columns_list));
                let files: Vec<String> = self.mesh_files.iter().map(|p| p.display().to_string()).collect();
                kv("mesh_files", if files.is_empty() { "none".into() } else { files.join(", ") });
            }
            kv("infsup_eps", num(self.infsup_eps));
        }
        out
    }
}

fn parse_num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("invalid number '{value}'"))
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value.split(',').map(|v| parse_num(v.trim())).collect()
}

fn parse_path(value: &str) -> Option<PathBuf> {
    if value.is_empty() || value.eq_ignore_ascii_case("none") {
        None
    } else {
        Some(PathBuf::from(value))
    }
}

/// Shortest text that parses back to the same float, in scientific
/// notation outside `[1e-3, 1e6)`.
fn num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e6).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn join_nums(items: &[f64]) -> String {
    items.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", ")
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        for exp in [Experiment::Ms, Experiment::Glacier, Experiment::Infsup] {
            let mut cfg = Config::defaults(exp);
            cfg.eps = vec![0.3, 1e-7];
            cfg.lake = None;
            let echo = cfg.echo();
            let back = Config::parse(&echo, Path::new("echo"), exp).unwrap();
            assert_eq!(back.echo(), echo);
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Config::parse("nx = 4\n\n# comment\nbogus = 1\n", Path::new("f.cfg"), Experiment::Ms).unwrap_err();
        assert!(err.to_string().contains("f.cfg:4"), "{err}");
        let err = Config::parse("nx 4\n", Path::new("g.cfg"), Experiment::Ms).unwrap_err();
        assert!(err.to_string().contains("g.cfg:1"), "{err}");
        assert!(Config::parse("eps = 1e-2, -1\n", Path::new("h"), Experiment::Ms).is_err());
        assert!(Config::parse("experiment = glacier\n", Path::new("h"), Experiment::Ms).is_err());
    }

    #[test]
    fn glacier_defaults() {
        let cfg = Config::defaults(Experiment::Glacier);
        assert_eq!(cfg.eps_values()[0], 1e-1 * 0.1);
        assert_eq!(cfg.solver_config().warm_start, WarmStart::Zero);
        let p = cfg.glacier_params(1e-3).unwrap();
        assert!((p.nu0 - 2f64.powf(1.0 / 3.0) * 5e-18f64.powf(-1.0 / 3.0)).abs() < 1e-9 * p.nu0);
        let ms = Config::defaults(Experiment::Ms);
        assert!(matches!(ms.solver_config().warm_start, WarmStart::PicardSteps { count: 5, .. }));
    }
}
