//! Two-dimensional triangulations with tagged boundary facets.
//!
//! Three sources of meshes are supported: structured meshes of a rectangle,
//! column-extruded meshes of a glacier cross-section, and meshes read from a
//! small ASCII format (see [`load_mesh`]).

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Boundary condition class attached to a boundary facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Whole boundary of a box domain (velocity prescribed everywhere).
    DirichletAll,
    /// Ice/atmosphere interface, stress free.
    Surface,
    /// Ice/bedrock interface, no slip.
    Bed,
    /// Ice over a subglacial lake: impenetrable, free tangential slip.
    Lake,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::DirichletAll => "dirichlet",
            BoundaryTag::Surface => "surface",
            BoundaryTag::Bed => "bed",
            BoundaryTag::Lake => "lake",
        }
    }

    fn is_glacier(self) -> bool {
        !matches!(self, BoundaryTag::DirichletAll)
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "dirichletall" | "0" => Ok(BoundaryTag::DirichletAll),
            "surface" | "1" => Ok(BoundaryTag::Surface),
            "bed" | "2" => Ok(BoundaryTag::Bed),
            "lake" | "3" => Ok(BoundaryTag::Lake),
            other => Err(format!("unknown boundary tag '{other}'")),
        }
    }
}

/// A boundary edge. Vertices are ordered so that the owning cell lies to the
/// left when walking from `vertices[0]` to `vertices[1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// An immutable, validated triangulation.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    facet_cells: Vec<usize>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Validates and builds a mesh.
    ///
    /// Cells must be counter-clockwise with positive area, every facet must be
    /// an edge owned by exactly one cell, and every such edge must carry
    /// exactly one facet. Facet orientation is normalised to the owning cell.
    pub fn new(vertices: Vec<Point>, cells: Vec<[usize; 3]>, facets: Vec<Facet>) -> Result<Self> {
        let nv = vertices.len();
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        for (c, cell) in cells.iter().enumerate() {
            if let Some(&v) = cell.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} references vertex {v} of {nv}"
                )));
            }
            let a = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(a > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} has non-positive signed area {a:e}"
                )));
            }
        }

        let mut edge_cells: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            for e in 0..3 {
                edge_cells
                    .entry(edge_key(cell[e], cell[(e + 1) % 3]))
                    .or_default()
                    .push(c);
            }
        }
        if let Some((e, cs)) = edge_cells.iter().find(|(_, cs)| cs.len() > 2) {
            return Err(Error::InvalidMesh(format!(
                "edge {e:?} is shared by {} cells",
                cs.len()
            )));
        }

        let mut seen = HashMap::new();
        let mut facets_out = Vec::with_capacity(facets.len());
        let mut facet_cells = Vec::with_capacity(facets.len());
        for (f, facet) in facets.iter().enumerate() {
            let [a, b] = facet.vertices;
            if a >= nv || b >= nv {
                return Err(Error::InvalidMesh(format!(
                    "facet {f} references a vertex out of range"
                )));
            }
            let key = edge_key(a, b);
            let owners = edge_cells.get(&key).ok_or_else(|| {
                Error::InvalidMesh(format!("facet {f} ({a}, {b}) is not a cell edge"))
            })?;
            if owners.len() != 1 {
                return Err(Error::InvalidMesh(format!(
                    "facet {f} ({a}, {b}) is an interior edge"
                )));
            }
            if seen.insert(key, f).is_some() {
                return Err(Error::InvalidMesh(format!("facet {f} ({a}, {b}) is duplicated")));
            }
            let cell = cells[owners[0]];
            // orient so the cell is on the left
            let pos = cell.iter().position(|&v| v == a).unwrap();
            let vertices_ordered = if cell[(pos + 1) % 3] == b { [a, b] } else { [b, a] };
            facets_out.push(Facet {
                vertices: vertices_ordered,
                tag: facet.tag,
            });
            facet_cells.push(owners[0]);
        }
        let boundary_edges = edge_cells.values().filter(|cs| cs.len() == 1).count();
        if boundary_edges != facets_out.len() {
            return Err(Error::InvalidMesh(format!(
                "{boundary_edges} boundary edges but {} tagged facets",
                facets_out.len()
            )));
        }
        let has_box = facets_out.iter().any(|f| !f.tag.is_glacier());
        let has_glacier = facets_out.iter().any(|f| f.tag.is_glacier());
        if has_box && has_glacier {
            return Err(Error::InvalidMesh(
                "dirichlet tags cannot be mixed with glacier tags".into(),
            ));
        }

        Ok(Mesh {
            vertices,
            cells,
            facets: facets_out,
            facet_cells,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Index of the cell owning boundary facet `f`.
    pub fn facet_cell(&self, f: usize) -> usize {
        self.facet_cells[f]
    }

    pub fn cell_points(&self, c: usize) -> [Point; 3] {
        let [a, b, d] = self.cells[c];
        [self.vertices[a], self.vertices[b], self.vertices[d]]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cell_points(c);
        signed_area(a, b, d)
    }

    pub fn area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Outward unit normal and length of facet `f`.
    pub fn facet_normal(&self, f: usize) -> (Point, f64) {
        let [a, b] = self.facets[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let t = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = t[0].hypot(t[1]);
        // cell on the left, so the outward normal is the right-hand perpendicular
        ([t[1] / len, -t[0] / len], len)
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.facets.iter().any(|f| f.tag == tag)
    }

    /// Total length of the facets carrying `tag`.
    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        (0..self.facets.len())
            .filter(|&f| self.facets[f].tag == tag)
            .map(|f| self.facet_normal(f).1)
            .sum()
    }
}

/// Structured mesh of the rectangle `[lo, hi]` with `nx` subdivisions per side.
///
/// Each sub-rectangle is cut along its lower-left to upper-right diagonal,
/// giving `2 nx^2` cells. All boundary facets are tagged
/// [`BoundaryTag::DirichletAll`].
pub fn square_mesh(nx: usize, lo: Point, hi: Point) -> Result<Mesh> {
    if nx == 0 {
        return Err(Error::InvalidArgument("nx must be at least 1".into()));
    }
    if !(lo[0] < hi[0] && lo[1] < hi[1]) {
        return Err(Error::InvalidArgument(format!(
            "lower corner {lo:?} must be below upper corner {hi:?}"
        )));
    }
    let n1 = nx + 1;
    let idx = |i: usize, j: usize| j * n1 + i;
    let mut vertices = Vec::with_capacity(n1 * n1);
    for j in 0..n1 {
        for i in 0..n1 {
            let x = lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64;
            let y = lo[1] + (hi[1] - lo[1]) * j as f64 / nx as f64;
            vertices.push([x, y]);
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * nx);
    for j in 0..nx {
        for i in 0..nx {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    let tag = BoundaryTag::DirichletAll;
    let mut facets = Vec::with_capacity(4 * nx);
    for i in 0..nx {
        facets.push(Facet { vertices: [idx(i, 0), idx(i + 1, 0)], tag });
    }
    for j in 0..nx {
        facets.push(Facet { vertices: [idx(nx, j), idx(nx, j + 1)], tag });
    }
    for i in (0..nx).rev() {
        facets.push(Facet { vertices: [idx(i + 1, nx), idx(i, nx)], tag });
    }
    for j in (0..nx).rev() {
        facets.push(Facet { vertices: [idx(0, j + 1), idx(0, j)], tag });
    }
    Mesh::new(vertices, cells, facets)
}

/// Bed and surface elevation sampled along the flow line.
#[derive(Clone, Debug, PartialEq)]
pub struct GlacierProfile {
    arc: Vec<f64>,
    bed: Vec<f64>,
    surface: Vec<f64>,
}

/// Parameters of the built-in synthetic valley-glacier geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticProfile {
    /// Horizontal extent (m).
    pub length: f64,
    /// Peak ice thickness of the parabolic part (m).
    pub max_thickness: f64,
    /// Mean bed slope (dimensionless, bed descends with arc).
    pub bed_slope: f64,
    /// Elevation of the bed at the head (m).
    pub head_elevation: f64,
    /// Depth (m), centre (m) and half-width (m) of a Gaussian overdeepening.
    pub overdeepening_depth: f64,
    pub overdeepening_center: f64,
    pub overdeepening_width: f64,
    pub samples: usize,
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        SyntheticProfile {
            length: 5000.0,
            max_thickness: 400.0,
            bed_slope: 0.1,
            head_elevation: 3000.0,
            overdeepening_depth: 60.0,
            overdeepening_center: 2500.0,
            overdeepening_width: 500.0,
            samples: 201,
        }
    }
}

impl GlacierProfile {
    pub fn new(arc: Vec<f64>, bed: Vec<f64>, surface: Vec<f64>) -> Result<Self> {
        if arc.len() < 2 || arc.len() != bed.len() || arc.len() != surface.len() {
            return Err(Error::InvalidArgument(format!(
                "profile arrays must have equal length >= 2 (got {}, {}, {})",
                arc.len(),
                bed.len(),
                surface.len()
            )));
        }
        if let Some(i) = arc.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "arc positions not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = (0..arc.len()).find(|&i| !(surface[i] >= bed[i])) {
            return Err(Error::InvalidArgument(format!(
                "surface below bed at arc {}",
                arc[i]
            )));
        }
        Ok(GlacierProfile { arc, bed, surface })
    }

    pub fn synthetic(params: &SyntheticProfile) -> Result<Self> {
        if params.samples < 2 || !(params.length > 0.0) || !(params.max_thickness > 0.0) {
            return Err(Error::InvalidArgument("degenerate synthetic profile".into()));
        }
        let n = params.samples;
        let mut arc = Vec::with_capacity(n);
        let mut bed = Vec::with_capacity(n);
        let mut surface = Vec::with_capacity(n);
        for i in 0..n {
            let s = params.length * i as f64 / (n - 1) as f64;
            let xi = s / params.length;
            let base = params.head_elevation - params.bed_slope * s;
            let dip = params.overdeepening_depth
                * (-((s - params.overdeepening_center) / params.overdeepening_width).powi(2)).exp();
            let thickness = 4.0 * params.max_thickness * xi * (1.0 - xi);
            arc.push(s);
            bed.push(base - dip);
            surface.push(base + thickness);
        }
        GlacierProfile::new(arc, bed, surface)
    }

    pub fn len(&self) -> usize {
        self.arc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arc.is_empty()
    }

    pub fn arc(&self) -> &[f64] {
        &self.arc
    }

    pub fn bed(&self) -> &[f64] {
        &self.bed
    }

    pub fn surface(&self) -> &[f64] {
        &self.surface
    }

    /// Linearly interpolated (bed, surface) at arc position `s`, clamped to the ends.
    pub fn sample(&self, s: f64) -> (f64, f64) {
        let n = self.arc.len();
        if s <= self.arc[0] {
            return (self.bed[0], self.surface[0]);
        }
        if s >= self.arc[n - 1] {
            return (self.bed[n - 1], self.surface[n - 1]);
        }
        let i = self.arc.partition_point(|&a| a <= s) - 1;
        let t = (s - self.arc[i]) / (self.arc[i + 1] - self.arc[i]);
        (
            self.bed[i] + t * (self.bed[i + 1] - self.bed[i]),
            self.surface[i] + t * (self.surface[i + 1] - self.surface[i]),
        )
    }

    pub fn max_thickness(&self) -> f64 {
        self.bed
            .iter()
            .zip(&self.surface)
            .map(|(b, s)| s - b)
            .fold(0.0, f64::max)
    }
}

/// Relative thickness floor applied to near-zero-height columns.
pub const MIN_RELATIVE_THICKNESS: f64 = 1e-3;

/// Column-extruded mesh of a glacier cross-section.
///
/// The arc range is split into `n_columns` equal columns and every column
/// into `n_layers` layers interpolated linearly between bed and surface.
/// Top facets are [`BoundaryTag::Surface`]; bottom facets are
/// [`BoundaryTag::Lake`] when their midpoint lies in `lake` and
/// [`BoundaryTag::Bed`] otherwise; the two end walls are tagged `Bed`.
pub fn extruded_glacier_mesh(
    profile: &GlacierProfile,
    n_columns: usize,
    n_layers: usize,
    lake: Option<(f64, f64)>,
) -> Result<Mesh> {
    if n_columns == 0 || n_layers == 0 {
        return Err(Error::InvalidArgument(
            "n_columns and n_layers must be at least 1".into(),
        ));
    }
    let s0 = profile.arc[0];
    let s1 = profile.arc[profile.len() - 1];
    let stations: Vec<f64> = (0..=n_columns)
        .map(|i| s0 + (s1 - s0) * i as f64 / n_columns as f64)
        .collect();
    let samples: Vec<(f64, f64)> = stations.iter().map(|&s| profile.sample(s)).collect();
    let max_thickness = samples
        .iter()
        .map(|(b, s)| s - b)
        .fold(profile.max_thickness(), f64::max);
    if !(max_thickness > 0.0) {
        return Err(Error::InvalidArgument("profile has zero thickness everywhere".into()));
    }
    let floor = MIN_RELATIVE_THICKNESS * max_thickness;

    let nl1 = n_layers + 1;
    let idx = |i: usize, k: usize| i * nl1 + k;
    let mut vertices = Vec::with_capacity((n_columns + 1) * nl1);
    for (i, &x) in stations.iter().enumerate() {
        let (bed, surf) = samples[i];
        let h = (surf - bed).max(floor);
        for k in 0..nl1 {
            vertices.push([x, bed + h * k as f64 / n_layers as f64]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n_columns * n_layers);
    for i in 0..n_columns {
        for k in 0..n_layers {
            let (v00, v10, v11, v01) = (idx(i, k), idx(i + 1, k), idx(i + 1, k + 1), idx(i, k + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    let mut facets = Vec::with_capacity(2 * n_columns + 2 * n_layers);
    for i in 0..n_columns {
        let mid = 0.5 * (stations[i] + stations[i + 1]);
        let tag = match lake {
            Some((a, b)) if mid >= a && mid <= b => BoundaryTag::Lake,
            _ => BoundaryTag::Bed,
        };
        facets.push(Facet { vertices: [idx(i, 0), idx(i + 1, 0)], tag });
        facets.push(Facet {
            vertices: [idx(i + 1, n_layers), idx(i, n_layers)],
            tag: BoundaryTag::Surface,
        });
    }
    for k in 0..n_layers {
        facets.push(Facet {
            vertices: [idx(n_columns, k), idx(n_columns, k + 1)],
            tag: BoundaryTag::Bed,
        });
        facets.push(Facet {
            vertices: [idx(0, k + 1), idx(0, k)],
            tag: BoundaryTag::Bed,
        });
    }
    Mesh::new(vertices, cells, facets)
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses the ASCII mesh format:
///
/// ```text
/// vertices N
/// x y            (N lines)
/// cells M
/// i j k          (M lines, 0-based vertex indices)
/// facets K
/// i j tag        (K lines, tag in dirichlet|surface|bed|lake)
/// ```
///
/// Blank lines and lines starting with `#` are ignored. Clockwise cells are
/// reoriented.
pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, format!("unexpected end of file reading {what}")))?;
        Ok((ln, line.split_whitespace().collect()))
    };
    let count = |tok: &[&str], ln: usize, name: &str| -> Result<usize> {
        if tok.len() != 2 || tok[0] != name {
            return Err(parse_err(path, ln, format!("expected '{name} <count>'")));
        }
        tok[1]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad count in '{name}' header")))
    };

    let (ln, tok) = next("vertices header")?;
    let nv = count(&tok, ln, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, tok) = next("vertices")?;
        if tok.len() != 2 {
            return Err(parse_err(path, ln, "expected 'x y'"));
        }
        let x: f64 = tok[0].parse().map_err(|_| parse_err(path, ln, "bad x coordinate"))?;
        let y: f64 = tok[1].parse().map_err(|_| parse_err(path, ln, "bad y coordinate"))?;
        vertices.push([x, y]);
    }

    let index = |t: &str, ln: usize| -> Result<usize> {
        let i: usize = t
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad vertex index '{t}'")))?;
        if i >= nv {
            return Err(parse_err(
                path,
                ln,
                format!("vertex index {i} out of range ({nv} vertices)"),
            ));
        }
        Ok(i)
    };

    let (ln, tok) = next("cells header")?;
    let nc = count(&tok, ln, "cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, tok) = next("cells")?;
        if tok.len() != 3 {
            return Err(parse_err(path, ln, "expected 'i j k'"));
        }
        let mut cell = [index(tok[0], ln)?, index(tok[1], ln)?, index(tok[2], ln)?];
        let a = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
        if a < 0.0 {
            cell.swap(1, 2);
        } else if !(a > 0.0) {
            return Err(parse_err(path, ln, "degenerate cell"));
        }
        cells.push(cell);
    }

    let (ln, tok) = next("facets header")?;
    let nf = count(&tok, ln, "facets")?;
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, tok) = next("facets")?;
        if tok.len() != 3 {
            return Err(parse_err(path, ln, "expected 'i j tag'"));
        }
        let tag: BoundaryTag = tok[2].parse().map_err(|e: String| parse_err(path, ln, e))?;
        facets.push(Facet {
            vertices: [index(tok[0], ln)?, index(tok[1], ln)?],
            tag,
        });
    }
    if let Ok((ln, _)) = next("") {
        return Err(parse_err(path, ln, "trailing content after facets"));
    }
    Mesh::new(vertices, cells, facets)
}

/// Reads a mesh file in the format described at [`parse_mesh`].
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    parse_mesh(&read_to_string(path)?, path)
}

/// Writes `mesh` in the format read by [`load_mesh`].
pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = String::new();
    out.push_str(&format!("vertices {}\n", mesh.num_vertices()));
    for v in mesh.vertices() {
        out.push_str(&format!("{:.17e} {:.17e}\n", v[0], v[1]));
    }
    out.push_str(&format!("cells {}\n", mesh.num_cells()));
    for c in mesh.cells() {
        out.push_str(&format!("{} {} {}\n", c[0], c[1], c[2]));
    }
    out.push_str(&format!("facets {}\n", mesh.facets().len()));
    for f in mesh.facets() {
        out.push_str(&format!("{} {} {}\n", f.vertices[0], f.vertices[1], f.tag));
    }
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(out.as_bytes()).map_err(io)
}

/// Parses a profile CSV with header `arc,bed,surface` (metres).
pub fn parse_profile(text: &str, path: &Path) -> Result<GlacierProfile> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let expected = ["arc", "bed", "surface"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(parse_err(path, 1, "expected header 'arc,bed,surface'"));
    }
    let (mut arc, mut bed, mut surface) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let value = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad number '{}'", &record[i])))
        };
        arc.push(value(0)?);
        bed.push(value(1)?);
        surface.push(value(2)?);
    }
    GlacierProfile::new(arc, bed, surface)
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<GlacierProfile> {
    let path = path.as_ref();
    parse_profile(&read_to_string(path)?, path)
}

/// Angle statistics of a triangulation.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshQuality {
    /// Smallest interior angle of every cell (radians).
    pub cell_min_angle: Vec<f64>,
    /// Smallest angle over the whole mesh (radians).
    pub min_angle: f64,
    /// Smallest per-cell ratio of minimum to maximum interior angle.
    pub angle_ratio: f64,
}

fn cell_angles(p: [Point; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, angle) in out.iter_mut().enumerate() {
        let o = p[k];
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        let (ux, uy) = (a[0] - o[0], a[1] - o[1]);
        let (vx, vy) = (b[0] - o[0], b[1] - o[1]);
        *angle = (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy);
    }
    out
}

pub fn mesh_quality(mesh: &Mesh) -> MeshQuality {
    let mut cell_min_angle = Vec::with_capacity(mesh.num_cells());
    let mut angle_ratio = f64::INFINITY;
    for c in 0..mesh.num_cells() {
        let angles = cell_angles(mesh.cell_points(c));
        let lo = angles.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = angles.iter().copied().fold(0.0, f64::max);
        cell_min_angle.push(lo);
        angle_ratio = angle_ratio.min(lo / hi);
    }
    let min_angle = cell_min_angle.iter().copied().fold(f64::INFINITY, f64::min);
    MeshQuality {
        cell_min_angle,
        min_angle,
        angle_ratio,
    }
}
