//! CSV output. Every file starts with the configuration echo and the run
//! notes as `#` comment lines, followed by a header row and the data.
//! Floats are written in scientific notation with 17 significant digits so
//! identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Experiment;
use crate::error::{LabError, Result};
use crate::experiments::RunReport;
use crate::plot;

/// Column names of the spectral table.
pub const SPECTRAL_COLUMNS: [&str; 11] = [
    "eps",
    "schur",
    "lambda_min",
    "lambda_max",
    "bound_lower",
    "bound_upper",
    "c0",
    "c_nu",
    "max_strain",
    "nonlinear_iters",
    "gmres_iters_mean",
];

/// Formats a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn preamble(report: &RunReport) -> String {
    let mut out = String::new();
    for line in report.config.echo().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for note in &report.notes {
        out.push_str("# note: ");
        out.push_str(note);
        out.push('\n');
    }
    out
}

fn table(report: &RunReport, header: &[&str], records: Vec<Vec<String>>) -> Result<String> {
    let mut buf = preamble(report).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in records {
            w.write_record(&r)?;
        }
        w.flush().map_err(|source| LabError::Io {
            path: PathBuf::from("<buffer>"),
            source,
        })?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// The spectral table (`eps`, `schur`, eigenvalue range, bounds, ...).
pub fn spectral_csv(report: &RunReport) -> Result<String> {
    let records = report
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.eps),
                r.schur.to_string(),
                fmt_float(r.lambda_min),
                fmt_float(r.lambda_max),
                fmt_float(r.bound_lower),
                fmt_float(r.bound_upper),
                fmt_float(r.c0),
                fmt_float(r.c_nu),
                fmt_float(r.max_strain),
                r.nonlinear_iters.to_string(),
                fmt_float(r.gmres_iters_mean),
            ]
        })
        .collect();
    table(report, &SPECTRAL_COLUMNS, records)
}

/// Discretization errors of the manufactured-solution run.
pub fn errors_csv(report: &RunReport) -> Result<String> {
    let records = report
        .errors
        .iter()
        .map(|e| {
            vec![
                fmt_float(e.eps),
                fmt_float(e.norms.velocity_h1),
                fmt_float(e.norms.pressure_l2),
                e.converged.to_string(),
            ]
        })
        .collect();
    table(report, &["eps", "velocity_h1", "pressure_l2", "converged"], records)
}

/// Inf-sup table with one column per mesh and one row per quantity.
pub fn infsup_csv(report: &RunReport) -> Result<String> {
    let cols = &report.infsup;
    let mut header = vec!["quantity"];
    header.extend(cols.iter().map(|c| c.domain.as_str()));
    let row = |name: &str, f: &dyn Fn(&crate::experiments::InfsupColumn) -> String| {
        let mut r = vec![name.to_string()];
        r.extend(cols.iter().map(f));
        r
    };
    let records = vec![
        row("element", &|c| c.element.to_string()),
        row("cells", &|c| c.cells.to_string()),
        row("min_angle_deg", &|c| fmt_float(c.min_angle_deg)),
        row("c0", &|c| fmt_float(c.c0)),
        row("c_nu", &|c| fmt_float(c.c_nu)),
    ];
    table(report, &header, records)
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| LabError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes every CSV and SVG file of the report into `dir` and returns the
/// paths in the order written.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| LabError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let exp = report.config.experiment;
    let mut written = Vec::new();
    match exp {
        Experiment::Ms | Experiment::Glacier => {
            written.push(write_file(dir.join(format!("{exp}_report.csv")), &spectral_csv(report)?)?);
            if exp == Experiment::Ms {
                written.push(write_file(dir.join("ms_errors.csv"), &errors_csv(report)?)?);
            }
            for (name, svg) in plot::emit_plots(report) {
                written.push(write_file(dir.join(name), &svg)?);
            }
        }
        Experiment::Infsup => {
            written.push(write_file(dir.join("infsup_report.csv"), &infsup_csv(report)?)?);
        }
    }
    Ok(written)
}
