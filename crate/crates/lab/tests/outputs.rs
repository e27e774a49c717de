use std::fs;
use std::path::Path;
use std::process::Command;

use pstokes_core::fem::StokesElement;
use pstokes_core::precond::SchurChoice;
use pstokes_lab::config::{Config, Experiment, InfsupDomain, SchurSelection};
use pstokes_lab::plot::emit_plots;
use pstokes_lab::report::{spectral_csv, write_outputs, SPECTRAL_COLUMNS};
use pstokes_lab::{run_infsup, run_ms, LabError};

fn small_ms() -> Config {
    let mut cfg = Config::defaults(Experiment::Ms);
    cfg.nx = 4;
    cfg.eps = vec![1e-1, 1e-2];
    cfg
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn config_file_errors_report_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# comment\nnx = 8\neps = 1e-2, abc\n").unwrap();
    let err = Config::load(&path, Experiment::Ms).unwrap_err();
    assert!(matches!(err, LabError::Config { line: 3, .. }), "{err}");
    assert!(err.to_string().contains("run.cfg:3"), "{err}");
    fs::write(&path, "n_layers = 3\nlake = none\n").unwrap();
    let cfg = Config::load(&path, Experiment::Glacier).unwrap();
    assert_eq!((cfg.n_layers, cfg.lake), (3, None));
    fs::write(&path, "n_layers = 3\nlake = 5\n").unwrap();
    assert!(matches!(Config::load(&path, Experiment::Glacier), Err(LabError::Config { line: 2, .. })));
    let missing = Config::load(&dir.path().join("missing.cfg"), Experiment::Ms);
    assert!(matches!(missing, Err(LabError::Io { .. })));
}

#[test]
fn csv_is_deterministic_with_full_precision() {
    let cfg = small_ms();
    let a = spectral_csv(&run_ms(&cfg).unwrap()).unwrap();
    let b = spectral_csv(&run_ms(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);

    // the echo reproduces the configuration
    let echo: String = a
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| !l.starts_with("note: "))
        .map(|l| format!("{l}\n"))
        .collect();
    assert_eq!(Config::parse(&echo, Path::new("echo"), Experiment::Ms).unwrap(), cfg);

    let lines = data_lines(&a);
    assert_eq!(lines[0], SPECTRAL_COLUMNS.join(","));
    // one row per eps and Schur choice
    assert_eq!(lines.len() - 1, cfg.eps.len() * 2);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), SPECTRAL_COLUMNS.len());
        for (i, f) in fields.iter().enumerate() {
            if i == 1 || i == 9 {
                continue;
            }
            let mantissa = f.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.len(), 18, "{f}");
            f.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn newtonian_single_row_report_and_plot() {
    let mut cfg = small_ms();
    cfg.p_power = 2.0;
    cfg.eps = vec![1.0];
    cfg.schur = SchurSelection::Mass;
    let report = run_ms(&cfg).unwrap();
    assert_eq!(report.rows.len(), 1);
    let r = &report.rows[0];
    let c0_sq = r.c0 * r.c0;
    for &l in &r.eigenvalues {
        assert!(l >= c0_sq * (1.0 - 1e-10) && l <= 1.0 + 1e-10, "{l} outside [{c0_sq}, 1]");
    }
    // bound lines sit at the theoretical values
    assert!((r.bound_lower - c0_sq).abs() < 1e-14 && (r.bound_upper - 1.0).abs() < 1e-14);

    let plots = emit_plots(&report);
    assert_eq!(plots.len(), 1);
    let (name, svg) = &plots[0];
    assert_eq!(name, "ms_m.svg");
    assert_eq!(svg.matches("class=\"marker-").count(), 2);
    assert_eq!(svg.matches("class=\"bound-upper\"").count(), 1);
    assert_eq!(svg.matches("class=\"bound-lower\"").count(), 1);
    assert!(svg.contains("stroke-dasharray=\"8,4\"") && svg.contains("stroke-dasharray=\"2,3\""));
}

#[test]
fn empty_report_produces_no_plots() {
    let mut report = run_ms(&Config {
        eps: vec![1.0],
        schur: SchurSelection::Mass,
        nx: 2,
        ..small_ms()
    })
    .unwrap();
    report.rows.clear();
    assert!(emit_plots(&report).is_empty());
}

#[test]
fn mini_c0_does_not_exceed_p2p1_c0() {
    let mut cfg = Config::defaults(Experiment::Infsup);
    cfg.infsup_domain = InfsupDomain::Square;
    cfg.nx_list = vec![8];
    let p2p1 = run_infsup(&cfg).unwrap().infsup[0].clone();
    cfg.element = StokesElement::Mini;
    let mini = run_infsup(&cfg).unwrap().infsup[0].clone();
    println!("c0: P2P1 {:.6}, MINI {:.6}", p2p1.c0, mini.c0);
    assert!(mini.c0 <= p2p1.c0);
    assert!(mini.c0 > 0.0 && mini.c_nu > 0.0);
}

#[test]
fn cli_writes_identical_files_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("ms.cfg");
    fs::write(&cfg_path, "nx = 4\nmethod = picard\n").unwrap();
    let run = |out: &Path| {
        let output = Command::new(env!("CARGO_BIN_EXE_pstokes-lab"))
            .arg("ms")
            .arg("--config")
            .arg(&cfg_path)
            .args(["--eps", "1e-1,1e-3", "--schur", "mnu", "--out"])
            .arg(out)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["ms_errors.csv", "ms_mnu.svg", "ms_report.csv"]);
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n}");
    }
    let report = fs::read_to_string(a.join("ms_report.csv")).unwrap();
    assert!(report.contains("# method = picard") && report.contains("# eps = 0.1, 0.001"));
    assert!(data_lines(&report)[1..].iter().all(|l| l.split(',').nth(1) == Some("mnu")));

    let bad = Command::new(env!("CARGO_BIN_EXE_pstokes-lab"))
        .args(["ms", "--element", "q2q1", "--out"])
        .arg(dir.path().join("c"))
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn infsup_table_has_one_column_per_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Config::defaults(Experiment::Infsup);
    cfg.infsup_domain = InfsupDomain::Square;
    cfg.nx_list = vec![4, 8];
    let report = run_infsup(&cfg).unwrap();
    let files = write_outputs(&report, dir.path()).unwrap();
    assert_eq!(files, [dir.path().join("infsup_report.csv")]);
    let text = fs::read_to_string(&files[0]).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "quantity,square nx=4,square nx=8");
    let rows: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["element", "cells", "min_angle_deg", "c0", "c_nu"]);
    assert!(lines[2].ends_with(",32,128"));
}

#[test]
fn schur_selection_controls_row_set() {
    let cfg = Config {
        schur: SchurSelection::ScaledMass,
        ..small_ms()
    };
    let report = run_ms(&cfg).unwrap();
    assert!(report.rows.iter().all(|r| r.schur == SchurChoice::ScaledMass));
    assert_eq!(report.rows.len(), cfg.eps.len());
    assert_eq!(report.errors.len(), cfg.eps.len());
}
