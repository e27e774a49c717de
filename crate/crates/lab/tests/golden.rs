//! Byte-level regression of the plots produced by the default
//! manufactured-solution run. Set `PSTOKES_UPDATE_GOLDEN=1` to rewrite the
//! stored files after an intentional change.

use std::fs;
use std::path::PathBuf;

use pstokes_lab::config::{Config, Experiment};
use pstokes_lab::plot::emit_plots;
use pstokes_lab::run_ms;

#[test]
fn default_ms_plots_match_golden_files() {
    let report = run_ms(&Config::defaults(Experiment::Ms)).unwrap();
    let plots = emit_plots(&report);
    assert_eq!(plots.len(), 2);
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("PSTOKES_UPDATE_GOLDEN").is_some();
    for (name, svg) in plots {
        let path = dir.join(&name);
        if update {
            fs::create_dir_all(&dir).unwrap();
            fs::write(&path, &svg).unwrap();
            continue;
        }
        let golden = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(golden == svg, "{name} differs from {}", path.display());
    }
}
