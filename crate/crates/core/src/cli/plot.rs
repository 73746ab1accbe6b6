use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::pipeline::RunResult;
use crate::error::Result;

/// Write `bounds.csv`, `coverage.csv` and `usage.csv` into `dir`.
pub fn export_plot_data(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;

    let mut bounds = String::from("iteration,z_lr,z_lh,best_upper,best_lower\n");
    for r in &result.history {
        let _ = writeln!(bounds, "{},{},{},{},{}", r.iteration, r.upper, r.lower, r.best_upper, r.best_lower);
    }
    let mut coverage = String::from("t,covered,demanded\n");
    for s in &result.coverage_by_step {
        let _ = writeln!(coverage, "{},{},{}", s.t, s.covered, s.demanded);
    }
    let mut usage = String::from("orbit,count\n");
    for (label, count) in &result.usage {
        let _ = writeln!(usage, "{label},{count}");
    }

    let mut written = Vec::new();
    for (name, text) in [("bounds.csv", bounds), ("coverage.csv", coverage), ("usage.csv", usage)] {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
