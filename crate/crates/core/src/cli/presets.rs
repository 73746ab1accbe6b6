//! Scenario grid over demand type, field of view and limiting magnitude.

use std::path::{Path, PathBuf};

use super::config::{CatalogConfig, DemandConfig, LetConfig, ObserverConfig, ScenarioConfig, SolverConfig, TimeConfig};
use crate::demand::{ConeParams, SoiParams};
use crate::error::Result;
use crate::lagrangean::LmConfig;

pub const PRESET_FOVS: [f64; 2] = [60.0, 120.0];
pub const PRESET_MAGNITUDES: [f64; 3] = [15.0, 18.0, 20.0];

fn demand_variants() -> [(&'static str, DemandConfig); 3] {
    [
        ("soi", DemandConfig::Soi(SoiParams::default())),
        ("cone", DemandConfig::Cone(ConeParams::default())),
        ("let", DemandConfig::Let(LetConfig::default())),
    ]
}

/// Every cell of the grid with the given constellation size.
pub fn preset_scenarios(p: usize) -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for (label, demand) in demand_variants() {
        for fov in PRESET_FOVS {
            for m_crit in PRESET_MAGNITUDES {
                let name = format!("{label}-fov{fov:.0}-m{m_crit:.0}-p{p}");
                out.push(ScenarioConfig {
                    output: Some(PathBuf::from(format!("{name}.json"))),
                    name,
                    p,
                    seed: 0,
                    threads: None,
                    demand: demand.clone(),
                    observer: ObserverConfig {
                        fov_deg: fov,
                        m_crit,
                        ..ObserverConfig::default()
                    },
                    catalog: CatalogConfig::default(),
                    time: TimeConfig::default(),
                    solver: SolverConfig::Lm {
                        lm: LmConfig {
                            time_limit_s: Some(1000.0),
                            ..LmConfig::default()
                        },
                    },
                });
            }
        }
    }
    out
}

/// Write one TOML file per preset into `dir`.
pub fn write_presets(dir: &Path, p: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for config in preset_scenarios(p) {
        let path = dir.join(format!("{}.toml", config.name));
        std::fs::write(&path, config.to_toml()?)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_unique_valid_cells() {
        let presets = preset_scenarios(2);
        assert_eq!(presets.len(), 18);
        let mut names: Vec<_> = presets.iter().map(|c| c.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 18);
        for c in &presets {
            c.validate().unwrap();
        }
    }

    #[test]
    fn written_presets_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_presets(dir.path(), 3).unwrap();
        assert_eq!(paths.len(), 18);
        for (path, original) in paths.iter().zip(preset_scenarios(3)) {
            let text = std::fs::read_to_string(path).unwrap();
            assert_eq!(ScenarioConfig::parse(&text, path).unwrap(), original);
        }
    }
}
