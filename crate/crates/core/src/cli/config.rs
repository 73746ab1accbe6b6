//! Scenario configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::demand::{ConeParams, LetWindowParams, SoiParams, STEPS_PER_MONTH};
use crate::dynamics::{Family, Resonance};
use crate::error::{Error, Result};
use crate::illumination::{TargetOptics, MOON_RADIUS_KM};
use crate::lagrangean::LmConfig;
use crate::model::MpsVariant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DemandConfig {
    Soi(SoiParams),
    Cone(ConeParams),
    Let(LetConfig),
    /// demand file in the `save_demand` format
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LetConfig {
    /// km; L2 when absent
    pub center_km: Option<[f64; 3]>,
    pub spans_km: [f64; 3],
    pub counts: [usize; 3],
    /// fraction of active (step, target) pairs in the monthly pattern
    pub density: f64,
    /// pattern seed; the scenario seed when absent
    pub pattern_seed: Option<u64>,
    /// pattern length in steps; one synodic month when absent
    pub period: Option<usize>,
}

impl Default for LetConfig {
    fn default() -> Self {
        let window = LetWindowParams::default();
        Self {
            center_km: window.center_km,
            spans_km: window.spans_km,
            counts: window.counts,
            density: 0.3,
            pattern_seed: None,
            period: None,
        }
    }
}

impl LetConfig {
    pub fn window(&self) -> LetWindowParams {
        LetWindowParams {
            center_km: self.center_km,
            spans_km: self.spans_km,
            counts: self.counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverConfig {
    /// full cone angle, deg
    pub fov_deg: f64,
    pub m_crit: f64,
    /// occulting radius, km; 0 disables occultation
    pub moon_radius_km: f64,
    pub optics: TargetOptics,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            fov_deg: 60.0,
            m_crit: 18.0,
            moon_radius_km: MOON_RADIUS_KM,
            optics: TargetOptics::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    pub spacing_hours: f64,
    /// orbit table file; the embedded table when absent
    pub table: Option<PathBuf>,
    /// keep only these families (labels as printed by `catalog`)
    pub families: Vec<String>,
    /// keep only these resonances, written `M:N`
    pub resonances: Vec<String>,
    /// differential correction of the tabulated initial states
    pub refine: bool,
    pub tol: f64,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        Self {
            spacing_hours: 12.0,
            table: None,
            families: Vec::new(),
            resonances: Vec::new(),
            refine: true,
            tol: 1e-12,
        }
    }
}

impl CatalogConfig {
    pub fn family_filter(&self) -> Result<Vec<Family>> {
        self.families
            .iter()
            .map(|s| s.parse::<Family>().map_err(Error::Config))
            .collect()
    }

    pub fn resonance_filter(&self) -> Result<Vec<Resonance>> {
        self.resonances.iter().map(|s| parse_resonance(s)).collect()
    }
}

pub fn parse_resonance(text: &str) -> Result<Resonance> {
    let bad = || Error::Config(format!("resonance `{text}` is not of the form M:N"));
    let (m, n) = text.split_once(':').ok_or_else(bad)?;
    let m: u32 = m.trim().parse().map_err(|_| bad())?;
    let n: u32 = n.trim().parse().map_err(|_| bad())?;
    if m == 0 || n == 0 {
        return Err(bad());
    }
    Ok(Resonance::new(m, n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub steps_per_month: usize,
    pub months: usize,
    /// Sun angle at step 0, deg
    pub sun_theta0_deg: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            steps_per_month: STEPS_PER_MONTH,
            months: 2,
            sun_theta0_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverConfig {
    Lm {
        #[serde(default)]
        lm: LmConfig,
    },
    MpsExport {
        variant: MpsVariant,
        path: PathBuf,
    },
    ImportSolution {
        path: PathBuf,
    },
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::Lm { lm: LmConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub p: usize,
    #[serde(default)]
    pub seed: u64,
    /// worker threads; `CSSA_THREADS` or all cores when absent
    #[serde(default)]
    pub threads: Option<usize>,
    /// result file; `<name>.json` next to the scenario when absent
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub demand: DemandConfig,
    #[serde(default)]
    pub observer: ObserverConfig,
    #[serde(default)]
    pub catalog: CatalogConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.p == 0 {
            return fail("p must be at least 1".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1".into());
        }
        if self.time.steps_per_month == 0 || self.time.months == 0 {
            return fail("the time grid needs at least one step".into());
        }
        if !(self.observer.fov_deg > 0.0) {
            return fail(format!("fov_deg {} must be positive", self.observer.fov_deg));
        }
        self.catalog.family_filter()?;
        self.catalog.resonance_filter()?;
        let must_exist = |path: &Path, what: &str| {
            if path.exists() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} {} does not exist", path.display())))
            }
        };
        if let Some(table) = &self.catalog.table {
            must_exist(table, "orbit table")?;
        }
        if let DemandConfig::File { path } = &self.demand {
            must_exist(path, "demand file")?;
        }
        match &self.solver {
            SolverConfig::Lm { lm } => lm.validate()?,
            SolverConfig::ImportSolution { path } => must_exist(path, "solution file")?,
            SolverConfig::MpsExport { .. } => {}
        }
        Ok(())
    }

    /// Resolve relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = &mut self.output {
            fix(p);
        }
        if let Some(p) = &mut self.catalog.table {
            fix(p);
        }
        if let DemandConfig::File { path } = &mut self.demand {
            fix(path);
        }
        match &mut self.solver {
            SolverConfig::MpsExport { path, .. } | SolverConfig::ImportSolution { path } => fix(path),
            SolverConfig::Lm { .. } => {}
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| {
            let name = if self.name.is_empty() { "result" } else { &self.name };
            PathBuf::from(format!("{name}.json"))
        })
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|span| line_column(text, span.start))
                .unwrap_or((1, 1));
            Error::parse(path, line, column, e.message().to_string())
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Read a scenario, resolving relative paths against its directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    let mut config = ScenarioConfig::parse(&text, path)?;
    config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOI: &str = r#"
name = "soi"
p = 2

[demand]
kind = "soi"
counts = [6, 4, 5]

[observer]
fov_deg = 60
m_crit = 15

[solver]
mode = "lm"
lm = { max_iterations = 5 }
"#;

    #[test]
    fn minimal_scenario_parses() {
        let c = ScenarioConfig::parse(SOI, Path::new("s.toml")).unwrap();
        assert_eq!(c.p, 2);
        assert_eq!(c.observer.m_crit, 15.0);
        assert_eq!(c.time.steps_per_month, 60);
        assert!(matches!(c.demand, DemandConfig::Soi(SoiParams { counts: [6, 4, 5], .. })));
        match &c.solver {
            SolverConfig::Lm { lm } => {
                assert_eq!(lm.max_iterations, 5);
                assert_eq!(lm.c_alpha, 4);
            }
            other => panic!("{other:?}"),
        }
        c.validate().unwrap();
        let again = ScenarioConfig::parse(&c.to_toml().unwrap(), Path::new("s.toml")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_keys_report_position() {
        let text = SOI.replace("m_crit = 15", "m_crit = 15\nbogus = 1");
        match ScenarioConfig::parse(&text, Path::new("s.toml")) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 12);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn let_and_export_sections() {
        let text = r#"
p = 3
[demand]
kind = "let"
counts = [3, 15, 15]
density = 0.25
[solver]
mode = "mps-export"
variant = "time-robust"
path = "out.mps"
"#;
        let c = ScenarioConfig::parse(text, Path::new("s.toml")).unwrap();
        match &c.demand {
            DemandConfig::Let(l) => {
                assert_eq!(l.density, 0.25);
                assert_eq!(l.window().counts, [3, 15, 15]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(c.solver, SolverConfig::MpsExport { variant: MpsVariant::TimeRobust, .. }));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut c = ScenarioConfig::parse(SOI, Path::new("s.toml")).unwrap();
        c.p = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.p = 1;
        c.catalog.resonances = vec!["2-1".into()];
        assert!(c.validate().is_err());
        c.catalog.resonances = vec!["2:1".into()];
        c.demand = DemandConfig::File { path: "/no/such/file".into() };
        assert!(c.validate().is_err());
    }
}
