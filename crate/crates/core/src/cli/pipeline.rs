//! Scenario assembly, solver dispatch and result files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{DemandConfig, ScenarioConfig, SolverConfig};
use crate::demand::{cone_of_shame, let_window, load_demand, random_monthly_pattern, soi_grid, synthesize_let_demand, DemandSet};
use crate::dynamics::{complete_catalog, load_table, slot_ephemeris, table_rows, time_grid, Cr3bpSystem, Ephemeris, EphemerisOptions, LpoRecord};
use crate::error::{Error, Result};
use crate::illumination::{pointing_directions, ObservationModel, SensorParams, SunModel};
use crate::lagrangean::{self, IterationRecord, StopReason};
use crate::model::{
    build_visibility_tensor, export_mps, facility_costs, import_solution, slot_metadata, validate_solution, Instance,
    ReferenceGeometry, Solution, Violation,
};

/// Wall-clock seconds per stage; kept out of the result file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub catalog_s: f64,
    pub ephemeris_s: f64,
    pub demand_s: f64,
    pub tensor_s: f64,
    pub solve_s: f64,
    pub total_s: f64,
}

pub struct Scenario {
    pub system: Cr3bpSystem,
    pub catalog: Vec<LpoRecord>,
    pub ephemeris: Ephemeris,
    pub demand: DemandSet,
    pub model: ObservationModel,
    pub instance: Instance,
}

fn seconds(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

pub fn build_catalog_for(config: &ScenarioConfig, system: &Cr3bpSystem) -> Result<Vec<LpoRecord>> {
    let rows = match &config.catalog.table {
        Some(path) => load_table(path)?,
        None => table_rows(),
    };
    let families = config.catalog.family_filter()?;
    let resonances = config.catalog.resonance_filter()?;
    let catalog: Vec<LpoRecord> = complete_catalog(system, rows, config.catalog.spacing_hours)?
        .into_iter()
        .filter(|r| families.is_empty() || families.contains(&r.family))
        .filter(|r| resonances.is_empty() || resonances.contains(&r.resonance))
        .collect();
    if catalog.is_empty() {
        return Err(Error::Config("the catalog filters leave no orbit".into()));
    }
    Ok(catalog)
}

pub fn build_demand(config: &ScenarioConfig, system: &Cr3bpSystem, horizon: usize) -> Result<DemandSet> {
    match &config.demand {
        DemandConfig::Soi(params) => soi_grid(system, params, horizon),
        DemandConfig::Cone(params) => cone_of_shame(system, params, horizon),
        DemandConfig::Let(params) => {
            let targets = let_window(system, &params.window())?;
            let period = params.period.unwrap_or(config.time.steps_per_month);
            let seed = params.pattern_seed.unwrap_or(config.seed);
            let pattern = random_monthly_pattern(seed, period, targets.len(), params.density)?;
            synthesize_let_demand(targets, horizon, &pattern)
        }
        DemandConfig::File { path } => {
            let set = load_demand(path)?;
            if set.horizon() != horizon {
                return Err(Error::DimensionMismatch {
                    expected: horizon,
                    found: set.horizon(),
                    context: "demand file horizon vs time grid",
                });
            }
            Ok(set)
        }
    }
}

/// Catalog, ephemeris, demand, visibility tensor and the model instance.
pub fn build_scenario(config: &ScenarioConfig, timings: &mut Timings) -> Result<Scenario> {
    config.validate()?;
    let system = Cr3bpSystem::earth_moon();

    let clock = Instant::now();
    let catalog = build_catalog_for(config, &system)?;
    timings.catalog_s = seconds(clock);

    let clock = Instant::now();
    let (horizon, dt) = time_grid(&system, config.time.steps_per_month, config.time.months);
    let options = EphemerisOptions {
        tol: config.catalog.tol,
        refine: config.catalog.refine,
        ..EphemerisOptions::default()
    };
    let ephemeris = slot_ephemeris(&system, &catalog, horizon, dt, &options)?;
    timings.ephemeris_s = seconds(clock);

    let clock = Instant::now();
    let demand = build_demand(config, &system, horizon)?;
    timings.demand_s = seconds(clock);

    let clock = Instant::now();
    let sensor = SensorParams {
        fov: config.observer.fov_deg,
        m_crit: config.observer.m_crit,
        moon_radius: config.observer.moon_radius_km,
    };
    sensor.validate()?;
    config.observer.optics.validate()?;
    let sun = SunModel::new(&system, config.time.sun_theta0_deg.to_radians());
    sun.validate()?;
    let model = ObservationModel {
        system,
        sensor,
        optics: config.observer.optics,
        sun,
    };
    let tensor = build_visibility_tensor(&ephemeris, &demand, &pointing_directions(), &model)?;
    timings.tensor_s = seconds(clock);

    let costs = facility_costs(&catalog, &ephemeris.slots);
    let slots = slot_metadata(&catalog, &ephemeris.slots);
    let reference = ReferenceGeometry {
        mean_target: demand.mean_position_lu(&system),
        sun: sun.position(0.0),
    };
    let instance = Instance::new(tensor, costs, config.p, slots, reference)?;
    Ok(Scenario {
        system,
        catalog,
        ephemeris,
        demand,
        model,
        instance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub m: usize,
    pub n: usize,
    pub ell: usize,
    pub q: usize,
    pub p: usize,
    pub demanded: usize,
    pub tensor_entries: usize,
    pub tensor_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenSlot {
    pub slot: usize,
    pub orbit: usize,
    pub orbit_label: String,
    pub phase_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCoverage {
    pub t: usize,
    pub covered: usize,
    pub demanded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub dims: Dimensions,
    pub solution: Option<Solution>,
    pub chosen: Vec<ChosenSlot>,
    pub objective: Option<f64>,
    pub coverage: Option<f64>,
    pub best_upper: Option<f64>,
    pub gap: Option<f64>,
    pub stop: Option<StopReason>,
    pub history: Vec<IterationRecord>,
    pub coverage_by_step: Vec<StepCoverage>,
    /// chosen slots per orbit label
    pub usage: BTreeMap<String, usize>,
    pub mps_path: Option<PathBuf>,
    #[serde(skip)]
    pub timings: Timings,
}

fn summarize(config: &ScenarioConfig, instance: &Instance, solution: Option<Solution>) -> RunResult {
    let tensor = &instance.tensor;
    let dims = Dimensions {
        m: instance.m(),
        n: instance.n(),
        ell: instance.ell(),
        q: instance.q(),
        p: instance.p,
        demanded: tensor.demand().count_ones(),
        tensor_entries: tensor.entry_count(),
        tensor_density: tensor.density(),
    };
    let mut chosen = Vec::new();
    let mut usage = BTreeMap::new();
    let mut coverage_by_step = Vec::new();
    if let Some(sol) = &solution {
        for &j in &sol.slots {
            let meta = &instance.slots[j];
            chosen.push(ChosenSlot {
                slot: j,
                orbit: meta.orbit,
                orbit_label: meta.orbit_label.clone(),
                phase_offset: meta.phase_offset,
            });
            *usage.entry(meta.orbit_label.clone()).or_insert(0) += 1;
        }
        coverage_by_step = (0..instance.ell())
            .map(|t| StepCoverage {
                t,
                covered: sol.theta.row_count(t),
                demanded: tensor.demand().row_count(t),
            })
            .collect();
    }
    RunResult {
        config: config.clone(),
        dims,
        objective: solution.as_ref().map(|s| s.objective),
        coverage: solution.as_ref().map(|s| s.coverage),
        solution,
        chosen,
        best_upper: None,
        gap: None,
        stop: None,
        history: Vec::new(),
        coverage_by_step,
        usage,
        mps_path: None,
        timings: Timings::default(),
    }
}

/// Solve or export according to the solver block, on an already built scenario.
pub fn solve_scenario(config: &ScenarioConfig, scenario: &Scenario) -> Result<RunResult> {
    let instance = &scenario.instance;
    match &config.solver {
        SolverConfig::Lm { lm } => {
            let outcome = lagrangean::run(instance, lm)?;
            let mut result = summarize(config, instance, Some(outcome.solution.clone()));
            result.best_upper = Some(outcome.best_upper);
            result.gap = Some(outcome.gap());
            result.stop = Some(outcome.stop);
            result.history = outcome.history;
            Ok(result)
        }
        SolverConfig::MpsExport { variant, path } => {
            export_mps(instance, *variant, path)?;
            let mut result = summarize(config, instance, None);
            result.mps_path = Some(path.clone());
            Ok(result)
        }
        SolverConfig::ImportSolution { path } => {
            let solution = import_solution(path, instance)?;
            Ok(summarize(config, instance, Some(solution)))
        }
    }
}

fn thread_count(config: &ScenarioConfig) -> Result<Option<usize>> {
    if let Some(n) = config.threads {
        return Ok(Some(n));
    }
    match std::env::var("CSSA_THREADS") {
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("CSSA_THREADS={text} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Build, solve and write the result file (plus a timings sidecar).
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunResult> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(config)? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start the thread pool: {e}")))?;
    pool.install(|| {
        let clock = Instant::now();
        let mut timings = Timings::default();
        let scenario = build_scenario(config, &mut timings)?;
        let solve_clock = Instant::now();
        let mut result = solve_scenario(config, &scenario)?;
        timings.solve_s = seconds(solve_clock);
        timings.total_s = seconds(clock);
        result.timings = timings;
        write_result(&result, &config.output_path())?;
        Ok(result)
    })
}

pub fn timings_path(path: &Path) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".timings.json");
    path.with_file_name(name)
}

pub fn write_result(result: &RunResult, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(result)?;
    text.push('\n');
    std::fs::write(path, text)?;
    std::fs::write(timings_path(path), serde_json::to_string_pretty(&result.timings)? + "\n")?;
    Ok(())
}

pub fn load_result(path: &Path) -> Result<RunResult> {
    let text = std::fs::read_to_string(path)?;
    let mut result: RunResult = serde_json::from_str(&text)?;
    if let Ok(t) = std::fs::read_to_string(timings_path(path)) {
        result.timings = serde_json::from_str(&t)?;
    }
    Ok(result)
}

/// Re-check the embedded solution against a freshly built instance.
pub fn revalidate(result: &RunResult, instance: &Instance) -> Vec<Violation> {
    match &result.solution {
        Some(sol) => validate_solution(sol, instance),
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::export_plot_data;
    use crate::oracle::{random_instance, MicroDims};

    fn config(p: usize) -> ScenarioConfig {
        ScenarioConfig::parse(&format!("p = {p}\n[demand]\nkind = \"soi\"\n"), Path::new("t.toml")).unwrap()
    }

    fn read(dir: &Path, name: &str) -> Vec<String> {
        std::fs::read_to_string(dir.join(name)).unwrap().lines().skip(1).map(String::from).collect()
    }

    #[test]
    fn plot_tables_match_the_run() {
        let dims = MicroDims { m: 2, n: 5, ell: 3, q: 4, p: 2 };
        let instance = random_instance(4, dims, 0.4).to_instance().unwrap();
        let outcome = lagrangean::run(&instance, &Default::default()).unwrap();
        let mut result = summarize(&config(2), &instance, Some(outcome.solution));
        result.history = outcome.history;
        let dir = tempfile::tempdir().unwrap();
        export_plot_data(&result, dir.path()).unwrap();
        assert_eq!(read(dir.path(), "coverage.csv").len(), dims.ell);
        assert_eq!(read(dir.path(), "bounds.csv").len(), result.history.len());
        let usage: usize = read(dir.path(), "usage.csv")
            .iter()
            .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(usage, dims.p);
    }

    #[test]
    fn full_coverage_rows_are_saturated() {
        let dims = MicroDims { m: 1, n: 3, ell: 4, q: 5, p: 1 };
        let instance = random_instance(1, dims, 1.0).to_instance().unwrap();
        let solution = lagrangean::run(&instance, &Default::default()).unwrap().solution;
        assert_eq!(solution.coverage, 1.0);
        let result = summarize(&config(1), &instance, Some(solution));
        let dir = tempfile::tempdir().unwrap();
        export_plot_data(&result, dir.path()).unwrap();
        for row in read(dir.path(), "coverage.csv") {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[1], cols[2], "{row}");
        }
    }

    #[test]
    fn result_json_round_trips() {
        let instance = random_instance(2, MicroDims { m: 2, n: 4, ell: 2, q: 3, p: 2 }, 0.5).to_instance().unwrap();
        let solution = lagrangean::run(&instance, &Default::default()).unwrap().solution;
        let mut result = summarize(&config(2), &instance, Some(solution));
        result.timings.total_s = 1.5;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_result(&result, &path).unwrap();
        let back = load_result(&path).unwrap();
        assert_eq!(back, result);
        assert!(revalidate(&back, &instance).is_empty());
        assert!(!std::fs::read_to_string(&path).unwrap().contains("total_s"));
    }
}
