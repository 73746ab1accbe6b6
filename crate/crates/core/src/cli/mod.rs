//! Scenario files, the end-to-end pipeline and result export.

pub mod config;
pub mod pipeline;
pub mod plot;
pub mod presets;

pub use config::{load_config, DemandConfig, LetConfig, ScenarioConfig, SolverConfig};
pub use pipeline::{
    build_scenario, load_result, revalidate, run_scenario, solve_scenario, write_result, RunResult, Scenario, Timings,
};
pub use plot::export_plot_data;
pub use presets::{preset_scenarios, write_presets};
