use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cislunar_ssa::cli::{self, config::ScenarioConfig, SolverConfig};
use cislunar_ssa::dynamics::Cr3bpSystem;
use cislunar_ssa::{Error, Result};

#[derive(Parser)]
#[command(name = "cislunar-ssa", version, about = "Cislunar observer constellation design")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and solve (or export) a scenario
    Run(RunArgs),
    /// Print the orbit catalog with slot counts
    Catalog {
        #[arg(long, default_value_t = 12.0)]
        spacing_hours: f64,
    },
    /// Write CSV plot data for a result file
    PlotData {
        result: PathBuf,
        #[arg(long, default_value = "plot-data")]
        out: PathBuf,
    },
    /// Write the preset scenario grid as TOML files
    Presets {
        #[arg(long, default_value = "presets")]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        p: usize,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// one or more scenario files, run in order
    #[arg(required = true)]
    scenarios: Vec<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    fov: Option<f64>,
    #[arg(long)]
    m_crit: Option<f64>,
    /// seconds; applies to the Lagrangean solver
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, env = "CSSA_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(p) = self.p {
            config.p = p;
        }
        if let Some(fov) = self.fov {
            config.observer.fov_deg = fov;
        }
        if let Some(m) = self.m_crit {
            config.observer.m_crit = m;
        }
        if let Some(limit) = self.time_limit {
            if let SolverConfig::Lm { lm } = &mut config.solver {
                lm.time_limit_s = Some(limit);
            }
        }
        if self.threads.is_some() {
            config.threads = self.threads;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if self.output.is_some() {
            config.output = self.output.clone();
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    if args.scenarios.len() > 1 && args.output.is_some() {
        return Err(Error::Config("--output needs a single scenario".into()));
    }
    for path in &args.scenarios {
        let mut config = cli::load_config(path)?;
        args.apply(&mut config);
        run_one(&config)?;
    }
    Ok(())
}

fn run_one(config: &ScenarioConfig) -> Result<()> {
    let result = cli::run_scenario(config)?;
    let d = &result.dims;
    println!("instance  m={} n={} ell={} q={} p={} density={:.4}", d.m, d.n, d.ell, d.q, d.p, d.tensor_density);
    if let Some(z) = result.objective {
        println!("objective {z:.4}  coverage {:.4}", result.coverage.unwrap_or(0.0));
    }
    if let (Some(u), Some(g)) = (result.best_upper, result.gap) {
        println!("bound     {u:.4}  gap {g:.4}  stop {:?}", result.stop);
    }
    for c in &result.chosen {
        println!("slot {:5}  {}  phase {:.4}", c.slot, c.orbit_label, c.phase_offset);
    }
    if let Some(path) = &result.mps_path {
        println!("model written to {}", path.display());
    }
    println!("result    {}  ({:.1} s)", config.output_path().display(), result.timings.total_s);
    Ok(())
}

fn catalog(spacing_hours: f64) -> Result<()> {
    let system = Cr3bpSystem::earth_moon();
    let records = cislunar_ssa::dynamics::complete_catalog(&system, cislunar_ssa::dynamics::table_rows(), spacing_hours)?;
    let mut total = 0;
    println!("{:>3}  {:<24} {:>11} {:>10} {:>6}", "#", "orbit", "period [d]", "stability", "slots");
    for (idx, r) in records.iter().enumerate() {
        let days = system.tu_to_hours(r.period) / 24.0;
        println!("{idx:>3}  {:<24} {days:>11.4} {:>10.2} {:>6}", r.label(), r.stability, r.slots);
        total += r.slots;
    }
    println!("{} orbits, {total} slots", records.len());
    Ok(())
}

fn dispatch(args: Args) -> Result<()> {
    match args.command {
        Command::Run(run_args) => run(run_args),
        Command::Catalog { spacing_hours } => catalog(spacing_hours),
        Command::PlotData { result, out } => {
            let loaded = cli::load_result(&result)?;
            for path in cli::export_plot_data(&loaded, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Presets { out, p } => {
            for path in cli::write_presets(&out, p)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
