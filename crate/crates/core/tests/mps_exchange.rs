use std::path::{Path, PathBuf};
use std::process::Command;

use cislunar_ssa::bits::BitMatrix;
use cislunar_ssa::model::{import_solution, mps::write_mps, Instance, MpsVariant, VisibilityTensor};
use cislunar_ssa::oracle::{brute_force_optimum, random_instance, MicroDims};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn helper() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/support/solve_mps.py")
}

fn golden_cases() -> Vec<(&'static str, Instance, MpsVariant)> {
    let dims = MicroDims { m: 2, n: 3, ell: 2, q: 3, p: 1 };
    vec![
        ("micro_aggregate.mps", random_instance(11, dims, 0.5).to_instance().unwrap(), MpsVariant::Aggregate),
        ("micro_time_robust.mps", random_instance(12, dims, 0.5).to_instance().unwrap(), MpsVariant::TimeRobust),
    ]
}

fn render(instance: &Instance, variant: MpsVariant) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_mps(instance, variant, &mut bytes).unwrap();
    bytes
}

/// Regenerate with `CSSA_BLESS=1 cargo test --test mps_exchange`.
#[test]
fn golden_files_are_byte_stable() {
    for (name, instance, variant) in golden_cases() {
        let path = golden_dir().join(name);
        let fresh = render(&instance, variant);
        assert_eq!(fresh, render(&instance, variant), "{name} differs between two writes");
        if std::env::var_os("CSSA_BLESS").is_some() {
            std::fs::write(&path, &fresh).unwrap();
        }
        let stored = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(stored == fresh, "{name} no longer matches the golden file");
    }
}

enum Milp {
    Solved { objective: f64, solution: PathBuf },
    Unavailable,
}

fn solve_with_highs(instance: &Instance, variant: MpsVariant, dir: &Path, tag: &str) -> Milp {
    let model = dir.join(format!("{tag}.mps"));
    let solution = dir.join(format!("{tag}.sol"));
    std::fs::write(&model, render(instance, variant)).unwrap();
    let output = match Command::new("python3").arg(helper()).arg(&model).arg(&solution).output() {
        Ok(o) => o,
        Err(_) => return Milp::Unavailable,
    };
    match output.status.code() {
        Some(0) => {}
        Some(3) => return Milp::Unavailable,
        other => panic!("HiGHS helper failed ({other:?}): {}", String::from_utf8_lossy(&output.stderr)),
    }
    let objective: f64 = String::from_utf8_lossy(&output.stdout).trim().parse().unwrap();
    Milp::Solved { objective, solution }
}

#[test]
fn external_milp_optimum_matches_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let dims = MicroDims { m: 2, n: 4, ell: 3, q: 4, p: 2 };
    for seed in 0..8u64 {
        let instance = random_instance(seed, dims, 0.35).to_instance().unwrap();
        let (z_star, _) = brute_force_optimum(&instance).unwrap();
        match solve_with_highs(&instance, MpsVariant::Aggregate, dir.path(), &format!("s{seed}")) {
            Milp::Unavailable => {
                eprintln!("highspy not available; external MILP check skipped");
                return;
            }
            Milp::Solved { objective, solution } => {
                assert!((-objective - z_star).abs() <= 1e-6, "seed {seed}: MILP {} vs Z* {z_star}", -objective);
                let imported = import_solution(&solution, &instance).unwrap();
                assert!((imported.objective - z_star).abs() <= 1e-6, "seed {seed}: imported {}", imported.objective);
            }
        }
    }
}

#[test]
fn time_robust_coverage_is_zero_with_a_blind_step() {
    // step 1 has no visible entry at all
    let tensor = VisibilityTensor::from_fn(2, 3, BitMatrix::filled(2, 3), |i, j, t, k| t == 0 && (i + j + k) % 2 == 0).unwrap();
    let instance = Instance::synthetic(tensor, vec![0.95, 0.92, 0.97], 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    match solve_with_highs(&instance, MpsVariant::TimeRobust, dir.path(), "blind") {
        Milp::Unavailable => eprintln!("highspy not available; robust check skipped"),
        Milp::Solved { objective, solution } => {
            let text = std::fs::read_to_string(&solution).unwrap();
            let psi: f64 = text
                .lines()
                .find_map(|l| l.strip_prefix("PSI "))
                .expect("PSI column")
                .parse()
                .unwrap();
            assert!(psi.abs() < 1e-9, "psi = {psi}");
            // only the cheapest slot cost remains
            assert!((-objective + 0.92 / 2.0).abs() < 1e-9, "objective {objective}");
        }
    }
}
