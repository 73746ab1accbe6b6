//! Single-shooting refinement of symmetric periodic orbits.
//!
//! Every catalog orbit starts perpendicular to the x-z plane, so at half the
//! period it crosses that plane perpendicularly again. The period is held
//! fixed (it carries the synodic resonance) and the free initial coordinates
//! are adjusted until `y`, `vx` (and `vz` for spatial orbits) vanish at `T/2`.

use nalgebra::{DMatrix, DVector, Matrix6};

use super::catalog::LpoRecord;
use super::system::{stability_index_with, Cr3bpSystem, StabilityConvention, State6};
use crate::error::{Error, Result};

const MAX_NEWTON_ITERATIONS: usize = 25;

#[derive(Debug, Clone)]
pub struct CorrectedOrbit {
    pub state: State6,
    pub period: f64,
    /// max |y|, |vx|, |vz| at the half period after correction
    pub crossing_residual: f64,
    pub iterations: usize,
}

/// Infinity-norm distance between the initial state and the state after `period`.
pub fn closure_residual(system: &Cr3bpSystem, state: &State6, period: f64, tol: f64) -> Result<f64> {
    let (end, _) = system.propagate(state, period, false, tol)?;
    Ok(end.max_abs_diff(state))
}

pub fn monodromy(system: &Cr3bpSystem, state: &State6, period: f64, tol: f64) -> Result<Matrix6<f64>> {
    let (_, stm) = system.propagate(state, period, true, tol)?;
    stm.ok_or(Error::EigenFailure)
}

pub fn correct_orbit(system: &Cr3bpSystem, record: &LpoRecord, tol: f64) -> Result<CorrectedOrbit> {
    let spatial = record.z0 != 0.0 || !record.family.is_planar();
    let free: &[usize] = if spatial { &[0, 2, 4] } else { &[0, 4] };
    let targets: &[usize] = if spatial { &[1, 3, 5] } else { &[1, 3] };
    let half = 0.5 * record.period;

    let mut x = record.initial_state().to_vector();
    let mut best = (f64::INFINITY, x);
    let mut iterations = 0;
    for iter in 0..MAX_NEWTON_ITERATIONS {
        let (end, stm) = system.propagate(&State6::from_vector(&x), half, true, tol)?;
        let stm = stm.ok_or(Error::EigenFailure)?;
        let end = end.to_vector();
        let residual = DVector::from_iterator(targets.len(), targets.iter().map(|&i| end[i]));
        let norm = residual.amax();
        if norm < best.0 {
            best = (norm, x);
        }
        iterations = iter;
        if norm < 1e-14 {
            break;
        }
        let jac = DMatrix::from_fn(targets.len(), free.len(), |r, c| stm[(targets[r], free[c])]);
        let delta = jac.lu().solve(&(-residual)).ok_or_else(|| Error::IntegrationFailure {
            time: half,
            reason: "singular correction jacobian".into(),
        })?;
        if delta.amax() < 1e-15 {
            break;
        }
        for (k, &i) in free.iter().enumerate() {
            x[i] += delta[k];
        }
    }
    Ok(CorrectedOrbit {
        state: State6::from_vector(&best.1),
        period: record.period,
        crossing_residual: best.0,
        iterations,
    })
}

/// Closure and stability diagnostics for one catalog orbit.
#[derive(Debug, Clone)]
pub struct OrbitCheck {
    pub label: String,
    pub published_closure: f64,
    pub corrected_closure: f64,
    pub stability: f64,
    /// index under [`StabilityConvention::LargestRealPart`]
    pub stability_real_part: f64,
    pub tabulated_stability: f64,
}

pub fn check_orbit(system: &Cr3bpSystem, record: &LpoRecord, tol: f64) -> Result<OrbitCheck> {
    let published_closure = closure_residual(system, &record.initial_state(), record.period, tol)?;
    let corrected = correct_orbit(system, record, tol)?;
    let corrected_closure = closure_residual(system, &corrected.state, record.period, tol)?;
    let phi = monodromy(system, &corrected.state, record.period, tol)?;
    Ok(OrbitCheck {
        label: record.label(),
        published_closure,
        corrected_closure,
        stability: stability_index_with(&phi, StabilityConvention::Magnitude)?,
        stability_real_part: stability_index_with(&phi, StabilityConvention::LargestRealPart)?,
        tabulated_stability: record.stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::catalog::{build_catalog, Family, Resonance};

    fn record(family: Family, m: u32, n: u32) -> LpoRecord {
        let sys = Cr3bpSystem::earth_moon();
        build_catalog(&sys, 12.0)
            .unwrap()
            .into_iter()
            .find(|r| r.family == family && r.resonance == Resonance::new(m, n))
            .unwrap()
    }

    #[test]
    fn l1_lyapunov_closes_and_matches_stability() {
        let sys = Cr3bpSystem::earth_moon();
        let rec = record(Family::L1Lyapunov, 1, 1);
        let check = check_orbit(&sys, &rec, 1e-12).unwrap();
        assert!(check.published_closure < 5e-5, "{}", check.published_closure);
        assert!(check.corrected_closure < 1e-9, "{}", check.corrected_closure);
        assert!((check.stability / 53.98 - 1.0).abs() < 0.02, "{}", check.stability);
    }

    #[test]
    fn dro_is_neutrally_stable() {
        let sys = Cr3bpSystem::earth_moon();
        let rec = record(Family::Dro, 3, 2);
        let check = check_orbit(&sys, &rec, 1e-12).unwrap();
        assert!((check.stability - 1.0).abs() < 0.02, "{}", check.stability);
    }

    #[test]
    fn planar_orbit_stays_planar() {
        let sys = Cr3bpSystem::earth_moon();
        let rec = record(Family::Dpo, 2, 1);
        let (end, _) = sys.propagate(&rec.initial_state(), rec.period, false, 1e-12).unwrap();
        assert!(end.r.z.abs() < 1e-12 && end.v.z.abs() < 1e-12);
    }

    #[test]
    fn stm_matches_finite_differences() {
        let sys = Cr3bpSystem::earth_moon();
        let rec = record(Family::L2HaloS, 4, 1);
        let x0 = rec.initial_state();
        let t = rec.period;
        let (xt, stm) = sys.propagate(&x0, t, true, 1e-12).unwrap();
        let stm = stm.unwrap();
        for col in 0..6 {
            let mut dx = nalgebra::Vector6::zeros();
            dx[col] = 1e-7;
            let (xp, _) = sys
                .propagate(&State6::from_vector(&(x0.to_vector() + dx)), t, false, 1e-12)
                .unwrap();
            let err = (stm * dx - (xp.to_vector() - xt.to_vector())).norm() / dx.norm();
            assert!(err < 1e-4, "column {col}: {err}");
        }
    }

    #[test]
    fn jacobi_constant_conserved() {
        let sys = Cr3bpSystem::earth_moon();
        let rec = record(Family::ButterflyS, 2, 1);
        let x0 = rec.initial_state();
        let (end, _) = sys.propagate(&x0, rec.period, false, 1e-12).unwrap();
        let drift = (sys.jacobi_constant(&end) - sys.jacobi_constant(&x0)).abs();
        assert!(drift < 1e-9, "{drift}");
    }
}
