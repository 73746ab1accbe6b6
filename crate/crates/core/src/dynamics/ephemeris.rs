//! Slot discretization and rotating-frame slot positions on the time grid.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::LpoRecord;
use super::correction::correct_orbit;
use super::system::{Cr3bpSystem, State6, StatePropagator};
use crate::error::Result;

/// Positions of one candidate slot over the time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEphemeris {
    /// index into the catalog
    pub slot_orbit: usize,
    /// fraction of the period in [0, 1)
    pub phase_offset: f64,
    /// LU, one entry per time step (0-based step index)
    pub positions: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ephemeris {
    /// TU per time step
    pub time_step: f64,
    pub horizon: usize,
    pub slots: Vec<SlotEphemeris>,
}

impl Ephemeris {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn position(&self, slot: usize, step: usize) -> &Vector3<f64> {
        &self.slots[slot].positions[step]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EphemerisOptions {
    pub tol: f64,
    /// run differential correction on the tabulated initial states first
    pub refine: bool,
    /// dense samples per time step along the reference revolution
    pub samples_per_step: usize,
}

impl Default for EphemerisOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            refine: true,
            samples_per_step: 4,
        }
    }
}

/// Time grid of `months` synodic months at `steps_per_month` steps each.
pub fn time_grid(system: &Cr3bpSystem, steps_per_month: usize, months: usize) -> (usize, f64) {
    (steps_per_month * months, system.synodic_period / steps_per_month as f64)
}

/// Initial state used for ephemeris generation (refined or as tabulated).
pub fn reference_state(system: &Cr3bpSystem, record: &LpoRecord, options: &EphemerisOptions) -> Result<State6> {
    if options.refine {
        Ok(correct_orbit(system, record, options.tol)?.state)
    } else {
        Ok(record.initial_state())
    }
}

/// One revolution sampled on a uniform grid, so any phase is reached by a short arc.
struct DenseRevolution {
    spacing: f64,
    samples: Vec<State6>,
}

impl DenseRevolution {
    fn new(system: &Cr3bpSystem, state: State6, period: f64, spacing: f64, tol: f64) -> Result<Self> {
        let count = (period / spacing).ceil() as usize + 1;
        let mut prop = StatePropagator::new(*system, tol)?;
        let mut samples = Vec::with_capacity(count);
        samples.push(state);
        for _ in 1..count {
            let next = prop.advance(samples.last().unwrap(), spacing)?;
            samples.push(next);
        }
        Ok(Self { spacing, samples })
    }

    fn state_at(&self, prop: &mut StatePropagator, time: f64) -> Result<State6> {
        let k = ((time / self.spacing).round() as usize).min(self.samples.len() - 1);
        let dt = time - k as f64 * self.spacing;
        prop.advance(&self.samples[k], dt)
    }
}

/// Positions of every slot of every orbit for steps `0..horizon`.
///
/// Slot `s` of an orbit with `b` slots has phase offset `s / b`; at step `t`
/// it sits at orbit time `(t * dt + offset * P) mod P`.
pub fn slot_ephemeris(
    system: &Cr3bpSystem,
    catalog: &[LpoRecord],
    horizon: usize,
    dt: f64,
    options: &EphemerisOptions,
) -> Result<Ephemeris> {
    let per_orbit: Vec<Vec<SlotEphemeris>> = catalog
        .par_iter()
        .enumerate()
        .map(|(orbit, record)| orbit_slots(system, orbit, record, horizon, dt, options))
        .collect::<Result<_>>()?;
    Ok(Ephemeris {
        time_step: dt,
        horizon,
        slots: per_orbit.into_iter().flatten().collect(),
    })
}

fn orbit_slots(
    system: &Cr3bpSystem,
    orbit: usize,
    record: &LpoRecord,
    horizon: usize,
    dt: f64,
    options: &EphemerisOptions,
) -> Result<Vec<SlotEphemeris>> {
    let state = reference_state(system, record, options)?;
    let period = record.period;
    let spacing = dt / options.samples_per_step.max(1) as f64;
    let rev = DenseRevolution::new(system, state, period, spacing, options.tol)?;
    let mut prop = StatePropagator::new(*system, options.tol)?;
    let b = record.slots.max(1);
    (0..b)
        .map(|s| {
            let phase_offset = s as f64 / b as f64;
            let positions = (0..horizon)
                .map(|t| {
                    let tau = (t as f64 * dt + phase_offset * period).rem_euclid(period);
                    rev.state_at(&mut prop, tau).map(|st| st.r)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SlotEphemeris {
                slot_orbit: orbit,
                phase_offset,
                positions,
            })
        })
        .collect()
}
