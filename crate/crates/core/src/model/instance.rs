use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::tensor::VisibilityTensor;
use crate::dynamics::{LpoRecord, Resonance, SlotEphemeris};
use crate::error::{Error, Result};

/// Where a candidate slot comes from; used for neighborhoods and reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMeta {
    pub orbit: usize,
    pub orbit_label: String,
    pub resonance: Option<Resonance>,
    /// fraction of the period in [0, 1)
    pub phase_offset: f64,
    /// LU, position at step 0
    pub epoch_position: Vector3<f64>,
}

/// Geometry shared by the inter-orbit neighborhood score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGeometry {
    /// LU
    pub mean_target: Vector3<f64>,
    /// LU, Sun position at step 0
    pub sun: Vector3<f64>,
}

#[derive(Debug)]
pub struct Instance {
    pub tensor: VisibilityTensor,
    pub costs: Vec<f64>,
    pub p: usize,
    pub slots: Vec<SlotMeta>,
    pub reference: ReferenceGeometry,
}

impl Instance {
    pub fn new(
        tensor: VisibilityTensor,
        costs: Vec<f64>,
        p: usize,
        slots: Vec<SlotMeta>,
        reference: ReferenceGeometry,
    ) -> Result<Self> {
        let n = tensor.slots();
        if costs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: costs.len(),
                context: "facility costs vs slots",
            });
        }
        if slots.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: slots.len(),
                context: "slot metadata vs slots",
            });
        }
        if p > n {
            return Err(Error::NoFeasibleSolution { p, n });
        }
        if p == 0 {
            return Err(Error::Config("p must be at least 1".into()));
        }
        if let Some(f) = costs.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(Error::Config(format!("facility cost {f} outside (0, 1)")));
        }
        Ok(Self {
            tensor,
            costs,
            p,
            slots,
            reference,
        })
    }

    /// Instance without orbit geometry: one synthetic orbit whose slots are
    /// evenly phased, no resonance partners.
    pub fn synthetic(tensor: VisibilityTensor, costs: Vec<f64>, p: usize) -> Result<Self> {
        let n = tensor.slots();
        let slots = (0..n)
            .map(|j| SlotMeta {
                orbit: 0,
                orbit_label: "synthetic".into(),
                resonance: None,
                phase_offset: j as f64 / n as f64,
                epoch_position: Vector3::zeros(),
            })
            .collect();
        let reference = ReferenceGeometry {
            mean_target: Vector3::zeros(),
            sun: Vector3::x(),
        };
        Self::new(tensor, costs, p, slots, reference)
    }

    pub fn n(&self) -> usize {
        self.tensor.slots()
    }

    pub fn m(&self) -> usize {
        self.tensor.directions()
    }

    pub fn ell(&self) -> usize {
        self.tensor.horizon()
    }

    pub fn q(&self) -> usize {
        self.tensor.targets()
    }
}

pub fn facility_cost(stability: f64) -> f64 {
    1.0 - 1.0 / (stability + 10.0)
}

/// `f_j` from the tabulated stability index of each slot's orbit.
pub fn facility_costs(catalog: &[LpoRecord], slots: &[SlotEphemeris]) -> Vec<f64> {
    slots
        .iter()
        .map(|s| facility_cost(catalog[s.slot_orbit].stability))
        .collect()
}

/// Slot metadata from the catalog and the ephemeris.
pub fn slot_metadata(catalog: &[LpoRecord], slots: &[SlotEphemeris]) -> Vec<SlotMeta> {
    slots
        .iter()
        .map(|s| {
            let record = &catalog[s.slot_orbit];
            SlotMeta {
                orbit: s.slot_orbit,
                orbit_label: record.label(),
                resonance: Some(record.resonance),
                phase_offset: s.phase_offset,
                epoch_position: s.positions[0],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitMatrix;

    #[test]
    fn cost_values() {
        assert!((facility_cost(1.0) - 10.0 / 11.0).abs() < 1e-15);
        assert!((facility_cost(53.98) - 0.984_370_1).abs() < 1e-6);
        assert!(facility_cost(2.0) < facility_cost(2.5));
    }

    #[test]
    fn p_bounds() {
        let tensor = || VisibilityTensor::from_fn(1, 2, BitMatrix::filled(1, 1), |_, _, _, _| true).unwrap();
        assert!(matches!(
            Instance::synthetic(tensor(), vec![0.9; 2], 3),
            Err(Error::NoFeasibleSolution { p: 3, n: 2 })
        ));
        assert!(Instance::synthetic(tensor(), vec![0.9; 2], 0).is_err());
        assert!(Instance::synthetic(tensor(), vec![0.9, 1.0], 1).is_err());
        assert!(Instance::synthetic(tensor(), vec![0.9; 2], 2).is_ok());
    }
}
