//! CR3BP propagation, periodic-orbit catalog and slot ephemerides.

pub mod catalog;
pub mod correction;
pub mod ephemeris;
pub mod integrator;
pub mod system;

pub use catalog::{build_catalog, complete_catalog, load_table, parse_table, slot_count, table_rows, Family, LpoRecord, Resonance};
pub use correction::{check_orbit, closure_residual, correct_orbit, monodromy, CorrectedOrbit, OrbitCheck};
pub use ephemeris::{reference_state, slot_ephemeris, time_grid, Ephemeris, EphemerisOptions, SlotEphemeris};
pub use system::{find_libration_points, stability_index, stability_index_with, Cr3bpSystem, StabilityConvention, State6, StatePropagator};
