//! Problem instance, visibility tensor, solutions and MPS exchange.

mod instance;
pub mod mps;
mod solution;
mod tensor;

pub use instance::{facility_cost, facility_costs, slot_metadata, Instance, ReferenceGeometry, SlotMeta};
pub use mps::{export_mps, import_solution, write_solution, MpsVariant};
pub use solution::{
    coverage_fraction, evaluate_objective, theta_from_schedule, validate_solution, Assignment, Schedule, Solution,
    Violation,
};
pub use solution::objective_value;
pub use tensor::{build_visibility_tensor, VisibilityTensor};
