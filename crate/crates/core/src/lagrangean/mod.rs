//! Lagrangean method for the time-expanded p-median model.
//!
//! The single-direction and coverage-linking rows are dualized. Each
//! iteration solves the separable relaxation (an upper bound), repairs it
//! into a feasible schedule (a lower bound), tries neighborhood swaps on the
//! incumbent and takes a projected subgradient step.

mod allocation;
mod config;
mod driver;
mod neighborhood;
mod relax;

pub use allocation::{
    full_factorial_allocation, greedy_allocation, heuristic_feasible_allocation, repair_step, FeasibleAllocation,
    RelaxedSchedule,
};
pub use config::{LmConfig, Strategy};
pub use driver::{relative_gap, run, update_multipliers, IterationRecord, LmOutcome, StopReason};
pub use neighborhood::{
    alignment_score, build_neighborhoods, neighborhood_swap, EvalStats, Evaluation, Evaluator, NeighborhoodIndex,
};
pub use relax::{rank_slots, solve_relaxed, subproblem, subproblem_values, Multipliers, RelaxedSolution, SubproblemSolution};
