use std::fmt;

use serde::{Deserialize, Serialize};

use super::instance::Instance;
use super::tensor::VisibilityTensor;
use crate::bits::{self, BitMatrix};
use crate::error::{Error, Result};

/// Slot `slot` points along direction `direction` at a given step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub slot: usize,
    pub direction: usize,
}

/// Pointing decisions per step; each step's list is sorted by slot.
pub type Schedule = Vec<Vec<Assignment>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// chosen slots, ascending
    pub slots: Vec<usize>,
    pub schedule: Schedule,
    pub theta: BitMatrix,
    pub objective: f64,
    pub coverage: f64,
}

impl Solution {
    /// Build from chosen slots and a schedule; theta takes every covered demanded pair.
    pub fn from_schedule(mut slots: Vec<usize>, mut schedule: Schedule, instance: &Instance) -> Result<Self> {
        slots.sort_unstable();
        for step in &mut schedule {
            step.sort_unstable();
        }
        let theta = theta_from_schedule(&schedule, &instance.tensor);
        let mut solution = Self {
            slots,
            schedule,
            theta,
            objective: 0.0,
            coverage: 0.0,
        };
        solution.objective = evaluate_objective(&solution, instance)?;
        solution.coverage = coverage_fraction(&solution.theta, instance.tensor.demand())?;
        Ok(solution)
    }

    pub fn covered(&self) -> usize {
        self.theta.count_ones()
    }

    pub fn direction(&self, slot: usize, t: usize) -> Option<usize> {
        self.schedule[t].iter().find(|a| a.slot == slot).map(|a| a.direction)
    }
}

/// `theta[t][k] = 1` iff some scheduled `(i, j)` at step `t` sees `k`.
pub fn theta_from_schedule(schedule: &Schedule, tensor: &VisibilityTensor) -> BitMatrix {
    let mut theta = BitMatrix::new(tensor.horizon(), tensor.targets());
    for (t, step) in schedule.iter().enumerate().take(tensor.horizon()) {
        let row = theta.row_mut(t);
        for a in step {
            if a.slot < tensor.slots() {
                if let Some(set) = tensor.cover(a.direction, a.slot, t) {
                    bits::or_assign(row, set);
                }
            }
        }
    }
    theta
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    Cardinality { expected: usize, found: usize },
    DuplicateSlot { slot: usize },
    IndexOutOfRange { what: &'static str, index: usize, limit: usize },
    /// schedule has the wrong number of steps
    Horizon { expected: usize, found: usize },
    /// pointing allocated on a slot that is not chosen
    Existence { slot: usize, time: usize },
    MultipleDirections { slot: usize, time: usize },
    /// theta set without a covering allocation
    Linking { time: usize, target: usize },
    /// theta set on a pair with no demand
    Undemanded { time: usize, target: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cardinality { expected, found } => write!(f, "{found} slots chosen, expected {expected}"),
            Violation::DuplicateSlot { slot } => write!(f, "slot {slot} chosen twice"),
            Violation::IndexOutOfRange { what, index, limit } => write!(f, "{what} {index} out of range (< {limit})"),
            Violation::Horizon { expected, found } => write!(f, "schedule has {found} steps, expected {expected}"),
            Violation::Existence { slot, time } => write!(f, "slot {slot} points at step {time} but is not chosen"),
            Violation::MultipleDirections { slot, time } => write!(f, "slot {slot} has several directions at step {time}"),
            Violation::Linking { time, target } => write!(f, "target {target} at step {time} counted but not seen"),
            Violation::Undemanded { time, target } => write!(f, "target {target} at step {time} counted without demand"),
        }
    }
}

pub fn validate_solution(solution: &Solution, instance: &Instance) -> Vec<Violation> {
    let tensor = &instance.tensor;
    let (n, m, ell, q) = (instance.n(), instance.m(), instance.ell(), instance.q());
    let mut out = Vec::new();
    if solution.slots.len() != instance.p {
        out.push(Violation::Cardinality {
            expected: instance.p,
            found: solution.slots.len(),
        });
    }
    let mut chosen = vec![false; n];
    for &j in &solution.slots {
        if j >= n {
            out.push(Violation::IndexOutOfRange { what: "slot", index: j, limit: n });
        } else if std::mem::replace(&mut chosen[j], true) {
            out.push(Violation::DuplicateSlot { slot: j });
        }
    }
    if solution.schedule.len() != ell {
        out.push(Violation::Horizon {
            expected: ell,
            found: solution.schedule.len(),
        });
    }
    let mut seen = vec![usize::MAX; n];
    for (t, step) in solution.schedule.iter().enumerate() {
        for a in step {
            if a.slot >= n {
                out.push(Violation::IndexOutOfRange { what: "slot", index: a.slot, limit: n });
                continue;
            }
            if a.direction >= m {
                out.push(Violation::IndexOutOfRange {
                    what: "direction",
                    index: a.direction,
                    limit: m,
                });
            }
            if !chosen[a.slot] {
                out.push(Violation::Existence { slot: a.slot, time: t });
            }
            if seen[a.slot] == t {
                out.push(Violation::MultipleDirections { slot: a.slot, time: t });
            }
            seen[a.slot] = t;
        }
    }
    if solution.theta.rows() != ell || solution.theta.cols() != q {
        out.push(Violation::Horizon {
            expected: ell,
            found: solution.theta.rows(),
        });
        return out;
    }
    let reachable = theta_from_schedule(&solution.schedule, tensor);
    for (t, k) in solution.theta.iter_ones() {
        if !tensor.demand().get(t, k) {
            out.push(Violation::Undemanded { time: t, target: k });
        } else if !reachable.get(t, k) {
            out.push(Violation::Linking { time: t, target: k });
        }
    }
    out
}

/// `Z = sum(theta) - (1 / ell) * sum_{j in Y} f_j`
pub fn evaluate_objective(solution: &Solution, instance: &Instance) -> Result<f64> {
    let violations = validate_solution(solution, instance);
    if let Some(first) = violations.first() {
        return Err(Error::InfeasibleSolution(format!(
            "{first} ({} violation(s))",
            violations.len()
        )));
    }
    Ok(objective_value(solution.theta.count_ones(), &solution.slots, instance))
}

/// `Z` from a covered count and the chosen slots, without validation.
pub fn objective_value(covered: usize, slots: &[usize], instance: &Instance) -> f64 {
    let cost: f64 = slots.iter().map(|&j| instance.costs[j]).sum();
    covered as f64 - cost / instance.ell() as f64
}

/// Covered share of the demanded (step, target) pairs.
pub fn coverage_fraction(theta: &BitMatrix, demand: &BitMatrix) -> Result<f64> {
    if theta.rows() != demand.rows() || theta.cols() != demand.cols() {
        return Err(Error::DimensionMismatch {
            expected: demand.rows() * demand.cols(),
            found: theta.rows() * theta.cols(),
            context: "theta vs demand shape",
        });
    }
    let total = demand.count_ones();
    if total == 0 {
        return Err(Error::EmptyDemand);
    }
    let covered = (0..theta.rows())
        .map(|t| theta.row(t).iter().zip(demand.row(t)).map(|(a, b)| (a & b).count_ones() as usize).sum::<usize>())
        .sum::<usize>();
    Ok(covered as f64 / total as f64)
}
