//! Subgradient iteration with heuristic lower bounds and neighborhood swaps.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::allocation::{heuristic_feasible_allocation, RelaxedSchedule};
use super::config::LmConfig;
use super::neighborhood::{build_neighborhoods, neighborhood_swap, EvalStats, Evaluator};
use super::relax::{solve_relaxed, Multipliers, RelaxedSolution};
use crate::bits;
use crate::error::{Error, Result};
use crate::model::{Instance, Solution};

const STEP_EPSILON: f64 = 1e-12;

/// Apply one projected subgradient step and return the step length used.
///
/// `lambda_jt += s (sum_i X_ijt - 1)` for every slot (unchosen slots have no
/// directions) and `eta_tk += s (theta_tk - sum_ij M_ijtk X_ijt)` on demanded
/// pairs, both clamped at 0. The norm in `s` only counts components that can
/// move, i.e. not those pinned at 0 by a negative subgradient.
pub fn update_multipliers(
    mult: &mut Multipliers,
    relaxed: &RelaxedSolution,
    instance: &Instance,
    upper: f64,
    lower: f64,
    scale: f64,
) -> f64 {
    let (n, ell, q) = (instance.n(), instance.ell(), instance.q());
    let tensor = &instance.tensor;
    let mut g_lambda = vec![-1.0; n * ell];
    let mut seen = vec![0u32; ell * q];
    for w in &relaxed.winners {
        for (t, dirs) in w.directions.iter().enumerate() {
            g_lambda[w.slot * ell + t] = dirs.len() as f64 - 1.0;
            for &i in dirs {
                if let Some(set) = tensor.cover(i, w.slot, t) {
                    for k in bits::iter_ones(set) {
                        seen[t * q + k] += 1;
                    }
                }
            }
        }
    }
    let demand = tensor.demand();
    let mut g_eta = vec![0.0; ell * q];
    for (t, k) in demand.iter_ones() {
        let theta = if relaxed.theta.get(t, k) { 1.0 } else { 0.0 };
        g_eta[t * q + k] = theta - seen[t * q + k] as f64;
    }
    let movable = |v: f64, g: f64| if v > 0.0 || g > 0.0 { g * g } else { 0.0 };
    let norm: f64 = mult.lambda.iter().zip(&g_lambda).map(|(&v, &g)| movable(v, g)).sum::<f64>()
        + mult.eta.iter().zip(&g_eta).map(|(&v, &g)| movable(v, g)).sum::<f64>();
    let step = (scale * (upper - lower) / (norm + STEP_EPSILON)).max(0.0);
    if step > 0.0 {
        for (v, g) in mult.lambda.iter_mut().zip(&g_lambda) {
            *v = (*v + step * g).max(0.0);
        }
        for (v, g) in mult.eta.iter_mut().zip(&g_eta) {
            *v = (*v + step * g).max(0.0);
        }
    }
    step
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Gap,
    Iterations,
    Stagnation,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// relaxed bound of this iteration
    pub upper: f64,
    /// objective of this iteration's repaired relaxed solution
    pub lower: f64,
    pub best_upper: f64,
    pub best_lower: f64,
    pub gap: f64,
    pub step_scale: f64,
    pub step: f64,
    pub stagnant: usize,
    pub inter_swap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmOutcome {
    pub solution: Solution,
    pub best_upper: f64,
    pub history: Vec<IterationRecord>,
    pub stop: StopReason,
    pub stats: EvalStats,
    pub multipliers: Multipliers,
}

impl LmOutcome {
    pub fn best_lower(&self) -> f64 {
        self.solution.objective
    }

    pub fn gap(&self) -> f64 {
        relative_gap(self.best_upper, self.solution.objective)
    }
}

pub fn relative_gap(upper: f64, lower: f64) -> f64 {
    (upper - lower) / upper.abs().max(1.0)
}

/// Run the Lagrangean method on `instance`.
pub fn run(instance: &Instance, config: &LmConfig) -> Result<LmOutcome> {
    config.validate()?;
    if instance.p > instance.n() {
        return Err(Error::NoFeasibleSolution {
            p: instance.p,
            n: instance.n(),
        });
    }
    let started = Instant::now();
    let hood = build_neighborhoods(instance, config.c_alpha);
    let mut evaluator = Evaluator::new(instance, config.strategy, config.factorial_cap, config.parallel, config.memoize);
    let mut mult = Multipliers::initial(instance);
    let mut scale = config.step_scale;
    let mut best: Option<Solution> = None;
    let mut best_upper = f64::INFINITY;
    let mut stagnant = 0usize;
    let mut history = Vec::new();
    let mut fallbacks = 0usize;

    let stop = 'outer: {
        for iteration in 1..=config.max_iterations {
            let relaxed = solve_relaxed(&mult, instance, config.parallel);
            let slots = relaxed.slots();
            let schedule: RelaxedSchedule = relaxed.winners.iter().map(|w| (w.slot, w.directions.clone())).collect();
            let repaired = heuristic_feasible_allocation(
                &schedule,
                &slots,
                instance,
                config.strategy,
                config.factorial_cap,
                config.parallel,
            );
            fallbacks += repaired.fallbacks;
            let current = Solution::from_schedule(slots, repaired.schedule, instance)?;
            let lower = current.objective;
            let mut improved = false;
            if best.as_ref().is_none_or(|b| current.objective > b.objective) {
                best = Some(current);
                improved = true;
            }
            let inter_swap = stagnant >= config.stagnant_to_inter_swap;
            let mut lists = vec![&hood.intra];
            if inter_swap {
                lists.push(&hood.inter);
            }
            for list in lists {
                let incumbent = best.as_ref().expect("set above");
                if let Some(found) = neighborhood_swap(incumbent, list, &mut evaluator) {
                    best = Some(found.into_solution(instance));
                    improved = true;
                }
            }
            if relaxed.upper < best_upper {
                best_upper = relaxed.upper;
                improved = true;
            }
            if improved {
                stagnant = 0;
            } else {
                stagnant += 1;
                if stagnant.is_multiple_of(config.stagnant_to_reduce_step) {
                    scale *= config.step_reduction;
                }
            }
            let best_lower = best.as_ref().expect("set above").objective;
            let gap = relative_gap(best_upper, best_lower);
            let step = update_multipliers(&mut mult, &relaxed, instance, relaxed.upper, best_lower, scale);
            history.push(IterationRecord {
                iteration,
                upper: relaxed.upper,
                lower,
                best_upper,
                best_lower,
                gap,
                step_scale: scale,
                step,
                stagnant,
                inter_swap,
            });
            if gap <= config.gap_tol {
                break 'outer StopReason::Gap;
            }
            if stagnant >= config.max_stagnant {
                break 'outer StopReason::Stagnation;
            }
            if config.time_limit_s.is_some_and(|limit| started.elapsed().as_secs_f64() >= limit) {
                break 'outer StopReason::TimeLimit;
            }
        }
        StopReason::Iterations
    };
    let mut stats = evaluator.stats;
    stats.fallbacks += fallbacks;
    Ok(LmOutcome {
        solution: best.expect("at least one iteration"),
        best_upper,
        history,
        stop,
        stats,
        multipliers: mult,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitMatrix;
    use crate::lagrangean::relax::SubproblemSolution;
    use crate::lagrangean::Strategy;
    use crate::model::VisibilityTensor;

    fn small() -> Instance {
        let tensor = VisibilityTensor::from_fn(2, 3, BitMatrix::filled(2, 4), |i, j, t, k| (i + j + t + k) % 3 == 0).unwrap();
        Instance::synthetic(tensor, vec![0.9, 0.92, 0.95], 2).unwrap()
    }

    #[test]
    fn equal_bounds_leave_multipliers() {
        let inst = small();
        let mut mult = Multipliers::initial(&inst);
        let relaxed = solve_relaxed(&mult, &inst, false);
        let before = mult.clone();
        assert_eq!(update_multipliers(&mut mult, &relaxed, &inst, 3.0, 3.0, 2.0), 0.0);
        assert_eq!(mult, before);
    }

    #[test]
    fn zero_subgradient_leaves_multipliers() {
        // one slot, one step, one target, one direction covering it
        let tensor = VisibilityTensor::from_fn(1, 1, BitMatrix::filled(1, 1), |_, _, _, _| true).unwrap();
        let inst = Instance::synthetic(tensor, vec![0.9], 1).unwrap();
        let mut mult = Multipliers::uniform(&inst, 0.3, 0.5);
        let mut theta = BitMatrix::new(1, 1);
        theta.set(0, 0, true);
        let relaxed = RelaxedSolution {
            winners: vec![SubproblemSolution {
                slot: 0,
                value: 0.0,
                directions: vec![vec![0]],
            }],
            theta,
            upper: 2.0,
        };
        let before = mult.clone();
        update_multipliers(&mut mult, &relaxed, &inst, 2.0, 1.0, 2.0);
        assert_eq!(mult, before);
    }

    #[test]
    fn negative_multipliers_are_clamped() {
        let tensor = VisibilityTensor::from_fn(1, 1, BitMatrix::filled(1, 1), |_, _, _, _| true).unwrap();
        let inst = Instance::synthetic(tensor, vec![0.9], 1).unwrap();
        let mut mult = Multipliers::uniform(&inst, 0.1, 0.2);
        let relaxed = RelaxedSolution {
            winners: vec![SubproblemSolution {
                slot: 0,
                value: 0.0,
                directions: vec![vec![]],
            }],
            theta: BitMatrix::new(1, 1),
            upper: 2.0,
        };
        // g_lambda = -1, g_eta = 0; norm 1, step = 2 * 10 = 20
        let step = update_multipliers(&mut mult, &relaxed, &inst, 11.0, 1.0, 2.0);
        assert!((step - 20.0).abs() < 1e-9);
        assert_eq!(mult.lambda, vec![0.0]);
        assert_eq!(mult.eta, vec![0.2]);
    }

    #[test]
    fn all_ones_tensor_is_covered_at_first_iteration() {
        let tensor = VisibilityTensor::from_fn(3, 4, BitMatrix::filled(3, 5), |_, _, _, _| true).unwrap();
        let inst = Instance::synthetic(tensor, vec![0.91, 0.92, 0.93, 0.94], 2).unwrap();
        let out = run(&inst, &LmConfig::default()).unwrap();
        assert_eq!(out.solution.coverage, 1.0);
        assert_eq!(out.history[0].best_lower, out.solution.objective);
        assert_eq!(out.solution.slots, vec![0, 1]);
    }

    #[test]
    fn zero_time_limit_runs_one_iteration() {
        let inst = small();
        let config = LmConfig {
            time_limit_s: Some(0.0),
            gap_tol: 0.0,
            ..LmConfig::default()
        };
        let out = run(&inst, &config).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.stop, StopReason::TimeLimit);
    }

    #[test]
    fn bounds_are_monotone_and_ordered() {
        let inst = small();
        for strategy in [Strategy::Greedy, Strategy::FullFactorial] {
            let config = LmConfig {
                strategy,
                gap_tol: 0.0,
                ..LmConfig::default()
            };
            let out = run(&inst, &config).unwrap();
            for pair in out.history.windows(2) {
                assert!(pair[1].best_lower >= pair[0].best_lower);
                assert!(pair[1].best_upper <= pair[0].best_upper);
            }
            for rec in &out.history {
                assert!(rec.upper >= rec.best_lower - 1e-12);
            }
            assert!(out.multipliers.is_non_negative());
        }
    }
}
