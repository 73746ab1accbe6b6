//! Slot neighborhoods and the swap local search over them.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::allocation::{heuristic_feasible_allocation, RelaxedSchedule};
use super::config::Strategy;
use crate::bits::BitMatrix;
use crate::model::{objective_value, Instance, Schedule, Solution};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodIndex {
    /// same-orbit slots nearest in phase
    pub intra: Vec<Vec<usize>>,
    /// one slot per other orbit of the same resonance
    pub inter: Vec<Vec<usize>>,
}

/// Angular separation in radians, rounded so that equal spacings tie exactly.
fn phase_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    (d.min(1.0 - d) * 1e9).round() * 1e-9 * TAU
}

/// Cosine between the slot-to-target and Sun-to-target lines of sight.
pub fn alignment_score(slot: &Vector3<f64>, target: &Vector3<f64>, sun: &Vector3<f64>) -> f64 {
    let l_slot = target - slot;
    let l_sun = target - sun;
    let denom = l_slot.norm() * l_sun.norm();
    if denom == 0.0 {
        0.0
    } else {
        l_slot.dot(&l_sun) / denom
    }
}

pub fn build_neighborhoods(instance: &Instance, c_alpha: usize) -> NeighborhoodIndex {
    let slots = &instance.slots;
    let mut orbits: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, meta) in slots.iter().enumerate() {
        orbits.entry(meta.orbit).or_default().push(j);
    }
    let intra = slots
        .iter()
        .enumerate()
        .map(|(j, meta)| {
            let mut others: Vec<(f64, usize)> = orbits[&meta.orbit]
                .iter()
                .filter(|&&x| x != j)
                .map(|&x| (phase_gap(meta.phase_offset, slots[x].phase_offset), x))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(c_alpha).map(|(_, x)| x).collect()
        })
        .collect();

    let reference = &instance.reference;
    let scores: Vec<f64> = slots
        .iter()
        .map(|s| alignment_score(&s.epoch_position, &reference.mean_target, &reference.sun))
        .collect();
    let inter = slots
        .iter()
        .enumerate()
        .map(|(j, meta)| {
            let Some(res) = meta.resonance else { return Vec::new() };
            orbits
                .iter()
                .filter(|(&o, members)| o != meta.orbit && slots[members[0]].resonance == Some(res))
                .filter_map(|(_, members)| {
                    members
                        .iter()
                        .copied()
                        .min_by(|&a, &b| (scores[a] - scores[j]).abs().total_cmp(&(scores[b] - scores[j]).abs()))
                })
                .collect()
        })
        .collect();
    NeighborhoodIndex { intra, inter }
}

/// Feasible allocation for a slot set with its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub slots: Vec<usize>,
    pub schedule: Schedule,
    pub theta: BitMatrix,
    pub objective: f64,
}

impl Evaluation {
    pub fn into_solution(self, instance: &Instance) -> Solution {
        let coverage = crate::model::coverage_fraction(&self.theta, instance.tensor.demand()).unwrap_or(0.0);
        Solution {
            slots: self.slots,
            schedule: self.schedule,
            theta: self.theta,
            objective: self.objective,
            coverage,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalStats {
    /// allocation repairs actually computed
    pub evaluations: usize,
    pub memo_hits: usize,
    /// steps where the permutation cap forced greedy
    pub fallbacks: usize,
}

/// Repairs slot sets from scratch (no relaxed directions), memoized on the
/// sorted slot set.
pub struct Evaluator<'a> {
    instance: &'a Instance,
    strategy: Strategy,
    cap: usize,
    parallel: bool,
    memoize: bool,
    memo: HashMap<Vec<usize>, Arc<Evaluation>>,
    pub stats: EvalStats,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a Instance, strategy: Strategy, cap: usize, parallel: bool, memoize: bool) -> Self {
        Self {
            instance,
            strategy,
            cap,
            parallel,
            memoize,
            memo: HashMap::new(),
            stats: EvalStats::default(),
        }
    }

    fn compute(&self, slots: &[usize]) -> (Evaluation, usize) {
        let out = heuristic_feasible_allocation(
            &RelaxedSchedule::empty(),
            slots,
            self.instance,
            self.strategy,
            self.cap,
            self.parallel,
        );
        let objective = objective_value(out.theta.count_ones(), slots, self.instance);
        let eval = Evaluation {
            slots: slots.to_vec(),
            schedule: out.schedule,
            theta: out.theta,
            objective,
        };
        (eval, out.fallbacks)
    }

    /// Evaluate several sorted slot sets; missing ones are computed in parallel.
    pub fn evaluate_many(&mut self, sets: &[Vec<usize>]) -> Vec<Arc<Evaluation>> {
        let mut missing: Vec<&Vec<usize>> = Vec::new();
        if self.memoize {
            for s in sets {
                if !self.memo.contains_key(s) && !missing.contains(&s) {
                    missing.push(s);
                }
            }
        } else {
            missing.extend(sets);
        }
        let computed: Vec<(Evaluation, usize)> = if self.parallel {
            missing.par_iter().map(|s| self.compute(s)).collect()
        } else {
            missing.iter().map(|s| self.compute(s)).collect()
        };
        self.stats.evaluations += computed.len();
        self.stats.fallbacks += computed.iter().map(|(_, f)| f).sum::<usize>();
        if !self.memoize {
            return computed.into_iter().map(|(e, _)| Arc::new(e)).collect();
        }
        self.stats.memo_hits += sets.len() - computed.len();
        for (e, _) in computed {
            self.memo.insert(e.slots.clone(), Arc::new(e));
        }
        sets.iter().map(|s| Arc::clone(&self.memo[s])).collect()
    }

    pub fn evaluate(&mut self, slots: &[usize]) -> Arc<Evaluation> {
        let mut key = slots.to_vec();
        key.sort_unstable();
        self.evaluate_many(&[key]).pop().expect("one evaluation")
    }
}

/// Replace one chosen slot by one of its neighbors; return the best strict
/// improvement over `best` (first found on ties), or `None`.
pub fn neighborhood_swap(best: &Solution, neighbors: &[Vec<usize>], evaluator: &mut Evaluator) -> Option<Evaluation> {
    let mut candidates = Vec::new();
    for &out in &best.slots {
        for &inn in &neighbors[out] {
            if best.slots.contains(&inn) {
                continue;
            }
            let mut set: Vec<usize> = best.slots.iter().map(|&j| if j == out { inn } else { j }).collect();
            set.sort_unstable();
            candidates.push(set);
        }
    }
    if candidates.is_empty() {
        return None;
    }
    let evaluated = evaluator.evaluate_many(&candidates);
    let mut winner: Option<&Arc<Evaluation>> = None;
    let mut bar = best.objective;
    for e in &evaluated {
        if e.objective > bar {
            bar = e.objective;
            winner = Some(e);
        }
    }
    winner.map(|e| (**e).clone())
}
