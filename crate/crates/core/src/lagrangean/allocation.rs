//! Repair of relaxed pointing schedules into feasible ones.

use rayon::prelude::*;

use super::config::Strategy;
use crate::bits::{self, BitMatrix};
use crate::error::{Error, Result};
use crate::model::{theta_from_schedule, Assignment, Instance, Schedule, VisibilityTensor};

/// Directions chosen by the relaxation for some slots; absent slots have none.
#[derive(Debug, Clone, Default)]
pub struct RelaxedSchedule {
    entries: Vec<(usize, Vec<Vec<usize>>)>,
}

impl RelaxedSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `directions[t]` for `slot`; later inserts for the same slot replace earlier ones.
    pub fn insert(&mut self, slot: usize, directions: Vec<Vec<usize>>) {
        self.entries.retain(|(s, _)| *s != slot);
        self.entries.push((slot, directions));
    }

    pub fn directions(&self, slot: usize, t: usize) -> &[usize] {
        self.entries
            .iter()
            .find(|(s, _)| *s == slot)
            .and_then(|(_, d)| d.get(t))
            .map_or(&[], Vec::as_slice)
    }
}

impl FromIterator<(usize, Vec<Vec<usize>>)> for RelaxedSchedule {
    fn from_iter<I: IntoIterator<Item = (usize, Vec<Vec<usize>>)>>(iter: I) -> Self {
        let mut out = Self::empty();
        for (slot, d) in iter {
            out.insert(slot, d);
        }
        out
    }
}

/// Direction of `j` at `t` with the largest gain, lowest index on ties; `None` when nothing is gained.
fn best_direction(tensor: &VisibilityTensor, j: usize, t: usize, uncovered: &[u64]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, set) in tensor.covers(j, t) {
        let g = bits::count_and(set, uncovered);
        if g > 0 && best.is_none_or(|(bi, bg)| g > bg || (g == bg && i < bi)) {
            best = Some((i, g));
        }
    }
    best
}

/// Direction for a slot that adds nothing: most targets seen overall, else direction 0.
fn fallback_direction(tensor: &VisibilityTensor, j: usize, t: usize) -> usize {
    let mut best = (0usize, 0usize);
    for (i, set) in tensor.covers(j, t) {
        let c = bits::count(set);
        if c > best.1 || (c == best.1 && c > 0 && i < best.0) {
            best = (i, c);
        }
    }
    best.0
}

/// Repeatedly allocate the `(j, i)` with the most newly covered targets
/// (ties: smallest `j`, then `i`) until no free slot gains anything.
/// `uncovered` is updated in place. Returns the assignments sorted by slot.
pub fn greedy_allocation(tensor: &VisibilityTensor, t: usize, free: &[usize], uncovered: &mut [u64]) -> Vec<Assignment> {
    let mut open: Vec<usize> = free.to_vec();
    open.sort_unstable();
    let mut out = Vec::with_capacity(open.len());
    while !open.is_empty() && uncovered.iter().any(|&w| w != 0) {
        let mut pick: Option<(usize, usize, usize)> = None;
        for (pos, &j) in open.iter().enumerate() {
            if let Some((i, g)) = best_direction(tensor, j, t, uncovered) {
                if pick.is_none_or(|(_, _, bg)| g > bg) {
                    pick = Some((pos, i, g));
                }
            }
        }
        let Some((pos, i, _)) = pick else { break };
        let j = open.remove(pos);
        if let Some(set) = tensor.cover(i, j, t) {
            for (u, s) in uncovered.iter_mut().zip(set) {
                *u &= !s;
            }
        }
        out.push(Assignment { slot: j, direction: i });
    }
    out.extend(open.into_iter().map(|j| Assignment {
        slot: j,
        direction: fallback_direction(tensor, j, t),
    }));
    out.sort_unstable();
    out
}

/// slot position and its direction (none when idle)
type Pick = (usize, Option<usize>);

struct Search<'a> {
    tensor: &'a VisibilityTensor,
    t: usize,
    slots: Vec<usize>,
    used: Vec<bool>,
    path: Vec<Pick>,
    best: Option<(usize, Vec<Pick>)>,
}

impl Search<'_> {
    fn visit(&mut self, uncovered: &[u64], gained: usize) {
        if self.path.len() == self.slots.len() {
            if self.best.as_ref().is_none_or(|(b, _)| gained > *b) {
                self.best = Some((gained, self.path.clone()));
            }
            return;
        }
        for pos in 0..self.slots.len() {
            if self.used[pos] {
                continue;
            }
            let j = self.slots[pos];
            self.used[pos] = true;
            match best_direction(self.tensor, j, self.t, uncovered) {
                Some((i, g)) => {
                    let set = self.tensor.cover(i, j, self.t).expect("direction with gain");
                    let next: Vec<u64> = uncovered.iter().zip(set).map(|(u, s)| u & !s).collect();
                    self.path.push((j, Some(i)));
                    self.visit(&next, gained + g);
                }
                None => {
                    self.path.push((j, None));
                    self.visit(uncovered, gained);
                }
            }
            self.path.pop();
            self.used[pos] = false;
        }
    }
}

/// Try every ordering of the free slots, each slot taking its best direction
/// in turn, and keep the ordering that covers the most new targets (first in
/// lexicographic order on ties). Fails with `PermutationCap` above `cap` slots.
pub fn full_factorial_allocation(
    tensor: &VisibilityTensor,
    t: usize,
    free: &[usize],
    uncovered: &mut [u64],
    cap: usize,
) -> Result<Vec<Assignment>> {
    if free.len() > cap {
        return Err(Error::PermutationCap { count: free.len(), cap });
    }
    let mut slots = free.to_vec();
    slots.sort_unstable();
    let mut search = Search {
        tensor,
        t,
        used: vec![false; slots.len()],
        path: Vec::with_capacity(slots.len()),
        best: None,
        slots,
    };
    search.visit(uncovered, 0);
    let (_, path) = search.best.unwrap_or_default();
    let mut out: Vec<Assignment> = path
        .into_iter()
        .map(|(j, dir)| {
            let direction = match dir {
                Some(i) => {
                    if let Some(set) = tensor.cover(i, j, t) {
                        for (u, s) in uncovered.iter_mut().zip(set) {
                            *u &= !s;
                        }
                    }
                    i
                }
                None => fallback_direction(tensor, j, t),
            };
            Assignment { slot: j, direction }
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Repair one step. Returns the step's assignments and whether the
/// full-factorial cap forced a greedy fallback.
pub fn repair_step(
    tensor: &VisibilityTensor,
    t: usize,
    relaxed: &RelaxedSchedule,
    active: &[usize],
    strategy: Strategy,
    cap: usize,
) -> (Vec<Assignment>, bool) {
    let mut uncovered = tensor.demand().row(t).to_vec();
    let mut kept = Vec::new();
    let mut free = Vec::new();
    for &j in active {
        match relaxed.directions(j, t) {
            [i] => {
                if let Some(set) = tensor.cover(*i, j, t) {
                    for (u, s) in uncovered.iter_mut().zip(set) {
                        *u &= !s;
                    }
                }
                kept.push(Assignment { slot: j, direction: *i });
            }
            _ => free.push(j),
        }
    }
    let mut fell_back = false;
    let added = match strategy {
        Strategy::Greedy => greedy_allocation(tensor, t, &free, &mut uncovered),
        Strategy::FullFactorial => match full_factorial_allocation(tensor, t, &free, &mut uncovered, cap) {
            Ok(a) => a,
            Err(_) => {
                fell_back = true;
                greedy_allocation(tensor, t, &free, &mut uncovered)
            }
        },
    };
    kept.extend(added);
    kept.sort_unstable();
    (kept, fell_back)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleAllocation {
    pub schedule: Schedule,
    pub theta: BitMatrix,
    /// steps where the permutation cap forced greedy
    pub fallbacks: usize,
}

/// Keep every relaxed `(j, t)` with exactly one direction, reallocate the
/// other active slots with `strategy`, then set theta from the schedule.
pub fn heuristic_feasible_allocation(
    relaxed: &RelaxedSchedule,
    active: &[usize],
    instance: &Instance,
    strategy: Strategy,
    cap: usize,
    parallel: bool,
) -> FeasibleAllocation {
    let tensor = &instance.tensor;
    let step = |t| repair_step(tensor, t, relaxed, active, strategy, cap);
    let steps: Vec<(Vec<Assignment>, bool)> = if parallel {
        (0..instance.ell()).into_par_iter().map(step).collect()
    } else {
        (0..instance.ell()).map(step).collect()
    };
    let fallbacks = steps.iter().filter(|(_, f)| *f).count();
    let schedule: Schedule = steps.into_iter().map(|(a, _)| a).collect();
    let theta = theta_from_schedule(&schedule, tensor);
    FeasibleAllocation {
        schedule,
        theta,
        fallbacks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_solution, Solution};
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Three slots, two directions, six targets, one step. Greedy takes slot
    /// 0 direction 0 (four targets) first and nothing else gains; ordering
    /// slots 1 and 2 first reaches all six.
    pub(crate) fn greedy_trap() -> VisibilityTensor {
        let covers: [(usize, usize, &[usize]); 6] = [
            (0, 0, &[0, 1, 2, 3]),
            (1, 0, &[4, 5]),
            (0, 1, &[0, 1]),
            (1, 1, &[0]),
            (0, 2, &[2, 3]),
            (1, 2, &[2]),
        ];
        let mut entries = Vec::new();
        for (i, j, ks) in covers {
            for &k in ks {
                entries.push((i, j, 0, k));
            }
        }
        VisibilityTensor::from_entries(2, 3, BitMatrix::filled(1, 6), &entries).unwrap()
    }

    fn newly_covered(tensor: &VisibilityTensor, t: usize, assigned: &[Assignment]) -> usize {
        let mut covered = vec![0u64; tensor.words()];
        for a in assigned {
            if let Some(set) = tensor.cover(a.direction, a.slot, t) {
                bits::or_assign(&mut covered, set);
            }
        }
        bits::count(&covered)
    }

    #[test]
    fn greedy_prefers_larger_cover() {
        let tensor = VisibilityTensor::from_entries(2, 1, BitMatrix::filled(1, 2), &[(0, 0, 0, 0), (0, 0, 0, 1), (1, 0, 0, 0)]).unwrap();
        let mut unc = tensor.demand().row(0).to_vec();
        let out = greedy_allocation(&tensor, 0, &[0], &mut unc);
        assert_eq!(out, vec![Assignment { slot: 0, direction: 0 }]);
        assert_eq!(bits::count(&unc), 0);
    }

    #[test]
    fn greedy_allocates_disjoint_slots() {
        let tensor = VisibilityTensor::from_entries(1, 2, BitMatrix::filled(1, 2), &[(0, 0, 0, 0), (0, 1, 0, 1)]).unwrap();
        let mut unc = tensor.demand().row(0).to_vec();
        let out = greedy_allocation(&tensor, 0, &[1, 0], &mut unc);
        assert_eq!(out.len(), 2);
        assert_eq!(newly_covered(&tensor, 0, &out), 2);
    }

    #[test]
    fn greedy_trap_is_beaten_by_full_factorial() {
        let tensor = greedy_trap();
        let mut unc = tensor.demand().row(0).to_vec();
        let greedy = greedy_allocation(&tensor, 0, &[0, 1, 2], &mut unc);
        assert_eq!(newly_covered(&tensor, 0, &greedy), 4);
        let mut unc = tensor.demand().row(0).to_vec();
        let ff = full_factorial_allocation(&tensor, 0, &[0, 1, 2], &mut unc, 8).unwrap();
        assert_eq!(newly_covered(&tensor, 0, &ff), 6);
        assert_eq!(
            ff,
            vec![
                Assignment { slot: 0, direction: 1 },
                Assignment { slot: 1, direction: 0 },
                Assignment { slot: 2, direction: 0 },
            ]
        );
        assert!(unc.iter().all(|&w| w == 0));
    }

    #[test]
    fn single_free_slot_matches_greedy() {
        let tensor = greedy_trap();
        for j in 0..3 {
            let mut a = tensor.demand().row(0).to_vec();
            let mut b = a.clone();
            assert_eq!(
                greedy_allocation(&tensor, 0, &[j], &mut a),
                full_factorial_allocation(&tensor, 0, &[j], &mut b, 8).unwrap()
            );
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let tensor = greedy_trap();
        let mut unc = tensor.demand().row(0).to_vec();
        assert!(matches!(
            full_factorial_allocation(&tensor, 0, &[0, 1, 2], &mut unc, 2),
            Err(Error::PermutationCap { count: 3, cap: 2 })
        ));
        let inst = Instance::synthetic(greedy_trap(), vec![0.9; 3], 3).unwrap();
        let out = heuristic_feasible_allocation(&RelaxedSchedule::empty(), &[0, 1, 2], &inst, Strategy::FullFactorial, 2, false);
        assert_eq!(out.fallbacks, 1);
        assert_eq!(out.theta.count_ones(), 4);
    }

    #[test]
    fn feasible_relaxed_schedule_is_kept() {
        let inst = Instance::synthetic(greedy_trap(), vec![0.9; 3], 2).unwrap();
        let relaxed: RelaxedSchedule = [(1, vec![vec![1]]), (2, vec![vec![1]])].into_iter().collect();
        let out = heuristic_feasible_allocation(&relaxed, &[1, 2], &inst, Strategy::Greedy, 8, false);
        assert_eq!(
            out.schedule,
            vec![vec![Assignment { slot: 1, direction: 1 }, Assignment { slot: 2, direction: 1 }]]
        );
        assert_eq!(out.theta.count_ones(), 2);
    }

    #[test]
    fn multi_direction_slot_is_repaired() {
        let inst = Instance::synthetic(greedy_trap(), vec![0.9; 3], 2).unwrap();
        let relaxed: RelaxedSchedule = [(0, vec![vec![0, 1]]), (1, vec![vec![0]])].into_iter().collect();
        let out = heuristic_feasible_allocation(&relaxed, &[0, 1], &inst, Strategy::Greedy, 8, false);
        assert_eq!(
            out.schedule,
            vec![vec![Assignment { slot: 0, direction: 0 }, Assignment { slot: 1, direction: 0 }]]
        );
        let sol = Solution::from_schedule(vec![0, 1], out.schedule, &inst).unwrap();
        assert!(validate_solution(&sol, &inst).is_empty());
    }

    #[test]
    fn zero_gain_slots_still_point() {
        // slot 1 sees only what slot 0 already covers
        let tensor = VisibilityTensor::from_entries(2, 2, BitMatrix::filled(1, 1), &[(0, 0, 0, 0), (1, 1, 0, 0)]).unwrap();
        let mut unc = tensor.demand().row(0).to_vec();
        let out = greedy_allocation(&tensor, 0, &[0, 1], &mut unc);
        assert_eq!(out[1], Assignment { slot: 1, direction: 1 });
    }

    fn random_tensor(rng: &mut ChaCha8Rng) -> (VisibilityTensor, Vec<usize>) {
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=6);
        let q = rng.gen_range(1..=70);
        let density = rng.gen_range(0.05..0.6);
        let tensor = VisibilityTensor::from_fn(m, n, BitMatrix::filled(1, q), |_, _, _, _| rng.gen_bool(density)).unwrap();
        let free = (0..n).collect();
        (tensor, free)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn full_factorial_dominates_greedy(seed in 0u64..u64::MAX) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (tensor, free) = random_tensor(&mut rng);
            let mut a = tensor.demand().row(0).to_vec();
            let mut b = a.clone();
            let g = greedy_allocation(&tensor, 0, &free, &mut a);
            let f = full_factorial_allocation(&tensor, 0, &free, &mut b, 8).unwrap();
            prop_assert!(newly_covered(&tensor, 0, &f) >= newly_covered(&tensor, 0, &g));
            prop_assert!(bits::count(&b) <= bits::count(&a));
        }

        #[test]
        fn repaired_schedules_are_feasible(seed in 0u64..u64::MAX) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (tensor, _) = random_tensor(&mut rng);
            let (m, n) = (tensor.directions(), tensor.slots());
            let p = rng.gen_range(1..=n);
            let inst = Instance::synthetic(tensor, vec![0.95; n], p).unwrap();
            let mut active: Vec<usize> = (0..n).collect();
            while active.len() > p {
                active.remove(rng.gen_range(0..active.len()));
            }
            let relaxed: RelaxedSchedule = active
                .iter()
                .map(|&j| (j, vec![(0..m).filter(|_| rng.gen_bool(0.4)).collect()]))
                .collect();
            for strategy in [Strategy::Greedy, Strategy::FullFactorial] {
                let out = heuristic_feasible_allocation(&relaxed, &active, &inst, strategy, 8, true);
                let sol = Solution::from_schedule(active.clone(), out.schedule, &inst);
                prop_assert!(sol.is_ok());
            }
        }
    }
}
