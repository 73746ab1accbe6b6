//! Exact enumeration for tiny instances and a seeded instance generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{self, BitMatrix};
use crate::error::{Error, Result};
use crate::model::{Assignment, Instance, Solution, VisibilityTensor};

/// Largest `C(n, p) * (m + 1)^(p * ell)` accepted by [`brute_force_optimum`].
pub const ENUMERATION_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroDims {
    pub m: usize,
    pub n: usize,
    pub ell: usize,
    pub q: usize,
    pub p: usize,
}

/// Dense tiny instance with full demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroInstance {
    pub dims: MicroDims,
    /// `((i * n + j) * ell + t) * q + k`
    pub visible: Vec<bool>,
    pub costs: Vec<f64>,
}

impl MicroInstance {
    pub fn get(&self, i: usize, j: usize, t: usize, k: usize) -> bool {
        let d = self.dims;
        self.visible[((i * d.n + j) * d.ell + t) * d.q + k]
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let d = self.dims;
        let tensor = VisibilityTensor::from_fn(d.m, d.n, BitMatrix::filled(d.ell, d.q), |i, j, t, k| self.get(i, j, t, k))?;
        Instance::synthetic(tensor, self.costs.clone(), d.p)
    }
}

/// Each entry is 1 with probability `density`; costs uniform in (0.9, 0.99).
pub fn random_instance(seed: u64, dims: MicroDims, density: f64) -> MicroInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let density = density.clamp(0.0, 1.0);
    let size = dims.m * dims.n * dims.ell * dims.q;
    let visible = (0..size).map(|_| rng.gen_bool(density)).collect();
    let costs = (0..dims.n)
        .map(|_| loop {
            let f = rng.gen_range(0.9..0.99);
            if f > 0.9 {
                break f;
            }
        })
        .collect();
    MicroInstance { dims, visible, costs }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn enumeration_size(m: usize, n: usize, ell: usize, p: usize) -> f64 {
    if p > n {
        return 0.0;
    }
    binomial(n, p) * ((m + 1) as f64).powf((p * ell) as f64)
}

/// Next `p`-subset of `0..n` in lexicographic order.
fn next_subset(set: &mut [usize], n: usize) -> bool {
    let p = set.len();
    for pos in (0..p).rev() {
        if set[pos] < n - p + pos {
            set[pos] += 1;
            for later in pos + 1..p {
                set[later] = set[later - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Best per-step coverage of a fixed slot set: every slot takes one of the
/// `m` directions or stays idle.
fn best_step(tensor: &VisibilityTensor, slots: &[usize], t: usize) -> (usize, Vec<Assignment>) {
    let m = tensor.directions();
    let words = tensor.words();
    let mut choice = vec![0usize; slots.len()];
    let mut best = (0usize, Vec::new());
    loop {
        let mut covered = vec![0u64; words];
        for (&j, &c) in slots.iter().zip(&choice) {
            if c > 0 {
                if let Some(set) = tensor.cover(c - 1, j, t) {
                    bits::or_assign(&mut covered, set);
                }
            }
        }
        let count = bits::count(&covered);
        if count > best.0 {
            let assigned = slots
                .iter()
                .zip(&choice)
                .filter(|(_, &c)| c > 0)
                .map(|(&j, &c)| Assignment { slot: j, direction: c - 1 })
                .collect();
            best = (count, assigned);
        }
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return best;
            }
            choice[pos] += 1;
            if choice[pos] <= m {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact optimum over every slot set of size `p` and every per-step pointing
/// (idle included). Ties keep the lexicographically first slot set.
pub fn brute_force_optimum(instance: &Instance) -> Result<(f64, Solution)> {
    let (m, n, ell, p) = (instance.m(), instance.n(), instance.ell(), instance.p);
    let size = enumeration_size(m, n, ell, p);
    if size > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut subsets = Vec::new();
    let mut set: Vec<usize> = (0..p).collect();
    loop {
        subsets.push(set.clone());
        if !next_subset(&mut set, n) {
            break;
        }
    }
    let tensor = &instance.tensor;
    let scored: Vec<(f64, usize)> = subsets
        .par_iter()
        .enumerate()
        .map(|(idx, slots)| {
            let covered: usize = (0..ell).map(|t| best_step(tensor, slots, t).0).sum();
            (crate::model::objective_value(covered, slots, instance), idx)
        })
        .collect();
    let (_, winner) = scored
        .iter()
        .copied()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one subset");
    let slots = subsets[winner].clone();
    let schedule = (0..ell).map(|t| best_step(tensor, &slots, t).1).collect();
    let solution = Solution::from_schedule(slots, schedule, instance)?;
    Ok((solution.objective, solution))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> MicroDims {
        MicroDims { m: 2, n: 4, ell: 2, q: 3, p: 2 }
    }

    fn min_cost_sum(costs: &[f64], p: usize) -> f64 {
        let mut c = costs.to_vec();
        c.sort_by(f64::total_cmp);
        c[..p].iter().sum()
    }

    #[test]
    fn generator_is_seeded() {
        assert_eq!(random_instance(7, dims(), 0.4), random_instance(7, dims(), 0.4));
        assert_ne!(random_instance(7, dims(), 0.4), random_instance(8, dims(), 0.4));
        assert!(random_instance(1, dims(), 0.0).visible.iter().all(|v| !v));
        assert!(random_instance(1, dims(), 1.0).visible.iter().all(|&v| v));
        assert!(random_instance(1, dims(), 0.5).costs.iter().all(|&f| f > 0.9 && f < 0.99));
    }

    #[test]
    fn closed_forms_for_full_and_empty_tensors() {
        for (density, covered) in [(1.0, 6.0), (0.0, 0.0)] {
            let micro = random_instance(3, dims(), density);
            let inst = micro.to_instance().unwrap();
            let (z, sol) = brute_force_optimum(&inst).unwrap();
            let expected = covered - min_cost_sum(&micro.costs, 2) / 2.0;
            assert!((z - expected).abs() < 1e-12, "{z} vs {expected}");
            assert_eq!(sol.objective, z);
        }
    }

    #[test]
    fn subsets_in_lexicographic_order() {
        let mut s = vec![0, 1];
        let mut all = vec![s.clone()];
        while next_subset(&mut s, 4) {
            all.push(s.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert!((binomial(8, 3) - 56.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_enumeration_is_refused() {
        let micro = random_instance(0, MicroDims { m: 4, n: 8, ell: 3, q: 2, p: 4 }, 0.5);
        assert!(matches!(brute_force_optimum(&micro.to_instance().unwrap()), Err(Error::TooLarge { .. })));
        assert!(enumeration_size(4, 8, 3, 1) <= ENUMERATION_LIMIT);
    }
}
