//! Lagrangean relaxation: per-slot subproblems and the relaxed upper bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{self, BitMatrix};
use crate::model::Instance;

/// `lambda` prices the single-direction rows (one per slot and step), `eta`
/// the coverage-linking rows (one per step and target).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    ell: usize,
    q: usize,
    /// `j * ell + t`
    pub lambda: Vec<f64>,
    /// `t * q + k`
    pub eta: Vec<f64>,
}

impl Multipliers {
    /// `lambda = 0`, `eta = 1`.
    pub fn initial(instance: &Instance) -> Self {
        let (n, ell, q) = (instance.n(), instance.ell(), instance.q());
        Self {
            ell,
            q,
            lambda: vec![0.0; n * ell],
            eta: vec![1.0; ell * q],
        }
    }

    pub fn uniform(instance: &Instance, lambda: f64, eta: f64) -> Self {
        let mut out = Self::initial(instance);
        out.lambda.fill(lambda);
        out.eta.fill(eta);
        out
    }

    pub fn lambda(&self, j: usize, t: usize) -> f64 {
        self.lambda[j * self.ell + t]
    }

    pub fn eta(&self, t: usize, k: usize) -> f64 {
        self.eta[t * self.q + k]
    }

    pub fn is_non_negative(&self) -> bool {
        self.lambda.iter().chain(&self.eta).all(|&v| v >= 0.0)
    }
}

/// Optimum of one slot's subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemSolution {
    pub slot: usize,
    pub value: f64,
    /// per step, the directions with positive reduced coefficient, ascending
    pub directions: Vec<Vec<usize>>,
}

fn coefficient(set: &[u64], eta_row: &[f64]) -> f64 {
    bits::iter_ones(set).map(|k| eta_row[k]).sum()
}

fn subproblem_value(j: usize, mult: &Multipliers, instance: &Instance, mut keep: Option<&mut Vec<Vec<usize>>>) -> f64 {
    let tensor = &instance.tensor;
    let (ell, q) = (instance.ell(), instance.q());
    let mut value = -instance.costs[j] / ell as f64;
    for t in 0..ell {
        let lambda = mult.lambda(j, t);
        let eta_row = &mult.eta[t * q..(t + 1) * q];
        value += lambda;
        for (i, set) in tensor.covers(j, t) {
            let c = coefficient(set, eta_row) - lambda;
            if c > 0.0 {
                value += c;
                if let Some(dirs) = keep.as_deref_mut() {
                    dirs[t].push(i);
                }
            }
        }
    }
    value
}

/// Select every `(i, t)` whose coefficient `sum_k eta_tk M_ijtk - lambda_jt`
/// is positive. Several directions per step may be chosen.
pub fn subproblem(j: usize, mult: &Multipliers, instance: &Instance) -> SubproblemSolution {
    let mut directions = vec![Vec::new(); instance.ell()];
    let value = subproblem_value(j, mult, instance, Some(&mut directions));
    SubproblemSolution { slot: j, value, directions }
}

/// Relaxed solution assembled from the `p` best subproblems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSolution {
    /// winners in rank order
    pub winners: Vec<SubproblemSolution>,
    /// 1 on demanded pairs with `eta < 1`
    pub theta: BitMatrix,
    pub upper: f64,
}

impl RelaxedSolution {
    /// Chosen slots, ascending.
    pub fn slots(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.winners.iter().map(|w| w.slot).collect();
        s.sort_unstable();
        s
    }
}

/// Per-slot subproblem values for every slot.
pub fn subproblem_values(mult: &Multipliers, instance: &Instance, parallel: bool) -> Vec<f64> {
    let eval = |j| subproblem_value(j, mult, instance, None);
    if parallel {
        (0..instance.n()).into_par_iter().map(eval).collect()
    } else {
        (0..instance.n()).map(eval).collect()
    }
}

/// Order slots by value descending, then cost ascending, then index.
pub fn rank_slots(values: &[f64], costs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .total_cmp(&values[a])
            .then(costs[a].total_cmp(&costs[b]))
            .then(a.cmp(&b))
    });
    order
}

pub fn solve_relaxed(mult: &Multipliers, instance: &Instance, parallel: bool) -> RelaxedSolution {
    let values = subproblem_values(mult, instance, parallel);
    let order = rank_slots(&values, &instance.costs);
    let winners: Vec<SubproblemSolution> = order[..instance.p].iter().map(|&j| subproblem(j, mult, instance)).collect();
    let demand = instance.tensor.demand();
    let mut theta = BitMatrix::new(instance.ell(), instance.q());
    let mut upper = 0.0;
    for (t, k) in demand.iter_ones() {
        let eta = mult.eta(t, k);
        if eta < 1.0 {
            theta.set(t, k, true);
            upper += 1.0 - eta;
        }
    }
    upper += winners.iter().map(|w| w.value).sum::<f64>();
    RelaxedSolution { winners, theta, upper }
}
