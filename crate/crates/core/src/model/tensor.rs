//! Sparse boolean visibility tensor over (direction, slot, step, target).

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::bits::{self, BitMatrix};
use crate::demand::DemandSet;
use crate::dynamics::Ephemeris;
use crate::error::{Error, Result};
use crate::illumination::{detectable, line_of_sight, within_cone, ObservationModel, PointingSet};

/// For every (slot j, step t) the directions that see at least one demanded
/// target, each with the bitset of targets it sees. Stored CSR-style with
/// `(j, t)` blocks in `j`-major order.
#[derive(Debug)]
pub struct VisibilityTensor {
    m: usize,
    n: usize,
    ell: usize,
    q: usize,
    words: usize,
    offsets: Vec<usize>,
    directions: Vec<u16>,
    bits: Vec<u64>,
    demand: BitMatrix,
    by_target: OnceLock<TargetIndex>,
}

/// `(t, k)` -> packed `j * m + i` of every observer pair seeing the target.
#[derive(Debug)]
struct TargetIndex {
    offsets: Vec<usize>,
    pairs: Vec<u32>,
}

/// One `(j, t)` block: directions in increasing order and their bitsets.
type Block = Vec<(u16, Vec<u64>)>;

impl VisibilityTensor {
    fn from_blocks(m: usize, n: usize, demand: BitMatrix, blocks: Vec<Block>) -> Result<Self> {
        let (ell, q) = (demand.rows(), demand.cols());
        if m == 0 || m > u16::MAX as usize {
            return Err(Error::Config(format!("direction count {m} out of range")));
        }
        if blocks.len() != n * ell {
            return Err(Error::DimensionMismatch {
                expected: n * ell,
                found: blocks.len(),
                context: "tensor blocks vs slots x steps",
            });
        }
        let words = bits::words_for(q);
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut directions = Vec::new();
        let mut data = Vec::new();
        offsets.push(0);
        for (b, block) in blocks.into_iter().enumerate() {
            let t = b % ell;
            for (i, set) in block {
                if set.iter().all(|&w| w == 0) {
                    continue;
                }
                if bits::count_and_not(&set, demand.row(t)) != 0 {
                    return Err(Error::Config(format!(
                        "visibility entry at step {t} for a target without demand"
                    )));
                }
                directions.push(i);
                data.extend_from_slice(&set);
            }
            offsets.push(directions.len());
        }
        Ok(Self {
            m,
            n,
            ell,
            q,
            words,
            offsets,
            directions,
            bits: data,
            demand,
            by_target: OnceLock::new(),
        })
    }

    /// Tensor from a predicate; entries where the demand is 0 are dropped.
    pub fn from_fn(m: usize, n: usize, demand: BitMatrix, mut visible: impl FnMut(usize, usize, usize, usize) -> bool) -> Result<Self> {
        let (ell, q) = (demand.rows(), demand.cols());
        let words = bits::words_for(q);
        let mut blocks = Vec::with_capacity(n * ell);
        for j in 0..n {
            for t in 0..ell {
                let mut block = Block::new();
                for i in 0..m {
                    let mut set = vec![0u64; words];
                    for k in 0..q {
                        if demand.get(t, k) && visible(i, j, t, k) {
                            bits::set(&mut set, k);
                        }
                    }
                    block.push((i as u16, set));
                }
                blocks.push(block);
            }
        }
        Self::from_blocks(m, n, demand, blocks)
    }

    /// Tensor from explicit `(i, j, t, k)` entries, which must all lie on demanded pairs.
    pub fn from_entries(m: usize, n: usize, demand: BitMatrix, entries: &[(usize, usize, usize, usize)]) -> Result<Self> {
        let (ell, q) = (demand.rows(), demand.cols());
        for &(i, j, t, k) in entries {
            if i >= m || j >= n || t >= ell || k >= q {
                return Err(Error::Config(format!("entry ({i}, {j}, {t}, {k}) outside ({m}, {n}, {ell}, {q})")));
            }
            if !demand.get(t, k) {
                return Err(Error::Config(format!("entry ({i}, {j}, {t}, {k}) has no demand")));
            }
        }
        Self::from_fn(m, n, demand, |i, j, t, k| entries.contains(&(i, j, t, k)))
    }

    pub fn directions(&self) -> usize {
        self.m
    }

    pub fn slots(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.ell
    }

    pub fn targets(&self) -> usize {
        self.q
    }

    /// Words per target bitset.
    pub fn words(&self) -> usize {
        self.words
    }

    pub fn demand(&self) -> &BitMatrix {
        &self.demand
    }

    fn block(&self, j: usize, t: usize) -> std::ops::Range<usize> {
        let b = j * self.ell + t;
        self.offsets[b]..self.offsets[b + 1]
    }

    /// Directions of slot `j` at step `t` that see something, with their target bitsets.
    pub fn covers(&self, j: usize, t: usize) -> impl ExactSizeIterator<Item = (usize, &[u64])> + '_ {
        self.block(j, t).map(move |e| {
            (
                self.directions[e] as usize,
                &self.bits[e * self.words..(e + 1) * self.words],
            )
        })
    }

    pub fn cover(&self, i: usize, j: usize, t: usize) -> Option<&[u64]> {
        self.covers(j, t).find(|&(d, _)| d == i).map(|(_, set)| set)
    }

    pub fn entry(&self, i: usize, j: usize, t: usize, k: usize) -> bool {
        self.cover(i, j, t).is_some_and(|set| bits::test(set, k))
    }

    /// Number of `(i, j, t)` triples with at least one visible target.
    pub fn nonempty_triples(&self) -> usize {
        self.directions.len()
    }

    /// Number of `(i, j, t, k)` entries equal to 1.
    pub fn entry_count(&self) -> usize {
        bits::count(&self.bits)
    }

    pub fn density(&self) -> f64 {
        self.entry_count() as f64 / (self.m * self.n * self.ell * self.q) as f64
    }

    fn target_index(&self) -> &TargetIndex {
        self.by_target.get_or_init(|| {
            let mut counts = vec![0usize; self.ell * self.q];
            for j in 0..self.n {
                for t in 0..self.ell {
                    for (_, set) in self.covers(j, t) {
                        for k in bits::iter_ones(set) {
                            counts[t * self.q + k] += 1;
                        }
                    }
                }
            }
            let mut offsets = Vec::with_capacity(counts.len() + 1);
            offsets.push(0);
            for c in &counts {
                offsets.push(offsets.last().unwrap() + c);
            }
            let mut cursor = offsets.clone();
            let mut pairs = vec![0u32; *offsets.last().unwrap()];
            for j in 0..self.n {
                for t in 0..self.ell {
                    for (i, set) in self.covers(j, t) {
                        for k in bits::iter_ones(set) {
                            let slot = &mut cursor[t * self.q + k];
                            pairs[*slot] = (j * self.m + i) as u32;
                            *slot += 1;
                        }
                    }
                }
            }
            TargetIndex { offsets, pairs }
        })
    }

    /// Every `(i, j)` that sees target `k` at step `t`, ordered by `(j, i)`.
    pub fn observers_of(&self, t: usize, k: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let index = self.target_index();
        let b = t * self.q + k;
        index.pairs[index.offsets[b]..index.offsets[b + 1]]
            .iter()
            .map(move |&packed| (packed as usize % self.m, packed as usize / self.m))
    }
}

/// Evaluate visibility for every slot, step, demanded target and direction.
///
/// Runs in parallel over `(j, t)`. The line of sight is computed once per
/// `(j, t, k)` and the magnitude/occultation test only runs when some
/// direction contains the target.
pub fn build_visibility_tensor(
    ephemeris: &Ephemeris,
    demand: &DemandSet,
    pointing: &PointingSet,
    model: &ObservationModel,
) -> Result<VisibilityTensor> {
    let (n, ell, q, m) = (ephemeris.len(), demand.horizon(), demand.targets(), pointing.len());
    if ephemeris.horizon < ell {
        return Err(Error::DimensionMismatch {
            expected: ell,
            found: ephemeris.horizon,
            context: "ephemeris steps vs demand horizon",
        });
    }
    let system = &model.system;
    let cos_half = model.sensor.cos_half_fov();
    let words = bits::words_for(q);
    let targets: Vec<Vec<_>> = (0..ell)
        .map(|t| (0..q).map(|k| demand.position_lu(t, k, system)).collect())
        .collect();
    let suns: Vec<_> = (0..ell).map(|t| model.sun.position(t as f64 * ephemeris.time_step)).collect();

    let blocks: Vec<Block> = (0..n * ell)
        .into_par_iter()
        .map(|b| {
            let (j, t) = (b / ell, b % ell);
            let r_obs = ephemeris.position(j, t);
            let mut sets = vec![vec![0u64; words]; m];
            for k in bits::iter_ones(demand.demand().row(t)) {
                let r_tgt = &targets[t][k];
                let (los, _) = line_of_sight(r_obs, r_tgt)?;
                let inside: Vec<usize> = (0..m)
                    .filter(|&i| within_cone(&pointing.directions[i], &los, cos_half))
                    .collect();
                if inside.is_empty() || !detectable(r_obs, r_tgt, &suns[t], model)? {
                    continue;
                }
                for i in inside {
                    bits::set(&mut sets[i], k);
                }
            }
            Ok(sets.into_iter().enumerate().map(|(i, s)| (i as u16, s)).collect())
        })
        .collect::<Result<_>>()?;
    VisibilityTensor::from_blocks(m, n, demand.demand().clone(), blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demand(ell: usize, q: usize) -> BitMatrix {
        BitMatrix::filled(ell, q)
    }

    #[test]
    fn entries_and_indexes_agree() {
        let entries = [(0, 0, 0, 1), (1, 0, 0, 0), (1, 0, 0, 1), (0, 1, 1, 1), (1, 1, 0, 0)];
        let tensor = VisibilityTensor::from_entries(2, 2, demand(2, 2), &entries).unwrap();
        assert_eq!(tensor.entry_count(), 5);
        assert_eq!(tensor.nonempty_triples(), 4);
        assert!((tensor.density() - 5.0 / 16.0).abs() < 1e-15);
        for i in 0..2 {
            for j in 0..2 {
                for t in 0..2 {
                    for k in 0..2 {
                        assert_eq!(tensor.entry(i, j, t, k), entries.contains(&(i, j, t, k)));
                    }
                }
            }
        }
        assert_eq!(tensor.observers_of(0, 0).collect::<Vec<_>>(), vec![(1, 0), (1, 1)]);
        assert_eq!(tensor.observers_of(0, 1).collect::<Vec<_>>(), vec![(0, 0), (1, 0)]);
        assert_eq!(tensor.observers_of(1, 0).count(), 0);
        let dirs: Vec<usize> = tensor.covers(0, 0).map(|(i, _)| i).collect();
        assert_eq!(dirs, vec![0, 1]);
    }

    #[test]
    fn entries_off_demand_are_rejected() {
        let mut d = demand(1, 2);
        d.set(0, 1, false);
        let d2 = d.clone();
        assert!(VisibilityTensor::from_entries(1, 1, d, &[(0, 0, 0, 1)]).is_err());
        let t = VisibilityTensor::from_fn(1, 1, d2, |_, _, _, _| true).unwrap();
        assert_eq!(t.entry_count(), 1);
    }
}
