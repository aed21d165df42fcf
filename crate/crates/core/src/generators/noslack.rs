//! Randomized hard distribution without slack.
//!
//! With `delta = 2^(-2d)` and a hidden permutation `sigma`, phase `t` offers
//! `d + 1 - t` items, pairwise incompatible. Item `(t, j)` is zero on
//! `sigma_1..sigma_{t-1}`, weighs `1 - (2^t - 1) delta` on `sigma_{t+j-1}` and
//! `2^t delta` everywhere else. The items `(t, 1)` fit together.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;
use rand::seq::SliceRandom;

use super::{rng, GenError, InstanceSample, SampleMeta};
use crate::model::{Item, ItemId, SparseWeightVector};
use crate::objective::ObjectiveSpec;
use crate::scalar::{self, Scalar};

pub const MIN_DIMS: usize = 2;
pub const MAX_DIMS: usize = 16;

#[derive(Debug, Clone)]
pub struct NoslackInstance {
    pub sample: InstanceSample,
    pub d: usize,
    /// `sigma[t - 1]` is the 0-based dimension revealed after phase `t`.
    pub sigma: Vec<usize>,
    /// `(t, j)` label of each item, both 1-based.
    pub labels: Vec<(usize, usize)>,
}

/// `2^(-2d)`.
pub fn delta(d: usize) -> Scalar {
    scalar::pow2_neg(2 * d as u32)
}

/// Dense weight vector of item `(t, j)`.
fn dense_weights(d: usize, sigma: &[usize], t: usize, j: usize) -> Vec<Scalar> {
    let delta = delta(d);
    let small = scalar::pow2(t as u32) * &delta;
    let big = Scalar::one() - (scalar::pow2(t as u32) - Scalar::one()) * &delta;
    let mut w = vec![small; d];
    for &s in &sigma[..t - 1] {
        w[s] = Scalar::from_integer(0.into());
    }
    w[sigma[t + j - 2]] = big;
    w
}

fn sparse(d: usize, dense: &[Scalar]) -> Result<SparseWeightVector, GenError> {
    use num_traits::Zero;
    let entries = dense
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(i, w)| (i, w.clone()))
        .collect();
    Ok(SparseWeightVector::new(d, entries)?)
}

impl NoslackInstance {
    /// Builds the instance for a given permutation of `0..d`.
    pub fn with_permutation(
        d: usize,
        sigma: Vec<usize>,
        seed: Option<u64>,
    ) -> Result<Self, GenError> {
        if !(MIN_DIMS..=MAX_DIMS).contains(&d) {
            return Err(GenError::InvalidParameter(format!(
                "d must lie in [{MIN_DIMS}, {MAX_DIMS}], got {d}"
            )));
        }
        let mut sorted = sigma.clone();
        sorted.sort_unstable();
        if sorted != (0..d).collect::<Vec<_>>() {
            return Err(GenError::InvalidParameter(
                "sigma must be a permutation of 0..d".into(),
            ));
        }

        let mut items = Vec::new();
        let mut labels = Vec::new();
        let mut phases = Vec::with_capacity(d);
        let mut first_of_phase = BTreeSet::new();
        for t in 1..=d {
            let mut phase: Vec<(Vec<Scalar>, usize)> = (1..=d + 1 - t)
                .map(|j| (dense_weights(d, &sigma, t, j), j))
                .collect();
            // lexicographic order of the weight vectors hides sigma
            phase.sort();
            for (dense, j) in phase {
                let id = items.len();
                if j == 1 {
                    first_of_phase.insert(ItemId(id));
                }
                items.push(Item::unit(id, sparse(d, &dense)?));
                labels.push((t, j));
            }
            phases.push(d + 1 - t);
        }

        let mut meta = SampleMeta::new("noslack", seed)
            .param("d", d)
            .param("delta", scalar::to_string(&delta(d)));
        meta.phases = phases;
        let value = scalar::int(d as i64);
        let sample = InstanceSample::new(
            d,
            items,
            ObjectiveSpec::Cardinality,
            Some((first_of_phase, value)),
            meta,
        )?;
        Ok(Self {
            sample,
            d,
            sigma,
            labels,
        })
    }

    pub fn sample(d: usize, seed: u64) -> Result<Self, GenError> {
        let mut sigma: Vec<usize> = (0..d).collect();
        sigma.shuffle(&mut rng(seed));
        Self::with_permutation(d, sigma, Some(seed))
    }

    pub fn id_of(&self, t: usize, j: usize) -> Option<ItemId> {
        self.labels.iter().position(|l| *l == (t, j)).map(ItemId)
    }

    /// For item `(t, j)` with `j >= 2` and `t < d`, the phase-`t+1` item
    /// `(t+1, j-1)` that can replace it without creating new conflicts.
    pub fn successor(&self, id: ItemId) -> Option<ItemId> {
        let (t, j) = *self.labels.get(id.0)?;
        if j < 2 || t >= self.d {
            return None;
        }
        self.id_of(t + 1, j - 1)
    }

    /// Applies the replacement transformation to the weights of a phase-`t`
    /// item: zero out `sigma_t`, lower the big coordinate to
    /// `1 - (2^(t+1) - 1) delta`, raise the others to `2^(t+1) delta`.
    pub fn transform(&self, item: &Item, t: usize) -> Result<SparseWeightVector, GenError> {
        let delta = delta(self.d);
        let old_small = scalar::pow2(t as u32) * &delta;
        let new_small = scalar::pow2(t as u32 + 1) * &delta;
        let new_big = Scalar::one() - (scalar::pow2(t as u32 + 1) - Scalar::one()) * &delta;
        let mut out: BTreeMap<usize, Scalar> = BTreeMap::new();
        for (i, w) in item.weights.iter() {
            if i == self.sigma[t - 1] {
                continue;
            }
            let next = if *w == old_small {
                new_small.clone()
            } else {
                new_big.clone()
            };
            out.insert(i, next);
        }
        Ok(SparseWeightVector::new(self.d, out.into_iter().collect())?)
    }
}

/// Samples `sigma` uniformly from the seed.
pub fn sample_noslack_distribution(d: usize, seed: u64) -> Result<InstanceSample, GenError> {
    NoslackInstance::sample(d, seed).map(|s| s.sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::is_feasible;

    #[test]
    fn six_dimension_instance() {
        // (6,2,3,1,5,4) in 1-based dimensions
        let inst = NoslackInstance::with_permutation(6, vec![5, 1, 2, 0, 4, 3], None).unwrap();
        assert_eq!(inst.sample.meta.phases, vec![6, 5, 4, 3, 2, 1]);
        assert_eq!(inst.sample.len(), 21);
        let w = &inst.sample.items[inst.id_of(1, 1).unwrap().0].weights;
        assert_eq!(w.weight(5), Scalar::one() - delta(6));
        assert_eq!(w.weight(0), scalar::int(2) * delta(6));
        let last = &inst.sample.items[20];
        assert_eq!(inst.labels[20], (6, 1));
        assert_eq!(last.weights.sparsity(), 1);
        assert_eq!(
            last.weights.weight(3),
            Scalar::one() - scalar::int(63) * delta(6)
        );
    }

    #[test]
    fn witness_load_is_one_minus_delta() {
        let inst = NoslackInstance::sample(5, 3).unwrap();
        let witness = inst.sample.opt_witness.as_ref().unwrap();
        for dim in 0..5 {
            let load: Scalar = inst
                .sample
                .items
                .iter()
                .filter(|it| witness.contains(&it.id))
                .map(|it| it.weights.weight(dim))
                .sum();
            assert_eq!(load, Scalar::one() - delta(5));
        }
    }

    #[test]
    fn same_phase_items_never_fit_together() {
        let inst = NoslackInstance::sample(6, 1).unwrap();
        let items = &inst.sample.items;
        for a in 0..items.len() {
            for b in a + 1..items.len() {
                if inst.labels[a].0 == inst.labels[b].0 {
                    assert!(!is_feasible([&items[a], &items[b]], 6));
                }
            }
        }
    }

    #[test]
    fn arrival_within_phase_is_lexicographic() {
        let inst = NoslackInstance::sample(4, 9).unwrap();
        let dense = |it: &Item| (0..4).map(|i| it.weights.weight(i)).collect::<Vec<_>>();
        for w in inst.sample.items.windows(2) {
            let (ta, tb) = (inst.labels[w[0].id.0].0, inst.labels[w[1].id.0].0);
            if ta == tb {
                assert!(dense(&w[0]) < dense(&w[1]));
            }
        }
    }

    #[test]
    fn guard_rails() {
        assert!(NoslackInstance::sample(1, 0).is_err());
        assert!(NoslackInstance::sample(17, 0).is_err());
        assert!(NoslackInstance::with_permutation(3, vec![0, 0, 1], None).is_err());
    }
}
