//! Randomized hard distribution for instances with slack.
//!
//! `l` phases over `d = l + 400 l^2 log2(l)` dimensions with sparsity
//! `k = 100 l log2(l) + 1`. Phase `i` splits the remaining pool `J_i` into
//! `4l - i + 1` random blocks of size `k - 1`; each block plus dimension `i`
//! is one item. One block per phase is secretly good and is removed from the
//! pool, so the good items never conflict while bad items almost always do.

use std::collections::BTreeSet;

use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{check_slack, describe, rng, GenError, InstanceSample, SampleMeta};
use crate::model::{Item, ItemId, SparseWeightVector};
use crate::objective::ObjectiveSpec;
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone)]
pub struct SlackInstance {
    pub sample: InstanceSample,
    pub ell: usize,
    pub k: usize,
    /// The good item of each phase.
    pub good: Vec<ItemId>,
    /// Phase (0-based) of every item.
    pub phase_of: Vec<usize>,
}

impl SlackInstance {
    pub fn sample(
        ell: usize,
        epsilon: Scalar,
        seed: u64,
        shuffle_within_phase: bool,
    ) -> Result<Self, GenError> {
        if ell < 4 || !ell.is_power_of_two() {
            return Err(GenError::InvalidParameter(format!(
                "l must be a power of two and at least 4, got {ell}"
            )));
        }
        check_slack(&epsilon, &scalar::ratio(1, 2))?;
        let log = ell.trailing_zeros() as usize;
        let block = 100 * ell * log;
        let k = block + 1;
        let dims = ell + 400 * ell * ell * log;
        let weight = Scalar::one() - &epsilon;

        let mut rng = rng(seed);
        let mut pool: Vec<usize> = (ell..dims).collect();
        let mut items = Vec::new();
        let mut good = Vec::with_capacity(ell);
        let mut phase_of = Vec::new();
        let mut phases = Vec::with_capacity(ell);
        for phase in 0..ell {
            let count = 4 * ell - phase;
            debug_assert_eq!(pool.len(), count * block);
            pool.shuffle(&mut rng);
            let mut blocks: Vec<Vec<usize>> = pool.chunks(block).map(|c| c.to_vec()).collect();
            let chosen = rng.gen_range(0..count);
            let mut order: Vec<usize> = (0..count).collect();
            if shuffle_within_phase {
                order.shuffle(&mut rng);
            }
            for &b in &order {
                let id = items.len();
                if b == chosen {
                    good.push(ItemId(id));
                }
                let support = blocks[b].iter().copied().chain([phase]);
                let weights = SparseWeightVector::uniform(dims, support, &weight)?;
                items.push(Item::unit(id, weights));
                phase_of.push(phase);
            }
            phases.push(count);
            let taken = blocks.swap_remove(chosen);
            let taken: BTreeSet<usize> = taken.into_iter().collect();
            pool.retain(|d| !taken.contains(d));
            pool.sort_unstable();
        }

        let mut meta = SampleMeta::new("slack-random", Some(seed))
            .param("ell", ell)
            .param("k", k)
            .param("d", dims)
            .param("epsilon", describe(&epsilon));
        meta.phases = phases;
        let witness: BTreeSet<ItemId> = good.iter().copied().collect();
        let value = scalar::int(ell as i64);
        let sample = InstanceSample::new(
            dims,
            items,
            ObjectiveSpec::Cardinality,
            Some((witness, value)),
            meta,
        )?;
        Ok(Self {
            sample,
            ell,
            k,
            good,
            phase_of,
        })
    }

    pub fn bad_items(&self) -> impl Iterator<Item = &Item> + '_ {
        self.sample
            .items
            .iter()
            .filter(|it| !self.good.contains(&it.id))
    }

    /// True iff some two bad items from different phases share no dimension.
    pub fn has_compatible_bad_pair(&self) -> bool {
        let bad: Vec<&Item> = self.bad_items().collect();
        bad.iter().enumerate().any(|(x, a)| {
            bad[x + 1..].iter().any(|b| {
                self.phase_of[a.id.0] != self.phase_of[b.id.0]
                    && !a.weights.conflicts_with(&b.weights)
            })
        })
    }
}

/// Samples the distribution with items revealed in block order.
pub fn sample_slack_distribution(
    ell: usize,
    epsilon: Scalar,
    seed: u64,
) -> Result<InstanceSample, GenError> {
    SlackInstance::sample(ell, epsilon, seed, false).map(|s| s.sample)
}
