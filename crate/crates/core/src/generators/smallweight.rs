//! Hard distribution with uniformly small weights.
//!
//! `l` phases over `d = (2l)!/l! + l` dimensions with every non-zero weight
//! equal to `eps_w`. Phase `i` cuts its pool `J_i` (of size
//! `b_i = (2l-i+1)!/l!`) into `2l-i+1` consecutive blocks; each block yields
//! `1/eps_w` copies of an item covering the rest of the pool plus dimension
//! `i`. A hidden block becomes the next pool.

use std::collections::BTreeSet;

use num_traits::{One, Signed, ToPrimitive};
use rand::Rng;

use super::{describe, rng, GenError, InstanceSample, SampleMeta};
use crate::model::{Item, ItemId, SparseWeightVector};
use crate::objective::ObjectiveSpec;
use crate::scalar::{self, Scalar};

pub const MIN_ELL: usize = 2;
pub const MAX_ELL: usize = 5;

#[derive(Debug, Clone)]
pub struct SmallWeightInstance {
    pub sample: InstanceSample,
    pub ell: usize,
    /// `1 / eps_w`.
    pub copies: usize,
    /// Hidden block of each phase (0-based).
    pub sigma: Vec<usize>,
    /// `(phase, type)` of every item, both 0-based.
    pub type_of: Vec<(usize, usize)>,
    /// `blocks[i][j]`: dimensions of block `j` in phase `i`.
    pub blocks: Vec<Vec<Vec<usize>>>,
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// `b_i = (2l - i + 1)! / l!` for 1-based `i`.
pub fn block_size(ell: usize, i: usize) -> usize {
    factorial(2 * ell + 1 - i) / factorial(ell)
}

impl SmallWeightInstance {
    pub fn sample(ell: usize, eps_w: Scalar, seed: u64) -> Result<Self, GenError> {
        if !(MIN_ELL..=MAX_ELL).contains(&ell) {
            return Err(GenError::InvalidParameter(format!(
                "l must lie in [{MIN_ELL}, {MAX_ELL}], got {ell}"
            )));
        }
        if !eps_w.is_positive() {
            return Err(GenError::InvalidParameter("eps_w must be positive".into()));
        }
        let inverse = Scalar::one() / &eps_w;
        let copies = match inverse
            .is_integer()
            .then(|| inverse.to_integer().to_usize())
        {
            Some(Some(c)) if c >= 1 && eps_w <= Scalar::one() => c,
            _ => {
                return Err(GenError::InvalidParameter(format!(
                    "1/eps_w must be a positive integer, got eps_w = {}",
                    describe(&eps_w)
                )))
            }
        };

        let dims = block_size(ell, 1) + ell;
        let mut rng = rng(seed);
        let mut pool: Vec<usize> = (ell..dims).collect();
        let mut items = Vec::new();
        let mut type_of = Vec::new();
        let mut sigma = Vec::with_capacity(ell);
        let mut blocks_all = Vec::with_capacity(ell);
        let mut witness = BTreeSet::new();
        let mut phases = Vec::with_capacity(ell);
        for phase in 0..ell {
            let count = 2 * ell - phase;
            let size = block_size(ell, phase + 2);
            debug_assert_eq!(pool.len(), count * size);
            let blocks: Vec<Vec<usize>> = pool.chunks(size).map(|c| c.to_vec()).collect();
            let hidden = rng.gen_range(0..count);
            for j in 0..count {
                // blocks are consecutive slices of the pool
                let support: Vec<usize> = pool[..j * size]
                    .iter()
                    .chain(&pool[(j + 1) * size..])
                    .copied()
                    .chain([phase])
                    .collect();
                let weights = SparseWeightVector::uniform(dims, support, &eps_w)?;
                for _ in 0..copies {
                    let id = items.len();
                    if j == hidden {
                        witness.insert(ItemId(id));
                    }
                    items.push(Item::unit(id, weights.clone()));
                    type_of.push((phase, j));
                }
            }
            phases.push(count * copies);
            pool = blocks[hidden].clone();
            sigma.push(hidden);
            blocks_all.push(blocks);
        }

        let mut meta = SampleMeta::new("smallweight", Some(seed))
            .param("ell", ell)
            .param("eps_w", describe(&eps_w))
            .param("d", dims);
        meta.phases = phases;
        let value = scalar::int((ell * copies) as i64);
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
            copies,
            sigma,
            type_of,
            blocks: blocks_all,
        })
    }
}

pub fn sample_smallweight_distribution(
    ell: usize,
    eps_w: Scalar,
    seed: u64,
) -> Result<InstanceSample, GenError> {
    SmallWeightInstance::sample(ell, eps_w, seed).map(|s| s.sample)
}
