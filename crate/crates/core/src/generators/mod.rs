//! Instance families: adaptive adversaries, randomized hard distributions
//! and plain random instances. Every sample carries a verified witness for
//! its optimum whenever one is known analytically.

pub mod adversary;
pub mod noslack;
pub mod random;
pub mod slack;
pub mod smallweight;

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CoreError, Item, ItemId};
use crate::objective::{ObjectiveError, ObjectiveSpec};
use crate::offline::verify_claimed_opt;
use crate::scalar::{self, Scalar};

pub use adversary::{AdaptiveAdversary, SlackDeterministic, SlackSubsets};
pub use noslack::{sample_noslack_distribution, NoslackInstance};
pub use random::{gen_random, gen_random_with, ValueMode};
pub use slack::{sample_slack_distribution, SlackInstance};
pub use smallweight::{sample_smallweight_distribution, SmallWeightInstance};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("generator `{0}` produced a witness that failed verification")]
    WitnessRejected(String),
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleMeta {
    pub generator: String,
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of items in each phase, in arrival order. Empty when the
    /// family has no phases.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<usize>,
}

impl SampleMeta {
    pub fn new(generator: &str, seed: Option<u64>) -> Self {
        Self {
            generator: generator.to_string(),
            seed,
            ..Self::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// A finite instance together with what is known about its optimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSample {
    pub dims: usize,
    pub items: Vec<Item>,
    /// Already knows every item's payload.
    pub objective: ObjectiveSpec,
    pub opt_witness: Option<BTreeSet<ItemId>>,
    pub opt_value: Option<Scalar>,
    pub meta: SampleMeta,
}

impl InstanceSample {
    /// Builds a sample, registering payloads with `objective` and checking
    /// the witness (if any) for feasibility and value.
    pub fn new(
        dims: usize,
        items: Vec<Item>,
        mut objective: ObjectiveSpec,
        witness: Option<(BTreeSet<ItemId>, Scalar)>,
        meta: SampleMeta,
    ) -> Result<Self, GenError> {
        for item in &items {
            objective.absorb(item)?;
        }
        if let Some((set, value)) = &witness {
            if !verify_claimed_opt(&items, &objective, set, value) {
                return Err(GenError::WitnessRejected(meta.generator.clone()));
            }
        }
        let (opt_witness, opt_value) = match witness {
            Some((s, v)) => (Some(s), Some(v)),
            None => (None, None),
        };
        Ok(Self {
            dims,
            items,
            objective,
            opt_witness,
            opt_value,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// The one seeded generator used everywhere, identical on every platform.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn describe(x: &Scalar) -> String {
    scalar::to_string(x)
}

fn check_slack(epsilon: &Scalar, upper: &Scalar) -> Result<(), GenError> {
    use num_traits::Zero;
    if epsilon <= &Scalar::zero() || epsilon >= upper {
        return Err(GenError::InvalidParameter(format!(
            "epsilon must lie in (0, {}), got {}",
            describe(upper),
            describe(epsilon)
        )));
    }
    Ok(())
}
