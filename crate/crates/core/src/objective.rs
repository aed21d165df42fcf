//! Monotone submodular objectives, queried through marginal values.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::{Item, ItemId, Payload};
use crate::scalar::{self, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObjectiveError {
    #[error("item {0} is unknown to the objective")]
    UnknownItem(ItemId),
    #[error("item {0} carries a payload that does not match a {1} objective")]
    PayloadMismatch(ItemId, &'static str),
    #[error("negative value {1} for item {0} would break monotonicity")]
    NegativeValue(ItemId, String),
    #[error("item {0} covers element {1}, outside a universe of {2}")]
    ElementOutOfRange(ItemId, usize, usize),
    #[error("element weights must be non-negative")]
    NegativeElementWeight,
}

/// The utility function `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectiveSpec {
    /// `f(S) = sum of per-item values`.
    Modular { values: BTreeMap<ItemId, Scalar> },
    /// `f(S) = |S|`.
    Cardinality,
    /// `f(S) = total weight of the union of covered elements`.
    Coverage {
        covers: BTreeMap<ItemId, BTreeSet<usize>>,
        element_weights: Vec<Scalar>,
    },
}

impl ObjectiveSpec {
    pub fn modular() -> Self {
        ObjectiveSpec::Modular {
            values: BTreeMap::new(),
        }
    }

    pub fn coverage(element_weights: Vec<Scalar>) -> Result<Self, ObjectiveError> {
        if element_weights.iter().any(|w| w.is_negative()) {
            return Err(ObjectiveError::NegativeElementWeight);
        }
        Ok(ObjectiveSpec::Coverage {
            covers: BTreeMap::new(),
            element_weights,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ObjectiveSpec::Modular { .. } => "modular",
            ObjectiveSpec::Cardinality => "cardinality",
            ObjectiveSpec::Coverage { .. } => "coverage",
        }
    }

    /// Registers the objective data carried by `item`.
    ///
    /// Items arriving online bring their own payload; this makes them known
    /// to `marginal` and `evaluate`.
    pub fn absorb(&mut self, item: &Item) -> Result<(), ObjectiveError> {
        let kind = self.kind();
        match (self, &item.payload) {
            (ObjectiveSpec::Cardinality, Payload::Unit) => Ok(()),
            (ObjectiveSpec::Modular { values }, Payload::Value(v)) => {
                if v.is_negative() {
                    return Err(ObjectiveError::NegativeValue(item.id, scalar::to_string(v)));
                }
                values.insert(item.id, v.clone());
                Ok(())
            }
            (
                ObjectiveSpec::Coverage {
                    covers,
                    element_weights,
                },
                Payload::Covers(elements),
            ) => {
                if let Some(&e) = elements.iter().find(|&&e| e >= element_weights.len()) {
                    return Err(ObjectiveError::ElementOutOfRange(
                        item.id,
                        e,
                        element_weights.len(),
                    ));
                }
                covers.insert(item.id, elements.iter().copied().collect());
                Ok(())
            }
            _ => Err(ObjectiveError::PayloadMismatch(item.id, kind)),
        }
    }

    pub fn knows(&self, id: ItemId) -> bool {
        match self {
            ObjectiveSpec::Modular { values } => values.contains_key(&id),
            ObjectiveSpec::Cardinality => true,
            ObjectiveSpec::Coverage { covers, .. } => covers.contains_key(&id),
        }
    }

    /// `f(base + u) - f(base)` for `u` not in `base`.
    pub fn marginal(&self, base: &BTreeSet<ItemId>, u: ItemId) -> Result<Scalar, ObjectiveError> {
        debug_assert!(!base.contains(&u));
        match self {
            ObjectiveSpec::Cardinality => Ok(scalar::int(1)),
            ObjectiveSpec::Modular { values } => values
                .get(&u)
                .cloned()
                .ok_or(ObjectiveError::UnknownItem(u)),
            ObjectiveSpec::Coverage {
                covers,
                element_weights,
            } => {
                let mine = covers.get(&u).ok_or(ObjectiveError::UnknownItem(u))?;
                let covered = covered_union(covers, base)?;
                Ok(mine
                    .difference(&covered)
                    .map(|&e| &element_weights[e])
                    .sum())
            }
        }
    }

    /// `f(set)`. The empty set evaluates to zero for every variant.
    pub fn evaluate(&self, set: &BTreeSet<ItemId>) -> Result<Scalar, ObjectiveError> {
        match self {
            ObjectiveSpec::Cardinality => Ok(scalar::int(set.len() as i64)),
            ObjectiveSpec::Modular { values } => set
                .iter()
                .map(|id| values.get(id).ok_or(ObjectiveError::UnknownItem(*id)))
                .try_fold(Scalar::zero(), |acc, v| Ok(acc + v?)),
            ObjectiveSpec::Coverage {
                covers,
                element_weights,
            } => Ok(covered_union(covers, set)?
                .iter()
                .map(|&e| &element_weights[e])
                .sum()),
        }
    }

    /// `f(empty set)`.
    pub fn empty_value(&self) -> Scalar {
        Scalar::zero()
    }
}

fn covered_union(
    covers: &BTreeMap<ItemId, BTreeSet<usize>>,
    set: &BTreeSet<ItemId>,
) -> Result<BTreeSet<usize>, ObjectiveError> {
    let mut out = BTreeSet::new();
    for id in set {
        let c = covers.get(id).ok_or(ObjectiveError::UnknownItem(*id))?;
        out.extend(c.iter().copied());
    }
    Ok(out)
}
