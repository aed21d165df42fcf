//! Exact offline optimum by branch and bound.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::model::{is_feasible, Item, ItemId};
use crate::objective::{ObjectiveError, ObjectiveSpec};
use crate::scalar::{self, Scalar};

/// Instances above this size are refused.
pub const MAX_ITEMS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OfflineError {
    #[error("exact search is limited to {limit} items, got {n}")]
    TooManyItems { n: usize, limit: usize },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptResult {
    pub best_set: BTreeSet<ItemId>,
    #[serde(with = "scalar::as_string")]
    pub best_value: Scalar,
    /// Search nodes visited.
    pub explored: u64,
}

struct Search<'a> {
    items: Vec<&'a Item>,
    spec: &'a ObjectiveSpec,
    load: BTreeMap<usize, Scalar>,
    current: Vec<ItemId>,
    best: (Scalar, BTreeSet<ItemId>),
    explored: u64,
}

impl Search<'_> {
    fn value_with_rest(&self, from: usize) -> Result<Scalar, ObjectiveError> {
        let set: BTreeSet<ItemId> = self
            .current
            .iter()
            .copied()
            .chain(self.items[from..].iter().map(|it| it.id))
            .collect();
        self.spec.evaluate(&set)
    }

    fn rest_fits(&self, from: usize) -> bool {
        let mut load = self.load.clone();
        let one = Scalar::one();
        for item in &self.items[from..] {
            for (d, w) in item.weights.iter() {
                let slot = load.entry(d).or_insert_with(Scalar::zero);
                *slot += w;
                if *slot > one {
                    return false;
                }
            }
        }
        true
    }

    fn offer(&mut self, value: Scalar, set: BTreeSet<ItemId>) {
        if value > self.best.0 || (value == self.best.0 && set < self.best.1) {
            self.best = (value, set);
        }
    }

    fn visit(&mut self, i: usize) -> Result<(), ObjectiveError> {
        self.explored += 1;
        let bound = self.value_with_rest(i)?;
        if bound < self.best.0 {
            return Ok(());
        }
        if self.rest_fits(i) {
            // monotone: taking everything left is optimal for this branch
            let set = self
                .current
                .iter()
                .copied()
                .chain(self.items[i..].iter().map(|it| it.id))
                .collect();
            self.offer(bound, set);
            return Ok(());
        }
        // rest_fits fails, so at least one item remains
        let item = self.items[i];
        let one = Scalar::one();
        let fits = item
            .weights
            .iter()
            .all(|(d, w)| self.load.get(&d).map_or(w.clone(), |l| l + w) <= one);
        if fits {
            for (d, w) in item.weights.iter() {
                *self.load.entry(d).or_insert_with(Scalar::zero) += w;
            }
            self.current.push(item.id);
            self.visit(i + 1)?;
            self.current.pop();
            for (d, w) in item.weights.iter() {
                *self.load.get_mut(&d).expect("load was set on entry") -= w;
            }
        }
        self.visit(i + 1)
    }
}

/// Finds a feasible subset of maximum value.
///
/// Ties are broken towards the lexicographically smallest id set, so the
/// result does not depend on the search order.
pub fn brute_force_opt(items: &[Item], spec: &ObjectiveSpec) -> Result<OptResult, OfflineError> {
    if items.len() > MAX_ITEMS {
        return Err(OfflineError::TooManyItems {
            n: items.len(),
            limit: MAX_ITEMS,
        });
    }
    // valuable singletons first, so good incumbents appear early
    let empty = BTreeSet::new();
    let mut keyed = Vec::with_capacity(items.len());
    for item in items {
        keyed.push((spec.marginal(&empty, item.id)?, item));
    }
    keyed.sort_by(|(va, a), (vb, b)| vb.cmp(va).then(a.id.cmp(&b.id)));

    let mut search = Search {
        items: keyed.into_iter().map(|(_, it)| it).collect(),
        spec,
        load: BTreeMap::new(),
        current: Vec::new(),
        best: (spec.evaluate(&empty)?, BTreeSet::new()),
        explored: 0,
    };
    search.visit(0)?;
    Ok(OptResult {
        best_set: search.best.1,
        best_value: search.best.0,
        explored: search.explored,
    })
}

/// True iff `claimed` is a feasible subset of `items` worth exactly `value`.
pub fn verify_claimed_opt(
    items: &[Item],
    spec: &ObjectiveSpec,
    claimed: &BTreeSet<ItemId>,
    value: &Scalar,
) -> bool {
    let chosen: Vec<&Item> = items.iter().filter(|it| claimed.contains(&it.id)).collect();
    if chosen.len() != claimed.len() {
        return false;
    }
    let dims = chosen.first().map_or(0, |it| it.weights.dims());
    is_feasible(chosen, dims) && spec.evaluate(claimed).as_ref() == Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Payload, SparseWeightVector};
    use crate::scalar::{int, ratio};

    fn unit(id: usize, dims: usize, coords: &[(usize, (i64, i64))]) -> Item {
        let entries = coords.iter().map(|&(d, (n, q))| (d, ratio(n, q))).collect();
        Item::unit(id, SparseWeightVector::new(dims, entries).unwrap())
    }

    #[test]
    fn single_item_is_optimal() {
        let items = vec![unit(0, 2, &[(0, (1, 1)), (1, (1, 2))])];
        let opt = brute_force_opt(&items, &ObjectiveSpec::Cardinality).unwrap();
        assert_eq!(opt.best_value, int(1));
        assert_eq!(opt.best_set, [ItemId(0)].into_iter().collect());
    }

    #[test]
    fn empty_instance_has_zero_optimum() {
        let opt = brute_force_opt(&[], &ObjectiveSpec::Cardinality).unwrap();
        assert_eq!(opt.best_value, int(0));
        assert!(opt.best_set.is_empty());
    }

    #[test]
    fn picks_the_heavier_modular_side() {
        let mut spec = ObjectiveSpec::modular();
        let items: Vec<Item> = [(0, 5), (1, 3), (2, 3)]
            .into_iter()
            .map(|(id, v)| {
                let w = if id == 0 { (1, 1) } else { (1, 2) };
                let it = Item::new(
                    id,
                    SparseWeightVector::new(1, vec![(0, ratio(w.0, w.1))]).unwrap(),
                    Payload::Value(int(v)),
                );
                spec.absorb(&it).unwrap();
                it
            })
            .collect();
        let opt = brute_force_opt(&items, &spec).unwrap();
        assert_eq!(opt.best_value, int(6));
        assert_eq!(opt.best_set, [ItemId(1), ItemId(2)].into_iter().collect());
    }

    #[test]
    fn size_guard() {
        let items: Vec<Item> = (0..31).map(|i| unit(i, 1, &[])).collect();
        assert!(matches!(
            brute_force_opt(&items, &ObjectiveSpec::Cardinality),
            Err(OfflineError::TooManyItems { n: 31, .. })
        ));
    }

    #[test]
    fn claimed_sets_are_checked() {
        let items = vec![unit(0, 1, &[(0, (3, 4))]), unit(1, 1, &[(0, (3, 8))])];
        let spec = ObjectiveSpec::Cardinality;
        let both: BTreeSet<ItemId> = [ItemId(0), ItemId(1)].into_iter().collect();
        let one: BTreeSet<ItemId> = [ItemId(0)].into_iter().collect();
        assert!(!verify_claimed_opt(&items, &spec, &both, &int(2)));
        assert!(verify_claimed_opt(&items, &spec, &one, &int(1)));
        assert!(!verify_claimed_opt(&items, &spec, &one, &int(2)));
        let unknown: BTreeSet<ItemId> = [ItemId(7)].into_iter().collect();
        assert!(!verify_claimed_opt(&items, &spec, &unknown, &int(1)));
    }
}
