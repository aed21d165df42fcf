//! Adaptive adversaries that pick the next item after seeing what the
//! algorithm currently keeps.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;

use super::{check_slack, describe, GenError, SampleMeta};
use crate::model::{Item, ItemId, Payload, SparseWeightVector};
use crate::objective::ObjectiveSpec;
use crate::scalar::{self, Scalar};

pub trait AdaptiveAdversary {
    fn dims(&self) -> usize;

    /// An objective of the right family with no items registered yet.
    fn objective(&self) -> ObjectiveSpec;

    /// The next item, or `None` once the construction stops. `kept` is the
    /// algorithm's committed set after the previous item was processed.
    fn next_item(&mut self, kept: &BTreeSet<ItemId>) -> Option<Item>;

    /// Every item emitted so far, in arrival order.
    fn emitted(&self) -> &[Item];

    /// A feasible set of emitted items and its value, certifying a lower
    /// bound on the optimum of the transcript so far.
    fn witness(&self) -> (BTreeSet<ItemId>, Scalar);

    fn meta(&self) -> SampleMeta;
}

/// One item of value 1 and weight `1 - eps` everywhere, followed by
/// `floor(1/(2 eps))` light items per dimension of value about
/// `sqrt(eps/k)` and weight `2 eps`. The sequence ends as soon as the heavy
/// item is no longer kept.
#[derive(Debug, Clone)]
pub struct SlackDeterministic {
    k: usize,
    epsilon: Scalar,
    small_value: Scalar,
    per_dim: usize,
    items: Vec<Item>,
    stopped: bool,
}

impl SlackDeterministic {
    pub fn new(k: usize, epsilon: Scalar) -> Result<Self, GenError> {
        if k == 0 {
            return Err(GenError::InvalidParameter("k must be at least 1".into()));
        }
        check_slack(&epsilon, &scalar::ratio(1, 2))?;
        let target = &epsilon / scalar::int(k as i64);
        let small_value = scalar::sqrt_upper(&target, &scalar::sqrt_tolerance());
        let per_dim = (Scalar::one() / (scalar::int(2) * &epsilon))
            .floor()
            .to_integer()
            .try_into()
            .map_err(|_| GenError::InvalidParameter("epsilon too small".into()))?;
        Ok(Self {
            k,
            epsilon,
            small_value,
            per_dim,
            items: Vec::new(),
            stopped: false,
        })
    }

    /// Value of each light item: a rational no smaller than `sqrt(eps/k)`
    /// and within `10^-12` of it.
    pub fn small_value(&self) -> &Scalar {
        &self.small_value
    }

    /// Light items per dimension.
    pub fn per_dim(&self) -> usize {
        self.per_dim
    }

    fn smalls(&self) -> usize {
        self.items.len().saturating_sub(1)
    }
}

impl AdaptiveAdversary for SlackDeterministic {
    fn dims(&self) -> usize {
        self.k
    }

    fn objective(&self) -> ObjectiveSpec {
        ObjectiveSpec::modular()
    }

    fn next_item(&mut self, kept: &BTreeSet<ItemId>) -> Option<Item> {
        if self.stopped {
            return None;
        }
        let id = self.items.len();
        let item = if id == 0 {
            let w = Scalar::one() - &self.epsilon;
            let weights = SparseWeightVector::uniform(self.k, 0..self.k, &w).ok()?;
            Item::new(0, weights, Payload::Value(Scalar::one()))
        } else {
            if !kept.contains(&ItemId(0)) || self.smalls() == self.k * self.per_dim {
                self.stopped = true;
                return None;
            }
            let dim = self.smalls() / self.per_dim;
            let w = scalar::int(2) * &self.epsilon;
            let weights = SparseWeightVector::uniform(self.k, [dim], &w).ok()?;
            Item::new(id, weights, Payload::Value(self.small_value.clone()))
        };
        self.items.push(item.clone());
        Some(item)
    }

    fn emitted(&self) -> &[Item] {
        &self.items
    }

    fn witness(&self) -> (BTreeSet<ItemId>, Scalar) {
        let light = scalar::int(self.smalls() as i64) * &self.small_value;
        if self.items.is_empty() {
            (BTreeSet::new(), Scalar::from_integer(0.into()))
        } else if light > Scalar::one() {
            ((1..self.items.len()).map(ItemId).collect(), light)
        } else {
            ([ItemId(0)].into_iter().collect(), Scalar::one())
        }
    }

    fn meta(&self) -> SampleMeta {
        SampleMeta::new("slack-deterministic", None)
            .param("k", self.k)
            .param("epsilon", describe(&self.epsilon))
    }
}

/// Items are `k`-subsets of `2k^2` dimensions with weight `1 - eps`. Each new
/// item takes `k - 1` unused dimensions plus one dimension of the item the
/// algorithm keeps that no other item touches yet.
#[derive(Debug, Clone)]
pub struct SlackSubsets {
    k: usize,
    epsilon: Scalar,
    dims: usize,
    items: Vec<Item>,
    users: BTreeMap<usize, Vec<ItemId>>,
    next_fresh: usize,
    reference: Option<ItemId>,
    stopped: bool,
}

impl SlackSubsets {
    pub fn new(k: usize, epsilon: Scalar) -> Result<Self, GenError> {
        if k < 2 {
            return Err(GenError::InvalidParameter("k must be at least 2".into()));
        }
        check_slack(&epsilon, &scalar::ratio(1, 2))?;
        Ok(Self {
            k,
            epsilon,
            dims: 2 * k * k,
            items: Vec::new(),
            users: BTreeMap::new(),
            next_fresh: 0,
            reference: None,
            stopped: false,
        })
    }

    /// The item the construction currently attacks.
    pub fn reference(&self) -> Option<ItemId> {
        self.reference
    }

    fn emit(&mut self, support: Vec<usize>) -> Item {
        let id = ItemId(self.items.len());
        let w = Scalar::one() - &self.epsilon;
        let weights = SparseWeightVector::uniform(self.dims, support.iter().copied(), &w)
            .expect("construction stays within 2k^2 dimensions");
        for d in support {
            self.users.entry(d).or_default().push(id);
        }
        let item = Item::unit(id.0, weights);
        self.items.push(item.clone());
        item
    }

    fn fresh(&mut self, n: usize) -> Vec<usize> {
        assert!(
            self.next_fresh + n <= self.dims,
            "fresh dimensions exhausted"
        );
        let out = (self.next_fresh..self.next_fresh + n).collect();
        self.next_fresh += n;
        out
    }

    /// Scan backwards, dropping every earlier item that conflicts with one
    /// already kept.
    fn backward_scan(&self) -> BTreeSet<ItemId> {
        let mut removed = BTreeSet::new();
        let mut out = BTreeSet::new();
        for item in self.items.iter().rev() {
            if removed.contains(&item.id) {
                continue;
            }
            out.insert(item.id);
            for d in item.weights.support() {
                for other in &self.users[&d] {
                    if *other < item.id {
                        removed.insert(*other);
                    }
                }
            }
        }
        out
    }

    /// The items sharing one dimension each with the reference item.
    fn blockers(&self) -> BTreeSet<ItemId> {
        let Some(r) = self.reference else {
            return BTreeSet::new();
        };
        self.items[r.0]
            .weights
            .support()
            .filter_map(|d| self.users[&d].iter().find(|v| **v != r).copied())
            .collect()
    }
}

impl AdaptiveAdversary for SlackSubsets {
    fn dims(&self) -> usize {
        self.dims
    }

    fn objective(&self) -> ObjectiveSpec {
        ObjectiveSpec::Cardinality
    }

    fn next_item(&mut self, kept: &BTreeSet<ItemId>) -> Option<Item> {
        if self.stopped {
            return None;
        }
        if self.items.is_empty() {
            let support = self.fresh(self.k);
            return Some(self.emit(support));
        }
        if let Some(v) = kept.iter().next_back() {
            self.reference = Some(*v);
        }
        let Some(r) = self.reference else {
            // the first item was not kept
            self.stopped = true;
            return None;
        };
        if self.items.len() >= 2 * self.k {
            self.stopped = true;
            return None;
        }
        let open = self.items[r.0]
            .weights
            .support()
            .find(|d| self.users[d].len() == 1);
        let Some(dim) = open else {
            self.stopped = true;
            return None;
        };
        let mut support = self.fresh(self.k - 1);
        support.push(dim);
        Some(self.emit(support))
    }

    fn emitted(&self) -> &[Item] {
        &self.items
    }

    fn witness(&self) -> (BTreeSet<ItemId>, Scalar) {
        let scan = self.backward_scan();
        let blockers = self.blockers();
        let best = if blockers.len() > scan.len() {
            blockers
        } else {
            scan
        };
        let value = scalar::int(best.len() as i64);
        (best, value)
    }

    fn meta(&self) -> SampleMeta {
        SampleMeta::new("slack-subsets", None)
            .param("k", self.k)
            .param("epsilon", describe(&self.epsilon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::is_feasible;
    use crate::scalar::ratio;

    fn run_with<A: AdaptiveAdversary>(
        adv: &mut A,
        mut decide: impl FnMut(&Item, &mut BTreeSet<ItemId>),
    ) {
        let mut kept = BTreeSet::new();
        while let Some(item) = adv.next_item(&kept) {
            decide(&item, &mut kept);
        }
    }

    #[test]
    fn rejecting_the_heavy_item_ends_the_sequence() {
        let mut adv = SlackDeterministic::new(4, ratio(1, 4)).unwrap();
        run_with(&mut adv, |_, _| {});
        assert_eq!(adv.emitted().len(), 1);
    }

    #[test]
    fn keeping_the_heavy_item_sees_every_light_item() {
        let mut adv = SlackDeterministic::new(4, ratio(1, 4)).unwrap();
        run_with(&mut adv, |item, kept| {
            if item.id == ItemId(0) {
                kept.insert(item.id);
            }
        });
        assert_eq!(adv.emitted().len(), 9);
        assert_eq!(adv.per_dim(), 2);
        // sqrt(1/16) is exact
        assert_eq!(adv.small_value(), &ratio(1, 4));
        let (set, value) = adv.witness();
        assert_eq!(set.len(), 8);
        assert_eq!(value, scalar::int(2));
    }

    #[test]
    fn dropping_the_heavy_item_stops_right_after() {
        let mut adv = SlackDeterministic::new(4, ratio(1, 4)).unwrap();
        run_with(&mut adv, |item, kept| {
            kept.clear();
            kept.insert(item.id);
        });
        assert_eq!(adv.emitted().len(), 2);
        assert_eq!(adv.witness().1, scalar::int(1));
    }

    #[test]
    fn subsets_against_a_keeper_of_the_first_item() {
        let mut adv = SlackSubsets::new(3, ratio(1, 4)).unwrap();
        run_with(&mut adv, |item, kept| {
            if item.id == ItemId(0) {
                kept.insert(item.id);
            }
        });
        // every dimension of item 0 gets exactly one challenger
        assert_eq!(adv.emitted().len(), 4);
        let (set, value) = adv.witness();
        assert!(set.len() >= 3);
        assert_eq!(value, scalar::int(set.len() as i64));
        let chosen: Vec<&Item> = adv
            .emitted()
            .iter()
            .filter(|it| set.contains(&it.id))
            .collect();
        assert!(is_feasible(chosen, adv.dims()));
    }

    #[test]
    fn subsets_against_a_switcher_runs_to_2k() {
        let mut adv = SlackSubsets::new(3, ratio(1, 4)).unwrap();
        run_with(&mut adv, |item, kept| {
            kept.clear();
            kept.insert(item.id);
        });
        assert_eq!(adv.emitted().len(), 6);
        let (set, _) = adv.witness();
        assert!(set.len() >= 3);
        let chosen: Vec<&Item> = adv
            .emitted()
            .iter()
            .filter(|it| set.contains(&it.id))
            .collect();
        assert!(is_feasible(chosen, adv.dims()));
    }

    #[test]
    fn subsets_stop_when_first_item_is_refused() {
        let mut adv = SlackSubsets::new(3, ratio(1, 4)).unwrap();
        run_with(&mut adv, |_, _| {});
        assert_eq!(adv.emitted().len(), 1);
    }

    #[test]
    fn parameters_are_validated() {
        assert!(SlackDeterministic::new(0, ratio(1, 4)).is_err());
        assert!(SlackDeterministic::new(2, ratio(1, 2)).is_err());
        assert!(SlackSubsets::new(1, ratio(1, 4)).is_err());
    }
}
