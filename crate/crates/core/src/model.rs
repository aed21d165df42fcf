//! Items, sparse weight vectors, algorithm parameters and feasibility.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{self, Extended, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    EpsilonOutOfRange(String),
    #[error("dimension {dim} is out of range for a {dims}-dimensional knapsack")]
    DimensionOutOfRange { dim: usize, dims: usize },
    #[error("dimensions must be strictly increasing (saw {prev} then {next})")]
    UnsortedDimensions { prev: usize, next: usize },
    #[error("weight on dimension {dim} must lie in (0, 1], got {weight}")]
    WeightOutOfRange { dim: usize, weight: String },
}

/// Arrival index of an item. Smaller ids arrived earlier and win ties.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct ItemId(pub usize);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Weight vector in `[0,1]^d` stored as its non-zero coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseWeightVector {
    entries: Vec<(usize, Scalar)>,
    dims: usize,
}

impl SparseWeightVector {
    /// Builds a vector from `(dimension, weight)` pairs.
    ///
    /// Dimensions must be strictly increasing and below `dims`; weights must
    /// be in `(0, 1]`.
    pub fn new(dims: usize, entries: Vec<(usize, Scalar)>) -> Result<Self, CoreError> {
        let mut prev: Option<usize> = None;
        for (dim, w) in &entries {
            if *dim >= dims {
                return Err(CoreError::DimensionOutOfRange { dim: *dim, dims });
            }
            if let Some(p) = prev {
                if *dim <= p {
                    return Err(CoreError::UnsortedDimensions {
                        prev: p,
                        next: *dim,
                    });
                }
            }
            if w <= &Scalar::zero() || w > &Scalar::one() {
                return Err(CoreError::WeightOutOfRange {
                    dim: *dim,
                    weight: scalar::to_string(w),
                });
            }
            prev = Some(*dim);
        }
        Ok(Self { entries, dims })
    }

    /// Sorts the pairs first; duplicate dimensions are still rejected.
    pub fn from_unsorted(
        dims: usize,
        mut entries: Vec<(usize, Scalar)>,
    ) -> Result<Self, CoreError> {
        entries.sort_by_key(|(d, _)| *d);
        Self::new(dims, entries)
    }

    /// The same weight `w` on every listed dimension.
    pub fn uniform<I>(dims: usize, support: I, w: &Scalar) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = usize>,
    {
        let entries = support.into_iter().map(|d| (d, w.clone())).collect();
        Self::from_unsorted(dims, entries)
    }

    pub fn empty(dims: usize) -> Self {
        Self {
            entries: Vec::new(),
            dims,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Number of non-zero coordinates.
    pub fn sparsity(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, Scalar)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Scalar)> + '_ {
        self.entries.iter().map(|(d, w)| (*d, w))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(d, _)| *d)
    }

    /// Weight on `dim`, `None` when the coordinate is zero.
    pub fn get(&self, dim: usize) -> Option<&Scalar> {
        self.entries
            .binary_search_by_key(&dim, |(d, _)| *d)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn weight(&self, dim: usize) -> Scalar {
        self.get(dim).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn max_weight(&self) -> Scalar {
        self.entries
            .iter()
            .map(|(_, w)| w)
            .max()
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    /// True if the two vectors share a non-zero dimension.
    pub fn conflicts_with(&self, other: &SparseWeightVector) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: &Scalar) -> Self {
        Self {
            entries: self.entries.iter().map(|(d, w)| (*d, w * factor)).collect(),
            dims: self.dims,
        }
    }
}

/// Objective-specific data attached to an item.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Payload {
    /// Nothing beyond identity (cardinality objectives).
    #[default]
    Unit,
    /// Modular value.
    Value(Scalar),
    /// Covered universe elements.
    Covers(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub id: ItemId,
    pub weights: SparseWeightVector,
    pub payload: Payload,
}

impl Item {
    pub fn new(id: usize, weights: SparseWeightVector, payload: Payload) -> Self {
        Self {
            id: ItemId(id),
            weights,
            payload,
        }
    }

    pub fn unit(id: usize, weights: SparseWeightVector) -> Self {
        Self::new(id, weights, Payload::Unit)
    }
}

/// Density of an item on one dimension: `value / w(dim)`, or `+inf` when the
/// item has no weight there.
pub fn density(weights: &SparseWeightVector, value: &Scalar, dim: usize) -> Extended {
    match weights.get(dim) {
        Some(w) => Extended::Finite(value / w),
        None => Extended::Infinite,
    }
}

/// True iff the summed weights stay within capacity 1 on every dimension.
pub fn is_feasible<'a, I>(items: I, dims: usize) -> bool
where
    I: IntoIterator<Item = &'a Item>,
{
    let mut load: BTreeMap<usize, Scalar> = BTreeMap::new();
    let one = Scalar::one();
    for item in items {
        debug_assert_eq!(item.weights.dims(), dims);
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

/// Largest non-zero coordinate count over a collection of items.
pub fn max_sparsity<'a, I>(items: I) -> usize
where
    I: IntoIterator<Item = &'a Item>,
{
    items
        .into_iter()
        .map(|it| it.weights.sparsity())
        .max()
        .unwrap_or(0)
}

/// Thresholds of the online algorithm for slack `epsilon`.
///
/// `beta = 1 - epsilon` is the internal capacity of the fractional solution,
/// `alpha ~ sqrt(beta)` the acceptance threshold and
/// `gamma = (1 - beta/alpha) / 2` the loss-rate factor. When `sqrt(beta)`
/// is irrational, `alpha` is a rational upper approximation within `10^-12`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgorithmParams {
    pub epsilon: Scalar,
    pub alpha: Scalar,
    pub beta: Scalar,
    pub gamma: Scalar,
    /// True when `alpha` is exactly `sqrt(1 - epsilon)`.
    pub alpha_exact: bool,
}

impl AlgorithmParams {
    pub fn new(epsilon: Scalar) -> Result<Self, CoreError> {
        make_params(epsilon)
    }

    /// `2/alpha + 2k / (gamma * beta * (1 - alpha))`: the competitive bound
    /// `f(OPT) <= c * f(S)` for sparsity `k` (with `f(empty) = 0`).
    pub fn competitive_constant(&self, k: usize) -> Scalar {
        let two = scalar::int(2);
        let one = Scalar::one();
        &two / &self.alpha
            + &two * scalar::int(k as i64) / (&self.gamma * &self.beta * (&one - &self.alpha))
    }
}

pub fn make_params(epsilon: Scalar) -> Result<AlgorithmParams, CoreError> {
    if epsilon <= Scalar::zero() || epsilon >= Scalar::one() {
        return Err(CoreError::EpsilonOutOfRange(scalar::to_string(&epsilon)));
    }
    let beta = Scalar::one() - &epsilon;
    let exact = scalar::exact_sqrt(&beta);
    let alpha_exact = exact.is_some();
    let alpha = exact.unwrap_or_else(|| scalar::sqrt_upper(&beta, &scalar::sqrt_tolerance()));
    let gamma = (Scalar::one() - &beta / &alpha) / scalar::int(2);
    debug_assert!(gamma > Scalar::zero() && beta < alpha && alpha < Scalar::one());
    Ok(AlgorithmParams {
        epsilon,
        alpha,
        beta,
        gamma,
        alpha_exact,
    })
}
