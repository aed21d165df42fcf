//! The deterministic online algorithm.
//!
//! Each arrival runs a continuous phase in which the new item's fraction
//! grows while the least-dense items on its saturated dimensions shrink.
//! The phase is committed only if the item reached the acceptance threshold
//! `alpha`; committed fractions below `beta` are then disposed of.

mod audit;
mod phase;
mod rates;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::model::{AlgorithmParams, Item, ItemId, SparseWeightVector};
use crate::objective::{ObjectiveError, ObjectiveSpec};
use crate::scalar::{self, Scalar};

pub use audit::{audit_state, AuditCheck, InvariantAudit};
pub use phase::{run_phase, Event, EventKind, PhaseTrace, Segment, StopReason};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("item {id} arrived after {last}; ids must strictly increase")]
    OutOfOrder { id: ItemId, last: ItemId },
    #[error("item {0} was already observed")]
    Duplicate(ItemId),
    #[error("item {id} has {got} dimensions, the engine runs with {expected}")]
    DimensionMismatch {
        id: ItemId,
        got: usize,
        expected: usize,
    },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("internal engine failure: {0}")]
    Internal(String),
}

/// The fractional solution `s`, the ever-accepted fractions `a`, and the
/// bookkeeping needed to query loads and argmins quickly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalState {
    pub(crate) dims: usize,
    pub(crate) s: BTreeMap<ItemId, Scalar>,
    pub(crate) a: BTreeMap<ItemId, Scalar>,
    /// Only dimensions ever touched are stored.
    pub(crate) load: BTreeMap<usize, Scalar>,
    pub(crate) holders: BTreeMap<usize, BTreeSet<ItemId>>,
    pub(crate) weights: BTreeMap<ItemId, SparseWeightVector>,
    pub(crate) value_of: BTreeMap<ItemId, Scalar>,
    pub(crate) f_empty: Scalar,
}

impl FractionalState {
    pub fn new(dims: usize) -> Self {
        Self {
            dims,
            s: BTreeMap::new(),
            a: BTreeMap::new(),
            load: BTreeMap::new(),
            holders: BTreeMap::new(),
            weights: BTreeMap::new(),
            value_of: BTreeMap::new(),
            f_empty: Scalar::zero(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn s(&self, v: ItemId) -> Scalar {
        self.s.get(&v).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn a(&self, v: ItemId) -> Scalar {
        self.a.get(&v).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn load(&self, dim: usize) -> Scalar {
        self.load.get(&dim).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn loads(&self) -> &BTreeMap<usize, Scalar> {
        &self.load
    }

    /// Positive entries of `s`.
    pub fn fractions(&self) -> &BTreeMap<ItemId, Scalar> {
        &self.s
    }

    /// Positive entries of `a`.
    pub fn accepted_fractions(&self) -> &BTreeMap<ItemId, Scalar> {
        &self.a
    }

    /// `S`, the support of `s`: the integral solution.
    pub fn committed(&self) -> BTreeSet<ItemId> {
        self.s.keys().copied().collect()
    }

    /// `A`, the support of `a`: every item ever accepted.
    pub fn ever_accepted(&self) -> BTreeSet<ItemId> {
        self.a.keys().copied().collect()
    }

    /// Frozen marginal value of an accepted item.
    pub fn value_of(&self, v: ItemId) -> Option<&Scalar> {
        self.value_of.get(&v)
    }

    pub fn values(&self) -> &BTreeMap<ItemId, Scalar> {
        &self.value_of
    }

    pub fn f_empty(&self) -> &Scalar {
        &self.f_empty
    }

    pub fn weights_of(&self, v: ItemId) -> Option<&SparseWeightVector> {
        self.weights.get(&v)
    }

    pub(crate) fn holders(&self, dim: usize) -> Option<&BTreeSet<ItemId>> {
        self.holders.get(&dim)
    }

    pub(crate) fn value(&self, v: ItemId) -> &Scalar {
        &self.value_of[&v]
    }

    fn set_fraction(&mut self, v: ItemId, next: Scalar) {
        let w = self.weights[&v].clone();
        let prev = self.s(v);
        let diff = &next - &prev;
        for (d, wd) in w.iter() {
            let slot = self.load.entry(d).or_insert_with(Scalar::zero);
            *slot += wd * &diff;
            if next.is_zero() {
                if let Some(h) = self.holders.get_mut(&d) {
                    h.remove(&v);
                }
            } else {
                self.holders.entry(d).or_default().insert(v);
            }
        }
        if next.is_zero() {
            self.s.remove(&v);
        } else {
            self.s.insert(v, next);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub item: ItemId,
    pub accepted: bool,
    #[serde(with = "scalar::as_string")]
    pub theta_final: Scalar,
    /// Items removed from `S` by this arrival.
    pub disposed: Vec<ItemId>,
    #[serde(with = "scalar::as_string")]
    pub value_u: Scalar,
    pub audit: Option<InvariantAudit>,
    #[serde(skip)]
    pub trace: PhaseTrace,
}

/// Processes one arrival: freezes `v(u)`, runs the phase and commits it when
/// `theta >= alpha`. A rejected item leaves `state` untouched.
///
/// `spec` must already know the item (see [`ObjectiveSpec::absorb`]).
pub fn observe_item(
    state: &mut FractionalState,
    item: &Item,
    spec: &ObjectiveSpec,
    params: &AlgorithmParams,
    audit: bool,
) -> Result<StepOutcome, EngineError> {
    if state.value_of.contains_key(&item.id) {
        return Err(EngineError::Duplicate(item.id));
    }
    if item.weights.dims() != state.dims {
        return Err(EngineError::DimensionMismatch {
            id: item.id,
            got: item.weights.dims(),
            expected: state.dims,
        });
    }
    let value_u = spec.marginal(&state.ever_accepted(), item.id)?;
    let trace = run_phase(state, item, &value_u, params)?;

    let accepted = trace.theta_final >= params.alpha;
    let mut disposed = Vec::new();
    if accepted {
        let u = item.id;
        let theta = trace.theta_final.clone();
        state.weights.insert(u, item.weights.clone());
        state.value_of.insert(u, value_u.clone());
        state.a.insert(u, theta.clone());
        for (v, x) in &trace.x_final {
            if *v != u {
                state.set_fraction(*v, x.clone());
            }
        }
        state.set_fraction(u, theta);
        for v in trace.x_final.keys() {
            if *v != u && state.s(*v) < params.beta {
                disposed.push(*v);
                state.set_fraction(*v, Scalar::zero());
            }
        }
    }
    let audit = audit.then(|| audit_state(state, spec, params));
    Ok(StepOutcome {
        item: item.id,
        accepted,
        theta_final: trace.theta_final.clone(),
        disposed,
        value_u,
        audit,
        trace,
    })
}

/// A [`FractionalState`] bound to its parameters.
#[derive(Debug, Clone)]
pub struct OnlineEngine {
    params: AlgorithmParams,
    state: FractionalState,
    audit: bool,
    last: Option<ItemId>,
    k_observed: usize,
}

impl OnlineEngine {
    pub fn new(params: AlgorithmParams, dims: usize) -> Self {
        Self {
            params,
            state: FractionalState::new(dims),
            audit: true,
            last: None,
            k_observed: 0,
        }
    }

    /// Turns the per-arrival invariant audit on or off (on by default).
    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn params(&self) -> &AlgorithmParams {
        &self.params
    }

    pub fn state(&self) -> &FractionalState {
        &self.state
    }

    /// Ids must strictly increase across calls.
    pub fn observe(
        &mut self,
        item: &Item,
        spec: &ObjectiveSpec,
    ) -> Result<StepOutcome, EngineError> {
        if let Some(last) = self.last {
            if item.id <= last {
                return Err(EngineError::OutOfOrder { id: item.id, last });
            }
        }
        let out = observe_item(&mut self.state, item, spec, &self.params, self.audit)?;
        self.last = Some(item.id);
        self.k_observed = self.k_observed.max(item.weights.sparsity());
        Ok(out)
    }

    /// Largest sparsity among all items observed so far.
    pub fn k_observed(&self) -> usize {
        self.k_observed
    }

    pub fn committed(&self) -> BTreeSet<ItemId> {
        self.state.committed()
    }

    pub fn audit(&self, spec: &ObjectiveSpec) -> InvariantAudit {
        audit_state(&self.state, spec, &self.params)
    }
}
