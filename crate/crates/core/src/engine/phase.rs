//! Event-driven simulation of the continuous acceptance phase.
//!
//! Densities are per-item constants and all rates are piecewise constant,
//! so every fraction and every load is affine in `theta` between events.
//! Event times are solutions of linear equations and are computed exactly.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::rates::{solve_rates, SatDim};
use super::{EngineError, FractionalState};
use crate::model::{AlgorithmParams, Item, ItemId};
use crate::scalar::{self, Scalar};

/// Safety net against a non-terminating event loop; never reached in practice.
const MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    DimSaturated {
        dim: usize,
    },
    DimUnsaturated {
        dim: usize,
    },
    ItemFractionHitZero {
        item: ItemId,
    },
    ArgminChanged {
        dim: usize,
        old: ItemId,
        new: ItemId,
    },
    StopConditionMet,
    ThetaCapReached,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    #[serde(with = "scalar::as_string")]
    pub theta: Scalar,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StopConditionMet,
    ThetaCapReached,
}

/// One stretch of constant rates. `x(v)` decreases at `rates[v]` and the
/// arriving item grows at rate 1 over `[start, end]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    #[serde(with = "scalar::as_string")]
    pub start: Scalar,
    #[serde(with = "scalar::as_string")]
    pub end: Scalar,
    #[serde(serialize_with = "scalar::map_as_string::serialize")]
    pub rates: BTreeMap<ItemId, Scalar>,
    /// Value lost per unit of `theta`: `sum_v rate(v) * v(v)`.
    #[serde(with = "scalar::as_string")]
    pub loss_rate: Scalar,
    /// Right-hand side of the stop test: `sum_i w_u(i) * rho_i`.
    #[serde(with = "scalar::as_string")]
    pub density_sum: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseTrace {
    #[serde(with = "scalar::as_string")]
    pub theta_final: Scalar,
    /// Fractions at termination for the arriving item and every item that moved.
    #[serde(serialize_with = "scalar::map_as_string::serialize")]
    pub x_final: BTreeMap<ItemId, Scalar>,
    pub events: Vec<Event>,
    pub segments: Vec<Segment>,
    pub stop_reason: StopReason,
    /// Coupled groups that needed the plain-rate fallback.
    pub fallbacks: usize,
    /// Coupled groups (more than one decreasing item sharing a dimension).
    pub coupled: usize,
}

struct Phase<'a> {
    state: &'a FractionalState,
    u: &'a Item,
    /// Fractions that moved during the phase; everything else reads from `s`.
    x: BTreeMap<ItemId, Scalar>,
    /// Load on each non-zero dimension of `u`, aligned with its entries.
    load: Vec<Scalar>,
    /// Items with positive fraction on each non-zero dimension of `u`.
    holders: Vec<BTreeSet<ItemId>>,
}

impl Phase<'_> {
    fn fraction(&self, v: ItemId) -> Scalar {
        self.x.get(&v).cloned().unwrap_or_else(|| self.state.s(v))
    }

    fn weight(&self, v: ItemId, dim: usize) -> Scalar {
        self.state
            .weights_of(v)
            .map(|w| w.weight(dim))
            .unwrap_or_else(Scalar::zero)
    }

    /// Least-density holder on the `j`-th dimension of `u`, smallest id on ties.
    fn argmin(&self, j: usize) -> Option<(ItemId, Scalar)> {
        let dim = self.u.weights.entries()[j].0;
        let mut best: Option<(ItemId, Scalar)> = None;
        for &v in &self.holders[j] {
            let w = self.weight(v, dim);
            let rho = self.state.value(v) / w;
            let better = match &best {
                None => true,
                Some((_, b)) => rho < *b,
            };
            if better {
                best = Some((v, rho));
            }
        }
        best
    }
}

/// Runs the continuous phase for `item` against the current state.
///
/// The state is not modified; the caller decides whether to commit.
pub fn run_phase(
    state: &FractionalState,
    item: &Item,
    value_u: &Scalar,
    params: &AlgorithmParams,
) -> Result<PhaseTrace, EngineError> {
    let u = item.id;
    let mut trace = PhaseTrace {
        theta_final: Scalar::zero(),
        x_final: BTreeMap::new(),
        events: Vec::new(),
        segments: Vec::new(),
        stop_reason: StopReason::StopConditionMet,
        fallbacks: 0,
        coupled: 0,
    };

    // nothing can ever block an item without weight
    if item.weights.sparsity() == 0 {
        trace.theta_final = Scalar::one();
        trace.x_final.insert(u, Scalar::one());
        trace.events.push(Event {
            theta: Scalar::one(),
            kind: EventKind::ThetaCapReached,
        });
        trace.segments.push(Segment {
            start: Scalar::zero(),
            end: Scalar::one(),
            rates: BTreeMap::new(),
            loss_rate: Scalar::zero(),
            density_sum: Scalar::zero(),
        });
        trace.stop_reason = StopReason::ThetaCapReached;
        return Ok(trace);
    }

    let entries = item.weights.entries();
    let mut phase = Phase {
        state,
        u: item,
        x: BTreeMap::new(),
        load: entries.iter().map(|(d, _)| state.load(*d)).collect(),
        holders: entries
            .iter()
            .map(|(d, _)| state.holders(*d).cloned().unwrap_or_default())
            .collect(),
    };
    let beta = &params.beta;
    let budget = &params.gamma * value_u;
    let mut theta = Scalar::zero();
    // saturated dimensions held at capacity over the previous segment
    let mut active: BTreeMap<usize, ItemId> = BTreeMap::new();

    for step in 0.. {
        if step > MAX_EVENTS {
            return Err(EngineError::Internal(format!(
                "phase for item {u} exceeded {MAX_EVENTS} events"
            )));
        }
        let at_start = theta.is_zero();
        let sat: Vec<usize> = (0..entries.len())
            .filter(|&j| &phase.load[j] == beta)
            .collect();

        if theta.is_one() {
            for &j in &sat {
                let dim = entries[j].0;
                if !active.contains_key(&dim) {
                    trace.events.push(Event {
                        theta: theta.clone(),
                        kind: EventKind::DimSaturated { dim },
                    });
                }
            }
            trace.events.push(Event {
                theta: theta.clone(),
                kind: EventKind::ThetaCapReached,
            });
            trace.stop_reason = StopReason::ThetaCapReached;
            break;
        }

        let mut sat_dims = Vec::with_capacity(sat.len());
        let mut density: BTreeMap<usize, Scalar> = BTreeMap::new();
        let mut blocked = false;
        for &j in &sat {
            match phase.argmin(j) {
                Some((v, rho)) => {
                    let (dim, w_u) = &entries[j];
                    density.insert(*dim, rho);
                    sat_dims.push(SatDim {
                        dim: *dim,
                        w_u: w_u.clone(),
                        argmin: v,
                    });
                }
                // at capacity with only u itself on it: infinite density
                None => blocked = true,
            }
        }
        if blocked {
            trace.events.push(Event {
                theta: theta.clone(),
                kind: EventKind::StopConditionMet,
            });
            trace.stop_reason = StopReason::StopConditionMet;
            break;
        }

        let solution = solve_rates(
            &sat_dims,
            |v, d| phase.weight(v, d),
            |v| state.value(v).clone(),
        );
        trace.fallbacks += solution.fallbacks;
        trace.coupled += solution.coupled;
        let argmin_of: BTreeMap<usize, ItemId> =
            sat_dims.iter().map(|s| (s.dim, s.argmin)).collect();
        let leaving: BTreeSet<usize> = solution.leaving.iter().copied().collect();
        let next_active: BTreeMap<usize, ItemId> = argmin_of
            .iter()
            .filter(|(d, _)| !leaving.contains(d))
            .map(|(d, v)| (*d, *v))
            .collect();

        if !at_start {
            for dim in active.keys() {
                if !next_active.contains_key(dim) {
                    trace.events.push(Event {
                        theta: theta.clone(),
                        kind: EventKind::DimUnsaturated { dim: *dim },
                    });
                }
            }
            for (dim, new) in &next_active {
                match active.get(dim) {
                    None => trace.events.push(Event {
                        theta: theta.clone(),
                        kind: EventKind::DimSaturated { dim: *dim },
                    }),
                    Some(old) if old != new => trace.events.push(Event {
                        theta: theta.clone(),
                        kind: EventKind::ArgminChanged {
                            dim: *dim,
                            old: *old,
                            new: *new,
                        },
                    }),
                    Some(_) => {}
                }
            }
        }
        active = next_active;

        let density_sum: Scalar = solution
            .charged
            .iter()
            .map(|d| item.weights.weight(*d) * &density[d])
            .sum();
        if budget <= density_sum {
            trace.events.push(Event {
                theta: theta.clone(),
                kind: EventKind::StopConditionMet,
            });
            trace.stop_reason = StopReason::StopConditionMet;
            break;
        }

        // net load rate on each dimension of u
        let net: Vec<Scalar> = entries
            .iter()
            .map(|(d, w_u)| {
                solution
                    .rates
                    .iter()
                    .fold(w_u.clone(), |acc, (v, r)| acc - r * phase.weight(*v, *d))
            })
            .collect();

        let mut delta = Scalar::one() - &theta;
        for (j, rate) in net.iter().enumerate() {
            if rate.is_positive() && &phase.load[j] < beta {
                let t = (beta - &phase.load[j]) / rate;
                if t < delta {
                    delta = t;
                }
            }
        }
        for (v, r) in &solution.rates {
            let t = phase.fraction(*v) / r;
            if t < delta {
                delta = t;
            }
        }
        if !delta.is_positive() {
            return Err(EngineError::Internal(format!(
                "phase for item {u} stalled at theta = {}",
                scalar::to_string(&theta)
            )));
        }

        let loss_rate: Scalar = solution
            .rates
            .iter()
            .map(|(v, r)| r * state.value(*v))
            .sum();
        let end = &theta + &delta;
        trace.segments.push(Segment {
            start: theta.clone(),
            end: end.clone(),
            rates: solution.rates.clone(),
            loss_rate,
            density_sum,
        });

        for (j, rate) in net.iter().enumerate() {
            phase.load[j] += rate * &delta;
            if &phase.load[j] > beta || phase.load[j].is_negative() {
                return Err(EngineError::Internal(format!(
                    "load on dimension {} left [0, beta] during item {u}",
                    entries[j].0
                )));
            }
        }
        let mut zeroed = Vec::new();
        for (v, r) in &solution.rates {
            let next = phase.fraction(*v) - r * &delta;
            if next.is_negative() {
                return Err(EngineError::Internal(format!(
                    "fraction of item {v} went negative during item {u}"
                )));
            }
            if next.is_zero() {
                zeroed.push(*v);
            }
            phase.x.insert(*v, next);
        }
        theta = end;
        for v in zeroed {
            for h in &mut phase.holders {
                h.remove(&v);
            }
            trace.events.push(Event {
                theta: theta.clone(),
                kind: EventKind::ItemFractionHitZero { item: v },
            });
        }
    }

    trace.x_final = phase.x;
    trace.x_final.insert(u, theta.clone());
    trace.theta_final = theta;
    Ok(trace)
}
