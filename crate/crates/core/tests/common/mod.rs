//! Independent oracles and instance corpora shared by the integration tests.
//!
//! Nothing here reuses engine internals: loads are recomputed from the raw
//! fractions, rates come from a brute-force fixed-point search, and optima
//! from plain subset enumeration.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::Rng;
use vpack::engine::FractionalState;
use vpack::generators::{gen_random_with, rng, InstanceSample, ValueMode};
use vpack::model::{is_feasible, AlgorithmParams, Item, ItemId};
use vpack::objective::ObjectiveSpec;
use vpack::scalar::{self, Scalar};

pub const GRID_BITS: u32 = 20;

pub fn grid() -> Scalar {
    scalar::pow2_neg(GRID_BITS)
}

/// Best value over all `2^n` subsets, feasibility checked directly.
pub fn enumerate_opt(items: &[Item], dims: usize, spec: &ObjectiveSpec) -> Scalar {
    assert!(
        items.len() <= 20,
        "enumeration oracle is for small instances"
    );
    let mut best = Scalar::zero();
    for mask in 0u32..(1 << items.len()) {
        let chosen: Vec<&Item> = (0..items.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| &items[i])
            .collect();
        if !is_feasible(chosen.iter().copied(), dims) {
            continue;
        }
        let set: BTreeSet<ItemId> = chosen.iter().map(|it| it.id).collect();
        let v = spec.evaluate(&set).unwrap();
        if v > best {
            best = v;
        }
    }
    best
}

fn gauss(mut a: Vec<Vec<Scalar>>, mut b: Vec<Scalar>) -> Option<Vec<Scalar>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                let pivot_row = a[col].clone();
                for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= &f * p;
                }
                let sub = &f * &b[col];
                b[r] -= sub;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// A saturated dimension: `(dim, w_u, argmin)`.
type Row = (usize, Scalar, ItemId);

struct Rates {
    rates: BTreeMap<ItemId, Scalar>,
    /// Rows whose density enters the stop test.
    charged: Vec<usize>,
}

/// Cheapest decrease rates at which every positive-rate item is held back
/// by one of its own saturated dimensions and no saturated load grows.
/// Falls back to the largest requested rate per item when no such rates exist.
fn fixed_point_rates<W, V>(rows: &[Row], weight: &W, value: &V) -> Rates
where
    W: Fn(ItemId, usize) -> Scalar,
    V: Fn(ItemId) -> Scalar,
{
    let mut items: Vec<ItemId> = rows.iter().map(|r| r.2).collect();
    items.sort_unstable();
    items.dedup();
    let n = items.len();
    let net = |r: &[Scalar], row: &Row| -> Scalar {
        items
            .iter()
            .zip(r)
            .fold(row.1.clone(), |acc, (v, x)| acc - x * weight(*v, row.0))
    };

    let mut best: Option<(Scalar, Vec<Scalar>)> = None;
    for size in 1..=n.min(rows.len()) {
        for support in subsets_of_size(n, size) {
            for tight in subsets_of_size(rows.len(), size) {
                let a = tight
                    .iter()
                    .map(|&t| {
                        support
                            .iter()
                            .map(|&c| weight(items[c], rows[t].0))
                            .collect()
                    })
                    .collect();
                let b = tight.iter().map(|&t| rows[t].1.clone()).collect();
                let Some(sol) = gauss(a, b) else { continue };
                if sol.iter().any(|x| !x.is_positive()) {
                    continue;
                }
                let mut r = vec![Scalar::zero(); n];
                for (&c, x) in support.iter().zip(sol) {
                    r[c] = x;
                }
                let nets: Vec<Scalar> = rows.iter().map(|row| net(&r, row)).collect();
                if nets.iter().any(|x| x.is_positive()) {
                    continue;
                }
                let held = support.iter().all(|&c| {
                    rows.iter()
                        .zip(&nets)
                        .any(|(row, x)| row.2 == items[c] && x.is_zero())
                });
                if !held {
                    continue;
                }
                let loss: Scalar = items.iter().zip(&r).map(|(v, x)| value(*v) * x).sum();
                let better = match &best {
                    None => true,
                    Some((l, rs)) => loss < *l || (loss == *l && r < *rs),
                };
                if better {
                    best = Some((loss, r));
                }
            }
        }
    }

    match best {
        Some((_, r)) => {
            let charged = rows
                .iter()
                .enumerate()
                .filter(|(_, row)| net(&r, row).is_zero())
                .map(|(i, _)| i)
                .collect();
            Rates {
                rates: items
                    .into_iter()
                    .zip(r)
                    .filter(|(_, x)| x.is_positive())
                    .collect(),
                charged,
            }
        }
        None => {
            let mut rates: BTreeMap<ItemId, Scalar> = BTreeMap::new();
            for (dim, w_u, v) in rows {
                let want = w_u / weight(*v, *dim);
                let e = rates.entry(*v).or_insert_with(Scalar::zero);
                if want > *e {
                    *e = want;
                }
            }
            Rates {
                rates,
                charged: (0..rows.len()).collect(),
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct NaivePhase {
    pub theta: Scalar,
    pub x: BTreeMap<ItemId, Scalar>,
}

/// Fixed-step simulation of one arrival from `state`.
///
/// `theta` advances on a grid of `2^-20` and the stop test is only taken on
/// grid points. Runs of steps with an unchanged structure are skipped in one
/// move, and a step is split where the structure changes, so the trajectory
/// itself carries no discretisation error.
pub fn naive_phase(
    state: &FractionalState,
    item: &Item,
    value_u: &Scalar,
    params: &AlgorithmParams,
) -> NaivePhase {
    let h = grid();
    let u = item.id;
    let mut x: BTreeMap<ItemId, Scalar> = state.fractions().clone();
    if item.weights.sparsity() == 0 {
        x.insert(u, Scalar::one());
        return NaivePhase {
            theta: Scalar::one(),
            x,
        };
    }
    let weight = |v: ItemId, d: usize| {
        state
            .weights_of(v)
            .map_or_else(Scalar::zero, |w| w.weight(d))
    };
    let value = |v: ItemId| {
        state
            .value_of(v)
            .cloned()
            .expect("stored items have values")
    };
    let budget = &params.gamma * value_u;
    let mut theta = Scalar::zero();

    for _ in 0..1_000_000 {
        let load = |d: usize, x: &BTreeMap<ItemId, Scalar>, theta: &Scalar| -> Scalar {
            x.iter().map(|(v, f)| f * weight(*v, d)).sum::<Scalar>()
                + theta * item.weights.weight(d)
        };
        let on_grid = (&theta / &h).is_integer();

        let mut rows: Vec<Row> = Vec::new();
        let mut blocked = false;
        for (d, w_u) in item.weights.iter() {
            if load(d, &x, &theta) != params.beta {
                continue;
            }
            let mut arg: Option<(ItemId, Scalar)> = None;
            for (v, f) in &x {
                let w = weight(*v, d);
                if f.is_zero() || w.is_zero() {
                    continue;
                }
                let rho = value(*v) / w;
                if arg.as_ref().is_none_or(|(_, b)| rho < *b) {
                    arg = Some((*v, rho));
                }
            }
            match arg {
                Some((v, _)) => rows.push((d, w_u.clone(), v)),
                None => blocked = true,
            }
        }
        if blocked || theta.is_one() {
            break;
        }
        let sol = fixed_point_rates(&rows, &weight, &value);
        let density: Scalar = sol
            .charged
            .iter()
            .map(|&i| {
                let (d, w_u, v) = &rows[i];
                w_u * value(*v) / weight(*v, *d)
            })
            .sum();
        let stop = budget <= density;
        if stop && on_grid {
            break;
        }

        let mut tau = Scalar::one() - &theta;
        if stop {
            let next = ((&theta / &h).floor() + Scalar::one()) * &h;
            tau = tau.min(next - &theta);
        }
        for (d, w_u) in item.weights.iter() {
            let net = sol
                .rates
                .iter()
                .fold(w_u.clone(), |acc, (v, r)| acc - r * weight(*v, d));
            let l = load(d, &x, &theta);
            if net.is_positive() && l < params.beta {
                tau = tau.min((&params.beta - l) / net);
            }
        }
        for (v, r) in &sol.rates {
            tau = tau.min(&x[v] / r);
        }
        assert!(
            tau.is_positive(),
            "naive simulation stalled at {}",
            scalar::to_string(&theta)
        );
        for (v, r) in &sol.rates {
            let f = x.get_mut(v).unwrap();
            *f -= r * &tau;
        }
        x.retain(|_, f| !f.is_zero());
        theta += tau;
    }
    x.insert(u, theta.clone());
    NaivePhase { theta, x }
}

/// One arrival decided by the naive simulator from the engine's state.
pub fn naive_decision(
    state: &FractionalState,
    item: &Item,
    spec: &ObjectiveSpec,
    params: &AlgorithmParams,
) -> (bool, Scalar) {
    let value_u = spec.marginal(&state.ever_accepted(), item.id).unwrap();
    let phase = naive_phase(state, item, &value_u, params);
    (phase.theta >= params.alpha, phase.theta)
}

/// Which invariants failed after one arrival.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantBreaks {
    pub fractional_load: bool,
    pub integral_load: bool,
    pub accounting: bool,
    pub value_ratio: bool,
    pub value_invariant: bool,
}

impl InvariantBreaks {
    pub fn any(&self) -> bool {
        self.fractional_load
            || self.integral_load
            || self.accounting
            || self.value_ratio
            || self.value_invariant
    }
}

/// Checks the loop invariants on a state from its public view only.
pub fn check_state(
    state: &FractionalState,
    spec: &ObjectiveSpec,
    params: &AlgorithmParams,
) -> InvariantBreaks {
    let s = state.fractions();
    let a = state.accepted_fractions();
    let val = |v: &ItemId| state.value_of(*v).cloned().unwrap();
    let mut frac: BTreeMap<usize, Scalar> = BTreeMap::new();
    let mut integral: BTreeMap<usize, Scalar> = BTreeMap::new();
    for (v, f) in s {
        for (d, w) in state.weights_of(*v).unwrap().iter() {
            *frac.entry(d).or_insert_with(Scalar::zero) += w * f;
            *integral.entry(d).or_insert_with(Scalar::zero) += w;
        }
    }
    let fa = spec.evaluate(&a.keys().copied().collect()).unwrap();
    let fs = spec.evaluate(&s.keys().copied().collect()).unwrap();
    let f0 = spec.evaluate(&BTreeSet::new()).unwrap();
    let v_a_sum: Scalar = a.keys().map(val).sum();
    let v_s_sum: Scalar = s.keys().map(val).sum();

    let weighted_a: Scalar = a.iter().map(|(v, x)| val(v) * x).sum();
    let weighted_s: Scalar = s.iter().map(|(v, x)| val(v) * x).sum();
    let gone: Scalar = a
        .iter()
        .filter(|(v, _)| !s.contains_key(v))
        .map(|(v, x)| val(v) * x)
        .sum();
    let kept: Scalar = a
        .iter()
        .filter(|(v, _)| s.contains_key(v))
        .map(|(v, x)| val(v) * x)
        .sum();
    let one = Scalar::one();
    let strong_rhs = (&one - &params.gamma - &params.beta / &params.alpha) * gone
        + (&one - &params.gamma) * kept;

    InvariantBreaks {
        fractional_load: frac.values().any(|l| *l > params.beta),
        integral_load: integral.values().any(|l| *l > one),
        accounting: fa != &f0 + &v_a_sum || fs < &f0 + &v_s_sum,
        value_ratio: weighted_a > scalar::int(2) * &v_s_sum,
        value_invariant: weighted_s < strong_rhs,
    }
}

pub const EPSILONS: [(i64, i64); 5] = [(1, 10), (19, 100), (1, 4), (1, 2), (3, 4)];

/// A varied random instance: size, dimensions, sparsity, slack and value
/// mode are all drawn from `seed`.
pub fn random_instance(seed: u64, max_n: usize, max_d: usize) -> InstanceSample {
    let mut r = rng(seed ^ 0x5eed_cafe);
    let n = r.gen_range(0..=max_n);
    let d = r.gen_range(1..=max_d);
    let k = r.gen_range(1..=d.min(4));
    let (p, q) = EPSILONS[r.gen_range(0..EPSILONS.len())];
    let mode = [ValueMode::Unit, ValueMode::Uniform, ValueMode::Coverage][r.gen_range(0..3)];
    gen_random_with(n, d, k, &scalar::ratio(p, q), mode, seed, false).unwrap()
}

/// Like [`random_instance`] with a fixed slack.
pub fn random_instance_with_slack(
    seed: u64,
    max_n: usize,
    max_d: usize,
    eps: &Scalar,
) -> InstanceSample {
    let mut r = rng(seed ^ 0xfeed_beef);
    let n = r.gen_range(0..=max_n);
    let d = r.gen_range(1..=max_d);
    let k = r.gen_range(1..=d.min(4));
    let mode = [ValueMode::Unit, ValueMode::Uniform, ValueMode::Coverage][r.gen_range(0..3)];
    gen_random_with(n, d, k, eps, mode, seed, false).unwrap()
}
