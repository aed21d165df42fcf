//! Decrease rates for the argmin items of saturated dimensions.
//!
//! Taken literally, "every argmin item decreases at the largest rate any of
//! its dimensions asks for" can push a saturated dimension strictly below
//! the capacity while another item is also decreasing on it; the dimension
//! then flips between saturated and unsaturated infinitely often. The
//! well-defined limit of that chattering is a sliding mode: each argmin item
//! decreases exactly as fast as its most demanding dimension needs, given
//! what the other decreasing items already free up there.
//!
//! For one coupled group of items this is a small complementarity problem.
//! Each item either stays put or binds one of its dimensions (load held at
//! capacity). Every binding pattern is solved exactly and the consistent
//! pattern with the least value loss wins. When an item is alone on its
//! dimensions this reduces to the plain rule `max_i w_u(i) / w_v(i)`.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::model::ItemId;
use crate::scalar::Scalar;

/// Enumeration budget per coupled group before falling back to plain rates.
const PATTERN_LIMIT: usize = 20_000;

/// A saturated dimension of the arriving item together with its argmin.
#[derive(Debug, Clone)]
pub(crate) struct SatDim {
    pub dim: usize,
    pub w_u: Scalar,
    pub argmin: ItemId,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RateSolution {
    /// Strictly positive decrease rates.
    pub rates: BTreeMap<ItemId, Scalar>,
    /// Dimensions whose load net rate is negative; they leave saturation.
    pub leaving: Vec<usize>,
    /// Saturated dimensions whose density term enters the stop test.
    pub charged: Vec<usize>,
    /// Number of coupled groups that fell back to plain rates.
    pub fallbacks: usize,
    /// Number of coupled groups with more than one item.
    pub coupled: usize,
}

struct Group {
    items: Vec<ItemId>,
    /// Indices into the saturated dimension list.
    dims: Vec<usize>,
    /// `weights[r][c]`: weight of `items[c]` on `dims[r]`.
    weights: Vec<Vec<Scalar>>,
}

pub(crate) fn solve_rates<W, V>(sat: &[SatDim], weight: W, value: V) -> RateSolution
where
    W: Fn(ItemId, usize) -> Scalar,
    V: Fn(ItemId) -> Scalar,
{
    let mut out = RateSolution::default();
    for group in groups(sat, &weight) {
        if group.items.len() > 1 {
            out.coupled += 1;
        }
        let (rates, fell_back) = match best_pattern(sat, &group, &value) {
            Some(r) => (r, false),
            None => (plain_rates(sat, &group), true),
        };
        if fell_back {
            out.fallbacks += 1;
        }
        for (r, &si) in group.dims.iter().enumerate() {
            let net = net_rate(&sat[si].w_u, &group.weights[r], &rates);
            if net.is_negative() {
                out.leaving.push(sat[si].dim);
            }
            if fell_back || net.is_zero() {
                out.charged.push(sat[si].dim);
            }
        }
        for (v, r) in group.items.iter().zip(rates) {
            if r.is_positive() {
                out.rates.insert(*v, r);
            }
        }
    }
    out.leaving.sort_unstable();
    out.charged.sort_unstable();
    out
}

/// Splits the argmin items into groups that share a saturated dimension.
fn groups<W>(sat: &[SatDim], weight: &W) -> Vec<Group>
where
    W: Fn(ItemId, usize) -> Scalar,
{
    let mut items: Vec<ItemId> = sat.iter().map(|s| s.argmin).collect();
    items.sort_unstable();
    items.dedup();
    let index: BTreeMap<ItemId, usize> = items.iter().enumerate().map(|(i, v)| (*v, i)).collect();

    let mut parent: Vec<usize> = (0..items.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for s in sat {
        for (c, v) in items.iter().enumerate() {
            if weight(*v, s.dim).is_positive() {
                let root = find(&mut parent, index[&s.argmin]);
                let r = find(&mut parent, c);
                parent[r] = root;
            }
        }
    }

    let mut by_root: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for c in 0..items.len() {
        let r = find(&mut parent, c);
        by_root.entry(r).or_default().0.push(c);
    }
    for (si, s) in sat.iter().enumerate() {
        let r = find(&mut parent, index[&s.argmin]);
        by_root.entry(r).or_default().1.push(si);
    }

    let mut out: Vec<Group> = by_root
        .into_values()
        .map(|(cols, dims)| {
            let members: Vec<ItemId> = cols.iter().map(|&c| items[c]).collect();
            let weights = dims
                .iter()
                .map(|&si| members.iter().map(|&v| weight(v, sat[si].dim)).collect())
                .collect();
            Group {
                items: members,
                dims,
                weights,
            }
        })
        .collect();
    out.sort_by_key(|g| g.items[0]);
    out
}

/// `w_u(i) - sum_v rate(v) * w_v(i)`: net rate of change of the load.
fn net_rate(w_u: &Scalar, row: &[Scalar], rates: &[Scalar]) -> Scalar {
    row.iter()
        .zip(rates)
        .fold(w_u.clone(), |acc, (w, r)| acc - w * r)
}

/// The literal rule: every argmin item at its largest requested rate.
fn plain_rates(sat: &[SatDim], group: &Group) -> Vec<Scalar> {
    let mut rates = vec![Scalar::zero(); group.items.len()];
    for (r, &si) in group.dims.iter().enumerate() {
        let c = group
            .items
            .iter()
            .position(|v| *v == sat[si].argmin)
            .expect("argmin belongs to its group");
        let want = &sat[si].w_u / &group.weights[r][c];
        if want > rates[c] {
            rates[c] = want;
        }
    }
    rates
}

fn best_pattern<V>(sat: &[SatDim], group: &Group, value: &V) -> Option<Vec<Scalar>>
where
    V: Fn(ItemId) -> Scalar,
{
    let n = group.items.len();
    // candidate binding rows per item, deduplicated by row content
    let mut options: Vec<Vec<Option<usize>>> = vec![vec![None]; n];
    for (r, &si) in group.dims.iter().enumerate() {
        let c = group.items.iter().position(|v| *v == sat[si].argmin)?;
        let duplicate = options[c].iter().flatten().any(|&q| {
            sat[group.dims[q]].w_u == sat[si].w_u && group.weights[q] == group.weights[r]
        });
        if !duplicate {
            options[c].push(Some(r));
        }
    }
    let total = options
        .iter()
        .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
        .unwrap_or(usize::MAX);
    if total > PATTERN_LIMIT {
        return None;
    }

    let values: Vec<Scalar> = group.items.iter().map(|v| value(*v)).collect();
    let mut best: Option<(Scalar, Vec<Scalar>)> = None;
    let mut odometer = vec![0usize; n];
    loop {
        let binding: Vec<(usize, usize)> = odometer
            .iter()
            .enumerate()
            .filter_map(|(c, &o)| options[c][o].map(|r| (c, r)))
            .collect();
        if let Some(rates) = solve_pattern(sat, group, &binding) {
            let consistent =
                group.dims.iter().enumerate().all(|(r, &si)| {
                    !net_rate(&sat[si].w_u, &group.weights[r], &rates).is_positive()
                });
            if consistent {
                let loss: Scalar = rates.iter().zip(&values).map(|(r, v)| r * v).sum();
                let better = match &best {
                    None => true,
                    Some((l, rs)) => loss < *l || (loss == *l && rates < *rs),
                };
                if better {
                    best = Some((loss, rates));
                }
            }
        }
        // advance the odometer
        let mut c = 0;
        loop {
            if c == n {
                return best.map(|(_, r)| r);
            }
            odometer[c] += 1;
            if odometer[c] < options[c].len() {
                break;
            }
            odometer[c] = 0;
            c += 1;
        }
    }
}

/// Rates that hold every binding row exactly at capacity, with all other
/// items at rate zero. `None` for singular systems or negative rates.
fn solve_pattern(sat: &[SatDim], group: &Group, binding: &[(usize, usize)]) -> Option<Vec<Scalar>> {
    let m = binding.len();
    let mut a: Vec<Vec<Scalar>> = binding
        .iter()
        .map(|&(_, r)| {
            binding
                .iter()
                .map(|&(c, _)| group.weights[r][c].clone())
                .collect()
        })
        .collect();
    let mut b: Vec<Scalar> = binding
        .iter()
        .map(|&(_, r)| sat[group.dims[r]].w_u.clone())
        .collect();
    let x = gauss_solve(&mut a, &mut b, m)?;
    if x.iter().any(|r| r.is_negative()) {
        return None;
    }
    let mut rates = vec![Scalar::zero(); group.items.len()];
    for (&(c, _), r) in binding.iter().zip(x) {
        rates[c] = r;
    }
    Some(rates)
}

/// Exact Gaussian elimination on an `m x m` system.
fn gauss_solve(a: &mut [Vec<Scalar>], b: &mut [Scalar], m: usize) -> Option<Vec<Scalar>> {
    for col in 0..m {
        let pivot = (col..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..m {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= &f * p;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    Some((0..m).map(|i| &b[i] / &a[i][i]).collect())
}
