//! Plain random instances for smoke tests and ratio sweeps.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rand::seq::index;
use rand::Rng;

use super::{check_slack, describe, rng, GenError, InstanceSample, SampleMeta};
use crate::model::{Item, Payload, SparseWeightVector};
use crate::objective::ObjectiveSpec;
use crate::offline::{brute_force_opt, MAX_ITEMS};
use crate::scalar::{self, Scalar};

/// Weights are multiples of `2^-16`.
const WEIGHT_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMode {
    /// Cardinality objective.
    Unit,
    /// Modular objective with values in `{1/16, ..., 16}`.
    Uniform,
    /// Coverage of a universe of `2n` unit-weight elements, 1 to 3 per item.
    Coverage,
}

impl fmt::Display for ValueMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueMode::Unit => "unit",
            ValueMode::Uniform => "uniform",
            ValueMode::Coverage => "coverage",
        })
    }
}

impl FromStr for ValueMode {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit" => Ok(ValueMode::Unit),
            "uniform" => Ok(ValueMode::Uniform),
            "coverage" => Ok(ValueMode::Coverage),
            other => Err(GenError::InvalidParameter(format!(
                "unknown value mode `{other}` (expected unit, uniform or coverage)"
            ))),
        }
    }
}

/// `n` items, each on `k` distinct uniform dimensions with weights drawn
/// uniformly from the multiples of `2^-16` in `(0, 1 - eps]`.
///
/// When `with_opt` is set and `n` is within the exact solver's limit, the
/// optimum is computed and attached as the witness.
pub fn gen_random_with(
    n: usize,
    d: usize,
    k: usize,
    epsilon: &Scalar,
    mode: ValueMode,
    seed: u64,
    with_opt: bool,
) -> Result<InstanceSample, GenError> {
    if k > d {
        return Err(GenError::InvalidParameter(format!(
            "k = {k} exceeds d = {d}"
        )));
    }
    check_slack(epsilon, &Scalar::one())?;
    let scale = scalar::pow2(WEIGHT_BITS);
    let top = (Scalar::one() - epsilon) * &scale;
    let top = top.floor().to_integer().to_u64().unwrap_or(0);
    if top == 0 {
        return Err(GenError::InvalidParameter(format!(
            "no multiple of 2^-{WEIGHT_BITS} fits below 1 - {}",
            describe(epsilon)
        )));
    }

    let mut rng = rng(seed);
    let universe = 2 * n.max(1);
    let mut items = Vec::with_capacity(n);
    for id in 0..n {
        let mut dims: Vec<usize> = index::sample(&mut rng, d, k).into_vec();
        dims.sort_unstable();
        let entries = dims
            .into_iter()
            .map(|dim| {
                let num = rng.gen_range(1..=top);
                (
                    dim,
                    Scalar::new(BigInt::from(num), BigInt::one() << WEIGHT_BITS as usize),
                )
            })
            .collect();
        let weights = SparseWeightVector::new(d, entries)?;
        let payload = match mode {
            ValueMode::Unit => Payload::Unit,
            ValueMode::Uniform => Payload::Value(scalar::ratio(rng.gen_range(1..=256), 16)),
            ValueMode::Coverage => {
                let m = rng.gen_range(1..=3usize).min(universe);
                let mut covers = index::sample(&mut rng, universe, m).into_vec();
                covers.sort_unstable();
                Payload::Covers(covers)
            }
        };
        items.push(Item::new(id, weights, payload));
    }

    let objective = match mode {
        ValueMode::Unit => ObjectiveSpec::Cardinality,
        ValueMode::Uniform => ObjectiveSpec::modular(),
        ValueMode::Coverage => ObjectiveSpec::coverage(vec![Scalar::one(); universe])?,
    };
    let meta = SampleMeta::new("random", Some(seed))
        .param("n", n)
        .param("d", d)
        .param("k", k)
        .param("epsilon", describe(epsilon))
        .param("values", mode);
    let plain = InstanceSample::new(d, items, objective, None, meta)?;
    if !with_opt || n > MAX_ITEMS {
        return Ok(plain);
    }
    let opt = brute_force_opt(&plain.items, &plain.objective)
        .map_err(|e| GenError::InvalidParameter(e.to_string()))?;
    InstanceSample::new(
        d,
        plain.items,
        plain.objective,
        Some((opt.best_set, opt.best_value)),
        plain.meta,
    )
}

/// Random instance with its exact optimum attached whenever `n <= 30`.
pub fn gen_random(
    n: usize,
    d: usize,
    k: usize,
    epsilon: &Scalar,
    mode: ValueMode,
    seed: u64,
) -> Result<InstanceSample, GenError> {
    gen_random_with(n, d, k, epsilon, mode, seed, true)
}
