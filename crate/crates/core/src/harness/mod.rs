//! Experiment harness: instance files, single trials, sweeps over the
//! instance families, duels against adaptive adversaries, and reports.

pub mod duel;
pub mod io;
pub mod sweep;
pub mod trial;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::engine::EngineError;
use crate::generators::{GenError, InstanceSample};
use crate::model::{CoreError, Item, ItemId};
use crate::objective::ObjectiveError;
use crate::offline::OfflineError;
use crate::scalar::{self, Scalar};

pub use duel::{duel_engine, make_adversary, run_duel};
pub use io::{instance_to_string, read_instance, read_instance_str, write_instance, ParseError};
pub use sweep::{
    run_sweep, write_csv, CsvRow, Distribution, MeanEstimate, SweepConfig, SweepOutcome,
    SweepReport,
};
pub use trial::{
    run_trial, EngineAlgorithm, GreedyBaseline, OnlineAlgorithm, OptPolicy, OptSource, Ratio,
    StepRecord, TrialConfig, TrialReport,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Offline(#[from] OfflineError),
    #[error("the instance has a weight equal to 1; pass an explicit epsilon or rescale it first")]
    NoSlack,
    #[error("item {item} has a weight above 1 - epsilon = 1 - {epsilon}")]
    SlackViolated { item: ItemId, epsilon: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

/// Multiplies every weight by `factor` in `(0, 1]`. Scaling by
/// `1/(1+eps)` turns an instance without slack into one with slack
/// `eps/(1+eps)`. Witnesses stay feasible and keep their value.
pub fn rescale_instance(
    sample: &InstanceSample,
    factor: &Scalar,
) -> Result<InstanceSample, HarnessError> {
    if factor <= &Scalar::zero() || factor > &Scalar::one() {
        return Err(HarnessError::Usage(format!(
            "rescale factor must lie in (0, 1], got {}",
            scalar::to_string(factor)
        )));
    }
    let items = sample
        .items
        .iter()
        .map(|it| Item {
            id: it.id,
            weights: it.weights.scaled(factor),
            payload: it.payload.clone(),
        })
        .collect();
    let mut meta = sample.meta.clone();
    if !factor.is_one() {
        let prior = meta
            .params
            .get("rescaled")
            .and_then(|p| scalar::parse_scalar(p).ok());
        let total = prior.map_or_else(|| factor.clone(), |p| p * factor);
        meta.params
            .insert("rescaled".into(), scalar::to_string(&total));
    }
    let witness = sample.opt_witness.clone().zip(sample.opt_value.clone());
    Ok(InstanceSample::new(
        sample.dims,
        items,
        sample.objective.clone(),
        witness,
        meta,
    )?)
}
