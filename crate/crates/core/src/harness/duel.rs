//! Online algorithms played against adaptive adversaries.

use std::collections::BTreeMap;

use super::trial::{finish_report, EngineAlgorithm, OnlineAlgorithm, OptSource, TrialReport};
use super::HarnessError;
use crate::generators::{AdaptiveAdversary, SlackDeterministic, SlackSubsets};
use crate::model::make_params;
use crate::offline::verify_claimed_opt;
use crate::scalar::{self, Scalar};

pub const ADVERSARIES: [&str; 2] = ["slack-deterministic", "slack-subsets"];

/// Builds an adversary from its name and `key=value` parameters (`k`).
pub fn make_adversary(
    name: &str,
    params: &BTreeMap<String, String>,
    epsilon: &Scalar,
) -> Result<Box<dyn AdaptiveAdversary>, HarnessError> {
    if let Some(bad) = params.keys().find(|k| k.as_str() != "k") {
        return Err(HarnessError::Usage(format!(
            "adversaries take only `k`, not `{bad}`"
        )));
    }
    let k = match params.get("k") {
        None => 4,
        Some(raw) => raw
            .parse()
            .map_err(|_| HarnessError::Usage(format!("cannot read parameter k={raw}")))?,
    };
    Ok(match name {
        "slack-deterministic" => Box::new(SlackDeterministic::new(k, epsilon.clone())?),
        "slack-subsets" => Box::new(SlackSubsets::new(k, epsilon.clone())?),
        other => {
            return Err(HarnessError::Usage(format!(
                "unknown adversary `{other}` (expected one of {})",
                ADVERSARIES.join(", ")
            )))
        }
    })
}

/// Alternates `next_item(kept)` and `observe` until the adversary stops.
/// The optimum is the adversary's certified witness.
pub fn run_duel<A>(
    adversary: &mut dyn AdaptiveAdversary,
    alg: &mut A,
) -> Result<TrialReport, HarnessError>
where
    A: OnlineAlgorithm + ?Sized,
{
    let mut spec = adversary.objective();
    let mut steps = Vec::new();
    while let Some(item) = adversary.next_item(&alg.kept()) {
        spec.absorb(&item)?;
        steps.push(alg.observe(&item, &spec)?);
    }
    let (witness, value) = adversary.witness();
    if !verify_claimed_opt(adversary.emitted(), &spec, &witness, &value) {
        return Err(HarnessError::Internal(format!(
            "{} certified an infeasible or mis-valued witness",
            adversary.meta().generator
        )));
    }
    finish_report(
        alg,
        adversary.meta(),
        adversary.dims(),
        steps,
        &spec,
        Some((value, OptSource::Witness)),
    )
}

/// The engine (with slack `epsilon`) against a named adversary built with
/// the same slack.
pub fn duel_engine(
    name: &str,
    params: &BTreeMap<String, String>,
    epsilon: &Scalar,
    audit: bool,
) -> Result<TrialReport, HarnessError> {
    let mut adversary = make_adversary(name, params, epsilon)?;
    let mut alg = EngineAlgorithm::new(make_params(epsilon.clone())?, adversary.dims(), audit);
    run_duel(adversary.as_mut(), &mut alg)
}

/// `sqrt(k / (4 eps))` rounded down to a rational within `10^-12`: the
/// guaranteed ratio against the single-heavy-item adversary.
pub fn slack_deterministic_target(k: usize, epsilon: &Scalar) -> Scalar {
    let x = scalar::int(k as i64) / (scalar::int(4) * epsilon);
    let tol = scalar::sqrt_tolerance();
    scalar::exact_sqrt(&x).unwrap_or_else(|| scalar::sqrt_upper(&x, &tol) - tol)
}
