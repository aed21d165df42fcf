//! Single runs of an online algorithm and their reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use super::HarnessError;
use crate::engine::{EngineError, EventKind, InvariantAudit, OnlineEngine, PhaseTrace};
use crate::generators::{InstanceSample, SampleMeta};
use crate::model::{make_params, AlgorithmParams, Item, ItemId};
use crate::objective::ObjectiveSpec;
use crate::offline::{brute_force_opt, MAX_ITEMS};
use crate::scalar::{self, Scalar};

/// Bumped whenever a report field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// What an online algorithm did with one arrival.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub item: ItemId,
    pub accepted: bool,
    pub disposed: Vec<ItemId>,
    #[serde(
        serialize_with = "scalar::option_as_string::serialize",
        skip_serializing_if = "Option::is_none"
    )]
    pub theta_final: Option<Scalar>,
    #[serde(
        serialize_with = "scalar::option_as_string::serialize",
        skip_serializing_if = "Option::is_none"
    )]
    pub value_u: Option<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<InvariantAudit>,
}

/// Counts of phase events over a whole run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EventSummary {
    pub events: usize,
    pub dim_saturated: usize,
    pub dim_unsaturated: usize,
    pub fraction_hit_zero: usize,
    pub argmin_changed: usize,
    pub stop_condition_met: usize,
    pub theta_cap_reached: usize,
    pub segments: usize,
    pub coupled_groups: usize,
    pub fallbacks: usize,
}

impl EventSummary {
    pub fn absorb(&mut self, trace: &PhaseTrace) {
        self.events += trace.events.len();
        for e in &trace.events {
            match e.kind {
                EventKind::DimSaturated { .. } => self.dim_saturated += 1,
                EventKind::DimUnsaturated { .. } => self.dim_unsaturated += 1,
                EventKind::ItemFractionHitZero { .. } => self.fraction_hit_zero += 1,
                EventKind::ArgminChanged { .. } => self.argmin_changed += 1,
                EventKind::StopConditionMet => self.stop_condition_met += 1,
                EventKind::ThetaCapReached => self.theta_cap_reached += 1,
            }
        }
        self.segments += trace.segments.len();
        self.coupled_groups += trace.coupled;
        self.fallbacks += trace.fallbacks;
    }
}

/// An online algorithm driven one arrival at a time.
pub trait OnlineAlgorithm {
    fn name(&self) -> &'static str;

    /// `spec` already knows `item`.
    fn observe(&mut self, item: &Item, spec: &ObjectiveSpec) -> Result<StepRecord, EngineError>;

    /// The committed solution.
    fn kept(&self) -> BTreeSet<ItemId>;

    /// Largest sparsity seen so far.
    fn k_observed(&self) -> usize;

    fn params(&self) -> Option<&AlgorithmParams> {
        None
    }

    fn events(&self) -> Option<&EventSummary> {
        None
    }
}

/// The fractional engine behind [`OnlineAlgorithm`].
#[derive(Debug, Clone)]
pub struct EngineAlgorithm {
    engine: OnlineEngine,
    summary: EventSummary,
}

impl EngineAlgorithm {
    pub fn new(params: AlgorithmParams, dims: usize, audit: bool) -> Self {
        Self {
            engine: OnlineEngine::new(params, dims).with_audit(audit),
            summary: EventSummary::default(),
        }
    }

    pub fn engine(&self) -> &OnlineEngine {
        &self.engine
    }
}

impl OnlineAlgorithm for EngineAlgorithm {
    fn name(&self) -> &'static str {
        "engine"
    }

    fn observe(&mut self, item: &Item, spec: &ObjectiveSpec) -> Result<StepRecord, EngineError> {
        let out = self.engine.observe(item, spec)?;
        self.summary.absorb(&out.trace);
        Ok(StepRecord {
            item: out.item,
            accepted: out.accepted,
            disposed: out.disposed,
            theta_final: Some(out.theta_final),
            value_u: Some(out.value_u),
            audit: out.audit,
        })
    }

    fn kept(&self) -> BTreeSet<ItemId> {
        self.engine.committed()
    }

    fn k_observed(&self) -> usize {
        self.engine.k_observed()
    }

    fn params(&self) -> Option<&AlgorithmParams> {
        Some(self.engine.params())
    }

    fn events(&self) -> Option<&EventSummary> {
        Some(&self.summary)
    }
}

/// Keeps every item that still fits; never disposes.
#[derive(Debug, Clone, Default)]
pub struct GreedyBaseline {
    load: BTreeMap<usize, Scalar>,
    kept: BTreeSet<ItemId>,
    k: usize,
}

impl GreedyBaseline {
    pub fn new() -> Self {
        Self::default()
    }
}

impl OnlineAlgorithm for GreedyBaseline {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn observe(&mut self, item: &Item, _spec: &ObjectiveSpec) -> Result<StepRecord, EngineError> {
        self.k = self.k.max(item.weights.sparsity());
        let fits = item.weights.iter().all(|(dim, w)| {
            self.load.get(&dim).map_or_else(Scalar::zero, Clone::clone) + w <= Scalar::one()
        });
        if fits {
            for (dim, w) in item.weights.iter() {
                *self.load.entry(dim).or_insert_with(Scalar::zero) += w;
            }
            self.kept.insert(item.id);
        }
        Ok(StepRecord {
            item: item.id,
            accepted: fits,
            disposed: Vec::new(),
            theta_final: None,
            value_u: None,
            audit: None,
        })
    }

    fn kept(&self) -> BTreeSet<ItemId> {
        self.kept.clone()
    }

    fn k_observed(&self) -> usize {
        self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptSource {
    BruteForce,
    Witness,
}

/// How a trial obtains the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptPolicy {
    /// Exact search up to the solver's limit, the sample's witness beyond.
    #[default]
    Auto,
    /// The witness when there is one, exact search otherwise.
    PreferWitness,
}

/// `opt / f(S)`, infinite when nothing was kept but something could be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ratio {
    Finite(Scalar),
    Infinite,
}

impl Ratio {
    /// Equal to 1 when both sides are zero.
    pub fn of(opt: &Scalar, f_s: &Scalar) -> Self {
        if f_s.is_zero() {
            if opt.is_zero() {
                Ratio::Finite(Scalar::one())
            } else {
                Ratio::Infinite
            }
        } else {
            Ratio::Finite(opt / f_s)
        }
    }

    pub fn approx(&self) -> f64 {
        match self {
            Ratio::Finite(r) => scalar::to_f64(r),
            Ratio::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => f.write_str(&scalar::to_string(r)),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamsReport {
    #[serde(with = "scalar::as_string")]
    pub epsilon: Scalar,
    #[serde(with = "scalar::as_string")]
    pub alpha: Scalar,
    #[serde(with = "scalar::as_string")]
    pub beta: Scalar,
    #[serde(with = "scalar::as_string")]
    pub gamma: Scalar,
    pub alpha_exact: bool,
}

impl From<&AlgorithmParams> for ParamsReport {
    fn from(p: &AlgorithmParams) -> Self {
        Self {
            epsilon: p.epsilon.clone(),
            alpha: p.alpha.clone(),
            beta: p.beta.clone(),
            gamma: p.gamma.clone(),
            alpha_exact: p.alpha_exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub schema_version: u32,
    pub algorithm: String,
    pub meta: SampleMeta,
    pub dims: usize,
    pub n_items: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsReport>,
    pub steps: Vec<StepRecord>,
    pub final_set: BTreeSet<ItemId>,
    #[serde(with = "scalar::as_string")]
    pub f_s: Scalar,
    #[serde(serialize_with = "scalar::option_as_string::serialize")]
    pub opt_value: Option<Scalar>,
    pub opt_source: Option<OptSource>,
    pub ratio: Option<Ratio>,
    pub ratio_approx: Option<f64>,
    pub k_observed: usize,
    /// The competitive constant `c(k)` with `f(OPT) <= c(k) f(S)`.
    #[serde(serialize_with = "scalar::option_as_string::serialize")]
    pub bound: Option<Scalar>,
    pub bound_ok: Option<bool>,
    /// `None` when auditing was off.
    pub audit_ok: Option<bool>,
    /// Failed invariant checks as `"<item>: <check>: <detail>"`.
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<EventSummary>,
}

impl TrialReport {
    /// True when no audited invariant failed.
    pub fn invariants_hold(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        let opt = self
            .opt_value
            .as_ref()
            .map_or("?".into(), scalar::to_string);
        let ratio = self.ratio.as_ref().map_or("?".into(), |r| r.to_string());
        let audit = match self.audit_ok {
            Some(true) => "audit ok".to_string(),
            Some(false) => format!("audit FAILED ({} violations)", self.violations.len()),
            None => "audit off".to_string(),
        };
        format!(
            "{} on {}: n={} kept={} f(S)={} opt={} ratio={} k={} bound_ok={} {}",
            self.algorithm,
            if self.meta.generator.is_empty() {
                "instance"
            } else {
                &self.meta.generator
            },
            self.n_items,
            self.final_set.len(),
            scalar::to_string(&self.f_s),
            opt,
            ratio,
            self.k_observed,
            self.bound_ok.map_or("?".into(), |b| b.to_string()),
            audit
        )
    }
}

/// Feeds `items` in order.
pub fn drive<'a, A, I>(
    alg: &mut A,
    items: I,
    spec: &ObjectiveSpec,
) -> Result<Vec<StepRecord>, EngineError>
where
    A: OnlineAlgorithm + ?Sized,
    I: IntoIterator<Item = &'a Item>,
{
    items.into_iter().map(|it| alg.observe(it, spec)).collect()
}

/// Assembles the report once the arrivals are over.
pub fn finish_report<A: OnlineAlgorithm + ?Sized>(
    alg: &A,
    meta: SampleMeta,
    dims: usize,
    steps: Vec<StepRecord>,
    spec: &ObjectiveSpec,
    opt: Option<(Scalar, OptSource)>,
) -> Result<TrialReport, HarnessError> {
    let final_set = alg.kept();
    let f_s = spec.evaluate(&final_set)?;
    let k = alg.k_observed();
    let bound = alg.params().map(|p| p.competitive_constant(k));
    let (opt_value, opt_source) = match opt {
        Some((v, s)) => (Some(v), Some(s)),
        None => (None, None),
    };
    let ratio = opt_value.as_ref().map(|o| Ratio::of(o, &f_s));
    let bound_ok = match (&opt_value, &bound) {
        (Some(o), Some(c)) => Some(o <= &(c * &f_s)),
        _ => None,
    };

    let mut audited = false;
    let mut violations = Vec::new();
    for step in &steps {
        if let Some(audit) = &step.audit {
            audited = true;
            for c in audit.failures() {
                violations.push(format!(
                    "{}: {}: {}",
                    step.item,
                    c.name,
                    c.detail.as_deref().unwrap_or("violated")
                ));
            }
        }
    }
    Ok(TrialReport {
        schema_version: SCHEMA_VERSION,
        algorithm: alg.name().to_string(),
        meta,
        dims,
        n_items: steps.len(),
        params: alg.params().map(ParamsReport::from),
        steps,
        final_set,
        f_s,
        ratio_approx: ratio.as_ref().map(Ratio::approx),
        ratio,
        opt_value,
        opt_source,
        k_observed: k,
        bound,
        bound_ok,
        audit_ok: audited.then_some(violations.is_empty()),
        violations,
        events: alg.events().cloned(),
    })
}

/// `1 - max weight`: the largest slack the instance guarantees. Empty or
/// weightless instances get `1/2`.
pub fn instance_slack(sample: &InstanceSample) -> Scalar {
    sample
        .items
        .iter()
        .map(|it| it.weights.max_weight())
        .max()
        .filter(|w| !w.is_zero())
        .map_or_else(|| scalar::ratio(1, 2), |w| Scalar::one() - w)
}

#[derive(Debug, Clone, Default)]
pub struct TrialConfig {
    /// Engine slack; defaults to [`instance_slack`].
    pub epsilon: Option<Scalar>,
    pub audit: bool,
    pub opt: OptPolicy,
}

impl TrialConfig {
    pub fn new(epsilon: Option<Scalar>) -> Self {
        Self {
            epsilon,
            audit: true,
            opt: OptPolicy::Auto,
        }
    }
}

/// The optimum of a finite sample according to `policy`.
pub fn sample_opt(
    sample: &InstanceSample,
    policy: OptPolicy,
) -> Result<Option<(Scalar, OptSource)>, HarnessError> {
    let witness = sample.opt_value.clone().map(|v| (v, OptSource::Witness));
    let exact = || -> Result<_, HarnessError> {
        let r = brute_force_opt(&sample.items, &sample.objective)?;
        Ok(Some((r.best_value, OptSource::BruteForce)))
    };
    match policy {
        OptPolicy::PreferWitness if witness.is_some() => Ok(witness),
        _ if sample.len() <= MAX_ITEMS => exact(),
        _ => Ok(witness),
    }
}

/// Runs the engine over a sample in arrival order.
pub fn run_trial(sample: &InstanceSample, cfg: &TrialConfig) -> Result<TrialReport, HarnessError> {
    let epsilon = match &cfg.epsilon {
        Some(e) => e.clone(),
        None => {
            let slack = instance_slack(sample);
            if slack.is_zero() {
                return Err(HarnessError::NoSlack);
            }
            slack
        }
    };
    let params = make_params(epsilon)?;
    let cap = Scalar::one() - &params.epsilon;
    if let Some(it) = sample.items.iter().find(|it| it.weights.max_weight() > cap) {
        return Err(HarnessError::SlackViolated {
            item: it.id,
            epsilon: scalar::to_string(&params.epsilon),
        });
    }
    let mut alg = EngineAlgorithm::new(params, sample.dims, cfg.audit);
    let steps = drive(&mut alg, &sample.items, &sample.objective)?;
    let opt = sample_opt(sample, cfg.opt)?;
    finish_report(
        &alg,
        sample.meta.clone(),
        sample.dims,
        steps,
        &sample.objective,
        opt,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::io::read_instance_str;
    use crate::scalar::{int, ratio};

    const AB: &str = r#"{"dims":1,"objective":{"type":"modular"}}
{"id":0,"coords":[[0,1,4]],"value":[1,1]}
{"id":1,"coords":[[0,1,4]],"value":[10,1]}
"#;

    #[test]
    fn ratio_conventions() {
        assert_eq!(Ratio::of(&int(0), &int(0)), Ratio::Finite(int(1)));
        assert_eq!(Ratio::of(&int(3), &int(0)), Ratio::Infinite);
        assert_eq!(Ratio::of(&int(3), &int(2)).to_string(), "3/2");
        assert_eq!(serde_json::to_string(&Ratio::Infinite).unwrap(), "\"inf\"");
    }

    #[test]
    fn empty_instance_has_ratio_one() {
        let sample =
            read_instance_str("{\"dims\":2,\"objective\":{\"type\":\"cardinality\"}}\n").unwrap();
        let r = run_trial(&sample, &TrialConfig::new(None)).unwrap();
        assert_eq!(r.f_s, int(0));
        assert_eq!(r.opt_value, Some(int(0)));
        assert_eq!(r.ratio, Some(Ratio::Finite(int(1))));
        assert_eq!(r.bound_ok, Some(true));
    }

    #[test]
    fn ab_example_ends_with_b() {
        let sample = read_instance_str(AB).unwrap();
        let r = run_trial(&sample, &TrialConfig::new(None)).unwrap();
        assert_eq!(r.final_set, [ItemId(1)].into());
        assert_eq!(r.f_s, int(10));
        assert_eq!(r.opt_source, Some(OptSource::BruteForce));
        assert_eq!(r.params.as_ref().unwrap().epsilon, ratio(3, 4));
        assert_eq!(r.audit_ok, Some(true));
        assert!(r.steps[1].accepted);
        assert_eq!(r.steps[1].disposed, vec![ItemId(0)]);
    }

    #[test]
    fn slack_is_enforced() {
        let sample = read_instance_str(AB).unwrap();
        let err = run_trial(&sample, &TrialConfig::new(Some(ratio(7, 8)))).unwrap_err();
        assert!(matches!(err, HarnessError::SlackViolated { .. }));
        let full = read_instance_str(
            "{\"dims\":1,\"objective\":{\"type\":\"cardinality\"}}\n{\"id\":0,\"coords\":[[0,1,1]]}\n",
        )
        .unwrap();
        assert!(matches!(
            run_trial(&full, &TrialConfig::new(None)),
            Err(HarnessError::NoSlack)
        ));
    }

    #[test]
    fn greedy_keeps_what_fits() {
        let sample = read_instance_str(AB).unwrap();
        let mut g = GreedyBaseline::new();
        let steps = drive(&mut g, &sample.items, &sample.objective).unwrap();
        assert!(steps.iter().all(|s| s.accepted));
        assert_eq!(g.kept().len(), 2);
        let r =
            finish_report(&g, SampleMeta::default(), 1, steps, &sample.objective, None).unwrap();
        assert_eq!(r.audit_ok, None);
        assert_eq!(r.bound, None);
    }
}
