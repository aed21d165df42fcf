//! Monte Carlo sweeps over the instance families.

use std::collections::BTreeMap;
use std::io::Write;

use num_traits::{One, Zero};
use serde::Serialize;

use super::trial::{run_trial, OptPolicy, Ratio, TrialConfig, TrialReport};
use super::HarnessError;
use crate::generators::{
    gen_random, noslack, sample_noslack_distribution, sample_slack_distribution,
    sample_smallweight_distribution, InstanceSample, ValueMode,
};
use crate::scalar::{self, Scalar};

/// A seeded instance family with its parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distribution {
    SlackRandom {
        ell: usize,
        epsilon: Scalar,
    },
    Noslack {
        d: usize,
    },
    SmallWeight {
        ell: usize,
        eps_w: Scalar,
    },
    Random {
        n: usize,
        d: usize,
        k: usize,
        epsilon: Scalar,
        values: ValueMode,
    },
}

pub const DISTRIBUTIONS: [&str; 4] = ["slack-random", "noslack", "smallweight", "random"];

fn take<T: std::str::FromStr>(
    params: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, HarnessError> {
    match params.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse()
            .map_err(|_| HarnessError::Usage(format!("cannot read parameter {key}={raw}"))),
    }
}

fn take_scalar(
    params: &BTreeMap<String, String>,
    key: &str,
    default: Scalar,
) -> Result<Scalar, HarnessError> {
    match params.get(key) {
        None => Ok(default),
        Some(raw) => scalar::parse_scalar(raw)
            .map_err(|e| HarnessError::Usage(format!("cannot read parameter {key}={raw}: {e}"))),
    }
}

impl Distribution {
    /// Builds a family from its name and `key=value` parameters; missing
    /// parameters take small defaults.
    pub fn from_params(
        name: &str,
        params: &BTreeMap<String, String>,
    ) -> Result<Self, HarnessError> {
        let allowed: &[&str] = match name {
            "slack-random" => &["ell", "epsilon"],
            "noslack" => &["d"],
            "smallweight" => &["ell", "eps_w"],
            "random" => &["n", "d", "k", "epsilon", "values"],
            other => {
                return Err(HarnessError::Usage(format!(
                    "unknown distribution `{other}` (expected one of {})",
                    DISTRIBUTIONS.join(", ")
                )))
            }
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(HarnessError::Usage(format!(
                "{name} takes parameters {}, not `{bad}`",
                allowed.join(", ")
            )));
        }
        let quarter = scalar::ratio(1, 4);
        Ok(match name {
            "slack-random" => Distribution::SlackRandom {
                ell: take(params, "ell", 4)?,
                epsilon: take_scalar(params, "epsilon", quarter)?,
            },
            "noslack" => Distribution::Noslack {
                d: take(params, "d", 8)?,
            },
            "smallweight" => Distribution::SmallWeight {
                ell: take(params, "ell", 3)?,
                eps_w: take_scalar(params, "eps_w", quarter)?,
            },
            _ => Distribution::Random {
                n: take(params, "n", 20)?,
                d: take(params, "d", 5)?,
                k: take(params, "k", 2)?,
                epsilon: take_scalar(params, "epsilon", quarter)?,
                values: take(params, "values", ValueMode::Uniform)?,
            },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::SlackRandom { .. } => "slack-random",
            Distribution::Noslack { .. } => "noslack",
            Distribution::SmallWeight { .. } => "smallweight",
            Distribution::Random { .. } => "random",
        }
    }

    pub fn params(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            out.insert(k.to_string(), v);
        };
        match self {
            Distribution::SlackRandom { ell, epsilon } => {
                put("ell", ell.to_string());
                put("epsilon", scalar::to_string(epsilon));
            }
            Distribution::Noslack { d } => put("d", d.to_string()),
            Distribution::SmallWeight { ell, eps_w } => {
                put("ell", ell.to_string());
                put("eps_w", scalar::to_string(eps_w));
            }
            Distribution::Random {
                n,
                d,
                k,
                epsilon,
                values,
            } => {
                put("n", n.to_string());
                put("d", d.to_string());
                put("k", k.to_string());
                put("epsilon", scalar::to_string(epsilon));
                put("values", values.to_string());
            }
        }
        out
    }

    pub fn sample(&self, seed: u64) -> Result<InstanceSample, HarnessError> {
        Ok(match self {
            Distribution::SlackRandom { ell, epsilon } => {
                sample_slack_distribution(*ell, epsilon.clone(), seed)?
            }
            Distribution::Noslack { d } => sample_noslack_distribution(*d, seed)?,
            Distribution::SmallWeight { ell, eps_w } => {
                sample_smallweight_distribution(*ell, eps_w.clone(), seed)?
            }
            Distribution::Random {
                n,
                d,
                k,
                epsilon,
                values,
            } => gen_random(*n, *d, *k, epsilon, *values, seed)?,
        })
    }

    /// The slack every sample guarantees; the default engine `epsilon`.
    pub fn slack(&self) -> Scalar {
        match self {
            Distribution::SlackRandom { epsilon, .. } | Distribution::Random { epsilon, .. } => {
                epsilon.clone()
            }
            Distribution::Noslack { d } => noslack::delta(*d),
            Distribution::SmallWeight { eps_w, .. } => Scalar::one() - eps_w,
        }
    }

    /// Upper bound on the expected value of any online algorithm on this
    /// family, when one is known.
    pub fn expected_value_bound(&self) -> Option<Scalar> {
        match self {
            Distribution::Noslack { d } => Some(noslack_bound(*d)),
            Distribution::SmallWeight { ell, eps_w } => Some(smallweight_bound(*ell, eps_w)),
            Distribution::SlackRandom { .. } => Some(scalar::int(6)),
            Distribution::Random { .. } => None,
        }
    }
}

/// `1 + sum_{t=1}^{d-1} 1/(d+1-t)`, which equals the harmonic number `H_d`.
pub fn noslack_bound(d: usize) -> Scalar {
    let tail: Scalar = (1..d).map(|t| scalar::ratio(1, (d + 1 - t) as i64)).sum();
    Scalar::one() + tail
}

/// `(1/eps_w) (1 + sum_{i=1}^{l-1} 1/(2l-i+1))`.
pub fn smallweight_bound(ell: usize, eps_w: &Scalar) -> Scalar {
    let tail: Scalar = (1..ell)
        .map(|i| scalar::ratio(1, (2 * ell - i + 1) as i64))
        .sum();
    (Scalar::one() + tail) / eps_w
}

/// One CSV line per trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub seed: Option<u64>,
    pub n_items: usize,
    pub k_observed: usize,
    pub f_s: String,
    pub opt: String,
    pub ratio: String,
    pub bound: String,
    pub bound_ok: String,
}

pub const CSV_HEADER: [&str; 8] = [
    "seed",
    "n_items",
    "k_observed",
    "f_S",
    "opt",
    "ratio",
    "bound",
    "bound_ok",
];

impl From<&TrialReport> for CsvRow {
    fn from(r: &TrialReport) -> Self {
        let opt_str = |x: &Option<Scalar>| x.as_ref().map(scalar::to_string).unwrap_or_default();
        Self {
            seed: r.meta.seed,
            n_items: r.n_items,
            k_observed: r.k_observed,
            f_s: scalar::to_string(&r.f_s),
            opt: opt_str(&r.opt_value),
            ratio: r
                .ratio
                .as_ref()
                .map(|x| decimal(x.approx()))
                .unwrap_or_default(),
            bound: r
                .bound
                .as_ref()
                .map(|b| decimal(scalar::to_f64(b)))
                .unwrap_or_default(),
            bound_ok: r.bound_ok.map(|b| b.to_string()).unwrap_or_default(),
        }
    }
}

fn decimal(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "inf".into()
    }
}

/// Writes the rows with the fixed header. `f_S` and `opt` are exact
/// (`p/q`), `ratio` and `bound` decimal.
pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.n_items.to_string(),
            r.k_observed.to_string(),
            r.f_s.clone(),
            r.opt.clone(),
            r.ratio.clone(),
            r.bound.clone(),
            r.bound_ok.clone(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub distribution: Distribution,
    pub trials: usize,
    pub seed0: u64,
    /// Engine slack; defaults to the family's guaranteed slack.
    pub epsilon: Option<Scalar>,
    pub audit: bool,
    /// Spread trials over threads (needs the `parallel` feature).
    pub parallel: bool,
}

impl SweepConfig {
    pub fn new(distribution: Distribution, trials: usize, seed0: u64) -> Self {
        Self {
            distribution,
            trials,
            seed0,
            epsilon: None,
            audit: true,
            parallel: true,
        }
    }
}

/// Exact mean and squared standard error of a list of values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimate {
    #[serde(with = "scalar::as_string")]
    pub mean: Scalar,
    /// `sample variance / n`, zero for a single sample.
    #[serde(with = "scalar::as_string")]
    pub stderr_sq: Scalar,
    pub mean_approx: f64,
    pub stderr: f64,
}

impl MeanEstimate {
    pub fn of(xs: &[Scalar]) -> Self {
        let n = xs.len();
        let mean = if n == 0 {
            Scalar::zero()
        } else {
            xs.iter().sum::<Scalar>() / scalar::int(n as i64)
        };
        let stderr_sq = if n < 2 {
            Scalar::zero()
        } else {
            let ss: Scalar = xs.iter().map(|x| (x - &mean) * (x - &mean)).sum();
            ss / scalar::int((n * (n - 1)) as i64)
        };
        Self {
            mean_approx: scalar::to_f64(&mean),
            stderr: scalar::to_f64(&stderr_sq).sqrt(),
            mean,
            stderr_sq,
        }
    }

    /// `mean <= limit + z * stderr`, decided exactly.
    pub fn at_most(&self, limit: &Scalar, z: u32) -> bool {
        if self.mean <= *limit {
            return true;
        }
        let gap = &self.mean - limit;
        &gap * &gap <= scalar::int((z * z) as i64) * &self.stderr_sq
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub distribution: String,
    pub params: BTreeMap<String, String>,
    pub trials: usize,
    pub seed_first: u64,
    pub seed_last: u64,
    #[serde(with = "scalar::as_string")]
    pub epsilon: Scalar,
    /// Estimate of the expected objective of the engine.
    pub f_s: MeanEstimate,
    pub kept: MeanEstimate,
    /// Mean optimum; constant across samples for the hard families.
    #[serde(serialize_with = "scalar::option_as_string::serialize")]
    pub opt_value: Option<Scalar>,
    /// `mean opt / mean f(S)`.
    pub empirical_ratio: Option<Ratio>,
    pub empirical_ratio_approx: Option<f64>,
    /// Bound on the expected value of any online algorithm.
    #[serde(serialize_with = "scalar::option_as_string::serialize")]
    pub expected_value_bound: Option<Scalar>,
    pub expected_value_bound_approx: Option<f64>,
    /// `mean f(S) <= bound + 3 stderr`.
    pub within_expected_value_bound: Option<bool>,
    /// Trials whose per-run competitive bound check failed.
    pub bound_failures: usize,
    /// Trials with at least one failed invariant check.
    pub audit_failures: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub trials: Vec<TrialReport>,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.trials.iter().map(CsvRow::from).collect()
    }
}

fn one_trial(cfg: &SweepConfig, epsilon: &Scalar, seed: u64) -> Result<TrialReport, HarnessError> {
    let sample = cfg.distribution.sample(seed)?;
    let trial = TrialConfig {
        epsilon: Some(epsilon.clone()),
        audit: cfg.audit,
        opt: OptPolicy::PreferWitness,
    };
    run_trial(&sample, &trial)
}

/// Runs `trials` samples with seeds `seed0, seed0 + 1, ...`. The aggregate
/// does not depend on scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome, HarnessError> {
    if cfg.trials == 0 {
        return Err(HarnessError::Usage("trials must be at least 1".into()));
    }
    let epsilon = cfg
        .epsilon
        .clone()
        .unwrap_or_else(|| cfg.distribution.slack());
    let seeds: Vec<u64> = (0..cfg.trials as u64)
        .map(|i| cfg.seed0.wrapping_add(i))
        .collect();

    #[cfg(feature = "parallel")]
    let trials: Result<Vec<TrialReport>, HarnessError> = if cfg.parallel {
        use rayon::prelude::*;
        seeds
            .par_iter()
            .map(|&s| one_trial(cfg, &epsilon, s))
            .collect()
    } else {
        seeds.iter().map(|&s| one_trial(cfg, &epsilon, s)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trials: Result<Vec<TrialReport>, HarnessError> =
        seeds.iter().map(|&s| one_trial(cfg, &epsilon, s)).collect();
    let trials = trials?;

    let values: Vec<Scalar> = trials.iter().map(|t| t.f_s.clone()).collect();
    let kept: Vec<Scalar> = trials
        .iter()
        .map(|t| scalar::int(t.final_set.len() as i64))
        .collect();
    let f_s = MeanEstimate::of(&values);
    let opts: Option<Vec<Scalar>> = trials.iter().map(|t| t.opt_value.clone()).collect();
    let opt_value = opts.map(|o| MeanEstimate::of(&o).mean);
    let empirical_ratio = opt_value.as_ref().map(|o| Ratio::of(o, &f_s.mean));
    let bound = cfg.distribution.expected_value_bound();
    let report = SweepReport {
        schema_version: super::trial::SCHEMA_VERSION,
        distribution: cfg.distribution.name().to_string(),
        params: cfg.distribution.params(),
        trials: trials.len(),
        seed_first: seeds[0],
        seed_last: *seeds.last().expect("trials >= 1"),
        epsilon,
        within_expected_value_bound: bound.as_ref().map(|b| f_s.at_most(b, 3)),
        expected_value_bound_approx: bound.as_ref().map(scalar::to_f64),
        expected_value_bound: bound,
        kept: MeanEstimate::of(&kept),
        f_s,
        empirical_ratio_approx: empirical_ratio.as_ref().map(Ratio::approx),
        empirical_ratio,
        opt_value,
        bound_failures: trials.iter().filter(|t| t.bound_ok == Some(false)).count(),
        audit_failures: trials.iter().filter(|t| !t.invariants_hold()).count(),
    };
    Ok(SweepOutcome { report, trials })
}
