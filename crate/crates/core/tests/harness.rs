mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use num_traits::One;
use proptest::prelude::*;
use vpack::generators::noslack::NoslackInstance;
use vpack::generators::{gen_random, ValueMode};
use vpack::harness::trial::{GreedyBaseline, Ratio, SCHEMA_VERSION};
use vpack::harness::{
    duel_engine, instance_to_string, make_adversary, read_instance_str, rescale_instance, run_duel,
    run_sweep, run_trial, CsvRow, Distribution, SweepConfig, TrialConfig,
};
use vpack::model::ItemId;
use vpack::scalar::{int, ratio, Scalar};

use common::random_instance;

const AB: &str = r#"{"dims":1,"objective":{"type":"modular"}}
{"id":0,"coords":[[0,1,4]],"value":[1,1]}
{"id":1,"coords":[[0,1,4]],"value":[10,1]}
"#;

/// Compares against `tests/golden/<name>`; set `UPDATE_GOLDEN=1` to rewrite.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden file {name} is stale");
}

#[test]
fn replacement_example_from_a_file() {
    let sample = read_instance_str(AB).unwrap();
    let report = run_trial(&sample, &TrialConfig::new(None)).unwrap();
    assert_eq!(report.final_set, BTreeSet::from([ItemId(1)]));
    assert_eq!(report.f_s, int(10));
    // both items fit offline
    assert_eq!(report.opt_value, Some(int(11)));
    assert_eq!(report.ratio, Some(Ratio::Finite(ratio(11, 10))));
    assert_eq!(report.audit_ok, Some(true));
    let json = serde_json::to_string_pretty(&report).unwrap() + "\n";
    golden("replacement_report.json", &json);
}

#[test]
fn empty_instance_has_ratio_one() {
    let sample = read_instance_str(r#"{"dims":2,"objective":{"type":"cardinality"}}"#).unwrap();
    let report = run_trial(&sample, &TrialConfig::new(None)).unwrap();
    assert!(report.final_set.is_empty());
    assert_eq!(report.opt_value, Some(int(0)));
    assert_eq!(report.ratio, Some(Ratio::Finite(Scalar::one())));
}

#[test]
fn phase_instance_report() {
    let inst = NoslackInstance::sample(6, 5).unwrap();
    let report = run_trial(&inst.sample, &TrialConfig::new(None)).unwrap();
    assert_eq!(report.schema_version, SCHEMA_VERSION);
    assert_eq!(report.opt_value, Some(int(6)));
    assert!(report.ratio.is_some());
    assert!(report.invariants_hold());
    assert_eq!(report.bound_ok, Some(true));
}

#[test]
fn generated_instance_is_stable() {
    let s = gen_random(6, 3, 2, &ratio(1, 4), ValueMode::Uniform, 7).unwrap();
    golden("random_n6_seed7.jsonl", &instance_to_string(&s));
    let cover = gen_random(5, 4, 2, &ratio(1, 2), ValueMode::Coverage, 3).unwrap();
    golden("coverage_n5_seed3.jsonl", &instance_to_string(&cover));
}

#[test]
fn single_trial_sweep_matches_a_run() {
    let dist = Distribution::Noslack { d: 5 };
    let out = run_sweep(&SweepConfig::new(dist.clone(), 1, 17)).unwrap();
    let sample = dist.sample(17).unwrap();
    let run = run_trial(&sample, &TrialConfig::new(Some(dist.slack()))).unwrap();
    assert_eq!(out.rows(), vec![CsvRow::from(&run)]);
    assert_eq!(out.report.seed_first, 17);
    assert_eq!(out.report.seed_last, 17);
}

#[test]
fn sweep_summary_carries_the_bound() {
    let params = BTreeMap::from([("d".to_string(), "8".to_string())]);
    let dist = Distribution::from_params("noslack", &params).unwrap();
    let out = run_sweep(&SweepConfig::new(dist, 20, 0)).unwrap();
    // 1 + 1/8 + ... + 1/2
    let bound = (2..=8).fold(Scalar::one(), |acc, t| acc + ratio(1, t));
    assert_eq!(out.report.expected_value_bound, Some(bound));
    assert_eq!(out.report.trials, 20);
    assert_eq!(out.trials.len(), 20);
    assert!(Distribution::from_params("nope", &BTreeMap::new()).is_err());
}

#[test]
fn duels() {
    let k4 = BTreeMap::from([("k".to_string(), "4".to_string())]);
    let report = duel_engine("slack-deterministic", &k4, &ratio(1, 4), true).unwrap();
    assert!(report.ratio.unwrap().approx() >= 2.0 - 1e-9);

    let k3 = BTreeMap::from([("k".to_string(), "3".to_string())]);
    let report = duel_engine("slack-subsets", &k3, &ratio(1, 4), true).unwrap();
    assert!(report.n_items <= 6);
    assert!(report.final_set.len() <= 1);

    let mut adv = make_adversary("slack-subsets", &k3, &ratio(1, 4)).unwrap();
    let report = run_duel(adv.as_mut(), &mut GreedyBaseline::new()).unwrap();
    assert!(report.final_set.len() <= 1);
    assert!(report.opt_value.unwrap() >= int(3));
}

#[test]
fn rescaling_the_phase_instance_creates_slack() {
    let inst = NoslackInstance::sample(6, 2).unwrap();
    let scaled = rescale_instance(&inst.sample, &ratio(4, 5)).unwrap();
    assert!(scaled
        .items
        .iter()
        .all(|it| it.weights.max_weight() <= ratio(4, 5)));
    let report = run_trial(&scaled, &TrialConfig::new(Some(ratio(1, 5)))).unwrap();
    assert_eq!(report.opt_value, Some(int(6)));
    assert!(report.invariants_hold());
    assert_eq!(
        rescale_instance(&inst.sample, &Scalar::one()).unwrap(),
        inst.sample
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_files_round_trip(seed in any::<u64>()) {
        let s = random_instance(seed, 15, 6);
        let text = instance_to_string(&s);
        let back = read_instance_str(&text).unwrap();
        prop_assert_eq!(&back.items, &s.items);
        prop_assert_eq!(back.dims, s.dims);
        prop_assert_eq!(instance_to_string(&back), text);
    }
}
