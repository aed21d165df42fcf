//! Browser demo: thin wasm-bindgen wrappers returning JSON strings.
//!
//! The plain functions (`*_json`) hold the logic so they can be tested
//! natively; the exported ones only convert errors for JavaScript.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::json;
use vpack::engine::{observe_item, FractionalState, PhaseTrace};
use vpack::generators::NoslackInstance;
use vpack::harness::{self, read_instance_str, Ratio, TrialConfig};
use vpack::model::{make_params, ItemId};
use vpack::scalar::{self, Scalar};
use wasm_bindgen::prelude::*;

/// The two-item replacement example: a cheap item, then a ten times more
/// valuable one on the same dimension.
pub const EXAMPLE_INSTANCE: &str = r#"{"dims":1,"objective":{"type":"modular"}}
{"id":0,"coords":[[0,1,4]],"value":[1,1]}
{"id":1,"coords":[[0,1,4]],"value":[10,1]}
"#;

fn s(x: &Scalar) -> String {
    scalar::to_string(x)
}

fn approx(x: &Scalar) -> f64 {
    scalar::to_f64(x)
}

/// Thresholds and competitive constant for slack `epsilon` and sparsity `k`.
pub fn params_json(epsilon: &str, k: u32) -> Result<String, String> {
    let eps = scalar::parse_scalar(epsilon).map_err(|e| e.to_string())?;
    let p = make_params(eps).map_err(|e| e.to_string())?;
    let c = p.competitive_constant(k as usize);
    Ok(json!({
        "epsilon": s(&p.epsilon),
        "alpha": s(&p.alpha),
        "alpha_approx": approx(&p.alpha),
        "alpha_exact": p.alpha_exact,
        "beta": s(&p.beta),
        "gamma": s(&p.gamma),
        "gamma_approx": approx(&p.gamma),
        "k": k,
        "bound_approx": approx(&c),
    })
    .to_string())
}

#[derive(Serialize)]
struct TraceStep {
    item: ItemId,
    accepted: bool,
    #[serde(with = "scalar::as_string")]
    value_u: Scalar,
    disposed: Vec<ItemId>,
    trace: PhaseTrace,
    kept: BTreeSet<ItemId>,
    /// Fractions `s` after the arrival, as decimals for plotting.
    fractions: Vec<(ItemId, f64)>,
}

/// Runs the engine over an instance file, keeping every phase trace. An
/// empty `epsilon` means the instance's own slack.
pub fn trace_json(instance: &str, epsilon: &str) -> Result<String, String> {
    let sample = read_instance_str(instance).map_err(|e| e.to_string())?;
    let eps = if epsilon.trim().is_empty() {
        harness::trial::instance_slack(&sample)
    } else {
        scalar::parse_scalar(epsilon).map_err(|e| e.to_string())?
    };
    let params = make_params(eps).map_err(|e| e.to_string())?;
    let mut state = FractionalState::new(sample.dims);
    let mut steps = Vec::with_capacity(sample.len());
    for item in &sample.items {
        let out = observe_item(&mut state, item, &sample.objective, &params, false)
            .map_err(|e| e.to_string())?;
        steps.push(TraceStep {
            item: out.item,
            accepted: out.accepted,
            value_u: out.value_u,
            disposed: out.disposed,
            trace: out.trace,
            kept: state.committed(),
            fractions: state
                .fractions()
                .iter()
                .map(|(v, x)| (*v, approx(x)))
                .collect(),
        });
    }
    let kept = state.committed();
    let f_s = sample
        .objective
        .evaluate(&kept)
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "epsilon": s(&params.epsilon),
        "alpha": s(&params.alpha),
        "beta": s(&params.beta),
        "gamma": s(&params.gamma),
        "steps": steps,
        "kept": kept,
        "f_s": s(&f_s),
    })
    .to_string())
}

/// One sample of the phase construction without slack, run with engine
/// slack `2^(-2d)`.
pub fn noslack_json(d: u32, seed: u32) -> Result<String, String> {
    let inst = NoslackInstance::sample(d as usize, seed as u64).map_err(|e| e.to_string())?;
    let report =
        harness::run_trial(&inst.sample, &TrialConfig::new(None)).map_err(|e| e.to_string())?;
    let kept: Vec<_> = report
        .final_set
        .iter()
        .map(|id| json!({"item": id, "phase": inst.labels[id.0].0, "index": inst.labels[id.0].1}))
        .collect();
    let accepted: Vec<_> = report
        .steps
        .iter()
        .filter(|st| st.accepted)
        .map(
            |st| json!({"item": st.item, "label": inst.labels[st.item.0], "disposed": st.disposed}),
        )
        .collect();
    Ok(json!({
        "d": d,
        "seed": seed,
        "sigma": inst.sigma.iter().map(|x| x + 1).collect::<Vec<_>>(),
        "phases": inst.sample.meta.phases,
        "accepted": accepted,
        "kept": kept,
        "f_s": s(&report.f_s),
        "opt": report.opt_value.as_ref().map(s),
        "ratio": report.ratio.as_ref().map(Ratio::to_string),
        "audit_ok": report.audit_ok,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn example_instance() -> String {
    EXAMPLE_INSTANCE.to_string()
}

#[wasm_bindgen]
pub fn params(epsilon: &str, k: u32) -> Result<String, JsValue> {
    params_json(epsilon, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn trace(instance: &str, epsilon: &str) -> Result<String, JsValue> {
    trace_json(instance, epsilon).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn noslack(d: u32, seed: u32) -> Result<String, JsValue> {
    noslack_json(d, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn params_for_three_quarters() {
        let v: Value = serde_json::from_str(&params_json("3/4", 1).unwrap()).unwrap();
        assert_eq!(v["alpha"], "1/2");
        assert_eq!(v["gamma"], "1/4");
        assert!(params_json("1", 1).is_err());
        assert!(params_json("x", 1).is_err());
    }

    #[test]
    fn example_trace_replaces_the_cheap_item() {
        let v: Value = serde_json::from_str(&trace_json(EXAMPLE_INSTANCE, "").unwrap()).unwrap();
        assert_eq!(v["epsilon"], "3/4");
        assert_eq!(v["kept"], json!([1]));
        assert_eq!(v["f_s"], "10");
        assert_eq!(v["steps"][1]["disposed"], json!([0]));
        assert!(trace_json("{}", "").is_err());
    }

    #[test]
    fn noslack_demo_runs() {
        let v: Value = serde_json::from_str(&noslack_json(6, 1).unwrap()).unwrap();
        assert_eq!(v["opt"], "6");
        assert_eq!(v["audit_ok"], true);
        assert_eq!(v["sigma"].as_array().unwrap().len(), 6);
    }
}
