//! Exact checks of the loop invariants that the analysis relies on.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use super::FractionalState;
use crate::model::AlgorithmParams;
use crate::objective::ObjectiveSpec;
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditCheck {
    pub name: &'static str,
    pub passed: bool,
    /// The first violation found, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantAudit {
    pub checks: Vec<AuditCheck>,
}

impl InvariantAudit {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const FRACTIONAL_LOAD: &str = "fractional_load";
pub const INTEGRAL_LOAD: &str = "integral_load";
pub const FRACTION_RANGES: &str = "fraction_ranges";
pub const VALUE_ACCOUNTING: &str = "value_accounting";
pub const VALUE_INVARIANT: &str = "value_invariant";
pub const VALUE_RATIO: &str = "value_ratio";

fn check(name: &'static str, violation: Option<String>) -> AuditCheck {
    AuditCheck {
        name,
        passed: violation.is_none(),
        detail: violation,
    }
}

/// Verifies every invariant of the state between two arrivals.
///
/// Loads are recomputed from `s` rather than read from the cache, so a
/// stale cache is reported as a violation too.
pub fn audit_state(
    state: &FractionalState,
    spec: &ObjectiveSpec,
    params: &AlgorithmParams,
) -> InvariantAudit {
    let mut fractional: BTreeMap<usize, Scalar> = BTreeMap::new();
    let mut integral: BTreeMap<usize, Scalar> = BTreeMap::new();
    for (v, x) in &state.s {
        let Some(w) = state.weights.get(v) else {
            continue;
        };
        for (d, wd) in w.iter() {
            *fractional.entry(d).or_insert_with(Scalar::zero) += wd * x;
            *integral.entry(d).or_insert_with(Scalar::zero) += wd;
        }
    }

    let load_violation = fractional
        .iter()
        .find(|(_, l)| *l > &params.beta)
        .map(|(d, l)| format!("dimension {d} carries {} > beta", scalar::to_string(l)))
        .or_else(|| {
            state
                .load
                .iter()
                .find(|(d, l)| fractional.get(d).map_or(!l.is_zero(), |f| f != *l))
                .map(|(d, _)| format!("cached load on dimension {d} is stale"))
        });

    let integral_violation = integral
        .iter()
        .find(|(_, l)| *l > &Scalar::one())
        .map(|(d, l)| format!("dimension {d} carries {} > 1", scalar::to_string(l)));

    let one = Scalar::one();
    let range_violation = state
        .a
        .iter()
        .find(|(_, a)| **a < params.alpha || **a > one)
        .map(|(v, a)| format!("a({v}) = {} outside [alpha, 1]", scalar::to_string(a)))
        .or_else(|| {
            state
                .s
                .iter()
                .find(|(_, s)| **s < params.beta || **s > one)
                .map(|(v, s)| format!("s({v}) = {} outside [beta, 1]", scalar::to_string(s)))
        })
        .or_else(|| {
            state
                .s
                .iter()
                .find(|(v, s)| state.a(**v) < **s)
                .map(|(v, _)| format!("a({v}) < s({v})"))
        });

    let value = |v| state.value_of.get(v).cloned().unwrap_or_else(Scalar::zero);
    let sum_a: Scalar = state.a.keys().map(value).sum();
    let sum_s: Scalar = state.s.keys().map(value).sum();
    let accounting_violation = match (
        spec.evaluate(&state.ever_accepted()),
        spec.evaluate(&state.committed()),
    ) {
        (Ok(fa), Ok(fs)) => {
            if fa != state.f_empty.clone() + &sum_a {
                Some(format!(
                    "f(A) = {} but f(empty) + v(A) = {}",
                    scalar::to_string(&fa),
                    scalar::to_string(&(state.f_empty.clone() + &sum_a))
                ))
            } else if fs < state.f_empty.clone() + &sum_s {
                Some(format!(
                    "f(S) = {} below f(empty) + v(S) = {}",
                    scalar::to_string(&fs),
                    scalar::to_string(&(state.f_empty.clone() + &sum_s))
                ))
            } else {
                None
            }
        }
        (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
    };

    // v(s) >= (1 - gamma - beta/alpha) v_a(A \ S) + (1 - gamma) v_a(S)
    let v_s: Scalar = state.s.iter().map(|(v, x)| value(v) * x).sum();
    let mut weighted_gone = Scalar::zero();
    let mut weighted_kept = Scalar::zero();
    for (v, a) in &state.a {
        let term = value(v) * a;
        if state.s.contains_key(v) {
            weighted_kept += term;
        } else {
            weighted_gone += term;
        }
    }
    let beta_over_alpha = &params.beta / &params.alpha;
    let rhs = (&one - &params.gamma - &beta_over_alpha) * &weighted_gone
        + (&one - &params.gamma) * &weighted_kept;
    let invariant_violation = (v_s < rhs).then(|| {
        format!(
            "v(s) = {} below {}",
            scalar::to_string(&v_s),
            scalar::to_string(&rhs)
        )
    });

    let v_a = &weighted_gone + &weighted_kept;
    let ratio_violation = (v_a > scalar::int(2) * &sum_s).then(|| {
        format!(
            "v(a) = {} exceeds 2 v(S) = {}",
            scalar::to_string(&v_a),
            scalar::to_string(&(scalar::int(2) * &sum_s))
        )
    });

    InvariantAudit {
        checks: vec![
            check(FRACTIONAL_LOAD, load_violation),
            check(INTEGRAL_LOAD, integral_violation),
            check(FRACTION_RANGES, range_violation),
            check(VALUE_ACCOUNTING, accounting_violation),
            check(VALUE_INVARIANT, invariant_violation),
            check(VALUE_RATIO, ratio_violation),
        ],
    }
}
