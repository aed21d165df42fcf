//! Online submodular maximization under sparse vector packing constraints
//! with free disposal.
//!
//! Items arrive one at a time, each with a weight vector in `[0,1]^d` that
//! has at most `k` non-zero coordinates. The [`engine`] decides on arrival
//! whether to keep an item and may drop earlier ones to stay feasible. The
//! other modules supply exact optima, hard instance families and an
//! experiment harness.
//!
//! All arithmetic is exact (see [`scalar`]).

pub mod engine;
pub mod generators;
pub mod harness;
pub mod model;
pub mod objective;
pub mod offline;
pub mod scalar;

pub use engine::{observe_item, FractionalState, OnlineEngine, StepOutcome};
pub use model::{make_params, AlgorithmParams, Item, ItemId, Payload, SparseWeightVector};
pub use objective::ObjectiveSpec;
pub use scalar::Scalar;
