//! Planning where to split a CNN between a client device and a server.
//!
//! A split after layer `l1` is scored on end-to-end latency, client energy and
//! client memory ([`problem`]), searched with NSGA-II ([`nsga2`]) and resolved
//! to one plan by ideal-point selection ([`topsis`]). [`oracle`] enumerates the
//! whole split space for verification and [`baselines`] provides the single
//! objective and fixed-placement strategies to compare against.

pub mod baselines;
pub mod cost;
pub mod error;
pub mod nsga2;
pub mod oracle;
pub mod plan;
pub mod problem;
pub mod profile;
pub mod topsis;

pub use baselines::{run_baseline, BaselineKind, BaselineOutcome};
pub use cost::{CostBreakdown, DeviceProfile, DeviceSetup, NetworkProfile};
pub use error::{Error, Result};
pub use nsga2::{evolve, GaConfig, Individual, ParetoSet};
pub use oracle::{enumerate, true_selection, OracleSelection, SweepEntry};
pub use plan::{plan_split, SplitPlan};
pub use problem::{
    evaluate, feasible, Constraint, Feasibility, ObjectiveVector, ProblemInstance, SplitCandidate,
    DEFAULT_MEMORY_CAP,
};
pub use profile::{load_profile, LayerCost, LayerKind, LayerSpec, ModelProfile, TensorShape};
pub use topsis::{select_best, Normalization, TopsisChoice};
