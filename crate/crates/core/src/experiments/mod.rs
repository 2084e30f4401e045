//! Experiment drivers: LETOR cross-validation with grid search, the
//! synthetic NDCG@20 protocol and parameter sweeps over it, and the
//! successive-pair output analysis used to locate class boundaries.

mod grid;
mod peaks;
mod protocol;
mod sweep;

pub use grid::{
    grid_search, internal_cv_score, select_config, FoldResult, GridSearchOptions, GridSearchReport, GridSpec, Selection,
};
pub use peaks::{detect_boundaries, successive_pair_outputs, true_boundaries, SortedOutputs};
pub use protocol::{
    evaluate_subsets, run_synthetic_protocol, run_synthetic_repeat, ProtocolPoint, SyntheticProtocolConfig,
    PROTOCOL_KEYS,
};
pub use sweep::{sweep, ExperimentReport, ReportPoint, SweepVariable, SWEEP_CSV_HEADER};
