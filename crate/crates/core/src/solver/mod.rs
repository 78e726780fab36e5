//! Consensus ADMM over four copies of the metric: one per hinge loss, one
//! for the row-sparsity penalty and one for the NSD constraint on the
//! Mahalanobis blocks.

mod admm;
mod prox;

pub use admm::{
    admm_iterate, project_model_nsd, trace_to_csv, train, train_on_pairs, update_loss_block, write_trace_csv,
    AdmmState, SolverConfig, TraceEntry, TrainOutput, TRACE_HEADER,
};
pub use prox::{max_eigenvalue, project_nsd, prox_l21};
