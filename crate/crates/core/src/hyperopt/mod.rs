//! Hyperparameter selection for the neural field.
//!
//! * [`grid`]: exhaustive search over `(lambda_enc, lambda_mlp)` with the
//!   learning rate and encoder scale held fixed, scored by oracle NRMSE or by
//!   validation loss.
//! * [`bayes`]: Gaussian-process Bayesian optimization (expected improvement)
//!   over a box, used by [`bilevel`] to minimize validation loss over
//!   `(lambda_enc, lambda_mlp, learning_rate, scale)`.

pub mod bayes;
pub mod bilevel;
pub mod gp;
pub mod grid;
mod hyper;
mod halton;
mod simplex;

pub use bayes::{bayes_optimize, expected_improvement, propose_next, BoConfig, BoResult, Clock, NoClock};
pub use bilevel::{apply_hyper, bilevel_optimize, BilevelResult};
pub use gp::{gp_fit, GpSurrogate};
pub use grid::{
    cell_train_config, evaluate_cell, grid_search_inr, select_best, validation_loss, Criterion, GridCellResult, GridSearch,
    GridSpec, GridTask,
};
pub use hyper::{HyperBounds, HyperVector, SearchRecord, Status};
