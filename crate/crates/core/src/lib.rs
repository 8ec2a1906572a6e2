//! Numerical core for fitting continuous functions to scattered 2D samples.
//!
//! Two model families are provided:
//!
//! * [`bspline`]: tensor-product cubic B-splines fitted in closed form with a
//!   ridge (Tikhonov) penalty, solved through a banded Cholesky factorization.
//! * [`inr`]: a multiresolution hash-grid encoder feeding a small ReLU MLP,
//!   trained with full-batch Adam on a mean-squared loss with separate
//!   L2 penalties on the encoder tables and on the MLP.
//!
//! [`hyperopt`] selects hyperparameters for either family: oracle and
//! validation grid searches, plus a Gaussian-process Bayesian optimizer for
//! the bilevel (train/validation) formulation.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI, timing and
//! thread pools live in the `contfit` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bspline;
pub mod data;
pub mod error;
pub mod exec;
pub mod hyperopt;
pub mod inr;
pub mod linalg;
pub mod rng;
mod special;

pub use data::{eval_grid_coords, gen_samples, nrmse, rect2d, split_samples, EvalGrid, SampleSet, Split};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use rng::RngSeed;
