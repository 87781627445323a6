//! Bayesian mixture learners for sequential, batch and supervised log-loss
//! prediction, with exact and Monte-Carlo regret evaluation, KL-ball weight
//! bounds, Fisher-information geometry and a Langevin ensemble approximation
//! of the mixture.
//!
//! The crate is `no_std` (it needs `alloc`). All densities, divergences and
//! Fisher matrices are computed in nats; functions that return bits say so.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod family;
pub mod fim_experiment;
pub mod fisher;
pub mod linalg;
pub mod math;
pub mod mixture;
pub mod prior;
pub mod regret;
pub mod rng;
pub mod sgld;
pub mod weight;

pub use error::{Error, Result};
pub use family::{Context, Dataset, ModelFamily, ParamVector, SoftmaxNet};
pub use mixture::{PosteriorGrid, PredictiveDistribution};
pub use prior::{Density, PriorSpec};
