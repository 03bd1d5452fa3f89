//! Evaluators, verifiers, optimizers and simulators for threshold strategies
//! in prophet inequalities and their secretary, Top-1-of-k and semi-online
//! variants.

pub mod bounds;
pub mod distributions;
pub mod error;
pub mod hardness;
pub mod optimizer;
pub mod params;
pub mod rng;
pub mod semionline;
pub mod simulator;
pub mod special_functions;

pub use error::{Error, Result};
