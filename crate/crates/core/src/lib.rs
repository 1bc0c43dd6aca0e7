//! Slowdown probabilities for one-dimensional biased random walks in a
//! random environment with random holding times.

pub mod asym;
pub mod cli;
pub mod environment;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod laws;
pub mod numeric;
pub mod rng;
pub mod sim;
pub mod stats;

pub use environment::{Environment, EnvironmentHeader, Holding, OmegaLaw};
pub use error::{Error, Result};
pub use laws::{TailClass, TailLaw, TailVariant};
