//! Noise-driven reinforcement-learning mechanics on a desk scale: a cart-pole
//! simulator, a gradient-free hill climber with adaptive noise scaling,
//! exploration noise processes and schedules, and TD-target formula
//! utilities that expose the overestimation bias of the max operator.

pub mod env;
pub mod error;
pub mod experiment;
pub mod exploration;
pub mod hillclimb;
pub mod policy;
pub mod td;

pub use error::{Error, Result};
