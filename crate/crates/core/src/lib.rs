//! Stochastic optical field synthesis and temporal coherence analysis.
//!
//! [`synthesis`] builds many-emitter field records from two classical emission
//! models, [`coherence`] estimates the normalized first-order autocorrelation
//! and coherence lengths from them, and [`experiment`] sweeps the emitter count
//! and persists the results. [`cli`] is the `cohsim` front end.

pub mod cli;
pub mod coherence;
pub mod error;
pub mod experiment;
pub mod rng;
pub mod synthesis;

pub use error::{Error, Result};

/// Speed of light in µm/fs.
pub const SPEED_OF_LIGHT_UM_PER_FS: f64 = 0.299_792_458;
