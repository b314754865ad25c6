//! Downlink cellular interference alignment.
//!
//! The crate models a multi-cell MIMO-OFDM downlink in which every BS
//! transmits through a common, possibly rank-deficient mixing matrix `P`.
//! Users whiten against their strongest interferer, feed back the best
//! eigen-directions of their equivalent channel, and each BS jointly selects
//! and zero-forces a subset of those streams.
//!
//! Modules, bottom-up:
//!
//! - [`netchan`]: hexagonal layout, path loss, correlated block-diagonal fading
//! - [`precoding`]: mixing matrix and ZF beamforming
//! - [`receiver`]: null-space and MMSE decoders, equivalent channel, feedback
//! - [`scheduler`]: exhaustive and greedy stream selection, PF weights
//! - [`simharness`]: slot-level simulation, baselines and Monte-Carlo campaigns
//! - [`cli`]: configuration files, CSV outputs and the `iasim` front end

pub mod cli;
pub mod error;
pub mod linalg;
pub mod netchan;
pub mod precoding;
pub mod receiver;
pub mod rng;
pub mod scheduler;
pub mod simharness;

pub use error::{Error, Result};
pub use netchan::NetworkConfig;
