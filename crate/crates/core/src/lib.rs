//! Localization of moving narrowband and wideband sources on a uniform
//! linear array by estimating parametric DOA trajectories.
//!
//! Each source follows a trajectory `theta_l = phi + sum_i c_i b_i(l)` over
//! `L` snapshots. Grid methods ([`grid`]) search a lattice of trajectory
//! parameters; gridless methods ([`gridless`]) refine off the lattice.

pub mod array;
pub mod dictionary;
pub mod error;
pub mod estimate;
pub mod grid;
pub mod gridless;
mod kernel;
pub mod metrics;
pub mod observation;
pub mod optim;
pub mod trajectory;

pub use array::{ArrayConfig, Frequency, Manifold, SPEED_OF_SOUND};
pub use dictionary::{atom, GridAxis, ParamGrid};
pub use error::{Error, Result};
pub use estimate::SourceEstimate;
pub use observation::{
    check_blocks, noise_variance_for_snr, synthesize_block, synthesize_with, GroundTruth, ObservationBlock,
    SynthesisOptions,
};
pub use trajectory::{trajectory_steering_matrix, TrajectoryModel, TrajectoryParams};
