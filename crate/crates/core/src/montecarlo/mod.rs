//! Euler–Maruyama simulation, path transformation and weighted comparison.

mod compare;
mod config;
mod sim;
pub mod stats;

pub use compare::{
    doob_pathwise_check, exponent_vectors, girsanov_moments, plain_mean, weak_compare,
    CompareReport, GirsanovReport, KsRow, MomentRow, PathwiseReport,
};
pub use config::McConfig;
pub use sim::{safe_horizon, simulate, transform_paths, PathBundle};
