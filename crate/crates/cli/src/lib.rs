//! Library side of the `duase` command-line tool: configuration, commands and
//! the built-in simulation experiments.

pub mod commands;
pub mod config;
pub mod experiments;

use duase_core::Error;

/// Default node count for `simulate` with a built-in spec.
pub const REFERENCE_SBM_DEFAULT_N: usize = duase_core::sampler::REFERENCE_SBM_N;

/// Process exit code for an error: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}
