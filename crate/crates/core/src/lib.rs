//! PERMANOVA over precomputed distance matrices.
//!
//! The dominant cost of the test is the within-group sum of squares `s_W`,
//! evaluated once per permutation. [`kernels`] provides three
//! interchangeable implementations of it; [`bench`] and [`membench`] time
//! them and the host's memory bandwidth.

pub mod bench;
pub mod cli;
pub mod error;
pub mod grouping;
pub mod io;
pub mod kernels;
pub mod matrix;
pub mod membench;
pub mod permute;
pub mod stats;

pub use error::{Error, Result};
pub use grouping::{build_grouping, Grouping};
pub use kernels::{sw_batch, sw_brute_force, sw_tiled, sw_two_level, KernelKind, SwResults, TileConfig};
pub use matrix::{validate_matrix, DistanceMatrix};
pub use permute::{generate_batch, PermutationBatch};
pub use stats::{permanova, pseudo_f, ss_total, PermanovaResult};
