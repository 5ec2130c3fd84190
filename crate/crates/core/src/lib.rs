//! Halin maps, marked plane trees, Galton-Watson sampling, looptrees and
//! Gromov-Hausdorff tooling.

pub mod bijection;
pub mod error;
pub mod experiments;
pub mod gh_metric;
pub mod graph;
pub mod gw;
pub mod halin;
pub mod looptree;
pub mod numerics;
pub mod planar_map;
pub mod plane_tree;
pub mod render;

pub use error::{Error, Result};

/// Deterministic generator used throughout for reproducible sampling.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    rand::SeedableRng::seed_from_u64(seed)
}
