//! Numerical laboratory for local Lindbladian dynamics on finite lattices:
//! generator assembly, exact semigroups, contraction estimates, closed-form
//! locality bounds, correlation measures, and Glauber embeddings.

pub mod bounds;
pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod glauber;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod seeding;
pub mod zoo;

pub use error::{Error, Result};

/// Caps the worker pool of the dense kernels at `n` threads (1 = sequential).
/// The rayon pool can be sized once per process; later calls only adjust the kernels.
pub fn set_threads(n: usize) {
    let n = n.max(1);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
}
