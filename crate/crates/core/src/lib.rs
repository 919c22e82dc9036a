//! Online submodular bipartite matching under known i.i.d. arrivals.
//!
//! The crate is organised around the two phases of the problem:
//!
//! - an **offline phase** that maximises the multilinear extension of a
//!   monotone submodular objective over the bipartite b-matching polytope
//!   ([`offline::continuous_greedy`], or an exact LP for the special-case
//!   objectives in [`lp`]), and
//! - an **online phase** in which arrivals are drawn slot by slot from a known
//!   distribution and an [`online::OnlineAlgorithm`] makes irrevocable matching
//!   decisions guided by the offline solution.
//!
//! [`online::simulate`] runs many independent trials and reports empirical
//! competitive ratios against an upper bound on the expected hindsight optimum.

pub mod error;
pub mod experiment;
pub mod instance;
pub mod io;
pub mod lp;
pub mod offline;
pub mod online;
pub mod rounding;
pub mod stats;
pub mod submodular;

pub use error::{Error, Result};
pub use instance::{ArrivalSequence, Instance, Problem};
pub use submodular::{Objective, ObjectiveKind};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random number generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Builds the generator for `(seed, stream)`.
///
/// Distinct streams of the same seed are independent, which is how the
/// offline solver, arrival sampling and algorithm-internal randomness of a
/// single trial are kept apart.
pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids used when deriving generators from a user-facing seed.
pub mod streams {
    pub const ARRIVALS: u64 = 0;
    pub const ALGORITHM: u64 = 1;
    pub const OFFLINE: u64 = 2;
    pub const ESTIMATION: u64 = 3;
}
