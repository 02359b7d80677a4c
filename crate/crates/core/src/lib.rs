//! `ergolab`: a desk-scale laboratory for non-uniformly hyperbolic dynamics.
//!
//! The crate implements a handful of concrete maps with explicit dominated
//! splittings ([`systems`]), the Birkhoff-sum machinery along their orbits
//! ([`cocycle`]), exact detectors for Pliss, hyperbolic, inverse and reverse
//! hyperbolic times ([`hyptimes`]), coherent schedules and blocks
//! ([`schedules`]), tail / correlation statistics and the tail-to-mixing
//! dictionary ([`mixing`]), and basin-membership diagnostics ([`basins`]).
//!
//! Every Monte-Carlo routine is deterministic in its seed: each sample `i`
//! draws from its own ChaCha stream derived from `(seed, i)`, and batch
//! reductions are done in a fixed order, so results do not depend on the
//! number of worker threads.

pub mod basins;
pub mod cocycle;
mod error;
pub mod hyptimes;
pub mod mixing;
pub mod observables;
pub mod par;
pub mod rng;
pub mod schedules;
pub mod stats;
pub mod systems;

pub use error::{Error, Result};
pub use systems::{Point, PointS1, PointSolid, PointT2, SystemKind, SystemSpec};
