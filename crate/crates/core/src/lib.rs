//! A laboratory for latent Markov decision processes (LMDPs).
//!
//! An LMDP draws one of `L` fully observed MDPs from a mixing distribution at
//! the start of each episode; the draw itself is never observed. This crate
//! provides exact, desk-scale machinery around that model:
//!
//! - [`divergence`] — total variation, Hellinger and Bhattacharyya divergences
//!   between finite distributions, plus the explicit left-inverse construction
//!   for well-separated mixture components.
//! - [`model`] — the LMDP representation, trajectories and policies.
//! - [`evaluate`] — exact trajectory distributions, policy values and seeded
//!   simulation.
//! - [`oracle`] — per-component value iteration and the brute-force optimal
//!   planner over full history trees (the reference every faster routine is
//!   tested against).
//! - [`separation`] — strong separation, N-step decodability and certified
//!   Bhattacharyya separation profiles.
//! - [`inference`] — belief states, maximum-likelihood latent decoding and
//!   exact/Monte-Carlo decoding error.
//! - [`planner`] — short-memory planning with context inference: per-component
//!   tails, a decoded-context stitch, and a history-tree head.
//! - [`learner`] — optimistic maximum-likelihood estimation over a finite
//!   model class.
//! - [`generators`] — constructive hard instances: combination locks, moment
//!   matched distribution families, tensor augmentation and a 3SAT embedding.
//! - [`doc`] — the canonical JSON model document with bit-exact probability
//!   round-trips.
//!
//! Everything that enumerates a history tree takes an explicit [`Budget`] and
//! fails loudly instead of truncating.

pub mod budget;
pub mod dist;
pub mod divergence;
pub mod doc;
pub mod error;
pub mod evaluate;
pub mod generators;
pub mod indexer;
pub mod inference;
pub mod learner;
pub mod model;
pub mod oracle;
pub mod planner;
pub mod policy;
pub mod separation;

pub use budget::Budget;
pub use dist::Dist;
pub use error::{Error, Result};
pub use model::{Lmdp, Trajectory};
pub use policy::Policy;
