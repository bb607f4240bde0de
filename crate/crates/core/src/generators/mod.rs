//! Constructive hard-instance machinery: combination locks, moment-matched
//! distribution families, tensor augmentation, the 3SAT embedding, and a
//! random strongly separated instance generator for experiments.
//!
//! Every generator's output goes through the full [`crate::model::Lmdp`]
//! validation; family invariants are re-verified post-construction rather
//! than trusted from the recipe.

mod augment;
mod family;
mod lock;
mod random;
mod sat;

pub use augment::{augment_lmdp, augment_mdp};
pub use family::{
    greedy_packing, make_family, moment_matching, qx_dist, tensor_family, two_family_exact,
    two_family_exponential, Family, FamilyCheck, GammaCheck,
};
pub use lock::{comb_lock, comb_lock_decodable, LockSpec};
pub use random::{random_separated_lmdp, RandomSeparatedConfig};
pub use sat::{sat_to_lmdp, sat_to_separated_lmdp, SatFormula};
