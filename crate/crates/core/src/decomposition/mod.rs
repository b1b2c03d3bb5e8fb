//! Structural decomposability: additive splits of rewards and transitions,
//! ensemble normal form, non-negativity repair and the canonical pairwise
//! split of `Q`.

pub mod additive;
pub mod canonical;
pub mod repair;
pub mod structure;

pub use additive::{
    check_additive, check_additive_capped, Coverage, DecompositionReport, DenseTensor, Witness,
};
pub use canonical::{canonical_q, StageQ};
pub use repair::{repair_components, repair_nonnegative, SignedKernel};
pub use structure::{
    check_reward_structure, check_transition_structure, validate_dense, DenseMarkovGame,
    DenseValidation, RewardFailure, RewardStructure, TransitionFailure, TransitionStructure,
};
