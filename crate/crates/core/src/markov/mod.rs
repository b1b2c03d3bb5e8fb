//! Markov-game solvers: backward induction with stage-game oracles, Markov
//! NE gaps, marginalisation of correlated policies, and the star-shaped
//! discounted case (value iteration and fictitious play).

pub mod fp;
pub mod gap;
pub mod horizon;
pub mod marginal;
pub mod star;
pub mod value_iteration;

pub use fp::{fp_markov, FpConfig, FpSnapshot, FpState, FpTrajectory};
pub use gap::{markov_cce_gap, markov_ne_gap, MarkovGapReport};
pub use horizon::truncate_horizon;
pub use marginal::{joint_kernel, marginalize_markov, MarkovMarginalCertificate};
pub use star::{
    star_distance, star_value_iteration, sweep_budget, val_center, val_others, StarModel,
    StarViOutput, ValSolution,
};
pub use value_iteration::{value_iteration_ne, StageSolve, ViOutput};
