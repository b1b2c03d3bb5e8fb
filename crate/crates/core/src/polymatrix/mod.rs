//! Equilibria and learning dynamics on a single zero-sum polymatrix game.

pub mod dynamics;
pub mod gaps;
pub mod marginal;
pub mod ne_lp;
pub mod oracle;
pub mod qre;

pub use dynamics::{
    fp_matrix, kl_project_floor, mwu_diminishing, mwu_fixed, omd, omwu, smooth_fp_matrix,
    RunOptions, Trajectory, TrajectoryPoint,
};
pub use gaps::{best_response_sum, matrix_ne_gap, matrix_qre_gap, qre_gaps, softmax, GapReport};
pub use marginal::{
    cce_gap, joint_payoffs, marginalize, no_regret_avg, MarginalCertificate, NoRegretResult,
};
pub use ne_lp::{ne_lp, NeLpSolution};
pub use oracle::{solve_stage, OracleConfig, OracleKind, OracleOutput};
pub use qre::qre_fixed_point;
