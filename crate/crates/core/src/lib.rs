//! Solvers for zero-sum Markov games with networked separable interactions.
//!
//! Payoffs decompose into pairwise matrix games along an interaction graph
//! and transitions are a state-dependent mixture of single-controller
//! kernels. The crate validates that structure, computes Nash and quantal
//! response equilibria of stage games, and runs value iteration and
//! fictitious play on Markov games.

pub mod decomposition;
pub mod error;
pub mod game_model;
pub mod generate;
pub mod io;
pub mod lp;
pub mod markov;
pub mod matrix;
pub mod polymatrix;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
pub use matrix::Matrix;
