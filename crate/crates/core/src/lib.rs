//! Equilibrium computation and market simulation for a two-firm data
//! acquisition game.
//!
//! Two firms with `x` and `y` data points each decide whether to bid on a
//! corpus of `n` extra points sold at price `p`. Market share follows a
//! Tullock-style contest on data counts, `m1^β / (m1^β + m2^β)`, which arises
//! from error-based shares `err2^a / (err1^a + err2^a)` with `err(m) = m^{-r}`
//! and `β = r·a`.
//!
//! Modules:
//! - [`market_model`]: learning curves, market-share functions, the consumer
//!   switching chain and the missing-mass estimator.
//! - [`game`]: game parameters, payoff matrix, the `A`/`C`/`D` deltas and
//!   unilateral deviation gains.
//! - [`equilibrium`]: regime classification, closed-form equilibria and a
//!   brute-force oracle working from the payoff matrix alone.
//! - [`analysis`]: utility orderings, market-share drift, consumer welfare and
//!   comparative-statics sweeps.
//! - [`cli`]: the `acqgame` command line.

// `!(x > 0.0)` style guards deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod market_model;

pub use error::{Error, Result};
pub use game::{DeltaQuantities, GameSpec, PayoffMatrix, StrategyProfile};

/// Tolerance for strict and weak comparisons on utilities, deltas and prices.
pub const EPS: f64 = 1e-9;
