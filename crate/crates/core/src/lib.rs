//! Distributed constrained optimization over directed graphs.
//!
//! This crate implements projected push-sum gradient descent-ascent: a
//! network of agents, each holding a private smooth cost and private
//! inequality constraints, cooperatively minimizes the sum of costs over a
//! shared convex set. Communication happens along the edges of a directed,
//! strongly connected graph; agents only need to know their out-degree, so
//! the scheme works without doubly stochastic weights.
//!
//! Module layout:
//!
//! - [`graph`]: directed graphs, strong connectivity, column-stochastic
//!   mixing matrices and their Perron vectors.
//! - [`consensus`]: plain push-sum iteration, its row-stochastic
//!   reformulation, and diagnostics for the mixing rate.
//! - [`projections`]: Euclidean projections onto the feasible sets used
//!   here (scaled simplex, boxes) plus a slow exact oracle for testing.
//! - [`problem`]: smooth functions, per-agent Lagrangians, step-size
//!   schedules, and gradient-bound estimation.
//! - [`ppsgda`]: the saddle-point iteration itself and its run harness with
//!   trace records for convergence studies.
//! - [`dispatch`]: the economic dispatch problem (quadratic generation
//!   costs, capacity limits, demand balance) with a centralized solver used
//!   as ground truth.

pub mod consensus;
pub mod dispatch;
pub mod graph;
pub mod ppsgda;
pub mod problem;
pub mod projections;
