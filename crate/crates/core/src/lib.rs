//! Star-body regularizer toolkit for planar data distributions.
//!
//! A star body `K` (star-shaped about the origin) is described on an angular
//! grid by its gauge values `t_i = ||u_i||_K` at the grid directions `u_i`;
//! the radial function is the reciprocal, `rho_i = 1 / t_i`. On top of that
//! representation the crate provides:
//!
//! - [`geometry`]: grids, star bodies, volumes, gauges, dual mixed volumes;
//! - [`measures`]: atomic / density data distributions, per-sector summaries,
//!   transport cost matrices, Wasserstein-1 distance;
//! - [`lp`]: a self-contained dense two-phase primal simplex solver plus the
//!   inner worst-case transport LP pair used by the robust solvers;
//! - [`dro`]: distributionally robust gauge optimization (projected
//!   subgradient over the unit-volume body set) and the two-sided critic;
//! - [`closed_form`]: exact optimizers for the zero-radius and capped-critic
//!   problems, and a grid-refinement convergence study;
//! - [`convex`]: the convexity-constrained (hull polytope) regularizer solved
//!   by a log-barrier Newton method, with KKT verification.

pub mod closed_form;
pub mod convex;
pub mod dro;
pub mod geometry;
pub mod lp;
pub mod measures;
