//! Spectral toolkit for the stochastically forced, damped sine-Gordon
//! equation on an interval with homogeneous Neumann boundaries.
//!
//! The continuum model is the second-order SPDE
//!
//! ```text
//! du_t + [ alpha u_t - kappa u_xx + sin u ] dt = f dt + sum_j h_j dW_j
//! ```
//!
//! which, after subtracting a stationary Ornstein-Uhlenbeck process from the
//! velocity, becomes a pathwise random evolution for Y = (u, v).  Everything
//! here works in the eigenbasis of the Neumann Laplacian (cosine modes), so a
//! state is a pair of short coefficient vectors and the linear part of the
//! flow is a family of independent 2x2 blocks that we exponentiate exactly.
//!
//! The crate answers three questions about that system at desk scale:
//!
//! * does a pullback-attracting set exist, and with what radius (`attractor`),
//! * does the attractor collapse to a one-dimensional Lipschitz curve over
//!   the mean mode when damping dominates (`attractor`, `geometry`),
//! * do trajectories share an asymptotic winding rate -- a rotation number --
//!   and is the mean-mode ordering preserved (`rotation`).
//!
//! Module layout mirrors the pipeline: `params`/`constants` fix the model and
//! its derived regime constants, `spectral` owns transforms, `noise` owns
//! Brownian paths and the OU process, `geometry` owns the energy norm and the
//! mean/fluctuation splitting, `dynamics` owns the exponential integrator,
//! and `attractor`/`rotation` run the experiments.  `config` + `runner` wrap
//! it all in a small CLI (`sgrd`).

pub mod attractor;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod noise;
pub mod params;
pub mod rotation;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};
pub use params::Params;

/// One full turn of the torus coordinate.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
