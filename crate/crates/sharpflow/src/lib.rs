//! Numerical toolkit for sharp-interface limits of stochastic interface dynamics.
//!
//! The crate computes, cross-validates and simulates the objects entering the
//! large-deviation description of interface motion for two models:
//!
//! * Glauber dynamics for Ising systems with Kac potentials (nonlocal mean-field
//!   evolution, instanton, surface tension, mobility, corrector, rescaled action),
//! * the Glauber+Kawasaki reaction-diffusion process (bistable reaction pairs,
//!   standing wave, mobility via the linearized operator, rescaled action).
//!
//! On top sit interface paths on the 2-torus (mean curvature flow of circles,
//! curve shortening of polygons, nucleation constructions), the limiting action
//! functional on such paths, and kinetic Monte Carlo simulation of the two
//! microscopic particle systems.
//!
//! See the `examples/` directory for runnable entry points, one per capability.

pub mod action_gk;
pub mod action_kac;
pub mod cli;
pub mod coefficients;
pub mod correctors;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod instanton;
pub mod kernels;
pub mod models;

pub use error::{Error, Result};
