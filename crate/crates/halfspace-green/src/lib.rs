//! Fundamental solutions, half-space Green functions and Poisson kernels for
//! second-order constant-coefficient elliptic systems in dimensions 2 and 3.
//!
//! The crate constructs the canonical fundamental solution `E` of a weakly
//! elliptic system from sphere integrals of the inverse symbol, builds the
//! Green function of the upper half-space by the method of images (and, for
//! strongly elliptic systems, by Poisson-kernel convolution), recovers the
//! Poisson kernel and its parabolic dilations, and solves the half-space
//! Dirichlet problem by convolution. Nontangential maximal functions, cone
//! limits and the Hardy-Littlewood maximal operator round out the toolkit
//! used by the verification suites.
//!
//! Entry points:
//! - [`system::EllipticSystem`] and [`system::EllipticSystem::classify`]
//! - [`fundamental::FundamentalEvaluator`]
//! - [`halfspace::HalfSpaceKernels`] and [`halfspace::PoissonKernel`]
//! - [`dirichlet::solve`]
//! - [`nontangential`] for cones and maximal functions
//! - [`verify`] for the property suites behind `halfspace-green verify`

pub mod cli;
pub mod config;
pub mod dirichlet;
pub mod error;
pub mod fundamental;
pub mod halfspace;
pub mod linalg;
pub mod nontangential;
pub mod quad;
pub mod system;
pub mod verify;

pub use config::QuadratureConfig;
pub use error::{Error, Result};
pub use linalg::CMat;
pub use system::{Builtin, EllipticSystem, EllipticityReport};
