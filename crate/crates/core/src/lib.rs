//! Forward-backward-forward solvers for bilevel equilibrium problems.
//!
//! A bilevel equilibrium problem asks for a point of the lower-level
//! equilibrium solution set `S_f` that also solves an upper-level equilibrium
//! problem for a bifunction `g` over `S_f`. The lower level is always of the
//! form `f(x, y) = <Bx, y - x>` for a monotone Lipschitz operator `B`.
//!
//! The crate ships:
//! - the discrete forward-backward-forward iteration with penalty schedules
//!   and per-iteration Fejér diagnostics ([`fbf`]),
//! - the matching continuous-time dynamical system with fixed-step
//!   integrators ([`dynamics`]),
//! - the bilinear saddle-point application with closed-form
//!   summability-condition terms ([`saddle`]),
//! - brute-force grid oracles for desk-scale verification ([`oracle`]).

pub mod bifunctions;
pub mod dynamics;
pub mod error;
pub mod fbf;
pub mod geometry;
pub mod operators;
pub mod oracle;
pub mod saddle;
pub mod schedule;

pub use bifunctions::{EquilibriumBifunction, PairedOperatorBifunction, ProxBifunction};
pub use error::{Result, SolverError};
pub use fbf::{BepInstance, IterationTrace, StoppingRule};
pub use geometry::{BoxSet, DenseMatrix, Point};
pub use operators::{AffineMap, MonotoneMap};
pub use saddle::SaddleProblem;
pub use schedule::Schedule;
