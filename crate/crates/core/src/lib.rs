//! Spectral tools for the linearized and nonlinear two-fluid Euler-Poisson
//! system around a constant equilibrium: Littlewood-Paley analysis, symbol
//! analysis of the linear operator, a pseudo-spectral solver and a decay-rate
//! laboratory.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod decay_lab;
pub mod error;
pub mod fields;
pub mod grid;
pub mod lp_besov;
pub mod model;
pub mod scalar;
pub mod solver;
pub mod symbolics;
pub mod tolerances;

pub use error::{ConfigError, LabError, ModelError, SolverError};
pub use grid::Grid;
pub use lp_besov::{BesovSpec, DyadicPartition, SumIndex};
pub use model::{PerturbationState, PressureLaw, SpectralState};
pub use scalar::Scalar;
pub use tolerances::Tolerances;

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type PressureLaw64 = PressureLaw<f64>;
pub type PressureLaw32 = PressureLaw<f32>;
pub type DyadicPartition64 = DyadicPartition<f64>;
pub type SpectralVector64 = symbolics::SpectralVector<f64>;
pub type SpectralVector32 = symbolics::SpectralVector<f32>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type SolverConfig32 = solver::SolverConfig<f32>;
pub type Trajectory64 = solver::Trajectory<f64>;
