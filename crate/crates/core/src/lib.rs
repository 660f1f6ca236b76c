//! Necklace Markov chains: nearly periodic chains built by threading copies
//! of a small absorbing chain (a bead) around a directed cycle.
//!
//! The crate computes exact stationary laws and `t`-step distributions (by
//! sparse evolution and by counting arguments), the wrapped-Gaussian local
//! limit and its total-variation constant, and several classical bounds for
//! comparison.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod bead;
pub mod bounds;
pub mod combinatorics;
pub mod error;
pub mod io;
pub mod limit;
pub mod linalg;
pub mod necklace;
pub mod scalar;

pub use error::{Error, Result};
pub use necklace::{Pattern, StateId};
pub use scalar::Real;

pub type Bead = bead::BeadSpec<f64>;
pub type BeadAnalysis = bead::BeadAnalysis<f64>;
pub type FirstPassagePmf = bead::FirstPassagePmf<f64>;
pub type Necklace = necklace::NecklaceSpec<f64>;
pub type TransitionOperator = necklace::TransitionOperator<f64>;
pub type Distribution = necklace::Distribution<f64>;
pub type HigherOrder<'a> = combinatorics::HigherOrder<'a, f64>;
pub type Theta = limit::Theta<f64>;
pub type LltPrediction = limit::LltPrediction<f64>;
pub type Matrix = linalg::DenseMatrix<f64>;
pub type ReversibleOperator = bounds::ReversibleOperator<f64>;
pub type GrowthCertificate = bounds::GrowthCertificate<f64>;
pub type NashConstants = bounds::NashConstants<f64>;
pub type Section4 = bounds::Section4<f64>;
