//! Standard and covariant quantum Fisher information for states evolving
//! under parameterized pseudo-Hermitian Hamiltonians.
//!
//! The crate is layered bottom-up:
//!
//! - [`densela`]: dense complex eigensolvers, matrix exponential, inverses.
//! - [`pseudoherm`]: biorthogonal systems, the metric η = S†S and the
//!   Hermitian counterpart S·H·S⁻¹.
//! - [`geometry`]: finite differences in θ, the connection ½η⁻¹∂η, covariant
//!   derivatives and eigenbasis tracking.
//! - [`qfi`]: SQFI, CQFI, the metric-rotation decomposition, bounds from the
//!   generator h(θ) and optimal probes.
//! - [`models`]: the nonreciprocal and PT-symmetric two-level families, a
//!   polynomial-in-θ model and a synthetic rotating-metric family, all
//!   behind the [`system::ParameterizedSystem`] trait.

pub mod densela;
pub mod error;
pub mod geometry;
pub mod models;
pub mod pseudoherm;
pub mod qfi;
pub mod system;

pub use densela::Operator;
pub use error::{Error, Result};
