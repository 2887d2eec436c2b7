//! Numerical study of the indefinite convection-diffusion operator
//!
//! ```text
//! (L y)(x) = d/dx ( (1 - a cos x) y(x) + b sin x y'(x) ),   x in [-pi, pi], periodic
//! ```
//!
//! built around its factorization `L = S M` into the periodic derivative `S`
//! and the first-order operator `M y = (1 - a cos x) y + b sin x y'`.
//! The crate provides operator assembly on the truncated Fourier basis,
//! a closed-form inverse of `M` with singular-endpoint quadrature, block
//! resolvent construction, Hilbert-Schmidt diagnostics, spectrum computation,
//! and spectral time evolution of `y_t + L y = 0`.

pub mod error;
pub mod evolution;
pub mod factorization;
pub mod fourier;
pub mod grid;
pub mod inverse;
pub mod linalg;
pub mod operators;
pub mod params;
pub mod quadrature;
pub mod scalar;
pub mod spectrum;

pub use error::CoreError;
pub use fourier::FourierVector;
pub use grid::GridFunction;
pub use operators::{BandedOperatorMatrix, OperatorKind};
pub use params::OperatorParams;
pub use scalar::Real;

/// Double precision aliases; all stated tolerance contracts assume these.
pub type Params64 = params::OperatorParams<f64>;
pub type Fourier64 = fourier::FourierVector<f64>;
pub type Grid64 = grid::GridFunction<f64>;
pub type Matrix64 = operators::BandedOperatorMatrix<f64>;

/// Single precision aliases, for callers that can live with reduced accuracy.
pub type Params32 = params::OperatorParams<f32>;
pub type Fourier32 = fourier::FourierVector<f32>;
pub type Grid32 = grid::GridFunction<f32>;
pub type Matrix32 = operators::BandedOperatorMatrix<f32>;
