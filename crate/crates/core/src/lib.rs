//! Confidence intervals for `θ = aᵀβ` in a Gaussian linear regression that
//! utilize uncertain prior information `τ = cᵀβ - t = 0`.

pub mod cli;
pub mod config;
pub mod optimizer;
pub mod quadrature;
pub mod regression;
pub mod special;
pub mod spline;
