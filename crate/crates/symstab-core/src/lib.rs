//! Numerical machinery for the Gaussian noise stability of symmetric sets.
//!
//! The crate revolves around a handful of objects:
//!
//! * Gaussian measures of centered balls in every dimension, with radius
//!   solvers, sphere volumes and Wallis integrals ([`gaussian`]);
//! * Hermite polynomials in the probabilists' generating-function
//!   normalization `e^{λx−λ²/2} = Σ λ^ℓ h_ℓ(x)`, so that `{√(ℓ!) h_ℓ}` is an
//!   orthonormal basis of `L²(γ)` ([`hermite`]);
//! * a family of origin-symmetric sets (balls, strips, ellipses, interval
//!   unions, star-shaped 2D regions) together with their Hermite-Fourier
//!   coefficient tables ([`sets`]);
//! * the smoothing operator `T_ρ f(x) = E f(ρx + √(1−ρ²) Z)`, noise
//!   stability by spectral series and Monte Carlo, and the quadratic
//!   functional `F(A) = Σ_i (∫_A (1−x_i²) dγ)²` ([`stability`]);
//! * first and second variations of measure, of `F`, and of noise stability
//!   along explicit flows, with the `r² = n+2` phase transition
//!   ([`variation`]).
//!
//! All operations are deterministic; Monte Carlo estimators are reproducible
//! given a seed, independent of thread count.

pub mod error;
pub mod gaussian;
pub mod hermite;
pub mod quad;
pub mod sets;
pub mod special;
pub mod stability;
pub mod variation;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
