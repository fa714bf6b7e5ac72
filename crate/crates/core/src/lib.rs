//! Numerical laboratory for the nonlocal Chafee-Infante problem
//!
//! ```text
//! u_t - a(||u||^2_{H_0^1}) u_xx = lambda f(u) + h,   u(t, 0) = u(t, 1) = 0.
//! ```
//!
//! * [`model`]: reaction term, diffusion coefficient, sampled assumption checks.
//! * [`timemap`]: equilibria of the frozen-coefficient problem through time maps.
//! * [`equilibria`]: nonlocal fixed points `d = g(d)`, enumeration, shooting oracle,
//!   bifurcation sweeps.
//! * [`dynamics`]: spectral Galerkin integration, Lyapunov functional, lap number,
//!   omega-limit classification.
//! * [`stability`]: linearization spectra, unstable-manifold probes and the
//!   connection graph with its Morse-order check.

pub mod dynamics;
pub mod equilibria;
pub mod model;
pub mod quadrature;
pub mod stability;
pub mod timemap;

mod roots;

mod error;

pub use error::{Error, Result};
