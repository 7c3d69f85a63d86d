//! Nonlinear diffusion with Bernoulli time factors.
//!
//! The crate solves `dv/dt = lap(v^alpha) + mu(t) v` on rectangular lattices
//! with zero Dirichlet data, builds the separable solutions
//! `v(x,t) = S(t) u^{1/alpha}(x)` from the closed-form time factor `S` and the
//! positive solution `u` of the sublinear elliptic problem
//! `-lap(u) = u^{1/alpha}`, and verifies the resulting two-sided barriers
//! numerically. The same stepping kernel drives an image-denoising pipeline
//! (absorption sign, per-channel diffusion) benchmarked against a
//! Perona-Malik baseline.
//!
//! Modules:
//! - [`grid`]: lattice fields, five-point Laplacians, CSV serialization
//! - [`bernoulli`]: growth rates `mu(t)`, the closed-form factor `S(t)`,
//!   and an RK4 oracle for it
//! - [`elliptic`]: Poisson/torsion/eigenpair solves and the monotone
//!   iteration for `-lap(u) = u^{1/alpha}`
//! - [`parabolic`]: explicit time stepping, comparison and sandwich checks,
//!   and the linearized monotone scheme
//! - [`denoise`]: noise injection, channel diffusion, postprocessing, and
//!   MSE/PSNR/SSIM metrics

pub mod bernoulli;
pub mod denoise;
pub mod elliptic;
pub mod error;
pub mod grid;
mod num;
pub mod parabolic;

pub use error::{Error, Result};
