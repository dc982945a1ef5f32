//! Numerical potential theory for the stationary Stokes and Navier-Stokes
//! systems in the half space `R^n_+` and the whole space `R^n`.
//!
//! The crate evaluates the classical kernels in closed form (fundamental
//! solutions, the half-space Poisson tensor, and the Green tensor with zero
//! boundary values), solves the linear system by its representation formula
//! and the small-data nonlinear system by Picard iteration, and ships a
//! verification layer that certifies pointwise kernel bounds, far-field
//! profiles and decay rates by deterministic sampling and quadrature.
//!
//! Module map:
//! - [`kernels`]: closed-form tensors and their algorithmic derivatives,
//! - [`quadrature`]: deterministic adaptive integration with singularity
//!   patches over half/whole space, the boundary plane, spheres and rays,
//! - [`stokes`], [`nse`], [`freespace`]: solvers and asymptotic coefficients,
//! - [`selfsim`]: the axisymmetric self-similar profile scan,
//! - [`verify`]: invariant suites, bound certificates and decay fits.

pub mod dim;
pub mod dual;
pub mod error;
pub mod force;
pub mod freespace;
pub mod geom;
pub mod kernels;
pub mod nse;
pub mod quadrature;
pub mod selfsim;
pub mod stokes;
pub mod verify;

pub use dim::Dimension;
pub use error::Error;
