//! Nonlocal energies of polygons: evaluation, vertex derivatives,
//! area-constrained optimization and constrained Hessian spectra.

pub mod derivatives;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod optimize;
pub mod quadrature;
pub mod spectral;
pub mod sum;

pub use error::{Error, Result};
pub use geometry::{Point, Polygon, Triangle};
pub use kernels::Kernel;
