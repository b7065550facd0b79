//! Quantum emitters coupled to a dissipative Su-Schrieffer-Heeger photonic
//! lattice: spectra, topological invariants, bound and dressed states,
//! and non-unitary single-excitation dynamics.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod boundstates;
pub mod disorder;
pub mod dressed;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{BasisLabel, Boundary, Sublattice};
pub use scalar::{Real, C};

pub type Complex64 = C<f64>;
pub type Bath = model::BathParams<f64>;
pub type Emitter = model::EmitterAttachment<f64>;
pub type System = model::SystemMatrix<f64>;
