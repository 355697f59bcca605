//! Quantum emitters coupled to anisotropic two-band photonic lattices and
//! subwavelength dipole arrays.

pub mod atomarray;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod lattice;
pub mod reduce;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{LatticeModel, Variant};
pub use spectral::{BandGrid, Sublattice, ZeroModes};
