//! Restricted Hartree-Fock with cavity Born-Oppenheimer light-matter coupling
//! for single molecules and dilute molecular ensembles.

pub mod cavity;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod integrals;
pub mod model;
pub mod scf;

pub use error::{Error, Result};
