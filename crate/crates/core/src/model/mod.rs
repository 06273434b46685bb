//! Domain types: molecules, ensembles, cavity parameters and units.

mod cavity_config;
pub mod ensemble;
pub mod molecule;
pub mod units;
pub mod xyz;

pub use cavity_config::{rescale_lambda, CavityConfig};
pub use ensemble::{build_ensemble, EnsembleGeometry, OrientationPattern, Placement};
pub use molecule::{charge_center, hydrogen_fluoride, nuclear_dipole, Atom, Molecule, HF_BOND_LENGTH};
pub use units::{convert_units, lambda_from_field, mode_volume, Unit};
