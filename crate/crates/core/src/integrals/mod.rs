//! Contracted Cartesian Gaussian integrals (McMurchie-Davidson).

pub mod basis;
pub mod boys;
pub mod eri;
pub mod hermite;
pub mod one_electron;

use nalgebra::{DMatrix, Vector3};

pub use basis::{cartesian_components, parse_basis, BasisLibrary, BasisShell, ShellTemplate};
pub use eri::EriTensor;
pub use one_electron::{lambda_dipole_matrix, lambda_quadrupole_matrix, multipole_matrices};

use crate::error::{Error, Result};
use crate::model::Molecule;

/// Smallest overlap eigenvalue accepted before the basis is declared
/// linearly dependent.
pub const OVERLAP_EIGEN_CUTOFF: f64 = 1e-10;

/// Every integral a closed-shell cavity calculation needs for one molecule.
#[derive(Debug, Clone)]
pub struct IntegralSet {
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub eri: EriTensor,
    /// `<m| r_a - O_a |n>` about `origin`.
    pub dipole: [DMatrix<f64>; 3],
    /// Second moments in `xx, xy, xz, yy, yz, zz` order about `origin`.
    pub second_moment: [DMatrix<f64>; 6],
    pub origin: Vector3<f64>,
    pub nuclear_repulsion: f64,
}

impl IntegralSet {
    /// Integrals for `molecule` with multipoles about its gauge origin.
    pub fn compute(molecule: &Molecule, shells: &[BasisShell]) -> Result<Self> {
        if shells.is_empty() {
            return Err(Error::InvalidInput("no basis shells".into()));
        }
        let (s, t) = one_electron::overlap_kinetic(shells);
        check_conditioning(&s)?;
        let v = one_electron::nuclear_attraction_for(shells, molecule);
        let origin = molecule.gauge_origin();
        let (dipole, second_moment) = multipole_matrices(shells, &origin);
        let eri = EriTensor::compute(shells)?;
        Ok(IntegralSet {
            s,
            t,
            v,
            eri,
            dipole,
            second_moment,
            origin,
            nuclear_repulsion: molecule.nuclear_repulsion(),
        })
    }

    pub fn n_basis(&self) -> usize {
        self.s.nrows()
    }

    pub fn hcore(&self) -> DMatrix<f64> {
        &self.t + &self.v
    }

    pub fn lambda_dipole(&self, lambda: &Vector3<f64>) -> DMatrix<f64> {
        lambda_dipole_matrix(&self.dipole, lambda)
    }

    pub fn lambda_quadrupole(&self, lambda: &Vector3<f64>) -> DMatrix<f64> {
        lambda_quadrupole_matrix(&self.second_moment, lambda)
    }
}

/// Errors if the smallest eigenvalue of `s` is below [`OVERLAP_EIGEN_CUTOFF`].
pub fn check_conditioning(s: &DMatrix<f64>) -> Result<f64> {
    let min = s.clone().symmetric_eigenvalues().min();
    if min < OVERLAP_EIGEN_CUTOFF {
        return Err(Error::Conditioning(min));
    }
    Ok(min)
}

/// Molecule, placed basis and integrals bundled together.
#[derive(Debug, Clone)]
pub struct MolecularSystem {
    pub molecule: Molecule,
    pub shells: Vec<BasisShell>,
    pub integrals: IntegralSet,
}

impl MolecularSystem {
    pub fn new(molecule: Molecule, basis: &BasisLibrary) -> Result<Self> {
        let shells = basis.shells_for(&molecule)?;
        let integrals = IntegralSet::compute(&molecule, &shells)?;
        Ok(MolecularSystem {
            molecule,
            shells,
            integrals,
        })
    }

    pub fn n_electrons(&self) -> usize {
        self.molecule.n_electrons()
    }
}
