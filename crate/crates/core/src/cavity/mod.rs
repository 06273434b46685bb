//! Cavity Born-Oppenheimer Hartree-Fock: coupling operators, energy
//! decomposition and the photon-displacement optimizer.

pub mod engine;
pub mod operators;
pub mod report;

use nalgebra::Vector3;

pub use engine::{
    energy_at_q, golden_section, solve_coupled, CavitySettings, CoupledSolution, InterMolecularCoupling, MacroRecord, Subsystem,
    SubsystemState, UpdateOrder,
};
pub use operators::{
    CavityOperators, ConstantEnergy, DseCoulomb, DseElectronNuclear, DseExchange, DseOneElectron, LinearCoupling, MeanField,
};
pub use report::{
    combine_terms, displacement_energy, dse_nuclear_scalar, energy_report, transverse_field_residual, EnergyReport, MoleculeTerms,
};

use crate::error::Result;
use crate::integrals::MolecularSystem;
use crate::model::CavityConfig;
use crate::scf::ScfResult;

/// Optimal photon displacement for one molecule, with the converged SCF.
#[derive(Debug, Clone)]
pub struct QcSolution {
    pub q: f64,
    pub scf: ScfResult,
    pub report: EnergyReport,
    /// Field-free RHF energy.
    pub field_free_energy: f64,
    pub macro_iterations: usize,
    pub trace: Vec<MacroRecord>,
    pub used_fallback: bool,
}

impl QcSolution {
    pub fn delta_e(&self) -> f64 {
        self.report.e_cbo - self.field_free_energy
    }
}

/// Single-molecule optimization of `q` under `cavity` (coupling `lambda0 e`).
pub fn optimize_qc(system: &MolecularSystem, cavity: &CavityConfig, settings: &CavitySettings) -> Result<QcSolution> {
    optimize_qc_with(system, cavity.coupling_vector(1)?, cavity.omega, settings)
}

pub fn optimize_qc_with(system: &MolecularSystem, lambda: Vector3<f64>, omega: f64, settings: &CavitySettings) -> Result<QcSolution> {
    let sub = Subsystem {
        system,
        multiplicity: 1,
        members: vec![0],
    };
    let mut sol = solve_coupled(&[sub], lambda, omega, settings)?;
    let state = sol.subsystems.remove(0);
    Ok(QcSolution {
        q: sol.q,
        scf: state.scf,
        report: sol.report,
        field_free_energy: state.field_free_energy,
        macro_iterations: sol.macro_iterations,
        trace: sol.trace,
        used_fallback: sol.used_fallback,
    })
}
